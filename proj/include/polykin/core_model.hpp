#pragma once

// Physical model of a polyatomic gas with continuous internal energy:
// phase points (v, I), the global Maxwellian, the velocity weight and the
// total-energy transition function. Everything is in thermal units.

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "polykin/vec3.hpp"

namespace polykin {

/// Raised when a numerical evaluation produces a non-finite value or an
/// integration cannot be carried out.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Model constants.
///   delta : internal degrees of freedom, >= 2
///   alpha : potential exponent in [0, 2)
///   c_b   : transition-function constant, > 0 (only rescales time)
///   beta  : exponent of the polynomial weight, > 7
struct GasParams {
    double delta = 2.0;
    double alpha = 0.0;
    double c_b = 1.0;
    double beta = 8.0;

    /// Exponent of I in the Maxwellian, delta/2 - 1.
    [[nodiscard]] double internal_power() const noexcept { return 0.5 * delta - 1.0; }

    /// Exponent of the total pair energy in B, (2 - alpha)/2.
    [[nodiscard]] double energy_power() const noexcept { return 0.5 * (2.0 - alpha); }

    void validate() const {
        if (!(delta >= 2.0) || !std::isfinite(delta))
            throw std::invalid_argument("gas.delta must be >= 2, got " + std::to_string(delta));
        if (!(alpha >= 0.0 && alpha < 2.0))
            throw std::invalid_argument("gas.alpha must lie in [0, 2), got " + std::to_string(alpha));
        if (!(c_b > 0.0) || !std::isfinite(c_b))
            throw std::invalid_argument("gas.c_b must be > 0, got " + std::to_string(c_b));
        if (!(beta > 7.0) || !std::isfinite(beta))
            throw std::invalid_argument("gas.beta must be > 7, got " + std::to_string(beta));
    }
};

/// One-particle phase point: velocity and internal energy.
struct MicroState {
    Vec3 v;
    double i_energy = 0.0;

    [[nodiscard]] bool valid() const noexcept {
        return is_finite(v) && std::isfinite(i_energy) && i_energy >= 0.0;
    }
    /// |v|^2/2 + I
    [[nodiscard]] double energy() const noexcept { return 0.5 * norm2(v) + i_energy; }

    friend bool operator==(const MicroState&, const MicroState&) = default;
};

/// Two-particle phase point (v, I), (v*, I*).
struct PairState {
    MicroState a;
    MicroState b;

    [[nodiscard]] bool valid() const noexcept { return a.valid() && b.valid(); }
};

/// Total pair energy in the centre-of-mass frame, |v - v*|^2/4 + I + I*.
inline double total_energy(const PairState& p) noexcept {
    return 0.25 * norm2(p.a.v - p.b.v) + p.a.i_energy + p.b.i_energy;
}

namespace detail {

/// x^p with fast paths for the exponents that occur for common alpha.
inline double energy_pow(double x, double p) noexcept {
    if (p == 1.0) return x;
    if (p == 0.5) return std::sqrt(x);
    if (p == 0.0) return 1.0;
    return std::pow(x, p);
}

}  // namespace detail

/// B = C (|v - v*|^2/4 + I + I*)^{(2 - alpha)/2}
inline double transition_b(const GasParams& params, double pair_energy) noexcept {
    return params.c_b * detail::energy_pow(pair_energy, params.energy_power());
}

inline double transition_b(const GasParams& params, const PairState& p) noexcept {
    return transition_b(params, total_energy(p));
}

/// log of the Maxwellian normalisation (2 pi)^{3/2} Gamma(delta/2).
inline double log_maxwellian_norm(const GasParams& params) noexcept {
    return 1.5 * std::log(2.0 * std::numbers::pi) + std::lgamma(0.5 * params.delta);
}

/// log M without the I^{delta/2-1} factor: -|v|^2/2 - I - log Z.
inline double log_reduced_maxwellian(const GasParams& params, const MicroState& s) noexcept {
    return -s.energy() - log_maxwellian_norm(params);
}

/// log M(v, I). Returns -inf where M vanishes (I = 0 with delta > 2).
inline double log_maxwellian(const GasParams& params, const MicroState& s) noexcept {
    const double a = params.internal_power();
    double log_m = log_reduced_maxwellian(params, s);
    if (a != 0.0) log_m += a * std::log(s.i_energy);
    return log_m;
}

/// Global Maxwellian M(v, I) = I^{delta/2-1} exp(-|v|^2/2 - I) / ((2 pi)^{3/2} Gamma(delta/2)).
inline double maxwellian(const GasParams& params, const MicroState& s) noexcept {
    return std::exp(log_maxwellian(params, s));
}

/// Equilibrium at temperature T, normalised to unit mass:
/// I^{delta/2-1} exp(-|v|^2/(2T) - I/T) / ((2 pi T)^{3/2} Gamma(delta/2) T^{delta/2}).
/// T = 1 recovers maxwellian().
inline double maxwellian_at(const GasParams& params, double temperature, const MicroState& s) {
    if (!(temperature > 0.0)) throw std::invalid_argument("temperature must be positive");
    const double a = params.internal_power();
    double log_m = -s.energy() / temperature - log_maxwellian_norm(params) -
                   (1.5 + 0.5 * params.delta) * std::log(temperature);
    if (a != 0.0) log_m += a * std::log(s.i_energy);
    return std::exp(log_m);
}

/// Polynomial weight w(v, I) = (1 + |v| + sqrt(I))^beta.
inline double weight(const GasParams& params, const MicroState& s) noexcept {
    return std::pow(1.0 + norm(s.v) + std::sqrt(s.i_energy), params.beta);
}

/// (1 + |v| + sqrt I)^{2 - alpha}, the growth profile of the collision frequency.
inline double nu_growth(const GasParams& params, const MicroState& s) noexcept {
    return detail::energy_pow(1.0 + norm(s.v) + std::sqrt(s.i_energy), 2.0 - params.alpha);
}

}  // namespace polykin
