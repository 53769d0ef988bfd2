#pragma once

// Borgnakke-Larsen binary collision: post-collision transform and exact
// sampling of its parameters (omega, R, r) from the normalised measure
//
//   (r(1-r))^{delta/2-1} (1-R)^{delta-1} R^{1/2} d omega dR dr
//
// whose total mass is collision_rate_factor().

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "polykin/core_model.hpp"
#include "polykin/random.hpp"

namespace polykin {

/// Scattering direction omega (unit vector), kinetic fraction R of the pair
/// energy, and split r of the remaining internal energy.
struct CollisionAngles {
    Vec3 omega{0.0, 0.0, 1.0};
    double big_r = 0.5;
    double small_r = 0.5;

    [[nodiscard]] bool valid() const noexcept {
        return std::abs(norm(omega) - 1.0) <= 1e-12 && big_r >= 0.0 && big_r <= 1.0 &&
               small_r >= 0.0 && small_r <= 1.0;
    }
};

/// Post-collision pair. With G = (v + v*)/2 and E = total_energy(p):
///   v' = G + sqrt(R E) omega,   v'* = G - sqrt(R E) omega,
///   I' = r (1 - R) E,           I'* = (1 - r)(1 - R) E.
/// G is formed once and reused so the momentum sum is reproduced to rounding.
inline PairState apply_collision(const PairState& p, const CollisionAngles& c) noexcept {
    const Vec3 g = 0.5 * (p.a.v + p.b.v);
    const double e = total_energy(p);
    const Vec3 half_u = std::sqrt(c.big_r * e) * c.omega;
    const double internal = (1.0 - c.big_r) * e;
    const double i_a = c.small_r * internal;
    PairState out;
    out.a.v = g + half_u;
    out.b.v = g - half_u;
    out.a.i_energy = i_a;
    out.b.i_energy = std::max(0.0, internal - i_a);
    return out;
}

namespace detail {
inline double log_beta_fn(double a, double b) noexcept {
    return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
}
}  // namespace detail

/// c_delta = 4 pi B(delta/2, delta/2) B(3/2, delta), the total mass of the
/// angular / energy-split measure. The pair collision rate is c_delta * B.
inline double collision_rate_factor(const GasParams& params) noexcept {
    const double d = params.delta;
    return 4.0 * std::numbers::pi *
           std::exp(detail::log_beta_fn(0.5 * d, 0.5 * d) + detail::log_beta_fn(1.5, d));
}

/// Exact sampler for CollisionAngles. R ~ Beta(3/2, delta) and
/// r ~ Beta(delta/2, delta/2) through the gamma-ratio construction; omega
/// from a normalised isotropic Gaussian. Holds distribution state, so use
/// one sampler per RNG stream.
class AngleSampler {
public:
    explicit AngleSampler(const GasParams& params)
        : r_kinetic_(1.5), r_internal_(params.delta), s_left_(0.5 * params.delta),
          s_right_(0.5 * params.delta) {}

    CollisionAngles operator()(Rng& rng) {
        CollisionAngles c;
        c.omega = sample_direction(rng);
        c.big_r = beta_draw(r_kinetic_, r_internal_, rng);
        c.small_r = beta_draw(s_left_, s_right_, rng);
        return c;
    }

    Vec3 sample_direction(Rng& rng) {
        for (;;) {
            Vec3 g{normal_(rng), normal_(rng), normal_(rng)};
            const double n = norm(g);
            if (n > 1e-12) return (1.0 / n) * g;
        }
    }

private:
    using Gamma = std::gamma_distribution<double>;

    static double beta_draw(Gamma& x, Gamma& y, Rng& rng) {
        for (;;) {
            const double gx = x(rng);
            const double gy = y(rng);
            const double s = gx + gy;
            if (s > 0.0) return gx / s;
        }
    }

    Gamma r_kinetic_;
    Gamma r_internal_;
    Gamma s_left_;
    Gamma s_right_;
    std::normal_distribution<double> normal_{0.0, 1.0};
};

inline CollisionAngles sample_angles(const GasParams& params, Rng& rng) {
    AngleSampler sampler(params);
    return sampler(rng);
}

}  // namespace polykin
