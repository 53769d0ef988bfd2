#pragma once

// Scalar functionals of phase-space densities: collision frequency,
// conservation moments, relative entropy and its quadratic/linear split,
// weighted sup norm and the Boltzmann H functional.
//
// All grid functionals are evaluated over the truncation of the PhaseGrid.
// With the default truncation (|v_i| <= 12, I <= 40) the neglected
// Maxwellian mass is below 1e-16.

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "polykin/collision_geometry.hpp"
#include "polykin/core_model.hpp"
#include "polykin/quadrature.hpp"

namespace polykin {

/// PhaseGrid bundled with model constants and the Maxwellian tabulated on
/// its nodes. This is the deterministic integrator shared by every
/// quadrature-based operation.
class PhaseQuadrature {
public:
    PhaseQuadrature(const GasParams& params, PhaseGrid grid)
        : params_(params), grid_(std::move(grid)), c_delta_(collision_rate_factor(params)) {
        params_.validate();
        m_.resize(grid_.size());
        sqrt_m_.resize(grid_.size());
        grid_.for_each_node([&](std::size_t idx, const MicroState& s, double) {
            const double lm = log_maxwellian(params_, s);
            m_[idx] = std::exp(lm);
            sqrt_m_[idx] = std::exp(0.5 * lm);
        });
    }

    explicit PhaseQuadrature(const GasParams& params) : PhaseQuadrature(params, PhaseGrid{}) {}

    [[nodiscard]] const GasParams& params() const noexcept { return params_; }
    [[nodiscard]] const PhaseGrid& grid() const noexcept { return grid_; }
    [[nodiscard]] double c_delta() const noexcept { return c_delta_; }
    [[nodiscard]] std::span<const double> maxwellian() const noexcept { return m_; }
    [[nodiscard]] std::span<const double> sqrt_maxwellian() const noexcept { return sqrt_m_; }

    /// c_delta * integral of B(s, .) g(.) over the grid, with g given per node.
    template <class NodeFn>
    double collision_integral(const MicroState& s, NodeFn&& g) const {
        return c_delta_ * grid_.integrate_indexed([&](std::size_t idx, const MicroState& x) {
            const double gx = g(idx, x);
            if (gx == 0.0) return 0.0;
            return transition_b(params_, PairState{s, x}) * gx;
        });
    }

private:
    GasParams params_;
    PhaseGrid grid_;
    double c_delta_;
    std::vector<double> m_;
    std::vector<double> sqrt_m_;
};

/// Mass, momentum and energy of F - M.
struct MomentVector {
    double mass = 0.0;
    Vec3 momentum;
    double energy = 0.0;
};

/// nu(v, I) = c_delta * integral of B(v, v*, I, I*) M(v*, I*) dv* dI*.
inline double collision_frequency(const PhaseQuadrature& q, const MicroState& s) {
    const auto m = q.maxwellian();
    const double nu = q.collision_integral(s, [&](std::size_t idx, const MicroState&) { return m[idx]; });
    if (!std::isfinite(nu)) throw NumericalError("collision frequency is not finite");
    return nu;
}

/// Monte Carlo route to nu, sampling (v*, I*) exactly from M.
inline McEstimate collision_frequency_mc(const GasParams& params, const MicroState& s,
                                         const McConfig& cfg) {
    params.validate();
    const double c = collision_rate_factor(params);
    const double shape = 0.5 * params.delta;
    return mc_mean(cfg, [&](Rng& rng) {
        std::normal_distribution<double> normal(0.0, 1.0);
        std::gamma_distribution<double> gamma(shape, 1.0);
        const MicroState x{{normal(rng), normal(rng), normal(rng)}, gamma(rng)};
        return c * transition_b(params, PairState{s, x});
    });
}

/// nu(v, I) / (1 + |v| + sqrt I)^{2 - alpha}.
inline double nu_equivalence_ratio(const PhaseQuadrature& q, const MicroState& s) {
    return collision_frequency(q, s) / nu_growth(q.params(), s);
}

namespace detail {
inline void require_same_grid(const GridFunction& f, const PhaseQuadrature& q) {
    if (!(f.grid() == q.grid()))
        throw std::invalid_argument("grid function and quadrature use different grids");
}
}  // namespace detail

/// Integral of (F - M) (1, v, |v|^2/2 + I).
inline MomentVector moments(const GridFunction& f, const PhaseQuadrature& q) {
    detail::require_same_grid(f, q);
    const auto m = q.maxwellian();
    const PhaseGrid& g = q.grid();
    auto diff = [&](std::size_t idx) { return f.at(idx) - m[idx]; };
    MomentVector out;
    out.mass = g.integrate_indexed([&](std::size_t idx, const MicroState&) { return diff(idx); });
    out.momentum.x = g.integrate_indexed([&](std::size_t idx, const MicroState& s) { return diff(idx) * s.v.x; });
    out.momentum.y = g.integrate_indexed([&](std::size_t idx, const MicroState& s) { return diff(idx) * s.v.y; });
    out.momentum.z = g.integrate_indexed([&](std::size_t idx, const MicroState& s) { return diff(idx) * s.v.z; });
    out.energy = g.integrate_indexed([&](std::size_t idx, const MicroState& s) { return diff(idx) * s.energy(); });
    return out;
}

/// psi(x) = x ln x - x + 1 with psi(0) = 1. Uses the Taylor series of
/// psi(1 + y) = sum_{k>=2} (-1)^k y^k / (k (k-1)) near x = 1.
inline double psi(double x) noexcept {
    if (x == 0.0) return 1.0;
    const double y = x - 1.0;
    if (std::abs(y) < 1e-2) {
        double term = y * y;
        double sum = 0.0;
        double sign = 1.0;
        for (int k = 2; k <= 10; ++k) {
            sum += sign * term / (k * (k - 1.0));
            term *= y;
            sign = -sign;
        }
        return sum;
    }
    return x * std::log(x) - x + 1.0;
}

/// psi(F/M) M, computed in log form where M underflows.
inline double relative_entropy_density(double f, double m, double log_m) noexcept {
    if (m > 1e-250) return psi(f / m) * m;
    if (f <= 0.0) return m;
    return f * (std::log(f) - log_m) - f + m;
}

/// Relative entropy: integral of psi(F/M) M.
inline double relative_entropy(const GridFunction& f, const PhaseQuadrature& q) {
    detail::require_same_grid(f, q);
    const auto m = q.maxwellian();
    const GasParams& p = q.params();
    return q.grid().integrate_indexed([&](std::size_t idx, const MicroState& s) {
        const double mi = m[idx];
        return relative_entropy_density(f.at(idx), mi, mi > 1e-250 ? 0.0 : log_maxwellian(p, s));
    });
}

/// Quadratic part on {|F - M| <= M} plus linear part on the complement:
/// integral of |F-M|^2/(4M) 1{|F-M| <= M} + |F-M|/4 1{|F-M| > M}.
/// Bounded above by relative_entropy for every F >= 0.
inline double entropy_split_lhs(const GridFunction& f, const PhaseQuadrature& q) {
    detail::require_same_grid(f, q);
    const auto m = q.maxwellian();
    return q.grid().integrate_indexed([&](std::size_t idx, const MicroState&) {
        const double d = std::abs(f.at(idx) - m[idx]);
        const double mi = m[idx];
        if (d <= mi) return mi > 0.0 ? 0.25 * d * d / mi : 0.0;
        return 0.25 * d;
    });
}

/// max over nodes of |w f|.
inline double weighted_sup_norm(const GridFunction& f, const GasParams& params) {
    double best = 0.0;
    const PhaseGrid& g = f.grid();
    for (std::size_t idx = 0; idx < g.size(); ++idx) {
        const double x = f.at(idx);
        if (x == 0.0) continue;
        best = std::max(best, std::abs(weight(params, g.node(idx)) * x));
    }
    return best;
}

/// Integral of F ln F, with 0 ln 0 = 0.
inline double h_functional(const GridFunction& f) {
    return f.grid().integrate_indexed([&](std::size_t idx, const MicroState&) {
        const double x = f.at(idx);
        return x > 0.0 ? x * std::log(x) : 0.0;
    });
}

}  // namespace polykin
