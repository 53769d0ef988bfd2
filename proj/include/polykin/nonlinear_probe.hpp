#pragma once

// Quadratic collision terms for the perturbation F = M + sqrt(M) f and
// probes of the pointwise estimates they satisfy.
//
//   Gamma+(f, f) = M^{-1/2} Q+(sqrt(M) f, sqrt(M) f)       (Monte Carlo)
//   Gamma-(f, f) = f c_delta int B sqrt(M*) f*              (quadrature)
//   R(f)         = nu + c_delta int B sqrt(M*) f*           (quadrature)
//
// Probe constants are empirical fixtures; the ratios are reported, not
// compared against any closed-form constant.

#include <algorithm>
#include <array>
#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

#include "polykin/functionals.hpp"
#include "polykin/linearized.hpp"

namespace polykin {

/// Monte Carlo estimate of Gamma+(f, f)(s).
template <class Fn, PhaseProposal Proposal = MixtureProposal>
McEstimate apply_gamma_plus(const GasParams& params, const Fn& f, const MicroState& s, const McConfig& cfg,
                            const Proposal& proposal = {}) {
    params.validate();
    const detail::GainSampler sampler(params, s);
    return mc_mean(cfg, [&, angles = AngleSampler(params)](Rng& rng) mutable {
        const detail::GainDraw g = sampler.draw(rng, angles, proposal);
        if (g.rate == 0.0) return 0.0;
        const double fa = f(g.post.a);
        if (fa == 0.0) return 0.0;
        const double fb = f(g.post.b);
        if (fb == 0.0) return 0.0;
        return g.rate * sampler.quadratic_factor(g) * fa * fb;
    });
}

/// c_delta * integral of B(s, .) sqrt(M(.)) f(.), shared by Gamma- and R(f).
template <class Fn>
double loss_moment(const PhaseQuadrature& q, const Fn& f, const MicroState& s) {
    const auto sqrt_m = q.sqrt_maxwellian();
    const double val = q.collision_integral(s, [&](std::size_t idx, const MicroState& x) {
        const double sm = sqrt_m[idx];
        return sm == 0.0 ? 0.0 : sm * detail::node_value(f, q.grid(), idx, x);
    });
    if (!std::isfinite(val)) throw NumericalError("loss integral is not finite");
    return val;
}

/// Gamma-(f, f)(s) = f(s) c_delta int B(s, .) sqrt(M) f.
template <class Fn>
double apply_gamma_minus(const PhaseQuadrature& q, const Fn& f, const MicroState& s) {
    const double fs = f(s);
    if (fs == 0.0) return 0.0;
    return fs * loss_moment(q, f, s);
}

/// R(f)(s) = nu(s) + c_delta int B(s, .) sqrt(M) f. For F = M + sqrt(M) f
/// this is the loss rate c_delta int B F*.
template <class Fn>
double r_operator(const PhaseQuadrature& q, const Fn& f, const MicroState& s) {
    return collision_frequency(q, s) + loss_moment(q, f, s);
}

/// Monte Carlo estimates of the weak form integral of Q(F, F) phi for the
/// collision invariants phi = 1, v_1, v_2, v_3, |v|^2/2 + I.
///
/// Pairs (s, s*) are drawn from the proposal, angles exactly, and each draw
/// contributes c_delta B (F' F'* J - F F*) (phi(s) + phi(s*)) / 2 over the
/// proposal densities, with J = (I I* / (I' I'*))^{delta/2-1}. The gain and
/// loss halves cancel only in expectation, so a nonzero mean flags an
/// inconsistent collision measure.
template <class Fn, PhaseProposal Proposal = MixtureProposal>
std::array<McEstimate, 5> weak_collision_moments(const GasParams& params, const Fn& f_density,
                                                 const McConfig& cfg, const Proposal& proposal = {}) {
    params.validate();
    const double c = collision_rate_factor(params);
    const double a = params.internal_power();
    auto invariants = [](const MicroState& s) {
        return std::array<double, 5>{1.0, s.v.x, s.v.y, s.v.z, s.energy()};
    };
    return mc_mean_multi<5>(cfg, [&, angles = AngleSampler(params)](Rng& rng) mutable {
        const ProposalDraw d1 = proposal.sample(rng);
        const ProposalDraw d2 = proposal.sample(rng);
        const PairState pre{d1.state, d2.state};
        const PairState post = apply_collision(pre, angles(rng));
        double gain = f_density(post.a) * f_density(post.b);
        if (gain != 0.0 && a != 0.0) {
            gain *= std::exp(a * (std::log(pre.a.i_energy) + std::log(pre.b.i_energy) -
                                  std::log(post.a.i_energy) - std::log(post.b.i_energy)));
        }
        const double loss = f_density(pre.a) * f_density(pre.b);
        const double rate = c * transition_b(params, pre) / (d1.density * d2.density);
        const auto pa = invariants(pre.a);
        const auto pb = invariants(pre.b);
        std::array<double, 5> out{};
        for (std::size_t k = 0; k < 5; ++k) out[k] = rate * (gain - loss) * 0.5 * (pa[k] + pb[k]);
        return out;
    });
}

struct ProbeRow {
    MicroState state;
    double ratio = 0.0;
    double std_error = 0.0;
};

struct ProbeResult {
    std::vector<ProbeRow> rows;
    double sup = 0.0;
};

namespace detail {
inline void finish(ProbeResult& r) {
    r.sup = 0.0;
    for (const auto& row : r.rows) r.sup = std::max(r.sup, row.ratio);
}
}  // namespace detail

/// Gain estimate ratio
///
///   |w(s) Gamma+(f, f)(s)| (1 + |v| + I^{1/4})
///   ---------------------------------------------------------------------
///   ||w f||_inf * ( int (1 + |v*| + sqrt I*)^{8 - 2 beta} |w f|^2 )^{1/2}
///
/// per scan state, and its supremum. Both numerator and denominator are
/// quadratic in f, so the ratio is invariant under f -> c f.
inline ProbeResult gain_estimate_ratio(const PhaseQuadrature& q, const GridFunction& f,
                                       std::span<const MicroState> scan, const McConfig& cfg) {
    const GasParams& params = q.params();
    const double sup_norm = weighted_sup_norm(f, params);
    // (1 + |v| + sqrt I)^{8 - 2 beta} w^2 = (1 + |v| + sqrt I)^8
    const double l2 = f.grid().integrate_indexed([&](std::size_t idx, const MicroState& x) {
        const double v = f.at(idx);
        if (v == 0.0) return 0.0;
        const double base = 1.0 + norm(x.v) + std::sqrt(x.i_energy);
        const double b2 = base * base;
        const double b4 = b2 * b2;
        return b4 * b4 * v * v;
    });
    const double denom = sup_norm * std::sqrt(l2);
    if (!(denom > 0.0)) throw std::invalid_argument("gain estimate ratio needs a nonzero weighted norm");

    ProbeResult out;
    for (std::size_t k = 0; k < scan.size(); ++k) {
        const MicroState& s = scan[k];
        const McEstimate g = apply_gamma_plus(params, f, s, detail::derive(cfg, k));
        const double scale = weight(params, s) * (1.0 + norm(s.v) + std::pow(s.i_energy, 0.25)) / denom;
        out.rows.push_back({s, std::abs(g.mean) * scale, g.std_error * scale});
    }
    detail::finish(out);
    return out;
}

/// Nonlinear bound ratio |w (Gamma+ - Gamma-)(f, f)(s)| / (nu(s) ||w f||_inf^2).
inline ProbeResult nonlinear_nu_ratio(const PhaseQuadrature& q, const GridFunction& f,
                                      std::span<const MicroState> scan, const McConfig& cfg) {
    const GasParams& params = q.params();
    const double sup_norm = weighted_sup_norm(f, params);
    if (!(sup_norm > 0.0)) throw std::invalid_argument("nonlinear ratio needs a nonzero weighted norm");
    ProbeResult out;
    for (std::size_t k = 0; k < scan.size(); ++k) {
        const MicroState& s = scan[k];
        const McEstimate gp = apply_gamma_plus(params, f, s, detail::derive(cfg, k));
        const double gm = apply_gamma_minus(q, f, s);
        const double scale = weight(params, s) / (collision_frequency(q, s) * sup_norm * sup_norm);
        out.rows.push_back({s, std::abs(gp.mean - gm) * scale, gp.std_error * scale});
    }
    detail::finish(out);
    return out;
}

}  // namespace polykin
