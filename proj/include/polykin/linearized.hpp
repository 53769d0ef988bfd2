#pragma once

// Pieces of the linearised collision operator L f = nu f - K f, K = K2 - K1,
// around the global Maxwellian.
//
//   k1(s, s*) = c_delta B(s, s*) sqrt(M(s) M(s*))        (closed form)
//   K2 f(s)   = M(s)^{-1/2} [Q+(M, sqrt(M) f) + Q+(sqrt(M) f, M)](s)
//
// K2 has no tabulated kernel here; it is applied to test functions by Monte
// Carlo over (v*, I*) and the exact Borgnakke-Larsen parameter measure.
// The gain term carries the Jacobian factor (I I* / (I' I'*))^{delta/2-1}
// of the collision operator, which is what makes Q+(M, M) = Q-(M, M).

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <span>
#include <stdexcept>
#include <type_traits>
#include <vector>

#include "polykin/collision_geometry.hpp"
#include "polykin/core_model.hpp"
#include "polykin/functionals.hpp"
#include "polykin/parallel.hpp"
#include "polykin/quadrature.hpp"
#include "polykin/random.hpp"

namespace polykin {

/// Arguments (v, I) and (v*, I*) of a kernel k(v, v*, I, I*).
struct KernelPoint {
    MicroState s;
    MicroState s_star;
};

/// k1 = c_delta B sqrt(M M*).
inline double kernel_k1(const GasParams& params, const KernelPoint& kp) {
    const double lm = 0.5 * (log_maxwellian(params, kp.s) + log_maxwellian(params, kp.s_star));
    return collision_rate_factor(params) * transition_b(params, PairState{kp.s, kp.s_star}) *
           std::exp(lm);
}

namespace detail {

/// Value of a test function at a quadrature node: tabulated functions on the
/// quadrature grid are read directly, anything else is called.
template <class Phi>
double node_value(const Phi& phi, const PhaseGrid& grid, std::size_t idx, const MicroState& x) {
    if constexpr (std::is_same_v<std::decay_t<Phi>, GridFunction>) {
        if (phi.grid() == grid) return phi.at(idx);
        return phi(x);
    } else {
        return phi(x);
    }
}

inline double safe_log(double x) noexcept {
    return x > 0.0 ? std::log(x) : -std::numeric_limits<double>::infinity();
}

/// One draw of the gain integrand at a fixed point s: (v*, I*) from the
/// proposal, (omega, R, r) exact, and the post-collision pair.
struct GainDraw {
    MicroState x;         // (v*, I*)
    PairState post;       // (v', I'), (v'*, I'*)
    double rate = 0.0;    // c_delta B(s, x) / q(x)
    double log_i_s = 0.0;
    double log_i_x = 0.0;
    double log_i_a = 0.0;  // log I'
    double log_i_b = 0.0;  // log I'*
};

/// Precomputed per-point data for repeated gain draws at a fixed s.
class GainSampler {
public:
    GainSampler(const GasParams& params, const MicroState& s)
        : params_(params), s_(s), c_delta_(collision_rate_factor(params)),
          a_(params.internal_power()), lm_s_(log_reduced_maxwellian(params, s)),
          log_i_s_(safe_log(s.i_energy)) {}

    template <PhaseProposal Proposal>
    GainDraw draw(Rng& rng, AngleSampler& angles, const Proposal& proposal) const {
        const ProposalDraw pd = proposal.sample(rng);
        const CollisionAngles c = angles(rng);
        GainDraw g;
        g.x = pd.state;
        const PairState pre{s_, pd.state};
        g.post = apply_collision(pre, c);
        g.rate = c_delta_ * transition_b(params_, pre) / pd.density;
        if (a_ != 0.0) {
            g.log_i_s = log_i_s_;
            g.log_i_x = safe_log(pd.state.i_energy);
            g.log_i_a = safe_log(g.post.a.i_energy);
            g.log_i_b = safe_log(g.post.b.i_energy);
        }
        return g;
    }

    /// M(v',I') sqrt(M(v'*,I'*)) J / sqrt(M(s)), J = (I I* / (I' I'*))^a.
    /// swap = true exchanges the roles of the two post-collision states.
    [[nodiscard]] double linear_factor(const GainDraw& g, bool swap) const noexcept {
        const MicroState& full = swap ? g.post.b : g.post.a;
        const MicroState& half = swap ? g.post.a : g.post.b;
        double e = log_reduced_maxwellian(params_, full) + 0.5 * log_reduced_maxwellian(params_, half) -
                   0.5 * lm_s_;
        if (a_ != 0.0) {
            const double log_half = swap ? g.log_i_a : g.log_i_b;
            if (!std::isfinite(g.log_i_s) || !std::isfinite(g.log_i_x) || !std::isfinite(log_half))
                return 0.0;
            e += a_ * (0.5 * g.log_i_s + g.log_i_x - 0.5 * log_half);
        }
        return std::exp(e);
    }

    /// sqrt(M(v',I') M(v'*,I'*)) J / sqrt(M(s)).
    [[nodiscard]] double quadratic_factor(const GainDraw& g) const noexcept {
        double e = 0.5 * (log_reduced_maxwellian(params_, g.post.a) +
                          log_reduced_maxwellian(params_, g.post.b) - lm_s_);
        if (a_ != 0.0) {
            if (!std::isfinite(g.log_i_s) || !std::isfinite(g.log_i_x) || !std::isfinite(g.log_i_a) ||
                !std::isfinite(g.log_i_b))
                return 0.0;
            e += a_ * (0.5 * g.log_i_s + g.log_i_x - 0.5 * g.log_i_a - 0.5 * g.log_i_b);
        }
        return std::exp(e);
    }

    [[nodiscard]] const GasParams& params() const noexcept { return params_; }
    [[nodiscard]] const MicroState& point() const noexcept { return s_; }

private:
    GasParams params_;
    MicroState s_;
    double c_delta_;
    double a_;
    double lm_s_;
    double log_i_s_;
};

/// Per-state Monte Carlo configuration derived from a base configuration.
inline McConfig derive(const McConfig& base, std::uint64_t key) {
    McConfig c = base;
    c.seed = splitmix64(base.seed ^ splitmix64(key + 0xA24BAED4963EE407ULL));
    return c;
}

}  // namespace detail

/// (K1 phi)(s) = integral of k1(s, .) phi(.) by grid quadrature.
template <class Phi>
double apply_k1(const PhaseQuadrature& q, const Phi& phi, const MicroState& s) {
    const auto sqrt_m = q.sqrt_maxwellian();
    const double root_ms = std::exp(0.5 * log_maxwellian(q.params(), s));
    if (root_ms == 0.0) return 0.0;
    const double val = root_ms * q.collision_integral(s, [&](std::size_t idx, const MicroState& x) {
        const double sm = sqrt_m[idx];
        return sm == 0.0 ? 0.0 : sm * detail::node_value(phi, q.grid(), idx, x);
    });
    if (!std::isfinite(val)) throw NumericalError("K1 application is not finite");
    return val;
}

/// Monte Carlo estimate of (K2 phi)(s).
template <class Phi, PhaseProposal Proposal = MixtureProposal>
McEstimate apply_k2(const GasParams& params, const Phi& phi, const MicroState& s, const McConfig& cfg,
                    const Proposal& proposal = {}) {
    params.validate();
    const detail::GainSampler sampler(params, s);
    return mc_mean(cfg, [&, angles = AngleSampler(params)](Rng& rng) mutable {
        const detail::GainDraw g = sampler.draw(rng, angles, proposal);
        if (g.rate == 0.0) return 0.0;
        double acc = 0.0;
        const double f1 = sampler.linear_factor(g, false);
        if (f1 != 0.0) acc += f1 * phi(g.post.b);
        const double f2 = sampler.linear_factor(g, true);
        if (f2 != 0.0) acc += f2 * phi(g.post.a);
        return g.rate * acc;
    });
}

/// K2 applied to several test functions with shared samples.
template <std::size_t N, class PhiArray, PhaseProposal Proposal = MixtureProposal>
std::array<McEstimate, N> apply_k2_multi(const GasParams& params, const PhiArray& phis,
                                         const MicroState& s, const McConfig& cfg,
                                         const Proposal& proposal = {}) {
    params.validate();
    const detail::GainSampler sampler(params, s);
    return mc_mean_multi<N>(cfg, [&, angles = AngleSampler(params)](Rng& rng) mutable {
        const detail::GainDraw g = sampler.draw(rng, angles, proposal);
        std::array<double, N> out{};
        if (g.rate == 0.0) return out;
        const double f1 = g.rate * sampler.linear_factor(g, false);
        const double f2 = g.rate * sampler.linear_factor(g, true);
        for (std::size_t k = 0; k < N; ++k) {
            double acc = 0.0;
            if (f1 != 0.0) acc += f1 * phis[k](g.post.b);
            if (f2 != 0.0) acc += f2 * phis[k](g.post.a);
            out[k] = acc;
        }
        return out;
    });
}

struct KernelBoundRow {
    MicroState state;
    double bound_product = 0.0;
    double std_error = 0.0;
};

/// Integral kernel bound probe. For each scan state s = (v, I) evaluates
///
///   A(s) = (1 + |v| + I^{1/4}) * integral of (k1 + k2)(s, s*) (w(s)/w(s*))
///          e^{eps |v - v*|^2} (1 + I*)^m ds*
///
/// as (K1 + K2) applied to the test function carrying those factors. Both
/// kernels are nonnegative, so this bounds the signed k_w integral.
inline std::vector<KernelBoundRow> kernel_bound_probe(const PhaseQuadrature& q, double eps, double m,
                                                      std::span<const MicroState> scan,
                                                      const McConfig& cfg) {
    if (!(eps >= 0.0 && eps <= 1.0 / 64.0))
        throw std::invalid_argument("kernel bound probe needs 0 <= eps <= 1/64");
    if (!(m >= 0.0 && m <= 1.0 / 8.0))
        throw std::invalid_argument("kernel bound probe needs 0 <= m <= 1/8");
    const GasParams& params = q.params();
    std::vector<KernelBoundRow> rows;
    rows.reserve(scan.size());
    for (std::size_t k = 0; k < scan.size(); ++k) {
        const MicroState s = scan[k];
        const double ws = weight(params, s);
        auto phi = [&](const MicroState& x) {
            return std::exp(eps * norm2(s.v - x.v)) * std::pow(1.0 + x.i_energy, m) * ws / weight(params, x);
        };
        const double k1 = apply_k1(q, phi, s);
        const McEstimate k2 = apply_k2(params, phi, s, detail::derive(cfg, k));
        const double factor = 1.0 + norm(s.v) + std::pow(s.i_energy, 0.25);
        rows.push_back({s, factor * (k1 + k2.mean), factor * k2.std_error});
    }
    return rows;
}

namespace detail {

/// Gauss-Legendre nodes and weights on consecutive panels [edges[k], edges[k+1]].
inline void panel_rule(std::span<const double> edges, int per_panel, std::vector<double>& nodes,
                       std::vector<double>& weights) {
    std::vector<double> x, w;
    gauss_legendre(per_panel, x, w);
    nodes.clear();
    weights.clear();
    for (std::size_t k = 0; k + 1 < edges.size(); ++k) {
        const double half = 0.5 * (edges[k + 1] - edges[k]);
        const double mid = 0.5 * (edges[k + 1] + edges[k]);
        for (std::size_t j = 0; j < x.size(); ++j) {
            nodes.push_back(mid + half * x[j]);
            weights.push_back(half * w[j]);
        }
    }
}

inline std::vector<double> refined_edges(double upper) {
    std::vector<double> edges{0.0};
    for (double e = 0.125; e < upper; e *= 2.0) edges.push_back(e);
    edges.push_back(upper);
    return edges;
}

}  // namespace detail

/// Weighted L2 norm of the k1 kernel row: integral of |k1(s, .) w(s)/w(.)|^2
/// over the truncation of q's grid.
///
/// The weight ratio puts almost all of the mass within |v*| ~ 1/(2 beta) of
/// the origin, far below the phase grid spacing, so this integral uses its
/// own rule: spherical coordinates in v* (azimuth exact), sqrt(I*) in place
/// of I*, and Gauss-Legendre panels halving toward zero in both radii.
inline std::vector<double> k1_l2_scan(const PhaseQuadrature& q, std::span<const MicroState> scan) {
    const GasParams& params = q.params();
    const double c = q.c_delta();
    std::vector<double> rho, rho_w, t, t_w, mu, mu_w;
    detail::panel_rule(detail::refined_edges(q.grid().v_max()), 16, rho, rho_w);
    detail::panel_rule(detail::refined_edges(std::sqrt(q.grid().i_max())), 16, t, t_w);
    detail::gauss_legendre(32, mu, mu_w);

    std::vector<double> out;
    out.reserve(scan.size());
    for (const MicroState& s : scan) {
        const double lms = log_maxwellian(params, s);
        const double ws = weight(params, s);
        const double speed = norm(s.v);
        CompensatedSum total;
        for (std::size_t a = 0; a < rho.size(); ++a) {
            const double r = rho[a];
            for (std::size_t b = 0; b < t.size(); ++b) {
                const double i_star = t[b] * t[b];
                const double lmx = log_maxwellian(params, MicroState{{r, 0.0, 0.0}, i_star});
                if (!std::isfinite(lmx)) continue;
                const double ratio = ws / weight(params, MicroState{{r, 0.0, 0.0}, i_star});
                const double common = ratio * ratio * std::exp(lms + lmx);
                double ang = 0.0;
                for (std::size_t k = 0; k < mu.size(); ++k) {
                    const double rel2 = std::max(0.0, speed * speed + r * r - 2.0 * speed * r * mu[k]);
                    const double bval = transition_b(params, 0.25 * rel2 + s.i_energy + i_star);
                    ang += mu_w[k] * bval * bval;
                }
                // d^3 v* = 2 pi rho^2 d rho d mu, dI* = 2 t dt
                total.add(2.0 * std::numbers::pi * r * r * rho_w[a] * 2.0 * t[b] * t_w[b] * c * c * common * ang);
            }
        }
        const double val = total.value();
        if (!std::isfinite(val)) throw NumericalError("k1 L2 integral is not finite");
        out.push_back(val);
    }
    return out;
}

}  // namespace polykin
