#pragma once

// Integration over phase space (v, I) in R^3 x R_+.
//
// Deterministic route: PhaseGrid, a tensor product of a uniform composite
// trapezoidal rule on [-v_max, v_max] per velocity axis (spectrally accurate
// for Gaussian-decaying integrands) and an n_i-point Gauss-Legendre rule in
// t = sqrt(I) on [0, sqrt(i_max)], which clusters nodes near I = 0 and
// absorbs the I^{delta/2-1} behaviour of the Maxwellian.
//
// Stochastic route: mc_integrate with an importance proposal. Samples are
// drawn in fixed-size shards whose RNG substreams depend only on
// (seed, shard index), so results do not depend on the worker count.

#include <algorithm>
#include <array>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include "polykin/core_model.hpp"
#include "polykin/parallel.hpp"
#include "polykin/random.hpp"

namespace polykin {

namespace detail {

/// Gauss-Legendre nodes and weights on [-1, 1] by Newton iteration on P_n.
inline void gauss_legendre(int n, std::vector<double>& nodes, std::vector<double>& weights) {
    nodes.assign(static_cast<std::size_t>(n), 0.0);
    weights.assign(static_cast<std::size_t>(n), 0.0);
    for (int i = 0; i < (n + 1) / 2; ++i) {
        double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p0 = 1.0;
            double p1 = x;
            for (int k = 2; k <= n; ++k) {
                const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = n * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16) break;
        }
        // Recompute the derivative at the converged node.
        double p0 = 1.0;
        double p1 = x;
        for (int k = 2; k <= n; ++k) {
            const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
            p0 = p1;
            p1 = p2;
        }
        dp = n * (x * p1 - p0) / (x * x - 1.0);
        const double w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[static_cast<std::size_t>(i)] = -x;
        nodes[static_cast<std::size_t>(n - 1 - i)] = x;
        weights[static_cast<std::size_t>(i)] = w;
        weights[static_cast<std::size_t>(n - 1 - i)] = w;
    }
}

}  // namespace detail

/// Truncated tensor-product grid over (v, I).
class PhaseGrid {
public:
    PhaseGrid() : PhaseGrid(12.0, 40.0, 32, 32) {}

    PhaseGrid(double v_max, double i_max, int n_v, int n_i)
        : v_max_(v_max), i_max_(i_max), n_v_(n_v), n_i_(n_i) {
        if (!(v_max > 0.0) || !(i_max > 0.0))
            throw std::invalid_argument("grid truncation radii must be positive");
        if (n_v < 8 || n_i < 8) throw std::invalid_argument("grid needs n_v >= 8 and n_i >= 8");

        v_nodes_.resize(static_cast<std::size_t>(n_v));
        v_weights_.assign(static_cast<std::size_t>(n_v), 0.0);
        const double h = 2.0 * v_max / (n_v - 1);
        for (int k = 0; k < n_v; ++k) {
            v_nodes_[static_cast<std::size_t>(k)] = -v_max + h * k;
            v_weights_[static_cast<std::size_t>(k)] = (k == 0 || k == n_v - 1) ? 0.5 * h : h;
        }

        std::vector<double> x;
        std::vector<double> w;
        detail::gauss_legendre(n_i, x, w);
        const double t_max = std::sqrt(i_max);
        i_nodes_.resize(static_cast<std::size_t>(n_i));
        i_weights_.resize(static_cast<std::size_t>(n_i));
        for (std::size_t k = 0; k < x.size(); ++k) {
            const double t = 0.5 * t_max * (x[k] + 1.0);
            i_nodes_[k] = t * t;
            // dI = 2 t dt, dt = (t_max / 2) dx
            i_weights_[k] = 2.0 * t * 0.5 * t_max * w[k];
        }
    }

    [[nodiscard]] double v_max() const noexcept { return v_max_; }
    [[nodiscard]] double i_max() const noexcept { return i_max_; }
    [[nodiscard]] int n_v() const noexcept { return n_v_; }
    [[nodiscard]] int n_i() const noexcept { return n_i_; }
    [[nodiscard]] std::span<const double> v_nodes() const noexcept { return v_nodes_; }
    [[nodiscard]] std::span<const double> v_weights() const noexcept { return v_weights_; }
    [[nodiscard]] std::span<const double> i_nodes() const noexcept { return i_nodes_; }
    [[nodiscard]] std::span<const double> i_weights() const noexcept { return i_weights_; }

    [[nodiscard]] std::size_t size() const noexcept {
        const auto nv = static_cast<std::size_t>(n_v_);
        return nv * nv * nv * static_cast<std::size_t>(n_i_);
    }

    /// Flat index layout: ((ix * n_v + iy) * n_v + iz) * n_i + ii.
    [[nodiscard]] MicroState node(std::size_t idx) const noexcept {
        const auto ni = static_cast<std::size_t>(n_i_);
        const auto nv = static_cast<std::size_t>(n_v_);
        const std::size_t ii = idx % ni;
        idx /= ni;
        const std::size_t iz = idx % nv;
        idx /= nv;
        const std::size_t iy = idx % nv;
        const std::size_t ix = idx / nv;
        return MicroState{{v_nodes_[ix], v_nodes_[iy], v_nodes_[iz]}, i_nodes_[ii]};
    }

    [[nodiscard]] double weight(std::size_t idx) const noexcept {
        const auto ni = static_cast<std::size_t>(n_i_);
        const auto nv = static_cast<std::size_t>(n_v_);
        const std::size_t ii = idx % ni;
        idx /= ni;
        const std::size_t iz = idx % nv;
        idx /= nv;
        const std::size_t iy = idx % nv;
        const std::size_t ix = idx / nv;
        return v_weights_[ix] * v_weights_[iy] * v_weights_[iz] * i_weights_[ii];
    }

    /// Visits every node as fn(flat_index, state, quadrature_weight). Tasks
    /// are split by the first velocity index; fn must be thread-safe.
    template <class Fn>
    void for_each_node(Fn&& fn) const {
        const auto nv = static_cast<std::size_t>(n_v_);
        const auto ni = static_cast<std::size_t>(n_i_);
        parallel_for(nv, [&](std::size_t ix) {
            std::size_t idx = ix * nv * nv * ni;
            for (std::size_t iy = 0; iy < nv; ++iy) {
                for (std::size_t iz = 0; iz < nv; ++iz) {
                    const Vec3 v{v_nodes_[ix], v_nodes_[iy], v_nodes_[iz]};
                    const double wv = v_weights_[ix] * v_weights_[iy] * v_weights_[iz];
                    for (std::size_t ii = 0; ii < ni; ++ii, ++idx) {
                        fn(idx, MicroState{v, i_nodes_[ii]}, wv * i_weights_[ii]);
                    }
                }
            }
        });
    }

    /// Quadrature of fn(idx, state) over the truncated domain. Per-slab partial
    /// sums are merged in slab order, so the value is scheduling-independent.
    template <class Fn>
        requires std::invocable<Fn&, std::size_t, const MicroState&>
    double integrate_indexed(Fn&& fn) const {
        const auto nv = static_cast<std::size_t>(n_v_);
        const auto ni = static_cast<std::size_t>(n_i_);
        std::vector<double> slab(nv, 0.0);
        parallel_for(nv, [&](std::size_t ix) {
            CompensatedSum acc;
            std::size_t idx = ix * nv * nv * ni;
            for (std::size_t iy = 0; iy < nv; ++iy) {
                for (std::size_t iz = 0; iz < nv; ++iz) {
                    const Vec3 v{v_nodes_[ix], v_nodes_[iy], v_nodes_[iz]};
                    const double wv = v_weights_[ix] * v_weights_[iy] * v_weights_[iz];
                    double line = 0.0;
                    for (std::size_t ii = 0; ii < ni; ++ii, ++idx) {
                        line += i_weights_[ii] * fn(idx, MicroState{v, i_nodes_[ii]});
                    }
                    acc += wv * line;
                }
            }
            slab[ix] = acc.value();
        });
        CompensatedSum total;
        for (double s : slab) total += s;
        return total.value();
    }

    template <class Fn>
        requires std::invocable<Fn&, const MicroState&>
    double integrate(Fn&& fn) const {
        return integrate_indexed([&](std::size_t, const MicroState& s) { return fn(s); });
    }

    /// Node index bracketing for interpolation along one velocity axis.
    /// Returns false outside [-v_max, v_max].
    bool locate_velocity(double c, std::size_t& lo, double& frac) const noexcept {
        if (!(c >= -v_max_ && c <= v_max_)) return false;
        const double h = 2.0 * v_max_ / (n_v_ - 1);
        double pos = (c + v_max_) / h;
        auto k = static_cast<std::size_t>(std::floor(pos));
        k = std::min(k, static_cast<std::size_t>(n_v_ - 2));
        lo = k;
        frac = std::clamp(pos - static_cast<double>(k), 0.0, 1.0);
        return true;
    }

    /// Bracketing along the internal-energy axis; constant extrapolation
    /// between I = 0 and the first node and between the last node and i_max.
    bool locate_internal(double i, std::size_t& lo, double& frac) const noexcept {
        if (!(i >= 0.0 && i <= i_max_)) return false;
        if (i <= i_nodes_.front()) {
            lo = 0;
            frac = 0.0;
            return true;
        }
        if (i >= i_nodes_.back()) {
            lo = i_nodes_.size() - 2;
            frac = 1.0;
            return true;
        }
        auto it = std::upper_bound(i_nodes_.begin(), i_nodes_.end(), i);
        lo = static_cast<std::size_t>(it - i_nodes_.begin()) - 1;
        frac = (i - i_nodes_[lo]) / (i_nodes_[lo + 1] - i_nodes_[lo]);
        return true;
    }

    friend bool operator==(const PhaseGrid& a, const PhaseGrid& b) noexcept {
        return a.v_max_ == b.v_max_ && a.i_max_ == b.i_max_ && a.n_v_ == b.n_v_ && a.n_i_ == b.n_i_;
    }

private:
    double v_max_;
    double i_max_;
    int n_v_;
    int n_i_;
    std::vector<double> v_nodes_;
    std::vector<double> v_weights_;
    std::vector<double> i_nodes_;
    std::vector<double> i_weights_;
};

/// A function tabulated on the nodes of a PhaseGrid. Off-node evaluation is
/// multilinear in (v_x, v_y, v_z, I); outside the truncation it is zero.
class GridFunction {
public:
    GridFunction(PhaseGrid grid, std::vector<double> values)
        : grid_(std::move(grid)), values_(std::move(values)) {
        if (values_.size() != grid_.size())
            throw std::invalid_argument("grid function size does not match its grid");
        for (double x : values_) {
            if (!std::isfinite(x)) throw NumericalError("grid function holds a non-finite value");
        }
    }

    /// Tabulates fn(state) on every node.
    template <class Fn>
    static GridFunction sample(const PhaseGrid& grid, Fn&& fn) {
        std::vector<double> values(grid.size());
        grid.for_each_node([&](std::size_t idx, const MicroState& s, double) { values[idx] = fn(s); });
        return GridFunction(grid, std::move(values));
    }

    static GridFunction zeros(const PhaseGrid& grid) {
        return GridFunction(grid, std::vector<double>(grid.size(), 0.0));
    }

    [[nodiscard]] const PhaseGrid& grid() const noexcept { return grid_; }
    [[nodiscard]] std::span<const double> values() const noexcept { return values_; }
    [[nodiscard]] double at(std::size_t idx) const noexcept { return values_[idx]; }

    [[nodiscard]] GridFunction scaled(double c) const {
        std::vector<double> v(values_);
        for (double& x : v) x *= c;
        return GridFunction(grid_, std::move(v));
    }

    double operator()(const MicroState& s) const noexcept {
        std::size_t lx = 0, ly = 0, lz = 0, li = 0;
        double fx = 0.0, fy = 0.0, fz = 0.0, fi = 0.0;
        if (!grid_.locate_velocity(s.v.x, lx, fx) || !grid_.locate_velocity(s.v.y, ly, fy) ||
            !grid_.locate_velocity(s.v.z, lz, fz) || !grid_.locate_internal(s.i_energy, li, fi)) {
            return 0.0;
        }
        const auto nv = static_cast<std::size_t>(grid_.n_v());
        const auto ni = static_cast<std::size_t>(grid_.n_i());
        double acc = 0.0;
        for (int cx = 0; cx < 2; ++cx) {
            const double wx = cx ? fx : 1.0 - fx;
            if (wx == 0.0) continue;
            for (int cy = 0; cy < 2; ++cy) {
                const double wy = cy ? fy : 1.0 - fy;
                if (wy == 0.0) continue;
                for (int cz = 0; cz < 2; ++cz) {
                    const double wz = cz ? fz : 1.0 - fz;
                    if (wz == 0.0) continue;
                    const std::size_t base =
                        (((lx + cx) * nv + (ly + cy)) * nv + (lz + cz)) * ni + li;
                    const double wxyz = wx * wy * wz;
                    if (fi != 1.0) acc += wxyz * (1.0 - fi) * values_[base];
                    if (fi != 0.0) acc += wxyz * fi * values_[base + 1];
                }
            }
        }
        return acc;
    }

private:
    PhaseGrid grid_;
    std::vector<double> values_;
};

/// Quadrature of a tabulated function over the truncated domain.
inline double integrate(const GridFunction& g) {
    return g.grid().integrate_indexed([&](std::size_t idx, const MicroState&) { return g.at(idx); });
}

// ---------------------------------------------------------------------------
// Monte Carlo

struct McEstimate {
    double mean = 0.0;
    double std_error = 0.0;
    std::uint64_t n_samples = 1;
};

struct McConfig {
    std::uint64_t n_samples = 100000;
    std::uint64_t seed = 1;
    std::uint64_t shard_size = 8192;
};

namespace detail {

/// Welford accumulator with Chan's pairwise merge.
struct Moments {
    std::uint64_t n = 0;
    double mean = 0.0;
    double m2 = 0.0;

    void push(double x) noexcept {
        ++n;
        const double d = x - mean;
        mean += d / static_cast<double>(n);
        m2 += d * (x - mean);
    }
    void merge(const Moments& o) noexcept {
        if (o.n == 0) return;
        if (n == 0) {
            *this = o;
            return;
        }
        const double na = static_cast<double>(n);
        const double nb = static_cast<double>(o.n);
        const double d = o.mean - mean;
        const double nt = na + nb;
        mean += d * nb / nt;
        m2 += o.m2 + d * d * na * nb / nt;
        n += o.n;
    }
    [[nodiscard]] McEstimate estimate() const noexcept {
        McEstimate e;
        e.n_samples = n;
        e.mean = mean;
        e.std_error = n > 1 ? std::sqrt(std::max(0.0, m2 / static_cast<double>(n - 1)) /
                                        static_cast<double>(n))
                            : 0.0;
        return e;
    }
};

}  // namespace detail

/// Sample means of K jointly drawn quantities. draw(rng) returns one
/// std::array<double, K> per call; each shard works on its own copy of draw,
/// so a stateful functor (e.g. one holding distribution objects) is safe.
/// Throws NumericalError on a non-finite draw.
template <std::size_t K, class Draw>
std::array<McEstimate, K> mc_mean_multi(const McConfig& cfg, Draw&& draw) {
    if (cfg.n_samples == 0) throw std::invalid_argument("Monte Carlo needs at least one sample");
    const std::uint64_t shard = std::max<std::uint64_t>(1, cfg.shard_size);
    const std::uint64_t n_shards = (cfg.n_samples + shard - 1) / shard;
    std::vector<std::array<detail::Moments, K>> partial(n_shards);
    parallel_for(n_shards, [&](std::size_t s) {
        Rng rng = substream(cfg.seed, StreamTag::mc_shard, s);
        const std::uint64_t begin = s * shard;
        const std::uint64_t end = std::min(cfg.n_samples, begin + shard);
        auto& acc = partial[s];
        std::decay_t<Draw> local(draw);
        for (std::uint64_t i = begin; i < end; ++i) {
            const std::array<double, K> x = local(rng);
            for (std::size_t k = 0; k < K; ++k) {
                if (!std::isfinite(x[k]))
                    throw NumericalError("non-finite Monte Carlo sample (check the proposal support)");
                acc[k].push(x[k]);
            }
        }
    });
    std::array<detail::Moments, K> total{};
    for (const auto& p : partial) {
        for (std::size_t k = 0; k < K; ++k) total[k].merge(p[k]);
    }
    std::array<McEstimate, K> out{};
    for (std::size_t k = 0; k < K; ++k) out[k] = total[k].estimate();
    return out;
}

template <class Draw>
McEstimate mc_mean(const McConfig& cfg, Draw&& draw) {
    return mc_mean_multi<1>(cfg, [inner = std::decay_t<Draw>(draw)](Rng& rng) mutable {
        return std::array<double, 1>{inner(rng)};
    })[0];
}

/// Draw from a proposal over (v, I) together with its density there.
struct ProposalDraw {
    MicroState state;
    double density = 0.0;
};

template <class P>
concept PhaseProposal = requires(const P& p, Rng& rng, const MicroState& s) {
    { p.sample(rng) } -> std::same_as<ProposalDraw>;
    { p.density(s) } -> std::convertible_to<double>;
};

/// Product proposal N(0, sigma^2 Id_3) x Exp(mean) over (v, I).
struct GaussExpProposal {
    double sigma = 1.0;
    double i_mean = 1.0;

    [[nodiscard]] double density(const MicroState& s) const noexcept {
        const double s2 = sigma * sigma;
        return std::exp(-0.5 * norm2(s.v) / s2 - s.i_energy / i_mean) /
               (std::pow(2.0 * std::numbers::pi * s2, 1.5) * i_mean);
    }

    [[nodiscard]] ProposalDraw sample(Rng& rng) const {
        std::normal_distribution<double> normal(0.0, sigma);
        std::exponential_distribution<double> expo(1.0 / i_mean);
        MicroState s{{normal(rng), normal(rng), normal(rng)}, expo(rng)};
        return {s, density(s)};
    }
};

/// Two-component mixture 0.9 (N(0,1)^3 x Exp(1)) + 0.1 (N(0,9)^3 x Exp(mean 5)).
/// The wide component keeps polynomially weighted Maxwellian integrands at
/// finite variance.
struct MixtureProposal {
    GaussExpProposal core{1.0, 1.0};
    GaussExpProposal tail{3.0, 5.0};
    double core_fraction = 0.9;

    [[nodiscard]] double density(const MicroState& s) const noexcept {
        return core_fraction * core.density(s) + (1.0 - core_fraction) * tail.density(s);
    }

    [[nodiscard]] ProposalDraw sample(Rng& rng) const {
        const bool use_core = uniform01(rng) < core_fraction;
        const MicroState s = use_core ? core.sample(rng).state : tail.sample(rng).state;
        return {s, density(s)};
    }
};

/// Importance-sampled integral of integrand over (v, I).
template <class Fn, PhaseProposal Proposal = MixtureProposal>
McEstimate mc_integrate(Fn&& integrand, const McConfig& cfg, const Proposal& proposal = {}) {
    return mc_mean(cfg, [&](Rng& rng) {
        const ProposalDraw d = proposal.sample(rng);
        return integrand(d.state) / d.density;
    });
}

}  // namespace polykin
