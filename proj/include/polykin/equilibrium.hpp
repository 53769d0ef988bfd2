#pragma once

// Goodness-of-fit of particle samples against the equilibrium at
// temperature T, and the detailed-balance check of the collision rule:
// M_T must be invariant under B-weighted random pair collisions.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include <boost/math/special_functions/gamma.hpp>

#include "polykin/collision_geometry.hpp"
#include "polykin/core_model.hpp"
#include "polykin/random.hpp"
#include "polykin/stats.hpp"

namespace polykin {

/// KS statistics of the one-particle marginals.
struct MarginalKs {
    double vx = 0.0;
    double vy = 0.0;
    double vz = 0.0;
    double speed = 0.0;
    double i_energy = 0.0;

    [[nodiscard]] double worst() const noexcept { return std::max({vx, vy, vz, speed, i_energy}); }
};

inline double normal_cdf(double x, double mean, double variance) {
    return 0.5 * std::erfc(-(x - mean) / std::sqrt(2.0 * variance));
}

/// Compares each velocity component with N(bulk_k, T), the peculiar speed
/// with the Maxwell speed law and I with Gamma(delta/2, scale T).
inline MarginalKs marginal_ks(std::span<const MicroState> states, const GasParams& params, double temperature,
                              const Vec3& bulk = {}) {
    const std::size_t n = states.size();
    std::vector<double> vx(n), vy(n), vz(n), speed(n), ie(n);
    for (std::size_t k = 0; k < n; ++k) {
        vx[k] = states[k].v.x;
        vy[k] = states[k].v.y;
        vz[k] = states[k].v.z;
        speed[k] = norm(states[k].v - bulk);
        ie[k] = states[k].i_energy;
    }
    const double t = temperature;
    MarginalKs ks;
    ks.vx = stats::ks_statistic(std::move(vx), [&](double x) { return normal_cdf(x, bulk.x, t); });
    ks.vy = stats::ks_statistic(std::move(vy), [&](double x) { return normal_cdf(x, bulk.y, t); });
    ks.vz = stats::ks_statistic(std::move(vz), [&](double x) { return normal_cdf(x, bulk.z, t); });
    ks.speed = stats::ks_statistic(std::move(speed),
                                   [&](double s) { return boost::math::gamma_p(1.5, 0.5 * s * s / t); });
    const double shape = 0.5 * params.delta;
    ks.i_energy = stats::ks_statistic(std::move(ie), [&](double i) {
        return i <= 0.0 ? 0.0 : boost::math::gamma_p(shape, i / t);
    });
    return ks;
}

/// Detailed-balance check of the collision rule at temperature T.
///
/// A population of n_population states is drawn from M_T. Random pairs are
/// accepted with probability B / B_cap, where B_cap is B at the 1 - 1e-12
/// quantile of the pair energy (Gamma(3/2 + delta, scale T) under
/// M_T x M_T), and an accepted pair is replaced by its collided image with
/// exactly sampled angles. M_T is invariant under this chain precisely when
/// the angle measure satisfies detailed balance, so after n_accepted
/// collisions the population marginals must still match M_T.
///
/// The marginal of a single B-weighted pair member is nu M_T / <nu>, not
/// M_T, on either side of the collision; testing the population rather
/// than the collided pairs avoids that bias.
template <class AngleFn>
MarginalKs collision_fixed_point_with(const GasParams& params, double temperature, std::size_t n_accepted,
                                      std::uint64_t seed, std::size_t n_population, AngleFn&& angles) {
    params.validate();
    if (n_population == 0) n_population = std::max<std::size_t>(n_accepted, 2);
    if (n_population < 2) throw std::invalid_argument("fixed-point check needs at least two states");
    const double e_cap = temperature * boost::math::gamma_q_inv(1.5 + params.delta, 1e-12);
    double b_cap = transition_b(params, e_cap);
    Rng rng = substream(seed, StreamTag::check, 1);
    std::normal_distribution<double> normal(0.0, std::sqrt(temperature));
    std::gamma_distribution<double> gamma(0.5 * params.delta, temperature);
    std::vector<MicroState> pop(n_population);
    for (MicroState& s : pop) s = {{normal(rng), normal(rng), normal(rng)}, gamma(rng)};

    std::uniform_int_distribution<std::size_t> first(0, n_population - 1);
    std::uniform_int_distribution<std::size_t> second(0, n_population - 2);
    std::size_t accepted = 0;
    while (accepted < n_accepted) {
        const std::size_t i = first(rng);
        std::size_t j = second(rng);
        if (j >= i) ++j;
        const PairState p{pop[i], pop[j]};
        const double b = transition_b(params, p);
        if (b > b_cap) {
            b_cap = b;
        } else if (uniform01(rng) * b_cap >= b) {
            continue;
        }
        const PairState post = apply_collision(p, angles(rng));
        pop[i] = post.a;
        pop[j] = post.b;
        ++accepted;
    }
    return marginal_ks(pop, params, temperature);
}

inline MarginalKs collision_fixed_point(const GasParams& params, double temperature, std::size_t n_accepted,
                                        std::uint64_t seed, std::size_t n_population = 0) {
    return collision_fixed_point_with(params, temperature, n_accepted, seed, n_population, AngleSampler(params));
}

}  // namespace polykin
