#include <array>
#include <functional>
#include <cmath>
#include <numbers>
#include <vector>

#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "polykin/linearized.hpp"
#include "polykin/stats.hpp"

using namespace polykin;

namespace {

GasParams gas(double delta, double alpha = 0.0) {
    GasParams p;
    p.delta = delta;
    p.alpha = alpha;
    return p;
}

McConfig mc(std::uint64_t n, std::uint64_t seed) {
    McConfig c;
    c.n_samples = n;
    c.seed = seed;
    return c;
}

std::vector<MicroState> random_states(std::size_t n, std::uint64_t seed) {
    Rng rng = substream(seed, StreamTag::check, 9);
    std::normal_distribution<double> normal(0.0, 1.2);
    std::exponential_distribution<double> expo(0.6);
    std::vector<MicroState> out;
    for (std::size_t k = 0; k < n; ++k) out.push_back({{normal(rng), normal(rng), normal(rng)}, expo(rng)});
    return out;
}

}  // namespace

TEST(KernelK1, ClosedFormExample) {
    const KernelPoint kp{{{0.0, 0.0, 0.0}, 1.0}, {{0.0, 0.0, 0.0}, 1.0}};
    const double expected = 16.0 * std::numbers::pi / 15.0 * 2.0 * std::pow(2.0 * std::numbers::pi, -1.5) * std::exp(-1.0);
    EXPECT_NEAR(kernel_k1(gas(2), kp), expected, 1e-14);
    EXPECT_NEAR(kernel_k1(gas(2), kp), 0.15655, 1e-5);
}

TEST(KernelK1, MatchesMonteCarloOverTheAngularMeasure) {
    // c_delta is the mass of d omega dR dr R^{1/2} (1-R)^{delta-1} (r(1-r))^{delta/2-1};
    // integrate it with uniform (R, r) and multiply by B sqrt(M M*).
    for (double d : {2.0, 3.0}) {
        const GasParams p = gas(d);
        const KernelPoint kp{{{0.3, -0.2, 0.1}, 1.0}, {{-0.5, 0.4, 0.0}, 0.6}};
        const McEstimate mass = mc_mean(mc(1000000, 4), [&](Rng& rng) {
            const double big_r = uniform01(rng);
            const double small_r = uniform01(rng);
            return 4.0 * std::numbers::pi * std::sqrt(big_r) * std::pow(1.0 - big_r, d - 1.0) *
                   std::pow(small_r * (1.0 - small_r), 0.5 * d - 1.0);
        });
        const double rest = transition_b(p, PairState{kp.s, kp.s_star}) *
                            std::sqrt(maxwellian(p, kp.s) * maxwellian(p, kp.s_star));
        EXPECT_NEAR(kernel_k1(p, kp), mass.mean * rest, 3.0 * mass.std_error * rest) << "delta " << d;
    }
}

TEST(KernelK1, SymmetricNonnegativeAndVanishingAtZeroInternalEnergy) {
    const auto states = random_states(50, 1);
    for (double d : {2.0, 4.0}) {
        for (std::size_t k = 0; k + 1 < states.size(); ++k) {
            const double a = kernel_k1(gas(d, 0.5), {states[k], states[k + 1]});
            const double b = kernel_k1(gas(d, 0.5), {states[k + 1], states[k]});
            EXPECT_GE(a, 0.0);
            EXPECT_NEAR(a, b, 1e-15 * (1.0 + a));
        }
    }
    EXPECT_EQ(kernel_k1(gas(4), {{{0.1, 0.0, 0.0}, 0.0}, {{0.0, 0.0, 0.0}, 1.0}}), 0.0);
    EXPECT_EQ(kernel_k1(gas(3), {{{0.1, 0.0, 0.0}, 2.0}, {{0.0, 0.0, 0.0}, 0.0}}), 0.0);
}

TEST(ApplyK1, ZeroAndSqrtMaxwellianIdentity) {
    const PhaseQuadrature q(gas(2));
    const MicroState s{{0.5, 0.0, -1.0}, 0.8};
    EXPECT_EQ(apply_k1(q, GridFunction::zeros(q.grid()), s), 0.0);
    // K1 sqrt(M) = sqrt(M) nu under the same quadrature.
    const GridFunction root(q.grid(), {q.sqrt_maxwellian().begin(), q.sqrt_maxwellian().end()});
    const double expect = std::sqrt(maxwellian(q.params(), s)) * collision_frequency(q, s);
    EXPECT_NEAR(apply_k1(q, root, s), expect, 1e-12 * expect);
    auto root_fn = [&](const MicroState& x) { return std::sqrt(maxwellian(q.params(), x)); };
    EXPECT_NEAR(apply_k1(q, root_fn, s), expect, 1e-12 * expect);
}

TEST(ApplyK1, AgreesWithPointwiseKernelQuadrature) {
    const PhaseQuadrature q(gas(3, 1.0), PhaseGrid(8.0, 30.0, 16, 16));
    const MicroState s{{1.0, 0.0, 0.0}, 1.5};
    auto half_space = [](const MicroState& x) { return x.v.x > 0.0 ? 1.0 + x.i_energy : 0.0; };
    const double direct = q.grid().integrate([&](const MicroState& x) {
        return kernel_k1(q.params(), {s, x}) * half_space(x);
    });
    EXPECT_NEAR(apply_k1(q, half_space, s), direct, 1e-12 * direct);
}

TEST(ApplyK2, ZeroFunctionGivesExactZero) {
    const McEstimate e = apply_k2(gas(2), [](const MicroState&) { return 0.0; }, {}, mc(1000, 1));
    EXPECT_EQ(e.mean, 0.0);
    EXPECT_EQ(e.std_error, 0.0);
}

TEST(ApplyK2, NullSpaceOfTheLinearisedOperator) {
    // For every collision invariant phi, K2 phi - K1 phi = nu phi.
    for (double d : {2.0, 3.5}) {
        const PhaseQuadrature q(gas(d, 0.5));
        const GasParams& p = q.params();
        auto root = [&](const MicroState& x) { return std::sqrt(maxwellian(p, x)); };
        const std::array<std::function<double(const MicroState&)>, 5> phis{
            root,
            [&](const MicroState& x) { return root(x) * x.v.x; },
            [&](const MicroState& x) { return root(x) * x.v.y; },
            [&](const MicroState& x) { return root(x) * x.v.z; },
            [&](const MicroState& x) { return root(x) * x.energy(); },
        };
        const auto states = random_states(4, 10 + static_cast<std::uint64_t>(d));
        for (std::size_t k = 0; k < states.size(); ++k) {
            const MicroState& s = states[k];
            const auto k2 = apply_k2_multi<5>(p, phis, s, mc(200000, 100 + k));
            const double nu = collision_frequency(q, s);
            for (std::size_t j = 0; j < 5; ++j) {
                const double residual = k2[j].mean - apply_k1(q, phis[j], s) - nu * phis[j](s);
                EXPECT_LE(std::abs(residual), 3.0 * k2[j].std_error + 1e-9)
                    << "delta " << d << " state " << k << " invariant " << j;
            }
        }
    }
}

TEST(ApplyK2, MultiMatchesSingleWithSharedSamples) {
    const GasParams p = gas(2);
    auto root = [&](const MicroState& x) { return std::sqrt(maxwellian(p, x)); };
    const std::array<std::function<double(const MicroState&)>, 1> phis{root};
    const MicroState s{{0.2, 0.0, 0.0}, 0.5};
    const McEstimate single = apply_k2(p, root, s, mc(20000, 3));
    const McEstimate multi = apply_k2_multi<1>(p, phis, s, mc(20000, 3))[0];
    EXPECT_NEAR(single.mean, multi.mean, 1e-12 * std::abs(single.mean));
}

TEST(ApplyK2, NonnegativeOnNonnegativeFunctions) {
    const GasParams p = gas(3);
    auto bump = [](const MicroState& x) { return std::exp(-norm2(x.v - Vec3{1.0, 0.0, 0.0}) - 0.5 * x.i_energy); };
    for (const MicroState& s : random_states(6, 4)) {
        const McEstimate e = apply_k2(p, bump, s, mc(20000, 8));
        EXPECT_GE(e.mean, -3.0 * e.std_error);
    }
}

TEST(KernelBoundProbe, RejectsOutOfRangeParameters) {
    const PhaseQuadrature q(gas(2), PhaseGrid(8.0, 30.0, 16, 16));
    const std::vector<MicroState> scan{MicroState{}};
    EXPECT_THROW(kernel_bound_probe(q, 0.05, 0.0, scan, mc(100, 1)), std::invalid_argument);
    EXPECT_THROW(kernel_bound_probe(q, -0.01, 0.0, scan, mc(100, 1)), std::invalid_argument);
    EXPECT_THROW(kernel_bound_probe(q, 0.0, 0.2, scan, mc(100, 1)), std::invalid_argument);
    EXPECT_NO_THROW(kernel_bound_probe(q, 1.0 / 64.0, 1.0 / 8.0, scan, mc(100, 1)));
}

TEST(KernelBoundProbe, OriginIsFinitePositiveAndStable) {
    const PhaseQuadrature q(gas(2));
    const std::vector<MicroState> scan{MicroState{}};
    const KernelBoundRow base = kernel_bound_probe(q, 0.0, 0.0, scan, mc(100000, 1))[0];
    const KernelBoundRow fine = kernel_bound_probe(q, 0.0, 0.0, scan, mc(400000, 2))[0];
    EXPECT_TRUE(std::isfinite(base.bound_product));
    EXPECT_GT(base.bound_product, 0.0);
    EXPECT_NEAR(base.bound_product, fine.bound_product,
                3.0 * std::hypot(base.std_error, fine.std_error));
    const KernelBoundRow cap = kernel_bound_probe(q, 1.0 / 64.0, 1.0 / 8.0, scan, mc(100000, 1))[0];
    EXPECT_TRUE(std::isfinite(cap.bound_product));
    EXPECT_GE(cap.bound_product, base.bound_product);
}

TEST(KernelBoundProbe, DeterministicForAFixedSeed) {
    const PhaseQuadrature q(gas(2), PhaseGrid(8.0, 30.0, 16, 16));
    const std::vector<MicroState> scan{MicroState{}, MicroState{{2.0, 0.0, 0.0}, 1.0}};
    const auto a = kernel_bound_probe(q, 0.0, 0.0, scan, mc(5000, 7));
    const auto b = kernel_bound_probe(q, 0.0, 0.0, scan, mc(5000, 7));
    for (std::size_t k = 0; k < a.size(); ++k) {
        EXPECT_EQ(a[k].bound_product, b[k].bound_product);
        EXPECT_EQ(a[k].std_error, b[k].std_error);
    }
}

TEST(K1L2Scan, FixtureAndDecay) {
    const PhaseQuadrature q(gas(2), PhaseGrid(12.0, 40.0, 64, 48));
    const std::vector<MicroState> scan{MicroState{{0.0, 0.0, 0.0}, 1.0}};
    const double v = k1_l2_scan(q, scan)[0];
    EXPECT_NEAR(v, fixtures::k1_l2_origin_i1, 1e-5 * fixtures::k1_l2_origin_i1);

    const PhaseQuadrature q3(gas(3));
    const std::vector<MicroState> rising{MicroState{{0.0, 0.0, 0.0}, 5.0}, MicroState{{0.0, 0.0, 0.0}, 15.0},
                                         MicroState{{0.0, 0.0, 0.0}, 30.0}};
    const auto vals = k1_l2_scan(q3, rising);
    for (double x : vals) EXPECT_GT(x, 0.0);
    EXPECT_LT(vals[1], vals[0]);
    EXPECT_LT(vals[2], vals[1]);
    EXPECT_LT(vals[2], 1e-3 * vals[0]);
}
