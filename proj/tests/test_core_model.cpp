#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "polykin/core_model.hpp"
#include "polykin/quadrature.hpp"

using namespace polykin;

namespace {

GasParams gas(double delta, double alpha = 0.0) {
    GasParams p;
    p.delta = delta;
    p.alpha = alpha;
    return p;
}

}  // namespace

TEST(GasParams, DefaultsAreValid) { EXPECT_NO_THROW(GasParams{}.validate()); }

TEST(GasParams, RejectsOutOfRange) {
    GasParams p;
    p.delta = 1.9;
    EXPECT_THROW(p.validate(), std::invalid_argument);
    p = {};
    p.alpha = 2.0;
    EXPECT_THROW(p.validate(), std::invalid_argument);
    p = {};
    p.alpha = -0.1;
    EXPECT_THROW(p.validate(), std::invalid_argument);
    p = {};
    p.c_b = 0.0;
    EXPECT_THROW(p.validate(), std::invalid_argument);
    p = {};
    p.beta = 7.0;
    EXPECT_THROW(p.validate(), std::invalid_argument);
    p = {};
    p.delta = std::nan("");
    EXPECT_THROW(p.validate(), std::invalid_argument);
}

TEST(Maxwellian, OriginValueForDeltaTwo) {
    const double expected = std::pow(2.0 * std::numbers::pi, -1.5);
    EXPECT_NEAR(maxwellian(gas(2), {}), expected, 1e-15);
    EXPECT_NEAR(maxwellian(gas(2), {}), 0.0634936, 1e-7);
}

TEST(Maxwellian, VanishesAtZeroInternalEnergyAboveTwo) {
    EXPECT_EQ(maxwellian(gas(4), {{0.3, -1.0, 2.0}, 0.0}), 0.0);
    EXPECT_EQ(maxwellian(gas(3), {{0.0, 0.0, 0.0}, 0.0}), 0.0);
}

TEST(Maxwellian, NonnegativeWithFiniteLog) {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> n(0.0, 3.0);
    std::exponential_distribution<double> e(0.2);
    for (double d : {2.0, 3.0, 5.0, 7.5}) {
        for (int k = 0; k < 1000; ++k) {
            const MicroState s{{n(rng), n(rng), n(rng)}, e(rng)};
            const double m = maxwellian(gas(d), s);
            ASSERT_GE(m, 0.0);
            if (m > 0.0) ASSERT_TRUE(std::isfinite(log_maxwellian(gas(d), s)));
        }
    }
}

TEST(Maxwellian, NormalizedOnTruncatedGrid) {
    const PhaseGrid grid;  // |v| <= 12, I <= 40
    for (double d : {2.0, 3.0, 5.0}) {
        const double mass = grid.integrate([&](const MicroState& s) { return maxwellian(gas(d), s); });
        EXPECT_NEAR(mass, 1.0, 1e-6) << "delta " << d;
    }
}

TEST(Maxwellian, MarginalMoments) {
    const PhaseGrid grid;
    for (double d : {2.0, 3.0, 5.0}) {
        const GasParams p = gas(d);
        const double mean_i = grid.integrate([&](const MicroState& s) { return s.i_energy * maxwellian(p, s); });
        const double mean_vx2 = grid.integrate([&](const MicroState& s) { return s.v.x * s.v.x * maxwellian(p, s); });
        EXPECT_NEAR(mean_i, 0.5 * d, 1e-6);
        EXPECT_NEAR(mean_vx2, 1.0, 1e-6);
    }
}

TEST(Maxwellian, TemperatureFamily) {
    const PhaseGrid grid(20.0, 80.0, 40, 40);
    const GasParams p = gas(3);
    const double mass = grid.integrate([&](const MicroState& s) { return maxwellian_at(p, 2.0, s); });
    EXPECT_NEAR(mass, 1.0, 1e-6);
    const MicroState s{{0.5, -0.2, 1.0}, 0.7};
    EXPECT_NEAR(maxwellian_at(p, 1.0, s), maxwellian(p, s), 1e-16);
    EXPECT_THROW(maxwellian_at(p, 0.0, s), std::invalid_argument);
}

TEST(Weight, Examples) {
    GasParams p;
    p.beta = 8.0;
    EXPECT_EQ(weight(p, {}), 1.0);
    p.beta = 11.3;
    EXPECT_EQ(weight(p, {}), 1.0);
    p.beta = 8.0;
    EXPECT_DOUBLE_EQ(weight(p, {{3.0, 0.0, 0.0}, 4.0}), 1679616.0);
}

TEST(Weight, MonotoneInSpeedAndInternalEnergy) {
    const GasParams p;
    double prev = 0.0;
    for (int k = 0; k <= 40; ++k) {
        const double w = weight(p, {{0.25 * k, 0.0, 0.0}, 1.0});
        EXPECT_GT(w, prev);
        prev = w;
    }
    prev = 0.0;
    for (int k = 0; k <= 40; ++k) {
        const double w = weight(p, {{1.0, 0.0, 0.0}, 0.25 * k});
        EXPECT_GT(w, prev);
        prev = w;
    }
}

TEST(TransitionB, Examples) {
    const PairState p{{{1.0, 0.0, 0.0}, 0.5}, {{-1.0, 0.0, 0.0}, 0.5}};
    EXPECT_DOUBLE_EQ(transition_b(gas(2, 0.0), p), 2.0);
    EXPECT_NEAR(transition_b(gas(2, 1.0), p), std::sqrt(2.0), 1e-15);
    EXPECT_NEAR(transition_b(gas(2, 1.999999), p), 1.0, 1e-6);
}

TEST(TransitionB, SymmetricAndTranslationInvariant) {
    std::mt19937_64 rng(5);
    std::normal_distribution<double> n(0.0, 2.0);
    std::exponential_distribution<double> e(1.0);
    for (double alpha : {0.0, 0.7, 1.5}) {
        const GasParams p = gas(2, alpha);
        for (int k = 0; k < 200; ++k) {
            const MicroState a{{n(rng), n(rng), n(rng)}, e(rng)};
            const MicroState b{{n(rng), n(rng), n(rng)}, e(rng)};
            const Vec3 shift{n(rng), n(rng), n(rng)};
            const double bab = transition_b(p, PairState{a, b});
            EXPECT_NEAR(bab, transition_b(p, PairState{b, a}), 1e-15 * bab);
            const MicroState as{a.v + shift, a.i_energy};
            const MicroState bs{b.v + shift, b.i_energy};
            EXPECT_NEAR(transition_b(p, PairState{as, bs}), bab, 1e-12 * (1.0 + bab));
        }
    }
}

TEST(TransitionB, ZeroOnlyForRestingPairWithoutInternalEnergy) {
    const GasParams p;
    EXPECT_EQ(transition_b(p, PairState{{{1.0, 2.0, 3.0}, 0.0}, {{1.0, 2.0, 3.0}, 0.0}}), 0.0);
    EXPECT_GT(transition_b(p, PairState{{{1.0, 2.0, 3.0}, 1e-9}, {{1.0, 2.0, 3.0}, 0.0}}), 0.0);
}

TEST(TotalEnergy, Examples) {
    const PairState p{{{1.0, 0.0, 0.0}, 0.5}, {{-1.0, 0.0, 0.0}, 0.5}};
    EXPECT_DOUBLE_EQ(total_energy(p), 2.0);
    EXPECT_EQ(total_energy(PairState{{{0.3, 0.1, 0.0}, 0.0}, {{0.3, 0.1, 0.0}, 0.0}}), 0.0);
    const PairState q{{{0.2, -1.0, 3.0}, 0.1}, {{1.5, 0.0, -2.0}, 4.0}};
    EXPECT_NEAR(total_energy(q), total_energy(PairState{q.b, q.a}), 1e-15 * total_energy(q));
}

TEST(MicroState, Validity) {
    EXPECT_TRUE((MicroState{{0, 0, 0}, 0.0}).valid());
    EXPECT_FALSE((MicroState{{0, 0, 0}, -1e-300}).valid());
    EXPECT_FALSE((MicroState{{std::nan(""), 0, 0}, 1.0}).valid());
    EXPECT_FALSE((MicroState{{0, 0, 0}, INFINITY}).valid());
}

TEST(NuGrowth, MatchesProfile) {
    const MicroState s{{3.0, 0.0, 4.0}, 9.0};
    EXPECT_DOUBLE_EQ(nu_growth(gas(2, 0.0), s), 81.0);
    EXPECT_DOUBLE_EQ(nu_growth(gas(2, 1.0), s), 9.0);
}
