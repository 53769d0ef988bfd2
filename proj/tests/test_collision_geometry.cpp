#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <boost/math/special_functions/beta.hpp>
#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "polykin/collision_geometry.hpp"
#include "polykin/equilibrium.hpp"
#include "polykin/stats.hpp"

using namespace polykin;

namespace {

GasParams gas(double delta, double alpha = 0.0) {
    GasParams p;
    p.delta = delta;
    p.alpha = alpha;
    return p;
}

// Regularized incomplete beta by direct quadrature of the density.
double beta_cdf_quadrature(double a, double b, double x) {
    boost::math::quadrature::tanh_sinh<double> ts;
    auto dens = [&](double t) { return std::pow(t, a - 1.0) * std::pow(1.0 - t, b - 1.0); };
    return ts.integrate(dens, 0.0, x) / ts.integrate(dens, 0.0, 1.0);
}

PairState random_pair(Rng& rng) {
    std::normal_distribution<double> n(0.0, 2.0);
    std::exponential_distribution<double> e(0.5);
    return {{{n(rng), n(rng), n(rng)}, e(rng)}, {{n(rng), n(rng), n(rng)}, e(rng)}};
}

}  // namespace

TEST(ApplyCollision, HeadOnExample) {
    const PairState p{{{1.0, 0.0, 0.0}, 0.5}, {{-1.0, 0.0, 0.0}, 0.5}};
    const PairState q = apply_collision(p, CollisionAngles{{0.0, 0.0, 1.0}, 0.5, 0.5});
    EXPECT_NEAR(q.a.v.x, 0.0, 1e-15);
    EXPECT_NEAR(q.a.v.z, 1.0, 1e-15);
    EXPECT_NEAR(q.b.v.z, -1.0, 1e-15);
    EXPECT_NEAR(q.a.i_energy, 0.5, 1e-15);
    EXPECT_NEAR(q.b.i_energy, 0.5, 1e-15);
}

TEST(ApplyCollision, AllKineticWhenRIsOne) {
    Rng rng(1);
    const PairState p = random_pair(rng);
    const PairState q = apply_collision(p, CollisionAngles{{0.6, 0.0, 0.8}, 1.0, 0.3});
    EXPECT_EQ(q.a.i_energy, 0.0);
    EXPECT_EQ(q.b.i_energy, 0.0);
}

TEST(ApplyCollision, AllInternalWhenRIsZero) {
    Rng rng(2);
    const PairState p = random_pair(rng);
    const double e = total_energy(p);
    const PairState q = apply_collision(p, CollisionAngles{{0.0, 1.0, 0.0}, 0.0, 0.25});
    const Vec3 g = 0.5 * (p.a.v + p.b.v);
    EXPECT_EQ(q.a.v, g);
    EXPECT_EQ(q.b.v, g);
    EXPECT_NEAR(q.a.i_energy, 0.25 * e, 1e-14 * e);
    EXPECT_NEAR(q.b.i_energy, 0.75 * e, 1e-14 * e);
}

TEST(ApplyCollision, DegenerateZeroEnergyPair) {
    const PairState p{{{0.4, 0.4, 0.4}, 0.0}, {{0.4, 0.4, 0.4}, 0.0}};
    const PairState q = apply_collision(p, CollisionAngles{});
    EXPECT_EQ(q.a.v, p.a.v);
    EXPECT_EQ(q.b.v, p.b.v);
    EXPECT_EQ(q.a.i_energy, 0.0);
    EXPECT_EQ(q.b.i_energy, 0.0);
}

TEST(ApplyCollision, ConservesMomentumAndEnergy) {
    Rng rng(7);
    AngleSampler angles(gas(3.0));
    double worst_p = 0.0;
    double worst_e = 0.0;
    for (int k = 0; k < 200000; ++k) {
        const PairState p = random_pair(rng);
        const PairState q = apply_collision(p, angles(rng));
        ASSERT_GE(q.a.i_energy, 0.0);
        ASSERT_GE(q.b.i_energy, 0.0);
        const Vec3 mom = p.a.v + p.b.v;
        const double scale = std::sqrt(2.0 * (p.a.energy() + p.b.energy()));
        worst_p = std::max(worst_p, norm(q.a.v + q.b.v - mom) / scale);
        const double e0 = p.a.energy() + p.b.energy();
        worst_e = std::max(worst_e, std::abs(q.a.energy() + q.b.energy() - e0) / e0);
    }
    EXPECT_LE(worst_p, 1e-12);
    EXPECT_LE(worst_e, 1e-12);
}

TEST(CollisionRateFactor, DeltaTwoClosedForm) {
    EXPECT_NEAR(collision_rate_factor(gas(2)), 16.0 * std::numbers::pi / 15.0, 1e-12);
    EXPECT_NEAR(collision_rate_factor(gas(2)), fixtures::c_delta_2, 1e-12);
}

TEST(CollisionRateFactor, MatchesOneDimensionalQuadrature) {
    boost::math::quadrature::tanh_sinh<double> ts;
    for (double d : {2.0, 2.5, 3.0, 4.0, 5.0, 9.0}) {
        const double big_r = ts.integrate([&](double r) { return std::sqrt(r) * std::pow(1.0 - r, d - 1.0); }, 0.0, 1.0);
        const double small_r =
            ts.integrate([&](double r) { return std::pow(r * (1.0 - r), 0.5 * d - 1.0); }, 0.0, 1.0);
        const double oracle = 4.0 * std::numbers::pi * big_r * small_r;
        EXPECT_NEAR(collision_rate_factor(gas(d)), oracle, 1e-10 * oracle) << "delta " << d;
        EXPECT_GT(collision_rate_factor(gas(d)), 0.0);
    }
    EXPECT_NEAR(collision_rate_factor(gas(4)), fixtures::c_delta_4, 1e-12);
    EXPECT_NEAR(collision_rate_factor(gas(4)), 4.0 * std::numbers::pi / 6.0 * 32.0 / 315.0, 1e-13);
}

TEST(SampleAngles, MeansAndUnitDirection) {
    for (double d : {2.0, 5.0}) {
        Rng rng(11);
        AngleSampler s(gas(d));
        const int n = 200000;
        double sr = 0.0, ss = 0.0;
        Vec3 mean_dir{};
        for (int k = 0; k < n; ++k) {
            const CollisionAngles c = s(rng);
            ASSERT_TRUE(c.valid());
            sr += c.big_r;
            ss += c.small_r;
            mean_dir = mean_dir + c.omega;
        }
        const double mean_r = 1.5 / (1.5 + d);
        const double sd_r = std::sqrt(mean_r * (1.0 - mean_r) / (2.5 + d) / n);
        EXPECT_NEAR(sr / n, mean_r, 5.0 * sd_r);
        EXPECT_NEAR(ss / n, 0.5, 5.0 * std::sqrt(0.25 / (d + 1.0) / n));
        EXPECT_LT(norm((1.0 / n) * mean_dir), 5.0 * std::sqrt(1.0 / (3.0 * n)) * std::sqrt(3.0));
    }
    Rng rng(1);
    EXPECT_NEAR(sample_angles(gas(2), rng).big_r, 3.0 / 7.0, 0.5);
}

TEST(SampleAngles, BetaCdfOracleAgreesWithIncompleteBeta) {
    for (double x : {0.01, 0.2, 0.5, 0.77, 0.99}) {
        EXPECT_NEAR(beta_cdf_quadrature(1.5, 2.0, x), boost::math::ibeta(1.5, 2.0, x), 1e-10);
        EXPECT_NEAR(beta_cdf_quadrature(1.5, 3.0, x), boost::math::ibeta(1.5, 3.0, x), 1e-10);
        EXPECT_NEAR(beta_cdf_quadrature(1.5, 1.5, x), boost::math::ibeta(1.5, 1.5, x), 1e-10);
    }
}

TEST(SampleAngles, KolmogorovSmirnovAgainstBeta) {
    for (double d : {2.0, 3.0}) {
        Rng rng(2024);
        AngleSampler s(gas(d));
        const int n = 1000000;
        std::vector<double> big(n), small(n);
        for (int k = 0; k < n; ++k) {
            const CollisionAngles c = s(rng);
            big[k] = c.big_r;
            small[k] = c.small_r;
        }
        const double ks_big = stats::ks_statistic(big, [&](double x) { return boost::math::ibeta(1.5, d, x); });
        const double ks_small =
            stats::ks_statistic(small, [&](double x) { return boost::math::ibeta(0.5 * d, 0.5 * d, x); });
        EXPECT_LT(ks_big, 0.002) << "delta " << d;
        EXPECT_LT(ks_small, 0.002) << "delta " << d;
    }
}

TEST(SampleAngles, JointChiSquareOnTwentyByTwenty) {
    const double d = 2.5;
    Rng rng(99);
    AngleSampler s(gas(d));
    const int bins = 20;
    const int n = 1000000;
    std::vector<double> counts(bins * bins, 0.0);
    for (int k = 0; k < n; ++k) {
        const CollisionAngles c = s(rng);
        const int i = std::min(bins - 1, static_cast<int>(c.big_r * bins));
        const int j = std::min(bins - 1, static_cast<int>(c.small_r * bins));
        counts[i * bins + j] += 1.0;
    }
    double chi2 = 0.0;
    for (int i = 0; i < bins; ++i) {
        const double pi = boost::math::ibeta(1.5, d, (i + 1.0) / bins) - boost::math::ibeta(1.5, d, double(i) / bins);
        for (int j = 0; j < bins; ++j) {
            const double pj = boost::math::ibeta(0.5 * d, 0.5 * d, (j + 1.0) / bins) -
                              boost::math::ibeta(0.5 * d, 0.5 * d, double(j) / bins);
            const double expected = n * pi * pj;
            const double diff = counts[i * bins + j] - expected;
            chi2 += diff * diff / expected;
        }
    }
    const boost::math::chi_squared dist(bins * bins - 1);
    EXPECT_LT(chi2, boost::math::quantile(dist, 0.999));
}

TEST(EquilibriumFixedPoint, MaxwellianIsInvariant) {
    for (double d : {2.0, 4.0}) {
        const MarginalKs ks = collision_fixed_point(gas(d), 1.0, 100000, 5);
        EXPECT_LT(ks.speed, 0.01) << "delta " << d;
        EXPECT_LT(ks.i_energy, 0.01) << "delta " << d;
        EXPECT_LT(ks.worst(), 0.01) << "delta " << d;
    }
    const MarginalKs hot = collision_fixed_point(gas(3, 1.0), 2.5, 100000, 6);
    EXPECT_LT(hot.worst(), 0.01);
}

TEST(EquilibriumFixedPoint, DetectsAWrongEnergySplit) {
    // R drawn uniformly instead of Beta(3/2, delta) breaks detailed balance.
    const GasParams p = gas(2);
    AngleSampler exact(p);
    auto wrong = [&](Rng& rng) {
        CollisionAngles c = exact(rng);
        c.big_r = uniform01(rng);
        return c;
    };
    const MarginalKs ks = collision_fixed_point_with(p, 1.0, 100000, 5, 0, wrong);
    EXPECT_GT(ks.worst(), 0.01);
}
