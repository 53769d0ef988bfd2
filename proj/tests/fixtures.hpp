#pragma once

// Reference values produced by tests/oracles/fixtures.py (scipy/mpmath
// quadrature, independent of this library). Regenerate with
//   python3 tests/oracles/fixtures.py

namespace fixtures {

inline constexpr double c_delta_2 = 3.3510321638291125;
inline constexpr double c_delta_4 = 0.2127639469097849;

inline constexpr double nu_origin_d2_a0 = 5.86430628670097;
inline constexpr double nu_origin_d2_a1 = 4.19989598552597859847750559852;

// nu / (1 + |v| + sqrt I)^{2 - alpha} over |v| in {0, 0.5, ..., 10},
// sqrt I in {0, 0.5, ..., 5}, delta = 2
inline constexpr double equiv_ratio_a0_min = 0.6021979568785877;
inline constexpr double equiv_ratio_a0_max = 5.864306286700947;
inline constexpr double equiv_ratio_a1_min = 1.4105620831377563;
inline constexpr double equiv_ratio_a1_max = 4.199896238435662;

// integral of |k1(s, .) w(s)/w(.)|^2 at s = (0, I = 1), delta 2, alpha 0, beta 8
inline constexpr double k1_l2_origin_i1 = 0.15930447491078842;

// integral of M ln M
inline constexpr double h_maxwellian_d2 = -5.2568155996140185;
inline constexpr double h_maxwellian_d3 = -5.617788374989484;
inline constexpr double h_maxwellian_d5 = -5.986763509119072;

// E[(|v|^2/4 + I)^{1/2}] under M, delta = 2
inline constexpr double mean_sqrt_pair_energy = 1.25331413731550025120788264241;

}  // namespace fixtures
