#pragma once

// Smooth bounded random fields over (v, I), used to generate test
// perturbations g with a prescribed range.

#include <array>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "polykin/core_model.hpp"
#include "polykin/random.hpp"

namespace polykin {

/// h(v, I) = sum_k c_k cos(k_k . v + l_k sqrt(I) + phase_k) with sum |c_k| = 1,
/// so h takes values in [-1, 1]. Wave numbers are O(1) in thermal units.
class RandomField {
public:
    static constexpr int n_modes = 6;

    explicit RandomField(Rng& rng) {
        std::normal_distribution<double> normal(0.0, 1.0);
        double total = 0.0;
        for (Mode& m : modes_) {
            m.k = {normal(rng), normal(rng), normal(rng)};
            m.l = 2.0 * normal(rng);
            m.phase = 2.0 * std::numbers::pi * uniform01(rng);
            m.c = uniform01(rng) + 0.05;
            total += m.c;
        }
        for (Mode& m : modes_) m.c /= total;
    }

    [[nodiscard]] double operator()(const MicroState& s) const noexcept {
        const double t = std::sqrt(s.i_energy);
        double h = 0.0;
        for (const Mode& m : modes_) h += m.c * std::cos(dot(m.k, s.v) + m.l * t + m.phase);
        return h;
    }

    /// Maps h affinely onto [lo, hi].
    [[nodiscard]] double in_range(const MicroState& s, double lo, double hi) const noexcept {
        return lo + (hi - lo) * 0.5 * ((*this)(s) + 1.0);
    }

private:
    struct Mode {
        Vec3 k;
        double l = 0.0;
        double phase = 0.0;
        double c = 0.0;
    };
    std::array<Mode, n_modes> modes_{};
};

}  // namespace polykin
