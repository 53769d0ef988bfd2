#pragma once

// Direct simulation Monte Carlo on the unit torus T^3.
//
// Each step is free transport x <- x + v dt (mod 1) followed by binary
// Borgnakke-Larsen collisions inside n_cells^3 spatial cells. Candidate
// pairs are generated at a per-cell majorant rate c_delta B_maj and accepted
// with probability B / B_maj (no-time-counter scheme). Every accepted event
// conserves momentum and energy to rounding, so the totals only drift by
// accumulated round-off.
//
// Particles carry statistical weight 1/n_particles, i.e. unit total mass.
// The weighted L-infinity distance to equilibrium cannot be read off a
// particle set; the kinetic/internal energy partition and the first spatial
// Fourier mode of the density serve as observable surrogates for it.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <numbers>
#include <optional>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "polykin/collision_geometry.hpp"
#include "polykin/core_model.hpp"
#include "polykin/equilibrium.hpp"
#include "polykin/parallel.hpp"
#include "polykin/random.hpp"
#include "polykin/stats.hpp"

namespace polykin::dsmc {

struct Particle {
    Vec3 x;
    MicroState state;
};

/// Equilibrium at temperature T.
struct Equilibrium {
    double temperature = 1.0;
};

/// Velocities at T_kin, internal energies at T_int.
struct TwoTemperature {
    double t_kin = 2.0;
    double t_int = 0.1;
};

/// Equilibrium velocities at T with density proportional to 1 + A cos(2 pi x_1).
struct SpatialMode {
    double amplitude = 0.5;
    double temperature = 1.0;
};

using InitialCondition = std::variant<Equilibrium, TwoTemperature, SpatialMode>;

inline void validate(const InitialCondition& init) {
    std::visit(
        [](const auto& ic) {
            using T = std::decay_t<decltype(ic)>;
            if constexpr (std::is_same_v<T, Equilibrium>) {
                if (!(ic.temperature > 0.0)) throw std::invalid_argument("init temperature must be > 0");
            } else if constexpr (std::is_same_v<T, TwoTemperature>) {
                if (!(ic.t_kin > 0.0) || !(ic.t_int > 0.0))
                    throw std::invalid_argument("init temperatures must be > 0");
            } else {
                if (!(ic.temperature > 0.0)) throw std::invalid_argument("init temperature must be > 0");
                if (!(std::abs(ic.amplitude) < 1.0))
                    throw std::invalid_argument("spatial mode amplitude must satisfy |A| < 1");
            }
        },
        init);
}

/// Histogram layout for the entropy estimate over (|v|, I). Zero extents
/// are chosen from the initial ensemble by run().
struct EntropyBins {
    int n_speed = 48;
    double speed_max = 0.0;
    int n_i = 96;
    double i_max = 0.0;
};

struct SimConfig {
    GasParams params;
    std::size_t n_particles = 100000;
    int n_cells = 1;
    /// Time step; 0 selects 0.1 / <nu> estimated from the initial ensemble.
    double dt = 0.0;
    double t_end = 1.0;
    std::uint64_t seed = 1;
    InitialCondition init = Equilibrium{};
    int diag_every = 1;
    EntropyBins bins;

    [[nodiscard]] std::size_t cell_count() const noexcept {
        const auto n = static_cast<std::size_t>(n_cells);
        return n * n * n;
    }

    void validate() const {
        params.validate();
        polykin::dsmc::validate(init);
        if (n_particles < 1000) throw std::invalid_argument("sim.n_particles must be >= 1000");
        if (n_cells < 1) throw std::invalid_argument("sim.n_cells must be >= 1");
        if (static_cast<double>(n_particles) / static_cast<double>(cell_count()) < 50.0)
            throw std::invalid_argument("sim needs at least 50 particles per cell on average");
        if (!(dt >= 0.0) || !std::isfinite(dt)) throw std::invalid_argument("sim.dt must be >= 0");
        if (!(t_end > 0.0) || t_end < dt) throw std::invalid_argument("sim.t_end must be >= dt and > 0");
        if (diag_every < 1) throw std::invalid_argument("sim.diag_every must be >= 1");
        if (bins.n_speed < 1 || bins.n_i < 1) throw std::invalid_argument("entropy bins must be positive");
    }
};

struct Ensemble {
    std::vector<Particle> particles;
    /// Per-cell majorant of B; 0 until the cell is first visited.
    std::vector<double> majorant;
    std::uint64_t majorant_underflows = 0;

    [[nodiscard]] double particle_weight() const noexcept {
        return particles.empty() ? 0.0 : 1.0 / static_cast<double>(particles.size());
    }
};

struct DiagnosticsRow {
    double t = 0.0;
    double kinetic_mean = 0.0;
    double internal_mean = 0.0;
    Vec3 momentum;
    double energy_total = 0.0;
    double h_estimate = 0.0;
    double mode_amplitude = 0.0;
    std::uint64_t collisions_accepted = 0;
};

struct StepStats {
    std::uint64_t candidates = 0;
    std::uint64_t accepted = 0;
    std::uint64_t underflows = 0;
};

// ---------------------------------------------------------------------------

inline Ensemble init_ensemble(const SimConfig& cfg) {
    cfg.validate();
    const double shape = 0.5 * cfg.params.delta;
    double t_kin = 1.0;
    double t_int = 1.0;
    double amplitude = 0.0;
    std::visit(
        [&](const auto& ic) {
            using T = std::decay_t<decltype(ic)>;
            if constexpr (std::is_same_v<T, Equilibrium>) {
                t_kin = t_int = ic.temperature;
            } else if constexpr (std::is_same_v<T, TwoTemperature>) {
                t_kin = ic.t_kin;
                t_int = ic.t_int;
            } else {
                t_kin = t_int = ic.temperature;
                amplitude = ic.amplitude;
            }
        },
        cfg.init);

    Ensemble ens;
    ens.particles.resize(cfg.n_particles);
    ens.majorant.assign(cfg.cell_count(), 0.0);
    constexpr std::size_t chunk = 4096;
    const std::size_t n_chunks = (cfg.n_particles + chunk - 1) / chunk;
    parallel_for(n_chunks, [&](std::size_t c) {
        Rng rng = substream(cfg.seed, StreamTag::init, c);
        std::normal_distribution<double> normal(0.0, std::sqrt(t_kin));
        std::gamma_distribution<double> gamma(shape, t_int);
        const std::size_t end = std::min(cfg.n_particles, (c + 1) * chunk);
        for (std::size_t k = c * chunk; k < end; ++k) {
            Particle& p = ens.particles[k];
            double x1 = uniform01(rng);
            if (amplitude != 0.0) {
                // density 1 + A cos(2 pi x1), by rejection against 1 + |A|
                while (uniform01(rng) * (1.0 + std::abs(amplitude)) >
                       1.0 + amplitude * std::cos(2.0 * std::numbers::pi * x1)) {
                    x1 = uniform01(rng);
                }
            }
            p.x = {x1, uniform01(rng), uniform01(rng)};
            p.state.v = {normal(rng), normal(rng), normal(rng)};
            p.state.i_energy = gamma(rng);
        }
    });
    return ens;
}

inline double wrap_unit(double x) noexcept {
    double y = x - std::floor(x);
    return y >= 1.0 ? 0.0 : y;
}

/// Free transport on the torus: x <- (x + v dt) mod 1.
inline void advect(Ensemble& ens, double dt) {
    if (dt == 0.0) return;
    constexpr std::size_t chunk = 16384;
    const std::size_t n = ens.particles.size();
    parallel_for((n + chunk - 1) / chunk, [&](std::size_t c) {
        const std::size_t end = std::min(n, (c + 1) * chunk);
        for (std::size_t k = c * chunk; k < end; ++k) {
            Particle& p = ens.particles[k];
            p.x.x = wrap_unit(p.x.x + p.state.v.x * dt);
            p.x.y = wrap_unit(p.x.y + p.state.v.y * dt);
            p.x.z = wrap_unit(p.x.z + p.state.v.z * dt);
        }
    });
}

inline std::size_t cell_of(const Vec3& x, int n_cells) noexcept {
    auto axis = [n_cells](double c) {
        auto k = static_cast<int>(c * n_cells);
        return static_cast<std::size_t>(std::clamp(k, 0, n_cells - 1));
    };
    const auto n = static_cast<std::size_t>(n_cells);
    return axis(x.x) + n * (axis(x.y) + n * axis(x.z));
}

/// Particle indices grouped by cell, each group in increasing index order.
struct CellIndex {
    std::vector<std::size_t> offsets;  // size n_cells^3 + 1
    std::vector<std::size_t> members;
};

inline CellIndex build_cells(const Ensemble& ens, int n_cells) {
    const std::size_t n_total = static_cast<std::size_t>(n_cells) * n_cells * n_cells;
    CellIndex idx;
    idx.offsets.assign(n_total + 1, 0);
    std::vector<std::size_t> cell(ens.particles.size());
    for (std::size_t k = 0; k < ens.particles.size(); ++k) {
        cell[k] = cell_of(ens.particles[k].x, n_cells);
        ++idx.offsets[cell[k] + 1];
    }
    for (std::size_t c = 0; c < n_total; ++c) idx.offsets[c + 1] += idx.offsets[c];
    idx.members.resize(ens.particles.size());
    std::vector<std::size_t> cursor(idx.offsets.begin(), idx.offsets.end() - 1);
    for (std::size_t k = 0; k < ens.particles.size(); ++k) idx.members[cursor[cell[k]]++] = k;
    return idx;
}

namespace detail {

inline void pick_pair(Rng& rng, std::size_t n, std::size_t& i, std::size_t& j) {
    std::uniform_int_distribution<std::size_t> first(0, n - 1);
    std::uniform_int_distribution<std::size_t> second(0, n - 2);
    i = first(rng);
    j = second(rng);
    if (j >= i) ++j;
}

/// Empirical max of B over random pairs of a cell, inflated by 1.5.
inline double initial_majorant(const GasParams& params, const Ensemble& ens,
                               std::span<const std::size_t> members, Rng& rng) {
    const std::size_t n = members.size();
    const std::size_t n_pairs = std::min<std::size_t>(n * (n - 1) / 2, std::min<std::size_t>(4 * n, 100000));
    double best = 0.0;
    for (std::size_t k = 0; k < n_pairs; ++k) {
        std::size_t i = 0, j = 0;
        pick_pair(rng, n, i, j);
        best = std::max(best, transition_b(params, PairState{ens.particles[members[i]].state,
                                                              ens.particles[members[j]].state}));
    }
    return 1.5 * best;
}

}  // namespace detail

/// One collision step over every cell. Per cell with N particles and volume
/// V the candidate count has mean N (N - 1) W_p c_delta B_maj dt / (2 V);
/// its fractional part is resolved by a Bernoulli draw. A candidate with
/// B > B_maj is accepted outright and raises the majorant (counted as an
/// underflow). RNG substreams are keyed by (seed, step_index, cell).
inline StepStats collide_step(Ensemble& ens, const SimConfig& cfg, std::uint64_t step_index) {
    StepStats total;
    if (ens.particles.size() < 2 || cfg.dt == 0.0) return total;
    const CellIndex cells = build_cells(ens, cfg.n_cells);
    const std::size_t n_cells = cfg.cell_count();
    if (ens.majorant.size() != n_cells) ens.majorant.assign(n_cells, 0.0);
    const double c_delta = collision_rate_factor(cfg.params);
    const double w_p = ens.particle_weight();
    const double v_cell = 1.0 / static_cast<double>(n_cells);
    std::vector<StepStats> per_cell(n_cells);

    parallel_for(n_cells, [&](std::size_t c) {
        const std::span<const std::size_t> members(cells.members.data() + cells.offsets[c],
                                                   cells.offsets[c + 1] - cells.offsets[c]);
        const std::size_t n = members.size();
        if (n < 2) return;
        double& b_maj = ens.majorant[c];
        if (b_maj <= 0.0) {
            Rng scan = substream(cfg.seed, StreamTag::majorant, c);
            b_maj = detail::initial_majorant(cfg.params, ens, members, scan);
            if (b_maj <= 0.0) return;
        }
        Rng rng = substream(cfg.seed, StreamTag::collide, step_index, c);
        const double nd = static_cast<double>(n);
        const double expected = nd * (nd - 1.0) * w_p * c_delta * b_maj * cfg.dt / (2.0 * v_cell);
        auto n_cand = static_cast<std::uint64_t>(std::floor(expected));
        if (uniform01(rng) < expected - std::floor(expected)) ++n_cand;

        AngleSampler angles(cfg.params);
        StepStats& st = per_cell[c];
        st.candidates = n_cand;
        for (std::uint64_t k = 0; k < n_cand; ++k) {
            std::size_t i = 0, j = 0;
            detail::pick_pair(rng, n, i, j);
            Particle& pa = ens.particles[members[i]];
            Particle& pb = ens.particles[members[j]];
            const PairState pre{pa.state, pb.state};
            const double b = transition_b(cfg.params, pre);
            const double u = uniform01(rng);
            if (b > b_maj) {
                ++st.underflows;
                b_maj = b;
            } else if (u * b_maj >= b) {
                continue;
            }
            const PairState post = apply_collision(pre, angles(rng));
            pa.state = post.a;
            pb.state = post.b;
            ++st.accepted;
        }
    });

    for (const StepStats& s : per_cell) {
        total.candidates += s.candidates;
        total.accepted += s.accepted;
        total.underflows += s.underflows;
    }
    ens.majorant_underflows += total.underflows;
    return total;
}

/// Bulk velocity and temperatures of an ensemble. t_eq is the common
/// temperature the thermal energy relaxes to: (3 + delta)/2 t_eq equals the
/// thermal energy per unit mass.
struct ThermalState {
    Vec3 bulk;
    double t_kin = 0.0;
    double t_int = 0.0;
    double t_eq = 0.0;
};

inline ThermalState thermal_state(const Ensemble& ens, const GasParams& params) {
    if (ens.particles.empty()) throw std::invalid_argument("thermal state of an empty ensemble");
    CompensatedSum px, py, pz, kin, internal;
    for (const Particle& p : ens.particles) {
        px += p.state.v.x;
        py += p.state.v.y;
        pz += p.state.v.z;
        kin += 0.5 * norm2(p.state.v);
        internal += p.state.i_energy;
    }
    const double n = static_cast<double>(ens.particles.size());
    ThermalState th;
    th.bulk = {px.value() / n, py.value() / n, pz.value() / n};
    const double kin_thermal = kin.value() / n - 0.5 * norm2(th.bulk);
    const double int_mean = internal.value() / n;
    th.t_kin = kin_thermal / 1.5;
    th.t_int = int_mean / (0.5 * params.delta);
    th.t_eq = 2.0 * (kin_thermal + int_mean) / (3.0 + params.delta);
    return th;
}

/// Mean collision frequency c_delta <B> over random particle pairs, i.e.
/// the spatially homogeneous per-particle collision rate.
inline double mean_collision_frequency(const Ensemble& ens, const GasParams& params, std::uint64_t seed,
                                       std::size_t n_pairs = 20000) {
    const std::size_t n = ens.particles.size();
    if (n < 2) throw std::invalid_argument("collision frequency needs at least two particles");
    Rng rng = substream(seed, StreamTag::check, 2);
    CompensatedSum acc;
    for (std::size_t k = 0; k < n_pairs; ++k) {
        std::size_t i = 0, j = 0;
        detail::pick_pair(rng, n, i, j);
        acc += transition_b(params, PairState{ens.particles[i].state, ens.particles[j].state});
    }
    return collision_rate_factor(params) * acc.value() / static_cast<double>(n_pairs);
}

/// Fills zero histogram extents from the initial ensemble's temperature scale.
inline EntropyBins resolve_bins(EntropyBins bins, const Ensemble& ens, const GasParams& params) {
    if (bins.speed_max > 0.0 && bins.i_max > 0.0) return bins;
    const ThermalState th = thermal_state(ens, params);
    const double t_hi = std::max({th.t_kin, th.t_int, th.t_eq});
    if (bins.speed_max <= 0.0) bins.speed_max = 6.0 * std::sqrt(t_hi) + norm(th.bulk);
    if (bins.i_max <= 0.0) bins.i_max = t_hi * (params.delta + 24.0);
    return bins;
}

/// Histogram estimate of the H functional over (v, I),
///
///   H = sum_bins p ln p * vol - (delta/2 - 1) <ln I> - (K - 1) / (2 N),
///
/// where p = count / (N vol) is the density in (v, I). Bins are uniform in
/// speed and in sqrt(I), so vol = 4 pi/3 (s_hi^3 - s_lo^3) (I_hi - I_lo);
/// the sqrt(I) spacing resolves cold internal distributions near I = 0.
/// The <ln I> term removes the I^{delta/2-1} density of states so the
/// functional is the one that is non-increasing under collisions for every
/// delta; it vanishes for delta = 2. The last term is the Miller-Madow
/// correction for K occupied bins. Samples beyond the last bin are counted
/// in the last bin.
inline double entropy_estimate(const Ensemble& ens, const EntropyBins& bins, const GasParams& params) {
    if (ens.particles.empty()) throw std::invalid_argument("entropy estimate of an empty ensemble");
    if (!(bins.speed_max > 0.0) || !(bins.i_max > 0.0))
        throw std::invalid_argument("entropy bins need positive extents");
    const double ds = bins.speed_max / bins.n_speed;
    const double dt = std::sqrt(bins.i_max) / bins.n_i;
    std::vector<std::uint32_t> counts(static_cast<std::size_t>(bins.n_speed) * bins.n_i, 0);
    CompensatedSum log_i;
    const double a = params.internal_power();
    for (const Particle& p : ens.particles) {
        const int ks = std::min(bins.n_speed - 1, static_cast<int>(norm(p.state.v) / ds));
        const int ki = std::min(bins.n_i - 1, static_cast<int>(std::sqrt(p.state.i_energy) / dt));
        ++counts[static_cast<std::size_t>(ks) * bins.n_i + ki];
        if (a != 0.0) log_i += std::log(std::max(p.state.i_energy, 1e-300));
    }
    const double n = static_cast<double>(ens.particles.size());
    CompensatedSum h;
    std::size_t occupied = 0;
    for (int ks = 0; ks < bins.n_speed; ++ks) {
        const double lo = ks * ds;
        const double hi = lo + ds;
        const double shell = 4.0 * std::numbers::pi / 3.0 * (hi * hi * hi - lo * lo * lo);
        for (int ki = 0; ki < bins.n_i; ++ki) {
            const std::uint32_t c = counts[static_cast<std::size_t>(ks) * bins.n_i + ki];
            if (c == 0) continue;
            ++occupied;
            const double t_lo = ki * dt;
            const double t_hi = t_lo + dt;
            const double mass = c / n;
            h += mass * std::log(mass / (shell * (t_hi * t_hi - t_lo * t_lo)));
        }
    }
    double out = h.value() - static_cast<double>(occupied - 1) / (2.0 * n);
    if (a != 0.0) out -= a * log_i.value() / n;
    return out;
}

/// |sum_k W_p exp(2 pi i x_1)|, the first Fourier mode of the density along x_1.
inline double mode_amplitude(const Ensemble& ens) {
    CompensatedSum re, im;
    for (const Particle& p : ens.particles) {
        const double phase = 2.0 * std::numbers::pi * p.x.x;
        re += std::cos(phase);
        im += std::sin(phase);
    }
    return std::hypot(re.value(), im.value()) * ens.particle_weight();
}

inline DiagnosticsRow diagnose(const Ensemble& ens, const GasParams& params, const EntropyBins& bins, double t,
                               std::uint64_t accepted) {
    CompensatedSum px, py, pz, kin, internal;
    for (const Particle& p : ens.particles) {
        px += p.state.v.x;
        py += p.state.v.y;
        pz += p.state.v.z;
        kin += 0.5 * norm2(p.state.v);
        internal += p.state.i_energy;
    }
    const double w = ens.particle_weight();
    DiagnosticsRow row;
    row.t = t;
    row.kinetic_mean = kin.value() * w;
    row.internal_mean = internal.value() * w;
    row.momentum = {px.value() * w, py.value() * w, pz.value() * w};
    row.energy_total = (kin.value() + internal.value()) * w;
    row.h_estimate = entropy_estimate(ens, bins, params);
    row.mode_amplitude = mode_amplitude(ens);
    row.collisions_accepted = accepted;
    return row;
}

struct RunResult {
    std::vector<DiagnosticsRow> rows;
    double dt = 0.0;
    std::uint64_t steps = 0;
    std::uint64_t collisions = 0;
    std::uint64_t majorant_underflows = 0;
    EntropyBins bins;
    Ensemble final_state;
};

using RowSink = std::function<void(const DiagnosticsRow&)>;

/// Resolves dt = 0 to 0.1 / <nu> of the initial ensemble.
inline double resolve_time_step(const SimConfig& cfg, const Ensemble& ens) {
    if (cfg.dt > 0.0) return cfg.dt;
    return 0.1 / mean_collision_frequency(ens, cfg.params, cfg.seed);
}

/// Full simulation: advect then collide each step (first-order splitting),
/// with a diagnostics row at t = 0, every diag_every steps and at the end.
/// Rows are handed to sink as they are produced.
inline RunResult run(const SimConfig& cfg_in, const RowSink& sink = {}) {
    SimConfig cfg = cfg_in;
    cfg.validate();
    RunResult res;
    Ensemble ens = init_ensemble(cfg);
    cfg.dt = resolve_time_step(cfg, ens);
    cfg.bins = resolve_bins(cfg.bins, ens, cfg.params);
    const auto n_steps = static_cast<std::uint64_t>(std::max(1.0, std::round(cfg.t_end / cfg.dt)));
    res.dt = cfg.dt;
    res.steps = n_steps;
    res.bins = cfg.bins;

    auto emit = [&](double t, std::uint64_t accepted) {
        res.rows.push_back(diagnose(ens, cfg.params, cfg.bins, t, accepted));
        if (sink) sink(res.rows.back());
    };
    emit(0.0, 0);
    std::uint64_t since_last = 0;
    for (std::uint64_t step = 1; step <= n_steps; ++step) {
        advect(ens, cfg.dt);
        const StepStats st = collide_step(ens, cfg, step);
        since_last += st.accepted;
        res.collisions += st.accepted;
        if (step % static_cast<std::uint64_t>(cfg.diag_every) == 0 || step == n_steps) {
            emit(static_cast<double>(step) * cfg.dt, since_last);
            since_last = 0;
        }
    }
    res.majorant_underflows = ens.majorant_underflows;
    res.final_state = std::move(ens);
    return res;
}

/// Equilibrium temperature implied by a diagnostics row of a unit-mass
/// ensemble: the thermal energy e_tot - |p|^2/2 spread over 3 + delta
/// quadratic degrees of freedom.
inline double equilibrium_temperature(const DiagnosticsRow& row, const GasParams& params) {
    return 2.0 * (row.energy_total - 0.5 * norm2(row.momentum)) / (3.0 + params.delta);
}

/// Largest relative drift of total energy over the run, and of the momentum
/// vector measured against the thermal momentum scale sqrt(2 e_tot).
struct ConservationDrift {
    double energy = 0.0;
    double momentum = 0.0;
};

inline ConservationDrift conservation_drift(std::span<const DiagnosticsRow> rows) {
    ConservationDrift d;
    if (rows.empty()) return d;
    const DiagnosticsRow& first = rows.front();
    const double e0 = first.energy_total;
    const double p_scale = std::sqrt(2.0 * std::abs(e0));
    for (const DiagnosticsRow& r : rows) {
        d.energy = std::max(d.energy, std::abs(r.energy_total - e0) / std::abs(e0));
        d.momentum = std::max(d.momentum, norm(r.momentum - first.momentum) / p_scale);
    }
    return d;
}

/// Relaxation of the internal energy toward delta T_eq / 2.
///
/// The window is the initial run of rows whose deviation exceeds
/// floor_factor times the equilibrium standard error of <I>, which is
/// T_eq sqrt(delta/2) / sqrt(N). Over the window, h_spearman is the rank
/// correlation of the moving-averaged h_estimate with t, and log_fit is
/// the least-squares line through log |deviation| against t.
struct RelaxationReport {
    double t_eq = 0.0;
    double target = 0.0;
    double floor = 0.0;
    std::size_t window_rows = 0;
    double h_spearman = 0.0;
    stats::LinearFit log_fit;
};

inline RelaxationReport analyze_relaxation(std::span<const DiagnosticsRow> rows, const GasParams& params,
                                           std::size_t n_particles, double floor_factor = 3.0,
                                           std::size_t smooth_half = 2) {
    RelaxationReport rep;
    if (rows.empty() || n_particles == 0) return rep;
    rep.t_eq = equilibrium_temperature(rows.front(), params);
    rep.target = 0.5 * params.delta * rep.t_eq;
    rep.floor = rep.t_eq * std::sqrt(0.5 * params.delta / static_cast<double>(n_particles));
    std::vector<double> t, h, log_dev;
    for (const DiagnosticsRow& r : rows) {
        const double dev = std::abs(r.internal_mean - rep.target);
        if (dev <= floor_factor * rep.floor) break;
        t.push_back(r.t);
        h.push_back(r.h_estimate);
        log_dev.push_back(std::log(dev));
    }
    rep.window_rows = t.size();
    if (t.size() >= 3) {
        const auto smooth = stats::moving_average(h, smooth_half);
        rep.h_spearman = stats::spearman(t, smooth);
        rep.log_fit = stats::linear_fit(t, log_dev);
    }
    return rep;
}

/// Mean of mode_amplitude over the trailing fraction of rows.
inline double tail_mode_amplitude(std::span<const DiagnosticsRow> rows, double fraction = 0.1) {
    if (rows.empty()) return 0.0;
    const auto n = std::max<std::size_t>(1, static_cast<std::size_t>(fraction * static_cast<double>(rows.size())));
    double s = 0.0;
    for (std::size_t k = rows.size() - n; k < rows.size(); ++k) s += rows[k].mode_amplitude;
    return s / static_cast<double>(n);
}

inline std::vector<MicroState> states_of(const Ensemble& ens) {
    std::vector<MicroState> out;
    out.reserve(ens.particles.size());
    for (const Particle& p : ens.particles) out.push_back(p.state);
    return out;
}

}  // namespace polykin::dsmc
