#pragma once

// Command implementations behind the polykin executable, plus the flat
// config format and the run manifest they share.
//
// Config files hold `key = value` lines with at most one dotted section
// level (`gas.delta = 2`); `#` starts a comment. Lists are comma-separated.
// Every key a command reads is recorded with its resolved value (defaults
// included) so a manifest alone is enough to replay the run.

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cstdint>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>
#include <variant>
#include <vector>

#include <json.hpp>

#include "polykin/dsmc.hpp"
#include "polykin/equilibrium.hpp"
#include "polykin/functionals.hpp"
#include "polykin/linearized.hpp"
#include "polykin/nonlinear_probe.hpp"
#include "polykin/quadrature.hpp"
#include "polykin/random_field.hpp"
#include "polykin/stats.hpp"

#ifndef POLYKIN_VERSION_STRING
#define POLYKIN_VERSION_STRING "0.1.0"
#endif

namespace polykin::cli {

enum ExitCode : int {
    exit_ok = 0,
    exit_failure = 1,
    exit_config = 2,
    exit_numeric = 3,
    exit_statistical = 4,
};

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Shortest decimal that round-trips.
inline std::string format_exact(double x) {
    char buf[64];
    const auto r = std::to_chars(buf, buf + sizeof buf, x);
    return {buf, r.ptr};
}

/// Decimal with `digits` significant digits, independent of the C locale.
inline std::string format_sig(double x, int digits = 12) {
    char buf[64];
    const auto r = std::to_chars(buf, buf + sizeof buf, x, std::chars_format::general, digits);
    return {buf, r.ptr};
}

namespace detail {

inline std::string_view trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

inline bool valid_key(std::string_view key) {
    if (key.empty() || key.front() == '.' || key.back() == '.') return false;
    int dots = 0;
    for (char c : key) {
        if (c == '.') {
            ++dots;
        } else if (!((c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_')) {
            return false;
        }
    }
    return dots <= 1;
}

template <class T>
T parse_number(std::string_view key, std::string_view text) {
    text = trim(text);
    T out{};
    const auto r = std::from_chars(text.data(), text.data() + text.size(), out);
    if (r.ec != std::errc{} || r.ptr != text.data() + text.size())
        throw ConfigError("config key '" + std::string(key) + "': cannot parse '" + std::string(text) + "'");
    return out;
}

}  // namespace detail

class Config {
public:
    Config() = default;

    static Config parse(std::string_view text) {
        Config cfg;
        std::size_t line_no = 0;
        while (!text.empty()) {
            ++line_no;
            const auto nl = text.find('\n');
            std::string_view line = text.substr(0, nl);
            text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
            if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
            line = detail::trim(line);
            if (line.empty()) continue;
            const auto eq = line.find('=');
            if (eq == std::string_view::npos)
                throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value");
            const std::string key(detail::trim(line.substr(0, eq)));
            if (!detail::valid_key(key))
                throw ConfigError("config line " + std::to_string(line_no) + ": bad key '" + key + "'");
            if (cfg.values_.count(key))
                throw ConfigError("config line " + std::to_string(line_no) + ": duplicate key '" + key + "'");
            cfg.values_[key] = std::string(detail::trim(line.substr(eq + 1)));
        }
        return cfg;
    }

    static Config load(const std::filesystem::path& path) {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw ConfigError("cannot read config file " + path.string());
        std::ostringstream ss;
        ss << in.rdbuf();
        return parse(ss.str());
    }

    static Config from_map(const std::map<std::string, std::string>& values) {
        Config cfg;
        for (const auto& [k, v] : values) {
            if (!detail::valid_key(k)) throw ConfigError("bad config key '" + k + "'");
            cfg.values_[k] = v;
        }
        return cfg;
    }

    void set(const std::string& key, const std::string& value) {
        if (!detail::valid_key(key)) throw ConfigError("bad config key '" + key + "'");
        values_[key] = value;
    }

    [[nodiscard]] bool has(const std::string& key) const { return values_.count(key) != 0; }

    double get_double(const std::string& key, double fallback) {
        const double v = lookup(key) ? detail::parse_number<double>(key, values_.at(key)) : fallback;
        resolved_[key] = format_exact(v);
        return v;
    }

    std::int64_t get_int(const std::string& key, std::int64_t fallback) {
        const std::int64_t v = lookup(key) ? detail::parse_number<std::int64_t>(key, values_.at(key)) : fallback;
        resolved_[key] = std::to_string(v);
        return v;
    }

    std::uint64_t get_uint(const std::string& key, std::uint64_t fallback) {
        const std::uint64_t v = lookup(key) ? detail::parse_number<std::uint64_t>(key, values_.at(key)) : fallback;
        resolved_[key] = std::to_string(v);
        return v;
    }

    std::string get_string(const std::string& key, const std::string& fallback) {
        std::string v = lookup(key) ? values_.at(key) : fallback;
        resolved_[key] = v;
        return v;
    }

    /// Comma-separated list of numbers; an empty value is an empty list.
    std::vector<double> get_list(const std::string& key, const std::vector<double>& fallback) {
        std::vector<double> out;
        if (lookup(key)) {
            std::string_view rest = values_.at(key);
            if (!detail::trim(rest).empty()) {
                while (true) {
                    const auto comma = rest.find(',');
                    out.push_back(detail::parse_number<double>(key, rest.substr(0, comma)));
                    if (comma == std::string_view::npos) break;
                    rest = rest.substr(comma + 1);
                }
            }
        } else {
            out = fallback;
        }
        std::string text;
        for (std::size_t k = 0; k < out.size(); ++k) text += (k ? ", " : "") + format_exact(out[k]);
        resolved_[key] = text;
        return out;
    }

    /// Fails on keys present in the file that no reader asked for.
    void reject_unused() const {
        for (const auto& [k, v] : values_) {
            if (!used_.count(k)) throw ConfigError("unknown config key '" + k + "'");
        }
    }

    [[nodiscard]] const std::map<std::string, std::string>& resolved() const noexcept { return resolved_; }

private:
    bool lookup(const std::string& key) {
        used_.insert(key);
        return values_.count(key) != 0;
    }

    std::map<std::string, std::string> values_;
    std::set<std::string> used_;
    std::map<std::string, std::string> resolved_;
};

/// Rows of comma-separated cells. Doubles are written with 12 significant
/// digits.
class CsvWriter {
public:
    using Cell = std::variant<double, std::int64_t, std::uint64_t, std::string>;

    CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header)
        : out_(path, std::ios::binary | std::ios::trunc) {
        if (!out_) throw std::runtime_error("cannot write " + path.string());
        write_line(header);
    }

    void row(const std::vector<Cell>& cells) {
        std::vector<std::string> text;
        text.reserve(cells.size());
        for (const Cell& c : cells) {
            std::visit(
                [&](const auto& v) {
                    using T = std::decay_t<decltype(v)>;
                    if constexpr (std::is_same_v<T, double>) {
                        text.push_back(format_sig(v));
                    } else if constexpr (std::is_same_v<T, std::string>) {
                        text.push_back(v);
                    } else {
                        text.push_back(std::to_string(v));
                    }
                },
                c);
        }
        write_line(text);
    }

private:
    void write_line(const std::vector<std::string>& cells) {
        for (std::size_t k = 0; k < cells.size(); ++k) {
            if (k) out_ << ',';
            out_ << cells[k];
        }
        out_ << '\n';
        out_.flush();
    }

    std::ofstream out_;
};

struct RunOptions {
    std::filesystem::path out_dir = ".";
    bool strict = false;
    std::optional<std::uint64_t> seed;
};

/// State handed to a command: its config, output directory and the summary
/// that ends up in the manifest.
struct CommandContext {
    Config& cfg;
    std::filesystem::path out_dir;
    bool strict = false;
    nlohmann::json summary = nlohmann::json::object();
    std::vector<std::string> outputs;

    std::filesystem::path output(const std::string& name) {
        outputs.push_back(name);
        return out_dir / name;
    }
};

// ---------------------------------------------------------------------------
// Shared config readers

inline GasParams read_gas(Config& cfg) {
    GasParams p;
    p.delta = cfg.get_double("gas.delta", p.delta);
    p.alpha = cfg.get_double("gas.alpha", p.alpha);
    p.c_b = cfg.get_double("gas.c_b", p.c_b);
    p.beta = cfg.get_double("gas.beta", p.beta);
    return p;
}

inline PhaseGrid read_grid(Config& cfg) {
    const double v_max = cfg.get_double("grid.v_max", 12.0);
    const double i_max = cfg.get_double("grid.i_max", 40.0);
    const auto n_v = cfg.get_int("grid.n_v", 32);
    const auto n_i = cfg.get_int("grid.n_i", 32);
    if (n_v > 512 || n_i > 4096) throw std::invalid_argument("grid resolution is unreasonably large");
    return PhaseGrid(v_max, i_max, static_cast<int>(n_v), static_cast<int>(n_i));
}

inline std::uint64_t read_seed(Config& cfg) { return cfg.get_uint("run.seed", 1); }

inline McConfig read_mc(Config& cfg, std::size_t default_samples) {
    McConfig mc;
    mc.n_samples = cfg.get_uint("mc.n_samples", default_samples);
    mc.shard_size = cfg.get_uint("mc.shard_size", mc.shard_size);
    mc.seed = read_seed(cfg);
    if (mc.n_samples < 1 || mc.shard_size < 1) throw std::invalid_argument("mc sample counts must be >= 1");
    return mc;
}

/// Scan states (speed, 0, 0) x I over the product of the two lists.
inline std::vector<MicroState> read_scan(Config& cfg, const std::vector<double>& speeds,
                                         const std::vector<double>& energies) {
    const auto sp = cfg.get_list("scan.speeds", speeds);
    const auto ie = cfg.get_list("scan.i_energies", energies);
    std::vector<MicroState> out;
    for (double s : sp) {
        for (double i : ie) {
            if (!(s >= 0.0) || !(i >= 0.0) || !std::isfinite(s) || !std::isfinite(i))
                throw std::invalid_argument("scan speeds and internal energies must be finite and >= 0");
            out.push_back({{s, 0.0, 0.0}, i});
        }
    }
    return out;
}

inline dsmc::SimConfig read_sim(Config& cfg) {
    dsmc::SimConfig sim;
    sim.params = read_gas(cfg);
    sim.n_particles = cfg.get_uint("sim.n_particles", 100000);
    sim.n_cells = static_cast<int>(cfg.get_int("sim.n_cells", 1));
    sim.dt = cfg.get_double("sim.dt", 0.0);
    sim.t_end = cfg.get_double("sim.t_end", 2.0);
    sim.diag_every = static_cast<int>(cfg.get_int("sim.diag_every", 1));
    sim.seed = read_seed(cfg);
    sim.bins.n_speed = static_cast<int>(cfg.get_int("entropy.n_speed", sim.bins.n_speed));
    sim.bins.n_i = static_cast<int>(cfg.get_int("entropy.n_i", sim.bins.n_i));
    sim.bins.speed_max = cfg.get_double("entropy.speed_max", 0.0);
    sim.bins.i_max = cfg.get_double("entropy.i_max", 0.0);
    const std::string kind = cfg.get_string("init.kind", "equilibrium");
    if (kind == "equilibrium") {
        sim.init = dsmc::Equilibrium{cfg.get_double("init.temperature", 1.0)};
    } else if (kind == "two_temperature") {
        sim.init = dsmc::TwoTemperature{cfg.get_double("init.t_kin", 2.0), cfg.get_double("init.t_int", 0.1)};
    } else if (kind == "spatial_mode") {
        sim.init = dsmc::SpatialMode{cfg.get_double("init.amplitude", 0.5), cfg.get_double("init.temperature", 1.0)};
    } else {
        throw ConfigError("init.kind must be equilibrium, two_temperature or spatial_mode");
    }
    return sim;
}

inline nlohmann::json to_json(const MarginalKs& ks) {
    return {{"vx", ks.vx}, {"vy", ks.vy}, {"vz", ks.vz}, {"speed", ks.speed}, {"i_energy", ks.i_energy}};
}

// ---------------------------------------------------------------------------
// Commands. Each returns exit_ok or exit_statistical (the latter only when a
// statistical check fails and --strict is set).

inline int cmd_nu_table(CommandContext& ctx) {
    const GasParams params = read_gas(ctx.cfg);
    const PhaseGrid grid = read_grid(ctx.cfg);
    const auto scan = read_scan(ctx.cfg, {0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10}, {0, 1, 4, 9, 16, 25});
    ctx.cfg.reject_unused();
    params.validate();
    CsvWriter csv(ctx.output("nu_table.csv"), {"speed", "i_energy", "nu", "equiv_ratio"});
    if (scan.empty()) return exit_ok;
    const PhaseQuadrature q(params, grid);
    double lo = std::numeric_limits<double>::infinity();
    double hi = 0.0;
    for (const MicroState& s : scan) {
        const double nu = collision_frequency(q, s);
        const double ratio = nu / nu_growth(params, s);
        lo = std::min(lo, ratio);
        hi = std::max(hi, ratio);
        csv.row({s.v.x, s.i_energy, nu, ratio});
    }
    ctx.summary["equiv_ratio_min"] = lo;
    ctx.summary["equiv_ratio_max"] = hi;
    return exit_ok;
}

inline int cmd_kernel_bounds(CommandContext& ctx) {
    const GasParams params = read_gas(ctx.cfg);
    const PhaseGrid grid = read_grid(ctx.cfg);
    const double eps = ctx.cfg.get_double("kernel.eps", 0.0);
    const double m = ctx.cfg.get_double("kernel.m", 0.0);
    const McConfig mc = read_mc(ctx.cfg, 200000);
    const auto scan = read_scan(ctx.cfg, {0, 2, 4, 6, 8}, {0, 1, 4, 16});
    ctx.cfg.reject_unused();
    params.validate();
    if (!(eps >= 0.0 && eps <= 1.0 / 64.0)) throw ConfigError("kernel.eps must lie in [0, 1/64]");
    if (!(m >= 0.0 && m <= 1.0 / 8.0)) throw ConfigError("kernel.m must lie in [0, 1/8]");

    CsvWriter csv(ctx.output("kernel_bounds.csv"), {"speed", "i_energy", "bound_product", "std_error"});
    if (scan.empty()) return exit_ok;
    const PhaseQuadrature q(params, grid);
    const auto rows = kernel_bound_probe(q, eps, m, scan, mc);
    double sup = 0.0;
    for (const auto& r : rows) {
        if (!std::isfinite(r.bound_product)) throw NumericalError("bound product is not finite");
        sup = std::max(sup, r.bound_product);
        csv.row({r.state.v.x, r.state.i_energy, r.bound_product, r.std_error});
    }
    // growth trend in |v| per internal energy level
    std::map<double, std::pair<std::vector<double>, std::vector<double>>> by_i;
    for (const auto& r : rows) {
        by_i[r.state.i_energy].first.push_back(r.state.v.x);
        by_i[r.state.i_energy].second.push_back(r.bound_product);
    }
    double worst = -1.0;
    for (const auto& [i, xy] : by_i) {
        if (xy.first.size() >= 3) worst = std::max(worst, stats::spearman(xy.first, xy.second));
    }
    ctx.summary["sup"] = sup;
    ctx.summary["max_speed_spearman"] = worst;
    const bool ok = worst <= 0.3;
    ctx.summary["trend_ok"] = ok;
    return (!ok && ctx.strict) ? exit_statistical : exit_ok;
}

inline int cmd_gain_probe(CommandContext& ctx) {
    const GasParams params = read_gas(ctx.cfg);
    const PhaseGrid grid = read_grid(ctx.cfg);
    const McConfig mc = read_mc(ctx.cfg, 100000);
    const auto n_random = ctx.cfg.get_uint("gain.n_random", 10);
    const auto scan = read_scan(ctx.cfg, {0, 2, 4}, {0, 1, 4});
    ctx.cfg.reject_unused();
    params.validate();

    CsvWriter csv(ctx.output("gain_probe.csv"), {"function", "speed", "i_energy", "ratio", "std_error"});
    CsvWriter sup_csv(ctx.output("gain_probe_sup.csv"), {"function", "sup"});
    if (scan.empty()) return exit_ok;
    const PhaseQuadrature q(params, grid);

    auto probe = [&](const std::string& name, const GridFunction& f, std::uint64_t key) {
        const ProbeResult r = gain_estimate_ratio(q, f, scan, polykin::detail::derive(mc, key));
        for (const auto& row : r.rows) csv.row({name, row.state.v.x, row.state.i_energy, row.ratio, row.std_error});
        if (!std::isfinite(r.sup)) throw NumericalError("gain ratio is not finite");
        sup_csv.row({name, r.sup});
        return r.sup;
    };

    const auto sqrt_m = q.sqrt_maxwellian();
    const double base = probe("sqrt_m", GridFunction(grid, {sqrt_m.begin(), sqrt_m.end()}), 0);
    double worst = base;
    Rng rng = substream(mc.seed, StreamTag::field, 0);
    for (std::uint64_t k = 0; k < n_random; ++k) {
        const RandomField h(rng);
        // alternate between Maxwellian-shaped and weight-limited perturbations
        const GridFunction f = GridFunction::sample(grid, [&](const MicroState& s) {
            const double shape = (k % 2 == 0) ? std::exp(0.5 * log_maxwellian(params, s)) : 1.0 / weight(params, s);
            return shape * h.in_range(s, 0.1, 1.9);
        });
        worst = std::max(worst, probe("random_" + std::to_string(k), f, k + 1));
    }
    ctx.summary["sup_sqrt_m"] = base;
    ctx.summary["sup_all"] = worst;
    return exit_ok;
}

inline int cmd_entropy_check(CommandContext& ctx) {
    const GasParams params = read_gas(ctx.cfg);
    const PhaseGrid grid = read_grid(ctx.cfg);
    const auto n_random = ctx.cfg.get_uint("entropy.n_random", 100);
    const double g_lo = ctx.cfg.get_double("entropy.g_min", -0.9);
    const double g_hi = ctx.cfg.get_double("entropy.g_max", 5.0);
    const std::uint64_t seed = read_seed(ctx.cfg);
    ctx.cfg.reject_unused();
    params.validate();
    if (!(g_lo >= -1.0) || !(g_hi >= g_lo)) throw ConfigError("entropy.g_min must be >= -1 and <= entropy.g_max");

    const PhaseQuadrature q(params, grid);
    CsvWriter csv(ctx.output("entropy_check.csv"), {"case", "relative_entropy", "split_lhs", "inequality_ok"});
    std::uint64_t passed = 0;
    std::uint64_t total = 0;
    const auto m = q.maxwellian();
    auto check = [&](const std::string& name, const GridFunction& f) {
        const double re = relative_entropy(f, q);
        const double lhs = entropy_split_lhs(f, q);
        const bool ok = lhs <= re;
        passed += ok ? 1 : 0;
        ++total;
        csv.row({name, re, lhs, std::string(ok ? "true" : "false")});
    };
    for (double c : {1.5, 3.0}) {
        std::vector<double> v(m.begin(), m.end());
        for (double& x : v) x *= c;
        check("scale_" + format_exact(c), GridFunction(grid, std::move(v)));
    }
    Rng rng = substream(seed, StreamTag::field, 1);
    for (std::uint64_t k = 0; k < n_random; ++k) {
        const RandomField h(rng);
        std::vector<double> v(grid.size());
        grid.for_each_node([&](std::size_t idx, const MicroState& s, double) {
            v[idx] = m[idx] * (1.0 + h.in_range(s, g_lo, g_hi));
        });
        check("random_" + std::to_string(k), GridFunction(grid, std::move(v)));
    }
    ctx.summary["passed"] = passed;
    ctx.summary["total"] = total;
    return (passed != total && ctx.strict) ? exit_statistical : exit_ok;
}

inline int cmd_equilibrium_check(CommandContext& ctx) {
    const GasParams params = read_gas(ctx.cfg);
    const double t = ctx.cfg.get_double("equilibrium.temperature", 1.0);
    const auto n_particles = ctx.cfg.get_uint("sim.n_particles", 100000);
    const auto n_collisions = ctx.cfg.get_uint("equilibrium.n_collisions", 100000);
    const double threshold = ctx.cfg.get_double("equilibrium.threshold", 0.01);
    const std::uint64_t seed = read_seed(ctx.cfg);
    ctx.cfg.reject_unused();
    params.validate();
    if (!(t > 0.0)) throw ConfigError("equilibrium.temperature must be > 0");
    if (n_particles < 1 || n_collisions < 1) throw ConfigError("sample counts must be >= 1");

    dsmc::SimConfig sim;
    sim.params = params;
    sim.n_particles = std::max<std::uint64_t>(n_particles, 1000);
    sim.init = dsmc::Equilibrium{t};
    sim.seed = seed;
    const dsmc::Ensemble ens = dsmc::init_ensemble(sim);
    const auto states = dsmc::states_of(ens);
    const MarginalKs ks_ens = marginal_ks(states, params, t);
    const MarginalKs ks_col = collision_fixed_point(params, t, n_collisions, seed);
    const bool ok = ks_ens.worst() < threshold && ks_col.worst() < threshold;

    nlohmann::json out = {{"temperature", t},
                          {"n_particles", sim.n_particles},
                          {"n_collisions", n_collisions},
                          {"threshold", threshold},
                          {"ensemble", to_json(ks_ens)},
                          {"collision_fixed_point", to_json(ks_col)},
                          {"pass", ok}};
    std::ofstream f(ctx.output("equilibrium_check.json"), std::ios::binary | std::ios::trunc);
    f << out.dump(2) << '\n';
    ctx.summary["pass"] = ok;
    ctx.summary["worst_ks"] = std::max(ks_ens.worst(), ks_col.worst());
    return (!ok && ctx.strict) ? exit_statistical : exit_ok;
}

inline int cmd_simulate(CommandContext& ctx) {
    dsmc::SimConfig sim = read_sim(ctx.cfg);
    ctx.cfg.reject_unused();
    sim.validate();
    CsvWriter csv(ctx.output("simulate.csv"), {"t", "kinetic_mean", "internal_mean", "px", "py", "pz",
                                               "energy_total", "h_estimate", "mode_amplitude",
                                               "collisions_accepted"});
    const dsmc::RunResult res = dsmc::run(sim, [&](const dsmc::DiagnosticsRow& r) {
        csv.row({r.t, r.kinetic_mean, r.internal_mean, r.momentum.x, r.momentum.y, r.momentum.z, r.energy_total,
                 r.h_estimate, r.mode_amplitude, r.collisions_accepted});
    });
    const auto drift = dsmc::conservation_drift(res.rows);
    ctx.summary["dt"] = res.dt;
    ctx.summary["steps"] = res.steps;
    ctx.summary["collisions"] = res.collisions;
    ctx.summary["majorant_underflows"] = res.majorant_underflows;
    ctx.summary["energy_drift"] = drift.energy;
    ctx.summary["momentum_drift"] = drift.momentum;
    bool ok = drift.energy <= 1e-10 && drift.momentum <= 1e-10;
    if (std::holds_alternative<dsmc::TwoTemperature>(sim.init)) {
        const auto rep = dsmc::analyze_relaxation(res.rows, sim.params, sim.n_particles);
        ctx.summary["t_eq"] = rep.t_eq;
        ctx.summary["relaxation_rows"] = rep.window_rows;
        ctx.summary["h_spearman"] = rep.h_spearman;
        ctx.summary["log_fit_r2"] = rep.log_fit.r_squared;
        ctx.summary["log_fit_slope"] = rep.log_fit.slope;
        ok = ok && rep.window_rows >= 3 && rep.h_spearman <= -0.9;
    }
    ctx.summary["checks_ok"] = ok;
    return (!ok && ctx.strict) ? exit_statistical : exit_ok;
}

// ---------------------------------------------------------------------------

inline const std::map<std::string, int (*)(CommandContext&)>& command_table() {
    static const std::map<std::string, int (*)(CommandContext&)> table = {
        {"nu-table", &cmd_nu_table},
        {"kernel-bounds", &cmd_kernel_bounds},
        {"gain-probe", &cmd_gain_probe},
        {"entropy-check", &cmd_entropy_check},
        {"equilibrium-check", &cmd_equilibrium_check},
        {"simulate", &cmd_simulate},
    };
    return table;
}

inline std::string utc_timestamp() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t tt = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&tt, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

inline std::string manifest_name(const std::string& command) { return command + ".manifest.json"; }

/// Runs a command, writes its manifest and maps failures to exit codes.
inline int run_command(const std::string& command, Config cfg, const RunOptions& opts,
                       std::ostream& err = std::cerr) {
    const auto it = command_table().find(command);
    if (it == command_table().end()) {
        err << "unknown command '" << command << "'\n";
        return exit_config;
    }
    if (opts.seed) cfg.set("run.seed", std::to_string(*opts.seed));

    nlohmann::json manifest = {{"command", command}, {"version", POLYKIN_VERSION_STRING},
                               {"start_time", utc_timestamp()}};
    CommandContext ctx{cfg, opts.out_dir, opts.strict};
    int code = exit_ok;
    std::string error;
    try {
        std::filesystem::create_directories(opts.out_dir);
        read_seed(cfg);
        code = it->second(ctx);
    } catch (const ConfigError& e) {
        code = exit_config;
        error = e.what();
    } catch (const std::invalid_argument& e) {
        code = exit_config;
        error = e.what();
    } catch (const NumericalError& e) {
        code = exit_numeric;
        error = e.what();
    } catch (const std::exception& e) {
        code = exit_failure;
        error = e.what();
    }
    if (!error.empty()) err << "polykin " << command << ": " << error << '\n';

    nlohmann::json resolved = nlohmann::json::object();
    for (const auto& [k, v] : cfg.resolved()) resolved[k] = v;
    manifest["config"] = resolved;
    manifest["seed"] = cfg.resolved().count("run.seed") ? cfg.resolved().at("run.seed") : "";
    manifest["strict"] = opts.strict;
    manifest["end_time"] = utc_timestamp();
    manifest["outputs"] = ctx.outputs;
    manifest["summary"] = ctx.summary;
    manifest["exit_code"] = code;
    if (!error.empty()) manifest["error"] = error;
    try {
        std::filesystem::create_directories(opts.out_dir);
        std::ofstream f(opts.out_dir / manifest_name(command), std::ios::binary | std::ios::trunc);
        f << manifest.dump(2) << '\n';
        if (!f) throw std::runtime_error("cannot write manifest");
    } catch (const std::exception& e) {
        err << "polykin " << command << ": " << e.what() << '\n';
        if (code == exit_ok) code = exit_failure;
    }
    return code;
}

/// Re-runs the command recorded in a manifest with its resolved config.
inline int replay(const std::filesystem::path& manifest_path, RunOptions opts, std::ostream& err = std::cerr) {
    nlohmann::json manifest;
    try {
        std::ifstream in(manifest_path, std::ios::binary);
        if (!in) throw ConfigError("cannot read manifest " + manifest_path.string());
        manifest = nlohmann::json::parse(in);
        std::map<std::string, std::string> values;
        for (const auto& [k, v] : manifest.at("config").items()) values[k] = v.get<std::string>();
        const std::string command = manifest.at("command").get<std::string>();
        if (!opts.strict) opts.strict = manifest.value("strict", false);
        opts.seed.reset();
        return run_command(command, Config::from_map(values), opts, err);
    } catch (const ConfigError& e) {
        err << "polykin replay: " << e.what() << '\n';
    } catch (const nlohmann::json::exception& e) {
        err << "polykin replay: malformed manifest: " << e.what() << '\n';
    }
    return exit_config;
}

}  // namespace polykin::cli
