// polykin: probes of the polyatomic collision model and DSMC runs.
//
//   polykin <command> [--config PATH] [--seed N] [--out DIR] [--strict]
//   polykin replay MANIFEST [--out DIR] [--strict]
//
// Exit codes: 0 ok, 2 config error, 3 numerical failure, 4 statistical
// check failed under --strict.

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "polykin/commands.hpp"

namespace {

struct CommonFlags {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out = ".";
    bool strict = false;
};

void add_common(CLI::App* sub, CommonFlags& f, bool with_config) {
    if (with_config) {
        sub->add_option("--config", f.config, "config file (key = value lines)");
        sub->add_option("--seed", f.seed, "seed, overrides run.seed");
    }
    sub->add_option("--out", f.out, "output directory");
    sub->add_flag("--strict", f.strict, "exit 4 when a statistical check fails");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"polyatomic kinetic model probes and DSMC simulation"};
    app.set_version_flag("--version", POLYKIN_VERSION_STRING);
    app.require_subcommand(1);

    CommonFlags flags;
    const std::pair<const char*, const char*> commands[] = {
        {"nu-table", "collision frequency and its equivalence ratio over a scan"},
        {"kernel-bounds", "integral bound products of the linearized kernels"},
        {"gain-probe", "gain term estimate ratios for sqrt(M) and random f"},
        {"entropy-check", "relative entropy against its quadratic/linear split"},
        {"equilibrium-check", "KS statistics of equilibrium samples and collided pairs"},
        {"simulate", "DSMC run streaming diagnostics"},
    };
    for (const auto& [name, help] : commands) add_common(app.add_subcommand(name, help), flags, true);

    std::string manifest;
    CLI::App* rep = app.add_subcommand("replay", "re-run the command recorded in a manifest");
    rep->add_option("manifest", manifest, "manifest written by an earlier run")->required();
    add_common(rep, flags, false);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return polykin::cli::exit_config;
    }

    polykin::cli::RunOptions opts;
    opts.out_dir = flags.out;
    opts.strict = flags.strict;
    opts.seed = flags.seed;

    CLI::App* chosen = app.get_subcommands().front();
    if (chosen == rep) return polykin::cli::replay(manifest, opts);

    polykin::cli::Config cfg;
    if (!flags.config.empty()) {
        try {
            cfg = polykin::cli::Config::load(flags.config);
        } catch (const polykin::cli::ConfigError& e) {
            std::cerr << "polykin: " << e.what() << '\n';
            return polykin::cli::exit_config;
        }
    }
    return polykin::cli::run_command(chosen->get_name(), std::move(cfg), opts);
}
