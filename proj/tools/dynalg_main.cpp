// Scenario runner for the dynamical-algebra library: verifies the algebraic
// and representation-level identities and emits deterministic reports.
//
// Exit codes: 0 all checks pass, 1 check failure, 2 config error,
// 3 numerical-environment error (box leakage, horizon, integrator budget).

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dynalg/config.hpp"
#include "dynalg/scenario.hpp"

namespace {

struct CommonFlags {
    std::size_t grid_points = 0;  // 0 = keep default
    double box = 0.0;
    std::size_t k_track = 0;
    double tolerance_scale = 0.0;
    std::uint64_t seed = 0;
    bool seed_set = false;
    std::string output;
};

void apply_flags(dynalg::scenario::ScenarioConfig& cfg, const CommonFlags& flags) {
    if (flags.grid_points) cfg.grid.points = flags.grid_points;
    if (flags.box > 0.0) cfg.rep.box = flags.box;
    if (flags.k_track) cfg.rep.k_track = flags.k_track;
    if (flags.tolerance_scale > 0.0) cfg.tolerance_scale = flags.tolerance_scale;
    if (flags.seed_set) cfg.seed = flags.seed;
}

void write_reports(const dynalg::scenario::Report& report,
                   const dynalg::scenario::ScenarioConfig& cfg, const std::string& outdir) {
    if (outdir.empty()) return;
    std::filesystem::create_directories(outdir);
    std::filesystem::path base(outdir);
    {
        std::ofstream records(base / (cfg.id + ".records.tsv"), std::ios::binary);
        records << report.machine_records();
    }
    {
        std::ofstream summary(base / (cfg.id + ".summary.txt"), std::ios::binary);
        summary << report.summary();
        summary << "wall_ms " << static_cast<long>(report.wall_ms) << "\n";
    }
}

int run_and_report(dynalg::scenario::ScenarioConfig cfg, const CommonFlags& flags) {
    apply_flags(cfg, flags);
    auto t0 = std::chrono::steady_clock::now();
    dynalg::scenario::Report report = dynalg::scenario::run(cfg);
    auto t1 = std::chrono::steady_clock::now();
    report.wall_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
    report.print_human(std::cout);
    write_reports(report, cfg, flags.output);
    return report.failed() == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"dynamical-algebra scenario runner"};
    app.require_subcommand(1);

    CommonFlags flags;
    auto add_common = [&flags](CLI::App* cmd) {
        cmd->add_option("--grid-points", flags.grid_points, "time grid points");
        cmd->add_option("--box", flags.box, "position box half-width");
        cmd->add_option("--k-track", flags.k_track, "tracked subspace dimension");
        cmd->add_option("--tolerance-scale", flags.tolerance_scale, "scale all tolerances");
        cmd->add_option_function<std::uint64_t>(
            "--seed",
            [&flags](const std::uint64_t& s) {
                flags.seed = s;
                flags.seed_set = true;
            },
            "seed for the deterministic fuzz stream");
        cmd->add_option("--output", flags.output, "directory for report artifacts");
    };

    std::string verify_kind;
    CLI::App* verify = app.add_subcommand("verify", "run a built-in verification suite");
    verify
        ->add_option("kind", verify_kind,
                     "propagators|weyl|dyson|causal|adjoint|tbar-dynamical|embedding|states|"
                     "regularity|all")
        ->required();
    add_common(verify);

    std::string config_path;
    CLI::App* runcmd = app.add_subcommand("run", "run a scenario config file");
    runcmd->add_option("--config", config_path, "path to scenario config")->required();
    add_common(runcmd);

    CLI11_PARSE(app, argc, argv);

    try {
        if (verify->parsed()) {
            dynalg::scenario::ScenarioConfig cfg;
            cfg.id = "verify-" + verify_kind;
            cfg.kind = verify_kind;
            if (verify_kind != "all") {
                bool known = false;
                for (const auto& k : dynalg::scenario::scenario_kinds())
                    known = known || k == verify_kind;
                if (!known) {
                    std::cerr << "unknown verify kind '" << verify_kind << "'\n";
                    return 2;
                }
            }
            return run_and_report(cfg, flags);
        }
        dynalg::scenario::ScenarioConfig cfg = dynalg::scenario::parse_config_file(config_path);
        return run_and_report(cfg, flags);
    } catch (const dynalg::ParseError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const dynalg::ConfigError& e) {
        std::cerr << "numerical environment error: " << e.what() << "\n";
        return 3;
    } catch (const dynalg::NumericalError& e) {
        std::cerr << "numerical environment error: " << e.what() << "\n";
        return 3;
    } catch (const dynalg::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
