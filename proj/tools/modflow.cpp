// modflow: command-line front end.
//
//   modflow run     --config cfg.json [--out DIR] [--seed N]
//   modflow reduce  X Y
//   modflow analyze RUN_DIR
//   modflow sweep   --config cfg.json --out ROOT [--grids 32,64] [--bins 30x30,60x60] [--seeds 1,2]

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "modflow/modflow.hpp"

namespace {

modflow::FlowConfig load_config(const std::string& path) {
    if (path.empty()) return modflow::FlowConfig{};
    std::ifstream is(path);
    if (!is) throw modflow::ConfigError("cannot open config " + path);
    std::stringstream ss;
    ss << is.rdbuf();
    return modflow::parse_config(ss.str());
}

std::pair<std::size_t, std::size_t> parse_dims(const std::string& s) {
    const auto x = s.find('x');
    if (x == std::string::npos) {
        const auto n = static_cast<std::size_t>(std::stoul(s));
        return {n, n};
    }
    return {static_cast<std::size_t>(std::stoul(s.substr(0, x))), static_cast<std::size_t>(std::stoul(s.substr(x + 1)))};
}

void print_summary(const modflow::RunSummary& s) {
    std::printf("status=%s steps=%zu rejected=%zu stalled=%d t_end=%.6g\n", s.status.c_str(), s.steps,
                s.rejected_steps, s.stalled ? 1 : 0, s.t_end);
    std::printf("E: %.12g -> %.12g  cumulative_D=%.12g  identity_error=%.3e  monotonicity_violations=%zu\n",
                s.energy_initial, s.energy_final, s.cumulative_dissipation, s.energy_identity_error,
                s.monotonicity_violations);
    std::printf("final histogram relative entropy H=%.6g rho_max=%.6g tail_mass=%.6g degenerate_fraction=%.4g\n",
                s.final_row.report.entropy, s.final_row.report.rho_max, s.final_row.report.tail_mass,
                s.final_row.report.degenerate_fraction);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Harmonic map heat flow into the modular surface"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir;
    std::uint64_t seed = 0;

    auto* run = app.add_subcommand("run", "run one experiment");
    run->add_option("--config", config_path, "JSON configuration file");
    run->add_option("--out", out_dir, "output directory (overrides output_dir)");
    auto* seed_opt = run->add_option("--seed", seed, "RNG seed (overrides seed)");

    double rx = 0.0, ry = 0.0;
    auto* reduce = app.add_subcommand("reduce", "reduce x + iy to the fundamental domain");
    reduce->add_option("x", rx)->required();
    reduce->add_option("y", ry)->required();

    std::string run_dir;
    auto* analyze = app.add_subcommand("analyze", "recompute series columns from stored snapshots");
    analyze->add_option("run_dir", run_dir)->required()->check(CLI::ExistingDirectory);

    std::string sweep_config;
    std::string sweep_out;
    std::vector<std::string> grids;
    std::vector<std::string> bins;
    std::vector<std::uint64_t> seeds;
    std::size_t jobs = std::max(1u, std::thread::hardware_concurrency());
    auto* sweep = app.add_subcommand("sweep", "run a grid of configurations in parallel");
    sweep->add_option("--config", sweep_config, "base JSON configuration");
    sweep->add_option("--out", sweep_out, "root directory for run directories")->required();
    sweep->add_option("--grids", grids, "grid sizes, N or N1xN2")->delimiter(',');
    sweep->add_option("--bins", bins, "bin counts, N or NXxNY")->delimiter(',');
    sweep->add_option("--seeds", seeds, "seeds")->delimiter(',');
    sweep->add_option("-j,--jobs", jobs, "concurrent runs");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run) {
            modflow::FlowConfig cfg = load_config(config_path);
            if (!out_dir.empty()) cfg.output_dir = out_dir;
            if (*seed_opt) cfg.seed = seed;
            const auto t0 = std::chrono::steady_clock::now();
            const auto summary = modflow::run_experiment(cfg, cfg.output_dir);
            const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            print_summary(summary);
            std::printf("wrote %s (%.2f s)\n", cfg.output_dir.c_str(), secs);
            return summary.monotonicity_violations == 0 ? 0 : 3;
        }
        if (*reduce) {
            const auto r = modflow::reduce_to_fundamental_domain({rx, ry});
            std::printf("z_F = (%.17g, %.17g)\n", r.point.x(), r.point.y());
            std::printf("gamma = [[%lld, %lld], [%lld, %lld]]\n", static_cast<long long>(r.witness.a()),
                        static_cast<long long>(r.witness.b()), static_cast<long long>(r.witness.c()),
                        static_cast<long long>(r.witness.d()));
            return 0;
        }
        if (*analyze) {
            const auto rep = modflow::analyze(run_dir);
            std::printf("%zu rows recomputed from snapshots\n", rep.rows);
            for (std::size_t c = 0; c < rep.columns.size(); ++c) {
                std::printf("  %-22s max deviation %.3e %s\n", rep.columns[c].c_str(), rep.max_deviation[c],
                            rep.max_deviation[c] <= modflow::kAuditTolerance ? "ok" : "MISMATCH");
            }
            return rep.passed() ? 0 : 4;
        }
        if (*sweep) {
            const modflow::FlowConfig base = load_config(sweep_config);
            if (grids.empty()) grids.push_back(std::to_string(base.n1) + "x" + std::to_string(base.n2));
            if (bins.empty()) bins.push_back(std::to_string(base.bins_x) + "x" + std::to_string(base.bins_y));
            if (seeds.empty()) seeds.push_back(base.seed);
            std::vector<std::pair<std::string, modflow::FlowConfig>> runs;
            for (const auto& g : grids) {
                for (const auto& b : bins) {
                    for (auto s : seeds) {
                        modflow::FlowConfig c = base;
                        std::tie(c.n1, c.n2) = parse_dims(g);
                        const auto [bx, by] = parse_dims(b);
                        c.bins_x = static_cast<int>(bx);
                        c.bins_y = static_cast<int>(by);
                        c.seed = s;
                        const std::string name = "grid" + std::to_string(c.n1) + "x" + std::to_string(c.n2) + "_bins" +
                                                 std::to_string(c.bins_x) + "x" + std::to_string(c.bins_y) + "_seed" +
                                                 std::to_string(s);
                        c.output_dir = (std::filesystem::path(sweep_out) / name).string();
                        modflow::validate(c);
                        runs.emplace_back(name, c);
                    }
                }
            }
            const auto errors = modflow::sweep(runs, sweep_out, jobs);
            int failed = 0;
            for (std::size_t k = 0; k < runs.size(); ++k) {
                std::printf("%-40s %s\n", runs[k].first.c_str(), errors[k].empty() ? "ok" : errors[k].c_str());
                if (!errors[k].empty()) ++failed;
            }
            return failed == 0 ? 0 : 5;
        }
    } catch (const modflow::Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
    return 0;
}
