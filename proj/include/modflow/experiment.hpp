#pragma once

// Experiment orchestration: a run directory holds
//   config.json        effective configuration
//   steps.csv          one row per accepted step (t, E, D, cumulative_D, dt)
//   series.csv         one row per snapshot with every diagnostic column
//   snapshots/         snap_NNNNNN.csv
//   measures/          mu_NNNNNN.csv per snapshot and mu_bar.csv
//   entropy.jsonl      entropy reports
//   summary.json       final values and audits

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "modflow/config.hpp"
#include "modflow/heat_flow.hpp"
#include "modflow/initial.hpp"
#include "modflow/io.hpp"
#include "modflow/measures.hpp"

namespace modflow {

namespace fs = std::filesystem;

inline constexpr double kMonotonicityTolerance = 1e-10;
inline constexpr double kAuditTolerance = 1e-12;

/// One row of series.csv.
struct SeriesRow {
    double t = 0.0;
    double energy = 0.0;
    double dissipation = 0.0;
    double cumulative_dissipation = 0.0;
    double dt = 0.0;
    EntropyReport report;
    std::vector<double> ergodic;
};

inline std::vector<std::string> series_columns(std::size_t n_test_functions) {
    std::vector<std::string> cols{"t",   "E",       "D",         "cumulative_D",       "dt",
                                  "H",   "rho_max", "tail_mass", "degenerate_fraction"};
    for (std::size_t k = 0; k < n_test_functions; ++k) cols.push_back("ergodic_" + std::to_string(k));
    return cols;
}

inline std::vector<double> series_values(const SeriesRow& r) {
    std::vector<double> v{r.t,
                          r.energy,
                          r.dissipation,
                          r.cumulative_dissipation,
                          r.dt,
                          r.report.entropy,
                          r.report.rho_max,
                          r.report.tail_mass,
                          r.report.degenerate_fraction};
    v.insert(v.end(), r.ergodic.begin(), r.ergodic.end());
    return v;
}

/// Diagnostics for every snapshot. cumulative and dt are trajectory
/// quantities supplied by the caller (one per snapshot).
inline std::vector<SeriesRow> compute_series(const std::vector<MapState>& snapshots,
                                             const std::vector<double>& cumulative, const std::vector<double>& dt,
                                             const FlowConfig& config) {
    auto binning = std::make_shared<const FundamentalDomainBinning>(config.bins_x, config.bins_y, config.y_max);
    const ReferenceMeasure nu(binning);
    FlowTrajectory view;
    view.snapshots = snapshots;

    std::vector<std::vector<double>> ergodic;
    for (const BumpSpec& b : config.test_functions) ergodic.push_back(ergodic_error(view, b.make(), nu));

    std::vector<SeriesRow> rows(snapshots.size());
    for (std::size_t k = 0; k < snapshots.size(); ++k) {
        const MapState& s = snapshots[k];
        SeriesRow& r = rows[k];
        r.t = s.t();
        r.energy = energy(s);
        r.dissipation = dissipation_rate(s);
        r.cumulative_dissipation = cumulative.at(k);
        r.dt = dt.at(k);
        r.report = entropy_report(s, binning, nu, config.entropy_threshold, config.jacobian_threshold);
        for (const auto& e : ergodic) r.ergodic.push_back(e[k]);
    }
    return rows;
}

inline void write_series(const fs::path& path, const std::vector<SeriesRow>& rows, std::size_t n_test_functions) {
    auto os = io::open_out(path);
    os << io::kSeriesSchema << "\n";
    const auto cols = series_columns(n_test_functions);
    for (std::size_t c = 0; c < cols.size(); ++c) os << (c ? "," : "") << cols[c];
    os << "\n";
    for (const SeriesRow& r : rows) {
        const auto v = series_values(r);
        for (std::size_t c = 0; c < v.size(); ++c) os << (c ? "," : "") << io::fmt(v[c]);
        os << "\n";
    }
}

/// Parsed CSV table with a schema line and a column header.
struct Table {
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;

    std::size_t column(const std::string& name) const {
        const auto it = std::find(columns.begin(), columns.end(), name);
        if (it == columns.end()) throw FormatError("missing column '" + name + "'");
        return static_cast<std::size_t>(it - columns.begin());
    }
};

inline Table read_table(const fs::path& path, const std::string& schema) {
    auto is = io::open_in(path);
    const std::string where = path.string();
    if (io::expect_line(is, where) != schema) throw FormatError(where + ": missing schema line '" + schema + "'");
    Table t;
    t.columns = io::split(io::expect_line(is, where));
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        const auto cells = io::split(line);
        if (cells.size() != t.columns.size()) throw FormatError(where + ": ragged row");
        std::vector<double> row;
        for (const auto& c : cells) row.push_back(io::parse_double(c, where));
        t.rows.push_back(std::move(row));
    }
    return t;
}

struct RunSummary {
    std::string status = "ok";
    std::size_t steps = 0;
    std::size_t rejected_steps = 0;
    bool stalled = false;
    std::size_t monotonicity_violations = 0;
    double energy_identity_error = 0.0;
    double energy_initial = 0.0;
    double energy_final = 0.0;
    double cumulative_dissipation = 0.0;
    double t_end = 0.0;
    std::size_t snapshots = 0;
    SeriesRow final_row;
};

inline nlohmann::json to_json(const RunSummary& s) {
    return {{"schema", "modflow-summary"},
            {"version", 1},
            {"status", s.status},
            {"t_end", s.t_end},
            {"steps", s.steps},
            {"rejected_steps", s.rejected_steps},
            {"stalled", s.stalled},
            {"snapshots", s.snapshots},
            {"E_initial", s.energy_initial},
            {"E_final", s.energy_final},
            {"cumulative_D", s.cumulative_dissipation},
            {"energy_identity_error", s.energy_identity_error},
            {"monotonicity_tolerance", kMonotonicityTolerance},
            {"monotonicity_violations", s.monotonicity_violations},
            {"final", {{"D", s.final_row.dissipation},
                       {"H", s.final_row.report.entropy},
                       {"rho_max", s.final_row.report.rho_max},
                       {"tail_mass", s.final_row.report.tail_mass},
                       {"degenerate_fraction", s.final_row.report.degenerate_fraction},
                       {"ergodic_error", s.final_row.ergodic}}}};
}

namespace detail {

inline std::string numbered(const char* prefix, std::size_t k) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%s_%06zu.csv", prefix, k);
    return buf;
}

inline void write_steps(const fs::path& path, const FlowTrajectory& traj) {
    auto os = io::open_out(path);
    os << io::kStepsSchema << "\n" << "step,t,E,D,cumulative_D,dt\n";
    for (std::size_t k = 0; k < traj.samples.size(); ++k) {
        const FlowSample& s = traj.samples[k];
        os << k << "," << io::fmt(s.t) << "," << io::fmt(s.energy) << "," << io::fmt(s.dissipation) << ","
           << io::fmt(s.cumulative_dissipation) << "," << io::fmt(s.dt) << "\n";
    }
}

inline void write_json(const fs::path& path, const nlohmann::json& j) {
    auto os = io::open_out(path);
    os << j.dump(2) << "\n";
}

}  // namespace detail

/// Runs the flow described by config and writes the run directory out_dir.
/// An aborted flow still writes steps.csv and summary.json (status "aborted")
/// before the AbortedRunError propagates.
inline RunSummary run_experiment(const FlowConfig& config, const fs::path& out_dir) {
    validate(config);
    fs::create_directories(out_dir);
    {
        auto os = io::open_out(out_dir / "config.json");
        os << emit_config(config);
    }

    const MapState initial = make_initial_state(config.initial, config.n1, config.n2, config.seed);
    RunSummary summary;
    FlowTrajectory traj;
    try {
        traj = run_flow(initial, config.flow_options());
    } catch (const AbortedRunError& e) {
        detail::write_steps(out_dir / "steps.csv", e.partial);
        summary.status = "aborted";
        summary.steps = e.partial.samples.size() - 1;
        summary.rejected_steps = e.partial.rejected_steps;
        summary.monotonicity_violations = e.partial.monotonicity_violations(kMonotonicityTolerance);
        summary.t_end = e.partial.samples.back().t;
        detail::write_json(out_dir / "summary.json", to_json(summary));
        throw;
    }

    detail::write_steps(out_dir / "steps.csv", traj);

    std::vector<double> cumulative;
    std::vector<double> dts;
    for (std::size_t idx : traj.snapshot_samples) {
        cumulative.push_back(traj.samples[idx].cumulative_dissipation);
        dts.push_back(traj.samples[idx].dt);
    }
    const std::vector<SeriesRow> rows = compute_series(traj.snapshots, cumulative, dts, config);
    write_series(out_dir / "series.csv", rows, config.test_functions.size());

    auto binning = std::make_shared<const FundamentalDomainBinning>(config.bins_x, config.bins_y, config.y_max);
    std::vector<PushforwardMeasure> measures;
    for (std::size_t k = 0; k < traj.snapshots.size(); ++k) {
        io::write_snapshot(out_dir / "snapshots" / detail::numbered("snap", k), traj.snapshots[k]);
        measures.push_back(pushforward(traj.snapshots[k], binning));
        io::write_measure(out_dir / "measures" / detail::numbered("mu", k), measures.back());
    }
    if (measures.size() >= 2) {
        io::write_measure(out_dir / "measures" / "mu_bar.csv", time_average(measures, traj.snapshots.back().t()));
    } else {
        io::write_measure(out_dir / "measures" / "mu_bar.csv", measures.front());
    }

    {
        auto os = io::open_out(out_dir / "entropy.jsonl");
        os << io::entropy_header().dump() << "\n";
        for (const SeriesRow& r : rows) os << io::to_json(r.report).dump() << "\n";
    }

    summary.steps = traj.samples.size() - 1;
    summary.rejected_steps = traj.rejected_steps;
    summary.stalled = traj.stalled;
    summary.monotonicity_violations = traj.monotonicity_violations(kMonotonicityTolerance);
    summary.energy_identity_error = traj.energy_identity_error();
    summary.energy_initial = traj.samples.front().energy;
    summary.energy_final = traj.samples.back().energy;
    summary.cumulative_dissipation = traj.samples.back().cumulative_dissipation;
    summary.t_end = traj.samples.back().t;
    summary.snapshots = traj.snapshots.size();
    summary.final_row = rows.back();
    detail::write_json(out_dir / "summary.json", to_json(summary));
    return summary;
}

/// Result of recomputing a run directory from its snapshot files.
struct AnalysisReport {
    std::vector<std::string> columns;
    /// max |stored - recomputed| per column
    std::vector<double> max_deviation;
    std::size_t rows = 0;

    bool passed(double tol = kAuditTolerance) const {
        return std::all_of(max_deviation.begin(), max_deviation.end(), [tol](double d) { return d <= tol; });
    }
};

inline std::vector<fs::path> list_snapshots(const fs::path& run_dir) {
    std::vector<fs::path> files;
    const fs::path dir = run_dir / "snapshots";
    if (!fs::is_directory(dir)) throw FormatError("missing directory " + dir.string());
    for (const auto& e : fs::directory_iterator(dir)) {
        if (e.path().extension() == ".csv") files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    if (files.empty()) throw FormatError("no snapshots in " + dir.string());
    return files;
}

/// Recomputes every series column from config.json and the snapshot files and
/// writes analysis.csv. cumulative_D and dt are trajectory quantities; they are
/// checked against the steps.csv row with the same t.
inline AnalysisReport analyze(const fs::path& run_dir) {
    std::string text;
    {
        auto is = io::open_in(run_dir / "config.json");
        std::stringstream ss;
        ss << is.rdbuf();
        text = ss.str();
    }
    const FlowConfig config = parse_config(text);

    std::vector<MapState> snapshots;
    for (const auto& p : list_snapshots(run_dir)) snapshots.push_back(io::read_snapshot(p));

    const Table steps = read_table(run_dir / "steps.csv", io::kStepsSchema);
    const std::size_t st_t = steps.column("t");
    std::map<double, std::pair<double, double>> by_time;
    for (const auto& r : steps.rows) by_time[r[st_t]] = {r[steps.column("cumulative_D")], r[steps.column("dt")]};

    std::vector<double> cumulative;
    std::vector<double> dts;
    for (const MapState& s : snapshots) {
        const auto it = by_time.find(s.t());
        if (it == by_time.end()) throw FormatError("snapshot at t = " + io::fmt(s.t()) + " has no steps.csv row");
        cumulative.push_back(it->second.first);
        dts.push_back(it->second.second);
    }
    const std::vector<SeriesRow> rows = compute_series(snapshots, cumulative, dts, config);
    write_series(run_dir / "analysis.csv", rows, config.test_functions.size());

    const Table stored = read_table(run_dir / "series.csv", io::kSeriesSchema);
    AnalysisReport rep;
    rep.columns = series_columns(config.test_functions.size());
    if (stored.columns != rep.columns) throw FormatError("series.csv columns do not match the configuration");
    if (stored.rows.size() != rows.size()) {
        throw FormatError("series.csv has " + std::to_string(stored.rows.size()) + " rows but there are " +
                          std::to_string(rows.size()) + " snapshots");
    }
    rep.rows = rows.size();
    rep.max_deviation.assign(rep.columns.size(), 0.0);
    for (std::size_t k = 0; k < rows.size(); ++k) {
        const auto v = series_values(rows[k]);
        for (std::size_t c = 0; c < v.size(); ++c) {
            const double d = std::fabs(v[c] - stored.rows[k][c]);
            rep.max_deviation[c] = std::max(rep.max_deviation[c], std::isnan(d) ? INFINITY : d);
        }
    }
    return rep;
}

/// Independent runs written to out_root/<name>, at most max_parallel at a time.
/// Returns one error message per failed run (empty string on success).
inline std::vector<std::string> sweep(const std::vector<std::pair<std::string, FlowConfig>>& runs,
                                      const fs::path& out_root, std::size_t max_parallel) {
    std::vector<std::string> errors(runs.size());
    std::size_t next = 0;
    std::mutex m;
    auto worker = [&] {
        for (;;) {
            std::size_t k;
            {
                std::lock_guard lock(m);
                if (next >= runs.size()) return;
                k = next++;
            }
            try {
                run_experiment(runs[k].second, out_root / runs[k].first);
            } catch (const std::exception& e) {
                errors[k] = e.what();
            }
        }
    };
    std::vector<std::jthread> pool;
    const std::size_t n = std::max<std::size_t>(1, std::min(max_parallel, runs.size()));
    for (std::size_t w = 0; w < n; ++w) pool.emplace_back(worker);
    pool.clear();
    return errors;
}

}  // namespace modflow
