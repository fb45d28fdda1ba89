/*
 * Copyright 2026 The relaxha Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "commands.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>

#include "relaxha/report.hpp"
#include "relaxha/scenario.hpp"

namespace relaxha::cli {

namespace fs = std::filesystem;

namespace {

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw IoError("cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const fs::path& path, const std::string& data) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out || !(out << data) || !out.flush())
        throw IoError("cannot write " + path.string());
}

void print_diagnostics(const ConfigError& e, std::ostream& out) {
    for (const auto& d : e.diagnostics())
        out << d.key << ": " << d.message << "\n";
}

int cmd_validate(const std::string& path, std::ostream& out) {
    const std::string text = slurp(path);
    load_cluster_config(text);
    out << "OK\n";
    return kOk;
}

std::string monitor_file_name(int replication, Seconds t) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%d-%08lld.xml", replication, static_cast<long long>(t));
    return buf;
}

int cmd_run(const std::string& path, std::optional<std::uint64_t> seed_override, const fs::path& out_dir,
            bool emit_monitor_log, std::ostream& out, std::ostream& err) {
    const fs::path scenario_path(path);
    const std::string text = slurp(scenario_path);
    Scenario sc;
    try {
        sc = load_scenario(text, scenario_path.parent_path().empty() ? fs::path(".") : scenario_path.parent_path());
    } catch (const std::ios_base::failure& e) {
        throw IoError(e.what());
    }
    const std::uint64_t seed = seed_override.value_or(sc.seed.value_or(sc.cluster.timing.rng_seed));

    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec)
        throw IoError("cannot create " + out_dir.string() + ": " + ec.message());
    const fs::path monitor_dir = out_dir / "monitor";
    if (emit_monitor_log) {
        fs::remove_all(monitor_dir, ec);
        fs::create_directories(monitor_dir, ec);
        if (ec)
            throw IoError("cannot create " + monitor_dir.string() + ": " + ec.message());
    }

    std::ostringstream trace;
    std::vector<std::pair<std::string, std::string>> snapshots;
    auto options = [&](int i) {
        trace << "0 replication " << i << "\n";
        SimOptions o;
        o.trace = &trace;
        if (emit_monitor_log)
            o.monitor_log = [&snapshots, i](const MonitorSnapshot& s) {
                snapshots.emplace_back(monitor_file_name(i, s.taken_at), serialize_snapshot(s));
            };
        return o;
    };
    const SimReport report = run_replications(sc, seed, options);

    write_file(out_dir / "trace.txt", trace.str());
    write_file(out_dir / "report.csv", report_csv(report.aggregates));
    write_file(out_dir / "episodes.csv", episodes_csv(report.episodes));
    for (const auto& row : report.aggregates)
        write_file(out_dir / ("histogram_" + row.kind + ".csv"), histogram_csv(row));
    const std::string summary = summary_text(report.aggregates, report.episodes);
    write_file(out_dir / "summary.txt", summary);
    for (const auto& [name, xml] : snapshots)
        write_file(monitor_dir / name, xml);

    out << report_csv(report.aggregates);
    err << summary;
    return kOk;
}

int cmd_replicate(const std::string& name, int n, std::uint64_t seed, std::ostream& out, std::ostream& err) {
    const auto experiment = experiment_from_string(name);
    if (!experiment) {
        err << "unknown experiment '" << name << "' (expected nondestructive or destructive)\n";
        return kValidation;
    }
    const auto start = std::chrono::steady_clock::now();
    const SimReport report = replicate(*experiment, n, seed);
    const std::chrono::duration<double> took = std::chrono::steady_clock::now() - start;
    out << report_csv(report.aggregates);
    err << preset(*experiment).name << ": " << n << " episodes in " << took.count() << " s\n";
    return kOk;
}

int cmd_report(const std::string& path, Seconds bin_width, std::ostream& out) {
    const fs::path p(path);
    std::vector<Episode> episodes;
    if (fs::is_directory(p)) {
        if (fs::exists(p / "episodes.csv"))
            episodes = parse_episodes_csv(slurp(p / "episodes.csv"));
        else
            episodes = parse_trace(slurp(p / "trace.txt"));
    } else {
        const std::string text = slurp(p);
        episodes = text.rfind("id,vm_id,", 0) == 0 ? parse_episodes_csv(text) : parse_trace(text);
    }
    const Summary summary = summarize(episodes, bin_width);
    out << report_csv(summary) << "\n";
    out << "kind,bin_start_s,count\n";
    for (const auto& row : summary)
        for (const auto& bin : row.histogram)
            out << row.kind << "," << bin.bin_start_s << "," << bin.count << "\n";
    return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"relaxha: relaxed high-availability controller simulator", "relaxha"};
    app.require_subcommand(1, 1);

    std::string validate_path;
    auto* validate = app.add_subcommand("validate", "Check a cluster configuration");
    validate->add_option("config", validate_path, "Cluster configuration (JSON)")->required();

    std::string run_path;
    std::optional<std::uint64_t> run_seed;
    std::string run_out = "relaxha-out";
    bool emit_monitor_log = false;
    auto* run_cmd = app.add_subcommand("run", "Run a scenario and write its outputs");
    run_cmd->add_option("scenario", run_path, "Scenario file (JSON)")->required();
    run_cmd->add_option("--seed", run_seed, "Override the scenario seed");
    run_cmd->add_option("--out", run_out, "Output directory")->capture_default_str();
    run_cmd->add_flag("--emit-monitor-log", emit_monitor_log, "Write one XML snapshot per controller scan");

    std::string experiment;
    int n = 1000;
    std::uint64_t rep_seed = 42;
    auto* rep = app.add_subcommand("replicate", "Run a built-in crash experiment");
    rep->add_option("experiment", experiment, "nondestructive or destructive")->required();
    rep->add_option("--n", n, "Number of episodes")->check(CLI::PositiveNumber)->capture_default_str();
    rep->add_option("--seed", rep_seed, "Base seed")->capture_default_str();

    std::string report_path;
    Seconds bin_width = SimReport::kDefaultBinWidth;
    auto* report = app.add_subcommand("report", "Summarize a trace, episodes.csv or run directory");
    report->add_option("input", report_path, "Trace file, episodes.csv or output directory")->required();
    report->add_option("--bin-width", bin_width, "Histogram bin width in seconds")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        err << app.help();
        return kOk;
    } catch (const CLI::ParseError& e) {
        err << e.what() << "\n";
        return kValidation;
    }

    try {
        if (*validate)
            return cmd_validate(validate_path, out);
        if (*run_cmd)
            return cmd_run(run_path, run_seed, run_out, emit_monitor_log, out, err);
        if (*rep)
            return cmd_replicate(experiment, n, rep_seed, out, err);
        return cmd_report(report_path, bin_width, out);
    } catch (const ConfigError& e) {
        print_diagnostics(e, out);
        return kValidation;
    } catch (const IoError& e) {
        err << e.what() << "\n";
        return kIo;
    } catch (const std::ios_base::failure& e) {
        err << e.what() << "\n";
        return kIo;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kValidation;
    }
}

}  // namespace relaxha::cli
