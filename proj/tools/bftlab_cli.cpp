// Copyright 2026 the bftlab developers. Licensed under the Apache License,
// Version 2.0. See the LICENSE file at the root of this distribution or at
// http://www.apache.org/licenses/LICENSE-2.0

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <future>
#include <iostream>

#include "bftlab/harness.hpp"

using namespace bftlab;
namespace fs = std::filesystem;

namespace {

struct RunResult {
    uint64_t seed;
    bool ok;
    std::string summary;
};

RunResult run_one(ScenarioConfig config, uint64_t seed, const fs::path& out_dir, bool with_trace) {
    config.seed = seed;
    std::vector<TraceEvent> trace;
    RunReport report = run_scenario(config, with_trace ? &trace : nullptr);

    std::string stem = config.name + "-" + std::to_string(seed);
    {
        std::ofstream out(out_dir / (stem + ".report.json"));
        out << report.to_json() << "\n";
    }
    {
        std::ofstream csv(out_dir / (stem + ".metrics.csv"));
        emit_metrics(report, csv);
    }
    if (with_trace) {
        std::ofstream out(out_dir / (stem + ".trace.jsonl"));
        out << trace_to_jsonl(trace);
    }

    std::ostringstream line;
    line << config.name << " seed=" << seed << " verdict="
         << (report.safety_ok ? "ok" : "VIOLATION")
         << " committed=" << report.metrics.committed_txns_min
         << " completed=" << report.metrics.completed_requests
         << " view_changes=" << report.metrics.view_changes;
    if (report.violation)
        line << " (replicas " << report.violation->replica_a << "/" << report.violation->replica_b
             << " diverge at seq " << report.violation->seq << ")";
    return RunResult{seed, report.safety_ok, line.str()};
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"bftlab: consensus protocols in a deterministic simulated network"};
    app.require_subcommand(1);

    std::string scenario_path;
    std::string out_dir = ".";
    int64_t seed_override = -1;
    uint32_t runs = 1;
    uint32_t jobs = 1;
    bool no_trace = false;

    auto* run_cmd = app.add_subcommand("run", "run a scenario file");
    run_cmd->add_option("--scenario", scenario_path, "scenario JSON file")->required();
    run_cmd->add_option("--seed", seed_override, "override the scenario seed");
    run_cmd->add_option("--runs", runs, "number of consecutive seeds to run")->default_val(1);
    run_cmd->add_option("--jobs", jobs, "parallel workers for independent seeds")->default_val(1);
    run_cmd->add_option("--out", out_dir, "output directory")->default_val(".");
    run_cmd->add_flag("--no-trace", no_trace, "skip writing the trace file");

    std::string report_path;
    auto* verify_cmd = app.add_subcommand("verify", "recheck safety from a report's chains");
    verify_cmd->add_option("--report", report_path, "report JSON file")->required();

    std::vector<std::string> compare_paths;
    std::string metric = "messages";
    auto* compare_cmd = app.add_subcommand("compare", "compare two run reports");
    compare_cmd->add_option("--reports", compare_paths, "two report JSON files")
        ->expected(2)
        ->required();
    compare_cmd->add_option("--metric", metric, "messages|latency|throughput")
        ->check(CLI::IsMember({"messages", "latency", "throughput"}));

    CLI11_PARSE(app, argc, argv);

    try {
        if (run_cmd->parsed()) {
            ScenarioConfig config = ScenarioConfig::from_file(scenario_path);
            if (seed_override >= 0) config.seed = static_cast<uint64_t>(seed_override);
            fs::create_directories(out_dir);

            std::vector<uint64_t> seeds;
            for (uint32_t i = 0; i < runs; ++i) seeds.push_back(config.seed + i);

            bool all_ok = true;
            if (jobs <= 1) {
                for (uint64_t seed : seeds) {
                    RunResult r = run_one(config, seed, out_dir, !no_trace);
                    std::cout << r.summary << "\n";
                    all_ok &= r.ok;
                }
            } else {
                // Runs share nothing; independent seeds fan out over a pool.
                std::vector<std::future<RunResult>> pending;
                size_t next = 0;
                std::vector<RunResult> results;
                while (next < seeds.size() || !pending.empty()) {
                    while (next < seeds.size() && pending.size() < jobs) {
                        uint64_t seed = seeds[next++];
                        pending.push_back(std::async(std::launch::async, run_one, config, seed,
                                                     fs::path(out_dir), !no_trace));
                    }
                    results.push_back(pending.front().get());
                    pending.erase(pending.begin());
                }
                std::sort(results.begin(), results.end(),
                          [](const RunResult& a, const RunResult& b) { return a.seed < b.seed; });
                for (const auto& r : results) {
                    std::cout << r.summary << "\n";
                    all_ok &= r.ok;
                }
            }
            return all_ok ? 0 : 2;
        }

        if (verify_cmd->parsed()) {
            std::ifstream in(report_path);
            if (!in) {
                std::cerr << "cannot open " << report_path << "\n";
                return 1;
            }
            std::ostringstream buffer;
            buffer << in.rdbuf();
            RunReport report = RunReport::from_json(buffer.str());
            auto violation = verify_safety(report);
            bool stored_ok = report.safety_ok;
            bool recomputed_ok = !violation.has_value();
            std::cout << "stored verdict:     " << (stored_ok ? "ok" : "violation") << "\n";
            std::cout << "recomputed verdict: " << (recomputed_ok ? "ok" : "violation") << "\n";
            if (violation)
                std::cout << "replicas " << violation->replica_a << " and "
                          << violation->replica_b << " diverge at seq " << violation->seq << ": "
                          << violation->digest_a.short_hex() << " vs "
                          << violation->digest_b.short_hex() << "\n";
            if (stored_ok != recomputed_ok) {
                std::cerr << "report verdict does not match its chains\n";
                return 1;
            }
            return recomputed_ok ? 0 : 2;
        }

        if (compare_cmd->parsed()) {
            RunReport reports[2];
            for (int i = 0; i < 2; ++i) {
                std::ifstream in(compare_paths[i]);
                if (!in) {
                    std::cerr << "cannot open " << compare_paths[i] << "\n";
                    return 1;
                }
                std::ostringstream buffer;
                buffer << in.rdbuf();
                reports[i] = RunReport::from_json(buffer.str());
            }
            auto value = [&](const RunReport& r) -> double {
                if (metric == "messages") return static_cast<double>(r.metrics.total_protocol_sends);
                if (metric == "latency") return r.metrics.latency.mean_x1000 / 1000.0;
                // throughput: committed transactions per 1000 ticks of p99 window
                if (r.metrics.latency.p99 == 0) return 0.0;
                return 1000.0 * static_cast<double>(r.metrics.committed_txns_min) /
                       static_cast<double>(r.metrics.latency.p99);
            };
            for (int i = 0; i < 2; ++i)
                std::cout << reports[i].scenario << " (" << reports[i].protocol << ") " << metric
                          << " = " << value(reports[i]) << "\n";
            if (value(reports[1]) != 0.0)
                std::cout << "ratio = " << value(reports[0]) / value(reports[1]) << "\n";
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
