#pragma once

#include "pnms/config.hpp"
#include "pnms/engine.hpp"

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

namespace pnms
{
    struct RunReport
    {
        std::string name = "run";
        RunStats stats;
        std::map<std::string, std::size_t> trace_counts;
        std::filesystem::path trace_path;  // empty when the run was not traced
        double wall_ms = 0.0;
        double lambda_units = 0.0;
        double theta = 0.0;
        double upsilon_units = 0.0;
        std::uint64_t seed = 0;
    };

    nlohmann::json report_json(const RunReport& report);

    // Executes the coordinator loop for the configured duration; traces when
    // the config names an output directory (or `trace_to` overrides it).
    RunReport run_experiment(const ExperimentConfig& cfg,
                             const std::filesystem::path& trace_to = {});

    // The four standard parameter triples plus the exact-twin control, with a
    // comparative summary written alongside the per-run traces.
    std::vector<RunReport> run_suite(const std::filesystem::path& out_dir, std::uint64_t seed);

    // The suite's run configurations, also used by the acceptance checks.
    ExperimentConfig suite_config(const std::string& name, std::uint64_t seed);
    std::vector<std::string> suite_run_names();
}
