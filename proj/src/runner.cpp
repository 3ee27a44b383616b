#include "pnms/runner.hpp"

#include <chrono>
#include <fstream>

namespace pnms
{
    nlohmann::json report_json(const RunReport& report)
    {
        nlohmann::json j;
        j["name"] = report.name;
        j["seed"] = report.seed;
        j["triple"] = {{"lambda", report.lambda_units},
                       {"theta", std::isinf(report.theta) ? nlohmann::json("inf")
                                                          : nlohmann::json(report.theta)},
                       {"upsilon", report.upsilon_units}};
        j["rollbacks"] = {{"causality", report.stats.causality_rollbacks},
                          {"verification", report.stats.verification_rollbacks}};
        j["polls"] = report.stats.polls;
        j["executions"] = report.stats.executions;
        j["checks"] = {{"total", report.stats.checks},
                       {"failed", report.stats.checks_failed},
                       {"skipped", report.stats.skipped_verifications},
                       {"unverifiable", report.stats.unverifiable}};
        j["max_t_ahead"] = units_from_ticks(report.stats.max_t_ahead);
        j["max_abs_error"] = report.stats.max_abs_delta;
        j["mean_abs_error"] = report.stats.mean_abs_delta;
        j["unmatched_antis"] = report.stats.unmatched_antis;

        nlohmann::json finals = nlohmann::json::array();
        for (const auto& f : report.stats.finals)
        {
            finals.push_back({{"device", f.device}, {"predicted", f.predicted}, {"actual", f.actual}});
        }
        j["finals"] = finals;

        if (report.stats.fitted)
        {
            j["calibration"] = {{"eps_per_hop", report.stats.fitted->eps_per_hop},
                                {"hop_time", report.stats.fitted->hop_time},
                                {"t_vfail", std::isinf(report.stats.fitted_t_vfail)
                                                ? nlohmann::json("inf")
                                                : nlohmann::json(report.stats.fitted_t_vfail)},
                                {"recommended_upsilon",
                                 std::isinf(report.stats.recommended_upsilon)
                                     ? nlohmann::json("inf")
                                     : nlohmann::json(report.stats.recommended_upsilon)}};
        }

        nlohmann::json counts = nlohmann::json::object();
        for (const auto& [kind, n] : report.trace_counts)
        {
            counts[kind] = n;
        }
        j["trace_counts"] = counts;
        if (!report.trace_path.empty())
        {
            j["trace"] = report.trace_path.string();
        }
        j["wall_ms"] = report.wall_ms;
        return j;
    }

    RunReport run_experiment(const ExperimentConfig& cfg, const std::filesystem::path& trace_to)
    {
        std::filesystem::path trace_path = trace_to;
        if (trace_path.empty() && !cfg.out_dir.empty())
        {
            trace_path = std::filesystem::path(cfg.out_dir) / "trace.jsonl";
        }

        std::unique_ptr<TraceWriter> trace;
        if (!trace_path.empty())
        {
            trace = std::make_unique<TraceWriter>(trace_path);
        }

        const auto started = std::chrono::steady_clock::now();
        Coordinator coord(cfg.network_params(), cfg.engine_params(), trace.get());
        RunReport report;
        report.stats = coord.run();
        report.wall_ms = std::chrono::duration<double, std::milli>(
                             std::chrono::steady_clock::now() - started)
                             .count();
        report.lambda_units = units_from_ticks(cfg.lambda);
        report.theta = cfg.theta;
        report.upsilon_units = units_from_ticks(cfg.upsilon);
        report.seed = cfg.seed;
        if (trace)
        {
            report.trace_counts = trace->counts_by_kind();
            report.trace_path = trace->path();
        }
        return report;
    }

    namespace
    {
        // Load level for the suite: three circulating packets per switch make
        // the tolerance contrast visible within the default duration.
        constexpr std::uint32_t kSuitePackets = 3;

        ExperimentConfig triple_config(double lambda, double theta, double upsilon,
                                       std::uint64_t seed, bool exact)
        {
            ExperimentConfig cfg;
            cfg.duration = ticks_from_units(1000.0);
            cfg.seed = seed;
            cfg.lambda = ticks_from_units(lambda);
            cfg.theta = theta;
            cfg.upsilon = ticks_from_units(upsilon);
            cfg.topology.switches = 3;
            cfg.topology.servers = 10;
            cfg.topology.mean_service = 10.0;
            cfg.topology.packets_per_switch = kSuitePackets;
            cfg.topology.exact_twin = exact;
            if (!exact)
            {
                cfg.topology.twin_mean_service = 12.0;
            }
            cfg.calibrate = true;
            return cfg;
        }
    }

    std::vector<std::string> suite_run_names()
    {
        return {"exact_5_10_5", "t_5_10_5", "t_5_10_1", "t_5_3_5", "t_400_5_5"};
    }

    ExperimentConfig suite_config(const std::string& name, std::uint64_t seed)
    {
        if (name == "exact_5_10_5")
        {
            return triple_config(5, 10, 5, seed, true);
        }
        if (name == "t_5_10_5")
        {
            return triple_config(5, 10, 5, seed, false);
        }
        if (name == "t_5_10_1")
        {
            return triple_config(5, 10, 1, seed, false);
        }
        if (name == "t_5_3_5")
        {
            return triple_config(5, 3, 5, seed, false);
        }
        if (name == "t_400_5_5")
        {
            return triple_config(400, 5, 5, seed, false);
        }
        throw std::invalid_argument("unknown suite run: " + name);
    }

    std::vector<RunReport> run_suite(const std::filesystem::path& out_dir, std::uint64_t seed)
    {
        std::filesystem::create_directories(out_dir);
        std::vector<RunReport> reports;
        nlohmann::json summary = nlohmann::json::array();
        for (const std::string& name : suite_run_names())
        {
            const ExperimentConfig cfg = suite_config(name, seed);
            RunReport report = run_experiment(cfg, out_dir / name / "trace.jsonl");
            report.name = name;

            std::ofstream rep(out_dir / name / "report.json");
            rep << report_json(report).dump(2) << '\n';

            summary.push_back({{"name", name},
                               {"lambda", report.lambda_units},
                               {"theta", report.theta},
                               {"upsilon", report.upsilon_units},
                               {"causality_rollbacks", report.stats.causality_rollbacks},
                               {"verification_rollbacks", report.stats.verification_rollbacks},
                               {"polls", report.stats.polls},
                               {"max_t_ahead", units_from_ticks(report.stats.max_t_ahead)},
                               {"mean_abs_error", report.stats.mean_abs_delta}});
            reports.push_back(std::move(report));
        }
        std::ofstream sum(out_dir / "summary.json");
        sum << summary.dump(2) << '\n';
        return reports;
    }
}
