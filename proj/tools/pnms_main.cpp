#include "pnms/config.hpp"
#include "pnms/plot.hpp"
#include "pnms/poll_plan.hpp"
#include "pnms/runner.hpp"

#include <iostream>

#include <CLI11.hpp>

namespace
{
    constexpr int kExitOk = 0;
    constexpr int kExitError = 1;
    constexpr int kExitConfig = 2;
    constexpr int kExitInfeasible = 3;

    int cmd_run(const std::string& config_path, std::optional<std::uint64_t> seed,
                bool deterministic, const std::string& gvt, const std::string& out)
    {
        pnms::ExperimentConfig cfg = pnms::load_config(config_path);
        if (seed)
        {
            cfg.seed = *seed;
        }
        if (deterministic)
        {
            cfg.deterministic = true;
        }
        if (gvt == "exact")
        {
            cfg.gvt_mode = pnms::GvtMode::Exact;
        }
        else if (gvt == "approx")
        {
            cfg.gvt_mode = pnms::GvtMode::Approx;
            cfg.deterministic = false;
        }
        if (!out.empty())
        {
            cfg.out_dir = out;
        }

        const pnms::RunReport report = pnms::run_experiment(cfg);
        std::cout << pnms::report_json(report).dump(2) << '\n';
        return kExitOk;
    }

    int cmd_suite(const std::string& out, std::uint64_t seed)
    {
        const auto reports = pnms::run_suite(out, seed);
        std::cout << "name                 causality  verification  polls   max_t_ahead\n";
        for (const auto& r : reports)
        {
            std::printf("%-20s %9llu %13llu %6llu %13.3f\n", r.name.c_str(),
                        static_cast<unsigned long long>(r.stats.causality_rollbacks),
                        static_cast<unsigned long long>(r.stats.verification_rollbacks),
                        static_cast<unsigned long long>(r.stats.polls),
                        pnms::units_from_ticks(r.stats.max_t_ahead));
        }
        std::cout << "summary written to " << (std::filesystem::path(out) / "summary.json").string()
                  << '\n';
        return kExitOk;
    }

    int cmd_plan(const std::string& config_path)
    {
        const pnms::ExperimentConfig cfg = pnms::load_config(config_path);
        const auto rec =
            pnms::recommend_interval(cfg.plan_model, cfg.theta, cfg.plan, cfg.plan_budget_pct);

        nlohmann::json j;
        j["feasible"] = rec.feasible;
        j["unbounded"] = rec.unbounded;
        j["lower_bound"] = rec.lower_bound;
        if (rec.period)
        {
            j["interval"] = *rec.period;
            pnms::PollingParams at = cfg.plan;
            at.period = *rec.period;
            j["overhead_pct"] = pnms::overhead_bandwidth_pct(at);
        }
        if (!rec.feasible)
        {
            j["binding"] = rec.binding;
        }
        std::cout << j.dump(2) << '\n';
        return rec.feasible ? kExitOk : kExitInfeasible;
    }

    int cmd_plot(const std::string& trace, const std::string& out)
    {
        const auto files = pnms::emit_plots(trace, out.empty()
                                                       ? std::filesystem::path(trace).parent_path()
                                                       : std::filesystem::path(out));
        for (const auto& f : files)
        {
            std::cout << f.string() << '\n';
        }
        return kExitOk;
    }
}

int main(int argc, char** argv)
{
    CLI::App app{"predictive network management simulation kernel"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out;
    std::string gvt;
    std::string trace;
    std::optional<std::uint64_t> seed;
    std::uint64_t suite_seed = 1;
    bool deterministic = false;

    auto* run = app.add_subcommand("run", "execute one experiment from a config file");
    run->add_option("--config", config_path, "experiment config file")->required();
    run->add_option("--seed", seed, "override the run seed");
    run->add_flag("--deterministic", deterministic,
                  "sequential scheduler with exact GVT (hash-stable traces)");
    run->add_option("--gvt", gvt, "GVT mode: exact or approx")
        ->check(CLI::IsMember({"exact", "approx"}));
    run->add_option("--out", out, "output directory for the trace");

    auto* suite = app.add_subcommand("suite", "run the full experiment suite");
    suite->add_option("--out", out, "output directory")->required();
    suite->add_option("--seed", suite_seed, "suite seed");

    auto* plan = app.add_subcommand("plan", "recommend a polling interval from a config file");
    plan->add_option("--config", config_path, "experiment config file")->required();

    auto* plot = app.add_subcommand("plot", "render figures from a run trace");
    plot->add_option("--trace", trace, "trace.jsonl produced by run or suite")->required();
    plot->add_option("--out", out, "output directory for figures");

    CLI11_PARSE(app, argc, argv);

    try
    {
        if (run->parsed())
        {
            return cmd_run(config_path, seed, deterministic, gvt, out);
        }
        if (suite->parsed())
        {
            return cmd_suite(out, suite_seed);
        }
        if (plan->parsed())
        {
            return cmd_plan(config_path);
        }
        if (plot->parsed())
        {
            return cmd_plot(trace, out);
        }
    }
    catch (const pnms::ConfigError& e)
    {
        std::cerr << e.what() << '\n';
        return kExitConfig;
    }
    catch (const std::exception& e)
    {
        std::cerr << "error: " << e.what() << '\n';
        return kExitError;
    }
    return kExitOk;
}
