#pragma once

#include "pnms/engine.hpp"
#include "pnms/poll_plan.hpp"
#include "pnms/switch_net.hpp"

#include <filesystem>
#include <istream>
#include <string>
#include <vector>

namespace pnms
{
    // All configuration-validation failures for one file, each naming its field.
    class ConfigError : public std::runtime_error
    {
    public:
        explicit ConfigError(std::vector<std::string> errors);
        const std::vector<std::string>& errors() const { return m_errors; }

    private:
        static std::string join(const std::vector<std::string>& errors);
        std::vector<std::string> m_errors;
    };

    struct ExperimentConfig
    {
        // [run]
        Ticks duration = ticks_from_units(1000.0);
        std::uint64_t seed = 1;
        Ticks delta = 0;  // 0: min(upsilon, 1 time unit)
        GvtMode gvt_mode = GvtMode::Exact;
        bool deterministic = true;
        bool pace_wall_clock = false;
        std::string out_dir;

        // [window]
        Ticks lambda = ticks_from_units(5.0);

        // [verify]
        double theta = 10.0;
        Ticks upsilon = ticks_from_units(5.0);
        bool calibrate = false;

        // [topology]
        NetworkParams topology;

        // [lp]
        int save_every = 1;
        bool replay_check = true;

        // [plan]
        PollingParams plan;
        double plan_budget_pct = 1.0;

        // [error_model] for the planner
        ErrorModel plan_model;

        EngineParams engine_params() const;
        NetworkParams network_params() const
        {
            NetworkParams p = topology;
            p.seed = seed;
            return p;
        }
    };

    ExperimentConfig parse_config(std::istream& in);
    ExperimentConfig load_config(const std::filesystem::path& path);
}
