#include "pnms/config.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

namespace pnms
{
    namespace
    {
        std::string trim(const std::string& s)
        {
            const auto b = s.find_first_not_of(" \t\r\n");
            if (b == std::string::npos)
            {
                return "";
            }
            const auto e = s.find_last_not_of(" \t\r\n");
            return s.substr(b, e - b + 1);
        }

        using Sections = std::map<std::string, std::map<std::string, std::string>>;

        Sections read_sections(std::istream& in, std::vector<std::string>& errors)
        {
            Sections sections;
            std::string line;
            std::string current = "run";
            int lineno = 0;
            while (std::getline(in, line))
            {
                ++lineno;
                const auto hash = line.find('#');
                if (hash != std::string::npos)
                {
                    line = line.substr(0, hash);
                }
                line = trim(line);
                if (line.empty())
                {
                    continue;
                }
                if (line.front() == '[')
                {
                    if (line.back() != ']')
                    {
                        errors.push_back("line " + std::to_string(lineno) + ": unterminated section header");
                        continue;
                    }
                    current = trim(line.substr(1, line.size() - 2));
                    continue;
                }
                const auto eq = line.find('=');
                if (eq == std::string::npos)
                {
                    errors.push_back("line " + std::to_string(lineno) + ": expected key = value");
                    continue;
                }
                const std::string key = trim(line.substr(0, eq));
                const std::string value = trim(line.substr(eq + 1));
                if (key.empty())
                {
                    errors.push_back("line " + std::to_string(lineno) + ": empty key");
                    continue;
                }
                sections[current][key] = value;
            }
            return sections;
        }

        class Extractor
        {
        public:
            Extractor(Sections sections, std::vector<std::string>& errors)
                : m_sections(std::move(sections)), m_errors(errors)
            {
            }

            template <class Fn>
            void take(const std::string& section, const std::string& key, Fn&& apply)
            {
                auto sec = m_sections.find(section);
                if (sec == m_sections.end())
                {
                    return;
                }
                auto it = sec->second.find(key);
                if (it == sec->second.end())
                {
                    return;
                }
                const std::string value = it->second;
                sec->second.erase(it);
                try
                {
                    apply(value);
                }
                catch (const std::exception& e)
                {
                    m_errors.push_back(section + "." + key + ": " + e.what());
                }
            }

            void report_unknown()
            {
                for (const auto& [section, kvs] : m_sections)
                {
                    for (const auto& [key, value] : kvs)
                    {
                        (void)value;
                        m_errors.push_back(section + "." + key + ": unknown setting");
                    }
                }
            }

        private:
            Sections m_sections;
            std::vector<std::string>& m_errors;
        };

        double parse_double(const std::string& v)
        {
            if (v == "inf" || v == "infinity")
            {
                return std::numeric_limits<double>::infinity();
            }
            std::size_t pos = 0;
            const double d = std::stod(v, &pos);
            if (pos != v.size())
            {
                throw std::invalid_argument("trailing characters after number");
            }
            return d;
        }

        std::uint64_t parse_u64(const std::string& v)
        {
            std::size_t pos = 0;
            const auto n = std::stoull(v, &pos);
            if (pos != v.size())
            {
                throw std::invalid_argument("not an integer");
            }
            return n;
        }

        bool parse_bool(const std::string& v)
        {
            if (v == "true" || v == "1" || v == "yes" || v == "on")
            {
                return true;
            }
            if (v == "false" || v == "0" || v == "no" || v == "off")
            {
                return false;
            }
            throw std::invalid_argument("expected a boolean");
        }
    }

    ConfigError::ConfigError(std::vector<std::string> errors)
        : std::runtime_error(join(errors)), m_errors(std::move(errors))
    {
    }

    std::string ConfigError::join(const std::vector<std::string>& errors)
    {
        std::string out = "configuration errors:";
        for (const auto& e : errors)
        {
            out += "\n  - " + e;
        }
        return out;
    }

    EngineParams ExperimentConfig::engine_params() const
    {
        EngineParams p;
        p.lambda = lambda;
        p.delta = delta;
        p.upsilon = upsilon;
        p.theta = theta;
        p.duration = duration;
        p.gvt_mode = deterministic ? GvtMode::Exact : gvt_mode;
        p.save_every = save_every;
        p.replay_check = replay_check;
        p.calibrate = calibrate;
        p.pace_wall_clock = pace_wall_clock;
        return p;
    }

    ExperimentConfig parse_config(std::istream& in)
    {
        std::vector<std::string> errors;
        Extractor ex(read_sections(in, errors), errors);
        ExperimentConfig cfg;

        ex.take("run", "duration", [&](const std::string& v) { cfg.duration = parse_ticks(v); });
        ex.take("run", "seed", [&](const std::string& v) { cfg.seed = parse_u64(v); });
        ex.take("run", "delta", [&](const std::string& v) { cfg.delta = parse_ticks(v); });
        ex.take("run", "gvt", [&](const std::string& v)
                {
                    if (v == "exact") cfg.gvt_mode = GvtMode::Exact;
                    else if (v == "approx") cfg.gvt_mode = GvtMode::Approx;
                    else throw std::invalid_argument("expected exact or approx");
                });
        ex.take("run", "deterministic", [&](const std::string& v) { cfg.deterministic = parse_bool(v); });
        ex.take("run", "pace_wall_clock", [&](const std::string& v) { cfg.pace_wall_clock = parse_bool(v); });
        ex.take("run", "out", [&](const std::string& v) { cfg.out_dir = v; });

        ex.take("window", "lambda", [&](const std::string& v) { cfg.lambda = parse_ticks(v); });

        ex.take("verify", "theta", [&](const std::string& v)
                {
                    cfg.theta = parse_double(v);
                    if (cfg.theta < 0.0 || std::isnan(cfg.theta))
                    {
                        throw std::invalid_argument("tolerance must be non-negative (inf allowed)");
                    }
                });
        ex.take("verify", "upsilon", [&](const std::string& v) { cfg.upsilon = parse_ticks(v); });
        ex.take("verify", "calibrate", [&](const std::string& v) { cfg.calibrate = parse_bool(v); });

        ex.take("topology", "switches", [&](const std::string& v)
                { cfg.topology.switches = static_cast<std::uint32_t>(parse_u64(v)); });
        ex.take("topology", "servers", [&](const std::string& v)
                { cfg.topology.servers = static_cast<std::uint32_t>(parse_u64(v)); });
        ex.take("topology", "mean_service", [&](const std::string& v)
                { cfg.topology.mean_service = parse_double(v); });
        ex.take("topology", "packets_per_switch", [&](const std::string& v)
                { cfg.topology.packets_per_switch = static_cast<std::uint32_t>(parse_u64(v)); });

        ex.take("twin", "mean_service", [&](const std::string& v)
                { cfg.topology.twin_mean_service = parse_double(v); });
        ex.take("twin", "exact", [&](const std::string& v)
                { cfg.topology.exact_twin = parse_bool(v); });

        ex.take("lp", "save_every", [&](const std::string& v)
                { cfg.save_every = static_cast<int>(parse_u64(v)); });
        ex.take("lp", "replay_check", [&](const std::string& v) { cfg.replay_check = parse_bool(v); });

        ex.take("plan", "packets_per_poll", [&](const std::string& v)
                { cfg.plan.packets_per_poll = parse_double(v); });
        ex.take("plan", "bits_per_packet", [&](const std::string& v)
                { cfg.plan.bits_per_packet = parse_double(v); });
        ex.take("plan", "devices", [&](const std::string& v) { cfg.plan.devices = parse_double(v); });
        ex.take("plan", "poll_cost", [&](const std::string& v) { cfg.plan.poll_cost = parse_double(v); });
        ex.take("plan", "bandwidth", [&](const std::string& v) { cfg.plan.bandwidth = parse_double(v); });
        ex.take("plan", "budget_pct", [&](const std::string& v)
                { cfg.plan_budget_pct = parse_double(v); });

        ex.take("error_model", "gain", [&](const std::string& v) { cfg.plan_model.gain = parse_double(v); });
        ex.take("error_model", "eps_per_hop", [&](const std::string& v)
                { cfg.plan_model.eps_per_hop = parse_double(v); });
        ex.take("error_model", "hop_time", [&](const std::string& v)
                { cfg.plan_model.hop_time = parse_double(v); });
        ex.take("error_model", "me", [&](const std::string& v) { cfg.plan_model.me_dp = parse_double(v); });

        ex.report_unknown();

        if (cfg.duration <= 0)
        {
            errors.push_back("run.duration: must be positive");
        }
        if (cfg.upsilon <= 0)
        {
            errors.push_back("verify.upsilon: must be positive");
        }
        else if (cfg.upsilon > cfg.duration)
        {
            errors.push_back("verify.upsilon: must not exceed run.duration");
        }
        if (cfg.lambda < 0)
        {
            errors.push_back("window.lambda: must be non-negative");
        }
        if (cfg.topology.switches < 1)
        {
            errors.push_back("topology.switches: need at least one switch");
        }
        if (cfg.topology.servers < 1)
        {
            errors.push_back("topology.servers: need at least one server stage");
        }
        if (cfg.topology.packets_per_switch < 1)
        {
            errors.push_back("topology.packets_per_switch: need at least one packet");
        }
        if (!(cfg.topology.mean_service > 0.0))
        {
            errors.push_back("topology.mean_service: must be positive");
        }
        if (cfg.topology.twin_mean_service && !(*cfg.topology.twin_mean_service > 0.0))
        {
            errors.push_back("twin.mean_service: must be positive");
        }
        if (cfg.save_every < 1)
        {
            errors.push_back("lp.save_every: must be at least 1");
        }

        if (!errors.empty())
        {
            throw ConfigError(std::move(errors));
        }
        return cfg;
    }

    ExperimentConfig load_config(const std::filesystem::path& path)
    {
        std::ifstream in(path);
        if (!in)
        {
            throw ConfigError({"cannot open config file: " + path.string()});
        }
        return parse_config(in);
    }
}
