#pragma once

#include "pnms/lp.hpp"
#include "pnms/message.hpp"
#include "pnms/rng.hpp"
#include "pnms/time.hpp"

#include <cstdint>
#include <memory>
#include <set>
#include <span>
#include <vector>

namespace pnms
{
    // Shared dynamics contract for one switch (ground truth, predictive twin
    // and any oracle must all follow it so seeded runs align draw-for-draw):
    //   Arrivals at a switch are handled in (time, src, emission-seq) order.
    //   Per arrival: counter += 1; draw `servers` exponential stage times
    //   (each rounded to ticks), then one uniform destination over all
    //   switches including self; service starts at max(arrival, busy_until);
    //   the packet is forwarded at start + sum(stages).
    struct SwitchParams
    {
        std::uint32_t switches = 3;
        std::uint32_t servers = 10;
        double mean_service = 10.0;
    };

    struct NetworkParams
    {
        std::uint32_t switches = 3;
        std::uint32_t servers = 10;
        double mean_service = 10.0;
        std::uint32_t packets_per_switch = 1;
        std::uint64_t seed = 1;
        // Twin-side perturbation: when set, the predictive model uses this
        // mean service time instead of the true one (systematic drift).
        std::optional<double> twin_mean_service;
        // Aliases the twin rng streams and parameters onto the truth streams;
        // prediction then reproduces ground truth exactly.
        bool exact_twin = false;
    };

    std::uint64_t truth_stream_key(std::uint64_t seed, LpId sw);
    std::uint64_t twin_stream_key(std::uint64_t seed, LpId sw, bool exact);

    // Predictive twin of one switch. State is the cumulative entry counter
    // plus the time its server pipeline frees up.
    class SwitchPp final : public PhysicalProcess
    {
    public:
        SwitchPp(LpId self, SwitchParams params) : m_self(self), m_params(params) {}

        void execute(const Message& m, RngStream& rng, std::vector<EmitRequest>& out) override;

        std::vector<std::byte> save_state() const override;
        void load_state(std::span<const std::byte> blob) override;

        double observable() const override { return static_cast<double>(m_counter); }
        void force_observable(double value) override { m_counter = static_cast<std::int64_t>(value); }
        double peek_observable(std::span<const std::byte> blob) const override;

        std::int64_t counter() const { return m_counter; }
        Ticks busy_until() const { return m_busy_until; }

    private:
        LpId m_self;
        SwitchParams m_params;
        std::int64_t m_counter = 0;
        Ticks m_busy_until = 0;
    };

    struct AgentQueryResult
    {
        LpId device = 0;
        SimTime at;
        std::int64_t value = 0;
    };

    // The emulated managed system: a closed queueing network of switches
    // evolving on the real-time clock under the coordinator.
    class GroundTruthSystem
    {
    public:
        GroundTruthSystem(const NetworkParams& params);

        void advance(SimTime to);

        // Management poll through the emulated agent; counted for overhead
        // accounting. Throws on an unknown device.
        AgentQueryResult query_agent(LpId device);

        // Instrumentation access for traces; not a management poll.
        std::int64_t counter_unmetered(LpId device) const;

        SimTime clock() const { return m_clock; }
        std::uint64_t poll_count() const { return m_polls; }
        std::uint32_t switch_count() const { return static_cast<std::uint32_t>(m_switches.size()); }

        std::int64_t in_system(LpId device) const;
        std::int64_t total_in_system() const;
        std::int64_t injected_total() const { return m_injected; }

    private:
        struct Event
        {
            Ticks t = 0;
            LpId src = 0;
            std::uint64_t seq = 0;
            LpId dst = 0;
            std::int64_t packet = 0;
            std::int64_t entries = 0;
            bool injection = false;

            bool operator<(const Event& o) const
            {
                if (t != o.t) return t < o.t;
                if (src != o.src) return src < o.src;
                return seq < o.seq;
            }
        };

        struct SwitchState
        {
            std::int64_t counter = 0;
            Ticks busy_until = 0;
            std::uint64_t emit_seq = 0;
            std::int64_t in_system = 0;
            RngStream rng;
        };

        void check_device(LpId device) const;
        void process(const Event& e);

        SwitchParams m_params;
        std::vector<SwitchState> m_switches;
        std::set<Event> m_pending;
        SimTime m_clock;
        std::uint64_t m_polls = 0;
        std::int64_t m_injected = 0;
    };

    struct TwinSpec
    {
        LpId id = 0;
        std::unique_ptr<SwitchPp> pp;
        RngStream rng;
    };

    struct BuiltNetwork
    {
        std::unique_ptr<GroundTruthSystem> truth;
        std::vector<TwinSpec> twins;
    };

    // Ground truth plus matching predictive twins. Twins may carry perturbed
    // parameters; in exact mode they alias the truth streams.
    BuiltNetwork build_network(const NetworkParams& params);

    // Startup injection: each switch twin self-generates the virtual arrival
    // messages for its circulating packets (the id-association messages).
    // Returned messages still need routing.
    std::vector<Message> driving_emit(std::span<LogicalProcess* const> switch_lps,
                                      std::uint32_t packets_per_switch);
}
