#include "pnms/switch_net.hpp"

#include <cstring>
#include <stdexcept>

namespace pnms
{
    namespace
    {
        struct SwitchBlob
        {
            std::int64_t counter;
            Ticks busy_until;
        };

        // One service pass: `servers` sequential exponential stages, each
        // rounded to ticks before summing.
        Ticks draw_service(RngStream& rng, std::uint32_t servers, double mean)
        {
            Ticks total = 0;
            for (std::uint32_t i = 0; i < servers; ++i)
            {
                total += ticks_from_units(rng.exponential(mean));
            }
            return total;
        }
    }

    std::uint64_t truth_stream_key(std::uint64_t seed, LpId sw)
    {
        return RngStream::mix(seed, 2ULL * sw);
    }

    std::uint64_t twin_stream_key(std::uint64_t seed, LpId sw, bool exact)
    {
        return exact ? truth_stream_key(seed, sw) : RngStream::mix(seed, 2ULL * sw + 1);
    }

    void SwitchPp::execute(const Message& m, RngStream& rng, std::vector<EmitRequest>& out)
    {
        m_counter += 1;
        const Ticks service = draw_service(rng, m_params.servers, m_params.mean_service);
        const LpId dst = rng.uniform_int(m_params.switches);
        const Ticks start = std::max(m.receive_time.t, m_busy_until);
        const Ticks departure = start + service;
        m_busy_until = departure;
        out.push_back(EmitRequest{dst, VirtualTime{departure},
                                  Payload{m.payload.packet, m.payload.entries + 1}});
    }

    std::vector<std::byte> SwitchPp::save_state() const
    {
        SwitchBlob blob{m_counter, m_busy_until};
        std::vector<std::byte> out(sizeof blob);
        std::memcpy(out.data(), &blob, sizeof blob);
        return out;
    }

    void SwitchPp::load_state(std::span<const std::byte> blob)
    {
        if (blob.size() != sizeof(SwitchBlob))
        {
            throw std::invalid_argument("SwitchPp: state blob size mismatch");
        }
        SwitchBlob in;
        std::memcpy(&in, blob.data(), sizeof in);
        m_counter = in.counter;
        m_busy_until = in.busy_until;
    }

    double SwitchPp::peek_observable(std::span<const std::byte> blob) const
    {
        if (blob.size() != sizeof(SwitchBlob))
        {
            throw std::invalid_argument("SwitchPp: state blob size mismatch");
        }
        SwitchBlob in;
        std::memcpy(&in, blob.data(), sizeof in);
        return static_cast<double>(in.counter);
    }

    GroundTruthSystem::GroundTruthSystem(const NetworkParams& params)
        : m_params{params.switches, params.servers, params.mean_service}
    {
        if (params.switches < 1 || params.servers < 1 || params.packets_per_switch < 1)
        {
            throw std::invalid_argument("network needs at least one switch, server and packet");
        }
        if (!(params.mean_service > 0.0))
        {
            throw std::invalid_argument("mean service time must be positive");
        }

        m_switches.resize(params.switches);
        for (LpId s = 0; s < params.switches; ++s)
        {
            m_switches[s].rng = RngStream(truth_stream_key(params.seed, s));
        }
        for (LpId s = 0; s < params.switches; ++s)
        {
            for (std::uint32_t j = 0; j < params.packets_per_switch; ++j)
            {
                Event e;
                e.t = 0;
                e.src = s;
                e.seq = m_switches[s].emit_seq++;
                e.dst = s;
                e.packet = static_cast<std::int64_t>(s) * params.packets_per_switch + j;
                e.entries = 0;
                e.injection = true;
                m_pending.insert(e);
                ++m_injected;
            }
        }
        advance(SimTime{0});
    }

    void GroundTruthSystem::process(const Event& e)
    {
        SwitchState& sw = m_switches[e.dst];
        if (e.injection)
        {
            sw.in_system += 1;
        }
        else
        {
            m_switches[e.src].in_system -= 1;
            sw.in_system += 1;
        }
        sw.counter += 1;

        const Ticks service = draw_service(sw.rng, m_params.servers, m_params.mean_service);
        const LpId next = sw.rng.uniform_int(m_params.switches);
        const Ticks start = std::max(e.t, sw.busy_until);
        const Ticks departure = start + service;
        sw.busy_until = departure;

        Event fwd;
        fwd.t = departure;
        fwd.src = e.dst;
        fwd.seq = sw.emit_seq++;
        fwd.dst = next;
        fwd.packet = e.packet;
        fwd.entries = e.entries + 1;
        m_pending.insert(fwd);
    }

    void GroundTruthSystem::advance(SimTime to)
    {
        if (to < m_clock)
        {
            throw std::logic_error("advance: ground truth clock cannot move backwards");
        }
        while (!m_pending.empty() && m_pending.begin()->t <= to.t)
        {
            const Event e = *m_pending.begin();
            m_pending.erase(m_pending.begin());
            process(e);
        }
        m_clock = to;
    }

    void GroundTruthSystem::check_device(LpId device) const
    {
        if (device >= m_switches.size())
        {
            throw std::out_of_range("unknown device id");
        }
    }

    AgentQueryResult GroundTruthSystem::query_agent(LpId device)
    {
        check_device(device);
        ++m_polls;
        return AgentQueryResult{device, m_clock, m_switches[device].counter};
    }

    std::int64_t GroundTruthSystem::counter_unmetered(LpId device) const
    {
        check_device(device);
        return m_switches[device].counter;
    }

    std::int64_t GroundTruthSystem::in_system(LpId device) const
    {
        check_device(device);
        return m_switches[device].in_system;
    }

    std::int64_t GroundTruthSystem::total_in_system() const
    {
        std::int64_t total = 0;
        for (const auto& sw : m_switches)
        {
            total += sw.in_system;
        }
        return total;
    }

    BuiltNetwork build_network(const NetworkParams& params)
    {
        BuiltNetwork net;
        net.truth = std::make_unique<GroundTruthSystem>(params);

        SwitchParams twin_params{params.switches, params.servers,
                                 params.exact_twin ? params.mean_service
                                                   : params.twin_mean_service.value_or(params.mean_service)};
        for (LpId s = 0; s < params.switches; ++s)
        {
            TwinSpec spec;
            spec.id = s;
            spec.pp = std::make_unique<SwitchPp>(s, twin_params);
            spec.rng = RngStream(twin_stream_key(params.seed, s, params.exact_twin));
            net.twins.push_back(std::move(spec));
        }
        return net;
    }

    std::vector<Message> driving_emit(std::span<LogicalProcess* const> switch_lps,
                                      std::uint32_t packets_per_switch)
    {
        std::vector<Message> out;
        for (LogicalProcess* lp : switch_lps)
        {
            for (std::uint32_t j = 0; j < packets_per_switch; ++j)
            {
                const std::int64_t packet =
                    static_cast<std::int64_t>(lp->id()) * packets_per_switch + j;
                out.push_back(lp->emit_external(lp->id(), VirtualTime{0}, Payload{packet, 0}));
            }
        }
        return out;
    }
}
