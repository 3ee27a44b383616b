#pragma once

// Independent reference simulation of the closed switch network: a plain
// sequential event-list interpreter of the shared dynamics contract, written
// separately from the engine and the ground-truth system it checks.

#include "pnms/rng.hpp"
#include "pnms/time.hpp"

#include <cstdint>
#include <set>
#include <tuple>
#include <vector>

namespace pnms::test
{
    struct OracleParams
    {
        std::uint32_t switches = 3;
        std::uint32_t servers = 10;
        double mean_service = 10.0;
        std::uint32_t packets_per_switch = 1;
        std::uint64_t seed = 1;
        Ticks until = 0;
    };

    struct OracleEntry
    {
        Ticks at = 0;
        std::int64_t counter = 0;

        bool operator==(const OracleEntry&) const = default;
    };

    struct OracleResult
    {
        // Per switch: cumulative counter after each arrival, in arrival order.
        std::vector<std::vector<OracleEntry>> history;
        std::vector<std::int64_t> finals;
    };

    inline OracleResult oracle_run(const OracleParams& p)
    {
        struct Ev
        {
            Ticks t;
            std::uint32_t src;
            std::uint64_t seq;
            std::uint32_t dst;

            bool operator<(const Ev& o) const
            {
                return std::tuple(t, src, seq) < std::tuple(o.t, o.src, o.seq);
            }
        };

        // Stream naming contract: switch s of the true system draws from
        // mix(seed, 2s).
        std::vector<RngStream> rng;
        for (std::uint32_t s = 0; s < p.switches; ++s)
        {
            rng.emplace_back(RngStream::mix(p.seed, 2ULL * s));
        }

        std::vector<std::int64_t> counter(p.switches, 0);
        std::vector<Ticks> busy(p.switches, 0);
        std::vector<std::uint64_t> seq(p.switches, 0);
        std::set<Ev> events;
        for (std::uint32_t s = 0; s < p.switches; ++s)
        {
            for (std::uint32_t j = 0; j < p.packets_per_switch; ++j)
            {
                events.insert(Ev{0, s, seq[s]++, s});
            }
        }

        OracleResult out;
        out.history.resize(p.switches);
        while (!events.empty() && events.begin()->t <= p.until)
        {
            const Ev e = *events.begin();
            events.erase(events.begin());

            counter[e.dst] += 1;
            out.history[e.dst].push_back(OracleEntry{e.t, counter[e.dst]});

            Ticks service = 0;
            for (std::uint32_t i = 0; i < p.servers; ++i)
            {
                service += ticks_from_units(rng[e.dst].exponential(p.mean_service));
            }
            const auto next = rng[e.dst].uniform_int(p.switches);
            const Ticks start = std::max(e.t, busy[e.dst]);
            busy[e.dst] = start + service;
            events.insert(Ev{start + service, e.dst, seq[e.dst]++, next});
        }
        out.finals = counter;
        return out;
    }
}
