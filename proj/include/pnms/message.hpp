#pragma once

#include "pnms/time.hpp"

#include <compare>
#include <cstdint>
#include <optional>

#include <json.hpp>

namespace pnms
{
    using LpId = std::uint32_t;
    using MsgId = std::uint64_t;

    // Message ids are (source LP, per-LP emission sequence). The sequence is
    // checkpointed with LP state, so re-execution after a rollback reallocates
    // the same ids and replayed output is bit-identical to the original.
    inline MsgId make_msg_id(LpId src, std::uint64_t seq) { return (static_cast<MsgId>(src) << 40) | seq; }

    struct Payload
    {
        std::int64_t packet = 0;   // circulating packet identity (hop tag)
        std::int64_t entries = 0;  // how many switch queues this packet has entered

        bool operator==(const Payload&) const = default;
    };

    struct Message
    {
        MsgId id = 0;
        LpId src = 0;
        LpId dst = 0;
        VirtualTime send_time;
        VirtualTime receive_time;
        bool anti = false;
        // Present iff this is a real message (generated at current real time);
        // absent for virtual (predicted) messages.
        std::optional<SimTime> real_stamp;
        Payload payload;

        bool operator==(const Message&) const = default;
    };

    // Total order for receive queues: receive time, then source LP, then id.
    struct MsgKey
    {
        Ticks recv = -1;
        LpId src = 0;
        MsgId id = 0;

        auto operator<=>(const MsgKey&) const = default;

        static MsgKey floor() { return MsgKey{-1, 0, 0}; }
    };

    inline MsgKey key_of(const Message& m) { return MsgKey{m.receive_time.t, m.src, m.id}; }

    // Copy with the anti-toggle set; all other fields identical.
    Message make_anti(const Message& m);

    void validate_message(const Message& m);

    nlohmann::json message_json(const Message& m);
}
