#pragma once

#include "pnms/message.hpp"

#include <algorithm>
#include <cstddef>
#include <span>
#include <vector>

namespace pnms
{
    // Removes entries with time strictly below `cutoff`; entries at or after
    // the cutoff are retained. `key` projects an element to its Ticks.
    template <class Seq, class KeyFn>
    void purge_older_than(Seq& seq, Ticks cutoff, KeyFn key)
    {
        seq.erase(std::remove_if(seq.begin(), seq.end(),
                                 [&](const auto& e) { return key(e) < cutoff; }),
                  seq.end());
    }

    enum class EnqueueKind
    {
        Inserted,          // placed in receive order
        Annihilated,       // met its unexecuted partner; both removed
        PartnerExecuted,   // partner already executed; caller must roll back first
        WaitingAnti,       // anti arrived before its original; parked until it shows up
    };

    struct EnqueueResult
    {
        EnqueueKind kind = EnqueueKind::Inserted;
    };

    // Receive queue: all messages an LP has been handed, ordered by
    // (receive_time, src, id). The executed prefix [0, cursor) is kept for
    // rollback replay until purged.
    class ReceiveQueue
    {
    public:
        EnqueueResult enqueue(const Message& m);

        bool has_pending() const { return m_cursor < m_items.size(); }
        const Message* head() const { return has_pending() ? &m_items[m_cursor] : nullptr; }
        const Message& advance();

        MsgKey last_executed_key() const
        {
            return m_cursor == 0 ? MsgKey::floor() : key_of(m_items[m_cursor - 1]);
        }

        // Repositions the cursor to the first message with key > k.
        void rewind_to_key(MsgKey k);

        // Drops executed messages with receive_time strictly below `cutoff`.
        void purge_executed_older_than(Ticks cutoff);

        std::span<const Message> all() const { return m_items; }
        std::span<const Message> executed() const { return {m_items.data(), m_cursor}; }
        std::span<const Message> pending() const
        {
            return {m_items.data() + m_cursor, m_items.size() - m_cursor};
        }

        std::size_t size() const { return m_items.size(); }
        bool empty() const { return m_items.empty(); }
        std::size_t cursor() const { return m_cursor; }

        std::size_t pending_anti_count() const;

    private:
        std::vector<Message>::iterator lower_bound_key(MsgKey k);
        std::vector<Message>::iterator find_id(MsgId id);

        std::vector<Message> m_items;  // sorted by key_of
        std::size_t m_cursor = 0;
    };

    // Send queue: copies of every message this LP has emitted and not yet
    // purged or canceled, ordered by (send_time, id).
    class SendQueue
    {
    public:
        void record(const Message& m);

        // Removes and returns entries with send_time strictly greater than
        // `cutoff` (the rollback cancellation set), in queue order.
        std::vector<Message> extract_after(Ticks cutoff);

        void purge_older_than_send(Ticks cutoff);

        const Message* find(MsgId id) const;
        bool contains(MsgId id) const { return find(id) != nullptr; }

        std::span<const Message> all() const { return m_items; }
        std::size_t size() const { return m_items.size(); }
        bool empty() const { return m_items.empty(); }

    private:
        std::vector<Message> m_items;
    };
}
