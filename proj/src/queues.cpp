#include "pnms/queues.hpp"

#include <stdexcept>

namespace pnms
{
    std::vector<Message>::iterator ReceiveQueue::lower_bound_key(MsgKey k)
    {
        return std::lower_bound(m_items.begin(), m_items.end(), k,
                                [](const Message& m, MsgKey key) { return key_of(m) < key; });
    }

    std::vector<Message>::iterator ReceiveQueue::find_id(MsgId id)
    {
        return std::find_if(m_items.begin(), m_items.end(),
                            [&](const Message& m) { return m.id == id; });
    }

    EnqueueResult ReceiveQueue::enqueue(const Message& m)
    {
        validate_message(m);

        auto partner = find_id(m.id);
        if (partner != m_items.end())
        {
            if (partner->anti == m.anti)
            {
                throw std::runtime_error("enqueue: duplicate message id with same anti-toggle");
            }
            // Matching original/anti pair: annihilate. An executed partner is
            // reported instead so the owner can roll back before removal.
            const auto idx = static_cast<std::size_t>(partner - m_items.begin());
            if (idx < m_cursor)
            {
                return {EnqueueKind::PartnerExecuted};
            }
            m_items.erase(partner);
            return {EnqueueKind::Annihilated};
        }

        const auto pos = lower_bound_key(key_of(m));
        if (static_cast<std::size_t>(pos - m_items.begin()) < m_cursor)
        {
            throw std::logic_error("enqueue: insertion behind the executed cursor; "
                                   "stragglers must be rolled back first");
        }
        m_items.insert(pos, m);
        return {m.anti ? EnqueueKind::WaitingAnti : EnqueueKind::Inserted};
    }

    const Message& ReceiveQueue::advance()
    {
        if (!has_pending())
        {
            throw std::logic_error("advance: no pending message");
        }
        return m_items[m_cursor++];
    }

    void ReceiveQueue::rewind_to_key(MsgKey k)
    {
        auto pos = std::upper_bound(m_items.begin(), m_items.end(), k,
                                    [](MsgKey key, const Message& m) { return key < key_of(m); });
        const auto idx = static_cast<std::size_t>(pos - m_items.begin());
        if (idx > m_cursor)
        {
            throw std::logic_error("rewind_to_key: target is ahead of the cursor");
        }
        m_cursor = idx;
    }

    void ReceiveQueue::purge_executed_older_than(Ticks cutoff)
    {
        std::size_t keep = 0;
        while (keep < m_cursor && m_items[keep].receive_time.t < cutoff)
        {
            ++keep;
        }
        m_items.erase(m_items.begin(), m_items.begin() + static_cast<std::ptrdiff_t>(keep));
        m_cursor -= keep;
    }

    std::size_t ReceiveQueue::pending_anti_count() const
    {
        std::size_t n = 0;
        for (std::size_t i = m_cursor; i < m_items.size(); ++i)
        {
            if (m_items[i].anti)
            {
                ++n;
            }
        }
        return n;
    }

    void SendQueue::record(const Message& m)
    {
        auto pos = std::lower_bound(m_items.begin(), m_items.end(), m,
                                    [](const Message& a, const Message& b)
                                    { return std::pair(a.send_time.t, a.id) < std::pair(b.send_time.t, b.id); });
        m_items.insert(pos, m);
    }

    std::vector<Message> SendQueue::extract_after(Ticks cutoff)
    {
        auto pos = std::upper_bound(m_items.begin(), m_items.end(), cutoff,
                                    [](Ticks c, const Message& m) { return c < m.send_time.t; });
        std::vector<Message> out(pos, m_items.end());
        m_items.erase(pos, m_items.end());
        return out;
    }

    void SendQueue::purge_older_than_send(Ticks cutoff)
    {
        purge_older_than(m_items, cutoff, [](const Message& m) { return m.send_time.t; });
    }

    const Message* SendQueue::find(MsgId id) const
    {
        for (const auto& m : m_items)
        {
            if (m.id == id)
            {
                return &m;
            }
        }
        return nullptr;
    }
}
