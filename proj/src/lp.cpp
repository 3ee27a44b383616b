#include "pnms/lp.hpp"

#include <algorithm>
#include <stdexcept>

namespace pnms
{
    LogicalProcess::LogicalProcess(LpId id, std::unique_ptr<PhysicalProcess> pp, RngStream rng,
                                   double tolerance, LpOptions options)
        : m_id(id), m_pp(std::move(pp)), m_tolerance(tolerance), m_rng(rng), m_options(options)
    {
        if (!m_pp)
        {
            throw std::invalid_argument("LogicalProcess: null physical process");
        }
        if (m_options.save_every < 1)
        {
            throw std::invalid_argument("LogicalProcess: save_every must be >= 1");
        }
    }

    void LogicalProcess::freeze_initial()
    {
        m_initial = StateRecord{m_id, VirtualTime{0}, m_pp->save_state(), m_rng.checkpoint(),
                                m_emit_seq, MsgKey::floor()};
        m_initial_frozen = true;
    }

    Message LogicalProcess::build_message(LpId dst, VirtualTime receive_time, Payload payload)
    {
        Message m;
        m.id = make_msg_id(m_id, m_emit_seq++);
        m.src = m_id;
        m.dst = dst;
        m.send_time = m_lvt;
        m.receive_time = receive_time;
        m.payload = payload;
        validate_message(m);
        return m;
    }

    Message LogicalProcess::emit_external(LpId dst, VirtualTime receive_time, Payload payload)
    {
        Message m = build_message(dst, receive_time, payload);
        m_send.record(m);
        return m;
    }

    std::vector<Message> LogicalProcess::run_transition(const Message& m, bool replaying)
    {
        std::vector<EmitRequest> requests;
        m_pp->execute(m, m_rng, requests);

        std::vector<Message> routed;
        for (const auto& req : requests)
        {
            Message out = build_message(req.dst, req.receive_time, req.payload);
            if (const Message* copy = m_send.find(out.id))
            {
                // The copy is still outstanding from a previous execution of
                // this event; the re-run must have produced it bit-identically.
                if (m_options.replay_check && !(*copy == out))
                {
                    throw std::logic_error("replay produced a message that differs from its send-queue copy");
                }
                continue;
            }
            if (replaying)
            {
                // Phase-3 rule: nothing is canceled or sent below the rollback
                // target. A missing copy is only legal if it was purged as
                // older than real time.
                if (out.send_time.t >= m_purge_floor)
                {
                    throw std::logic_error("replay emitted a message with no send-queue copy");
                }
                continue;
            }
            m_send.record(out);
            routed.push_back(out);
        }
        return routed;
    }

    void LogicalProcess::note_saved_if_due()
    {
        if (++m_since_save >= m_options.save_every)
        {
            save_state();
            m_since_save = 0;
        }
    }

    StepResult LogicalProcess::step(SimTime now, Ticks lambda)
    {
        StepResult out;
        const Message* head = m_recv.head();
        if (head == nullptr)
        {
            return out;
        }
        if (head->anti)
        {
            throw std::logic_error("step: pending anti-message at queue head; "
                                   "its original was never delivered");
        }
        if (head->receive_time < m_lvt)
        {
            throw FalseMessageError("step: head precedes LVT; rollback_causality required");
        }
        if (head->receive_time.t - now.t > lambda)
        {
            out.held = true;
            return out;
        }
        execute_pending_head(out);
        for (const auto& m : out.emitted)
        {
            if (m_router != nullptr)
            {
                m_router->route(m, now);
            }
        }
        return out;
    }

    void LogicalProcess::execute_pending_head(StepResult& out)
    {
        const Message m = m_recv.advance();
        m_lvt = m.receive_time;
        out.emitted = run_transition(m, false);
        note_saved_if_due();
        out.executed = m;
        out.observable_after = m_pp->observable();
    }

    void LogicalProcess::deliver(const Message& m, SimTime now)
    {
        if (m_in_rollback)
        {
            m_deferred.push_back(m);
            return;
        }
        process_delivery(m, now);
        drain_deferred(now);
    }

    void LogicalProcess::drain_deferred(SimTime now)
    {
        while (!m_in_rollback && !m_deferred.empty())
        {
            const Message m = m_deferred.front();
            m_deferred.pop_front();
            process_delivery(m, now);
        }
    }

    void LogicalProcess::process_delivery(const Message& m, SimTime now)
    {
        if (!m.anti)
        {
            if (key_of(m) < m_recv.last_executed_key())
            {
                rollback_causality(m, now);
                return;
            }
            const auto result = m_recv.enqueue(m);
            if (result.kind == EnqueueKind::Annihilated)
            {
                if (m_sink != nullptr)
                {
                    m_sink->on_annihilation(m_id, m.id, false);
                }
            }
            return;
        }

        // Anti-message. If its original was already executed here, that
        // execution is invalid: treat it as a false message at the original's
        // receive time, then let the pair meet.
        bool partner_was_executed = false;
        MsgKey original_key = MsgKey::floor();
        VirtualTime original_recv;
        for (const auto& e : m_recv.executed())
        {
            if (e.id == m.id && !e.anti)
            {
                partner_was_executed = true;
                original_key = key_of(e);
                original_recv = e.receive_time;
                break;
            }
        }
        if (partner_was_executed)
        {
            // The annihilated execution itself is undone, so its own emissions
            // (send time equal to the original's receive time) are invalid too:
            // the cancel set is inclusive here, unlike the straggler path.
            const RollbackRecord rec =
                rollback_core(original_key, original_recv, now, original_recv.t - 1);
            if (m_sink != nullptr)
            {
                m_sink->on_rollback(rec);
            }
        }
        const auto result = m_recv.enqueue(m);
        switch (result.kind)
        {
        case EnqueueKind::Annihilated:
            if (m_sink != nullptr)
            {
                m_sink->on_annihilation(m_id, m.id, partner_was_executed);
            }
            break;
        case EnqueueKind::WaitingAnti:
            break;
        case EnqueueKind::PartnerExecuted:
            throw std::logic_error("deliver: partner still executed after rollback");
        case EnqueueKind::Inserted:
            break;
        }
        if (partner_was_executed)
        {
            drain_deferred(now);
        }
    }

    void LogicalProcess::save_state()
    {
        upsert_state(StateRecord{m_id, m_lvt, m_pp->save_state(), m_rng.checkpoint(), m_emit_seq,
                                 m_recv.last_executed_key()});
    }

    void LogicalProcess::upsert_state(StateRecord rec)
    {
        auto pos = std::lower_bound(m_states.begin(), m_states.end(), rec.at,
                                    [](const StateRecord& r, VirtualTime t) { return r.at < t; });
        if (pos != m_states.end() && pos->at == rec.at)
        {
            *pos = std::move(rec);
            return;
        }
        m_states.insert(pos, std::move(rec));
    }

    const StateRecord* LogicalProcess::newest_at_or_before(VirtualTime t) const
    {
        const StateRecord* best = nullptr;
        for (const auto& r : m_states)
        {
            if (r.at.t > t.t)
            {
                break;
            }
            best = &r;
        }
        return best;
    }

    LogicalProcess::RestoreChoice LogicalProcess::choose_restore_before(VirtualTime target) const
    {
        const StateRecord* strictly = nullptr;
        for (const auto& r : m_states)
        {
            if (r.at.t < target.t)
            {
                strictly = &r;
            }
            else
            {
                break;
            }
        }
        if (strictly != nullptr)
        {
            return {strictly, false};
        }
        // Anything strictly earlier was purged; fall back to the anchor at the
        // target itself rather than discarding more history than real time allows.
        if (const StateRecord* anchor = newest_at_or_before(target))
        {
            return {anchor, true};
        }
        return {nullptr, false};
    }

    void LogicalProcess::restore(const StateRecord& rec)
    {
        m_pp->load_state(rec.pp_state);
        m_rng.restore(rec.rng_checkpoint);
        m_emit_seq = rec.emit_seq;
        m_lvt = rec.at;
        m_recv.rewind_to_key(rec.last_executed);
        m_since_save = 0;
    }

    void LogicalProcess::truncate_states_after(VirtualTime keep_up_to)
    {
        while (!m_states.empty() && m_states.back().at.t > keep_up_to.t)
        {
            m_states.pop_back();
        }
    }

    std::size_t LogicalProcess::cancel_sends_after(VirtualTime cutoff, SimTime now)
    {
        const std::vector<Message> canceled = m_send.extract_after(cutoff.t);
        for (const auto& original : canceled)
        {
            if (m_router != nullptr)
            {
                m_router->route(make_anti(original), now);
            }
        }
        return canceled.size();
    }

    void LogicalProcess::replay_up_to(MsgKey bound_exclusive, std::optional<VirtualTime> recv_bound)
    {
        while (const Message* head = m_recv.head())
        {
            if (!(key_of(*head) < bound_exclusive))
            {
                break;
            }
            if (recv_bound && head->receive_time.t > recv_bound->t)
            {
                break;
            }
            const Message m = m_recv.advance();
            m_lvt = m.receive_time;
            run_transition(m, true);
            note_saved_if_due();
            if (m_sink != nullptr)
            {
                m_sink->on_replayed(m_id, m);
            }
        }
    }

    RollbackRecord LogicalProcess::rollback_core(MsgKey bound, VirtualTime to_time, SimTime now,
                                                 Ticks cancel_cutoff)
    {
        RollbackRecord rec;
        rec.lp = m_id;
        rec.cause = RollbackCause::Causality;
        rec.from_lvt = m_lvt;
        rec.to_time = to_time;
        rec.at_real = now;

        // Phase 1: restore the newest state strictly earlier than the false
        // message; fall back to the purge anchor, then to the initial state.
        const RestoreChoice choice = choose_restore_before(to_time);
        const StateRecord& target = choice.record != nullptr
                                        ? *choice.record
                                        : (m_initial_frozen ? m_initial
                                                            : throw std::logic_error(
                                                                  "rollback: no restorable state"));
        rec.clamped = choice.clamped;

        m_in_rollback = true;
        // Phase 2: cancel everything sent after the cutoff.
        rec.anti_count = cancel_sends_after(VirtualTime{cancel_cutoff}, now);

        truncate_states_after(target.at);
        restore(target);

        // Phase 3: run forward to the false message's position without sending
        // or canceling anything in between.
        replay_up_to(bound, std::nullopt);
        m_in_rollback = false;
        return rec;
    }

    RollbackRecord LogicalProcess::rollback_causality(const Message& false_msg, SimTime now)
    {
        if (!(key_of(false_msg) < m_recv.last_executed_key()))
        {
            throw std::logic_error("rollback_causality: message is not behind the executed history");
        }

        // Messages sent at or before the false time stay valid and are not
        // canceled (strictly-greater cancel set).
        RollbackRecord rec =
            rollback_core(key_of(false_msg), false_msg.receive_time, now, false_msg.receive_time.t);
        const auto requeued = m_recv.enqueue(false_msg);

        if (m_sink != nullptr)
        {
            m_sink->on_rollback(rec);
            if (requeued.kind == EnqueueKind::Annihilated)
            {
                m_sink->on_annihilation(m_id, false_msg.id, false);
            }
        }
        drain_deferred(now);
        return rec;
    }

    std::optional<RollbackRecord> LogicalProcess::rollback_verification(VirtualTime t_v, double s_v,
                                                                        SimTime now)
    {
        if (t_v.t > m_lvt.t)
        {
            return std::nullopt;  // nothing predicted at t_v yet
        }

        RollbackRecord rec;
        rec.lp = m_id;
        rec.cause = RollbackCause::Verification;
        rec.from_lvt = m_lvt;
        rec.to_time = t_v;
        rec.at_real = now;

        const StateRecord* base = newest_at_or_before(t_v);
        const StateRecord& target = base != nullptr
                                        ? *base
                                        : (m_initial_frozen ? m_initial
                                                            : throw std::logic_error(
                                                                  "rollback_verification: no restorable state"));

        m_in_rollback = true;
        rec.anti_count = cancel_sends_after(t_v, now);

        truncate_states_after(target.at);
        restore(target);

        // Reconstruct internal bookkeeping up to exactly t_v, then overwrite
        // the monitored state with the ground-truth reading.
        replay_up_to(MsgKey{t_v.t + 1, 0, 0}, t_v);
        m_pp->force_observable(s_v);
        m_lvt = t_v;
        upsert_state(StateRecord{m_id, t_v, m_pp->save_state(), m_rng.checkpoint(), m_emit_seq,
                                 m_recv.last_executed_key()});
        m_in_rollback = false;

        if (m_sink != nullptr)
        {
            m_sink->on_rollback(rec);
        }
        drain_deferred(now);
        return rec;
    }

    void LogicalProcess::purge(SimTime now)
    {
        const StateRecord* anchor = newest_at_or_before(to_virtual(now));
        if (anchor != nullptr)
        {
            const Ticks floor = anchor->at.t;
            purge_older_than(m_states, floor, [](const StateRecord& r) { return r.at.t; });
            m_recv.purge_executed_older_than(floor);
        }
        m_send.purge_older_than_send(now.t);
        m_purge_floor = std::max(m_purge_floor, now.t);
    }

    std::optional<double> LogicalProcess::predicted_at(VirtualTime t) const
    {
        const StateRecord* rec = newest_at_or_before(t);
        if (rec == nullptr)
        {
            return std::nullopt;
        }
        return m_pp->peek_observable(rec->pp_state);
    }

    VirtualTime LogicalProcess::gvt_position(SimTime now, Ticks lambda) const
    {
        const Message* head = m_recv.head();
        const VirtualTime edge{now.t + lambda};
        if (head == nullptr || head->receive_time > edge)
        {
            return std::max(m_lvt, edge);  // held or idle: committed through the edge
        }
        return m_lvt;  // dispatchable work remains inside the window
    }
}
