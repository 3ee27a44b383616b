#pragma once

#include "pnms/message.hpp"
#include "pnms/queues.hpp"
#include "pnms/rng.hpp"
#include "pnms/time.hpp"

#include <cstddef>
#include <deque>
#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <vector>

namespace pnms
{
    // One output request from a physical-process transition. The owning LP
    // turns it into a Message (id allocation, send-time stamp, send-queue copy).
    struct EmitRequest
    {
        LpId dst = 0;
        VirtualTime receive_time;
        Payload payload;
    };

    // The model behavior itself. Must be a pure transition given
    // (state, message, rng position): replay from a saved state with the same
    // inputs reproduces outputs exactly. That property is what makes rollback
    // re-execution sound.
    class PhysicalProcess
    {
    public:
        virtual ~PhysicalProcess() = default;

        virtual void execute(const Message& m, RngStream& rng, std::vector<EmitRequest>& out) = 0;

        virtual std::vector<std::byte> save_state() const = 0;
        virtual void load_state(std::span<const std::byte> blob) = 0;

        // The monitored state variable (for the switch model: the cumulative
        // packet counter).
        virtual double observable() const = 0;
        virtual void force_observable(double value) = 0;
        virtual double peek_observable(std::span<const std::byte> blob) const = 0;
    };

    struct StateRecord
    {
        LpId lp = 0;
        VirtualTime at;
        std::vector<std::byte> pp_state;
        std::uint64_t rng_checkpoint = 0;
        std::uint64_t emit_seq = 0;
        MsgKey last_executed = MsgKey::floor();
    };

    enum class RollbackCause
    {
        Causality,
        Verification,
    };

    struct RollbackRecord
    {
        LpId lp = 0;
        RollbackCause cause = RollbackCause::Causality;
        VirtualTime from_lvt;
        VirtualTime to_time;
        std::size_t anti_count = 0;
        SimTime at_real;
        bool clamped = false;  // restore target hit the purge anchor
    };

    // Delivery fabric the LP emits through. The in-process router delivers
    // immediately and in send order per channel.
    class MessageRouter
    {
    public:
        virtual ~MessageRouter() = default;
        virtual void route(const Message& m, SimTime now) = 0;
    };

    // Observer for events that happen inside delivery cascades.
    class LpEventSink
    {
    public:
        virtual ~LpEventSink() = default;
        virtual void on_replayed(LpId lp, const Message& m) { (void)lp; (void)m; }
        virtual void on_rollback(const RollbackRecord& rec) { (void)rec; }
        virtual void on_annihilation(LpId lp, MsgId id, bool partner_was_executed)
        {
            (void)lp; (void)id; (void)partner_was_executed;
        }
    };

    // Raised when step() meets a message behind the LP's local virtual time;
    // such a message is false and must go through rollback_causality instead.
    class FalseMessageError : public std::logic_error
    {
    public:
        using std::logic_error::logic_error;
    };

    struct StepResult
    {
        bool held = false;
        std::optional<Message> executed;
        double observable_after = 0.0;
        std::vector<Message> emitted;
    };

    struct LpOptions
    {
        int save_every = 1;        // state-save cadence in executed events
        bool replay_check = true;  // assert replayed output matches send-queue copies
    };

    // A Physical Process plus the queues, local virtual time, tolerance and
    // rollback machinery that let it execute ahead of real time.
    class LogicalProcess
    {
    public:
        LogicalProcess(LpId id, std::unique_ptr<PhysicalProcess> pp, RngStream rng,
                       double tolerance = std::numeric_limits<double>::infinity(),
                       LpOptions options = {});

        LpId id() const { return m_id; }
        VirtualTime lvt() const { return m_lvt; }
        double tolerance() const { return m_tolerance; }
        void set_tolerance(double theta) { m_tolerance = theta; }

        void set_router(MessageRouter* router) { m_router = router; }
        void set_sink(LpEventSink* sink) { m_sink = sink; }

        // Captures the fallback restore point. Call once wiring and driving
        // injection are done, before the first step.
        void freeze_initial();

        // Allocates and records a message originating here outside of a
        // transition (the driving-process startup path). Not routed.
        Message emit_external(LpId dst, VirtualTime receive_time, Payload payload);

        // Executes at most one pending message if it lies within the lookahead
        // window (head receive time at most `lambda` beyond `now`).
        StepResult step(SimTime now, Ticks lambda);

        // Accepts a message from the router. Handles annihilation, stragglers
        // and anti-for-executed originals; deliveries arriving while a rollback
        // is in progress are queued and handled after it completes.
        void deliver(const Message& m, SimTime now);

        void save_state();

        // Three-phase recovery from a false message. The caller must have
        // established key_of(false_msg) < last executed key.
        RollbackRecord rollback_causality(const Message& false_msg, SimTime now);

        // Forced realignment to ground truth: state s_v at exactly t_v.
        // Returns nothing when t_v is ahead of the LVT (nothing predicted yet).
        std::optional<RollbackRecord> rollback_verification(VirtualTime t_v, double s_v, SimTime now);

        // Drops history older than real time. State queue keeps the newest
        // record at or before `now` as the rollback anchor.
        void purge(SimTime now);

        double observable() const { return m_pp->observable(); }
        // Prediction recorded at the greatest saved time <= t, if any.
        std::optional<double> predicted_at(VirtualTime t) const;

        // The position this LP reports to the GVT service. Between sparse
        // events its state is constant, so a held or idle LP has predicted
        // everything up to the window edge; an LP with work still inside the
        // window is only committed to its last executed event.
        VirtualTime gvt_position(SimTime now, Ticks lambda) const;

        const ReceiveQueue& recv_queue() const { return m_recv; }
        const SendQueue& send_queue() const { return m_send; }
        std::span<const StateRecord> state_queue() const { return m_states; }

    private:
        struct RestoreChoice
        {
            const StateRecord* record = nullptr;
            bool clamped = false;
        };

        void process_delivery(const Message& m, SimTime now);
        void drain_deferred(SimTime now);

        Message build_message(LpId dst, VirtualTime receive_time, Payload payload);
        std::vector<Message> run_transition(const Message& m, bool replaying);
        void execute_pending_head(StepResult& out);

        RollbackRecord rollback_core(MsgKey bound, VirtualTime to_time, SimTime now,
                                     Ticks cancel_cutoff);
        RestoreChoice choose_restore_before(VirtualTime target) const;
        const StateRecord* newest_at_or_before(VirtualTime t) const;
        void restore(const StateRecord& rec);
        void truncate_states_after(VirtualTime keep_up_to);
        void upsert_state(StateRecord rec);
        std::size_t cancel_sends_after(VirtualTime cutoff, SimTime now);
        void replay_up_to(MsgKey bound_exclusive, std::optional<VirtualTime> recv_bound);
        void note_saved_if_due();

        LpId m_id;
        std::unique_ptr<PhysicalProcess> m_pp;
        ReceiveQueue m_recv;
        SendQueue m_send;
        std::vector<StateRecord> m_states;  // sorted by `at`, unique per time
        VirtualTime m_lvt;
        double m_tolerance;
        RngStream m_rng;
        std::uint64_t m_emit_seq = 0;
        LpOptions m_options;
        int m_since_save = 0;

        StateRecord m_initial;
        bool m_initial_frozen = false;

        MessageRouter* m_router = nullptr;
        LpEventSink* m_sink = nullptr;

        bool m_in_rollback = false;
        std::deque<Message> m_deferred;
        Ticks m_purge_floor = 0;
    };
}
