#pragma once

#include "pnms/gvt.hpp"
#include "pnms/lp.hpp"
#include "pnms/switch_net.hpp"
#include "pnms/trace.hpp"
#include "pnms/verify.hpp"

#include <map>
#include <memory>
#include <vector>

namespace pnms
{
    enum class GvtMode
    {
        Exact,   // barrier snapshot at the quiescent end of a round
        Approx,  // asynchronous polling; lvt values may be one round stale
    };

    struct EngineParams
    {
        Ticks lambda = 0;    // lookahead window
        Ticks delta = 0;     // coordinator step; 0 means min(upsilon, 1 unit)
        Ticks upsilon = 0;   // verification query period
        double theta = std::numeric_limits<double>::infinity();
        Ticks duration = 0;
        GvtMode gvt_mode = GvtMode::Exact;
        int save_every = 1;
        bool replay_check = true;
        bool calibrate = false;
        bool pace_wall_clock = false;
    };

    struct DeviceFinal
    {
        LpId device = 0;
        double predicted = 0.0;
        std::int64_t actual = 0;
    };

    struct RunStats
    {
        std::uint64_t causality_rollbacks = 0;
        std::uint64_t verification_rollbacks = 0;
        std::uint64_t polls = 0;
        std::uint64_t executions = 0;
        std::uint64_t checks = 0;
        std::uint64_t checks_failed = 0;
        std::uint64_t skipped_verifications = 0;
        std::uint64_t unverifiable = 0;
        Ticks max_t_ahead = std::numeric_limits<Ticks>::min();
        double max_abs_delta = 0.0;
        double mean_abs_delta = 0.0;
        std::size_t unmatched_antis = 0;
        std::vector<DeviceFinal> finals;
        // Present when calibration mode is on and enough samples were seen.
        std::optional<ErrorModel> fitted;
        double fitted_t_vfail = 0.0;
        double recommended_upsilon = 0.0;
    };

    // Two-clock coordinator: owns virtualized real time, advances ground truth
    // and the predictive twins in fixed increments, runs verification queries
    // while LPs hold, and snapshots GVT each round.
    class Coordinator
    {
    public:
        Coordinator(const NetworkParams& net, const EngineParams& params, TraceWriter* trace);

        RunStats run();

        // One coordinator round: advance ground truth, run LPs until held or
        // idle, run due verifications, purge, snapshot GVT, append samples.
        void round();

        SimTime now() const { return m_now; }
        bool finished() const { return m_now.t >= m_params.duration; }

        const std::vector<std::unique_ptr<LogicalProcess>>& lps() const { return m_lps; }
        GroundTruthSystem& truth() { return *m_truth; }
        const RunStats& stats() const { return m_stats; }

    private:
        class Bus final : public MessageRouter, public LpEventSink
        {
        public:
            explicit Bus(Coordinator& owner) : m_owner(owner) {}
            void route(const Message& m, SimTime now) override;
            void on_replayed(LpId lp, const Message& m) override;
            void on_rollback(const RollbackRecord& rec) override;
            void on_annihilation(LpId lp, MsgId id, bool partner_was_executed) override;

        private:
            Coordinator& m_owner;
        };

        void run_lps_to_quiescence();
        void run_due_verifications();
        void snapshot_gvt();
        void trace_state_rows();
        std::map<LpId, VirtualTime> live_lvts() const;
        Ticks next_boundary() const;

        EngineParams m_params;
        std::unique_ptr<GroundTruthSystem> m_truth;
        std::vector<std::unique_ptr<LogicalProcess>> m_lps;
        Bus m_bus;
        TraceWriter* m_trace;

        SimTime m_now;
        SimTime m_last_verified;
        std::map<LpId, SimTime> m_last_aligned;
        std::map<LpId, VirtualTime> m_stale_lvts;  // approx-mode samples
        VirtualTime m_last_gvt;
        std::vector<ErrorSample> m_samples;
        RunStats m_stats;
        double m_abs_delta_sum = 0.0;
        double m_hop_time_units = 1.0;
    };
}
