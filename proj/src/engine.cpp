#include "pnms/engine.hpp"

#include <algorithm>
#include <chrono>
#include <stdexcept>
#include <thread>

namespace pnms
{
    namespace
    {
        const char* cause_name(RollbackCause c)
        {
            return c == RollbackCause::Causality ? "causality" : "verification";
        }

        nlohmann::json theta_json(double theta)
        {
            if (std::isinf(theta))
            {
                return "inf";
            }
            return theta;
        }
    }

    void Coordinator::Bus::route(const Message& m, SimTime now)
    {
        m_owner.m_lps.at(m.dst)->deliver(m, now);
    }

    void Coordinator::Bus::on_replayed(LpId lp, const Message& m)
    {
        if (m_owner.m_trace != nullptr)
        {
            m_owner.m_trace->write({{"kind", "replay"}, {"lp", lp}, {"at", m.receive_time.units()},
                                    {"id", m.id}});
        }
    }

    void Coordinator::Bus::on_rollback(const RollbackRecord& rec)
    {
        if (rec.cause == RollbackCause::Causality)
        {
            ++m_owner.m_stats.causality_rollbacks;
        }
        else
        {
            ++m_owner.m_stats.verification_rollbacks;
        }
        if (m_owner.m_trace != nullptr)
        {
            m_owner.m_trace->write({{"kind", "rollback"},
                                    {"lp", rec.lp},
                                    {"cause", cause_name(rec.cause)},
                                    {"from", rec.from_lvt.units()},
                                    {"to", rec.to_time.units()},
                                    {"antis", rec.anti_count},
                                    {"real", rec.at_real.units()},
                                    {"clamped", rec.clamped}});
        }
    }

    void Coordinator::Bus::on_annihilation(LpId lp, MsgId id, bool partner_was_executed)
    {
        if (m_owner.m_trace != nullptr)
        {
            m_owner.m_trace->write({{"kind", "annihilate"}, {"lp", lp}, {"id", id},
                                    {"partner_executed", partner_was_executed}});
        }
    }

    Coordinator::Coordinator(const NetworkParams& net, const EngineParams& params, TraceWriter* trace)
        : m_params(params), m_bus(*this), m_trace(trace)
    {
        if (m_params.duration <= 0)
        {
            throw std::invalid_argument("duration must be positive");
        }
        if (m_params.upsilon <= 0 || m_params.upsilon > m_params.duration)
        {
            throw std::invalid_argument("verification period must be in (0, duration]");
        }
        if (m_params.lambda < 0)
        {
            throw std::invalid_argument("lookahead window must be non-negative");
        }
        if (m_params.delta == 0)
        {
            m_params.delta = std::min<Ticks>(m_params.upsilon, static_cast<Ticks>(kTicksPerUnit));
        }
        if (m_params.delta <= 0)
        {
            throw std::invalid_argument("coordinator step must be positive");
        }

        BuiltNetwork built = build_network(net);
        m_truth = std::move(built.truth);
        m_hop_time_units =
            (net.exact_twin ? net.mean_service : net.twin_mean_service.value_or(net.mean_service)) *
            net.servers;

        LpOptions opts;
        opts.save_every = m_params.save_every;
        opts.replay_check = m_params.replay_check;
        for (auto& spec : built.twins)
        {
            auto lp = std::make_unique<LogicalProcess>(spec.id, std::move(spec.pp), spec.rng,
                                                       m_params.theta, opts);
            lp->set_router(&m_bus);
            lp->set_sink(&m_bus);
            m_lps.push_back(std::move(lp));
            m_last_aligned[spec.id] = SimTime{0};
        }

        std::vector<LogicalProcess*> raw;
        for (auto& lp : m_lps)
        {
            raw.push_back(lp.get());
        }
        const auto startup = driving_emit(raw, net.packets_per_switch);
        for (auto& lp : m_lps)
        {
            lp->freeze_initial();
        }
        for (const auto& m : startup)
        {
            m_bus.route(m, m_now);
        }
        m_stale_lvts = live_lvts();
    }

    std::map<LpId, VirtualTime> Coordinator::live_lvts() const
    {
        std::map<LpId, VirtualTime> lvts;
        for (const auto& lp : m_lps)
        {
            lvts[lp->id()] = lp->gvt_position(m_now, m_params.lambda);
        }
        return lvts;
    }

    void Coordinator::run_lps_to_quiescence()
    {
        bool progressed = true;
        while (progressed)
        {
            progressed = false;
            for (auto& lp : m_lps)
            {
                const StepResult r = lp->step(m_now, m_params.lambda);
                if (r.executed)
                {
                    progressed = true;
                    ++m_stats.executions;
                    if (m_trace != nullptr)
                    {
                        m_trace->write({{"kind", "exec"},
                                        {"lp", lp->id()},
                                        {"at", r.executed->receive_time.units()},
                                        {"counter", r.observable_after},
                                        {"msg", message_json(*r.executed)}});
                    }
                }
            }
        }
    }

    void Coordinator::run_due_verifications()
    {
        const VerificationPolicy policy{m_params.upsilon, m_params.theta};
        const auto due = due_verifications(policy, m_now, m_last_verified);
        for (const SimTime t_v : due)
        {
            if (t_v != m_now)
            {
                // The round schedule lands on every verification instant, so a
                // query always reads ground truth at exactly t_v.
                throw std::logic_error("verification instant missed by the round schedule");
            }
            bool any_rollback = false;
            for (auto& lp : m_lps)
            {
                const AgentQueryResult reading = m_truth->query_agent(lp->id());
                const VerificationOutcome outcome =
                    check(*lp, to_virtual(t_v), reading.value, lp->tolerance());

                if (outcome.status == VerifyStatus::Unverifiable)
                {
                    ++m_stats.unverifiable;
                    if (m_trace != nullptr)
                    {
                        m_trace->write({{"kind", "verify_skip"}, {"real", t_v.units()},
                                        {"device", lp->id()}, {"status", "unverifiable"}});
                    }
                    continue;
                }

                ++m_stats.checks;
                m_abs_delta_sum += std::fabs(outcome.delta);
                m_stats.max_abs_delta = std::max(m_stats.max_abs_delta, std::fabs(outcome.delta));
                m_samples.push_back(ErrorSample{
                    units_from_ticks(t_v.t - m_last_aligned[lp->id()].t), std::fabs(outcome.delta)});
                if (m_trace != nullptr)
                {
                    m_trace->write({{"kind", "error"},
                                    {"real", t_v.units()},
                                    {"device", lp->id()},
                                    {"delta", outcome.delta},
                                    {"theta", theta_json(lp->tolerance())},
                                    {"within", outcome.within}});
                }
                if (outcome.within)
                {
                    continue;
                }

                ++m_stats.checks_failed;
                const auto rec = lp->rollback_verification(to_virtual(t_v),
                                                           static_cast<double>(reading.value), m_now);
                if (rec)
                {
                    any_rollback = true;
                    m_last_aligned[lp->id()] = t_v;
                }
                else
                {
                    ++m_stats.skipped_verifications;
                    if (m_trace != nullptr)
                    {
                        m_trace->write({{"kind", "verify_skip"}, {"real", t_v.units()},
                                        {"device", lp->id()}, {"status", "skipped"}});
                    }
                }
            }
            m_last_verified = t_v;
            if (any_rollback)
            {
                run_lps_to_quiescence();
            }
        }
    }

    void Coordinator::snapshot_gvt()
    {
        const auto lvts = m_params.gvt_mode == GvtMode::Exact ? live_lvts() : m_stale_lvts;
        // The in-process router delivers synchronously, so the transport-level
        // in-flight set is empty at snapshot time.
        const GvtSnapshot snap = compute_gvt(lvts, {}, m_now);
        m_last_gvt = snap.gvt;
        const Ticks ahead = t_ahead(snap.gvt, m_now);
        m_stats.max_t_ahead = std::max(m_stats.max_t_ahead, ahead);

        if (m_trace != nullptr)
        {
            nlohmann::json lvt_obj = nlohmann::json::object();
            for (const auto& [lp, lvt] : snap.per_lp_lvt)
            {
                lvt_obj[std::to_string(lp)] = lvt.units();
            }
            m_trace->write({{"kind", "gvt"},
                            {"real", snap.at_real.units()},
                            {"gvt", snap.gvt.units()},
                            {"lvt", lvt_obj},
                            {"t_ahead", units_from_ticks(ahead)},
                            {"inflight", snap.in_flight_min_send
                                             ? nlohmann::json(snap.in_flight_min_send->units())
                                             : nlohmann::json(nullptr)}});
        }
    }

    void Coordinator::trace_state_rows()
    {
        if (m_trace == nullptr)
        {
            return;
        }
        for (const auto& lp : m_lps)
        {
            const double predicted = lp->predicted_at(to_virtual(m_now)).value_or(lp->observable());
            m_trace->write({{"kind", "state"},
                            {"real", m_now.units()},
                            {"device", lp->id()},
                            {"predicted", predicted},
                            {"actual", m_truth->counter_unmetered(lp->id())}});
        }
    }

    Ticks Coordinator::next_boundary() const
    {
        const Ticks next_delta = (m_now.t / m_params.delta + 1) * m_params.delta;
        const Ticks next_upsilon = (m_now.t / m_params.upsilon + 1) * m_params.upsilon;
        return std::min({next_delta, next_upsilon, m_params.duration});
    }

    void Coordinator::round()
    {
        if (m_params.gvt_mode == GvtMode::Approx)
        {
            m_stale_lvts = live_lvts();  // poll before this round's progress
        }
        const Ticks next = next_boundary();
        if (m_params.pace_wall_clock)
        {
            std::this_thread::sleep_for(
                std::chrono::duration<double>(units_from_ticks(next - m_now.t)));
        }
        m_truth->advance(SimTime{next});
        m_now = SimTime{next};

        run_lps_to_quiescence();
        run_due_verifications();
        for (auto& lp : m_lps)
        {
            lp->purge(m_now);
        }
        snapshot_gvt();
        trace_state_rows();
    }

    RunStats Coordinator::run()
    {
        run_lps_to_quiescence();
        snapshot_gvt();
        trace_state_rows();
        while (!finished())
        {
            round();
        }

        for (const auto& lp : m_lps)
        {
            m_stats.unmatched_antis += lp->recv_queue().pending_anti_count();
            m_stats.finals.push_back(DeviceFinal{
                lp->id(), lp->predicted_at(to_virtual(m_now)).value_or(lp->observable()),
                m_truth->counter_unmetered(lp->id())});
        }
        m_stats.polls = m_truth->poll_count();
        if (m_stats.checks > 0)
        {
            m_stats.mean_abs_delta = m_abs_delta_sum / static_cast<double>(m_stats.checks);
        }

        if (m_params.calibrate)
        {
            ErrorModel base;
            base.gain = 1.0;
            base.me_dp = 0.0;
            // One hop of the prediction chain is a full service pass.
            base.hop_time = m_hop_time_units;
            m_stats.fitted = calibrate(base, m_samples);
            m_stats.fitted_t_vfail = t_vfail(*m_stats.fitted, m_params.theta);
            m_stats.recommended_upsilon = m_stats.fitted_t_vfail;
        }
        return m_stats;
    }
}
