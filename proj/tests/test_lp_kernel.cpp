#include "test_support.hpp"

#include "pnms/lp.hpp"

#include <set>
#include <tuple>

#include <doctest.h>

using namespace pnms;
using namespace pnms::test;

namespace
{
    constexpr Ticks kWide = Rig::kWide;  // effectively unbounded window

    std::vector<double> state_times(const LogicalProcess& lp)
    {
        std::vector<double> out;
        for (const auto& r : lp.state_queue())
        {
            out.push_back(r.at.units());
        }
        return out;
    }

    std::vector<double> send_times(const LogicalProcess& lp)
    {
        std::vector<double> out;
        for (const auto& m : lp.send_queue().all())
        {
            out.push_back(m.send_time.units());
        }
        return out;
    }
}

TEST_CASE("step executes within the window and holds beyond it")
{
    Rig rig(1, false);
    rig.lp->deliver(external_msg(901, 9, 1, 0, 4), SimTime{0});
    const auto r = rig.lp->step(SimTime::from_units(10), ticks_from_units(5));
    CHECK(r.executed.has_value());
    CHECK(rig.lp->lvt().units() == 4);

    rig.lp->deliver(external_msg(902, 9, 1, 0, 20), SimTime{0});
    const auto held = rig.lp->step(SimTime::from_units(10), ticks_from_units(5));
    CHECK(held.held);
    CHECK(!held.executed.has_value());
    CHECK(rig.lp->lvt().units() == 4);

    // empty queue: not held, nothing executed
    Rig idle(2, false);
    const auto none = idle.lp->step(SimTime{0}, 0);
    CHECK(!none.held);
    CHECK(!none.executed.has_value());
}

TEST_CASE("a straggler delivery signals a false message and runs the causality rollback")
{
    Rig rig(1, false);
    rig.lp->deliver(external_msg(901, 9, 1, 0, 6), SimTime{0});
    rig.run_all();
    CHECK(rig.lp->lvt().units() == 6);

    rig.lp->deliver(external_msg(902, 9, 1, 0, 3), SimTime{0});
    REQUIRE(rig.sink.rollbacks.size() == 1);
    CHECK(rig.sink.rollbacks[0].cause == RollbackCause::Causality);
    CHECK(rig.sink.rollbacks[0].from_lvt.units() == 6);
    CHECK(rig.sink.rollbacks[0].to_time.units() == 3);

    rig.run_all();
    CHECK(rig.lp->lvt().units() == 6);
    // both messages ended up executed in timestamp order
    CHECK(rig.lp->recv_queue().cursor() == 2);
}

TEST_CASE("step refuses a pending anti at the head")
{
    Rig rig(1, false);
    Message orphan = make_anti(external_msg(77, 9, 1, 0, 2));
    rig.lp->deliver(orphan, SimTime{0});
    CHECK_THROWS_AS(rig.lp->step(SimTime{0}, kWide), std::logic_error);
}

TEST_CASE("save_state records once per time and carries the snapshot")
{
    Rig rig(1, false);
    rig.lp->deliver(external_msg(901, 9, 1, 0, 4, 7), SimTime{0});
    rig.run_all();
    REQUIRE(state_times(*rig.lp) == std::vector<double>{4});

    const auto before = rig.lp->state_queue().size();
    rig.lp->save_state();
    rig.lp->save_state();
    CHECK(rig.lp->state_queue().size() == before);  // idempotent at one lvt

    CHECK(rig.lp->predicted_at(VirtualTime::from_units(4)) == rig.pp->observable());
}

TEST_CASE("three-phase causality rollback: restore, cancel strictly-later sends, replay quietly")
{
    Rig rig(1, true);
    rig.pp->hop_limit = 2;  // fresh packets forward once, the false one is spent
    // executions at 1, 2, 2.5, 3.5, 4.5; the latter three emit (send times 2.5, 3.5, 4.5)
    rig.lp->deliver(external_msg(901, 9, 1, 0, 1), SimTime{0});
    rig.lp->deliver(external_msg(902, 9, 1, 0, 2), SimTime{0});
    rig.pp->emit_enabled = false;
    rig.run_all();
    rig.pp->emit_enabled = true;
    rig.lp->deliver(external_msg(903, 9, 1, 0, 2.5), SimTime{0});
    rig.lp->deliver(external_msg(904, 9, 1, 0, 3.5), SimTime{0});
    rig.lp->deliver(external_msg(905, 9, 1, 0, 4.5), SimTime{0});
    rig.run_all();

    REQUIRE(send_times(*rig.lp) == std::vector<double>{2.5, 3.5, 4.5});
    REQUIRE(rig.lp->lvt().units() == 4.5);
    const std::int64_t acc_before = rig.pp->acc();
    const auto routed_before = rig.router.routed.size();

    // false message at 3 (a spent packet: its execution emits nothing)
    rig.lp->deliver(external_msg(906, 9, 1, 0, 3, 9, 5), SimTime{0});

    REQUIRE(rig.sink.rollbacks.size() == 1);
    const auto& rb = rig.sink.rollbacks[0];
    CHECK(rb.to_time.units() == 3);
    CHECK(rb.anti_count == 2);  // sends at 3.5 and 4.5 canceled; 2.5 kept
    CHECK(send_times(*rig.lp) == std::vector<double>{2.5});
    CHECK(rig.lp->lvt().units() == 2.5);  // restored to the newest state before 3
    CHECK(state_times(*rig.lp) == std::vector<double>{1, 2, 2.5});

    // the two antis went out
    CHECK(rig.router.anti_count() == 2);

    // forward execution: false message first, then the rolled-back tail
    // re-executes and re-emits bit-identical copies (same ids)
    rig.run_all();
    CHECK(rig.lp->lvt().units() == 4.5);
    CHECK(send_times(*rig.lp) == std::vector<double>{2.5, 3.5, 4.5});

    std::map<MsgId, int> by_id;
    for (std::size_t i = routed_before; i < rig.router.routed.size(); ++i)
    {
        const auto& m = rig.router.routed[i];
        by_id[m.id] += m.anti ? -1 : 1;
    }
    for (const auto& [id, balance] : by_id)
    {
        (void)id;
        CHECK(balance == 0);  // every cancellation matched by an identical re-emission
    }

    // the false message changed the hash chain: state genuinely re-derived
    CHECK(rig.pp->acc() != acc_before);
}

TEST_CASE("causality rollback with an empty send queue emits no antis")
{
    Rig rig(1, false);
    rig.lp->deliver(external_msg(901, 9, 1, 0, 5), SimTime{0});
    rig.run_all();
    rig.lp->deliver(external_msg(902, 9, 1, 0, 3), SimTime{0});
    REQUIRE(rig.sink.rollbacks.size() == 1);
    CHECK(rig.sink.rollbacks[0].anti_count == 0);
    CHECK(rig.router.anti_count() == 0);
}

TEST_CASE("rollback with no earlier saved state restores the initial state")
{
    Rig rig(1, false);
    rig.lp->deliver(external_msg(901, 9, 1, 0, 5, 3), SimTime{0});
    rig.run_all();
    // only state is at 5; false at 2 forces the initial restore
    rig.lp->deliver(external_msg(902, 9, 1, 0, 2, 4), SimTime{0});
    rig.run_all();
    CHECK(rig.lp->lvt().units() == 5);
    // both executed in order from a clean slate: hash chain = ((0*31+5)*31+6)
    CHECK(rig.pp->acc() == (0 * 31 + 4 + 1) * 31 + 3 + 1);
}

TEST_CASE("a second false message arriving during phase 3 is deferred and handled afterwards")
{
    LpOptions sparse;
    sparse.save_every = 3;  // forces a genuine phase-3 replay from further back
    Rig rig(1, false, std::numeric_limits<double>::infinity(), sparse);
    for (int i = 0; i < 5; ++i)
    {
        rig.lp->deliver(external_msg(901 + static_cast<MsgId>(i), 9, 1, 0, 2.0 + i, i), SimTime{0});
    }
    rig.run_all();
    REQUIRE(rig.lp->lvt().units() == 6);

    // while replaying the message at 3 during phase 3, a second straggler at
    // 2.5 shows up
    bool injected = false;
    bool armed = true;  // first executions already happened above
    rig.pp->on_execute = [&](const Message& m)
    {
        if (armed && !injected && m.receive_time.units() == 3.0)
        {
            injected = true;
            rig.lp->deliver(external_msg(990, 8, 1, 0, 2.5, 50), SimTime{0});
        }
    };
    rig.lp->deliver(external_msg(991, 8, 1, 0, 3.5, 60), SimTime{0});

    CHECK(injected);
    CHECK(rig.sink.rollbacks.size() == 2);  // the deferred straggler rolled back after phase 3
    rig.pp->on_execute = nullptr;
    rig.run_all();

    // final state equals executing everything in timestamp order from scratch
    Rig oracle(1, false);
    int id = 0;
    for (double recv : {2.0, 2.5, 3.0, 3.5, 4.0, 5.0, 6.0})
    {
        std::int64_t packet = recv == 2.5 ? 50 : (recv == 3.5 ? 60 : static_cast<std::int64_t>(recv - 2));
        oracle.lp->deliver(external_msg(801 + static_cast<MsgId>(id++), 8, 1, 0, recv, packet),
                           SimTime{0});
    }
    oracle.run_all();
    CHECK(rig.pp->acc() == oracle.pp->acc());
}

TEST_CASE("verification rollback realigns state at exactly t_v")
{
    Rig rig(1, true, 10.0);
    rig.pp->fixed_offset = 20.0;  // forwards land far in the future
    rig.lp->deliver(external_msg(901, 9, 1, 0, 3, 1), SimTime{0});
    rig.lp->deliver(external_msg(902, 9, 1, 0, 5, 2), SimTime{0});
    rig.lp->deliver(external_msg(903, 9, 1, 0, 8, 3), SimTime{0});
    rig.run_all();
    REQUIRE(state_times(*rig.lp) == std::vector<double>{3, 5, 8});
    REQUIRE(send_times(*rig.lp) == std::vector<double>{3, 5, 8});

    const auto rec = rig.lp->rollback_verification(VirtualTime::from_units(5), 101.0,
                                                   SimTime::from_units(5));
    REQUIRE(rec.has_value());
    CHECK(rec->cause == RollbackCause::Verification);
    CHECK(rec->to_time.units() == 5);
    CHECK(rec->anti_count == 1);  // only the send at 8 is strictly later
    CHECK(rig.lp->lvt().units() == 5);
    CHECK(rig.lp->observable() == 101.0);
    CHECK(state_times(*rig.lp) == std::vector<double>{3, 5});
    CHECK(rig.lp->predicted_at(VirtualTime::from_units(5)) == 101.0);

    // forward execution resumes; the message at 8 re-executes on the forced state
    rig.run_all();
    CHECK(rig.lp->lvt().units() == 8);
    CHECK(rig.pp->acc() == 101 * 31 + 3 + 1);
}

TEST_CASE("verification rollback boundary cases")
{
    Rig rig(1, false, 10.0);
    rig.lp->deliver(external_msg(901, 9, 1, 0, 4, 1), SimTime{0});
    rig.run_all();

    // t_v ahead of the LVT: skipped, nothing predicted there yet
    CHECK(!rig.lp->rollback_verification(VirtualTime::from_units(9), 5.0, SimTime::from_units(9))
               .has_value());

    // t_v == lvt with the current value: no antis, state overwritten in place
    const double current = rig.lp->observable();
    const auto rec = rig.lp->rollback_verification(VirtualTime::from_units(4), current,
                                                   SimTime::from_units(4));
    REQUIRE(rec.has_value());
    CHECK(rec->anti_count == 0);
    CHECK(rig.lp->observable() == current);
    CHECK(rig.lp->lvt().units() == 4);
}

TEST_CASE("purge drops history older than real time but keeps the rollback anchor")
{
    Rig rig(1, true);
    rig.pp->fixed_offset = 30.0;
    rig.pp->emit_enabled = false;
    rig.lp->deliver(external_msg(901, 9, 1, 0, 4), SimTime{0});
    rig.run_all();
    rig.pp->emit_enabled = true;
    rig.lp->deliver(external_msg(902, 9, 1, 0, 5), SimTime{0});
    rig.run_all();
    rig.pp->emit_enabled = false;
    rig.lp->deliver(external_msg(903, 9, 1, 0, 9), SimTime{0});
    rig.lp->deliver(external_msg(904, 9, 1, 0, 12), SimTime{0});
    rig.run_all();
    rig.pp->emit_enabled = true;
    rig.lp->deliver(external_msg(905, 9, 1, 0, 15), SimTime{0});
    rig.run_all();

    REQUIRE(state_times(*rig.lp) == std::vector<double>{4, 5, 9, 12, 15});
    REQUIRE(send_times(*rig.lp) == std::vector<double>{5, 15});

    // now = 0 is the identity
    rig.lp->purge(SimTime{0});
    CHECK(state_times(*rig.lp) == std::vector<double>{4, 5, 9, 12, 15});

    rig.lp->purge(SimTime::from_units(10));
    // newest record at or before 10 (the one at 9) is retained as the anchor
    CHECK(state_times(*rig.lp) == std::vector<double>{9, 12, 15});
    CHECK(send_times(*rig.lp) == std::vector<double>{15});
}

TEST_CASE("an anti for an executed original rolls back to the original's time and annihilates")
{
    Rig rig(1, true);
    rig.pp->fixed_offset = 10.0;
    Message x = external_msg(700, 9, 1, 4, 5, 42);
    rig.lp->deliver(external_msg(901, 9, 1, 0, 2, 1), SimTime{0});
    rig.lp->deliver(x, SimTime{0});
    rig.lp->deliver(external_msg(902, 9, 1, 0, 7, 2), SimTime{0});
    rig.run_all();
    REQUIRE(rig.lp->lvt().units() == 7);
    REQUIRE(rig.lp->recv_queue().cursor() == 3);

    rig.lp->deliver(make_anti(x), SimTime::from_units(5));

    REQUIRE(rig.sink.rollbacks.size() == 1);
    CHECK(rig.sink.rollbacks[0].cause == RollbackCause::Causality);
    CHECK(rig.sink.rollbacks[0].to_time.units() == 5);
    // the undone execution's own forward (send 5) is canceled along with the
    // later one at 7
    CHECK(rig.sink.rollbacks[0].anti_count == 2);
    REQUIRE(rig.sink.annihilations.size() == 1);
    CHECK(rig.sink.annihilations[0].second == 700);

    rig.run_all();
    // history is now exactly the two surviving messages
    Rig oracle(1, true);
    oracle.pp->fixed_offset = 10.0;
    oracle.lp->deliver(external_msg(901, 9, 1, 0, 2, 1), SimTime{0});
    oracle.lp->deliver(external_msg(902, 9, 1, 0, 7, 2), SimTime{0});
    oracle.run_all();
    CHECK(rig.pp->acc() == oracle.pp->acc());
    CHECK(rig.lp->recv_queue().cursor() == 2);
}

TEST_CASE("replay determinism: a verification rollback re-derives identical output")
{
    const auto build = [](Rig& rig)
    {
        rig.pp->rng_offset = true;
        rig.pp->hop_limit = 0;
        for (int i = 0; i < 8; ++i)
        {
            rig.lp->deliver(external_msg(901 + static_cast<MsgId>(i), 9, 1, 0, 1.0 + i, i),
                            SimTime{0});
        }
        rig.run_all();
    };

    Rig control(1, true);
    build(control);

    Rig subject(1, true);
    build(subject);
    // roll the subject back to its own recorded prediction at t = 4 and let it
    // catch up: every re-derived message must match field for field
    const double s_v = subject.lp->predicted_at(VirtualTime::from_units(4)).value();
    subject.lp->rollback_verification(VirtualTime::from_units(4), s_v, SimTime::from_units(4));
    subject.run_all();

    CHECK(subject.pp->acc() == control.pp->acc());
    REQUIRE(subject.lp->send_queue().size() == control.lp->send_queue().size());
    for (std::size_t i = 0; i < control.lp->send_queue().all().size(); ++i)
    {
        CHECK(subject.lp->send_queue().all()[i] == control.lp->send_queue().all()[i]);
    }
}

TEST_CASE("adversarial delivery order converges to the sequential oracle")
{
    // Two LPs forwarding to each other with rng-drawn delays; LP 1 is stepped
    // greedily so LP 2's messages arrive as stragglers.
    const int hop_limit = 12;

    const auto wire = [&](LogicalProcess& a, LogicalProcess& b, TestRouter& router)
    {
        router.lps[a.id()] = &a;
        router.lps[b.id()] = &b;
    };

    TestRouter router;
    CollectingSink sink;
    auto pp1 = std::make_unique<ScriptPp>();
    pp1->emit_enabled = true;
    pp1->rng_offset = true;
    pp1->forward_to = 2;
    pp1->hop_limit = hop_limit;
    auto pp2 = std::make_unique<ScriptPp>();
    pp2->emit_enabled = true;
    pp2->rng_offset = true;
    pp2->forward_to = 1;
    pp2->hop_limit = hop_limit;
    ScriptPp* raw1 = pp1.get();
    ScriptPp* raw2 = pp2.get();

    LogicalProcess lp1(1, std::move(pp1), RngStream(11));
    LogicalProcess lp2(2, std::move(pp2), RngStream(22));
    lp1.set_router(&router);
    lp2.set_router(&router);
    lp1.set_sink(&sink);
    lp2.set_sink(&sink);
    wire(lp1, lp2, router);

    const Message start1 = lp1.emit_external(1, VirtualTime::from_units(1), Payload{100, 0});
    const Message start2 = lp2.emit_external(2, VirtualTime::from_units(1.25), Payload{200, 0});
    lp1.freeze_initial();
    lp2.freeze_initial();
    router.route(start1, SimTime{0});
    router.route(start2, SimTime{0});

    // biased schedule: drain LP1 completely before LP2 gets a turn
    bool progress = true;
    while (progress)
    {
        progress = false;
        while (lp1.step(SimTime{0}, kWide).executed)
        {
            progress = true;
        }
        if (lp2.step(SimTime{0}, kWide).executed)
        {
            progress = true;
        }
    }

    CHECK(!sink.rollbacks.empty());  // the bias produced genuine stragglers

    // independent oracle: one global event list over the same dynamics
    struct Ev
    {
        Ticks recv;
        LpId src;
        MsgId id;
        LpId dst;
        std::int64_t packet;
        std::int64_t entries;
        bool operator<(const Ev& o) const
        {
            return std::tuple(recv, src, id) < std::tuple(o.recv, o.src, o.id);
        }
    };
    std::map<LpId, RngStream> rngs{{1, RngStream(11)}, {2, RngStream(22)}};
    std::map<LpId, std::int64_t> acc{{1, 0}, {2, 0}};
    std::map<LpId, std::uint64_t> seq{{1, 1}, {2, 1}};  // starters took seq 0
    std::set<Ev> events;
    events.insert(Ev{start1.receive_time.t, 1, start1.id, 1, 100, 0});
    events.insert(Ev{start2.receive_time.t, 2, start2.id, 2, 200, 0});
    while (!events.empty())
    {
        const Ev e = *events.begin();
        events.erase(events.begin());
        acc[e.dst] = acc[e.dst] * 31 + e.packet + 1;
        if (e.entries + 1 < hop_limit)
        {
            const Ticks off = ticks_from_units(rngs[e.dst].exponential(1.0));
            const LpId fwd = e.dst == 1 ? 2 : 1;
            events.insert(
                Ev{e.recv + off, e.dst, make_msg_id(e.dst, seq[e.dst]++), fwd, e.packet, e.entries + 1});
        }
    }

    CHECK(raw1->acc() == acc[1]);
    CHECK(raw2->acc() == acc[2]);
}
