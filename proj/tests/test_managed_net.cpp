#include "oracle_des.hpp"
#include "test_support.hpp"

#include "pnms/engine.hpp"
#include "pnms/switch_net.hpp"

#include <array>
#include <cmath>

#include <doctest.h>

using namespace pnms;
using namespace pnms::test;

TEST_CASE("build_network produces the reference topology")
{
    NetworkParams p;
    p.seed = 7;
    auto net = build_network(p);
    CHECK(net.truth->switch_count() == 3);
    CHECK(net.twins.size() == 3);
    for (LpId s = 0; s < 3; ++s)
    {
        CHECK(net.truth->counter_unmetered(s) == 1);  // startup injection counted
    }
    CHECK(net.truth->total_in_system() == 3);

    NetworkParams bad = p;
    bad.switches = 0;
    CHECK_THROWS(build_network(bad));
    bad = p;
    bad.servers = 0;
    CHECK_THROWS(build_network(bad));
}

TEST_CASE("exact mode aliases the twin streams onto the truth streams")
{
    CHECK(twin_stream_key(9, 2, true) == truth_stream_key(9, 2));
    CHECK(twin_stream_key(9, 2, false) != truth_stream_key(9, 2));
}

TEST_CASE("advance_truth matches the independent event-list oracle")
{
    NetworkParams p;
    p.seed = 1234;
    auto net = build_network(p);
    net.truth->advance(SimTime::from_units(1000));

    OracleParams op;
    op.seed = 1234;
    op.until = ticks_from_units(1000);
    const auto oracle = oracle_run(op);
    for (LpId s = 0; s < 3; ++s)
    {
        CHECK(net.truth->counter_unmetered(s) == oracle.finals[s]);
    }
}

TEST_CASE("advance_truth identity and pending-service boundary")
{
    NetworkParams p;
    p.switches = 1;
    p.servers = 10;
    p.mean_service = 10;
    p.packets_per_switch = 1;
    auto net = build_network(p);
    CHECK(net.truth->counter_unmetered(0) == 1);

    net.truth->advance(net.truth->clock());  // identity
    CHECK(net.truth->counter_unmetered(0) == 1);

    // first completion takes ~100 time units; nothing lands by t=20
    net.truth->advance(SimTime::from_units(20));
    CHECK(net.truth->counter_unmetered(0) == 1);

    CHECK_THROWS(net.truth->advance(SimTime::from_units(5)));
}

TEST_CASE("degenerate single self-looping switch counts one entry per completion")
{
    NetworkParams p;
    p.switches = 1;
    p.servers = 1;
    p.mean_service = 2.0;
    p.packets_per_switch = 1;
    p.seed = 5;
    auto net = build_network(p);
    net.truth->advance(SimTime::from_units(200));

    OracleParams op;
    op.switches = 1;
    op.servers = 1;
    op.mean_service = 2.0;
    op.seed = 5;
    op.until = ticks_from_units(200);
    const auto oracle = oracle_run(op);
    CHECK(net.truth->counter_unmetered(0) == oracle.finals[0]);
    CHECK(net.truth->counter_unmetered(0) > 50);  // the packet keeps cycling
    // every oracle step increments by exactly one
    for (std::size_t i = 1; i < oracle.history[0].size(); ++i)
    {
        CHECK(oracle.history[0][i].counter == oracle.history[0][i - 1].counter + 1);
    }
}

TEST_CASE("conservation: circulating packets are neither created nor destroyed")
{
    NetworkParams p;
    p.packets_per_switch = 4;
    p.seed = 99;
    auto net = build_network(p);
    CHECK(net.truth->injected_total() == 12);
    for (double t : {10.0, 55.5, 200.0, 777.25, 1500.0})
    {
        net.truth->advance(SimTime::from_units(t));
        CHECK(net.truth->total_in_system() == 12);
    }
}

TEST_CASE("query_agent meters polls and reads the counter at the current clock")
{
    NetworkParams p;
    auto net = build_network(p);
    const auto r1 = net.truth->query_agent(0);
    CHECK(r1.value == 1);
    CHECK(r1.at == net.truth->clock());
    const auto r2 = net.truth->query_agent(0);
    CHECK(r2.value == r1.value);
    CHECK(net.truth->poll_count() == 2);
    CHECK_THROWS(net.truth->query_agent(42));
}

TEST_CASE("switch transition with the stub stream: departure = arrival + servers * mean")
{
    SwitchPp pp(0, SwitchParams{3, 10, 10.0});
    // uniform() == 1 - 1/e makes every exponential draw equal its mean
    RngStream stub = RngStream::constant(1.0 - std::exp(-1.0));

    Message arrival = external_msg(1, 0, 0, 7, 7, /*packet*/ 3, /*entries*/ 2);
    std::vector<EmitRequest> out;
    pp.execute(arrival, stub, out);
    REQUIRE(out.size() == 1);
    CHECK(out[0].receive_time.units() == doctest::Approx(107.0).epsilon(1e-9));
    CHECK(out[0].payload.packet == 3);
    CHECK(out[0].payload.entries == 3);
    CHECK(pp.counter() == 1);

    // counter after n arrivals = initial + n
    for (int n = 0; n < 5; ++n)
    {
        out.clear();
        pp.execute(arrival, stub, out);
    }
    CHECK(pp.counter() == 6);
}

TEST_CASE("FCFS backlog: a second arrival waits for the pipeline to free up")
{
    SwitchPp pp(0, SwitchParams{3, 10, 10.0});
    RngStream stub = RngStream::constant(1.0 - std::exp(-1.0));
    std::vector<EmitRequest> out;
    pp.execute(external_msg(1, 0, 0, 0, 0), stub, out);
    pp.execute(external_msg(2, 0, 0, 0, 10), stub, out);
    REQUIRE(out.size() == 2);
    CHECK(out[0].receive_time.units() == doctest::Approx(100.0));
    CHECK(out[1].receive_time.units() == doctest::Approx(200.0));  // started at 100, not 10
}

TEST_CASE("forward destinations are uniform over all switches including self")
{
    SwitchPp pp(1, SwitchParams{3, 10, 10.0});
    RngStream rng(2024);
    std::vector<EmitRequest> out;
    std::array<int, 3> hits{};
    const int draws = 10'000;
    for (int i = 0; i < draws; ++i)
    {
        out.clear();
        pp.execute(external_msg(static_cast<MsgId>(i + 1), 0, 1, 0, i), rng, out);
        hits[out[0].dst] += 1;
    }
    const double expect = draws / 3.0;
    double chi2 = 0.0;
    for (int h : hits)
    {
        chi2 += (h - expect) * (h - expect) / expect;
    }
    CHECK(chi2 < 11.83);  // 99.7% quantile, 2 degrees of freedom
}

TEST_CASE("driving_emit injects one id-association arrival per circulating packet")
{
    NetworkParams p;
    p.packets_per_switch = 2;
    auto net = build_network(p);

    std::vector<std::unique_ptr<LogicalProcess>> lps;
    std::vector<LogicalProcess*> raw;
    for (auto& spec : net.twins)
    {
        lps.push_back(std::make_unique<LogicalProcess>(spec.id, std::move(spec.pp), spec.rng));
        raw.push_back(lps.back().get());
    }
    const auto startup = driving_emit(raw, 2);
    REQUIRE(startup.size() == 6);
    for (const auto& m : startup)
    {
        CHECK(m.src == m.dst);
        CHECK(m.receive_time.t == 0);
        CHECK(!m.real_stamp.has_value());  // virtual by construction
        CHECK(m.payload.entries == 0);
    }

    // processing the startup arrivals emits strictly-future virtual predictions
    TestRouter router;
    for (auto& lp : lps)
    {
        router.lps[lp->id()] = lp.get();
        lp->set_router(&router);
        lp->freeze_initial();
    }
    for (const auto& m : startup)
    {
        router.route(m, SimTime{0});
    }
    for (auto& lp : lps)
    {
        while (lp->step(SimTime{0}, 0).executed)  // window 0: only the t=0 arrivals run
        {
        }
    }
    std::size_t forwards = 0;
    for (const auto& m : router.routed)
    {
        if (m.payload.entries > 0)
        {
            ++forwards;
            CHECK(m.receive_time.t > 0);
            CHECK(!m.real_stamp.has_value());
        }
    }
    CHECK(forwards == 6);
}

TEST_CASE("exact twin with infinite tolerance never sees a deviation")
{
    NetworkParams net;
    net.exact_twin = true;
    net.seed = 31;
    EngineParams eng;
    eng.lambda = ticks_from_units(5);
    eng.upsilon = ticks_from_units(5);
    eng.theta = std::numeric_limits<double>::infinity();
    eng.duration = ticks_from_units(300);

    Coordinator coord(net, eng, nullptr);
    const RunStats stats = coord.run();
    CHECK(stats.verification_rollbacks == 0);
    CHECK(stats.causality_rollbacks == 0);
    CHECK(stats.max_abs_delta == 0.0);
    CHECK(stats.checks > 0);
    for (const auto& f : stats.finals)
    {
        CHECK(f.predicted == static_cast<double>(f.actual));
    }
}
