#pragma once

#include "pnms/time.hpp"
#include "pnms/verify.hpp"

#include <optional>
#include <string>

namespace pnms
{
    struct PollingParams
    {
        double packets_per_poll = 1.0;   // P
        double bits_per_packet = 0.0;    // S
        double devices = 1.0;            // N
        double period = 1.0;             // T, time units
        double poll_cost = 1.0;          // Delta, time one poll takes
        double bandwidth = 1.0;          // Bw, bits per time unit
    };

    void validate(const PollingParams& p);

    // Management overhead as a percentage of total bandwidth:
    // 100 * P * N * S / (T * Bw). The printed form of the overhead equation
    // multiplies by Bw instead of dividing; it is dimensionally inconsistent
    // for a percentage but kept available for comparison.
    enum class BwForm
    {
        Fraction,  // 100 * P * N * S / (T * Bw)
        Printed,   // 100 * P * N * S * Bw / T
    };

    double overhead_bandwidth_pct(const PollingParams& p, BwForm form = BwForm::Fraction);

    // N <= T / Delta: how many devices one poller can cover at period T.
    long max_devices(double period, double poll_cost);

    // T >= Delta * N: the shortest period that still covers N devices.
    double min_period(double poll_cost, long devices);

    struct IntervalRecommendation
    {
        bool feasible = false;
        // Largest period meeting every constraint. Unset with unbounded=true
        // when accuracy places no upper bound (t_vfail is infinite).
        std::optional<double> period;
        bool unbounded = false;
        double lower_bound = 0.0;  // max of the capacity and budget floors
        std::string binding;       // names the constraint that emptied the set
    };

    // Largest polling period T with T <= t_vfail(theta), T >= Delta * N and
    // overhead within budget_pct.
    IntervalRecommendation recommend_interval(const ErrorModel& model, double theta,
                                              const PollingParams& constraints, double budget_pct);

    struct PredictionTriple
    {
        double time = 0.0;  // predicted instant in time units
        double value = 0.0;
        double probability = 0.0;  // in [0, 1]
    };

    // Weighted fusion of two predictions: times and values averaged with
    // weights (probability x system weight); fused probability is the
    // system-weighted mean of the input probabilities.
    PredictionTriple fuse(const PredictionTriple& a, const PredictionTriple& b, double wa, double wb);
}
