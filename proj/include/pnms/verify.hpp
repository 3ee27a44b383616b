#pragma once

#include "pnms/lp.hpp"
#include "pnms/time.hpp"

#include <limits>
#include <span>
#include <vector>

namespace pnms
{
    struct VerificationPolicy
    {
        Ticks upsilon = 0;  // verification query period; must be positive
        double theta = std::numeric_limits<double>::infinity();  // tolerance per state variable
        // State verification compares against states saved in the state queue.
    };

    // All multiples of the query period in (last_done, now].
    std::vector<SimTime> due_verifications(const VerificationPolicy& policy, SimTime now,
                                           SimTime last_done);

    enum class VerifyStatus
    {
        Checked,
        Unverifiable,  // no saved state at or before t_v
    };

    struct VerificationOutcome
    {
        LpId device = 0;
        VirtualTime t_v;
        double predicted = 0.0;
        std::int64_t actual = 0;
        double delta = 0.0;
        bool within = true;
        VerifyStatus status = VerifyStatus::Checked;
    };

    // Compares the saved prediction at the greatest state time <= t_v against
    // the ground-truth reading. Pure: acting on an out-of-tolerance outcome
    // (rollback_verification) is the coordinator's job.
    VerificationOutcome check(const LogicalProcess& lp, VirtualTime t_v, std::int64_t actual,
                              double theta);

    struct ErrorSample
    {
        double elapsed = 0.0;    // time since the last known-exact alignment
        double abs_error = 0.0;  // |predicted - actual|
    };

    // Per-hop computation error is affine: CE(e, t) = gain * e + eps_per_hop.
    // The simplest family that shows both compounding (gain >= 1) and
    // cancellation (gain < 1).
    struct ErrorModel
    {
        double gain = 1.0;
        double eps_per_hop = 0.0;
        double hop_time = 1.0;  // mean time one hop takes, in time units
        double me_dp = 0.0;     // error carried by the driving message
        std::vector<ErrorSample> samples;
    };

    enum class ErrorComposition
    {
        Recursive,  // each hop's output error feeds the next hop's input
        PureSum,    // every hop sees the driving error; terms are summed
    };

    // Accumulated error in the n-th hop's output, n >= 0 (0 = driving message).
    double ac_n(const ErrorModel& model, int n, ErrorComposition comp = ErrorComposition::Recursive);

    // Accumulated error after tau time units, realized by discretizing hop
    // chains on the model's mean hop time.
    double ac_t(const ErrorModel& model, double tau, ErrorComposition comp = ErrorComposition::Recursive);

    // Least upper bound of the horizons whose accumulated error stays within
    // theta; +infinity when the error never exceeds it.
    double t_vfail(const ErrorModel& model, double theta,
                   ErrorComposition comp = ErrorComposition::Recursive);

    // Fits eps_per_hop by least squares of |predicted - actual| against
    // elapsed time (line through the origin). Fewer than two samples leave
    // the model unchanged.
    ErrorModel calibrate(ErrorModel model, std::span<const ErrorSample> samples);
}
