#include "pnms/verify.hpp"

#include <cmath>
#include <stdexcept>

namespace pnms
{
    std::vector<SimTime> due_verifications(const VerificationPolicy& policy, SimTime now,
                                           SimTime last_done)
    {
        if (policy.upsilon <= 0)
        {
            throw std::invalid_argument("verification period must be positive");
        }
        std::vector<SimTime> due;
        Ticks k = last_done.t / policy.upsilon + 1;
        for (; k * policy.upsilon <= now.t; ++k)
        {
            due.push_back(SimTime{k * policy.upsilon});
        }
        return due;
    }

    VerificationOutcome check(const LogicalProcess& lp, VirtualTime t_v, std::int64_t actual,
                              double theta)
    {
        VerificationOutcome out;
        out.device = lp.id();
        out.t_v = t_v;
        out.actual = actual;

        const auto predicted = lp.predicted_at(t_v);
        if (!predicted)
        {
            out.status = VerifyStatus::Unverifiable;
            return out;
        }
        out.predicted = *predicted;
        out.delta = out.predicted - static_cast<double>(actual);
        out.within = std::fabs(out.delta) <= theta;
        return out;
    }

    namespace
    {
        double hop_error(const ErrorModel& model, int n, ErrorComposition comp)
        {
            if (comp == ErrorComposition::PureSum)
            {
                return n == 0 ? model.me_dp
                              : n * (model.gain * model.me_dp + model.eps_per_hop);
            }
            double e = model.me_dp;
            for (int i = 0; i < n; ++i)
            {
                e = model.gain * e + model.eps_per_hop;
            }
            return e;
        }
    }

    double ac_n(const ErrorModel& model, int n, ErrorComposition comp)
    {
        if (n < 0)
        {
            throw std::invalid_argument("ac_n: hop count must be non-negative");
        }
        return hop_error(model, n, comp);
    }

    double ac_t(const ErrorModel& model, double tau, ErrorComposition comp)
    {
        if (tau < 0.0)
        {
            throw std::invalid_argument("ac_t: elapsed time must be non-negative");
        }
        if (!(model.hop_time > 0.0))
        {
            throw std::invalid_argument("ac_t: hop time must be positive");
        }
        const int hops = static_cast<int>(std::floor(tau / model.hop_time));
        return hop_error(model, hops, comp);
    }

    double t_vfail(const ErrorModel& model, double theta, ErrorComposition comp)
    {
        if (theta < 0.0)
        {
            throw std::invalid_argument("t_vfail: tolerance must be non-negative");
        }
        constexpr double inf = std::numeric_limits<double>::infinity();
        if (theta == inf)
        {
            return inf;
        }

        double e = hop_error(model, 0, comp);
        if (e > theta)
        {
            return 0.0;  // even the driving message is out of tolerance
        }
        constexpr int limit = 1 << 24;
        for (int n = 1; n <= limit; ++n)
        {
            const double next = comp == ErrorComposition::PureSum
                                    ? hop_error(model, n, comp)
                                    : model.gain * e + model.eps_per_hop;
            if (next > theta)
            {
                return n * model.hop_time;
            }
            // Monotone chain stalled below theta: it will never exceed.
            if (next <= e && n > 1)
            {
                return inf;
            }
            if (next == e)
            {
                return inf;
            }
            e = next;
        }
        return inf;
    }

    ErrorModel calibrate(ErrorModel model, std::span<const ErrorSample> samples)
    {
        if (samples.size() < 2)
        {
            return model;
        }
        double num = 0.0;
        double den = 0.0;
        for (const auto& s : samples)
        {
            num += s.elapsed * s.abs_error;
            den += s.elapsed * s.elapsed;
        }
        if (den > 0.0)
        {
            const double slope = num / den;  // error per time unit
            model.gain = 1.0;
            model.eps_per_hop = slope * model.hop_time;
        }
        model.samples.assign(samples.begin(), samples.end());
        return model;
    }
}
