#include "pnms/poll_plan.hpp"

#include <cmath>
#include <stdexcept>

namespace pnms
{
    void validate(const PollingParams& p)
    {
        const auto positive = [](double v, const char* name)
        {
            if (!(v > 0.0) || !std::isfinite(v))
            {
                throw std::invalid_argument(std::string("polling parameter must be positive: ") + name);
            }
        };
        positive(p.packets_per_poll, "packets_per_poll");
        positive(p.bits_per_packet, "bits_per_packet");
        positive(p.devices, "devices");
        positive(p.period, "period");
        positive(p.poll_cost, "poll_cost");
        positive(p.bandwidth, "bandwidth");
    }

    double overhead_bandwidth_pct(const PollingParams& p, BwForm form)
    {
        validate(p);
        const double numerator = 100.0 * p.packets_per_poll * p.devices * p.bits_per_packet;
        if (form == BwForm::Printed)
        {
            return numerator * p.bandwidth / p.period;
        }
        return numerator / (p.period * p.bandwidth);
    }

    long max_devices(double period, double poll_cost)
    {
        if (!(period > 0.0) || !(poll_cost > 0.0))
        {
            throw std::invalid_argument("max_devices: inputs must be positive");
        }
        return static_cast<long>(std::floor(period / poll_cost));
    }

    double min_period(double poll_cost, long devices)
    {
        if (!(poll_cost > 0.0) || devices <= 0)
        {
            throw std::invalid_argument("min_period: inputs must be positive");
        }
        return poll_cost * static_cast<double>(devices);
    }

    IntervalRecommendation recommend_interval(const ErrorModel& model, double theta,
                                              const PollingParams& constraints, double budget_pct)
    {
        if (!(budget_pct > 0.0))
        {
            throw std::invalid_argument("recommend_interval: budget must be positive");
        }

        IntervalRecommendation rec;
        const double capacity_floor = min_period(constraints.poll_cost,
                                                 static_cast<long>(constraints.devices));
        // overhead(T) <= budget is a lower bound on T since overhead falls as
        // the period grows.
        const double budget_floor = 100.0 * constraints.packets_per_poll * constraints.devices *
                                    constraints.bits_per_packet /
                                    (budget_pct * constraints.bandwidth);
        rec.lower_bound = std::max(capacity_floor, budget_floor);

        const double accuracy_ceiling = t_vfail(model, theta);
        if (std::isinf(accuracy_ceiling))
        {
            rec.feasible = true;
            rec.unbounded = true;
            return rec;
        }
        if (accuracy_ceiling < rec.lower_bound)
        {
            rec.feasible = false;
            rec.binding = capacity_floor >= budget_floor
                              ? "accuracy ceiling t_vfail below capacity floor delta*N"
                              : "accuracy ceiling t_vfail below bandwidth-budget floor";
            return rec;
        }
        rec.feasible = true;
        rec.period = accuracy_ceiling;
        return rec;
    }

    PredictionTriple fuse(const PredictionTriple& a, const PredictionTriple& b, double wa, double wb)
    {
        if (wa < 0.0 || wb < 0.0)
        {
            throw std::invalid_argument("fuse: system weights must be non-negative");
        }
        if (wa + wb <= 0.0)
        {
            throw std::invalid_argument("fuse: at least one system weight must be positive");
        }
        const double ea = wa * a.probability;
        const double eb = wb * b.probability;
        if (ea + eb <= 0.0)
        {
            throw std::domain_error("fuse: no information (both effective weights are zero)");
        }

        PredictionTriple out;
        out.time = (ea * a.time + eb * b.time) / (ea + eb);
        out.value = (ea * a.value + eb * b.value) / (ea + eb);
        out.probability = (wa * a.probability + wb * b.probability) / (wa + wb);
        return out;
    }
}
