#pragma once

#include "pnms/message.hpp"
#include "pnms/time.hpp"

#include <map>
#include <optional>
#include <span>

namespace pnms
{
    struct WindowPolicy
    {
        Ticks lambda = 0;  // lookahead width in ticks; 0 means no running ahead
    };

    struct GvtSnapshot
    {
        VirtualTime gvt;
        std::map<LpId, VirtualTime> per_lp_lvt;
        std::optional<VirtualTime> in_flight_min_send;
        SimTime at_real;
    };

    // Minimum over every LVT and over the send times of copies the GVT service
    // still holds. Requires at least one registered LP.
    GvtSnapshot compute_gvt(const std::map<LpId, VirtualTime>& lvts,
                            std::span<const Ticks> copied_send_times, SimTime now);

    // How far the prediction runs ahead of real time. Signed: negative happens
    // transiently after a rollback, before the model catches back up.
    inline Ticks t_ahead(VirtualTime gvt, SimTime now) { return gvt.t - now.t; }

    // True iff dispatching an event at lvt_next keeps the LP inside the window.
    inline bool within_window(VirtualTime lvt_next, SimTime now, WindowPolicy policy)
    {
        return lvt_next.t - now.t <= policy.lambda;
    }
}
