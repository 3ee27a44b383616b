#include "pnms/gvt.hpp"

#include <stdexcept>

namespace pnms
{
    GvtSnapshot compute_gvt(const std::map<LpId, VirtualTime>& lvts,
                            std::span<const Ticks> copied_send_times, SimTime now)
    {
        if (lvts.empty())
        {
            throw std::invalid_argument("compute_gvt: no logical processes registered");
        }

        GvtSnapshot snap;
        snap.per_lp_lvt = lvts;
        snap.at_real = now;

        VirtualTime gvt{std::numeric_limits<Ticks>::max()};
        for (const auto& [lp, lvt] : lvts)
        {
            (void)lp;
            gvt = std::min(gvt, lvt);
        }
        for (const Ticks s : copied_send_times)
        {
            if (!snap.in_flight_min_send || s < snap.in_flight_min_send->t)
            {
                snap.in_flight_min_send = VirtualTime{s};
            }
        }
        if (snap.in_flight_min_send)
        {
            gvt = std::min(gvt, *snap.in_flight_min_send);
        }
        snap.gvt = gvt;
        return snap;
    }
}
