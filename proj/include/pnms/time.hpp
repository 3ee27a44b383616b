#pragma once

#include <compare>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace pnms
{
    // All clocks use fixed-point time with 1e-6 resolution. Rollback targeting
    // and queue ordering need exact comparison, which floating point cannot give.
    using Ticks = std::int64_t;

    inline constexpr double kTicksPerUnit = 1e6;

    Ticks ticks_from_units(double units);
    double units_from_ticks(Ticks t);

    // Parses "12", "12.5", "0.000001". Rejects negatives, NaN spellings, junk.
    Ticks parse_ticks(const std::string& text);

    // Time on the prediction clock (LVT, GVT, send/receive stamps).
    // Non-negative; no NaN or infinity is representable.
    struct VirtualTime
    {
        Ticks t = 0;

        auto operator<=>(const VirtualTime&) const = default;

        static VirtualTime from_units(double units) { return VirtualTime{ticks_from_units(units)}; }
        double units() const { return units_from_ticks(t); }
    };

    // Time on the ground-truth clock. Same unit and resolution as VirtualTime;
    // the coordinator only ever advances it.
    struct SimTime
    {
        Ticks t = 0;

        auto operator<=>(const SimTime&) const = default;

        static SimTime from_units(double units) { return SimTime{ticks_from_units(units)}; }
        double units() const { return units_from_ticks(t); }
    };

    inline VirtualTime to_virtual(SimTime s) { return VirtualTime{s.t}; }

    inline VirtualTime vt_plus(VirtualTime v, Ticks d)
    {
        if (v.t + d < 0)
        {
            throw std::domain_error("VirtualTime arithmetic produced a negative time");
        }
        return VirtualTime{v.t + d};
    }
}
