#include "pnms/time.hpp"

#include <cctype>
#include <cmath>

namespace pnms
{
    Ticks ticks_from_units(double units)
    {
        if (!std::isfinite(units))
        {
            throw std::domain_error("time value must be finite");
        }
        const double scaled = units * kTicksPerUnit;
        if (scaled >= 9.2e18 || scaled <= -9.2e18)
        {
            throw std::domain_error("time value out of range");
        }
        return static_cast<Ticks>(std::llround(scaled));
    }

    double units_from_ticks(Ticks t)
    {
        return static_cast<double>(t) / kTicksPerUnit;
    }

    Ticks parse_ticks(const std::string& text)
    {
        std::size_t i = 0;
        while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i])))
        {
            ++i;
        }
        std::size_t end = text.size();
        while (end > i && std::isspace(static_cast<unsigned char>(text[end - 1])))
        {
            --end;
        }
        if (i == end)
        {
            throw std::invalid_argument("empty time value");
        }

        Ticks whole = 0;
        bool any_digit = false;
        while (i < end && std::isdigit(static_cast<unsigned char>(text[i])))
        {
            whole = whole * 10 + (text[i] - '0');
            any_digit = true;
            ++i;
        }

        Ticks frac = 0;
        if (i < end && text[i] == '.')
        {
            ++i;
            Ticks scale = static_cast<Ticks>(kTicksPerUnit) / 10;
            while (i < end && std::isdigit(static_cast<unsigned char>(text[i])))
            {
                frac += (text[i] - '0') * scale;
                scale /= 10;
                any_digit = true;
                ++i;
            }
        }

        if (!any_digit || i != end)
        {
            throw std::invalid_argument("malformed time value: '" + text + "'");
        }
        return whole * static_cast<Ticks>(kTicksPerUnit) + frac;
    }
}
