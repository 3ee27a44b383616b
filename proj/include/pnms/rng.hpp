#pragma once

#include <cmath>
#include <cstdint>

namespace pnms
{
    // Counter-based random stream: the state is (key, counter), so a checkpoint
    // is a single integer and replay from a checkpoint redelivers identical
    // draws. Every logical process and every ground-truth switch owns a
    // distinct named stream derived from the run seed.
    class RngStream
    {
    public:
        RngStream() = default;
        explicit RngStream(std::uint64_t key) : m_key(key) {}

        // Stub stream: uniform() always returns `u`. Used by deterministic
        // service-time checks where each exponential draw must equal its mean.
        static RngStream constant(double u)
        {
            RngStream s;
            s.m_stub = true;
            s.m_stub_value = u;
            return s;
        }

        static std::uint64_t mix(std::uint64_t a, std::uint64_t b)
        {
            return split_mix(a ^ (0x9e3779b97f4a7c15ULL + (b << 6) + (b >> 2)));
        }

        // Uniform in [0, 1).
        double uniform()
        {
            if (m_stub)
            {
                ++m_counter;
                return m_stub_value;
            }
            const std::uint64_t bits = split_mix(m_key + 0x9e3779b97f4a7c15ULL * ++m_counter);
            return static_cast<double>(bits >> 11) * 0x1.0p-53;
        }

        double exponential(double mean)
        {
            return -mean * std::log(1.0 - uniform());
        }

        // Uniform over {0, 1, ..., n-1}.
        std::uint32_t uniform_int(std::uint32_t n)
        {
            const double u = uniform();
            auto v = static_cast<std::uint32_t>(u * n);
            return v >= n ? n - 1 : v;
        }

        std::uint64_t checkpoint() const { return m_counter; }
        void restore(std::uint64_t counter) { m_counter = counter; }
        std::uint64_t key() const { return m_key; }

    private:
        static std::uint64_t split_mix(std::uint64_t x)
        {
            x += 0x9e3779b97f4a7c15ULL;
            x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
            x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
            return x ^ (x >> 31);
        }

        std::uint64_t m_key = 0;
        std::uint64_t m_counter = 0;
        bool m_stub = false;
        double m_stub_value = 0.5;
    };
}
