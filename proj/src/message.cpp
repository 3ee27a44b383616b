#include "pnms/message.hpp"

namespace pnms
{
    Message make_anti(const Message& m)
    {
        if (m.anti)
        {
            throw std::invalid_argument("make_anti: input is already an anti-message");
        }
        Message a = m;
        a.anti = true;
        return a;
    }

    void validate_message(const Message& m)
    {
        if (m.receive_time < m.send_time)
        {
            throw std::invalid_argument("message receive time precedes its send time");
        }
    }

    nlohmann::json message_json(const Message& m)
    {
        nlohmann::json j;
        j["id"] = m.id;
        j["src"] = m.src;
        j["dst"] = m.dst;
        j["send"] = m.send_time.units();
        j["recv"] = m.receive_time.units();
        j["anti"] = m.anti;
        j["real"] = m.real_stamp ? nlohmann::json(m.real_stamp->units()) : nlohmann::json(nullptr);
        return j;
    }
}
