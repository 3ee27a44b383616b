#include "pnms/trace.hpp"

#include <stdexcept>

namespace pnms
{
    TraceWriter::TraceWriter(const std::filesystem::path& path) : m_path(path)
    {
        if (path.has_parent_path())
        {
            std::filesystem::create_directories(path.parent_path());
        }
        m_out.open(path, std::ios::trunc);
        if (!m_out)
        {
            throw std::runtime_error("cannot open trace file: " + path.string());
        }
    }

    void TraceWriter::write(const nlohmann::json& row)
    {
        ++m_counts[row.at("kind").get<std::string>()];
        m_out << row.dump() << '\n';
    }
}
