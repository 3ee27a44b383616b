#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <string>

#include <json.hpp>

namespace pnms
{
    // JSONL run trace: one event per line with a `kind` discriminator, so each
    // figure is a single filter and plot over the file.
    class TraceWriter
    {
    public:
        explicit TraceWriter(const std::filesystem::path& path);

        void write(const nlohmann::json& row);

        const std::map<std::string, std::size_t>& counts_by_kind() const { return m_counts; }
        const std::filesystem::path& path() const { return m_path; }

    private:
        std::filesystem::path m_path;
        std::ofstream m_out;
        std::map<std::string, std::size_t> m_counts;
    };
}
