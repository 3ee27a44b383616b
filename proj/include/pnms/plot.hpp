#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace pnms
{
    struct Series
    {
        std::string name;
        std::vector<std::pair<double, double>> points;
    };

    // Minimal SVG line chart; y-axis always spans the data range.
    void write_svg_chart(const std::filesystem::path& path, const std::string& title,
                         const std::string& x_label, const std::string& y_label,
                         const std::vector<Series>& series);

    // Renders the four figure families (GVT vs real time, rollbacks, state,
    // error) from a run trace as SVG/CSV pairs in out_dir. Returns the files
    // written. Throws when the trace file is missing.
    std::vector<std::filesystem::path> emit_plots(const std::filesystem::path& trace_file,
                                                  const std::filesystem::path& out_dir);
}
