#include "pnms/plot.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

namespace pnms
{
    namespace
    {
        constexpr double kWidth = 840;
        constexpr double kHeight = 520;
        constexpr double kMargin = 60;

        const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                  "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"};

        std::string fmt(double v)
        {
            std::ostringstream os;
            os << v;
            return os.str();
        }
    }

    void write_svg_chart(const std::filesystem::path& path, const std::string& title,
                         const std::string& x_label, const std::string& y_label,
                         const std::vector<Series>& series)
    {
        double xmin = 0, xmax = 1, ymin = 0, ymax = 1;
        bool any = false;
        for (const auto& s : series)
        {
            for (const auto& [x, y] : s.points)
            {
                if (!any)
                {
                    xmin = xmax = x;
                    ymin = ymax = y;
                    any = true;
                }
                xmin = std::min(xmin, x);
                xmax = std::max(xmax, x);
                ymin = std::min(ymin, y);
                ymax = std::max(ymax, y);
            }
        }
        if (xmax == xmin)
        {
            xmax = xmin + 1;
        }
        if (ymax == ymin)
        {
            ymax = ymin + 1;
        }

        const auto sx = [&](double x)
        { return kMargin + (x - xmin) / (xmax - xmin) * (kWidth - 2 * kMargin); };
        const auto sy = [&](double y)
        { return kHeight - kMargin - (y - ymin) / (ymax - ymin) * (kHeight - 2 * kMargin); };

        std::ofstream out(path);
        if (!out)
        {
            throw std::runtime_error("cannot write plot: " + path.string());
        }
        out << "<svg xmlns='http://www.w3.org/2000/svg' width='" << kWidth << "' height='"
            << kHeight << "' viewBox='0 0 " << kWidth << " " << kHeight << "'>\n";
        out << "<rect width='100%' height='100%' fill='white'/>\n";
        out << "<text x='" << kWidth / 2 << "' y='24' text-anchor='middle' font-size='16'>"
            << title << "</text>\n";
        // axes
        out << "<line x1='" << kMargin << "' y1='" << kHeight - kMargin << "' x2='"
            << kWidth - kMargin << "' y2='" << kHeight - kMargin << "' stroke='black'/>\n";
        out << "<line x1='" << kMargin << "' y1='" << kMargin << "' x2='" << kMargin << "' y2='"
            << kHeight - kMargin << "' stroke='black'/>\n";
        out << "<text x='" << kWidth / 2 << "' y='" << kHeight - 16
            << "' text-anchor='middle' font-size='12'>" << x_label << "</text>\n";
        out << "<text x='16' y='" << kHeight / 2 << "' font-size='12' transform='rotate(-90 16 "
            << kHeight / 2 << ")' text-anchor='middle'>" << y_label << "</text>\n";
        out << "<text x='" << kMargin << "' y='" << kHeight - kMargin + 16
            << "' font-size='10'>" << fmt(xmin) << "</text>\n";
        out << "<text x='" << kWidth - kMargin << "' y='" << kHeight - kMargin + 16
            << "' text-anchor='end' font-size='10'>" << fmt(xmax) << "</text>\n";
        out << "<text x='" << kMargin - 4 << "' y='" << kHeight - kMargin
            << "' text-anchor='end' font-size='10'>" << fmt(ymin) << "</text>\n";
        out << "<text x='" << kMargin - 4 << "' y='" << kMargin + 4
            << "' text-anchor='end' font-size='10'>" << fmt(ymax) << "</text>\n";

        std::size_t idx = 0;
        for (const auto& s : series)
        {
            const char* color = kPalette[idx % (sizeof kPalette / sizeof kPalette[0])];
            if (!s.points.empty())
            {
                out << "<polyline fill='none' stroke='" << color << "' stroke-width='1.5' points='";
                for (const auto& [x, y] : s.points)
                {
                    out << sx(x) << ',' << sy(y) << ' ';
                }
                out << "'/>\n";
            }
            out << "<text x='" << kWidth - kMargin << "' y='" << kMargin + 14 * (idx + 1)
                << "' text-anchor='end' font-size='11' fill='" << color << "'>" << s.name
                << "</text>\n";
            ++idx;
        }
        out << "</svg>\n";
    }

    std::vector<std::filesystem::path> emit_plots(const std::filesystem::path& trace_file,
                                                  const std::filesystem::path& out_dir)
    {
        std::ifstream in(trace_file);
        if (!in)
        {
            throw std::runtime_error("missing trace file: " + trace_file.string());
        }
        std::filesystem::create_directories(out_dir);

        Series gvt{"gvt", {}};
        std::map<unsigned, Series> predicted, actual, error;
        Series rb_causality{"causality", {}};
        Series rb_verification{"verification", {}};
        std::size_t n_causality = 0, n_verification = 0;

        std::string line;
        while (std::getline(in, line))
        {
            if (line.empty())
            {
                continue;
            }
            const auto row = nlohmann::json::parse(line);
            const std::string kind = row.at("kind");
            if (kind == "gvt")
            {
                gvt.points.emplace_back(row.at("real").get<double>(), row.at("gvt").get<double>());
            }
            else if (kind == "state")
            {
                const unsigned dev = row.at("device");
                auto& p = predicted.try_emplace(dev, Series{"predicted d" + std::to_string(dev), {}})
                              .first->second;
                auto& a = actual.try_emplace(dev, Series{"actual d" + std::to_string(dev), {}})
                              .first->second;
                p.points.emplace_back(row.at("real").get<double>(), row.at("predicted").get<double>());
                a.points.emplace_back(row.at("real").get<double>(),
                                      static_cast<double>(row.at("actual").get<std::int64_t>()));
            }
            else if (kind == "error")
            {
                const unsigned dev = row.at("device");
                auto& e = error.try_emplace(dev, Series{"error d" + std::to_string(dev), {}})
                              .first->second;
                e.points.emplace_back(row.at("real").get<double>(), row.at("delta").get<double>());
            }
            else if (kind == "rollback")
            {
                const double real = row.at("real").get<double>();
                if (row.at("cause") == "causality")
                {
                    rb_causality.points.emplace_back(real, static_cast<double>(++n_causality));
                }
                else
                {
                    rb_verification.points.emplace_back(real, static_cast<double>(++n_verification));
                }
            }
        }

        std::vector<std::filesystem::path> files;
        const auto csv = [&](const std::string& stem, const std::string& header,
                             const std::vector<Series>& series)
        {
            const auto path = out_dir / (stem + ".csv");
            std::ofstream out(path);
            out << header << '\n';
            for (const auto& s : series)
            {
                for (const auto& [x, y] : s.points)
                {
                    out << s.name << ',' << x << ',' << y << '\n';
                }
            }
            files.push_back(path);
        };
        const auto svg = [&](const std::string& stem, const std::string& title,
                             const std::string& ylab, const std::vector<Series>& series)
        {
            const auto path = out_dir / (stem + ".svg");
            write_svg_chart(path, title, "real time", ylab, series);
            files.push_back(path);
        };

        svg("gvt", "Global Virtual Time vs real time", "GVT", {gvt});
        csv("gvt", "series,real,gvt", {gvt});

        std::vector<Series> state_series;
        for (auto& [dev, s] : predicted)
        {
            (void)dev;
            state_series.push_back(s);
        }
        for (auto& [dev, s] : actual)
        {
            (void)dev;
            state_series.push_back(s);
        }
        svg("state", "Predicted vs actual state", "counter", state_series);
        csv("state", "series,real,counter", state_series);

        std::vector<Series> error_series;
        for (auto& [dev, s] : error)
        {
            (void)dev;
            error_series.push_back(s);
        }
        svg("error", "Amount of error at verification", "predicted - actual", error_series);
        csv("error", "series,real,delta", error_series);

        svg("rollbacks", "Rollbacks by cause (cumulative)", "count",
            {rb_causality, rb_verification});
        csv("rollbacks", "series,real,cumulative", {rb_causality, rb_verification});

        return files;
    }
}
