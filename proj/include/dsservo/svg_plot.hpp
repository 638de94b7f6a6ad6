#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "dsservo/errors.hpp"
#include "dsservo/servo.hpp"

namespace dsservo::cli {

enum class PlotKind { head_position, theta_convergence, d_vs_dhat };

namespace detail {

struct Curve {
    std::string label;
    std::vector<double> y;
};

constexpr int kWidth = 900;
constexpr int kHeight = 540;
constexpr int kLeft = 80, kRight = 160, kTop = 40, kBottom = 60;

inline std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

inline void render_svg(std::ofstream& out, const std::string& title,
                       const std::vector<double>& t, const std::vector<detail::Curve>& curves,
                       const std::string& x_label, const std::string& y_label) {
    static const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                    "#ff7f0e", "#8c564b", "#17becf", "#e377c2"};
    double ymin = 0.0, ymax = 0.0;
    bool first = true;
    for (const auto& c : curves)
        for (double v : c.y) {
            ymin = first ? v : std::min(ymin, v);
            ymax = first ? v : std::max(ymax, v);
            first = false;
        }
    if (ymin == ymax) {
        ymin -= 1.0;
        ymax += 1.0;
    }
    const double pad = 0.05 * (ymax - ymin);
    ymin -= pad;
    ymax += pad;
    const double xmin = t.front(), xmax = t.back() == t.front() ? t.front() + 1.0 : t.back();

    const int pw = kWidth - kLeft - kRight, ph = kHeight - kTop - kBottom;
    auto mx = [&](double x) { return kLeft + (x - xmin) / (xmax - xmin) * pw; };
    auto my = [&](double y) { return kTop + ph - (y - ymin) / (ymax - ymin) * ph; };

    out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
        << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\""
        << kHeight << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight << "\">\n"
        << "<rect width=\"" << kWidth << "\" height=\"" << kHeight << "\" fill=\"white\"/>\n"
        << "<style>text{font-family:sans-serif;font-size:12px}.t{font-size:15px;font-weight:bold}"
           ".g{stroke:#ddd;stroke-width:1}.a{stroke:#000;stroke-width:1}</style>\n";
    out << "<text class=\"t\" x=\"" << kWidth / 2 << "\" y=\"22\" text-anchor=\"middle\">"
        << title << "</text>\n";

    for (int i = 0; i <= 8; ++i) {
        const double x = xmin + (xmax - xmin) * i / 8.0;
        out << "<line class=\"g\" x1=\"" << mx(x) << "\" y1=\"" << kTop << "\" x2=\"" << mx(x)
            << "\" y2=\"" << kTop + ph << "\"/>\n";
        out << "<text x=\"" << mx(x) << "\" y=\"" << kTop + ph + 18
            << "\" text-anchor=\"middle\">" << num(x) << "</text>\n";
    }
    for (int i = 0; i <= 6; ++i) {
        const double y = ymin + (ymax - ymin) * i / 6.0;
        out << "<line class=\"g\" x1=\"" << kLeft << "\" y1=\"" << my(y) << "\" x2=\""
            << kLeft + pw << "\" y2=\"" << my(y) << "\"/>\n";
        out << "<text x=\"" << kLeft - 8 << "\" y=\"" << my(y) + 4
            << "\" text-anchor=\"end\">" << num(y) << "</text>\n";
    }
    out << "<rect x=\"" << kLeft << "\" y=\"" << kTop << "\" width=\"" << pw << "\" height=\""
        << ph << "\" fill=\"none\" class=\"a\"/>\n";
    out << "<text x=\"" << kLeft + pw / 2 << "\" y=\"" << kHeight - 16
        << "\" text-anchor=\"middle\">" << x_label << "</text>\n";
    out << "<text x=\"20\" y=\"" << kTop + ph / 2 << "\" text-anchor=\"middle\" transform=\""
        << "rotate(-90 20 " << kTop + ph / 2 << ")\">" << y_label << "</text>\n";

    for (std::size_t ci = 0; ci < curves.size(); ++ci) {
        const char* color = kColors[ci % 8];
        out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.2\" points=\"";
        for (std::size_t i = 0; i < t.size(); ++i) {
            if (i) out << ' ';
            out << num(mx(t[i])) << ',' << num(my(curves[ci].y[i]));
        }
        out << "\"/>\n";
        const int ly = kTop + 14 + static_cast<int>(ci) * 18;
        out << "<line x1=\"" << kLeft + pw + 10 << "\" y1=\"" << ly << "\" x2=\""
            << kLeft + pw + 34 << "\" y2=\"" << ly << "\" stroke=\"" << color
            << "\" stroke-width=\"2\"/>\n";
        out << "<text x=\"" << kLeft + pw + 40 << "\" y=\"" << ly + 4 << "\">"
            << curves[ci].label << "</text>\n";
    }
    out << "</svg>\n";
}

}  // namespace detail

/// Self-contained SVG line plot of the selected trace columns against time.
inline void emit_plot(const servo::SimulationTrace& trace, const std::string& path,
                      PlotKind kind) {
    if (trace.records.empty()) throw std::invalid_argument("cannot plot an empty trace");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + path);

    const std::vector<double> t = trace.column_t();
    std::vector<detail::Curve> curves;
    std::string title, y_label = "position (µm)";
    switch (kind) {
        case PlotKind::head_position:
            title = "head position";
            curves.push_back({"y", trace.column_y()});
            break;
        case PlotKind::d_vs_dhat:
            title = "disturbance vs model prediction";
            curves.push_back({"d", trace.column_d()});
            curves.push_back({"d_hat", trace.column_d_hat()});
            break;
        case PlotKind::theta_convergence: {
            title = "parameter convergence";
            y_label = "parameter value";
            for (int i = 0; i < trace.theta_dim; ++i) {
                detail::Curve c;
                c.label = "theta_" + std::to_string(i + 1);
                c.y.reserve(trace.records.size());
                for (const auto& rec : trace.records)
                    c.y.push_back(rec.theta[static_cast<std::size_t>(i)]);
                curves.push_back(std::move(c));
            }
            break;
        }
    }
    detail::render_svg(out, title, t, curves, "t (s)", y_label);
    if (!out) throw IoError("write failed: " + path);
}

}  // namespace dsservo::cli
