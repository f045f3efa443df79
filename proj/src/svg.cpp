#include "ald/svg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <cstdio>
#include <iterator>

namespace ald {

namespace {

constexpr double kWidth = 720, kHeight = 450;
constexpr double kLeft = 80, kRight = 170, kTop = 40, kBottom = 60;
constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

std::string escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return buf;
}

std::string tick_label(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.3g", v);
    return buf;
}

bool usable(double y, bool log_y) { return std::isfinite(y) && (!log_y || y > 0.0); }

}  // namespace

std::string render_svg(const LineChart& chart) {
    double x_lo = std::numeric_limits<double>::infinity(), x_hi = -x_lo;
    double y_lo = x_lo, y_hi = -x_lo;
    auto ty = [&](double y) { return chart.log_y ? std::log10(y) : y; };
    for (const auto& s : chart.series)
        for (std::size_t a = 0; a < std::min(s.x.size(), s.y.size()); ++a) {
            if (!std::isfinite(s.x[a]) || !usable(s.y[a], chart.log_y)) continue;
            x_lo = std::min(x_lo, s.x[a]);
            x_hi = std::max(x_hi, s.x[a]);
            y_lo = std::min(y_lo, ty(s.y[a]));
            y_hi = std::max(y_hi, ty(s.y[a]));
        }
    for (double g : chart.guides)
        if (usable(g, chart.log_y)) {
            y_lo = std::min(y_lo, ty(g));
            y_hi = std::max(y_hi, ty(g));
        }
    if (!(x_lo <= x_hi)) x_lo = 0, x_hi = 1;
    if (!(y_lo <= y_hi)) y_lo = 0, y_hi = 1;
    if (x_hi == x_lo) x_lo -= 0.5, x_hi += 0.5;
    if (y_hi == y_lo) y_lo -= 0.5, y_hi += 0.5;
    if (chart.log_y) {
        y_lo = std::floor(y_lo);
        y_hi = std::ceil(y_hi);
    } else {
        const double pad = 0.05 * (y_hi - y_lo);
        y_lo -= pad;
        y_hi += pad;
    }

    const double pw = kWidth - kLeft - kRight, ph = kHeight - kTop - kBottom;
    auto px = [&](double x) { return kLeft + (x - x_lo) / (x_hi - x_lo) * pw; };
    auto py = [&](double v) { return kTop + (1.0 - (v - y_lo) / (y_hi - y_lo)) * ph; };

    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
       << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    os << "<text x=\"" << num(kLeft + pw / 2) << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">"
       << escape(chart.title) << "</text>\n";
    os << "<rect x=\"" << kLeft << "\" y=\"" << kTop << "\" width=\"" << num(pw) << "\" height=\"" << num(ph)
       << "\" fill=\"none\" stroke=\"black\"/>\n";

    // x ticks
    for (int t = 0; t <= 5; ++t) {
        const double x = x_lo + (x_hi - x_lo) * t / 5.0;
        os << "<line x1=\"" << num(px(x)) << "\" y1=\"" << num(kTop + ph) << "\" x2=\"" << num(px(x))
           << "\" y2=\"" << num(kTop + ph + 5) << "\" stroke=\"black\"/>\n"
           << "<text x=\"" << num(px(x)) << "\" y=\"" << num(kTop + ph + 18) << "\" text-anchor=\"middle\">"
           << tick_label(x) << "</text>\n";
    }
    // y ticks: decades on a log axis
    std::vector<double> yt;
    if (chart.log_y) {
        const double step = std::max(1.0, std::ceil((y_hi - y_lo) / 10.0));
        for (double e = y_lo; e <= y_hi + 1e-9; e += step) yt.push_back(e);
    } else {
        for (int t = 0; t <= 5; ++t) yt.push_back(y_lo + (y_hi - y_lo) * t / 5.0);
    }
    for (double v : yt) {
        const std::string label = chart.log_y ? "1e" + std::to_string(static_cast<int>(std::lround(v)))
                                              : tick_label(v);
        os << "<line x1=\"" << num(kLeft - 5) << "\" y1=\"" << num(py(v)) << "\" x2=\"" << num(kLeft + pw)
           << "\" y2=\"" << num(py(v)) << "\" stroke=\"#ddd\"/>\n"
           << "<text x=\"" << num(kLeft - 8) << "\" y=\"" << num(py(v) + 4) << "\" text-anchor=\"end\">" << label
           << "</text>\n";
    }
    os << "<text x=\"" << num(kLeft + pw / 2) << "\" y=\"" << num(kHeight - 15)
       << "\" text-anchor=\"middle\">" << escape(chart.x_label) << "</text>\n";
    os << "<text transform=\"translate(18," << num(kTop + ph / 2) << ") rotate(-90)\" text-anchor=\"middle\">"
       << escape(chart.y_label) << (chart.log_y ? " (log scale)" : "") << "</text>\n";

    for (double g : chart.guides) {
        if (!usable(g, chart.log_y)) continue;
        os << "<line x1=\"" << kLeft << "\" y1=\"" << num(py(ty(g))) << "\" x2=\"" << num(kLeft + pw) << "\" y2=\""
           << num(py(ty(g))) << "\" stroke=\"gray\" stroke-dasharray=\"4 3\"/>\n";
    }

    for (std::size_t si = 0; si < chart.series.size(); ++si) {
        const auto& s = chart.series[si];
        const char* colour = kPalette[si % std::size(kPalette)];
        std::string pts;
        auto flush = [&] {
            if (!pts.empty())
                os << "<polyline fill=\"none\" stroke=\"" << colour << "\" stroke-width=\"1.8\" points=\"" << pts
                   << "\"/>\n";
            pts.clear();
        };
        for (std::size_t a = 0; a < std::min(s.x.size(), s.y.size()); ++a) {
            if (!std::isfinite(s.x[a]) || !usable(s.y[a], chart.log_y)) {
                flush();
                continue;
            }
            const double X = px(s.x[a]), Y = py(ty(s.y[a]));
            pts += num(X) + "," + num(Y) + " ";
            os << "<circle cx=\"" << num(X) << "\" cy=\"" << num(Y) << "\" r=\"2.5\" fill=\"" << colour << "\"/>\n";
        }
        flush();
        const double ly = kTop + 10 + 20.0 * static_cast<double>(si);
        os << "<line x1=\"" << num(kLeft + pw + 15) << "\" y1=\"" << num(ly) << "\" x2=\"" << num(kLeft + pw + 40)
           << "\" y2=\"" << num(ly) << "\" stroke=\"" << colour << "\" stroke-width=\"2\"/>\n"
           << "<text x=\"" << num(kLeft + pw + 46) << "\" y=\"" << num(ly + 4) << "\">" << escape(s.label)
           << "</text>\n";
    }
    os << "</svg>\n";
    return os.str();
}

}  // namespace ald
