#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "kviff/harness.hpp"

namespace kviff::harness {

namespace {

constexpr double kWidth = 800.0;
constexpr double kHeight = 500.0;
constexpr double kLeft = 70.0;
constexpr double kRight = 170.0;
constexpr double kTop = 40.0;
constexpr double kBottom = 50.0;

constexpr std::array<const char*, 8> kPalette = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                                 "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

std::string tick(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", v);
    return buf;
}

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

struct Range {
    double lo, hi;
};

Range padded_range(double lo, double hi) {
    if (!(hi > lo)) {
        const double pad = std::max(1.0, std::abs(lo)) * 0.5;
        return {lo - pad, hi + pad};
    }
    return {lo, hi};
}

}  // namespace

std::string render_svg_plot(const std::vector<PlotSeries>& series, const PlotLabels& labels) {
    require(!series.empty(), "write_svg_plot: no series");
    const auto len = series.front().y.size();
    require(len > 0, "write_svg_plot: empty series");
    double xlo = INFINITY, xhi = -INFINITY, ylo = INFINITY, yhi = -INFINITY;
    for (const auto& s : series) {
        require(s.y.size() == len && s.x.size() == len, "write_svg_plot: series must have equal length");
        for (std::size_t i = 0; i < len; ++i) {
            if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
            xlo = std::min(xlo, s.x[i]);
            xhi = std::max(xhi, s.x[i]);
            ylo = std::min(ylo, s.y[i]);
            yhi = std::max(yhi, s.y[i]);
        }
    }
    if (!std::isfinite(xlo)) xlo = xhi = ylo = yhi = 0.0;
    const Range xr = padded_range(xlo, xhi);
    const Range yr = padded_range(ylo, yhi);
    const double pw = kWidth - kLeft - kRight;
    const double ph = kHeight - kTop - kBottom;
    auto px = [&](double x) { return kLeft + (x - xr.lo) / (xr.hi - xr.lo) * pw; };
    auto py = [&](double y) { return kTop + ph - (y - yr.lo) / (yr.hi - yr.lo) * ph; };

    std::ostringstream o;
    o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
      << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    if (!labels.title.empty())
        o << "<text x=\"" << fmt(kLeft + pw / 2) << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">"
          << escape(labels.title) << "</text>\n";
    o << "<g class=\"axes\" stroke=\"black\" fill=\"none\">\n";
    o << "<line x1=\"" << fmt(kLeft) << "\" y1=\"" << fmt(kTop + ph) << "\" x2=\"" << fmt(kLeft + pw) << "\" y2=\""
      << fmt(kTop + ph) << "\"/>\n";
    o << "<line x1=\"" << fmt(kLeft) << "\" y1=\"" << fmt(kTop) << "\" x2=\"" << fmt(kLeft) << "\" y2=\""
      << fmt(kTop + ph) << "\"/>\n";
    o << "</g>\n<g class=\"ticks\">\n";
    for (int i = 0; i <= 5; ++i) {
        const double fx = xr.lo + (xr.hi - xr.lo) * i / 5.0;
        const double fy = yr.lo + (yr.hi - yr.lo) * i / 5.0;
        o << "<line x1=\"" << fmt(px(fx)) << "\" y1=\"" << fmt(kTop + ph) << "\" x2=\"" << fmt(px(fx)) << "\" y2=\""
          << fmt(kTop + ph + 5) << "\" stroke=\"black\"/>";
        o << "<text x=\"" << fmt(px(fx)) << "\" y=\"" << fmt(kTop + ph + 18) << "\" text-anchor=\"middle\">"
          << tick(fx) << "</text>\n";
        o << "<line x1=\"" << fmt(kLeft - 5) << "\" y1=\"" << fmt(py(fy)) << "\" x2=\"" << fmt(kLeft) << "\" y2=\""
          << fmt(py(fy)) << "\" stroke=\"black\"/>";
        o << "<text x=\"" << fmt(kLeft - 8) << "\" y=\"" << fmt(py(fy) + 4) << "\" text-anchor=\"end\">" << tick(fy)
          << "</text>\n";
    }
    o << "</g>\n";
    if (!labels.x_label.empty())
        o << "<text x=\"" << fmt(kLeft + pw / 2) << "\" y=\"" << fmt(kHeight - 10) << "\" text-anchor=\"middle\">"
          << escape(labels.x_label) << "</text>\n";
    if (!labels.y_label.empty())
        o << "<text x=\"16\" y=\"" << fmt(kTop + ph / 2) << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
          << fmt(kTop + ph / 2) << ")\">" << escape(labels.y_label) << "</text>\n";

    for (std::size_t s = 0; s < series.size(); ++s) {
        const char* color = kPalette[s % kPalette.size()];
        o << "<polyline class=\"series\" fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
        bool first = true;
        for (std::size_t i = 0; i < len; ++i) {
            if (!std::isfinite(series[s].x[i]) || !std::isfinite(series[s].y[i])) continue;
            if (!first) o << ' ';
            first = false;
            o << fmt(px(series[s].x[i])) << ',' << fmt(py(series[s].y[i]));
        }
        o << "\"/>\n";
    }
    o << "<g class=\"legend\">\n";
    for (std::size_t s = 0; s < series.size(); ++s) {
        const double y = kTop + 10 + 18.0 * static_cast<double>(s);
        const double x = kWidth - kRight + 15;
        o << "<line x1=\"" << fmt(x) << "\" y1=\"" << fmt(y) << "\" x2=\"" << fmt(x + 25) << "\" y2=\"" << fmt(y)
          << "\" stroke=\"" << kPalette[s % kPalette.size()] << "\" stroke-width=\"2\"/>";
        o << "<text x=\"" << fmt(x + 32) << "\" y=\"" << fmt(y + 4) << "\">" << escape(series[s].name) << "</text>\n";
    }
    o << "</g>\n</svg>\n";
    return o.str();
}

void write_svg_plot(const std::vector<PlotSeries>& series, const std::filesystem::path& path,
                    const PlotLabels& labels) {
    const std::string svg = render_svg_plot(series, labels);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
    out << svg;
    if (!out) throw std::runtime_error("write to '" + path.string() + "' failed");
}

}  // namespace kviff::harness
