#include "mtr/harness/svg.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "mtr/util/error.hpp"
#include "mtr/util/io.hpp"

namespace mtr {

namespace {

constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                    "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"};
constexpr size_t kPaletteSize = sizeof(kPalette) / sizeof(kPalette[0]);

std::string esc(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            default: out += c;
        }
    }
    return out;
}

std::string px(double v) { return format_fixed(v, 2); }

/// Expands [lo, hi] by 5% headroom on each side; degenerate ranges get a unit.
void pad_range(double& lo, double& hi) {
    if (hi < lo) std::swap(lo, hi);
    double span = hi - lo;
    if (span <= 0.0) {
        lo -= 0.5;
        hi += 0.5;
    } else {
        lo -= 0.05 * span;
        hi += 0.05 * span;
    }
}

void open_svg(std::ostringstream& s, const ChartGeometry& g, const std::string& title) {
    s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << px(g.width)
      << "\" height=\"" << px(g.height) << "\" viewBox=\"0 0 " << px(g.width) << ' '
      << px(g.height) << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
    s << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    s << "<text x=\"" << px(g.width / 2) << "\" y=\"18\" text-anchor=\"middle\""
      << " font-size=\"14\">" << esc(title) << "</text>\n";
}

void axes(std::ostringstream& s, const ChartGeometry& g, const std::string& x_label,
          const std::string& y_label, bool x_ticks) {
    double x0 = g.left, x1 = g.width - g.right;
    double y0 = g.top, y1 = g.height - g.bottom;
    s << "<line x1=\"" << px(x0) << "\" y1=\"" << px(y1) << "\" x2=\"" << px(x1)
      << "\" y2=\"" << px(y1) << "\" stroke=\"black\"/>\n";
    s << "<line x1=\"" << px(x0) << "\" y1=\"" << px(y0) << "\" x2=\"" << px(x0)
      << "\" y2=\"" << px(y1) << "\" stroke=\"black\"/>\n";
    for (int i = 0; i <= 4; ++i) {
        double f = i / 4.0;
        double yv = g.y_min + f * (g.y_max - g.y_min);
        double yp = g.y_of(yv);
        s << "<line x1=\"" << px(x0 - 4) << "\" y1=\"" << px(yp) << "\" x2=\"" << px(x0)
          << "\" y2=\"" << px(yp) << "\" stroke=\"black\"/>\n";
        s << "<text x=\"" << px(x0 - 7) << "\" y=\"" << px(yp + 4)
          << "\" text-anchor=\"end\">" << format_fixed(yv, 1) << "</text>\n";
        if (x_ticks) {
            double xv = g.x_min + f * (g.x_max - g.x_min);
            double xp = g.x_of(xv);
            s << "<line x1=\"" << px(xp) << "\" y1=\"" << px(y1) << "\" x2=\"" << px(xp)
              << "\" y2=\"" << px(y1 + 4) << "\" stroke=\"black\"/>\n";
            s << "<text x=\"" << px(xp) << "\" y=\"" << px(y1 + 16)
              << "\" text-anchor=\"middle\">" << format_fixed(xv, 2) << "</text>\n";
        }
    }
    s << "<text x=\"" << px((x0 + x1) / 2) << "\" y=\"" << px(g.height - 8)
      << "\" text-anchor=\"middle\">" << esc(x_label) << "</text>\n";
    s << "<text x=\"14\" y=\"" << px((y0 + y1) / 2) << "\" text-anchor=\"middle\""
      << " transform=\"rotate(-90 14 " << px((y0 + y1) / 2) << ")\">" << esc(y_label)
      << "</text>\n";
}

void legend_entry(std::ostringstream& s, const ChartGeometry& g, size_t slot,
                  const std::string& color, const std::string& label, bool dashed) {
    double x = g.width - g.right - 150;
    double y = g.top + 8 + 14 * static_cast<double>(slot);
    s << "<line x1=\"" << px(x) << "\" y1=\"" << px(y - 3) << "\" x2=\"" << px(x + 22)
      << "\" y2=\"" << px(y - 3) << "\" stroke=\"" << color << "\" stroke-width=\"2\"";
    if (dashed) s << " stroke-dasharray=\"5 3\"";
    s << "/>\n<text x=\"" << px(x + 27) << "\" y=\"" << px(y) << "\">" << esc(label)
      << "</text>\n";
}

}  // namespace

Chart line_chart(const std::string& title, const std::string& x_label,
                 const std::string& y_label, const std::vector<Series>& series,
                 const std::vector<FitLine>& fits) {
    if (series.empty()) throw Error("line chart needs at least one series");
    ChartGeometry g;
    bool first = true;
    for (const Series& sr : series) {
        if (sr.points.empty()) throw Error("line chart series '" + sr.label + "' is empty");
        for (auto [x, y] : sr.points) {
            if (first) {
                g.x_min = g.x_max = x;
                g.y_min = g.y_max = y;
                first = false;
            }
            g.x_min = std::min(g.x_min, x);
            g.x_max = std::max(g.x_max, x);
            g.y_min = std::min(g.y_min, y);
            g.y_max = std::max(g.y_max, y);
        }
    }
    if (g.x_max == g.x_min) {
        g.x_min -= 0.5;  // a single x value still renders, without a fit
        g.x_max += 0.5;
    }
    for (const FitLine& f : fits) {
        g.y_min = std::min(g.y_min, std::min(f.alpha + f.beta * g.x_min,
                                             f.alpha + f.beta * g.x_max));
        g.y_max = std::max(g.y_max, std::max(f.alpha + f.beta * g.x_min,
                                             f.alpha + f.beta * g.x_max));
    }
    pad_range(g.y_min, g.y_max);

    std::ostringstream s;
    open_svg(s, g, title);
    axes(s, g, x_label, y_label, true);
    size_t slot = 0;
    for (size_t i = 0; i < series.size(); ++i) {
        const std::string color = kPalette[i % kPaletteSize];
        s << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
        for (size_t p = 0; p < series[i].points.size(); ++p) {
            if (p) s << ' ';
            s << px(g.x_of(series[i].points[p].first)) << ','
              << px(g.y_of(series[i].points[p].second));
        }
        s << "\"/>\n";
        for (auto [x, y] : series[i].points) {
            s << "<circle cx=\"" << px(g.x_of(x)) << "\" cy=\"" << px(g.y_of(y))
              << "\" r=\"3\" fill=\"" << color << "\"/>\n";
        }
        legend_entry(s, g, slot++, color, series[i].label, false);
    }
    for (size_t i = 0; i < fits.size(); ++i) {
        const std::string color = kPalette[i % kPaletteSize];
        double ylo = fits[i].alpha + fits[i].beta * g.x_min;
        double yhi = fits[i].alpha + fits[i].beta * g.x_max;
        s << "<line class=\"fit\" x1=\"" << px(g.x_of(g.x_min)) << "\" y1=\""
          << px(g.y_of(ylo)) << "\" x2=\"" << px(g.x_of(g.x_max)) << "\" y2=\""
          << px(g.y_of(yhi)) << "\" stroke=\"" << color
          << "\" stroke-width=\"1.5\" stroke-dasharray=\"5 3\"/>\n";
        legend_entry(s, g, slot++, color, fits[i].label, true);
    }
    s << "</svg>\n";
    return {s.str(), g};
}

namespace {

Chart bars(const std::string& title, const std::string& y_label,
           const std::vector<std::string>& categories, const std::vector<std::string>& groups,
           const std::vector<std::vector<double>>& values, bool grouped) {
    if (categories.empty()) throw Error("bar chart needs at least one category");
    ChartGeometry g;
    g.x_min = 0.0;
    g.x_max = static_cast<double>(categories.size());
    bool first = true;
    for (const auto& row : values) {
        if (row.size() != groups.size()) throw Error("bar chart value row width mismatch");
        for (double v : row) {
            if (first) {
                g.y_min = g.y_max = v;
                first = false;
            }
            g.y_min = std::min(g.y_min, v);
            g.y_max = std::max(g.y_max, v);
        }
    }
    if (first) throw Error("bar chart needs values");
    g.y_min = std::min(g.y_min, 0.0);  // bars grow from zero
    g.y_max = std::max(g.y_max, 0.0);
    pad_range(g.y_min, g.y_max);

    std::ostringstream s;
    open_svg(s, g, title);
    axes(s, g, "", y_label, false);
    double base = g.y_of(0.0);
    double slot_w = g.plot_w() / static_cast<double>(categories.size());
    double band = slot_w * 0.8;
    double bar_w = band / static_cast<double>(groups.size());
    for (size_t c = 0; c < categories.size(); ++c) {
        double x0 = g.left + slot_w * static_cast<double>(c) + slot_w * 0.1;
        for (size_t b = 0; b < groups.size(); ++b) {
            double v = values[c][b];
            double y = g.y_of(v);
            double top = std::min(y, base);
            double h = std::fabs(y - base);
            s << "<rect x=\"" << px(x0 + bar_w * static_cast<double>(b)) << "\" y=\""
              << px(top) << "\" width=\"" << px(bar_w * 0.92) << "\" height=\"" << px(h)
              << "\" fill=\"" << kPalette[b % kPaletteSize] << "\"/>\n";
        }
        s << "<text x=\"" << px(x0 + band / 2) << "\" y=\""
          << px(g.height - g.bottom + 16) << "\" text-anchor=\"middle\">"
          << esc(categories[c]) << "</text>\n";
    }
    if (grouped) {
        for (size_t b = 0; b < groups.size(); ++b) {
            legend_entry(s, g, b, kPalette[b % kPaletteSize], groups[b], false);
        }
    }
    s << "</svg>\n";
    return {s.str(), g};
}

}  // namespace

Chart bar_chart(const std::string& title, const std::string& y_label,
                const std::vector<std::string>& labels, const std::vector<double>& values) {
    if (labels.size() != values.size()) throw Error("bar chart label/value count mismatch");
    std::vector<std::vector<double>> rows;
    rows.reserve(values.size());
    for (double v : values) rows.push_back({v});
    return bars(title, y_label, labels, {""}, rows, false);
}

Chart grouped_bar_chart(const std::string& title, const std::string& y_label,
                        const std::vector<std::string>& categories,
                        const std::vector<std::string>& groups,
                        const std::vector<std::vector<double>>& values) {
    if (categories.size() != values.size()) throw Error("bar chart category/value count mismatch");
    if (groups.empty()) throw Error("grouped bar chart needs groups");
    return bars(title, y_label, categories, groups, values, true);
}

}  // namespace mtr
