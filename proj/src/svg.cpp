#include "svariv/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

namespace svariv::svg {

namespace {

constexpr int kPanelW = 300;
constexpr int kPanelH = 200;
constexpr int kMargin = 36;
constexpr const char* kColors[] = {"#1f4e9c", "#b3261e", "#2e7d32", "#6a1b9a", "#ef6c00"};

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

std::string escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '&': out += "&amp;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

struct Range {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    void add(double v) {
        if (!std::isfinite(v)) return;
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    void finish() {
        if (!std::isfinite(lo)) lo = hi = 0.0;
        if (hi - lo < 1e-12) {
            lo -= 1.0;
            hi += 1.0;
        }
        const double pad = 0.05 * (hi - lo);
        lo -= pad;
        hi += pad;
    }
};

void draw_panel(std::ostringstream& out, const Panel& panel, double ox, double oy) {
    Range xr;
    Range yr;
    for (const auto& line : panel.lines) {
        for (double v : line.x) xr.add(v);
        for (double v : line.y) yr.add(v);
        for (double v : line.lower) yr.add(v);
        for (double v : line.upper) yr.add(v);
    }
    if (panel.zero_line) yr.add(0.0);
    xr.finish();
    yr.finish();
    const double w = kPanelW - 2 * kMargin;
    const double h = kPanelH - 2 * kMargin;
    auto px = [&](double x) { return ox + kMargin + (x - xr.lo) / (xr.hi - xr.lo) * w; };
    auto py = [&](double y) { return oy + kMargin + (yr.hi - y) / (yr.hi - yr.lo) * h; };

    out << "<rect x=\"" << num(ox + kMargin) << "\" y=\"" << num(oy + kMargin) << "\" width=\"" << num(w)
        << "\" height=\"" << num(h) << "\" fill=\"none\" stroke=\"#888\"/>\n";
    out << "<text x=\"" << num(ox + kPanelW / 2.0) << "\" y=\"" << num(oy + kMargin - 10)
        << "\" text-anchor=\"middle\" font-size=\"12\">" << escape(panel.title) << "</text>\n";
    for (double tick : {yr.lo, (yr.lo + yr.hi) / 2, yr.hi})
        out << "<text x=\"" << num(ox + kMargin - 4) << "\" y=\"" << num(py(tick) + 3)
            << "\" text-anchor=\"end\" font-size=\"9\">" << num(tick) << "</text>\n";
    for (double tick : {xr.lo, xr.hi})
        out << "<text x=\"" << num(px(tick)) << "\" y=\"" << num(oy + kPanelH - kMargin + 12)
            << "\" text-anchor=\"middle\" font-size=\"9\">" << num(tick) << "</text>\n";
    if (panel.zero_line && yr.lo < 0.0 && yr.hi > 0.0)
        out << "<line x1=\"" << num(px(xr.lo)) << "\" x2=\"" << num(px(xr.hi)) << "\" y1=\"" << num(py(0.0))
            << "\" y2=\"" << num(py(0.0)) << "\" stroke=\"#bbb\" stroke-dasharray=\"3,3\"/>\n";

    for (std::size_t li = 0; li < panel.lines.size(); ++li) {
        const auto& line = panel.lines[li];
        const char* color = kColors[li % std::size(kColors)];
        const std::size_t n = line.x.size();
        if (line.lower.size() == n && line.upper.size() == n) {
            std::string top;
            std::string bottom;
            for (std::size_t i = 0; i < n; ++i) {
                if (!std::isfinite(line.lower[i]) || !std::isfinite(line.upper[i])) continue;
                top += num(px(line.x[i])) + "," + num(py(line.upper[i])) + " ";
            }
            for (std::size_t i = n; i-- > 0;) {
                if (!std::isfinite(line.lower[i]) || !std::isfinite(line.upper[i])) continue;
                bottom += num(px(line.x[i])) + "," + num(py(line.lower[i])) + " ";
            }
            if (!top.empty())
                out << "<polygon points=\"" << top << bottom << "\" fill=\"" << color
                    << "\" fill-opacity=\"0.18\" stroke=\"none\"/>\n";
        }
        std::string path;
        bool pen = false;
        for (std::size_t i = 0; i < n && i < line.y.size(); ++i) {
            if (!std::isfinite(line.y[i]) || !std::isfinite(line.x[i])) {
                pen = false;
                continue;
            }
            path += (pen ? "L" : "M") + num(px(line.x[i])) + " " + num(py(line.y[i])) + " ";
            pen = true;
        }
        if (!path.empty())
            out << "<path d=\"" << path << "\" fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.6\"/>\n";
        if (!line.label.empty())
            out << "<text x=\"" << num(ox + kMargin + 4) << "\" y=\"" << num(oy + kMargin + 12 + 11 * li)
                << "\" font-size=\"9\" fill=\"" << color << "\">" << escape(line.label) << "</text>\n";
    }
}

}  // namespace

std::string render(const std::vector<Panel>& panels, int columns, const std::string& title) {
    columns = std::max(1, std::min<int>(columns, static_cast<int>(std::max<std::size_t>(panels.size(), 1))));
    const int rows = (static_cast<int>(panels.size()) + columns - 1) / columns;
    const int header = title.empty() ? 0 : 24;
    const int width = columns * kPanelW;
    const int height = header + std::max(rows, 1) * kPanelH;

    std::ostringstream out;
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
        << "\" viewBox=\"0 0 " << width << ' ' << height << "\" font-family=\"sans-serif\">\n";
    out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    if (!title.empty())
        out << "<text x=\"" << width / 2 << "\" y=\"17\" text-anchor=\"middle\" font-size=\"14\">" << escape(title)
            << "</text>\n";
    for (std::size_t i = 0; i < panels.size(); ++i)
        draw_panel(out, panels[i], static_cast<double>(i % columns) * kPanelW,
                   header + static_cast<double>(i / columns) * kPanelH);
    out << "</svg>\n";
    return out.str();
}

}  // namespace svariv::svg
