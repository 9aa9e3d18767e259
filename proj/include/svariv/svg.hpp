#pragma once

#include <string>
#include <vector>

namespace svariv::svg {

struct Line {
    std::string label;
    std::vector<double> x;
    std::vector<double> y;
    std::vector<double> lower;   // optional band; same length as x when present
    std::vector<double> upper;
};

struct Panel {
    std::string title;
    std::vector<Line> lines;
    bool zero_line = true;
};

// Self-contained SVG with the panels laid out on a grid. Non-finite points
// break the line.
std::string render(const std::vector<Panel>& panels, int columns = 3, const std::string& title = {});

}  // namespace svariv::svg
