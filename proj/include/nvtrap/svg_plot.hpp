#ifndef NVTRAP_SVG_PLOT_HPP
#define NVTRAP_SVG_PLOT_HPP

#include <string>
#include <vector>

namespace nvtrap::plot {

struct Series {
    std::vector<double> x;
    std::vector<double> y;
    std::string label;
    bool line = true;
    bool points = true;
};

struct Figure {
    std::string title;
    std::string x_label;
    std::string y_label;
    std::vector<Series> series;
    int width = 640;
    int height = 420;
};

// Static SVG: axes with ticks, one polyline and/or markers per series.
// Non-finite samples are skipped.
std::string render_svg(const Figure& f);

}  // namespace nvtrap::plot

#endif
