#ifndef VVMFG_SVG_HPP
#define VVMFG_SVG_HPP

#include <string>
#include <vector>

namespace vvmfg {

struct SvgSeries {
    std::string label;
    std::vector<double> x;
    std::vector<double> y;
    bool scatter = false;  // circles instead of a polyline
};

// Minimal self-contained line/scatter plot: axes, ticks, legend, polylines.
// No external renderer; the output is a plain SVG file.
void write_svg_plot(const std::string& path, const std::string& title, const std::string& x_label,
                    const std::string& y_label, const std::vector<SvgSeries>& series);

}  // namespace vvmfg

#endif
