#include "vvmfg/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

#include "vvmfg/errors.hpp"

namespace vvmfg {

namespace {

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e",
                          "#8c564b", "#17becf", "#7f7f7f", "#bcbd22", "#e377c2"};

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

}  // namespace

void write_svg_plot(const std::string& path, const std::string& title, const std::string& x_label,
                    const std::string& y_label, const std::vector<SvgSeries>& series) {
    const double W = 800, H = 560;
    const double ml = 70, mr = 20, mt = 40, mb = 55;

    double x_lo = std::numeric_limits<double>::infinity(), x_hi = -x_lo;
    double y_lo = x_lo, y_hi = -x_lo;
    for (const auto& s : series) {
        for (double v : s.x) {
            x_lo = std::min(x_lo, v);
            x_hi = std::max(x_hi, v);
        }
        for (double v : s.y) {
            y_lo = std::min(y_lo, v);
            y_hi = std::max(y_hi, v);
        }
    }
    if (!(x_lo < x_hi)) {
        x_lo -= 0.5;
        x_hi += 0.5;
    }
    if (!(y_lo < y_hi)) {
        y_lo -= 0.5;
        y_hi += 0.5;
    }
    const double y_pad = 0.05 * (y_hi - y_lo);
    y_lo -= y_pad;
    y_hi += y_pad;

    auto px = [&](double x) { return ml + (x - x_lo) / (x_hi - x_lo) * (W - ml - mr); };
    auto py = [&](double y) { return H - mb - (y - y_lo) / (y_hi - y_lo) * (H - mt - mb); };

    std::ofstream out(path);
    if (!out) throw ConfigError("svg: cannot open '" + path + "' for writing");
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
        << "\" viewBox=\"0 0 " << W << " " << H << "\">\n";
    out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    out << "<text x=\"" << W / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"16\">" << title
        << "</text>\n";

    // axes
    out << "<line x1=\"" << ml << "\" y1=\"" << H - mb << "\" x2=\"" << W - mr << "\" y2=\""
        << H - mb << "\" stroke=\"black\"/>\n";
    out << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml << "\" y2=\"" << H - mb
        << "\" stroke=\"black\"/>\n";
    for (int k = 0; k <= 5; ++k) {
        const double fx = x_lo + k * (x_hi - x_lo) / 5;
        const double fy = y_lo + k * (y_hi - y_lo) / 5;
        out << "<line x1=\"" << px(fx) << "\" y1=\"" << H - mb << "\" x2=\"" << px(fx) << "\" y2=\""
            << H - mb + 5 << "\" stroke=\"black\"/>\n";
        out << "<text x=\"" << px(fx) << "\" y=\"" << H - mb + 20
            << "\" text-anchor=\"middle\" font-size=\"11\">" << num(fx) << "</text>\n";
        out << "<line x1=\"" << ml - 5 << "\" y1=\"" << py(fy) << "\" x2=\"" << ml << "\" y2=\""
            << py(fy) << "\" stroke=\"black\"/>\n";
        out << "<text x=\"" << ml - 8 << "\" y=\"" << py(fy) + 4
            << "\" text-anchor=\"end\" font-size=\"11\">" << num(fy) << "</text>\n";
    }
    out << "<text x=\"" << (ml + W - mr) / 2 << "\" y=\"" << H - 12
        << "\" text-anchor=\"middle\" font-size=\"13\">" << x_label << "</text>\n";
    out << "<text x=\"16\" y=\"" << (mt + H - mb) / 2
        << "\" text-anchor=\"middle\" font-size=\"13\" transform=\"rotate(-90 16 "
        << (mt + H - mb) / 2 << ")\">" << y_label << "</text>\n";

    for (std::size_t si = 0; si < series.size(); ++si) {
        const auto& s = series[si];
        const char* color = kPalette[si % (sizeof(kPalette) / sizeof(kPalette[0]))];
        if (s.scatter) {
            for (std::size_t i = 0; i < s.x.size(); ++i) {
                out << "<circle cx=\"" << px(s.x[i]) << "\" cy=\"" << py(s.y[i])
                    << "\" r=\"3.5\" fill=\"" << color << "\"/>\n";
            }
        } else {
            out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
            for (std::size_t i = 0; i < s.x.size(); ++i) {
                out << px(s.x[i]) << "," << py(s.y[i]) << " ";
            }
            out << "\"/>\n";
        }
        const double ly = mt + 16 * (si + 1);
        out << "<line x1=\"" << W - mr - 140 << "\" y1=\"" << ly << "\" x2=\"" << W - mr - 120
            << "\" y2=\"" << ly << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
        out << "<text x=\"" << W - mr - 114 << "\" y=\"" << ly + 4 << "\" font-size=\"11\">"
            << s.label << "</text>\n";
    }
    out << "</svg>\n";
}

}  // namespace vvmfg
