#ifndef AID_SVG_PLOT_HPP
#define AID_SVG_PLOT_HPP

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "aid/csv.hpp"

namespace aid {

struct FrontierPoint {
    std::string method;
    int nfe = 0;
    double psnr = 0.0;
};

// Pixel mapping of the frontier panel. The same affine transform is
// embedded as a comment in the emitted file so a reader can invert it.
struct PlotTransform {
    double x0 = 60.0, y0 = 420.0;  // pixel origin of the data axes
    double sx = 1.0, sy = 1.0;     // pixels per data unit
    double xmin = 0.0, ymin = 0.0; // data values at the origin

    double px(double nfe) const { return x0 + (nfe - xmin) * sx; }
    double py(double psnr) const { return y0 - (psnr - ymin) * sy; }
    double data_x(double p) const { return xmin + (p - x0) / sx; }
    double data_y(double p) const { return ymin + (y0 - p) / sy; }
};

// Self-contained vector-graphics frontier: one marker per (method, NFE)
// with an embedded numeric label. Pure file output.
inline void write_frontier_svg(const std::string& path, const std::vector<FrontierPoint>& points) {
    const double width = 640.0, height = 480.0;
    PlotTransform tr;
    double xmin = 0.0, xmax = 1.0, ymin = 0.0, ymax = 1.0;
    if (!points.empty()) {
        xmin = 1e300; xmax = -1e300; ymin = 1e300; ymax = -1e300;
        for (const FrontierPoint& p : points) {
            xmin = std::min(xmin, static_cast<double>(p.nfe));
            xmax = std::max(xmax, static_cast<double>(p.nfe));
            ymin = std::min(ymin, p.psnr);
            ymax = std::max(ymax, p.psnr);
        }
        double xpad = std::max(1.0, 0.1 * (xmax - xmin));
        double ypad = std::max(0.5, 0.1 * (ymax - ymin));
        xmin -= xpad; xmax += xpad;
        ymin -= ypad; ymax += ypad;
    }
    tr.xmin = xmin;
    tr.ymin = ymin;
    tr.sx = (width - 2.0 * tr.x0) / (xmax - xmin);
    tr.sy = (tr.y0 - 60.0) / (ymax - ymin);

    std::ofstream out(path);
    if (!out) throw std::runtime_error("plot: cannot open " + path + " for writing");
    out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
        << height << "\" viewBox=\"0 0 " << width << " " << height << "\">\n";
    out << "<!-- transform: px = x0 + (nfe - xmin) * sx, py = y0 - (psnr - ymin) * sy -->\n";
    out << "<!-- axes: x0 " << format_double(tr.x0) << " y0 " << format_double(tr.y0) << " sx "
        << format_double(tr.sx) << " sy " << format_double(tr.sy) << " xmin "
        << format_double(tr.xmin) << " ymin " << format_double(tr.ymin) << " -->\n";
    out << "<rect x=\"0\" y=\"0\" width=\"" << width << "\" height=\"" << height
        << "\" fill=\"white\"/>\n";
    // axes
    out << "<line x1=\"" << tr.x0 << "\" y1=\"" << tr.y0 << "\" x2=\"" << width - tr.x0
        << "\" y2=\"" << tr.y0 << "\" stroke=\"black\"/>\n";
    out << "<line x1=\"" << tr.x0 << "\" y1=\"" << tr.y0 << "\" x2=\"" << tr.x0
        << "\" y2=\"60\" stroke=\"black\"/>\n";
    out << "<text x=\"" << width / 2 << "\" y=\"" << height - 16
        << "\" text-anchor=\"middle\" font-size=\"14\">score evaluations (NFE)</text>\n";
    out << "<text x=\"18\" y=\"" << height / 2
        << "\" text-anchor=\"middle\" font-size=\"14\" transform=\"rotate(-90 18 "
        << height / 2 << ")\">masked PSNR (dB)</text>\n";

    for (const FrontierPoint& p : points) {
        double cx = tr.px(p.nfe);
        double cy = tr.py(p.psnr);
        out << "<circle cx=\"" << format_double(cx) << "\" cy=\"" << format_double(cy)
            << "\" r=\"4\" fill=\"steelblue\"/>\n";
        out << "<text x=\"" << format_double(cx + 6) << "\" y=\"" << format_double(cy - 6)
            << "\" font-size=\"11\">" << p.method << " nfe=" << p.nfe << " psnr="
            << format_double(p.psnr) << "</text>\n";
    }
    out << "</svg>\n";
}

struct ParsedFrontier {
    PlotTransform transform;
    std::vector<double> cx;
    std::vector<double> cy;
};

// Reads back the emitted file: the transform comment plus every marker
// position. Used to verify marker placement against the source CSV.
inline ParsedFrontier parse_frontier_svg(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("plot: cannot open " + path);
    ParsedFrontier pf;
    std::string line;
    bool have_axes = false;
    auto grab = [](const std::string& s, const std::string& key) {
        std::size_t p = s.find(key);
        if (p == std::string::npos) throw std::runtime_error("plot: missing field " + key);
        return std::stod(s.substr(p + key.size()));
    };
    while (std::getline(in, line)) {
        if (line.find("<!-- axes:") != std::string::npos) {
            pf.transform.x0 = grab(line, " x0 ");
            pf.transform.y0 = grab(line, " y0 ");
            pf.transform.sx = grab(line, " sx ");
            pf.transform.sy = grab(line, " sy ");
            pf.transform.xmin = grab(line, " xmin ");
            pf.transform.ymin = grab(line, " ymin ");
            have_axes = true;
        } else if (line.rfind("<circle", 0) == 0) {
            pf.cx.push_back(grab(line, "cx=\""));
            pf.cy.push_back(grab(line, "cy=\""));
        }
    }
    if (!have_axes) throw std::runtime_error("plot: no axes comment in " + path);
    return pf;
}

}  // namespace aid

#endif
