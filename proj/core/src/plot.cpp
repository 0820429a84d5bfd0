#include "fedscore/plot.hpp"

#include <algorithm>
#include <cstdio>

#include "fedscore/errors.hpp"

namespace fedscore {

namespace {

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return buf;
}

std::string num3(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.3f", v);
    return buf;
}

}  // namespace

std::string render_parsimony_svg(const ParsimonyCurve& curve, int selected_m) {
    if (curve.points.empty()) throw DataError("plot: empty parsimony curve");

    const double width = 640, height = 400;
    const double left = 70, right = 620, top = 40, bottom = 350;

    double lo = curve.points.front().psi, hi = lo;
    for (const auto& p : curve.points) {
        lo = std::min(lo, p.psi);
        hi = std::max(hi, p.psi);
    }
    const double pad = std::max(0.01, (hi - lo) * 0.15);
    const double y_lo = std::max(0.0, lo - pad);
    const double y_hi = std::min(1.0, hi + pad);
    const double y_span = (y_hi > y_lo) ? (y_hi - y_lo) : 1.0;
    auto y_of = [&](double psi) { return bottom - (psi - y_lo) / y_span * (bottom - top); };

    const double slot = (right - left) / static_cast<double>(curve.points.size());
    const double bar_w = 0.6 * slot;
    auto x_of = [&](std::size_t i) { return left + (static_cast<double>(i) + 0.5) * slot; };

    std::string svg;
    svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(width) +
           "\" height=\"" + num(height) + "\" viewBox=\"0 0 " + num(width) + " " +
           num(height) + "\">\n";
    svg += "<rect x=\"0\" y=\"0\" width=\"" + num(width) + "\" height=\"" + num(height) +
           "\" fill=\"#ffffff\"/>\n";
    svg += "<text x=\"" + num((left + right) / 2) +
           "\" y=\"24\" font-family=\"sans-serif\" font-size=\"16\" "
           "text-anchor=\"middle\">Parsimony plot</text>\n";

    // Horizontal gridlines with 5 evenly spaced ticks.
    for (int t = 0; t <= 4; ++t) {
        const double v = y_lo + y_span * t / 4.0;
        const double y = y_of(v);
        svg += "<line x1=\"" + num(left) + "\" y1=\"" + num(y) + "\" x2=\"" + num(right) +
               "\" y2=\"" + num(y) + "\" stroke=\"#dddddd\" stroke-width=\"1\"/>\n";
        svg += "<text x=\"" + num(left - 8) + "\" y=\"" + num(y + 4) +
               "\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"end\">" +
               num3(v) + "</text>\n";
    }

    for (std::size_t i = 0; i < curve.points.size(); ++i) {
        const auto& p = curve.points[i];
        const double x = x_of(i);
        const double y = y_of(p.psi);
        const bool chosen = p.m == selected_m;
        svg += "<rect x=\"" + num(x - bar_w / 2) + "\" y=\"" + num(y) + "\" width=\"" +
               num(bar_w) + "\" height=\"" + num(bottom - y) + "\" fill=\"" +
               (chosen ? "#d9823b" : "#7a9cc6") + "\"/>\n";
        svg += "<text x=\"" + num(x) + "\" y=\"" + num(bottom + 16) +
               "\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"middle\">" +
               std::to_string(p.m) + "</text>\n";
    }

    // Connecting line over the bar tops.
    std::string pts;
    for (std::size_t i = 0; i < curve.points.size(); ++i) {
        if (i) pts += " ";
        pts += num(x_of(i)) + "," + num(y_of(curve.points[i].psi));
    }
    svg += "<polyline points=\"" + pts +
           "\" fill=\"none\" stroke=\"#2b4c7e\" stroke-width=\"2\"/>\n";
    for (std::size_t i = 0; i < curve.points.size(); ++i)
        svg += "<circle cx=\"" + num(x_of(i)) + "\" cy=\"" + num(y_of(curve.points[i].psi)) +
               "\" r=\"3\" fill=\"#2b4c7e\"/>\n";

    svg += "<line x1=\"" + num(left) + "\" y1=\"" + num(bottom) + "\" x2=\"" + num(right) +
           "\" y2=\"" + num(bottom) + "\" stroke=\"#333333\" stroke-width=\"1\"/>\n";
    svg += "<line x1=\"" + num(left) + "\" y1=\"" + num(top) + "\" x2=\"" + num(left) +
           "\" y2=\"" + num(bottom) + "\" stroke=\"#333333\" stroke-width=\"1\"/>\n";
    svg += "<text x=\"" + num((left + right) / 2) + "\" y=\"" + num(height - 12) +
           "\" font-family=\"sans-serif\" font-size=\"13\" text-anchor=\"middle\">model size "
           "m</text>\n";
    svg += "<text x=\"16\" y=\"" + num((top + bottom) / 2) +
           "\" font-family=\"sans-serif\" font-size=\"13\" text-anchor=\"middle\" "
           "transform=\"rotate(-90 16 " +
           num((top + bottom) / 2) + ")\">weighted validation AUC</text>\n";
    svg += "</svg>\n";
    return svg;
}

void plot_parsimony(const ParsimonyCurve& curve, int selected_m,
                    const std::filesystem::path& path) {
    write_text_file(path, render_parsimony_svg(curve, selected_m));
}

}  // namespace fedscore
