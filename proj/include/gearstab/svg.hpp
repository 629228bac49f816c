#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "gearstab/errors.hpp"
#include "gearstab/stability.hpp"

namespace gearstab {

/// Geometry of a stability-region plot in the h*lambda plane.
struct PlotSpec {
    std::pair<double, double> x_range{-2.0, 2.0};
    std::pair<double, double> y_range{-2.0, 2.0};
    int width_px = 640;
    int height_px = 640;
    bool shade_exterior = true;
    std::optional<double> dashed_vertical_at;
    std::string title;

    void validate() const {
        if (!(x_range.second > x_range.first) || !(y_range.second > y_range.first))
            throw DomainError("PlotSpec: degenerate range");
        if (width_px < 100 || height_px < 100) throw DomainError("PlotSpec: pixel dimensions must be at least 100");
    }
};

/// Square-ish viewport around the locus, padded by 15%, always containing the origin.
inline PlotSpec fit_plot_spec(const StabilityLocus& locus) {
    double xmin = 0.0, xmax = 0.0, ymin = 0.0, ymax = 0.0;
    for (const auto& s : locus.samples) {
        xmin = std::min(xmin, s.sigma.real());
        xmax = std::max(xmax, s.sigma.real());
        ymin = std::min(ymin, s.sigma.imag());
        ymax = std::max(ymax, s.sigma.imag());
    }
    const double half = 0.5 * std::max({xmax - xmin, ymax - ymin, 1.0}) * 1.15;
    const double cx = 0.5 * (xmin + xmax);
    const double cy = 0.5 * (ymin + ymax);
    PlotSpec spec;
    spec.x_range = {cx - half, cx + half};
    spec.y_range = {cy - half, cy + half};
    return spec;
}

namespace detail {

inline std::string fmt_num(double v, const char* pattern = "%.3f") {
    char buf[64];
    std::snprintf(buf, sizeof buf, pattern, v);
    return buf;
}

inline std::string xml_escape(const std::string& s) {
    std::string out;
    for (const char c : s) {
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

inline double nice_step(double range) {
    const double raw = range / 6.0;
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    for (const double m : {1.0, 2.0, 5.0})
        if (m * mag >= raw) return m * mag;
    return 10.0 * mag;
}

}  // namespace detail

/// Standalone SVG: locus path, optionally shaded exterior (even-odd against
/// the viewport), axes with ticks, and an optional dashed vertical line.
inline std::string render_locus_svg(const StabilityLocus& locus, const PlotSpec& spec) {
    spec.validate();
    const double w = spec.width_px;
    const double h = spec.height_px;
    const auto [x0, x1] = spec.x_range;
    const auto [y0, y1] = spec.y_range;
    auto px = [&](double x) { return (x - x0) / (x1 - x0) * w; };
    auto py = [&](double y) { return h - (y - y0) / (y1 - y0) * h; };

    std::string path;
    for (std::size_t i = 0; i < locus.samples.size(); ++i) {
        const auto& s = locus.samples[i];
        path += (i == 0 ? "M" : "L") + detail::fmt_num(px(s.sigma.real())) + " " + detail::fmt_num(py(s.sigma.imag())) + " ";
    }
    path += "Z";

    const std::string W = detail::fmt_num(w, "%.0f");
    const std::string H = detail::fmt_num(h, "%.0f");
    std::string out;
    out += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + W + "\" height=\"" + H + "\" viewBox=\"0 0 " + W +
           " " + H + "\">\n";
    out += "  <rect x=\"0\" y=\"0\" width=\"" + W + "\" height=\"" + H + "\" fill=\"white\"/>\n";
    if (spec.shade_exterior) {
        out += "  <path class=\"stable-region\" fill=\"#c8d4e6\" fill-rule=\"evenodd\" stroke=\"none\" d=\"M0 0 H" + W +
               " V" + H + " H0 Z " + path + "\"/>\n";
    }

    // Axes and ticks.
    const std::string axis_style = "stroke=\"#444\" stroke-width=\"1\"";
    if (y0 <= 0.0 && 0.0 <= y1) {
        const std::string yy = detail::fmt_num(py(0.0));
        out += "  <line class=\"axis\" x1=\"0\" y1=\"" + yy + "\" x2=\"" + W + "\" y2=\"" + yy + "\" " + axis_style + "/>\n";
    }
    if (x0 <= 0.0 && 0.0 <= x1) {
        const std::string xx = detail::fmt_num(px(0.0));
        out += "  <line class=\"axis\" x1=\"" + xx + "\" y1=\"0\" x2=\"" + xx + "\" y2=\"" + H + "\" " + axis_style + "/>\n";
    }
    const double ax_y = py(std::clamp(0.0, y0, y1));
    const double ax_x = px(std::clamp(0.0, x0, x1));
    const double xs = detail::nice_step(x1 - x0);
    for (double t = std::ceil(x0 / xs) * xs; t <= x1; t += xs) {
        const std::string tx = detail::fmt_num(px(t));
        out += "  <line class=\"tick\" x1=\"" + tx + "\" y1=\"" + detail::fmt_num(ax_y - 4) + "\" x2=\"" + tx + "\" y2=\"" +
               detail::fmt_num(ax_y + 4) + "\" " + axis_style + "/>\n";
        out += "  <text x=\"" + tx + "\" y=\"" + detail::fmt_num(ax_y + 16) +
               "\" font-size=\"11\" text-anchor=\"middle\">" + detail::fmt_num(std::abs(t) < 1e-12 ? 0.0 : t, "%g") +
               "</text>\n";
    }
    const double ys = detail::nice_step(y1 - y0);
    for (double t = std::ceil(y0 / ys) * ys; t <= y1; t += ys) {
        if (std::abs(t) < 1e-12) continue;
        const std::string ty = detail::fmt_num(py(t));
        out += "  <line class=\"tick\" x1=\"" + detail::fmt_num(ax_x - 4) + "\" y1=\"" + ty + "\" x2=\"" +
               detail::fmt_num(ax_x + 4) + "\" y2=\"" + ty + "\" " + axis_style + "/>\n";
        out += "  <text x=\"" + detail::fmt_num(ax_x + 7) + "\" y=\"" + detail::fmt_num(py(t) + 4) +
               "\" font-size=\"11\">" + detail::fmt_num(t, "%g") + "i</text>\n";
    }

    out += "  <path class=\"locus\" fill=\"none\" stroke=\"black\" stroke-width=\"1.5\" d=\"" + path + "\"/>\n";
    if (spec.dashed_vertical_at) {
        const std::string dx = detail::fmt_num(px(*spec.dashed_vertical_at));
        out += "  <line class=\"delta\" data-value=\"" + detail::fmt_num(*spec.dashed_vertical_at, "%.6g") + "\" x1=\"" +
               dx + "\" y1=\"0\" x2=\"" + dx + "\" y2=\"" + H +
               "\" stroke=\"#b22\" stroke-width=\"1.2\" stroke-dasharray=\"6 4\"/>\n";
    }
    if (!spec.title.empty())
        out += "  <text x=\"10\" y=\"20\" font-size=\"14\">" + detail::xml_escape(spec.title) + "</text>\n";
    out += "</svg>\n";
    return out;
}

}  // namespace gearstab
