#pragma once

// Revenue-ratio surfaces over (discount, fare ratio, distance ratio) with SVG rendering.

#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include "ridesim/charts.hpp"
#include "ridesim/config.hpp"
#include "ridesim/scenario.hpp"

namespace ridesim::scenario {

struct SurfaceGrid {
    std::vector<double> discounts{0.1, 0.2, 0.3, 0.4};
    std::vector<double> fare_ratios{0.4, 0.7, 1.0};
    double dist_min = 1.0, dist_max = 1.6, dist_step = 0.05;

    std::vector<double> dist_ratios() const {
        std::vector<double> out;
        const auto n = static_cast<long>(std::floor((dist_max - dist_min) / dist_step + 1e-9));
        for (long i = 0; i <= n; ++i) out.push_back(dist_min + dist_step * static_cast<double>(i));
        return out;
    }

    void validate() const {
        if (discounts.empty() || fare_ratios.empty()) throw ConfigError("scenario grid lists must not be empty");
        for (double t : discounts)
            if (!(t >= 0.0 && t < 1.0)) throw ConfigError("scenario discounts must lie in [0, 1)");
        for (double f : fare_ratios)
            if (!(f > 0.0 && f <= 1.0)) throw ConfigError("fare ratios must lie in (0, 1]");
        if (!(dist_min >= 1.0) || !(dist_max >= dist_min) || !(dist_step > 0.0))
            throw ConfigError("distance ratios need 1 <= min <= max and a positive step");
    }
};

// Keys: discounts, fare_ratios, dist_ratio_min, dist_ratio_max, dist_ratio_step.
inline SurfaceGrid parse_surface_grid(const Config& c) {
    SurfaceGrid g;
    if (c.has("discounts")) g.discounts = c.numbers("discounts");
    if (c.has("fare_ratios")) g.fare_ratios = c.numbers("fare_ratios");
    g.dist_min = c.num("dist_ratio_min", g.dist_min);
    g.dist_max = c.num("dist_ratio_max", g.dist_max);
    g.dist_step = c.num("dist_ratio_step", g.dist_step);
    if (auto extra = c.unused(); !extra.empty()) throw ConfigError("unknown scenario key '" + extra.front() + "'");
    g.validate();
    return g;
}

inline std::string surface_csv(const SurfaceGrid& g) {
    std::ostringstream os;
    os << "discount,fare_ratio,dist_ratio,revenue_ratio,breakeven_discount,no_loss\n";
    for (double t : g.discounts)
        for (double f : g.fare_ratios)
            for (double d : g.dist_ratios()) {
                const double r = revenue_ratio(t, f, d);
                os << format_double(t) << ',' << format_double(f) << ',' << format_double(d) << ','
                   << format_double(r) << ',' << format_double(breakeven_discount(f, d)) << ','
                   << (r >= 1.0 ? 1 : 0) << '\n';
            }
    return os.str();
}

// One panel per fare ratio: ratio-colored cells over (distance ratio, discount) with the
// break-even curve drawn on top.
inline std::string surface_svg(const SurfaceGrid& g) {
    const auto ds = g.dist_ratios();
    const int panel_w = 300, panel_h = 260, gap = 30;
    const int width = static_cast<int>(g.fare_ratios.size()) * (panel_w + gap) + 60;
    const int height = panel_h + 110;
    svg::Canvas c(width, height);
    c.text(width / 2.0, 22, "Revenue ratio share/solo (green: no loss, red: loss)", 14);

    const double t_lo = *std::min_element(g.discounts.begin(), g.discounts.end());
    const double t_hi = *std::max_element(g.discounts.begin(), g.discounts.end());
    const double t_step = g.discounts.size() > 1 ? (t_hi - t_lo) / static_cast<double>(g.discounts.size() - 1) : 0.1;
    auto shade = [](double r) {
        const double k = std::clamp(std::abs(r - 1.0) / 0.5, 0.0, 1.0);
        const int fade = static_cast<int>(std::lround(235 - 150 * k));
        char buf[16];
        if (r >= 1.0) std::snprintf(buf, sizeof buf, "#%02x%02x%02x", fade, 200, fade);
        else std::snprintf(buf, sizeof buf, "#%02x%02x%02x", 220, fade, fade);
        return std::string(buf);
    };

    for (std::size_t p = 0; p < g.fare_ratios.size(); ++p) {
        const double f = g.fare_ratios[p];
        svg::Frame fr;
        fr.left = 50.0 + static_cast<double>(p) * (panel_w + gap) + 30;
        fr.right = 0;
        fr.width = static_cast<int>(fr.left) + panel_w - 30;
        fr.height = height;
        fr.top = 60;
        fr.bottom = 50;
        fr.x0 = g.dist_min - g.dist_step / 2;
        fr.x1 = g.dist_max + g.dist_step / 2;
        fr.y0 = t_lo - t_step / 2;
        fr.y1 = t_hi + t_step / 2;
        for (double t : g.discounts)
            for (double d : ds) {
                const double x = fr.px(d - g.dist_step / 2), y = fr.py(t + t_step / 2);
                c.rect(x, y, fr.px(d + g.dist_step / 2) - x, fr.py(t - t_step / 2) - y, shade(revenue_ratio(t, f, d)));
            }
        // Break-even: theta* = 1 - d / (1 + f).
        std::vector<std::pair<double, double>> curve;
        for (double d = g.dist_min; d <= g.dist_max + 1e-9; d += g.dist_step / 4) {
            const double t = 1.0 - d / (1.0 + f);
            if (t >= fr.y0 && t <= fr.y1) curve.emplace_back(fr.px(d), fr.py(t));
        }
        if (curve.size() > 1) c.polyline(curve, "black");
        c.line(fr.left, fr.height - fr.bottom, fr.width, fr.height - fr.bottom, "black");
        c.line(fr.left, fr.top, fr.left, fr.height - fr.bottom, "black");
        for (double d : {g.dist_min, (g.dist_min + g.dist_max) / 2, g.dist_max})
            c.text(fr.px(d), fr.height - fr.bottom + 16, svg::tick(d), 10);
        for (double t : g.discounts) c.text(fr.left - 6, fr.py(t) + 4, svg::tick(t), 10, "end");
        c.text((fr.left + fr.width) / 2.0, 48, "fare ratio " + svg::tick(f), 12);
        c.text((fr.left + fr.width) / 2.0, fr.height - 12, "distance ratio", 11);
    }
    c.text(14, height / 2.0, "θ", 12);
    return c.str();
}

} // namespace ridesim::scenario
