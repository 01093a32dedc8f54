#pragma once

// SVG charts over metrics.csv: metric-vs-discount lines per detour guarantee, a
// percentage-change bar chart against the solo baseline, and a zone-class panel.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "ridesim/config.hpp"
#include "ridesim/csv.hpp"
#include "ridesim/experiment.hpp"

namespace ridesim {

struct MetricsTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    std::size_t col(const std::string& name) const {
        auto it = std::find(header.begin(), header.end(), name);
        if (it == header.end()) throw ParseError("metrics.csv", 1, "missing column '" + name + "'");
        return static_cast<std::size_t>(it - header.begin());
    }
    std::optional<double> num(std::size_t row, const std::string& name) const {
        return csv::to_double(rows[row][col(name)]);
    }
};

inline MetricsTable read_metrics_csv(const std::string& path) {
    MetricsTable t;
    t.header = metrics_header();
    for (auto& r : csv::read(path, t.header)) t.rows.push_back(std::move(r.fields));
    return t;
}

namespace svg {

inline std::string num(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", x);
    return buf;
}

inline std::string tick(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4g", x);
    return buf;
}

inline std::string escape(const std::string& s) {
    std::string o;
    for (char c : s) {
        if (c == '<') o += "&lt;";
        else if (c == '>') o += "&gt;";
        else if (c == '&') o += "&amp;";
        else o += c;
    }
    return o;
}

inline const char* color(std::size_t i) {
    static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2"};
    return palette[i % 7];
}

class Canvas {
public:
    Canvas(int w, int h) : w_(w), h_(h) {}

    void line(double x1, double y1, double x2, double y2, const std::string& stroke, double width = 1.0) {
        body_ << "<line x1=\"" << num(x1) << "\" y1=\"" << num(y1) << "\" x2=\"" << num(x2) << "\" y2=\"" << num(y2)
              << "\" stroke=\"" << stroke << "\" stroke-width=\"" << num(width) << "\"/>\n";
    }
    void rect(double x, double y, double w, double h, const std::string& fill) {
        body_ << "<rect x=\"" << num(x) << "\" y=\"" << num(y) << "\" width=\"" << num(w) << "\" height=\""
              << num(h) << "\" fill=\"" << fill << "\"/>\n";
    }
    void circle(double x, double y, double r, const std::string& fill) {
        body_ << "<circle cx=\"" << num(x) << "\" cy=\"" << num(y) << "\" r=\"" << num(r) << "\" fill=\"" << fill
              << "\"/>\n";
    }
    void polyline(const std::vector<std::pair<double, double>>& pts, const std::string& stroke) {
        body_ << "<polyline fill=\"none\" stroke=\"" << stroke << "\" stroke-width=\"2\" points=\"";
        for (const auto& [x, y] : pts) body_ << num(x) << ',' << num(y) << ' ';
        body_ << "\"/>\n";
    }
    void text(double x, double y, const std::string& s, int size = 12, const char* anchor = "middle") {
        body_ << "<text x=\"" << num(x) << "\" y=\"" << num(y) << "\" font-size=\"" << size
              << "\" font-family=\"sans-serif\" text-anchor=\"" << anchor << "\">" << escape(s) << "</text>\n";
    }

    std::string str() const {
        std::ostringstream os;
        os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w_ << "\" height=\"" << h_
           << "\" viewBox=\"0 0 " << w_ << ' ' << h_ << "\">\n"
           << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
           << body_.str() << "</svg>\n";
        return os.str();
    }

private:
    int w_, h_;
    std::ostringstream body_;
};

struct Frame {
    double left = 70, right = 150, top = 40, bottom = 50;
    int width = 640, height = 400;
    double x0, x1, y0, y1;

    double px(double x) const { return left + (x - x0) / (x1 - x0) * (width - left - right); }
    double py(double y) const { return height - bottom - (y - y0) / (y1 - y0) * (height - top - bottom); }

    void axes(Canvas& c, const std::string& title, const std::string& xlabel, const std::string& ylabel,
              const std::vector<double>& xticks) const {
        c.text(width / 2.0, 22, title, 14);
        c.line(left, height - bottom, width - right, height - bottom, "black");
        c.line(left, top, left, height - bottom, "black");
        for (double x : xticks) {
            c.line(px(x), height - bottom, px(x), height - bottom + 5, "black");
            c.text(px(x), height - bottom + 18, tick(x), 11);
        }
        for (int i = 0; i <= 4; ++i) {
            const double y = y0 + (y1 - y0) * i / 4.0;
            c.line(left - 5, py(y), left, py(y), "black");
            c.text(left - 8, py(y) + 4, tick(y), 11, "end");
        }
        c.text((left + width - right) / 2.0, height - 10, xlabel);
        c.text(16, (top + height - bottom) / 2.0, ylabel, 12, "middle");
    }
};

inline std::pair<double, double> padded_range(double lo, double hi, bool include_zero) {
    if (include_zero) {
        lo = std::min(lo, 0.0);
        hi = std::max(hi, 0.0);
    }
    if (!(hi > lo)) {
        const double pad = lo == 0.0 ? 1.0 : std::abs(lo) * 0.1;
        return {lo - pad, hi + pad};
    }
    const double pad = (hi - lo) * 0.08;
    return {lo - pad, hi + pad};
}

} // namespace svg

struct ChartSummary {
    std::vector<std::string> files;
    std::vector<std::string> warnings;
};

inline const std::vector<std::pair<std::string, std::string>>& charted_metrics() {
    static const std::vector<std::pair<std::string, std::string>> m{
        {"service_rate", "Service rate"},
        {"revenue", "Revenue"},
        {"avg_scheduled_requests", "Avg. scheduled requests"},
        {"emission_factor_g_per_km", "Emission factor (g/km)"},
        {"mean_waiting_time_s", "Waiting time (s)"},
        {"ssr", "SSR"},
        {"sdr", "SDR"},
        {"ddr", "DDR"},
    };
    return m;
}

namespace detail {

inline void put_file(const std::filesystem::path& p, const std::string& s, ChartSummary& out) {
    std::ofstream os(p, std::ios::binary);
    if (!os) throw Error("cannot write " + p.string());
    os << s;
    out.files.push_back(p.filename().string());
}

inline double mean(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

} // namespace detail

// Renders all charts for a metrics table. Seeds are averaged.
inline ChartSummary render_charts(const MetricsTable& t, const std::filesystem::path& out_dir) {
    std::filesystem::create_directories(out_dir);
    ChartSummary out;
    const auto c_profile = t.col("profile"), c_scenario = t.col("scenario"), c_seed = t.col("seed");

    std::map<double, std::string> detours; // detour -> label
    std::set<std::string> profiles;
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        auto d = t.num(r, "max_detour");
        auto th = t.num(r, "discount");
        if (!d || !th) throw ParseError("metrics.csv", r + 2, "discount and max_detour must be numeric");
        detours.emplace(*d, t.rows[r][c_scenario]);
        profiles.insert(t.rows[r][c_profile]);
    }

    // Line charts: one file per metric per detour guarantee, one series per profile.
    for (const auto& [metric, title] : charted_metrics()) {
        for (const auto& [delta, label] : detours) {
            std::map<std::string, std::map<double, std::vector<double>>> series;
            for (std::size_t r = 0; r < t.rows.size(); ++r) {
                if (*t.num(r, "max_detour") != delta) continue;
                if (auto v = t.num(r, metric)) series[t.rows[r][c_profile]][*t.num(r, "discount")].push_back(*v);
            }
            double lo = INFINITY, hi = -INFINITY, xlo = INFINITY, xhi = -INFINITY;
            std::set<double> xs;
            for (const auto& [p, pts] : series)
                for (const auto& [x, v] : pts) {
                    const double y = detail::mean(v);
                    lo = std::min(lo, y);
                    hi = std::max(hi, y);
                    xlo = std::min(xlo, x);
                    xhi = std::max(xhi, x);
                    xs.insert(x);
                }
            if (xs.empty()) continue;
            svg::Frame f;
            std::tie(f.y0, f.y1) = svg::padded_range(lo, hi, false);
            std::tie(f.x0, f.x1) = svg::padded_range(xlo, xhi, false);
            svg::Canvas c(f.width, f.height);
            f.axes(c, title + " vs discount, " + label, "discount ratio", "", {xs.begin(), xs.end()});
            std::size_t i = 0;
            for (const auto& [p, pts] : series) {
                std::vector<std::pair<double, double>> line;
                for (const auto& [x, v] : pts) line.emplace_back(f.px(x), f.py(detail::mean(v)));
                if (line.size() > 1) c.polyline(line, svg::color(i));
                for (const auto& [x, y] : line) c.circle(x, y, 3.5, svg::color(i));
                const double ly = f.top + 14 + 18.0 * static_cast<double>(i);
                c.line(f.width - f.right + 12, ly - 4, f.width - f.right + 32, ly - 4, svg::color(i), 2);
                c.text(f.width - f.right + 38, ly, p, 11, "start");
                ++i;
            }
            detail::put_file(out_dir / (metric + "_" + label + ".svg"), c.str(), out);
        }
    }

    // Percentage change at discount 0.2, detour 0.3 against the same seed's baseline.
    {
        const std::vector<std::pair<std::string, std::string>> bars{
            {"service_rate", "Service rate"},
            {"emission_factor_g_per_km", "CO2 per km"},
            {"avg_scheduled_requests", "Occupancy"},
            {"mean_waiting_time_s", "Waiting time"},
            {"revenue", "Revenue"}};
        std::map<std::pair<std::string, std::string>, std::size_t> base, treat; // (profile, seed) -> row
        for (std::size_t r = 0; r < t.rows.size(); ++r) {
            const double th = *t.num(r, "discount"), d = *t.num(r, "max_detour");
            const auto key = std::make_pair(t.rows[r][c_profile], t.rows[r][c_seed]);
            if (std::abs(d - 0.3) > 1e-9) continue;
            if (th == 0.0) base.emplace(key, r);
            else if (std::abs(th - 0.2) < 1e-9) treat.emplace(key, r);
        }
        std::vector<double> change(bars.size(), 0.0);
        std::size_t pairs = 0;
        for (const auto& [key, r] : treat) {
            auto it = base.find(key);
            if (it == base.end()) continue;
            bool ok = true;
            std::vector<double> ch;
            for (const auto& [m, name] : bars) {
                auto b = t.num(it->second, m), v = t.num(r, m);
                if (!b || !v || *b == 0.0) {
                    ok = false;
                    break;
                }
                ch.push_back((*v - *b) / *b * 100.0);
            }
            if (!ok) continue;
            for (std::size_t k = 0; k < ch.size(); ++k) change[k] += ch[k];
            ++pairs;
        }
        if (pairs == 0) {
            out.warnings.push_back("no baseline for discount 0.2 at detour 0.3; percentage-change chart skipped");
        } else {
            for (double& x : change) x /= static_cast<double>(pairs);
            svg::Frame f;
            f.right = 30;
            f.x0 = 0;
            f.x1 = static_cast<double>(bars.size());
            const auto [lo, hi] = std::minmax_element(change.begin(), change.end());
            std::tie(f.y0, f.y1) = svg::padded_range(*lo, *hi, true);
            svg::Canvas c(f.width, f.height);
            f.axes(c, "Change vs. solo baseline (discount 0.2, C2-D30)", "", "%", {});
            c.line(f.left, f.py(0), f.width - f.right, f.py(0), "#444");
            for (std::size_t k = 0; k < bars.size(); ++k) {
                const double x = f.px(static_cast<double>(k) + 0.2), w = f.px(0.6) - f.px(0);
                const double y = f.py(std::max(change[k], 0.0)), h = std::abs(f.py(change[k]) - f.py(0));
                c.rect(x, y, w, h, change[k] >= 0 ? "#2ca02c" : "#d62728");
                c.text(x + w / 2, f.height - f.bottom + 18, bars[k].second, 11);
                c.text(x + w / 2, change[k] >= 0 ? y - 4 : y + h + 13, svg::tick(change[k]) + "%", 11);
            }
            detail::put_file(out_dir / "pct_change.svg", c.str(), out);
        }
    }

    // Zone classes: SSR/SDR/DDR per cold/normal/hot, averaged over rows with a discount.
    {
        const char* classes[] = {"cold", "normal", "hot"};
        const char* ms[] = {"ssr", "sdr", "ddr"};
        double val[3][3] = {};
        std::size_t cnt[3][3] = {};
        for (std::size_t r = 0; r < t.rows.size(); ++r) {
            if (*t.num(r, "discount") == 0.0) continue;
            for (int k = 0; k < 3; ++k)
                for (int m = 0; m < 3; ++m)
                    if (auto v = t.num(r, std::string(ms[m]) + "_" + classes[k])) {
                        val[k][m] += *v;
                        ++cnt[k][m];
                    }
        }
        svg::Frame f;
        f.x0 = 0;
        f.x1 = 3;
        f.y0 = 0;
        f.y1 = 1;
        for (int k = 0; k < 3; ++k)
            for (int m = 0; m < 3; ++m)
                if (cnt[k][m]) f.y1 = std::max(f.y1, val[k][m] / static_cast<double>(cnt[k][m]) * 1.1);
        svg::Canvas c(f.width, f.height);
        f.axes(c, "Sharing ratios by zone class", "", "", {});
        for (int k = 0; k < 3; ++k) {
            c.text(f.px(k + 0.5), f.height - f.bottom + 18, classes[k], 12);
            for (int m = 0; m < 3; ++m) {
                if (!cnt[k][m]) continue;
                const double v = val[k][m] / static_cast<double>(cnt[k][m]);
                const double x = f.px(k + 0.15 + 0.23 * m), w = f.px(0.2) - f.px(0);
                c.rect(x, f.py(v), w, f.py(0) - f.py(v), svg::color(static_cast<std::size_t>(m)));
            }
        }
        for (int m = 0; m < 3; ++m) {
            const double ly = f.top + 14 + 18.0 * m;
            c.rect(f.width - f.right + 12, ly - 10, 12, 12, svg::color(static_cast<std::size_t>(m)));
            c.text(f.width - f.right + 30, ly, ms[m], 11, "start");
        }
        detail::put_file(out_dir / "zone_classes.svg", c.str(), out);
    }
    return out;
}

} // namespace ridesim
