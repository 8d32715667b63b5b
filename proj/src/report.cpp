#include "fadecast/report.hpp"

#include "fadecast/csv.hpp"
#include "fadecast/errors.hpp"
#include "fadecast/stats.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>

namespace fadecast {

namespace {

// Minimal SVG canvas with a linear data-to-pixel mapping per plot.
class Svg {
public:
    Svg(double width, double height) : w_(width), h_(height) {
        out_ << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w_ << "\" height=\"" << h_
             << "\" viewBox=\"0 0 " << w_ << " " << h_ << "\">\n";
        out_ << "<rect width=\"" << w_ << "\" height=\"" << h_ << "\" fill=\"white\"/>\n";
    }

    void rect(double x, double y, double w, double h, const std::string& fill,
              const std::string& extra = "") {
        out_ << "<rect x=\"" << x << "\" y=\"" << y << "\" width=\"" << w << "\" height=\"" << h
             << "\" fill=\"" << fill << "\" " << extra << "/>\n";
    }

    void line(double x1, double y1, double x2, double y2, const std::string& stroke,
              double width = 1.0, const std::string& dash = "") {
        out_ << "<line x1=\"" << x1 << "\" y1=\"" << y1 << "\" x2=\"" << x2 << "\" y2=\"" << y2
             << "\" stroke=\"" << stroke << "\" stroke-width=\"" << width << "\"";
        if (!dash.empty()) out_ << " stroke-dasharray=\"" << dash << "\"";
        out_ << "/>\n";
    }

    void circle(double x, double y, double r, const std::string& fill) {
        out_ << "<circle cx=\"" << x << "\" cy=\"" << y << "\" r=\"" << r << "\" fill=\"" << fill
             << "\" fill-opacity=\"0.6\"/>\n";
    }

    void polyline(const std::vector<std::pair<double, double>>& pts, const std::string& stroke,
                  double width = 1.5, const std::string& dash = "") {
        out_ << "<polyline fill=\"none\" stroke=\"" << stroke << "\" stroke-width=\"" << width
             << "\"";
        if (!dash.empty()) out_ << " stroke-dasharray=\"" << dash << "\"";
        out_ << " points=\"";
        for (const auto& [x, y] : pts) out_ << x << "," << y << " ";
        out_ << "\"/>\n";
    }

    void text(double x, double y, const std::string& s, double size = 11,
              const std::string& anchor = "start") {
        out_ << "<text x=\"" << x << "\" y=\"" << y << "\" font-size=\"" << size
             << "\" font-family=\"sans-serif\" text-anchor=\"" << anchor << "\">" << escape(s)
             << "</text>\n";
    }

    void save(const std::filesystem::path& path) {
        out_ << "</svg>\n";
        std::ofstream f(path, std::ios::binary);
        f << out_.str();
    }

private:
    static std::string escape(const std::string& s) {
        std::string out;
        for (char c : s) {
            if (c == '<') out += "&lt;";
            else if (c == '>') out += "&gt;";
            else if (c == '&') out += "&amp;";
            else out.push_back(c);
        }
        return out;
    }

    double w_, h_;
    std::ostringstream out_;
};

std::string heat_color(double v) {
    // white -> blue -> dark purple
    v = std::clamp(v, 0.0, 1.0);
    int r = static_cast<int>(255 - 190 * v);
    int g = static_cast<int>(255 - 230 * v);
    int b = static_cast<int>(255 - 90 * v);
    char buf[16];
    std::snprintf(buf, sizeof(buf), "#%02x%02x%02x", r, g, b);
    return buf;
}

std::optional<double> parse_opt(const std::string& s) {
    if (s.empty() || s == "nan") return std::nullopt;
    return csv::parse_double(s, "report");
}

void plot_similarity(const std::filesystem::path& in, const std::filesystem::path& out) {
    csv::Table t = csv::read_file(in);
    const std::size_t n = t.rows.size();
    if (n == 0) return;
    const double cell = std::max(14.0, 360.0 / static_cast<double>(n));
    const double margin = 70.0;
    Svg svg(margin + cell * static_cast<double>(n) + 20, margin + cell * static_cast<double>(n) + 20);
    for (std::size_t i = 0; i < n; ++i) {
        const auto& row = t.rows[i];
        svg.text(margin - 4, margin + cell * (static_cast<double>(i) + 0.7), row[0], 9, "end");
        svg.text(margin + cell * (static_cast<double>(i) + 0.5), margin - 6, t.header[i + 1], 9,
                 "middle");
        for (std::size_t j = 0; j + 1 < row.size(); ++j) {
            auto v = parse_opt(row[j + 1]);
            svg.rect(margin + cell * static_cast<double>(j), margin + cell * static_cast<double>(i),
                     cell, cell, v ? heat_color(*v) : "#dddddd",
                     "stroke=\"#999\" stroke-width=\"0.3\"");
        }
    }
    svg.save(out);
}

struct Panel {
    double x, y, w, h;
};

struct Hist {
    double lo = 0.0, hi = 1.0;
    std::vector<int> count;
};

Hist make_hist(const std::vector<double>& values, int bins) {
    Hist h;
    h.count.assign(static_cast<std::size_t>(bins), 0);
    if (values.empty()) return h;
    h.lo = *std::min_element(values.begin(), values.end());
    h.hi = *std::max_element(values.begin(), values.end());
    if (h.hi <= h.lo) h.hi = h.lo + 1.0;
    for (double v : values) {
        int b = static_cast<int>((v - h.lo) / (h.hi - h.lo) * bins);
        h.count[static_cast<std::size_t>(std::clamp(b, 0, bins - 1))]++;
    }
    return h;
}

void draw_histogram(Svg& svg, const Panel& p, const std::vector<double>& values, const Hist& hist,
                    const std::string& title) {
    if (values.empty()) return;
    double med = quantile(values, 0.5);
    double p95 = quantile(values, 0.95);
    const auto bins = hist.count.size();
    int peak = *std::max_element(hist.count.begin(), hist.count.end());
    auto xpix = [&](double v) { return p.x + (v - hist.lo) / (hist.hi - hist.lo) * p.w; };
    for (std::size_t b = 0; b < bins; ++b) {
        double bh = p.h * hist.count[b] / peak;
        svg.rect(p.x + p.w * static_cast<double>(b) / static_cast<double>(bins), p.y + p.h - bh,
                 p.w / static_cast<double>(bins) - 1, bh, "#7a6fbe");
    }
    svg.line(xpix(med), p.y, xpix(med), p.y + p.h, "black", 1.5);
    svg.line(xpix(p95), p.y, xpix(p95), p.y + p.h, "black", 1.2, "4,3");
    svg.line(p.x, p.y + p.h, p.x + p.w, p.y + p.h, "#444", 1.0);
    svg.text(p.x, p.y - 6, title, 11);
    char buf[96];
    std::snprintf(buf, sizeof(buf), "median %.3g | 95th %.3g", med, p95);
    svg.text(p.x + p.w, p.y - 6, buf, 9, "end");
    svg.text(p.x, p.y + p.h + 12, csv::format_double(hist.lo).substr(0, 6), 8);
    svg.text(p.x + p.w, p.y + p.h + 12, csv::format_double(hist.hi).substr(0, 6), 8, "end");
}

void plot_histograms(const std::filesystem::path& in, const std::filesystem::path& out) {
    csv::Table t = csv::read_file(in);
    auto col = [&](const std::string& name) { return t.column(name); };
    auto c_dq = col("rmse_dq_pct"), c_q = col("rmse_q_pct"), c_eol = col("pe_eol_pct"),
         c_knee = col("pe_knee_pct");
    if (!c_dq || !c_q || !c_eol || !c_knee) throw DataError("scores.csv missing metric columns");
    std::vector<double> dq, q, eol, knee;
    for (const auto& row : t.rows) {
        dq.push_back(csv::parse_double(row[*c_dq], "scores"));
        q.push_back(csv::parse_double(row[*c_q], "scores"));
        if (auto v = parse_opt(row[*c_eol])) eol.push_back(std::abs(*v));
        if (auto v = parse_opt(row[*c_knee])) knee.push_back(std::abs(*v));
    }
    const int bins = 24;
    std::pair<const char*, const std::vector<double>*> metrics[] = {
        {"rmse_dq_pct", &dq}, {"rmse_q_pct", &q}, {"abs_pe_eol_pct", &eol},
        {"abs_pe_knee_pct", &knee}};
    Hist hists[4];
    for (int m = 0; m < 4; ++m) hists[m] = make_hist(*metrics[m].second, bins);

    // Binned counts behind the plot, for downstream tooling.
    csv::Writer w(out.parent_path() / "histogram_bins.csv");
    w.row({"metric", "bin_lo", "bin_hi", "count"});
    for (int m = 0; m < 4; ++m) {
        const Hist& h = hists[m];
        double width = (h.hi - h.lo) / static_cast<double>(bins);
        for (int b = 0; b < bins; ++b) {
            w.row({metrics[m].first, csv::format_double(h.lo + width * b),
                   csv::format_double(h.lo + width * (b + 1)),
                   std::to_string(h.count[static_cast<std::size_t>(b)])});
        }
    }

    Svg svg(760, 520);
    draw_histogram(svg, {50, 30, 310, 180}, dq, hists[0], "RMSE dQ [% capacity]");
    draw_histogram(svg, {420, 30, 310, 180}, q, hists[1], "RMSE Q [% capacity]");
    draw_histogram(svg, {50, 290, 310, 180}, eol, hists[2], "|PE EoL| [%]");
    draw_histogram(svg, {420, 290, 310, 180}, knee, hists[3], "|PE knee| [%]");
    svg.save(out);
}

void plot_eol_scatter(const std::filesystem::path& in, const std::filesystem::path& out) {
    csv::Table t = csv::read_file(in);
    auto c_pred = t.column("eol_pred_days"), c_obs = t.column("eol_obs_days");
    if (!c_pred || !c_obs) throw DataError("scores.csv missing EoL columns");
    std::vector<std::pair<double, double>> pts;
    double lo = 1e300, hi = -1e300;
    for (const auto& row : t.rows) {
        auto p = parse_opt(row[*c_pred]);
        auto o = parse_opt(row[*c_obs]);
        if (!p || !o) continue;
        pts.emplace_back(*o, *p);
        lo = std::min({lo, *o, *p});
        hi = std::max({hi, *o, *p});
    }
    if (pts.empty()) return;
    double pad = 0.05 * (hi - lo);
    lo -= pad;
    hi += pad;
    Panel p{60, 30, 420, 420};
    Svg svg(540, 520);
    auto xp = [&](double v) { return p.x + (v - lo) / (hi - lo) * p.w; };
    auto yp = [&](double v) { return p.y + p.h - (v - lo) / (hi - lo) * p.h; };
    svg.line(p.x, p.y + p.h, p.x + p.w, p.y + p.h, "#444");
    svg.line(p.x, p.y, p.x, p.y + p.h, "#444");
    svg.line(xp(lo), yp(lo), xp(hi), yp(hi), "#999", 1.0, "5,4"); // perfect prediction
    for (const auto& [o, pr] : pts) svg.circle(xp(o), yp(pr), 3.0, "#4455bb");
    svg.text(p.x + p.w / 2, p.y + p.h + 30, "observed end of life [days]", 11, "middle");
    svg.text(14, p.y + p.h / 2, "predicted [days]", 11, "middle");
    svg.save(out);
}

void plot_limited_curves(const std::filesystem::path& in, const std::filesystem::path& out) {
    csv::Table t = csv::read_file(in);
    auto c_set = t.column("setting");
    auto med_eol = t.column("abs_pe_eol_pct_median"), p95_eol = t.column("abs_pe_eol_pct_p95");
    auto med_knee = t.column("abs_pe_knee_pct_median"), p95_knee = t.column("abs_pe_knee_pct_p95");
    if (!c_set || !med_eol || !p95_eol || !med_knee || !p95_knee) return;
    std::map<int, std::array<double, 4>> by_c;
    for (const auto& row : t.rows) {
        const std::string& s = row[*c_set];
        if (s.rfind("c=", 0) != 0) continue;
        int c = std::stoi(s.substr(2));
        by_c[c] = {csv::parse_double(row[*med_eol], "summary"),
                   csv::parse_double(row[*p95_eol], "summary"),
                   csv::parse_double(row[*med_knee], "summary"),
                   csv::parse_double(row[*p95_knee], "summary")};
    }
    if (by_c.empty()) return;
    double hi = 0;
    for (const auto& [c, v] : by_c) hi = std::max({hi, v[1], v[3]});
    hi *= 1.1;
    if (hi <= 0) hi = 1.0;
    int c_lo = by_c.begin()->first, c_hi = by_c.rbegin()->first;
    Panel p{60, 30, 420, 330};
    Svg svg(560, 430);
    auto xp = [&](double c) {
        return p.x + (c - c_lo) / std::max(1.0, static_cast<double>(c_hi - c_lo)) * p.w;
    };
    auto yp = [&](double v) { return p.y + p.h - v / hi * p.h; };
    svg.line(p.x, p.y + p.h, p.x + p.w, p.y + p.h, "#444");
    svg.line(p.x, p.y, p.x, p.y + p.h, "#444");
    auto series = [&](int idx, const std::string& color, const std::string& dash) {
        std::vector<std::pair<double, double>> pts;
        for (const auto& [c, v] : by_c) pts.emplace_back(xp(c), yp(v[static_cast<std::size_t>(idx)]));
        svg.polyline(pts, color, 1.8, dash);
    };
    series(0, "#5533aa", "");
    series(1, "#5533aa", "5,4");
    series(2, "#22887a", "");
    series(3, "#22887a", "5,4");
    svg.text(p.x, p.y - 8, "EoL |PE| (purple) and knee |PE| (green), median solid / 95th dashed", 10);
    svg.text(p.x + p.w / 2, p.y + p.h + 28, "training cells with full life data", 11, "middle");
    for (const auto& [c, v] : by_c) svg.text(xp(c), p.y + p.h + 14, std::to_string(c), 9, "middle");
    svg.save(out);
}

} // namespace

std::vector<std::filesystem::path> write_report(const std::filesystem::path& run_dir) {
    std::vector<std::filesystem::path> written;
    auto emit = [&](const char* input, const char* output, auto fn) {
        auto in = run_dir / input;
        if (!std::filesystem::exists(in)) return;
        auto out = run_dir / output;
        fn(in, out);
        if (std::filesystem::exists(out)) written.push_back(out);
    };
    emit("similarity.csv", "similarity_heatmap.svg", plot_similarity);
    emit("scores.csv", "metric_histograms.svg", plot_histograms);
    emit("scores.csv", "eol_scatter.svg", plot_eol_scatter);
    emit("summary.csv", "limited_data_curves.svg", plot_limited_curves);
    return written;
}

} // namespace fadecast
