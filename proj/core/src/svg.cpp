#include "tsem/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "tsem/errors.hpp"

namespace tsem {

namespace {

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return buf;
}

std::string escape_xml(const std::string& s) {
    std::string out;
    for (char c : s) {
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

const char* kPalette[] = {"#1f6fb2", "#d1495b", "#3a7d44", "#8e5fa8", "#c77f1a",
                          "#15918a", "#6b6b6b", "#a8323e", "#2b4a78", "#7a9a01"};

std::string heat_color(double v) {
    // 0 maps to near-white, 1 to a saturated red.
    v = std::clamp(v, 0.0, 1.0);
    int r = static_cast<int>(255.0 - v * 60.0);
    int g = static_cast<int>(245.0 - v * 200.0);
    int b = static_cast<int>(240.0 - v * 210.0);
    char buf[16];
    std::snprintf(buf, sizeof(buf), "#%02x%02x%02x", r, g, b);
    return buf;
}

struct Frame {
    double x0, y0, w, h;      // pixel box of the plotting area
    double xmin, xmax, ymin, ymax;
    double px(double x) const { return x0 + (x - xmin) / (xmax - xmin) * w; }
    double py(double y) const { return y0 + h - (y - ymin) / (ymax - ymin) * h; }
};

void draw_axes(SvgDocument& doc, const Frame& f, const std::string& xlabel,
               const std::string& ylabel) {
    doc.line(f.x0, f.y0 + f.h, f.x0 + f.w, f.y0 + f.h, "#333333");
    doc.line(f.x0, f.y0, f.x0, f.y0 + f.h, "#333333");
    for (int i = 0; i <= 4; ++i) {
        double xv = f.xmin + (f.xmax - f.xmin) * i / 4.0;
        double yv = f.ymin + (f.ymax - f.ymin) * i / 4.0;
        doc.line(f.px(xv), f.y0 + f.h, f.px(xv), f.y0 + f.h + 4, "#333333");
        doc.text(f.px(xv), f.y0 + f.h + 16, fmt(xv), 10, "middle");
        doc.line(f.x0 - 4, f.py(yv), f.x0, f.py(yv), "#333333");
        doc.text(f.x0 - 8, f.py(yv) + 3, fmt(yv), 10, "end");
    }
    doc.text(f.x0 + f.w / 2, f.y0 + f.h + 32, xlabel, 12, "middle");
    doc.text(f.x0 - 40, f.y0 - 8, ylabel, 12, "start");
}

}  // namespace

SvgDocument::SvgDocument(double width, double height) : width_(width), height_(height) {}

void SvgDocument::rect(double x, double y, double w, double h, const std::string& fill,
                       const std::string& stroke) {
    body_ += "<rect x=\"" + fmt(x) + "\" y=\"" + fmt(y) + "\" width=\"" + fmt(w) +
             "\" height=\"" + fmt(h) + "\" fill=\"" + fill + "\" stroke=\"" + stroke + "\"/>\n";
}

void SvgDocument::line(double x1, double y1, double x2, double y2, const std::string& stroke,
                       double width, bool dashed) {
    body_ += "<line x1=\"" + fmt(x1) + "\" y1=\"" + fmt(y1) + "\" x2=\"" + fmt(x2) +
             "\" y2=\"" + fmt(y2) + "\" stroke=\"" + stroke + "\" stroke-width=\"" + fmt(width) + "\"";
    if (dashed) body_ += " stroke-dasharray=\"6 4\"";
    body_ += "/>\n";
}

void SvgDocument::circle(double cx, double cy, double r, const std::string& fill) {
    body_ += "<circle cx=\"" + fmt(cx) + "\" cy=\"" + fmt(cy) + "\" r=\"" + fmt(r) +
             "\" fill=\"" + fill + "\"/>\n";
}

void SvgDocument::text(double x, double y, const std::string& content, double size,
                       const std::string& anchor) {
    body_ += "<text x=\"" + fmt(x) + "\" y=\"" + fmt(y) + "\" font-size=\"" + fmt(size) +
             "\" font-family=\"sans-serif\" text-anchor=\"" + anchor + "\">" +
             escape_xml(content) + "</text>\n";
}

void SvgDocument::polyline(const std::vector<std::pair<double, double>>& pts,
                           const std::string& stroke, double width) {
    body_ += "<polyline fill=\"none\" stroke=\"" + stroke + "\" stroke-width=\"" + fmt(width) +
             "\" points=\"";
    for (const auto& [x, y] : pts) body_ += fmt(x) + "," + fmt(y) + " ";
    body_ += "\"/>\n";
}

std::string SvgDocument::str() const {
    return "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fmt(width_) + "\" height=\"" +
           fmt(height_) + "\" viewBox=\"0 0 " + fmt(width_) + " " + fmt(height_) + "\">\n" +
           "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n" + body_ + "</svg>\n";
}

void SvgDocument::save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw DataError("svg: cannot write " + path);
    out << str();
}

void render_ad_ai_scatter(const std::vector<ScatterPoint>& points, const std::string& path) {
    SvgDocument doc(560, 420);
    Frame f{70, 40, 330, 310, 0, 100, 0, 100};
    draw_axes(doc, f, "average drop (%)", "average increase (%)");
    doc.text(f.x0 + f.w / 2, 24, "faithfulness", 14, "middle");
    for (std::size_t i = 0; i < points.size(); ++i) {
        const auto& p = points[i];
        const char* color = kPalette[i % 10];
        doc.circle(f.px(std::clamp(p.x, 0.0, 100.0)), f.py(std::clamp(p.y, 0.0, 100.0)), 4, color);
        doc.circle(420, 50 + 18.0 * i, 4, color);
        doc.text(430, 54 + 18.0 * i, p.label, 10);
    }
    doc.save(path);
}

void render_curves(const std::vector<NamedCurve>& curves, const std::string& title,
                   const std::string& path) {
    SvgDocument doc(620, 420);
    Frame f{70, 40, 360, 310, 0, 1, 0, 1};
    draw_axes(doc, f, "fraction perturbed", "class probability");
    doc.text(f.x0 + f.w / 2, 24, title, 14, "middle");
    for (std::size_t i = 0; i < curves.size(); ++i) {
        const auto& c = curves[i];
        const char* color = kPalette[i % 10];
        std::vector<std::pair<double, double>> pts;
        pts.reserve(c.points.size());
        for (const auto& p : c.points) {
            pts.emplace_back(f.px(p.fraction), f.py(std::clamp(p.prob, 0.0, 1.0)));
        }
        doc.polyline(pts, color);
        doc.line(450, 50 + 18.0 * i, 470, 50 + 18.0 * i, color, 2);
        doc.text(476, 54 + 18.0 * i, c.label, 10);
    }
    doc.save(path);
}

void render_causality_bars(const std::vector<BarDatum>& bars, double threshold,
                           const std::string& path) {
    double plot_w = std::max(320.0, 60.0 * bars.size());
    SvgDocument doc(plot_w + 140, 440);
    Frame f{70, 40, plot_w, 300, 0, 1, 0, 1};
    doc.line(f.x0, f.y0, f.x0, f.y0 + f.h, "#333333");
    doc.line(f.x0, f.y0 + f.h, f.x0 + f.w, f.y0 + f.h, "#333333");
    for (int i = 0; i <= 4; ++i) {
        double yv = i / 4.0;
        doc.line(f.x0 - 4, f.py(yv), f.x0, f.py(yv), "#333333");
        doc.text(f.x0 - 8, f.py(yv) + 3, fmt(yv * 100.0), 10, "end");
    }
    doc.text(f.x0 - 50, f.y0 - 8, "non-causal records (%)", 12);
    double slot = f.w / std::max<std::size_t>(bars.size(), 1);
    for (std::size_t i = 0; i < bars.size(); ++i) {
        double cx = f.x0 + slot * (i + 0.5);
        double fp = std::clamp(bars[i].feature_prop, 0.0, 1.0);
        double tp = std::clamp(bars[i].time_prop, 0.0, 1.0);
        doc.rect(cx - 18, f.py(fp), 15, f.y0 + f.h - f.py(fp), kPalette[0]);
        doc.rect(cx + 3, f.py(tp), 15, f.y0 + f.h - f.py(tp), kPalette[1]);
        doc.text(cx, f.y0 + f.h + 14, bars[i].label, 9, "middle");
    }
    doc.line(f.x0, f.py(threshold), f.x0 + f.w, f.py(threshold), "#a8323e", 1.5, true);
    doc.text(f.x0 + f.w + 6, f.py(threshold) + 4, fmt(threshold * 100.0) + "% line", 10);
    doc.circle(f.x0 + f.w + 12, f.y0 + 10, 4, kPalette[0]);
    doc.text(f.x0 + f.w + 20, f.y0 + 14, "feature axis", 10);
    doc.circle(f.x0 + f.w + 12, f.y0 + 28, 4, kPalette[1]);
    doc.text(f.x0 + f.w + 20, f.y0 + 32, "time axis", 10);
    doc.save(path);
}

void render_heatmap(const ExplanationMap& map, const std::string& title, const std::string& path) {
    auto normalized = normalize_map(map, MapNormalization::MinMax);
    double cell_w = std::max(2.0, std::min(12.0, 760.0 / map.seq_length));
    double cell_h = std::max(12.0, std::min(40.0, 300.0 / map.n_features));
    double plot_w = cell_w * map.seq_length;
    double plot_h = cell_h * map.n_features;
    SvgDocument doc(plot_w + 120, plot_h + 100);
    doc.text(60 + plot_w / 2, 24, title, 14, "middle");
    for (int row = 0; row < map.n_features; ++row) {
        for (int col = 0; col < map.seq_length; ++col) {
            doc.rect(60 + col * cell_w, 40 + row * cell_h, cell_w, cell_h,
                     heat_color(normalized.at(row, col)));
        }
        doc.text(52, 40 + row * cell_h + cell_h / 2 + 4, "f" + std::to_string(row), 10, "end");
    }
    doc.text(60, 40 + plot_h + 16, "t=0", 10);
    doc.text(60 + plot_w, 40 + plot_h + 16, "t=" + std::to_string(map.seq_length - 1), 10, "end");
    doc.save(path);
}

}  // namespace tsem
