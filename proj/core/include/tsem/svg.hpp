#pragma once

#include <string>
#include <vector>

#include "tsem/attribution.hpp"
#include "tsem/metrics.hpp"

namespace tsem {

// Minimal SVG document builder; coordinates are raw pixels.
class SvgDocument {
public:
    SvgDocument(double width, double height);

    void rect(double x, double y, double w, double h, const std::string& fill,
              const std::string& stroke = "none");
    void line(double x1, double y1, double x2, double y2, const std::string& stroke,
              double width = 1.0, bool dashed = false);
    void circle(double cx, double cy, double r, const std::string& fill);
    void text(double x, double y, const std::string& content, double size = 12.0,
              const std::string& anchor = "start");
    void polyline(const std::vector<std::pair<double, double>>& pts, const std::string& stroke,
                  double width = 1.5);

    std::string str() const;
    void save(const std::string& path) const;

private:
    double width_, height_;
    std::string body_;
};

struct ScatterPoint {
    std::string label;
    double x = 0.0;  // average drop
    double y = 0.0;  // average increase
};

struct BarDatum {
    std::string label;
    double feature_prop = 0.0;
    double time_prop = 0.0;
};

struct NamedCurve {
    std::string label;
    std::vector<CurvePoint> points;
};

void render_ad_ai_scatter(const std::vector<ScatterPoint>& points, const std::string& path);
void render_curves(const std::vector<NamedCurve>& curves, const std::string& title,
                   const std::string& path);
void render_causality_bars(const std::vector<BarDatum>& bars, double threshold,
                           const std::string& path);
void render_heatmap(const ExplanationMap& map, const std::string& title, const std::string& path);

}  // namespace tsem
