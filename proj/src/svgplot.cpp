#include "situ3d/svgplot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

namespace situ3d::cli {

namespace {

constexpr double kScale = 90.0; // pixels per meter
constexpr double kMargin = 40.0;

std::string fmt(double v) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return buf;
}

// Seven-step viridis ramp, interpolated.
std::string viridis(double t) {
    static const double stops[7][3] = {{68, 1, 84},    {70, 50, 127},  {54, 92, 141},
                                       {39, 127, 143}, {31, 161, 135}, {74, 194, 109},
                                       {253, 231, 37}};
    t = std::clamp(t, 0.0, 1.0) * 6.0;
    const int lo = std::min(5, static_cast<int>(t));
    const double f = t - lo;
    char buf[32];
    std::snprintf(buf, sizeof(buf), "rgb(%d,%d,%d)",
                  static_cast<int>(stops[lo][0] + f * (stops[lo + 1][0] - stops[lo][0])),
                  static_cast<int>(stops[lo][1] + f * (stops[lo + 1][1] - stops[lo][1])),
                  static_cast<int>(stops[lo][2] + f * (stops[lo + 1][2] - stops[lo][2])));
    return buf;
}

struct Mapper {
    double room_l;
    double offset_x;
    double px(double x) const { return kMargin + offset_x + x * kScale; }
    // Flip y so +y points up in the image.
    double py(double y) const { return kMargin + (room_l - y) * kScale; }
};

void draw_arrow(std::string& svg, const Mapper& m, const geom::SituationVector& s,
                const char* css_class, const char* color) {
    const double len = 0.6;
    const geom::Vec3 h = s.heading();
    const double x0 = s.pos().x(), y0 = s.pos().y();
    const double x1 = x0 + len * h.x(), y1 = y0 + len * h.y();
    // head wings
    const double wing = 0.18;
    const double ang = std::atan2(h.y(), h.x());
    const double ax = x1 - wing * std::cos(ang - 0.5), ay = y1 - wing * std::sin(ang - 0.5);
    const double bx = x1 - wing * std::cos(ang + 0.5), by = y1 - wing * std::sin(ang + 0.5);
    svg += "  <g class=\"arrow " + std::string(css_class) + "\" stroke=\"" + color +
           "\" stroke-width=\"3\" fill=\"none\">\n";
    svg += "    <line x1=\"" + fmt(m.px(x0)) + "\" y1=\"" + fmt(m.py(y0)) + "\" x2=\"" +
           fmt(m.px(x1)) + "\" y2=\"" + fmt(m.py(y1)) + "\"/>\n";
    svg += "    <polyline points=\"" + fmt(m.px(ax)) + "," + fmt(m.py(ay)) + " " +
           fmt(m.px(x1)) + "," + fmt(m.py(y1)) + " " + fmt(m.px(bx)) + "," + fmt(m.py(by)) +
           "\"/>\n";
    svg += "    <circle cx=\"" + fmt(m.px(x0)) + "\" cy=\"" + fmt(m.py(y0)) +
           "\" r=\"4\" fill=\"" + color + "\" stroke=\"none\"/>\n";
    svg += "  </g>\n";
}

void draw_tokens(std::string& svg, const Mapper& m, const PlotInputs& in,
                 const Eigen::VectorXd& act, const char* css_class) {
    const double lo = act.minCoeff();
    const double hi = act.maxCoeff();
    const double span = std::max(hi - lo, 1e-12);
    svg += "  <g class=\"" + std::string(css_class) + "\" stroke=\"none\">\n";
    for (Eigen::Index i = 0; i < in.anchors->rows() && i < act.size(); ++i) {
        if (act(i) == 0.0) continue; // padding tokens
        const double t = (act(i) - lo) / span;
        svg += "    <circle class=\"token\" cx=\"" + fmt(m.px((*in.anchors)(i, 0))) +
               "\" cy=\"" + fmt(m.py((*in.anchors)(i, 1))) + "\" r=\"5\" fill=\"" + viridis(t) +
               "\" fill-opacity=\"0.75\"/>\n";
    }
    svg += "  </g>\n";
}

} // namespace

std::string render_scene_svg(const PlotInputs& inputs) {
    if (inputs.scene == nullptr || inputs.episode == nullptr)
        throw ConfigError("plot needs a scene and an episode");
    const scene::Scene& sc = *inputs.scene;
    const bool heat = inputs.anchors != nullptr && inputs.activation_before.has_value() &&
                      inputs.activation_after.has_value();
    const int panels = heat ? 2 : 1;
    const double panel_w = sc.room_w * kScale + kMargin;
    const double width = panel_w * panels + kMargin;
    const double height = sc.room_l * kScale + 2 * kMargin + 60.0;

    std::string svg;
    svg += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fmt(width) + "\" height=\"" +
           fmt(height) + "\" viewBox=\"0 0 " + fmt(width) + " " + fmt(height) + "\">\n";
    svg += "  <rect x=\"0\" y=\"0\" width=\"" + fmt(width) + "\" height=\"" + fmt(height) +
           "\" fill=\"#fafafa\"/>\n";

    for (int panel = 0; panel < panels; ++panel) {
        const Mapper m{sc.room_l, panel * panel_w};
        svg += "  <rect class=\"room\" x=\"" + fmt(m.px(0)) + "\" y=\"" + fmt(m.py(sc.room_l)) +
               "\" width=\"" + fmt(sc.room_w * kScale) + "\" height=\"" +
               fmt(sc.room_l * kScale) + "\" fill=\"#ffffff\" stroke=\"#333333\" stroke-width=\"2\"/>\n";
        for (const auto& obj : sc.objects) {
            const auto corners = obj.footprint_corners();
            std::string points;
            for (const auto& c : corners)
                points += fmt(m.px(c.x())) + "," + fmt(m.py(c.y())) + " ";
            const geom::Vec3 rgb = scene::color_values()[static_cast<std::size_t>(obj.color)];
            char fill[32];
            std::snprintf(fill, sizeof(fill), "rgb(%d,%d,%d)", static_cast<int>(rgb.x() * 255),
                          static_cast<int>(rgb.y() * 255), static_cast<int>(rgb.z() * 255));
            svg += "  <polygon class=\"object\" points=\"" + points + "\" fill=\"" + fill +
                   "\" fill-opacity=\"0.6\" stroke=\"#222222\" stroke-width=\"1\"/>\n";
        }
        if (heat) {
            draw_tokens(svg, m, inputs,
                        panel == 0 ? *inputs.activation_before : *inputs.activation_after,
                        panel == 0 ? "activation-before" : "activation-after");
        }
        draw_arrow(svg, m, inputs.episode->gt, "gt", "#cc2222");
        if (inputs.prediction.has_value())
            draw_arrow(svg, m, *inputs.prediction, "pred", "#2244cc");
    }

    auto escape = [](const std::string& s) {
        std::string out;
        for (const char c : s) {
            if (c == '&') out += "&amp;";
            else if (c == '<') out += "&lt;";
            else if (c == '>') out += "&gt;";
            else out += c;
        }
        return out;
    };
    const double ty = sc.room_l * kScale + kMargin + 24.0;
    svg += "  <text x=\"" + fmt(kMargin) + "\" y=\"" + fmt(ty) +
           "\" font-family=\"sans-serif\" font-size=\"14\">" +
           escape(inputs.episode->situation) + "</text>\n";
    svg += "  <text x=\"" + fmt(kMargin) + "\" y=\"" + fmt(ty + 20.0) +
           "\" font-family=\"sans-serif\" font-size=\"14\">" + escape(inputs.episode->question) +
           " (answer: " + escape(inputs.episode->answer) + ")</text>\n";
    svg += "</svg>\n";
    return svg;
}

void write_svg(const std::string& path, const std::string& svg) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open svg for writing: " + path);
    out << svg;
    if (!out) throw IoError("failed writing svg: " + path);
}

} // namespace situ3d::cli
