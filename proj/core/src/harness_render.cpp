#include <cstdio>
#include <sstream>

#include "topu/experiment_harness.hpp"

namespace topu {

namespace {

constexpr double kScale = 60.0;  // pixels per meter
constexpr double kMargin = 20.0;

const char* const kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf", "#8c564b", "#e377c2"};

std::string f3(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3f", v);
    return buf;
}

}  // namespace

std::string render_svg(const SimTrace& trace, const EnvironmentMap& env, const std::vector<TaskSpec>& tasks) {
    const Rect& b = env.bounds;
    const double width = (b.max_x - b.min_x) * kScale + 2 * kMargin;
    const double height = (b.max_y - b.min_y) * kScale + 2 * kMargin;
    auto ux = [&](Point2 p) { return kMargin + (p.x - b.min_x) * kScale; };
    auto uy = [&](Point2 p) { return kMargin + (b.max_y - p.y) * kScale; };
    auto sx = [&](Point2 p) { return f3(ux(p)); };
    auto sy = [&](Point2 p) { return f3(uy(p)); };
    auto px = [&](Point2 p) { return sx(p) + "," + sy(p); };

    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << f3(width) << "\" height=\"" << f3(height)
       << "\" viewBox=\"0 0 " << f3(width) << " " << f3(height) << "\">\n";
    os << "<rect x=\"" << f3(kMargin) << "\" y=\"" << f3(kMargin) << "\" width=\"" << f3(width - 2 * kMargin)
       << "\" height=\"" << f3(height - 2 * kMargin) << "\" fill=\"white\" stroke=\"black\"/>\n";
    for (const auto& o : env.obstacles) {
        os << "<polygon class=\"obstacle\" points=\"";
        bool first = true;
        for (const auto& v : o.vertices()) {
            os << (first ? "" : " ") << px(v);
            first = false;
        }
        os << "\" fill=\"#888888\"/>\n";
    }
    for (const auto& t : tasks) {
        const double half = 0.12 * kScale;
        os << "<rect class=\"task\" x=\"" << f3(ux(t.location) - half) << "\" y=\""
           << f3(uy(t.location) - half) << "\" width=\"" << f3(2 * half) << "\" height=\"" << f3(2 * half)
           << "\" fill=\"none\" stroke=\"#000000\"/>\n";
        os << "<text x=\"" << sx(t.location) << "\" y=\"" << f3(uy(t.location) - half - 3)
           << "\" font-size=\"11\" text-anchor=\"middle\">" << t.id.value << "</text>\n";
    }
    for (std::size_t i = 0; i < trace.robots.size(); ++i) {
        const auto& r = trace.robots[i];
        const char* colour = kPalette[i % (sizeof kPalette / sizeof kPalette[0])];
        if (r.trajectory.size() >= 2) {
            os << "<polyline class=\"trajectory\" data-robot=\"" << r.id << "\" points=\"";
            for (std::size_t k = 0; k < r.trajectory.size(); ++k) os << (k ? " " : "") << px(r.trajectory[k]);
            os << "\" fill=\"none\" stroke=\"" << colour << "\" stroke-width=\"2\"/>\n";
        }
        if (!r.trajectory.empty())
            os << "<circle class=\"start\" cx=\"" << sx(r.trajectory.front()) << "\" cy=\"" << sy(r.trajectory.front())
               << "\" r=\"" << f3(kRobotRadius * kScale) << "\" fill=\"" << colour << "\"/>\n";
    }
    for (const auto& [robot, e] : trace.replans)
        os << "<circle class=\"replan\" data-robot=\"" << robot << "\" cx=\"" << sx(e.position) << "\" cy=\""
           << sy(e.position) << "\" r=\"4\" fill=\"" << (e.switched ? "#ff7f0e" : "none")
           << "\" stroke=\"#ff7f0e\"/>\n";
    os << "</svg>\n";
    return os.str();
}

}  // namespace topu
