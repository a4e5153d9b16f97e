// Generates the scenario files checked into scenarios/: a signalized ring
// town and a single straight road with an obstacle that only the navigation
// grid knows about.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "flowsim/geometry.hpp"
#include "flowsim/road_network.hpp"

using nlohmann::json;
using namespace flowsim;

namespace {

Vec2 right_of(const Vec2 &dir) { return normalized(Vec2{dir.y, -dir.x}); }

double polyline_length(const std::vector<Vec2> &pts) {
    double len = 0.0;
    for (size_t i = 1; i < pts.size(); ++i) len += distance(pts[i - 1], pts[i]);
    return len;
}

// Lane with a sideways bow at the midpoint (gives cross streets a strictly
// longer arc than the ring alternative, so shortest paths are unambiguous).
std::vector<Vec2> bowed_lane(const Vec2 &from, const Vec2 &to, double offset, double bow) {
    Vec2 r = right_of(to - from);
    Vec2 mid = (from + to) * 0.5 + r * (offset + bow);
    return {from + r * offset, mid, to + r * offset};
}

// Quarter-circle corner rounding for a left turn from in_dir to out_dir at a
// corner node, joining the two offset lane lines tangentially.
struct CornerArc {
    Vec2 start;
    Vec2 end;
    std::vector<Vec2> points;  // start..end inclusive
};

CornerArc corner_arc(const Vec2 &corner, const Vec2 &in_dir, const Vec2 &out_dir, double offset,
                     double radius, int samples = 15) {
    Vec2 p1 = corner + right_of(in_dir) * offset;   // point on incoming lane line
    Vec2 p2 = corner + right_of(out_dir) * offset;  // point on outgoing lane line
    // Intersection of the two lane lines.
    double denom = cross(in_dir, out_dir);
    double t = cross(p2 - p1, out_dir) / denom;
    Vec2 apex = p1 + in_dir * t;
    Vec2 center = apex - in_dir * radius + out_dir * radius;

    CornerArc arc;
    Vec2 r0 = right_of(in_dir) * radius;
    Vec2 r1 = right_of(out_dir) * radius;
    double a0 = std::atan2(r0.y, r0.x);
    double a1 = std::atan2(r1.y, r1.x);
    while (a1 < a0) a1 += 2.0 * kPi;  // left turn sweeps counterclockwise
    for (int k = 0; k <= samples; ++k) {
        double ang = a0 + (a1 - a0) * k / samples;
        arc.points.push_back(center + Vec2{std::cos(ang), std::sin(ang)} * radius);
    }
    arc.start = arc.points.front();
    arc.end = arc.points.back();
    return arc;
}

json lane_json(const std::vector<Vec2> &pts) {
    json arr = json::array();
    for (const Vec2 &p : pts) arr.push_back({p.x, p.y});
    return arr;
}

double seg_distance(const Vec2 &p, const Vec2 &a, const Vec2 &b) {
    return distance(p, project_on_segment(p, a, b));
}

json grid_json(Vec2 origin, double cell, int w, int h,
               const std::vector<std::pair<Vec2, Vec2>> &road_segments, double band,
               const std::vector<std::pair<Vec2, double>> &blocked_discs) {
    json rows = json::array();
    for (int y = 0; y < h; ++y) {
        std::string row(w, '0');
        for (int x = 0; x < w; ++x) {
            Vec2 c = origin + Vec2{(x + 0.5) * cell, (y + 0.5) * cell};
            bool ok = false;
            for (const auto &[a, b] : road_segments)
                if (seg_distance(c, a, b) <= band) {
                    ok = true;
                    break;
                }
            for (const auto &[center, radius] : blocked_discs)
                if (distance(c, center) <= radius) ok = false;
            if (ok) row[x] = '1';
        }
        rows.push_back(row);
    }
    return json{{"origin", {origin.x, origin.y}},
                {"cell_size", cell},
                {"width", w},
                {"height", h},
                {"passable", std::move(rows)}};
}

struct EdgeSpec {
    std::string from, to;
    std::vector<Vec2> pts;
};

json edges_json(const std::vector<EdgeSpec> &edges, double speed_limit) {
    json arr = json::array();
    for (const EdgeSpec &e : edges)
        arr.push_back({{"from", e.from},
                       {"to", e.to},
                       {"length", polyline_length(e.pts)},
                       {"speed_limit", speed_limit},
                       {"spline", lane_json(e.pts)}});
    return arr;
}

// Lane point `back` meters before the lane end (stop-line location).
Vec2 lane_point_before_end(const std::vector<Vec2> &pts, double back) {
    double want = polyline_length(pts) - back;
    double acc = 0.0;
    for (size_t i = 1; i < pts.size(); ++i) {
        double seg = distance(pts[i - 1], pts[i]);
        if (acc + seg >= want)
            return pts[i - 1] + (pts[i] - pts[i - 1]) * ((want - acc) / seg);
        acc += seg;
    }
    return pts.back();
}

// ---------------------------------------------------------------------------
// Town: one-way ring boulevard through four signalized three-way
// intersections (the mid-side nodes), with bowed two-way access streets to
// the centre.
// ---------------------------------------------------------------------------

void write_town(const std::filesystem::path &dir) {
    const double offset = 3.0;
    const double speed = 10.0;
    const double side = 160.0;
    const double corner_r = 20.0;

    const Vec2 corner_pos[] = {{0, 0}, {side, 0}, {side, side}, {0, side}};
    const Vec2 dirs[] = {{1, 0}, {0, 1}, {-1, 0}, {0, -1}};  // travel dir on side i

    struct NodeSpec {
        std::string id;
        Vec2 p;
    };
    std::vector<NodeSpec> nodes;
    for (int i = 0; i < 4; ++i) {
        nodes.push_back({"c" + std::to_string(i), corner_pos[i]});
        nodes.push_back({"m" + std::to_string(i) + "a", corner_pos[i] + dirs[i] * 60.0});
        nodes.push_back({"m" + std::to_string(i) + "b", corner_pos[i] + dirs[i] * 120.0});
    }
    nodes.push_back({"cc", {80, 80}});
    auto at = [&](const std::string &id) {
        for (const NodeSpec &n : nodes)
            if (n.id == id) return n.p;
        throw std::runtime_error("node?");
    };

    // Corner arcs belong to the incoming edge and land exactly where the
    // outgoing lane starts, so the concatenated guidance is kink-free.
    CornerArc arcs[4];
    for (int i = 0; i < 4; ++i)
        arcs[i] = corner_arc(corner_pos[i], dirs[(i + 3) % 4], dirs[i], offset, corner_r);

    std::vector<EdgeSpec> edges;
    for (int i = 0; i < 4; ++i) {
        std::string c = "c" + std::to_string(i);
        std::string ma = "m" + std::to_string(i) + "a";
        std::string mb = "m" + std::to_string(i) + "b";
        Vec2 r = right_of(dirs[i]) * offset;
        int nxt = (i + 1) % 4;
        edges.push_back({c, ma, {arcs[i].end, at(ma) + r}});
        edges.push_back({ma, mb, {at(ma) + r, at(mb) + r}});
        EdgeSpec into_corner{mb, "c" + std::to_string(nxt), {at(mb) + r}};
        for (const Vec2 &p : arcs[nxt].points) into_corner.pts.push_back(p);
        edges.push_back(std::move(into_corner));
    }
    // Two-way access streets from the signalized mids to the centre, bowed so
    // the ring is always the strictly shorter route.
    for (int i = 0; i < 4; ++i) {
        std::string ma = "m" + std::to_string(i) + "a";
        edges.push_back({ma, "cc", bowed_lane(at(ma), at("cc"), offset, 3.0)});
        edges.push_back({"cc", ma, bowed_lane(at("cc"), at(ma), offset, 3.0)});
    }

    // Lights guard the ring edges entering each m*a intersection; stop lines
    // sit 8 m before the node.
    json lights = json::array();
    for (int i = 0; i < 4; ++i) {
        int e = 3 * i;  // edge c_i -> m_ia
        Vec2 pos = lane_point_before_end(edges[e].pts, 8.0);
        json schedule = json::array();
        schedule.push_back(json::array({"Red", 25.0}));
        schedule.push_back(json::array({"Green", 60.0}));
        lights.push_back({{"position", {pos.x, pos.y}},
                          {"edge", e},
                          {"schedule", std::move(schedule)}});
    }

    // Navigation grid covers the ring band only; the access streets are
    // routable on the graph but not part of the drivable grid.
    std::vector<std::pair<Vec2, Vec2>> segments;
    for (int i = 0; i < 4; ++i) segments.emplace_back(corner_pos[i], corner_pos[(i + 1) % 4]);

    json net{{"nodes", json::array()},
             {"edges", edges_json(edges, speed)},
             {"lights", std::move(lights)},
             {"grid", grid_json({-10, -10}, 2.0, 90, 90, segments, 6.0, {})}};
    for (const NodeSpec &n : nodes)
        net["nodes"].push_back({{"id", n.id}, {"x", n.p.x}, {"y", n.p.y}});

    // Six trips tile the ring (goal of one = spawn of the next); four turn a
    // corner and meet a red phase, two run straights.
    json scenario{
        {"schema", "flowsim/1"},
        {"network", "town_network.json"},
        {"agents",
         {{{"id", 0}, {"spawn", "m0a"}, {"goal", "m1a"}, {"mode", "spline"}, {"spawn_time", 0.0}},
          {{"id", 1}, {"spawn", "m1a"}, {"goal", "m1b"}, {"mode", "spline"}, {"spawn_time", 0.0}},
          {{"id", 2}, {"spawn", "m1b"}, {"goal", "m2a"}, {"mode", "spline"}, {"spawn_time", 0.0}},
          {{"id", 3}, {"spawn", "m2a"}, {"goal", "m3a"}, {"mode", "spline"}, {"spawn_time", 0.0}},
          {{"id", 4}, {"spawn", "m3a"}, {"goal", "m3b"}, {"mode", "spline"}, {"spawn_time", 0.0}},
          {{"id", 5}, {"spawn", "m3b"}, {"goal", "m0a"}, {"mode", "spline"}, {"spawn_time", 0.0}}}},
        {"params",
         {{"dt", 0.05},
          {"duration", 60.0},
          {"seed", 42},
          {"routing", "ch"},
          {"smoothing", 5.0},
          {"grid_lookahead", 5.0},
          {"lane_half_width", 2.5},
          {"cruise_speed", 10.0}}}};

    std::ofstream(dir / "town_network.json") << net.dump(2) << "\n";
    std::ofstream(dir / "town.json") << scenario.dump(2) << "\n";
}

// ---------------------------------------------------------------------------
// Obstacle scenario: straight road; the roadblock exists as a collision disc
// and as blocked grid cells, but the lane spline runs straight through it.
// ---------------------------------------------------------------------------

void write_obstacle(const std::filesystem::path &dir) {
    const Vec2 a{0, 0}, b{150, 0};
    const Vec2 obstacle{75, 0};
    const double obstacle_radius = 1.5;
    // vehicle radius 2.25 + planning clearance margin
    const double block_radius = obstacle_radius + 2.25 + 3.0;

    std::vector<EdgeSpec> edges{{"A", "B", {a, b}}};
    json net{{"nodes",
              {{{"id", "A"}, {"x", a.x}, {"y", a.y}}, {{"id", "B"}, {"x", b.x}, {"y", b.y}}}},
             {"edges", edges_json(edges, 10.0)},
             {"lights", json::array()},
             {"grid", grid_json({-10, -14}, 2.0, 85, 14, {{a, b}}, 12.0,
                                {{obstacle, block_radius}})}};

    json scenario{
        {"schema", "flowsim/1"},
        {"network", "obstacle_network.json"},
        {"agents",
         {{{"id", 0}, {"spawn", "A"}, {"goal", "B"}, {"mode", "spline"}, {"spawn_time", 0.0}}}},
        {"obstacles", {{{"x", obstacle.x}, {"y", obstacle.y}, {"radius", obstacle_radius}}}},
        {"params",
         {{"dt", 0.05},
          {"duration", 60.0},
          {"seed", 42},
          {"routing", "ch"},
          {"smoothing", 5.0},
          {"grid_lookahead", 5.0},
          {"lane_half_width", 2.5},
          {"cruise_speed", 10.0}}}};

    std::ofstream(dir / "obstacle_network.json") << net.dump(2) << "\n";
    std::ofstream(dir / "obstacle.json") << scenario.dump(2) << "\n";
}

}  // namespace

int main(int argc, char **argv) {
    CLI::App app{"flowsim scenario generator"};
    std::string out = "scenarios";
    app.add_option("--out", out, "Output directory");
    CLI11_PARSE(app, argc, argv);

    std::filesystem::create_directories(out);
    write_town(out);
    write_obstacle(out);

    // Generated files must load cleanly.
    for (const char *f : {"town_network.json", "obstacle_network.json"})
        load_network((std::filesystem::path(out) / f).string());
    std::cout << "wrote town + obstacle scenarios to " << out << "\n";
    return 0;
}
