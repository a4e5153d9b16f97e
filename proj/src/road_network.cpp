#include "flowsim/road_network.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "flowsim/errors.hpp"

namespace flowsim {

using nlohmann::json;

const char *to_string(LightColor c) { return c == LightColor::Red ? "Red" : "Green"; }

double TrafficLight::cycle_length() const {
    double total = 0.0;
    for (const LightPhase &p : schedule) total += p.duration;
    return total;
}

LightColor TrafficLight::phase_at(double t) const {
    double cycle = cycle_length();
    double u = std::fmod(t, cycle);
    if (u < 0.0) u += cycle;
    double end = 0.0;
    for (const LightPhase &p : schedule) {
        end += p.duration;
        if (u < end) return p.color;
    }
    return schedule.back().color;
}

OccupancyGrid::OccupancyGrid(Vec2 origin, double cell_size, int width, int height,
                             std::vector<std::uint8_t> passable)
    : origin_(origin), cell_size_(cell_size), width_(width), height_(height),
      cells_(std::move(passable)) {
    if (cell_size_ <= 0.0) throw ValidationError("grid cell_size must be > 0");
    if (width_ < 0 || height_ < 0) throw ValidationError("grid dimensions must be >= 0");
    if (cells_.size() != static_cast<size_t>(width_) * static_cast<size_t>(height_))
        throw ValidationError("grid passable array does not match width*height");
}

void OccupancyGrid::set_passable(int cx, int cy, bool v) {
    if (!in_bounds(cx, cy)) return;
    cells_[static_cast<size_t>(cy) * width_ + cx] = v ? 1 : 0;
}

GridCell OccupancyGrid::cell_at(const Vec2 &p) const {
    // floor maps a boundary point to the higher-index cell.
    return {static_cast<int>(std::floor((p.x - origin_.x) / cell_size_)),
            static_cast<int>(std::floor((p.y - origin_.y) / cell_size_))};
}

Vec2 OccupancyGrid::cell_center(GridCell c) const {
    return {origin_.x + (c.x + 0.5) * cell_size_, origin_.y + (c.y + 0.5) * cell_size_};
}

bool OccupancyGrid::operator==(const OccupancyGrid &o) const {
    return origin_ == o.origin_ && cell_size_ == o.cell_size_ && width_ == o.width_ &&
           height_ == o.height_ && cells_ == o.cells_;
}

std::optional<NodeId> RoadNetwork::find_node(const std::string &id) const {
    auto it = index_.find(id);
    if (it == index_.end()) return std::nullopt;
    return it->second;
}

NodeId RoadNetwork::node_index(const std::string &id) const {
    auto n = find_node(id);
    if (!n) throw ValidationError("unknown node \"" + id + "\"");
    return *n;
}

int RoadNetwork::edge_between(NodeId from, NodeId to) const {
    int best = -1;
    for (size_t i = 0; i < edges.size(); ++i) {
        if (edges[i].from != from || edges[i].to != to) continue;
        if (best < 0 || edges[i].length < edges[best].length) best = static_cast<int>(i);
    }
    return best;
}

void RoadNetwork::rebuild_index() {
    index_.clear();
    for (size_t i = 0; i < nodes.size(); ++i) {
        if (!index_.emplace(nodes[i].id, static_cast<NodeId>(i)).second)
            throw ValidationError("duplicate node id \"" + nodes[i].id + "\"");
    }
}

void RoadNetwork::validate() const {
    for (size_t i = 0; i < edges.size(); ++i) {
        const Edge &e = edges[i];
        if (e.from < 0 || e.from >= static_cast<NodeId>(nodes.size()) || e.to < 0 ||
            e.to >= static_cast<NodeId>(nodes.size()))
            throw ValidationError("edge " + std::to_string(i) + " references a missing node");
        if (e.length <= 0.0)
            throw ValidationError("edge " + std::to_string(i) + " has non-positive length");
        if (e.speed_limit <= 0.0)
            throw ValidationError("edge " + std::to_string(i) + " has non-positive speed limit");
        double arc = e.lane.total_length();
        if (std::abs(e.length - arc) > 0.10 * arc) {
            std::ostringstream msg;
            msg << "edge " << i << " (" << nodes[e.from].id << "->" << nodes[e.to].id
                << ") length " << e.length << " deviates more than 10% from spline arc length "
                << arc;
            throw ValidationError(msg.str());
        }
    }
    for (size_t i = 0; i < lights.size(); ++i) {
        const TrafficLight &l = lights[i];
        if (l.edge < 0 || l.edge >= static_cast<int>(edges.size()))
            throw ValidationError("light " + std::to_string(i) + " references a missing edge");
        if (l.schedule.empty())
            throw ValidationError("light " + std::to_string(i) + " has an empty schedule");
        for (const LightPhase &p : l.schedule)
            if (p.duration <= 0.0)
                throw ValidationError("light " + std::to_string(i) +
                                      " has a non-positive phase duration");
    }
}

bool RoadNetwork::operator==(const RoadNetwork &o) const {
    if (nodes.size() != o.nodes.size() || edges.size() != o.edges.size() ||
        lights.size() != o.lights.size() || !(grid == o.grid))
        return false;
    for (size_t i = 0; i < nodes.size(); ++i)
        if (nodes[i].id != o.nodes[i].id || !(nodes[i].pos == o.nodes[i].pos)) return false;
    for (size_t i = 0; i < edges.size(); ++i) {
        const Edge &a = edges[i], &b = o.edges[i];
        if (a.from != b.from || a.to != b.to || a.length != b.length ||
            a.speed_limit != b.speed_limit || !(a.lane == b.lane))
            return false;
    }
    for (size_t i = 0; i < lights.size(); ++i) {
        const TrafficLight &a = lights[i], &b = o.lights[i];
        if (!(a.position == b.position) || a.edge != b.edge ||
            a.schedule.size() != b.schedule.size())
            return false;
        for (size_t j = 0; j < a.schedule.size(); ++j)
            if (a.schedule[j].color != b.schedule[j].color ||
                a.schedule[j].duration != b.schedule[j].duration)
                return false;
    }
    return true;
}

// ---------------------------------------------------------------------------
// JSON serialization
// ---------------------------------------------------------------------------

static Vec2 parse_point(const json &j, const char *what) {
    if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number())
        throw ParseError(std::string(what) + " must be a [x, y] pair");
    return {j[0].get<double>(), j[1].get<double>()};
}

RoadNetwork parse_network(const std::string &json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::exception &e) {
        throw ParseError(std::string("network JSON: ") + e.what());
    }
    if (!j.is_object()) throw ParseError("network file must be a JSON object");

    RoadNetwork net;
    try {
        for (const json &jn : j.at("nodes")) {
            Node n;
            n.id = jn.at("id").get<std::string>();
            n.pos = {jn.at("x").get<double>(), jn.at("y").get<double>()};
            net.nodes.push_back(std::move(n));
        }
        net.rebuild_index();

        for (const json &je : j.at("edges")) {
            Edge e;
            std::string from = je.at("from").get<std::string>();
            std::string to = je.at("to").get<std::string>();
            auto fi = net.find_node(from);
            auto ti = net.find_node(to);
            if (!fi) throw ValidationError("edge references undefined node \"" + from + "\"");
            if (!ti) throw ValidationError("edge references undefined node \"" + to + "\"");
            e.from = *fi;
            e.to = *ti;
            e.length = je.at("length").get<double>();
            e.speed_limit = je.at("speed_limit").get<double>();
            std::vector<Vec2> pts;
            for (const json &jp : je.at("spline")) pts.push_back(parse_point(jp, "spline point"));
            e.lane = Spline(std::move(pts));
            net.edges.push_back(std::move(e));
        }

        if (j.contains("lights")) {
            for (const json &jl : j.at("lights")) {
                TrafficLight l;
                l.position = parse_point(jl.at("position"), "light position");
                l.edge = jl.at("edge").get<int>();
                for (const json &jp : jl.at("schedule")) {
                    if (!jp.is_array() || jp.size() != 2)
                        throw ParseError("light phase must be [color, duration]");
                    LightPhase p;
                    std::string c = jp[0].get<std::string>();
                    if (c == "Red")
                        p.color = LightColor::Red;
                    else if (c == "Green")
                        p.color = LightColor::Green;
                    else
                        throw ParseError("unknown light color \"" + c + "\"");
                    p.duration = jp[1].get<double>();
                    l.schedule.push_back(p);
                }
                net.lights.push_back(std::move(l));
            }
        }

        const json &jg = j.at("grid");
        Vec2 origin = parse_point(jg.at("origin"), "grid origin");
        double cell = jg.at("cell_size").get<double>();
        int w = jg.at("width").get<int>();
        int h = jg.at("height").get<int>();
        std::vector<std::uint8_t> cells;
        cells.reserve(static_cast<size_t>(w) * h);
        const json &rows = jg.at("passable");
        if (!rows.is_array() || rows.size() != static_cast<size_t>(h))
            throw ParseError("grid passable must have one string row per grid row");
        for (const json &jr : rows) {
            std::string row = jr.get<std::string>();
            if (row.size() != static_cast<size_t>(w))
                throw ParseError("grid row length does not match width");
            for (char c : row) {
                if (c != '0' && c != '1') throw ParseError("grid rows must contain only 0/1");
                cells.push_back(c == '1' ? 1 : 0);
            }
        }
        net.grid = OccupancyGrid(origin, cell, w, h, std::move(cells));
    } catch (const json::exception &e) {
        throw ParseError(std::string("network JSON: ") + e.what());
    }

    net.validate();
    return net;
}

RoadNetwork load_network(const std::string &path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open network file: " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_network(buf.str());
}

std::string network_to_json(const RoadNetwork &net) {
    json j;
    j["nodes"] = json::array();
    for (const Node &n : net.nodes)
        j["nodes"].push_back({{"id", n.id}, {"x", n.pos.x}, {"y", n.pos.y}});
    j["edges"] = json::array();
    for (const Edge &e : net.edges) {
        json spline = json::array();
        for (const Vec2 &p : e.lane.points()) spline.push_back({p.x, p.y});
        j["edges"].push_back({{"from", net.nodes[e.from].id},
                              {"to", net.nodes[e.to].id},
                              {"length", e.length},
                              {"speed_limit", e.speed_limit},
                              {"spline", std::move(spline)}});
    }
    j["lights"] = json::array();
    for (const TrafficLight &l : net.lights) {
        json sched = json::array();
        for (const LightPhase &p : l.schedule)
            sched.push_back({to_string(p.color), p.duration});
        j["lights"].push_back({{"position", {l.position.x, l.position.y}},
                               {"edge", l.edge},
                               {"schedule", std::move(sched)}});
    }
    const OccupancyGrid &g = net.grid;
    json rows = json::array();
    for (int y = 0; y < g.height(); ++y) {
        std::string row(static_cast<size_t>(g.width()), '0');
        for (int x = 0; x < g.width(); ++x)
            if (g.passable(x, y)) row[x] = '1';
        rows.push_back(std::move(row));
    }
    j["grid"] = {{"origin", {g.origin().x, g.origin().y}},
                 {"cell_size", g.cell_size()},
                 {"width", g.width()},
                 {"height", g.height()},
                 {"passable", std::move(rows)}};
    return j.dump(2);
}

void save_network(const RoadNetwork &net, const std::string &path) {
    std::ofstream out(path);
    if (!out) throw ParseError("cannot write network file: " + path);
    out << network_to_json(net) << "\n";
}

}  // namespace flowsim
