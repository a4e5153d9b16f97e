#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "flowsim/geometry.hpp"
#include "flowsim/spline.hpp"

namespace flowsim {

using NodeId = int;

enum class LightColor { Red, Green };

const char *to_string(LightColor c);

struct LightPhase {
    LightColor color = LightColor::Red;
    double duration = 0.0;  // seconds, > 0
};

struct TrafficLight {
    Vec2 position;
    int edge = -1;  // index into RoadNetwork::edges
    std::vector<LightPhase> schedule;

    double cycle_length() const;
    // Color of the cyclic schedule at time t >= 0. A phase boundary belongs
    // to the later phase.
    LightColor phase_at(double t) const;
};

struct GridCell {
    int x = 0;
    int y = 0;
    bool operator==(const GridCell &o) const { return x == o.x && y == o.y; }
};

/// Axis-aligned grid of passable/impassable square cells. Row-major storage,
/// row 0 at the lowest y. A point on a cell boundary belongs to the
/// higher-index cell.
class OccupancyGrid {
  public:
    OccupancyGrid() = default;
    OccupancyGrid(Vec2 origin, double cell_size, int width, int height,
                  std::vector<std::uint8_t> passable);

    Vec2 origin() const { return origin_; }
    double cell_size() const { return cell_size_; }
    int width() const { return width_; }
    int height() const { return height_; }

    bool in_bounds(int cx, int cy) const {
        return cx >= 0 && cx < width_ && cy >= 0 && cy < height_;
    }
    // False outside the grid.
    bool passable(int cx, int cy) const {
        return in_bounds(cx, cy) && cells_[static_cast<size_t>(cy) * width_ + cx] != 0;
    }
    void set_passable(int cx, int cy, bool v);

    GridCell cell_at(const Vec2 &p) const;
    Vec2 cell_center(GridCell c) const;
    bool point_passable(const Vec2 &p) const {
        GridCell c = cell_at(p);
        return passable(c.x, c.y);
    }

    const std::vector<std::uint8_t> &cells() const { return cells_; }
    bool operator==(const OccupancyGrid &o) const;

  private:
    Vec2 origin_;
    double cell_size_ = 1.0;
    int width_ = 0;
    int height_ = 0;
    std::vector<std::uint8_t> cells_;
};

struct Node {
    std::string id;
    Vec2 pos;
};

struct Edge {
    NodeId from = -1;
    NodeId to = -1;
    double length = 0.0;       // meters, > 0; graph weight
    double speed_limit = 0.0;  // m/s, > 0
    Spline lane;               // lane geometry
};

/// The static world: lane graph, lane splines, occupancy grid, traffic
/// lights. Immutable after load; safe for concurrent reads.
struct RoadNetwork {
    std::vector<Node> nodes;
    std::vector<Edge> edges;
    std::vector<TrafficLight> lights;
    OccupancyGrid grid;

    std::optional<NodeId> find_node(const std::string &id) const;
    // Throws ValidationError when the id is unknown.
    NodeId node_index(const std::string &id) const;

    // Lowest-weight edge from -> to, or -1.
    int edge_between(NodeId from, NodeId to) const;

    // Throws ValidationError on any violated invariant. Edge length must be
    // within 10% of its lane spline's arc length.
    void validate() const;

    void rebuild_index();

    bool operator==(const RoadNetwork &o) const;

  private:
    std::unordered_map<std::string, NodeId> index_;
};

RoadNetwork parse_network(const std::string &json_text);
RoadNetwork load_network(const std::string &path);
std::string network_to_json(const RoadNetwork &net);
void save_network(const RoadNetwork &net, const std::string &path);

}  // namespace flowsim
