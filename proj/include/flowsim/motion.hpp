#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "flowsim/geometry.hpp"
#include "flowsim/road_network.hpp"
#include "flowsim/spline.hpp"

namespace flowsim {

struct VehicleState {
    Vec2 position;
    double heading = 0.0;   // radians
    double speed = 0.0;     // m/s, >= 0
    double steering = 0.0;  // normalized, [-1, 1]
    double wheelbase = 2.8; // meters, > 0
};

struct ControlLimits {
    double max_accel = 3.0;          // m/s^2
    double max_decel = 5.0;          // m/s^2 (braking magnitude)
    double max_steer_angle = 35.0;   // degrees; steering +-1 maps to +-this
    double max_curvature = 0.5;      // 1/m; binding bound is the smaller of
                                     // this and tan(max_steer_angle)/wheelbase
};

struct SteeringConfig {
    double smoothing = 15.0;         // meters; lookahead scale along the tangent
    double full_lock_angle = 90.0;   // degrees mapped to steering 1
};

// A path orders states spatially; a trajectory additionally fixes timing.
using Path = std::vector<Vec2>;

struct TrajectoryPoint {
    double t = 0.0;
    Vec2 position;
    double speed = 0.0;
};
using Trajectory = std::vector<TrajectoryPoint>;

// --------------------------------------------------------------------------
// Vehicle model and steering
// --------------------------------------------------------------------------

// Kinematic bicycle step. Curvature is capped at
// min(tan(max_steer_angle)/wheelbase, max_curvature); negative throttle
// scales max_decel. Speed never drops below zero; the vehicle cannot rotate
// in place.
VehicleState kinematic_step(const VehicleState &s, double throttle, double steering,
                            const ControlLimits &limits, double dt);

// Spline-following steering: project the vehicle center onto the curve, push
// the (normalized, smoothing-scaled) tangent out from the vehicle, re-project
// that endpoint onto the curve, and convert the signed angle toward the
// resulting point from (-90, 90) degrees into a steering command in (-1, 1).
double spline_steering(const VehicleState &s, const Spline &spline, const SteeringConfig &cfg);

// Steering toward the point `lookahead` meters further along the guidance,
// with the same angle-to-steering map as spline_steering.
double pure_pursuit_steering(const VehicleState &s, const Spline &guidance, double lookahead,
                             double nearest_hint_s = -1.0);

// --------------------------------------------------------------------------
// Local planners
// --------------------------------------------------------------------------

struct DiscObstacle {
    Vec2 center;
    double radius = 0.0;
};

struct PotentialGains {
    double k_att = 1.0;
    double k_rep = 1.0;
    double influence_radius = 5.0;
};

// Resultant of the quadratic attractive and inverse-square repulsive fields.
// Obstacles with clearance >= influence_radius contribute nothing; the force
// is continuous across that boundary. Throws std::domain_error when pos lies
// inside an obstacle.
Vec2 potential_field_step(const Vec2 &pos, const Vec2 &goal,
                          std::span<const DiscObstacle> obstacles, const PotentialGains &gains);

struct GridPlan {
    Path points;  // cell centers, start..goal
    double cost = 0.0;  // meters under the 8-connected metric
};

// A* over 8-connected passable cells; straight steps cost cell_size, diagonal
// steps cell_size*sqrt(2), octile heuristic. Diagonal moves require both
// adjacent orthogonal cells to be passable. Throws std::invalid_argument when
// start or goal is impassable; nullopt when no path exists.
std::optional<GridPlan> grid_plan(const OccupancyGrid &grid, GridCell start, GridCell goal);

// Every grid cell a segment touches (supercover); used for collision checks.
std::vector<GridCell> supercover_cells(const OccupancyGrid &grid, const Vec2 &a, const Vec2 &b);

// True when every cell the segment touches is passable.
bool segment_passable(const OccupancyGrid &grid, const Vec2 &a, const Vec2 &b);

// Copy of the grid with passable cells adjacent to blocked ones removed
// (Chebyshev erosion); planning on the eroded grid keeps paths a vehicle
// radius away from blocked space.
OccupancyGrid erode_grid(const OccupancyGrid &grid, int cells = 1);

// Greedy line-of-sight shortcutting over a planned path; where no shortcut
// is collision-free the original steps survive.
Path simplify_path(const OccupancyGrid &grid, const Path &path);

// Rounds path corners with tangent arcs (radius capped by the adjacent
// segment lengths) so a tracking controller sees bounded curvature.
Path fillet_path(const Path &path, double radius, double sample_step = 1.5);

// RRT-style sampling planner: up to n_samples uniform samples over passable
// space, greedy tree extension with collision-checked straight segments of at
// most one cell length. Deterministic for a given seed. Throws
// std::invalid_argument when start or goal is impassable; nullopt when no
// path was found within the sample budget.
std::optional<Path> sample_plan(const OccupancyGrid &grid, const Vec2 &start, const Vec2 &goal,
                                int n_samples, std::uint64_t seed);

struct BoundaryState {
    Vec2 position;
    Vec2 velocity;
    Vec2 acceleration;
};

// Per-axis quintic polynomial satisfying all six boundary conditions, sampled
// every dt (the final sample lands exactly on T). Throws
// std::invalid_argument when T <= 0 or dt <= 0.
Trajectory quintic_connect(const BoundaryState &b0, const BoundaryState &b1, double T,
                           double dt = 0.02);

enum class LimitKind { Accel, Decel, Curvature };

struct LimitViolation {
    std::size_t sample = 0;
    LimitKind kind = LimitKind::Accel;
    double value = 0.0;
    double limit = 0.0;
};

// Finite-difference acceleration and curvature scan. Throws
// std::invalid_argument for trajectories with fewer than 3 samples.
std::vector<LimitViolation> check_limits(const Trajectory &traj, const ControlLimits &limits);

}  // namespace flowsim
