#include "flowsim/motion.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <random>
#include <stdexcept>

namespace flowsim {

// ---------------------------------------------------------------------------
// Vehicle model
// ---------------------------------------------------------------------------

VehicleState kinematic_step(const VehicleState &s, double throttle, double steering,
                            const ControlLimits &limits, double dt) {
    throttle = std::clamp(throttle, -1.0, 1.0);
    steering = std::clamp(steering, -1.0, 1.0);

    double steer_angle = steering * deg2rad(limits.max_steer_angle);
    double curvature = std::tan(steer_angle) / s.wheelbase;
    curvature = std::clamp(curvature, -limits.max_curvature, limits.max_curvature);

    VehicleState out = s;
    double yaw_rate = s.speed * curvature;
    out.heading = wrap_angle(s.heading + yaw_rate * dt);
    double mid = s.heading + 0.5 * yaw_rate * dt;
    out.position = s.position + Vec2{std::cos(mid), std::sin(mid)} * (s.speed * dt);
    double accel = throttle >= 0.0 ? throttle * limits.max_accel : throttle * limits.max_decel;
    out.speed = std::max(0.0, s.speed + accel * dt);
    out.steering = steering;
    return out;
}

static double angle_to_steering(double angle_rad, double full_lock_deg) {
    return std::clamp(rad2deg(angle_rad) / full_lock_deg, -1.0, 1.0);
}

double spline_steering(const VehicleState &s, const Spline &spline, const SteeringConfig &cfg) {
    // Nearest curve point to the vehicle center and the tangent there.
    Spline::Nearest near = spline.nearest(s.position);
    Vec2 tangent = spline.tangent_at(near.s);

    // Push the scaled tangent out from the car and re-project onto the curve;
    // the vector toward that point is the demanded direction.
    Vec2 probe = s.position + tangent * cfg.smoothing;
    Spline::Nearest target = spline.nearest(probe);
    Vec2 demand = target.point - s.position;
    if (norm(demand) < 1e-9) return 0.0;

    double angle = signed_angle(heading_vec(s.heading), demand);
    return angle_to_steering(angle, cfg.full_lock_angle);
}

double pure_pursuit_steering(const VehicleState &s, const Spline &guidance, double lookahead,
                             double nearest_hint_s) {
    Spline::Nearest near =
        nearest_hint_s >= 0.0
            ? guidance.nearest_in_range(s.position, nearest_hint_s - 2.0 * lookahead,
                                        nearest_hint_s + 2.0 * lookahead)
            : guidance.nearest(s.position);
    Vec2 target = guidance.point_at(near.s + lookahead);
    Vec2 demand = target - s.position;
    if (norm(demand) < 1e-9) return 0.0;
    double angle = signed_angle(heading_vec(s.heading), demand);
    return angle_to_steering(angle, 90.0);
}

// ---------------------------------------------------------------------------
// Potential field
// ---------------------------------------------------------------------------

Vec2 potential_field_step(const Vec2 &pos, const Vec2 &goal,
                          std::span<const DiscObstacle> obstacles, const PotentialGains &gains) {
    Vec2 force = (goal - pos) * gains.k_att;
    for (const DiscObstacle &obs : obstacles) {
        double center_dist = distance(pos, obs.center);
        double clearance = center_dist - obs.radius;
        if (clearance <= 0.0)
            throw std::domain_error("potential field query point inside an obstacle");
        if (clearance >= gains.influence_radius) continue;
        double magnitude = gains.k_rep * (1.0 / clearance - 1.0 / gains.influence_radius) /
                           (clearance * clearance);
        force += normalized(pos - obs.center) * magnitude;
    }
    return force;
}

// ---------------------------------------------------------------------------
// Grid planner
// ---------------------------------------------------------------------------

namespace {

constexpr double kSqrt2 = 1.41421356237309504880;

struct GridHeapEntry {
    double f;
    double g;
    int idx;
    bool operator>(const GridHeapEntry &o) const {
        if (f != o.f) return f > o.f;
        if (g != o.g) return g > o.g;
        return idx > o.idx;
    }
};

double octile(GridCell a, GridCell b) {
    double dx = std::abs(a.x - b.x);
    double dy = std::abs(a.y - b.y);
    return (dx < dy) ? (kSqrt2 - 1.0) * dx + dy : (kSqrt2 - 1.0) * dy + dx;
}

}  // namespace

std::optional<GridPlan> grid_plan(const OccupancyGrid &grid, GridCell start, GridCell goal) {
    if (!grid.passable(start.x, start.y)) throw std::invalid_argument("start cell impassable");
    if (!grid.passable(goal.x, goal.y)) throw std::invalid_argument("goal cell impassable");

    const int w = grid.width(), h = grid.height();
    auto index = [w](GridCell c) { return c.y * w + c.x; };
    std::vector<double> g_cost(static_cast<size_t>(w) * h,
                               std::numeric_limits<double>::infinity());
    std::vector<int> parent(static_cast<size_t>(w) * h, -1);

    std::priority_queue<GridHeapEntry, std::vector<GridHeapEntry>, std::greater<GridHeapEntry>> heap;
    g_cost[index(start)] = 0.0;
    heap.push({octile(start, goal), 0.0, index(start)});

    static const int dx[8] = {1, -1, 0, 0, 1, 1, -1, -1};
    static const int dy[8] = {0, 0, 1, -1, 1, -1, 1, -1};

    while (!heap.empty()) {
        auto [f, gval, idx] = heap.top();
        heap.pop();
        if (gval != g_cost[idx]) continue;
        GridCell c{idx % w, idx / w};
        if (c == goal) break;
        for (int k = 0; k < 8; ++k) {
            GridCell nb{c.x + dx[k], c.y + dy[k]};
            if (!grid.passable(nb.x, nb.y)) continue;
            bool diagonal = k >= 4;
            // No corner cutting: a diagonal move needs both orthogonal
            // neighbours free.
            if (diagonal &&
                (!grid.passable(c.x + dx[k], c.y) || !grid.passable(c.x, c.y + dy[k])))
                continue;
            double ng = gval + (diagonal ? kSqrt2 : 1.0);
            int ni = index(nb);
            if (ng < g_cost[ni]) {
                g_cost[ni] = ng;
                parent[ni] = idx;
                heap.push({ng + octile(nb, goal), ng, ni});
            }
        }
    }
    if (g_cost[index(goal)] == std::numeric_limits<double>::infinity()) return std::nullopt;

    GridPlan plan;
    plan.cost = g_cost[index(goal)] * grid.cell_size();
    std::vector<int> cells;
    for (int i = index(goal); i != -1; i = parent[i]) cells.push_back(i);
    std::reverse(cells.begin(), cells.end());
    for (int i : cells) plan.points.push_back(grid.cell_center({i % w, i / w}));
    return plan;
}

// ---------------------------------------------------------------------------
// Segment/grid collision
// ---------------------------------------------------------------------------

std::vector<GridCell> supercover_cells(const OccupancyGrid &grid, const Vec2 &a, const Vec2 &b) {
    std::vector<GridCell> cells;
    const double cs = grid.cell_size();
    double ax = (a.x - grid.origin().x) / cs, ay = (a.y - grid.origin().y) / cs;
    double bx = (b.x - grid.origin().x) / cs, by = (b.y - grid.origin().y) / cs;
    double dx = bx - ax, dy = by - ay;

    int x = static_cast<int>(std::floor(ax)), y = static_cast<int>(std::floor(ay));
    int xe = static_cast<int>(std::floor(bx)), ye = static_cast<int>(std::floor(by));
    cells.push_back({x, y});

    int step_x = dx > 0.0 ? 1 : (dx < 0.0 ? -1 : 0);
    int step_y = dy > 0.0 ? 1 : (dy < 0.0 ? -1 : 0);
    auto t_next = [](double p, int cell, int step, double d) {
        if (step > 0) return (cell + 1 - p) / d;
        if (step < 0) return (cell - p) / d;
        return std::numeric_limits<double>::infinity();
    };
    double t_max_x = step_x != 0 ? t_next(ax, x, step_x, dx) : std::numeric_limits<double>::infinity();
    double t_max_y = step_y != 0 ? t_next(ay, y, step_y, dy) : std::numeric_limits<double>::infinity();
    double t_delta_x = step_x != 0 ? std::abs(1.0 / dx) : 0.0;
    double t_delta_y = step_y != 0 ? std::abs(1.0 / dy) : 0.0;

    long guard = 2L * (std::abs(xe - x) + std::abs(ye - y)) + 8;
    while ((x != xe || y != ye) && guard-- > 0) {
        constexpr double eps = 1e-12;
        if (t_max_x < t_max_y - eps) {
            x += step_x;
            t_max_x += t_delta_x;
        } else if (t_max_y < t_max_x - eps) {
            y += step_y;
            t_max_y += t_delta_y;
        } else {
            // Corner crossing: the segment touches both edge-adjacent cells.
            cells.push_back({x + step_x, y});
            cells.push_back({x, y + step_y});
            x += step_x;
            y += step_y;
            t_max_x += t_delta_x;
            t_max_y += t_delta_y;
        }
        cells.push_back({x, y});
        if (std::min(t_max_x, t_max_y) > 1.0 + 1e-9 && (x != xe || y != ye)) break;
    }
    if (cells.back().x != xe || cells.back().y != ye) cells.push_back({xe, ye});
    return cells;
}

bool segment_passable(const OccupancyGrid &grid, const Vec2 &a, const Vec2 &b) {
    for (GridCell c : supercover_cells(grid, a, b))
        if (!grid.passable(c.x, c.y)) return false;
    return true;
}

OccupancyGrid erode_grid(const OccupancyGrid &grid, int cells) {
    OccupancyGrid out = grid;
    for (int y = 0; y < grid.height(); ++y)
        for (int x = 0; x < grid.width(); ++x) {
            if (!grid.passable(x, y)) continue;
            bool clear = true;
            for (int dy = -cells; dy <= cells && clear; ++dy)
                for (int dx = -cells; dx <= cells && clear; ++dx)
                    if (!grid.passable(x + dx, y + dy)) clear = false;
            if (!clear) out.set_passable(x, y, false);
        }
    return out;
}

Path simplify_path(const OccupancyGrid &grid, const Path &path) {
    if (path.size() <= 2) return path;
    Path out{path.front()};
    size_t i = 0;
    while (i + 1 < path.size()) {
        size_t j = path.size() - 1;
        for (; j > i + 1; --j)
            if (segment_passable(grid, path[i], path[j])) break;
        out.push_back(path[j]);
        i = j;
    }
    return out;
}

Path fillet_path(const Path &path, double radius, double sample_step) {
    if (path.size() < 3) return path;
    Path out{path.front()};
    for (size_t i = 1; i + 1 < path.size(); ++i) {
        Vec2 a = out.back(), v = path[i], b = path[i + 1];
        Vec2 d1 = normalized(v - a), d2 = normalized(b - v);
        double theta = std::abs(signed_angle(d1, d2));
        if (theta < deg2rad(5.0) || theta > deg2rad(150.0)) {
            out.push_back(v);
            continue;
        }
        double tan_half = std::tan(theta / 2.0);
        double t = std::min({radius * tan_half, distance(a, v) * 0.45, distance(v, b) * 0.45});
        double r = t / tan_half;
        if (r < 0.5) {
            out.push_back(v);
            continue;
        }
        double side = cross(d1, d2) >= 0.0 ? 1.0 : -1.0;
        Vec2 p_in = v - d1 * t;
        Vec2 n1 = side > 0.0 ? Vec2{-d1.y, d1.x} : Vec2{d1.y, -d1.x};
        Vec2 center = p_in + n1 * r;
        int samples = std::max(3, static_cast<int>(std::ceil(r * theta / sample_step)));
        Vec2 spoke = p_in - center;
        for (int k = 0; k <= samples; ++k) {
            double ang = side * theta * k / samples;
            double c = std::cos(ang), s = std::sin(ang);
            out.push_back(center + Vec2{spoke.x * c - spoke.y * s, spoke.x * s + spoke.y * c});
        }
    }
    out.push_back(path.back());
    return out;
}

// ---------------------------------------------------------------------------
// Sampling planner
// ---------------------------------------------------------------------------

std::optional<Path> sample_plan(const OccupancyGrid &grid, const Vec2 &start, const Vec2 &goal,
                                int n_samples, std::uint64_t seed) {
    if (!grid.point_passable(start)) throw std::invalid_argument("start point impassable");
    if (!grid.point_passable(goal)) throw std::invalid_argument("goal point impassable");

    struct TreeNode {
        Vec2 p;
        int parent;
    };
    std::vector<TreeNode> tree{{start, -1}};
    const double step = grid.cell_size();

    auto trace_back = [&](int i) {
        Path path;
        for (; i != -1; i = tree[i].parent) path.push_back(tree[i].p);
        std::reverse(path.begin(), path.end());
        return path;
    };
    auto try_finish = [&](int i) -> bool {
        return distance(tree[i].p, goal) <= step && segment_passable(grid, tree[i].p, goal);
    };

    if (start == goal) return Path{start};
    if (try_finish(0)) {
        Path path = trace_back(0);
        path.push_back(goal);
        return path;
    }

    std::mt19937_64 rng(seed);
    auto uniform01 = [&rng]() { return static_cast<double>(rng() >> 11) * 0x1.0p-53; };
    const double wx = grid.width() * grid.cell_size();
    const double wy = grid.height() * grid.cell_size();

    long rejection_guard = 64L * std::max(n_samples, 1);
    for (int i = 0; i < n_samples; ++i) {
        Vec2 sample;
        do {
            sample = grid.origin() + Vec2{uniform01() * wx, uniform01() * wy};
        } while (!grid.point_passable(sample) && rejection_guard-- > 0);
        if (rejection_guard <= 0) break;

        int nearest = 0;
        double best = distance(tree[0].p, sample);
        for (size_t n = 1; n < tree.size(); ++n) {
            double d = distance(tree[n].p, sample);
            if (d < best) {
                best = d;
                nearest = static_cast<int>(n);
            }
        }
        if (best < 1e-9) continue;
        Vec2 dir = (sample - tree[nearest].p) / best;
        Vec2 next = tree[nearest].p + dir * std::min(step, best);
        if (!grid.point_passable(next)) continue;
        if (!segment_passable(grid, tree[nearest].p, next)) continue;
        tree.push_back({next, nearest});
        int added = static_cast<int>(tree.size()) - 1;
        if (try_finish(added)) {
            Path path = trace_back(added);
            path.push_back(goal);
            return path;
        }
    }
    return std::nullopt;
}

// ---------------------------------------------------------------------------
// Quintic trajectories
// ---------------------------------------------------------------------------

namespace {

// Degree-5 polynomial pinned at both boundaries.
struct Quintic1D {
    double a0, a1, a2, a3, a4, a5;

    Quintic1D(double p0, double v0, double acc0, double p1, double v1, double acc1, double T) {
        a0 = p0;
        a1 = v0;
        a2 = acc0 / 2.0;
        double T2 = T * T, T3 = T2 * T;
        double h = p1 - p0 - v0 * T - 0.5 * acc0 * T2;
        double k = v1 - v0 - acc0 * T;
        double m = acc1 - acc0;
        a3 = (20.0 * h - 8.0 * k * T + m * T2) / (2.0 * T3);
        a4 = (-30.0 * h + 14.0 * k * T - 2.0 * m * T2) / (2.0 * T3 * T);
        a5 = (12.0 * h - 6.0 * k * T + m * T2) / (2.0 * T3 * T2);
    }
    double pos(double t) const {
        return a0 + t * (a1 + t * (a2 + t * (a3 + t * (a4 + t * a5))));
    }
    double vel(double t) const {
        return a1 + t * (2 * a2 + t * (3 * a3 + t * (4 * a4 + t * 5 * a5)));
    }
};

}  // namespace

Trajectory quintic_connect(const BoundaryState &b0, const BoundaryState &b1, double T, double dt) {
    if (T <= 0.0) throw std::invalid_argument("quintic horizon T must be > 0");
    if (dt <= 0.0) throw std::invalid_argument("quintic sample dt must be > 0");

    Quintic1D qx(b0.position.x, b0.velocity.x, b0.acceleration.x, b1.position.x, b1.velocity.x,
                 b1.acceleration.x, T);
    Quintic1D qy(b0.position.y, b0.velocity.y, b0.acceleration.y, b1.position.y, b1.velocity.y,
                 b1.acceleration.y, T);

    Trajectory traj;
    long steps = static_cast<long>(std::floor(T / dt + 1e-9));
    for (long i = 0; i <= steps; ++i) {
        double t = i * dt;
        traj.push_back({t, {qx.pos(t), qy.pos(t)}, std::hypot(qx.vel(t), qy.vel(t))});
    }
    if (traj.back().t < T - 1e-12)
        traj.push_back({T, {qx.pos(T), qy.pos(T)}, std::hypot(qx.vel(T), qy.vel(T))});
    return traj;
}

std::vector<LimitViolation> check_limits(const Trajectory &traj, const ControlLimits &limits) {
    if (traj.size() < 3) throw std::invalid_argument("trajectory needs at least 3 samples");
    std::vector<LimitViolation> out;
    constexpr double tol = 1e-9;

    for (size_t i = 0; i + 1 < traj.size(); ++i) {
        double dt = traj[i + 1].t - traj[i].t;
        double a = (traj[i + 1].speed - traj[i].speed) / dt;
        if (a > limits.max_accel + tol)
            out.push_back({i, LimitKind::Accel, a, limits.max_accel});
        else if (a < -(limits.max_decel + tol))
            out.push_back({i, LimitKind::Decel, a, limits.max_decel});
    }

    for (size_t i = 1; i + 1 < traj.size(); ++i) {
        Vec2 p0 = traj[i - 1].position, p1 = traj[i].position, p2 = traj[i + 1].position;
        double a = distance(p0, p1), b = distance(p1, p2), c = distance(p0, p2);
        if (a < 1e-12 || b < 1e-12 || c < 1e-12) continue;  // stationary samples
        double kappa = 2.0 * std::abs(cross(p1 - p0, p2 - p1)) / (a * b * c);
        if (kappa > limits.max_curvature + tol)
            out.push_back({i, LimitKind::Curvature, kappa, limits.max_curvature});
    }
    return out;
}

}  // namespace flowsim
