#include "flowsim/sim_engine.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "flowsim/errors.hpp"
#include "flowsim/log.hpp"

namespace flowsim {

using nlohmann::json;

const char *to_string(AgentMode m) { return m == AgentMode::SplineFollow ? "spline" : "grid"; }

const char *to_string(AgentStatus s) {
    switch (s) {
        case AgentStatus::Driving: return "driving";
        case AgentStatus::Stopped: return "stopped";
        case AgentStatus::Parked: return "parked";
        case AgentStatus::Collided: return "collided";
    }
    return "?";
}

static bool is_terminal(AgentStatus s) {
    return s == AgentStatus::Parked || s == AgentStatus::Collided;
}

// Stimulus id spaces; agents use their own ids.
constexpr int kObstacleIdBase = 10000;
constexpr int kLightIdBase = 20000;

// ---------------------------------------------------------------------------
// Scenario loading
// ---------------------------------------------------------------------------

static AgentMode parse_mode(const std::string &m) {
    if (m == "spline") return AgentMode::SplineFollow;
    if (m == "grid") return AgentMode::GridFollow;
    throw ParseError("unknown agent mode \"" + m + "\" (expected spline|grid)");
}

ScenarioConfig parse_scenario(const std::string &json_text, const std::string &base_dir) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::exception &e) {
        throw ParseError(std::string("scenario JSON: ") + e.what());
    }
    ScenarioConfig cfg;
    try {
        std::filesystem::path net = j.at("network").get<std::string>();
        if (net.is_relative() && !base_dir.empty()) net = std::filesystem::path(base_dir) / net;
        cfg.network_path = net.string();
        cfg.network = load_network(cfg.network_path);

        for (const json &ja : j.at("agents")) {
            AgentSpawn a;
            a.id = ja.at("id").get<int>();
            a.spawn_node = ja.at("spawn").get<std::string>();
            a.goal_node = ja.at("goal").get<std::string>();
            a.mode = parse_mode(ja.value("mode", std::string("spline")));
            a.spawn_time = ja.value("spawn_time", 0.0);
            cfg.agents.push_back(std::move(a));
        }
        if (j.contains("obstacles")) {
            for (const json &jo : j.at("obstacles"))
                cfg.obstacles.push_back(
                    {{jo.at("x").get<double>(), jo.at("y").get<double>()},
                     jo.at("radius").get<double>()});
        }
        if (j.contains("params")) {
            const json &p = j.at("params");
            SimParams &q = cfg.params;
            q.dt = p.value("dt", q.dt);
            q.duration = p.value("duration", q.duration);
            q.seed = p.value("seed", q.seed);
            q.routing = p.value("routing", q.routing);
            q.limits.max_accel = p.value("max_accel", q.limits.max_accel);
            q.limits.max_decel = p.value("max_decel", q.limits.max_decel);
            q.limits.max_steer_angle = p.value("max_steer_angle", q.limits.max_steer_angle);
            q.limits.max_curvature = p.value("max_curvature", q.limits.max_curvature);
            q.wheelbase = p.value("wheelbase", q.wheelbase);
            q.vehicle_length = p.value("vehicle_length", q.vehicle_length);
            q.vehicle_radius = p.value("vehicle_radius", q.vehicle_radius);
            q.smoothing = p.value("smoothing", q.smoothing);
            q.grid_lookahead = p.value("grid_lookahead", q.grid_lookahead);
            q.cruise_speed = p.value("cruise_speed", q.cruise_speed);
            q.parking_tolerance = p.value("parking_tolerance", q.parking_tolerance);
            q.lane_half_width = p.value("lane_half_width", q.lane_half_width);
            q.comfort_decel = p.value("comfort_decel", q.comfort_decel);
            q.headway = p.value("headway", q.headway);
            q.min_gap = p.value("min_gap", q.min_gap);
            q.stop_margin = p.value("stop_margin", q.stop_margin);
            q.light_corridor = p.value("light_corridor", q.light_corridor);
            q.control_tau = p.value("control_tau", q.control_tau);
            q.sight_radius = p.value("sight_radius", q.sight_radius);
            q.sight_fov = p.value("sight_fov", q.sight_fov);
            q.avoidance = p.value("avoidance", q.avoidance);
            q.grid_action_period = p.value("grid_action_period", q.grid_action_period);
        }
    } catch (const json::exception &e) {
        throw ParseError(std::string("scenario JSON: ") + e.what());
    }
    if (cfg.params.dt <= 0.0) throw ValidationError("dt must be > 0");
    if (cfg.params.duration < 0.0) throw ValidationError("duration must be >= 0");
    std::set<int> ids;
    for (const AgentSpawn &a : cfg.agents) {
        if (!ids.insert(a.id).second) throw ValidationError("duplicate agent id");
        cfg.network.node_index(a.spawn_node);
        cfg.network.node_index(a.goal_node);
    }
    return cfg;
}

ScenarioConfig load_scenario(const std::string &path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open scenario file: " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_scenario(buf.str(), std::filesystem::path(path).parent_path().string());
}

// ---------------------------------------------------------------------------
// Agent construction
// ---------------------------------------------------------------------------

static routing::Route plan_route(const ScenarioConfig &cfg, NodeId s, NodeId t) {
    routing::Graph g = routing::Graph::from_network(cfg.network);
    const std::string &algo = cfg.params.routing;
    std::optional<routing::Route> r;
    if (algo == "dijkstra") {
        r = routing::dijkstra(g, s, t);
    } else if (algo == "astar") {
        r = routing::astar_euclidean(g, s, t);
    } else if (algo == "alt") {
        auto idx = routing::alt_preprocess(g, std::min(4, g.n), cfg.params.seed);
        r = routing::alt_query(g, idx, s, t);
    } else if (algo == "arcflags") {
        auto idx = routing::arcflags_preprocess(g, std::min(4, g.n));
        r = routing::arcflags_query(g, idx, s, t);
    } else if (algo == "ch") {
        auto idx = routing::ch_preprocess(g);
        r = routing::ch_query(g, idx, s, t);
    } else if (algo == "reach") {
        auto idx = routing::reach_preprocess(g);
        r = routing::reach_query(g, idx, s, t);
    } else {
        throw ValidationError("unknown routing technique \"" + algo + "\"");
    }
    if (!r) throw ValidationError("goal unreachable from spawn node");
    return *r;
}

World::AgentRuntime spawn_agent(const ScenarioConfig &cfg, const AgentSpawn &spawn) {
    const RoadNetwork &net = cfg.network;
    World::AgentRuntime a;
    a.id = spawn.id;
    a.mode = spawn.mode;
    a.spawn_time = spawn.spawn_time;

    NodeId s = net.node_index(spawn.spawn_node);
    NodeId t = net.node_index(spawn.goal_node);
    a.route = plan_route(cfg, s, t);

    if (spawn.mode == AgentMode::SplineFollow) {
        // Concatenate the route's lane splines, tracking where each edge ends.
        std::vector<Vec2> pts;
        std::vector<size_t> edge_end_index;
        std::vector<int> edge_ids;
        for (size_t i = 0; i + 1 < a.route.nodes.size(); ++i) {
            int e = net.edge_between(a.route.nodes[i], a.route.nodes[i + 1]);
            if (e < 0) throw ValidationError("route step has no matching edge");
            for (const Vec2 &p : net.edges[e].lane.points()) {
                if (!pts.empty() && distance(pts.back(), p) < 1e-12) continue;
                pts.push_back(p);
            }
            edge_end_index.push_back(pts.size() - 1);
            edge_ids.push_back(e);
        }
        if (pts.size() < 2) {
            // Zero-length route (spawn == goal): park in place on the node.
            a.guidance = Spline({net.nodes[s].pos, net.nodes[s].pos + Vec2{0.01, 0.0}});
        } else {
            a.guidance = Spline(std::move(pts));
            for (size_t i = 0; i < edge_ids.size(); ++i)
                a.edge_span.emplace_back(a.guidance.cumulative_length()[edge_end_index[i]],
                                         edge_ids[i]);
        }
    } else {
        // Plan on the vehicle-radius-eroded grid so the path clears blocked
        // space even before tracking error.
        OccupancyGrid grid = erode_grid(net.grid);
        Vec2 from = net.nodes[s].pos, to = net.nodes[t].pos;
        grid.set_passable(grid.cell_at(from).x, grid.cell_at(from).y,
                          net.grid.point_passable(from));
        grid.set_passable(grid.cell_at(to).x, grid.cell_at(to).y, net.grid.point_passable(to));
        auto plan = grid_plan(grid, grid.cell_at(from), grid.cell_at(to));
        if (!plan) throw ValidationError("grid path to goal not found");
        std::vector<Vec2> pts;
        for (const Vec2 &p : plan->points) {
            if (!pts.empty() && distance(pts.back(), p) < 1e-12) continue;
            pts.push_back(p);
        }
        // Splice the exact endpoints in, dropping cell centers the exact
        // points would double back over.
        while (pts.size() >= 2 && dot(pts[1] - pts[0], pts[0] - from) < 0.0)
            pts.erase(pts.begin());
        if (distance(from, pts.front()) > 1e-9) pts.insert(pts.begin(), from);
        while (pts.size() >= 2 &&
               dot(pts.back() - pts[pts.size() - 2], to - pts.back()) < 0.0)
            pts.pop_back();
        if (distance(pts.back(), to) > 1e-9) pts.push_back(to);
        if (pts.size() < 2) pts.push_back(pts.front() + Vec2{0.01, 0.0});
        // Cell-center staircases steer poorly; shortcut where there is
        // clearance and round what remains.
        pts = fillet_path(simplify_path(grid, pts), 18.0);
        std::vector<Vec2> dedup;
        for (const Vec2 &p : pts) {
            if (!dedup.empty() && distance(dedup.back(), p) < 1e-9) continue;
            dedup.push_back(p);
        }
        a.guidance = Spline(std::move(dedup));
    }

    a.goal = a.guidance.point_at(a.guidance.total_length());
    a.state.position = a.guidance.point_at(0.0);
    Vec2 ahead = a.guidance.point_at(std::min(5.0, a.guidance.total_length())) - a.state.position;
    if (norm(ahead) < 1e-9) ahead = a.guidance.tangent_at(0.0);
    a.state.heading = std::atan2(ahead.y, ahead.x);
    a.state.wheelbase = cfg.params.wheelbase;
    a.progress_s = 0.0;

    // Bind lights whose stop line sits on (or laterally near) the guidance.
    for (size_t li = 0; li < net.lights.size(); ++li) {
        Spline::Nearest near = a.guidance.nearest(net.lights[li].position);
        if (near.distance > cfg.params.light_corridor) continue;
        if (near.s < 1.0) continue;  // behind or at the spawn point
        a.lights_on_route.emplace_back(static_cast<int>(li), near.s);
    }
    return a;
}

// ---------------------------------------------------------------------------
// World
// ---------------------------------------------------------------------------

World::World(const ScenarioConfig &cfg) : cfg_(cfg) {
    light_colors_.resize(cfg_.network.lights.size(), LightColor::Red);
    for (const AgentSpawn &spawn : cfg_.agents) agents_.push_back(spawn_agent(cfg_, spawn));
}

void World::spawn_due_agents() {
    double t = time();
    for (AgentRuntime &a : agents_) {
        if (a.spawned || a.spawn_time > t + 1e-12) continue;
        a.spawned = true;
        perception_.register_listener(a.id, a.state.position, a.state.heading,
                                      {SightConfig{cfg_.params.sight_radius,
                                                   cfg_.params.sight_fov, false}});
    }
}

void World::begin_tick() {
    double t = time();

    // 1. Light phases.
    for (size_t i = 0; i < cfg_.network.lights.size(); ++i)
        light_colors_[i] = cfg_.network.lights[i].phase_at(t);

    spawn_due_agents();

    // 2. Perception over current poses.
    std::vector<Stimulus> stimuli;
    for (const AgentRuntime &a : agents_) {
        if (!a.spawned) continue;
        perception_.set_pose(a.id, a.state.position, a.state.heading);
        stimuli.push_back({a.id, a.state.position, StimulusKind::Vehicle});
    }
    for (size_t i = 0; i < cfg_.obstacles.size(); ++i)
        stimuli.push_back({kObstacleIdBase + static_cast<int>(i), cfg_.obstacles[i].center,
                           StimulusKind::Obstacle});
    for (size_t i = 0; i < cfg_.network.lights.size(); ++i)
        stimuli.push_back({kLightIdBase + static_cast<int>(i), cfg_.network.lights[i].position,
                           StimulusKind::TrafficLight});
    last_events_ = perception_.tick(stimuli, {}, tick_index_);
}

void World::advance() {
    decide_and_step();
    ++tick_index_;
}

bool World::all_terminal() const {
    for (const AgentRuntime &a : agents_)
        if (!a.spawned || !is_terminal(a.status)) return false;
    return !agents_.empty();
}

// Deceleration envelope toward a stop `dist` meters ahead; snaps to zero at
// the very end so arrivals actually come to rest.
static double approach_cap(double dist, double comfort_decel) {
    double v = std::sqrt(2.0 * comfort_decel * std::max(0.0, dist));
    return v < 0.25 ? 0.0 : v;
}

void World::decide_and_step() {
    const SimParams &P = cfg_.params;
    const double dt = P.dt;
    const double half_len = P.vehicle_length / 2.0;

    struct Control {
        double throttle = 0.0;
        double steering = 0.0;
    };
    std::vector<Control> controls(agents_.size());
    std::vector<VehicleState> snapshot(agents_.size());
    for (size_t i = 0; i < agents_.size(); ++i) snapshot[i] = agents_[i].state;

    for (size_t i = 0; i < agents_.size(); ++i) {
        AgentRuntime &a = agents_[i];
        if (!a.spawned || is_terminal(a.status)) continue;
        const VehicleState &st = snapshot[i];

        std::vector<int> perceived = perception_.perceived_set(a.id);
        auto sees = [&](int id) {
            return std::binary_search(perceived.begin(), perceived.end(), id);
        };

        // Lane speed limit (spline mode) or cruise speed (grid mode).
        double v_limit = P.cruise_speed;
        if (a.mode == AgentMode::SplineFollow && !a.edge_span.empty()) {
            int edge = a.edge_span.back().second;
            for (const auto &[end_s, e] : a.edge_span)
                if (a.progress_s <= end_s + 1e-9) {
                    edge = e;
                    break;
                }
            v_limit = cfg_.network.edges[edge].speed_limit;
        }
        double v_target = v_limit;

        // Goal approach: decelerate along a comfort profile, then crawl the
        // last stretch so the stop lands inside the parking tolerance.
        double to_goal = a.guidance.total_length() - a.progress_s;
        double goal_cap =
            to_goal <= 0.3
                ? 0.0
                : std::max(0.3, std::sqrt(2.0 * P.comfort_decel * (to_goal - 0.3)));
        v_target = std::min(v_target, goal_cap);

        // Red lights with the stop line ahead.
        for (const auto &[li, s_stop] : a.lights_on_route) {
            if (light_colors_[li] != LightColor::Red) continue;
            if (!sees(kLightIdBase + li)) continue;
            double front = a.progress_s + half_len;
            if (front > s_stop) continue;  // already across
            double room = s_stop - P.stop_margin - half_len - a.progress_s;
            v_target = std::min(v_target, approach_cap(room, P.comfort_decel));
        }

        if (P.avoidance) {
            // Leader following along the own guidance.
            for (size_t j = 0; j < agents_.size(); ++j) {
                if (j == i || !agents_[j].spawned) continue;
                if (!sees(agents_[j].id)) continue;
                Spline::Nearest near = a.guidance.nearest_in_range(
                    snapshot[j].position, a.progress_s, a.progress_s + P.sight_radius);
                if (near.distance > P.lane_half_width + 0.5) continue;
                if (near.s <= a.progress_s + 0.1) continue;
                double gap = near.s - a.progress_s - P.vehicle_length;
                double cap = std::max(0.0, (gap - P.min_gap) / P.headway);
                cap = std::min(cap, approach_cap(gap - P.min_gap, P.comfort_decel));
                v_target = std::min(v_target, cap);
            }
            // Obstacles blocking the corridor.
            for (size_t oi = 0; oi < cfg_.obstacles.size(); ++oi) {
                const DiscObstacle &obs = cfg_.obstacles[oi];
                if (!sees(kObstacleIdBase + static_cast<int>(oi))) continue;
                Spline::Nearest near = a.guidance.nearest_in_range(
                    obs.center, a.progress_s, a.progress_s + P.sight_radius);
                if (near.distance > obs.radius + P.vehicle_radius + 0.2) continue;
                if (near.s <= a.progress_s + 0.1) continue;
                double room = near.s - a.progress_s - (obs.radius + P.vehicle_radius + 1.0);
                v_target = std::min(v_target, approach_cap(room, P.comfort_decel));
            }
        }

        // Grid paths bend sharply at cell junctions; close the throttle ahead
        // of turns so the vehicle can align.
        if (a.mode == AgentMode::GridFollow) {
            const double look = 12.0;
            double s1 = std::min(a.progress_s + look, a.guidance.total_length());
            if (s1 > a.progress_s + 0.5) {
                double turn = std::abs(signed_angle(a.guidance.tangent_at(a.progress_s),
                                                    a.guidance.tangent_at(s1)));
                if (turn > deg2rad(10.0)) {
                    double radius = (s1 - a.progress_s) / turn;
                    v_target = std::min(v_target,
                                        std::max(3.0, std::sqrt(2.5 * radius)));
                }
            }
        }

        // Steering.
        double steering;
        if (a.mode == AgentMode::SplineFollow) {
            steering = spline_steering(st, a.guidance, {P.smoothing, 90.0});
        } else {
            if (a.last_steer_tick < 0 ||
                tick_index_ - a.last_steer_tick >= P.grid_action_period) {
                steering = pure_pursuit_steering(st, a.guidance, P.grid_lookahead, a.progress_s);
                a.held_steering = steering;
                a.last_steer_tick = tick_index_;
            } else {
                steering = a.held_steering;
            }
        }

        // Speed controller: smooth tracking, but the allowed speed is a hard
        // per-tick ceiling so braking profiles are never overshot.
        double a_des = std::clamp((v_target - st.speed) / P.control_tau, -P.limits.max_decel,
                                  P.limits.max_accel);
        if (st.speed + a_des * dt > v_target)
            a_des = std::max(-P.limits.max_decel, (v_target - st.speed) / dt);
        controls[i].throttle =
            a_des >= 0.0 ? a_des / P.limits.max_accel : a_des / P.limits.max_decel;
        controls[i].steering = steering;
    }

    // 5. Simultaneous kinematic update from the snapshot.
    for (size_t i = 0; i < agents_.size(); ++i) {
        AgentRuntime &a = agents_[i];
        if (!a.spawned || is_terminal(a.status)) continue;
        a.state = kinematic_step(snapshot[i], controls[i].throttle, controls[i].steering,
                                 P.limits, dt);

        double window = std::max(5.0, a.state.speed * dt * 4.0 + 10.0);
        Spline::Nearest near = a.guidance.nearest_in_range(
            a.state.position, a.progress_s - 1.0, a.progress_s + window);
        a.progress_s = std::max(a.progress_s, near.s);
        double over = std::max(0.0, near.distance - P.lane_half_width);
        a.offroad_integral += over * dt;
    }

    // 6. Collisions (disc model). Terminal agents keep their status.
    for (size_t i = 0; i < agents_.size(); ++i) {
        AgentRuntime &a = agents_[i];
        if (!a.spawned) continue;
        bool hit = false;
        for (size_t j = 0; j < agents_.size(); ++j) {
            if (j == i || !agents_[j].spawned) continue;
            if (distance(a.state.position, agents_[j].state.position) <
                2.0 * P.vehicle_radius - 1e-12)
                hit = true;
        }
        for (const DiscObstacle &obs : cfg_.obstacles)
            if (distance(a.state.position, obs.center) < P.vehicle_radius + obs.radius - 1e-12)
                hit = true;
        if (hit && !is_terminal(a.status)) {
            a.status = AgentStatus::Collided;
            a.collision_count += 1;
            a.state.speed = 0.0;
            log_info("agent " + std::to_string(a.id) + " collided at t=" +
                     std::to_string(time() + dt));
        }
    }

    // 7. Arrivals.
    for (AgentRuntime &a : agents_) {
        if (!a.spawned || is_terminal(a.status)) continue;
        double err = distance(a.state.position, a.goal);
        if (err <= P.parking_tolerance && a.state.speed < 0.1) {
            a.status = AgentStatus::Parked;
            a.parking_error = err;
            a.travel_time = time() + dt - a.spawn_time;
            a.state.speed = 0.0;
        } else {
            a.status = a.state.speed < 0.05 ? AgentStatus::Stopped : AgentStatus::Driving;
        }
    }
}

TickRecord World::snapshot() const {
    TickRecord rec;
    rec.t = time();
    for (const AgentRuntime &a : agents_) {
        if (!a.spawned) continue;
        rec.agents.push_back({a.id, a.state.position, a.state.heading, a.state.speed,
                              a.state.steering, a.status});
    }
    rec.events = last_events_;
    rec.lights = light_colors_;
    return rec;
}

MetricsReport World::metrics() const {
    MetricsReport m;
    m.ticks = tick_index_;
    int parked = 0;
    double err_sum = 0.0, time_sum = 0.0, off_sum = 0.0;
    for (const AgentRuntime &a : agents_) {
        AgentMetrics am;
        am.id = a.id;
        am.final_status = a.status;
        am.collision_count = a.collision_count;
        am.offroad_integral = a.offroad_integral;
        am.parking_error = a.parking_error;
        am.travel_time = a.travel_time;
        m.total_collisions += a.collision_count;
        off_sum += a.offroad_integral;
        if (a.status == AgentStatus::Parked) {
            ++parked;
            err_sum += a.parking_error.value_or(0.0);
            time_sum += a.travel_time.value_or(0.0);
        }
        m.agents.push_back(std::move(am));
    }
    m.all_parked = !agents_.empty() && parked == static_cast<int>(agents_.size());
    if (parked > 0) {
        m.mean_parking_error = err_sum / parked;
        m.mean_travel_time = time_sum / parked;
    }
    if (!agents_.empty()) m.mean_offroad_integral = off_sum / static_cast<double>(agents_.size());
    return m;
}

// ---------------------------------------------------------------------------
// Run loop and serialization
// ---------------------------------------------------------------------------

SimResult run(const ScenarioConfig &cfg) {
    World world(cfg);
    SimResult result;
    long max_ticks = static_cast<long>(std::floor(cfg.params.duration / cfg.params.dt + 1e-9));
    for (long k = 0;; ++k) {
        world.begin_tick();
        result.trace.ticks.push_back(world.snapshot());
        if (k == max_ticks || world.all_terminal()) break;
        world.advance();
    }
    result.metrics = world.metrics();
    result.metrics.ticks = static_cast<long>(result.trace.ticks.size());
    return result;
}

std::string trace_to_jsonl(const SimTrace &trace) {
    std::ostringstream out;
    out << json{{"schema", "flowsim/1"}, {"type", "header"}}.dump() << "\n";
    for (const TickRecord &rec : trace.ticks) {
        json j;
        j["t"] = rec.t;
        json agents = json::array();
        for (const AgentRecord &a : rec.agents)
            agents.push_back({{"id", a.id},
                              {"x", a.position.x},
                              {"y", a.position.y},
                              {"heading", a.heading},
                              {"speed", a.speed},
                              {"steering", a.steering},
                              {"status", to_string(a.status)}});
        j["agents"] = std::move(agents);
        json events = json::array();
        for (const PerceptionEvent &e : rec.events)
            events.push_back({{"listener", e.listener_id},
                              {"source", e.source_id},
                              {"change", e.change == PerceptionChange::Gained ? "gained" : "lost"},
                              {"tick", e.tick}});
        j["events"] = std::move(events);
        json lights = json::array();
        for (LightColor c : rec.lights) lights.push_back(to_string(c));
        j["lights"] = std::move(lights);
        out << j.dump() << "\n";
    }
    return out.str();
}

static json metrics_to_json_obj(const MetricsReport &m) {
    json agents = json::array();
    for (const AgentMetrics &a : m.agents) {
        json ja{{"id", a.id},
                {"status", to_string(a.final_status)},
                {"collisions", a.collision_count},
                {"offroad_integral", a.offroad_integral}};
        if (a.parking_error) ja["parking_error"] = *a.parking_error;
        if (a.travel_time) ja["travel_time"] = *a.travel_time;
        agents.push_back(std::move(ja));
    }
    return json{{"schema", "flowsim/1"},
                {"agents", std::move(agents)},
                {"aggregate",
                 {{"total_collisions", m.total_collisions},
                  {"all_parked", m.all_parked},
                  {"mean_parking_error", m.mean_parking_error},
                  {"mean_travel_time", m.mean_travel_time},
                  {"mean_offroad_integral", m.mean_offroad_integral},
                  {"ticks", m.ticks}}}};
}

std::string metrics_to_json(const MetricsReport &metrics) {
    return metrics_to_json_obj(metrics).dump(2) + "\n";
}

void atomic_write_file(const std::string &path, const std::string &content) {
    namespace fs = std::filesystem;
    fs::path target(path);
    if (target.has_parent_path()) fs::create_directories(target.parent_path());
    fs::path tmp = target;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw ParseError("cannot write file: " + tmp.string());
        out << content;
        out.flush();
        if (!out) throw ParseError("short write: " + tmp.string());
    }
    fs::rename(tmp, target);
}

EvalReport evaluate_modes(const ScenarioConfig &cfg) {
    EvalReport report;
    for (AgentMode mode : {AgentMode::SplineFollow, AgentMode::GridFollow}) {
        ScenarioConfig forced = cfg;
        for (AgentSpawn &a : forced.agents) a.mode = mode;
        SimResult r = run(forced);
        EvalModeResult mr;
        mr.mode = to_string(mode);
        mr.metrics = r.metrics;
        mr.trace = std::move(r.trace);
        for (const TickRecord &rec : mr.trace.ticks)
            mr.agent_ticks += static_cast<long>(rec.agents.size());
        if (mode == AgentMode::SplineFollow)
            report.spline = std::move(mr);
        else
            report.grid = std::move(mr);
    }
    return report;
}

std::string eval_to_json(const EvalReport &report) {
    auto mode_obj = [](const EvalModeResult &m) {
        json j = metrics_to_json_obj(m.metrics);
        j.erase("schema");
        j["agent_ticks"] = m.agent_ticks;
        return j;
    };
    json j{{"schema", "flowsim/1"},
           {"modes", {{"spline", mode_obj(report.spline)}, {"grid", mode_obj(report.grid)}}}};
    return j.dump(2) + "\n";
}

// ---------------------------------------------------------------------------
// Red-light safety post-processor
// ---------------------------------------------------------------------------

std::vector<std::string> verify_red_light_safety(const ScenarioConfig &cfg,
                                                 const SimTrace &trace) {
    std::vector<std::string> violations;
    const double half_len = cfg.params.vehicle_length / 2.0;

    for (const AgentSpawn &spawn : cfg.agents) {
        World::AgentRuntime a = spawn_agent(cfg, spawn);
        if (a.lights_on_route.empty()) continue;

        double progress = 0.0;
        double prev_front = half_len;
        double prev_t = 0.0;
        bool first = true;
        for (const TickRecord &rec : trace.ticks) {
            const AgentRecord *ar = nullptr;
            for (const AgentRecord &cand : rec.agents)
                if (cand.id == spawn.id) ar = &cand;
            if (!ar) continue;
            Spline::Nearest near =
                a.guidance.nearest_in_range(ar->position, progress - 1.0, progress + 25.0);
            progress = std::max(progress, near.s);
            double front = progress + half_len;
            if (!first) {
                for (const auto &[li, s_stop] : a.lights_on_route) {
                    if (prev_front < s_stop && front >= s_stop) {
                        // Interpolate the crossing instant and evaluate the
                        // schedule exactly there.
                        double frac = (s_stop - prev_front) / (front - prev_front);
                        double t_cross = prev_t + frac * (rec.t - prev_t);
                        if (cfg.network.lights[li].phase_at(t_cross) == LightColor::Red) {
                            std::ostringstream msg;
                            msg << "agent " << spawn.id << " crossed stop line of light " << li
                                << " at t=" << t_cross << " during red";
                            violations.push_back(msg.str());
                        }
                    }
                }
            }
            prev_front = front;
            prev_t = rec.t;
            first = false;
        }
    }
    return violations;
}

}  // namespace flowsim
