#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "flowsim/motion.hpp"
#include "flowsim/perception.hpp"
#include "flowsim/road_network.hpp"
#include "flowsim/routing.hpp"
#include "flowsim/spline.hpp"

namespace flowsim {

enum class AgentMode { SplineFollow, GridFollow };
enum class AgentStatus { Driving, Stopped, Parked, Collided };

const char *to_string(AgentMode m);
const char *to_string(AgentStatus s);

struct AgentSpawn {
    int id = 0;
    std::string spawn_node;
    std::string goal_node;
    AgentMode mode = AgentMode::SplineFollow;
    double spawn_time = 0.0;
};

struct SimParams {
    double dt = 0.05;
    double duration = 120.0;
    std::uint64_t seed = 0;
    std::string routing = "ch";  // dijkstra | astar | alt | arcflags | ch | reach

    ControlLimits limits;
    double wheelbase = 2.8;
    double vehicle_length = 4.5;
    double vehicle_radius = 2.25;  // collision disc, half vehicle length

    double smoothing = 15.0;       // spline steering lookahead scale
    double grid_lookahead = 5.0;   // pure pursuit lookahead on grid paths
    double cruise_speed = 10.0;    // grid-mode target speed
    double parking_tolerance = 0.5;
    double lane_half_width = 2.0;  // offroad threshold around the guidance

    double comfort_decel = 2.5;    // planned decelerations (< max_decel)
    double headway = 1.5;          // desired gap = headway*speed + min_gap
    double min_gap = 2.0;
    double stop_margin = 2.0;      // front-bumper distance held before stop lines
    double light_corridor = 4.0;   // lateral window binding a light to a guidance
    double control_tau = 0.4;      // speed controller response time

    double sight_radius = 60.0;
    double sight_fov = 180.0;      // half angle, degrees
    bool avoidance = true;         // leader/obstacle braking (off reproduces raw collisions)
    int grid_action_period = 1;    // grid mode recomputes steering every N ticks
};

struct ScenarioConfig {
    std::string network_path;
    RoadNetwork network;
    std::vector<AgentSpawn> agents;
    std::vector<DiscObstacle> obstacles;
    SimParams params;
};

ScenarioConfig parse_scenario(const std::string &json_text, const std::string &base_dir = "");
ScenarioConfig load_scenario(const std::string &path);

// --------------------------------------------------------------------------
// Trace and metrics
// --------------------------------------------------------------------------

struct AgentRecord {
    int id = 0;
    Vec2 position;
    double heading = 0.0;
    double speed = 0.0;
    double steering = 0.0;
    AgentStatus status = AgentStatus::Driving;
};

struct TickRecord {
    double t = 0.0;
    std::vector<AgentRecord> agents;
    std::vector<PerceptionEvent> events;
    std::vector<LightColor> lights;  // one entry per network light
};

struct SimTrace {
    std::vector<TickRecord> ticks;
};

struct AgentMetrics {
    int id = 0;
    AgentStatus final_status = AgentStatus::Driving;
    int collision_count = 0;
    double offroad_integral = 0.0;              // m*s beyond the lane half-width
    std::optional<double> parking_error;        // meters; Parked agents only
    std::optional<double> travel_time;          // seconds; Parked agents only
};

struct MetricsReport {
    std::vector<AgentMetrics> agents;
    int total_collisions = 0;
    bool all_parked = false;
    double mean_parking_error = 0.0;   // over parked agents
    double mean_travel_time = 0.0;     // over parked agents
    double mean_offroad_integral = 0.0;
    long ticks = 0;
};

std::string trace_to_jsonl(const SimTrace &trace);
std::string metrics_to_json(const MetricsReport &metrics);

// Writes via a temp file + rename so readers never observe partial output.
void atomic_write_file(const std::string &path, const std::string &content);

// --------------------------------------------------------------------------
// World
// --------------------------------------------------------------------------

/// Fixed-timestep scheduler: per tick it updates light phases, runs
/// perception, makes behavioral decisions (red lights, leader following,
/// obstacle holds, goal approach), applies steering and throttle, steps all
/// vehicles simultaneously from pre-tick snapshots, then resolves collisions
/// and arrivals.
class World {
  public:
    explicit World(const ScenarioConfig &cfg);

    // Tick prologue at the current time: light phases, due spawns, perception.
    void begin_tick();

    // Dynamics for the current tick: decisions, controls, simultaneous
    // kinematic update, collisions, arrivals. Advances the clock.
    void advance();

    bool all_terminal() const;

    long tick_index() const { return tick_index_; }
    double time() const { return tick_index_ * cfg_.params.dt; }

    // Record of the current instant (call after begin_tick).
    TickRecord snapshot() const;
    MetricsReport metrics() const;

    struct AgentRuntime {
        int id;
        AgentMode mode;
        AgentStatus status = AgentStatus::Driving;
        bool spawned = false;
        double spawn_time = 0.0;
        VehicleState state;
        routing::Route route;
        Spline guidance;
        double progress_s = 0.0;  // monotone arc-length progress along guidance
        Vec2 goal;
        std::vector<std::pair<int, double>> lights_on_route;  // (light idx, stop-line s)
        std::vector<std::pair<double, int>> edge_span;        // (end s, edge idx), spline mode
        int collision_count = 0;
        double offroad_integral = 0.0;
        std::optional<double> parking_error;
        std::optional<double> travel_time;
        double held_steering = 0.0;
        long last_steer_tick = -1;
    };

    const std::vector<AgentRuntime> &agents() const { return agents_; }
    const std::vector<PerceptionEvent> &last_events() const { return last_events_; }
    const std::vector<LightColor> &light_colors() const { return light_colors_; }

  private:
    void spawn_due_agents();
    void decide_and_step();

    const ScenarioConfig &cfg_;
    std::vector<AgentRuntime> agents_;
    PerceptionSystem perception_;
    std::vector<LightColor> light_colors_;
    std::vector<PerceptionEvent> last_events_;
    long tick_index_ = 0;
};

// Builds one agent: global route (per params.routing), guidance spline or
// grid path, stop-line table. Throws ValidationError on unreachable goals or
// impassable grid endpoints.
World::AgentRuntime spawn_agent(const ScenarioConfig &cfg, const AgentSpawn &spawn);

struct SimResult {
    SimTrace trace;
    MetricsReport metrics;
};

// Runs the scenario to completion (duration or all-terminal). Identical
// (config, seed) produce byte-identical serialized outputs.
SimResult run(const ScenarioConfig &cfg);

struct EvalModeResult {
    std::string mode;
    MetricsReport metrics;
    SimTrace trace;
    long agent_ticks = 0;  // deterministic work proxy
};

struct EvalReport {
    EvalModeResult spline;
    EvalModeResult grid;
};

// Runs the identical scenario once per mode (every agent forced to the mode).
EvalReport evaluate_modes(const ScenarioConfig &cfg);

std::string eval_to_json(const EvalReport &report);

// Trace post-processor: returns one message per front-bumper stop-line
// crossing that happened while the controlling light was red.
std::vector<std::string> verify_red_light_safety(const ScenarioConfig &cfg,
                                                 const SimTrace &trace);

}  // namespace flowsim
