#include <chrono>
#include <cmath>
#include <cstdint>
#include <iostream>
#include <map>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "flowsim/ca_traffic.hpp"
#include "flowsim/errors.hpp"
#include "flowsim/log.hpp"
#include "flowsim/motion.hpp"
#include "flowsim/road_network.hpp"
#include "flowsim/routing.hpp"
#include "flowsim/sim_engine.hpp"
#include "flowsim/svg.hpp"

using nlohmann::json;
using namespace flowsim;

// Exit codes: 0 ok; 1 usage/config error; 2 collision; 3 unreachable/no path;
// 4 routing disagreement in bench; 5 run finished with non-parked agents.
namespace exit_code {
constexpr int kOk = 0;
constexpr int kUsage = 1;
constexpr int kCollision = 2;
constexpr int kUnreachable = 3;
constexpr int kDisagreement = 4;
constexpr int kIncomplete = 5;
}  // namespace exit_code

namespace {

double ms_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
        .count();
}

// ---------------------------------------------------------------------------
// run
// ---------------------------------------------------------------------------

int cmd_run(const std::string &scenario_path, const std::string &out_dir,
            std::optional<std::uint64_t> seed) {
    ScenarioConfig cfg = load_scenario(scenario_path);
    if (seed) cfg.params.seed = *seed;
    SimResult result = run(cfg);

    atomic_write_file(out_dir + "/trace.jsonl", trace_to_jsonl(result.trace));
    atomic_write_file(out_dir + "/metrics.json", metrics_to_json(result.metrics));

    if (result.metrics.total_collisions > 0) return exit_code::kCollision;
    if (!result.metrics.all_parked) return exit_code::kIncomplete;
    return exit_code::kOk;
}

// ---------------------------------------------------------------------------
// route
// ---------------------------------------------------------------------------

const std::vector<std::string> kAlgos = {"dijkstra", "astar", "alt", "arcflags", "ch", "reach"};

struct PreparedAlgo {
    double preprocess_ms = 0.0;
    std::function<std::optional<routing::Route>(int, int)> query;
};

PreparedAlgo prepare_algo(const routing::Graph &g, const std::string &algo, std::uint64_t seed) {
    PreparedAlgo p;
    auto start = std::chrono::steady_clock::now();
    if (algo == "dijkstra") {
        p.query = [&g](int s, int t) { return routing::dijkstra(g, s, t); };
    } else if (algo == "astar") {
        p.query = [&g](int s, int t) { return routing::astar_euclidean(g, s, t); };
    } else if (algo == "alt") {
        auto idx = std::make_shared<routing::AltIndex>(
            routing::alt_preprocess(g, std::min(4, g.n), seed));
        p.query = [&g, idx](int s, int t) { return routing::alt_query(g, *idx, s, t); };
    } else if (algo == "arcflags") {
        auto idx = std::make_shared<routing::ArcFlagIndex>(
            routing::arcflags_preprocess(g, std::min(4, g.n)));
        p.query = [&g, idx](int s, int t) { return routing::arcflags_query(g, *idx, s, t); };
    } else if (algo == "ch") {
        auto idx = std::make_shared<routing::ChIndex>(routing::ch_preprocess(g));
        p.query = [&g, idx](int s, int t) { return routing::ch_query(g, *idx, s, t); };
    } else if (algo == "reach") {
        auto idx = std::make_shared<routing::ReachIndex>(routing::reach_preprocess(g));
        p.query = [&g, idx](int s, int t) { return routing::reach_query(g, *idx, s, t); };
    } else {
        std::string names;
        for (const std::string &a : kAlgos) names += (names.empty() ? "" : ", ") + a;
        throw ValidationError("unknown algorithm \"" + algo + "\" (valid: " + names + ")");
    }
    p.preprocess_ms = ms_since(start);
    return p;
}

int cmd_route(const std::string &net_path, const std::string &from, const std::string &to,
              const std::string &algo) {
    RoadNetwork net = load_network(net_path);
    NodeId s = net.node_index(from);
    NodeId t = net.node_index(to);
    routing::Graph g = routing::Graph::from_network(net);

    PreparedAlgo prepared = prepare_algo(g, algo, 1);
    auto start = std::chrono::steady_clock::now();
    std::optional<routing::Route> route = prepared.query(s, t);
    double query_us = ms_since(start) * 1000.0;

    if (!route) {
        std::cout << json{{"error", "unreachable"}}.dump() << "\n";
        return exit_code::kUnreachable;
    }
    json path = json::array();
    for (int v : route->nodes) path.push_back(net.nodes[v].id);
    std::cout << json{{"cost", route->cost},
                      {"path", std::move(path)},
                      {"scanned_vertices", route->scanned_vertices},
                      {"preprocess_ms", prepared.preprocess_ms},
                      {"query_us", query_us}}
                     .dump()
              << "\n";
    return exit_code::kOk;
}

// ---------------------------------------------------------------------------
// bench
// ---------------------------------------------------------------------------

int cmd_bench(const std::string &net_path, int queries, std::uint64_t seed) {
    RoadNetwork net = load_network(net_path);
    routing::Graph g = routing::Graph::from_network(net);

    std::mt19937_64 rng(seed);
    std::vector<std::pair<int, int>> qs;
    for (int i = 0; i < queries; ++i)
        qs.emplace_back(static_cast<int>(rng() % g.n), static_cast<int>(rng() % g.n));

    std::cout << "algo,queries,preprocess_ms,mean_scanned,mean_query_us,cost_checksum,status\n";

    std::vector<std::optional<double>> reference;  // dijkstra's per-query costs
    bool disagreement = false;
    for (const std::string &algo : kAlgos) {
        PreparedAlgo prepared;
        try {
            prepared = prepare_algo(g, algo, seed);
        } catch (const ValidationError &e) {
            log_warn(std::string("bench: ") + algo + " skipped: " + e.what());
            std::cout << algo << "," << queries << ",,,,," << "skipped\n";
            continue;
        }
        double scanned_sum = 0.0;
        double query_us_sum = 0.0;
        double cost_sum = 0.0;
        int unreachable = 0;
        bool mismatch = false;
        std::vector<std::optional<double>> costs;
        for (auto [s, t] : qs) {
            auto start = std::chrono::steady_clock::now();
            std::optional<routing::Route> r = prepared.query(s, t);
            query_us_sum += ms_since(start) * 1000.0;
            if (r) {
                scanned_sum += static_cast<double>(r->scanned_vertices);
                cost_sum += r->cost;
                costs.emplace_back(r->cost);
            } else {
                ++unreachable;
                costs.emplace_back(std::nullopt);
            }
        }
        if (algo == "dijkstra") {
            reference = costs;
        } else {
            for (size_t i = 0; i < costs.size(); ++i) {
                if (costs[i].has_value() != reference[i].has_value()) {
                    mismatch = true;
                } else if (costs[i] &&
                           std::abs(*costs[i] - *reference[i]) >
                               1e-9 * (1.0 + *reference[i])) {
                    // Bidirectional searches add path halves in a different
                    // order; agreement is up to float associativity.
                    mismatch = true;
                }
            }
        }
        if (mismatch) disagreement = true;
        std::ostringstream checksum;
        checksum.precision(6);
        checksum << std::fixed << "sum=" << cost_sum << ";unreachable=" << unreachable;
        double denom = queries > 0 ? static_cast<double>(queries) : 1.0;
        std::cout << algo << "," << queries << "," << prepared.preprocess_ms << ","
                  << scanned_sum / denom << "," << query_us_sum / denom << "," << checksum.str()
                  << "," << (mismatch ? "MISMATCH" : "ok") << "\n";
    }
    return disagreement ? exit_code::kDisagreement : exit_code::kOk;
}

// ---------------------------------------------------------------------------
// ca
// ---------------------------------------------------------------------------

int cmd_ca(int length, std::optional<double> density, int v_max, double p_slow, int steps,
           std::uint64_t seed, const std::string &svg_path) {
    if (length < 1 || steps < 1 || v_max < 0 || p_slow < 0.0 || p_slow > 1.0) {
        std::cerr << "ca: invalid parameter ranges\n";
        return exit_code::kUsage;
    }
    std::vector<double> densities;
    if (density) {
        if (*density < 0.0 || *density > 1.0) {
            std::cerr << "ca: density must be in [0,1]\n";
            return exit_code::kUsage;
        }
        densities.push_back(*density);
    } else {
        for (int i = 0; i <= 20; ++i) densities.push_back(i / 20.0);
    }

    std::cout << "density,flow,mean_speed\n";
    std::vector<Vec2> points;
    for (double d : densities) {
        CellLattice lat = CellLattice::ring_with_density(length, d, v_max, p_slow, seed);
        int warmup = std::min(500, steps);
        for (int i = 0; i < warmup; ++i) lat.step();
        MacroSample m = lat.measure(steps);
        std::cout << m.density << "," << m.flow << "," << m.mean_speed << "\n";
        points.push_back({m.density, m.flow});
    }
    if (!svg_path.empty()) {
        double max_flow = 0.0;
        for (const Vec2 &p : points) max_flow = std::max(max_flow, p.y);
        SvgWriter svg({0.0, 0.0}, {1.0, std::max(0.1, max_flow * 1.1)}, 600);
        svg.polyline(std::vector<Vec2>{{0, 0}, {1, 0}}, "#888", 1.0);
        for (const Vec2 &p : points) svg.circle(p, 0.008, "#d33");
        svg.text({0.02, max_flow * 1.02}, "flow vs density");
        svg.save(svg_path);
    }
    return exit_code::kOk;
}

// ---------------------------------------------------------------------------
// plan
// ---------------------------------------------------------------------------

bool parse_xy(const std::string &s, Vec2 &out) {
    std::istringstream in(s);
    char comma = 0;
    in >> out.x >> comma >> out.y;
    return static_cast<bool>(in) && comma == ',';
}

json path_to_json(const Path &path) {
    json arr = json::array();
    for (const Vec2 &p : path) arr.push_back({p.x, p.y});
    return arr;
}

void plan_svg(const std::string &svg_path, const OccupancyGrid &grid, const Path &path) {
    Vec2 lo = grid.origin();
    Vec2 hi = lo + Vec2{grid.width() * grid.cell_size(), grid.height() * grid.cell_size()};
    SvgWriter svg(lo, hi, 700);
    for (int y = 0; y < grid.height(); ++y)
        for (int x = 0; x < grid.width(); ++x)
            if (!grid.passable(x, y)) {
                Vec2 c0 = grid.origin() + Vec2{x * grid.cell_size(), y * grid.cell_size()};
                svg.rect(c0, c0 + Vec2{grid.cell_size(), grid.cell_size()}, "#bbb");
            }
    if (!path.empty()) svg.polyline(path, "#06c", 2.0);
    svg.save(svg_path);
}

int cmd_plan(const std::string &net_path, const std::string &from_s, const std::string &to_s,
             const std::string &method, int samples, std::uint64_t seed, double horizon,
             const std::string &svg_path) {
    Vec2 from, to;
    if (!parse_xy(from_s, from) || !parse_xy(to_s, to)) {
        std::cerr << "plan: --from/--to must be x,y\n";
        return exit_code::kUsage;
    }
    RoadNetwork net = load_network(net_path);
    const OccupancyGrid &grid = net.grid;

    if (method == "astar") {
        auto plan = grid_plan(grid, grid.cell_at(from), grid.cell_at(to));
        if (!plan) {
            std::cout << json{{"error", "no path"}}.dump() << "\n";
            return exit_code::kUnreachable;
        }
        std::cout << json{{"method", "astar"},
                          {"cost", plan->cost},
                          {"path", path_to_json(plan->points)}}
                         .dump()
                  << "\n";
        if (!svg_path.empty()) plan_svg(svg_path, grid, plan->points);
        return exit_code::kOk;
    }
    if (method == "rrt") {
        auto path = sample_plan(grid, from, to, samples, seed);
        if (!path) {
            std::cout << json{{"error", "no path"}}.dump() << "\n";
            return exit_code::kUnreachable;
        }
        std::cout << json{{"method", "rrt"}, {"path", path_to_json(*path)}}.dump() << "\n";
        if (!svg_path.empty()) plan_svg(svg_path, grid, *path);
        return exit_code::kOk;
    }
    if (method == "field") {
        // Impassable cells act as disc obstacles; descend the force field.
        std::vector<DiscObstacle> obstacles;
        for (int y = 0; y < grid.height(); ++y)
            for (int x = 0; x < grid.width(); ++x)
                if (!grid.passable(x, y))
                    obstacles.push_back({grid.cell_center({x, y}), grid.cell_size() * 0.5});
        PotentialGains gains{1.0, 4.0 * grid.cell_size() * grid.cell_size(),
                             4.0 * grid.cell_size()};
        Path path{from};
        Vec2 pos = from;
        double step = grid.cell_size() * 0.5;
        bool reached = false, stalled = false;
        for (int i = 0; i < 20000; ++i) {
            if (distance(pos, to) <= step) {
                reached = true;
                path.push_back(to);
                break;
            }
            Vec2 force = potential_field_step(pos, to, obstacles, gains);
            if (norm(force) < 1e-9) {
                stalled = true;  // local minimum deadlock
                break;
            }
            pos += normalized(force) * step;
            path.push_back(pos);
        }
        if (!reached && !stalled) stalled = true;  // iteration cap
        std::cout << json{{"method", "field"},
                          {"reached", reached},
                          {"stalled", stalled},
                          {"path", path_to_json(path)}}
                         .dump()
                  << "\n";
        if (!svg_path.empty()) plan_svg(svg_path, grid, path);
        return reached ? exit_code::kOk : exit_code::kUnreachable;
    }
    if (method == "quintic") {
        Trajectory traj = quintic_connect({from, {}, {}}, {to, {}, {}}, horizon);
        json jt = json::array();
        for (const TrajectoryPoint &p : traj)
            jt.push_back({{"t", p.t}, {"x", p.position.x}, {"y", p.position.y},
                          {"speed", p.speed}});
        std::cout << json{{"method", "quintic"}, {"T", horizon}, {"trajectory", std::move(jt)}}
                         .dump()
                  << "\n";
        if (!svg_path.empty()) {
            Path path;
            for (const TrajectoryPoint &p : traj) path.push_back(p.position);
            plan_svg(svg_path, grid, path);
        }
        return exit_code::kOk;
    }
    std::cerr << "plan: unknown method \"" << method << "\" (valid: astar, rrt, field, quintic)\n";
    return exit_code::kUsage;
}

// ---------------------------------------------------------------------------
// eval
// ---------------------------------------------------------------------------

void eval_svg(const std::string &path, const ScenarioConfig &cfg, const EvalReport &report) {
    Vec2 lo{1e18, 1e18}, hi{-1e18, -1e18};
    auto grow = [&](const Vec2 &p) {
        lo.x = std::min(lo.x, p.x);
        lo.y = std::min(lo.y, p.y);
        hi.x = std::max(hi.x, p.x);
        hi.y = std::max(hi.y, p.y);
    };
    for (const Node &n : cfg.network.nodes) grow(n.pos);
    for (const auto &mode : {&report.spline, &report.grid})
        for (const TickRecord &rec : mode->trace.ticks)
            for (const AgentRecord &a : rec.agents) grow(a.position);
    lo = lo - Vec2{10, 10};
    hi = hi + Vec2{10, 10};

    SvgWriter svg(lo, hi, 800);
    for (const Edge &e : cfg.network.edges) svg.polyline(e.lane.points(), "#ddd", 1.0);
    for (const DiscObstacle &o : cfg.obstacles) svg.circle(o.center, o.radius, "#999");

    auto draw_mode = [&](const EvalModeResult &m, const std::string &color) {
        std::map<int, Path> tracks;
        for (const TickRecord &rec : m.trace.ticks)
            for (const AgentRecord &a : rec.agents) tracks[a.id].push_back(a.position);
        for (const auto &[id, track] : tracks) svg.polyline(track, color, 1.5);
    };
    draw_mode(report.spline, "#d33");
    draw_mode(report.grid, "#06c");
    svg.save(path);
}

int cmd_eval(const std::string &scenario_path, const std::string &out_dir) {
    ScenarioConfig cfg = load_scenario(scenario_path);
    auto start = std::chrono::steady_clock::now();
    EvalReport report = evaluate_modes(cfg);
    log_info("eval wall time: " + std::to_string(ms_since(start)) + " ms");

    atomic_write_file(out_dir + "/eval.json", eval_to_json(report));
    eval_svg(out_dir + "/eval.svg", cfg, report);
    return exit_code::kOk;
}

}  // namespace

int main(int argc, char **argv) {
    CLI::App app{"flowsim: microscopic traffic-flow simulator"};
    app.require_subcommand(1);

    // run
    auto *run_cmd = app.add_subcommand("run", "Run a scenario and write trace + metrics");
    std::string scenario, out_dir = ".";
    std::optional<std::uint64_t> seed_override;
    run_cmd->add_option("scenario", scenario, "Scenario JSON file")->required();
    run_cmd->add_option("--out", out_dir, "Output directory")->required();
    std::uint64_t seed_val = 0;
    bool seed_set = false;
    run_cmd->add_option("--seed", seed_val, "Seed override")->each([&](const std::string &) {
        seed_set = true;
    });

    // route
    auto *route_cmd = app.add_subcommand("route", "Shortest path query");
    std::string net_path, from_node, to_node, algo = "dijkstra";
    route_cmd->add_option("network", net_path, "Network JSON file")->required();
    route_cmd->add_option("--from", from_node, "Source node id")->required();
    route_cmd->add_option("--to", to_node, "Target node id")->required();
    route_cmd->add_option("--algo", algo, "dijkstra|astar|alt|arcflags|ch|reach");

    // bench
    auto *bench_cmd = app.add_subcommand("bench", "Compare routing techniques");
    std::string bench_net;
    int bench_queries = 100;
    std::uint64_t bench_seed = 1;
    bench_cmd->add_option("network", bench_net, "Network JSON file")->required();
    bench_cmd->add_option("--queries", bench_queries, "Number of random queries");
    bench_cmd->add_option("--seed", bench_seed, "Query seed");

    // ca
    auto *ca_cmd = app.add_subcommand("ca", "Cellular-automata lane simulation (CSV)");
    int ca_length = 1000, ca_vmax = 5, ca_steps = 2000;
    double ca_p = 0.3;
    std::uint64_t ca_seed = 1;
    std::optional<double> ca_density;
    std::string ca_svg;
    double ca_density_val = 0.0;
    bool ca_density_set = false;
    ca_cmd->add_option("--length", ca_length, "Ring length in cells");
    ca_cmd->add_option("--density", ca_density_val, "Single density (omit to sweep 21 values)")
        ->each([&](const std::string &) { ca_density_set = true; });
    ca_cmd->add_option("--vmax", ca_vmax, "Maximum speed, cells/step");
    ca_cmd->add_option("--p", ca_p, "Random slowdown probability");
    ca_cmd->add_option("--steps", ca_steps, "Measurement steps");
    ca_cmd->add_option("--seed", ca_seed, "RNG seed");
    ca_cmd->add_option("--svg", ca_svg, "Write flow/density scatter SVG");

    // plan
    auto *plan_cmd = app.add_subcommand("plan", "Local planners over the network grid");
    std::string plan_net, plan_from, plan_to, plan_method = "astar", plan_svg_path;
    int plan_samples = 5000;
    std::uint64_t plan_seed = 1;
    double plan_T = 10.0;
    plan_cmd->add_option("--grid", plan_net, "Network JSON file (grid source)")->required();
    plan_cmd->add_option("--from", plan_from, "Start x,y")->required();
    plan_cmd->add_option("--to", plan_to, "Goal x,y")->required();
    plan_cmd->add_option("--method", plan_method, "astar|rrt|field|quintic");
    plan_cmd->add_option("--samples", plan_samples, "RRT sample budget");
    plan_cmd->add_option("--seed", plan_seed, "RRT seed");
    plan_cmd->add_option("--T", plan_T, "Quintic horizon, seconds");
    plan_cmd->add_option("--svg", plan_svg_path, "Write plan SVG");

    // eval
    auto *eval_cmd = app.add_subcommand("eval", "Compare spline vs grid guidance");
    std::string eval_scenario, eval_out = ".";
    eval_cmd->add_option("scenario", eval_scenario, "Scenario JSON file")->required();
    eval_cmd->add_option("--out", eval_out, "Output directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError &e) {
        return app.exit(e) == 0 ? exit_code::kOk : exit_code::kUsage;
    }

    try {
        if (run_cmd->parsed()) {
            if (seed_set) seed_override = seed_val;
            return cmd_run(scenario, out_dir, seed_override);
        }
        if (route_cmd->parsed()) return cmd_route(net_path, from_node, to_node, algo);
        if (bench_cmd->parsed()) return cmd_bench(bench_net, bench_queries, bench_seed);
        if (ca_cmd->parsed()) {
            if (ca_density_set) ca_density = ca_density_val;
            return cmd_ca(ca_length, ca_density, ca_vmax, ca_p, ca_steps, ca_seed, ca_svg);
        }
        if (plan_cmd->parsed())
            return cmd_plan(plan_net, plan_from, plan_to, plan_method, plan_samples, plan_seed,
                            plan_T, plan_svg_path);
        if (eval_cmd->parsed()) return cmd_eval(eval_scenario, eval_out);
    } catch (const std::exception &e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_code::kUsage;
    }
    return exit_code::kUsage;
}
