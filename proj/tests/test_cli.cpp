#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include <json.hpp>

#include "flowsim/road_network.hpp"

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct CliResult {
    int exit_code = -1;
    std::string out;
};

CliResult run_cli(const std::string &args) {
    std::string cmd = std::string(FLOWSIM_CLI_BIN) + " " + args + " 2>/dev/null";
    std::array<char, 4096> buf{};
    CliResult r;
    FILE *pipe = popen(cmd.c_str(), "r");
    REQUIRE(pipe != nullptr);
    size_t n;
    while ((n = fread(buf.data(), 1, buf.size(), pipe)) > 0) r.out.append(buf.data(), n);
    int status = pclose(pipe);
    r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return r;
}

std::string slurp(const fs::path &p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.good());
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path fresh_dir(const std::string &name) {
    fs::path dir = fs::temp_directory_path() / ("flowsim_cli_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

fs::path write_triangle_net(const fs::path &dir) {
    // A->B = 1, B->C = 1, A->C = 3 (distances scaled in meters).
    json net{
        {"nodes",
         {{{"id", "A"}, {"x", 0}, {"y", 0}},
          {{"id", "B"}, {"x", 1}, {"y", 0}},
          {{"id", "C"}, {"x", 2}, {"y", 0}},
          {{"id", "D"}, {"x", 9}, {"y", 9}}}},
        {"edges",
         {{{"from", "A"}, {"to", "B"}, {"length", 1.0}, {"speed_limit", 10.0},
           {"spline", {{0, 0}, {1, 0}}}},
          {{"from", "B"}, {"to", "C"}, {"length", 1.0}, {"speed_limit", 10.0},
           {"spline", {{1, 0}, {2, 0}}}},
          {{"from", "A"}, {"to", "C"}, {"length", 3.0}, {"speed_limit", 10.0},
           {"spline", {{0, 0}, {1, 1}, {2, 0}}}}}},
        {"lights", json::array()},
        {"grid",
         {{"origin", {-1, -1}}, {"cell_size", 1.0}, {"width", 4}, {"height", 4},
          {"passable", {"1111", "1111", "1111", "1111"}}}}};
    // The detour spline is ~2.83 m; keep declared length within 10%.
    net["edges"][2]["length"] = 2.9;
    fs::path p = dir / "triangle.json";
    std::ofstream(p) << net.dump();
    return p;
}

std::string scenario_path(const char *name) {
    return std::string(FLOWSIM_SCENARIO_DIR) + "/" + name;
}

}  // namespace

TEST_CASE("every subcommand answers --help with exit 0") {
    for (const char *sub : {"run", "route", "bench", "ca", "plan", "eval"}) {
        CliResult r = run_cli(std::string(sub) + " --help");
        CHECK(r.exit_code == 0);
        CHECK(!r.out.empty());
    }
}

TEST_CASE("route: every algorithm returns the triangle shortest path") {
    fs::path dir = fresh_dir("route");
    fs::path net = write_triangle_net(dir);
    for (const char *algo : {"dijkstra", "astar", "alt", "arcflags", "ch", "reach"}) {
        CliResult r = run_cli("route " + net.string() + " --from A --to C --algo " + algo);
        REQUIRE(r.exit_code == 0);
        json j = json::parse(r.out);
        CHECK(j["cost"].get<double>() == doctest::Approx(2.0));
        CHECK(j.contains("scanned_vertices"));
        CHECK(j.contains("preprocess_ms"));
        CHECK(j.contains("query_us"));
    }
}

TEST_CASE("route: self query costs zero") {
    fs::path dir = fresh_dir("route_self");
    fs::path net = write_triangle_net(dir);
    CliResult r = run_cli("route " + net.string() + " --from B --to B --algo dijkstra");
    REQUIRE(r.exit_code == 0);
    CHECK(json::parse(r.out)["cost"].get<double>() == 0.0);
}

TEST_CASE("route: unreachable target exits 3 with an error object") {
    fs::path dir = fresh_dir("route_unreach");
    fs::path net = write_triangle_net(dir);
    CliResult r = run_cli("route " + net.string() + " --from A --to D --algo dijkstra");
    CHECK(r.exit_code == 3);
    CHECK(json::parse(r.out)["error"] == "unreachable");
}

TEST_CASE("route: unknown algorithm exits 1 and lists the valid names") {
    fs::path dir = fresh_dir("route_badalgo");
    fs::path net = write_triangle_net(dir);
    std::string cmd = std::string(FLOWSIM_CLI_BIN) + " route " + net.string() +
                      " --from A --to C --algo warp 2>&1";
    std::array<char, 4096> buf{};
    std::string out;
    FILE *pipe = popen(cmd.c_str(), "r");
    REQUIRE(pipe);
    size_t n;
    while ((n = fread(buf.data(), 1, buf.size(), pipe)) > 0) out.append(buf.data(), n);
    int status = pclose(pipe);
    CHECK(WEXITSTATUS(status) == 1);
    CHECK(out.find("dijkstra") != std::string::npos);
    CHECK(out.find("reach") != std::string::npos);
}

TEST_CASE("run: canonical town scenario exits 0 and writes both files") {
    fs::path dir = fresh_dir("run_town");
    CliResult r = run_cli("run " + scenario_path("town.json") + " --out " + dir.string());
    CHECK(r.exit_code == 0);
    CHECK(fs::exists(dir / "trace.jsonl"));
    CHECK(fs::exists(dir / "metrics.json"));
    json m = json::parse(slurp(dir / "metrics.json"));
    CHECK(m["aggregate"]["all_parked"] == true);
    CHECK(m["aggregate"]["total_collisions"] == 0);
    // No leftover temp files from the atomic writes.
    for (const auto &e : fs::directory_iterator(dir))
        CHECK(e.path().extension() != ".tmp");
}

TEST_CASE("run: missing scenario exits 1 and names the path") {
    std::string cmd = std::string(FLOWSIM_CLI_BIN) +
                      " run /nonexistent/scenario.json --out /tmp 2>&1";
    std::array<char, 4096> buf{};
    std::string out;
    FILE *pipe = popen(cmd.c_str(), "r");
    REQUIRE(pipe);
    size_t n;
    while ((n = fread(buf.data(), 1, buf.size(), pipe)) > 0) out.append(buf.data(), n);
    CHECK(WEXITSTATUS(pclose(pipe)) == 1);
    CHECK(out.find("/nonexistent/scenario.json") != std::string::npos);
}

TEST_CASE("run: head-on crash scenario exits 2") {
    fs::path dir = fresh_dir("run_crash");
    json net{
        {"nodes", {{{"id", "A"}, {"x", 0}, {"y", 0}}, {{"id", "B"}, {"x", 100}, {"y", 0}}}},
        {"edges",
         {{{"from", "A"}, {"to", "B"}, {"length", 100.0}, {"speed_limit", 10.0},
           {"spline", {{0, 0}, {100, 0}}}},
          {{"from", "B"}, {"to", "A"}, {"length", 100.0}, {"speed_limit", 10.0},
           {"spline", {{100, 0}, {0, 0}}}}}},
        {"lights", json::array()},
        {"grid",
         {{"origin", {-10, -10}}, {"cell_size", 2.0}, {"width", 60}, {"height", 10},
          {"passable", json::array()}}}};
    for (int i = 0; i < 10; ++i) net["grid"]["passable"].push_back(std::string(60, '1'));
    std::ofstream(dir / "net.json") << net.dump();
    json scenario{{"network", "net.json"},
                  {"agents",
                   {{{"id", 0}, {"spawn", "A"}, {"goal", "B"}, {"mode", "spline"}},
                    {{"id", 1}, {"spawn", "B"}, {"goal", "A"}, {"mode", "spline"}}}},
                  {"params", {{"duration", 30.0}, {"routing", "dijkstra"}, {"avoidance", false}}}};
    std::ofstream(dir / "crash.json") << scenario.dump();
    CliResult r = run_cli("run " + (dir / "crash.json").string() + " --out " + dir.string());
    CHECK(r.exit_code == 2);
}

TEST_CASE("run twice: byte-identical trace and metrics") {
    fs::path d1 = fresh_dir("det1"), d2 = fresh_dir("det2");
    CHECK(run_cli("run " + scenario_path("town.json") + " --out " + d1.string()).exit_code == 0);
    CHECK(run_cli("run " + scenario_path("town.json") + " --out " + d2.string()).exit_code == 0);
    CHECK(slurp(d1 / "trace.jsonl") == slurp(d2 / "trace.jsonl"));
    CHECK(slurp(d1 / "metrics.json") == slurp(d2 / "metrics.json"));
}

TEST_CASE("ca: single density row, zero-density gives zero flow") {
    CliResult r = run_cli("ca --length 100 --density 0 --vmax 5 --p 0.3 --steps 50 --seed 1");
    REQUIRE(r.exit_code == 0);
    std::istringstream in(r.out);
    std::string header, row;
    std::getline(in, header);
    std::getline(in, row);
    CHECK(header == "density,flow,mean_speed");
    CHECK(row == "0,0,0");
}

TEST_CASE("ca: free flow at low density reaches v_max") {
    CliResult r =
        run_cli("ca --length 120 --density 0.05 --vmax 5 --p 0 --steps 200 --seed 1");
    REQUIRE(r.exit_code == 0);
    std::istringstream in(r.out);
    std::string header, row;
    std::getline(in, header);
    std::getline(in, row);
    double mean_speed = std::stod(row.substr(row.rfind(',') + 1));
    CHECK(mean_speed == doctest::Approx(5.0));
}

TEST_CASE("ca: sweep emits 21 rows and is reproducible") {
    std::string args = "ca --length 200 --vmax 5 --p 0.3 --steps 300 --seed 9";
    CliResult r1 = run_cli(args);
    CliResult r2 = run_cli(args);
    REQUIRE(r1.exit_code == 0);
    CHECK(r1.out == r2.out);
    int rows = -1;  // header
    std::istringstream in(r1.out);
    std::string line;
    while (std::getline(in, line))
        if (!line.empty()) ++rows;
    CHECK(rows == 21);
    CHECK(run_cli(args + " --density 2").exit_code == 1);
}

TEST_CASE("bench: zero queries prints only the header") {
    fs::path dir = fresh_dir("bench0");
    fs::path net = write_triangle_net(dir);
    CliResult r = run_cli("bench " + net.string() + " --queries 0 --seed 1");
    REQUIRE(r.exit_code == 0);
    std::istringstream in(r.out);
    std::string line;
    std::getline(in, line);
    CHECK(line == "algo,queries,preprocess_ms,mean_scanned,mean_query_us,cost_checksum,status");
}

TEST_CASE("bench: all techniques report the same cost checksum") {
    fs::path dir = fresh_dir("bench");
    fs::path net = write_triangle_net(dir);
    CliResult r = run_cli("bench " + net.string() + " --queries 40 --seed 3");
    REQUIRE(r.exit_code == 0);
    std::istringstream in(r.out);
    std::string line;
    std::getline(in, line);  // header
    std::string checksum;
    int rows = 0;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        ++rows;
        size_t pos = line.find("sum=");
        REQUIRE(pos != std::string::npos);
        std::string cs = line.substr(pos, line.find(',', pos) - pos);
        if (checksum.empty())
            checksum = cs;
        else
            CHECK(cs == checksum);
        CHECK(line.rfind(",ok") == line.size() - 3);
    }
    CHECK(rows == 6);
}

TEST_CASE("plan: astar and rrt emit paths, quintic a trajectory") {
    CliResult a = run_cli("plan --grid " + scenario_path("town_network.json") +
                          " --from 60,0 --to 160,60 --method astar");
    REQUIRE(a.exit_code == 0);
    json ja = json::parse(a.out);
    CHECK(ja["method"] == "astar");
    CHECK(ja["path"].size() > 2);

    CliResult rrt = run_cli("plan --grid " + scenario_path("town_network.json") +
                            " --from 60,0 --to 100,0 --method rrt --samples 4000 --seed 5");
    REQUIRE(rrt.exit_code == 0);
    CHECK(json::parse(rrt.out)["method"] == "rrt");

    CliResult q = run_cli("plan --grid " + scenario_path("town_network.json") +
                          " --from 0,0 --to 30,10 --method quintic --T 6");
    REQUIRE(q.exit_code == 0);
    json jq = json::parse(q.out);
    CHECK(jq["trajectory"].size() > 10);
    CHECK(jq["trajectory"].back()["t"].get<double>() == doctest::Approx(6.0));
}

TEST_CASE("run: blocked scenario without a collision exits 5") {
    fs::path dir = fresh_dir("run_blocked");
    // The obstacle scenario's spline agent brakes for the roadblock and ends
    // stopped: completed run, nobody parked, no collision.
    CliResult r = run_cli("run " + scenario_path("obstacle.json") + " --out " + dir.string());
    CHECK(r.exit_code == 5);
}

TEST_CASE("bench on a 10k-node grid: ch scans less than dijkstra, reach skips") {
    fs::path dir = fresh_dir("bench_grid");
    // 100x100 unit grid as a road network file.
    flowsim::RoadNetwork net;
    const int n = 100;
    for (int y = 0; y < n; ++y)
        for (int x = 0; x < n; ++x)
            net.nodes.push_back({"n" + std::to_string(y * n + x),
                                 {static_cast<double>(x * 10), static_cast<double>(y * 10)}});
    auto add_edge = [&](int a, int b) {
        flowsim::Edge e;
        e.from = a;
        e.to = b;
        e.length = 10.0;
        e.speed_limit = 14.0;
        e.lane = flowsim::Spline({net.nodes[a].pos, net.nodes[b].pos});
        net.edges.push_back(std::move(e));
    };
    for (int y = 0; y < n; ++y)
        for (int x = 0; x < n; ++x) {
            int id = y * n + x;
            if (x + 1 < n) {
                add_edge(id, id + 1);
                add_edge(id + 1, id);
            }
            if (y + 1 < n) {
                add_edge(id, id + n);
                add_edge(id + n, id);
            }
        }
    net.grid = flowsim::OccupancyGrid({0, 0}, 10.0, 1, 1, {1});
    net.rebuild_index();
    flowsim::save_network(net, (dir / "grid.json").string());

    CliResult r = run_cli("bench " + (dir / "grid.json").string() + " --queries 30 --seed 4");
    REQUIRE(r.exit_code == 0);
    std::istringstream in(r.out);
    std::string line;
    std::getline(in, line);  // header
    std::map<std::string, std::vector<std::string>> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<std::string> cols;
        std::stringstream ls(line);
        std::string col;
        while (std::getline(ls, col, ',')) cols.push_back(col);
        rows[cols[0]] = cols;
    }
    REQUIRE(rows.count("dijkstra"));
    REQUIRE(rows.count("ch"));
    REQUIRE(rows.count("reach"));
    CHECK(rows["reach"].back() == "skipped");  // 10k vertices exceed the exact-reach limit
    double dj = std::stod(rows["dijkstra"][3]);
    double ch = std::stod(rows["ch"][3]);
    CHECK(ch < dj);
    CHECK(rows["ch"].back() == "ok");
    CHECK(rows["alt"].back() == "ok");
    CHECK(rows["arcflags"].back() == "ok");
    CHECK(rows["astar"].back() == "ok");
}

TEST_CASE("eval: writes the comparison report and a two-polyline overlay") {
    fs::path dir = fresh_dir("eval");
    // Single-agent scenario: the overlay has exactly one polyline per mode.
    json scenario{{"network", scenario_path("obstacle_network.json")},
                  {"agents", {{{"id", 0}, {"spawn", "A"}, {"goal", "B"}, {"mode", "spline"}}}},
                  {"params", {{"duration", 40.0}, {"routing", "dijkstra"}}}};
    std::ofstream(dir / "single.json") << scenario.dump();
    CliResult r = run_cli("eval " + (dir / "single.json").string() + " --out " + dir.string());
    REQUIRE(r.exit_code == 0);
    json e = json::parse(slurp(dir / "eval.json"));
    CHECK(e["modes"].size() == 2);
    CHECK(e["modes"].contains("spline"));
    CHECK(e["modes"].contains("grid"));
    std::string svg = slurp(dir / "eval.svg");
    size_t count = 0;
    for (size_t pos = 0; (pos = svg.find("<polyline", pos)) != std::string::npos; ++pos) ++count;
    // One agent track per mode, plus one lane outline in the background.
    CHECK(count == 3);

    // Determinism of the report file.
    fs::path dir2 = fresh_dir("eval2");
    run_cli("eval " + (dir / "single.json").string() + " --out " + dir2.string());
    CHECK(slurp(dir / "eval.json") == slurp(dir2 / "eval.json"));
}
