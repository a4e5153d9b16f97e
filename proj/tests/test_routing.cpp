#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <random>
#include <set>

#include "flowsim/errors.hpp"
#include "flowsim/routing.hpp"
#include "test_util.hpp"

using namespace flowsim;
using namespace flowsim::routing;
using flowsim::test::floyd_warshall;
using flowsim::test::grid_graph;
using flowsim::test::random_graph;

namespace {

// Exhaustive simple-path enumeration oracle for tiny graphs.
void enumerate_paths(const Graph &g, int u, int t, std::vector<char> &used, double cost,
                     double &best) {
    if (u == t) {
        best = std::min(best, cost);
        return;
    }
    for (int e = g.head[u]; e < g.head[u + 1]; ++e) {
        int v = g.to[e];
        if (used[v]) continue;
        used[v] = 1;
        enumerate_paths(g, v, t, used, cost + g.w[e], best);
        used[v] = 0;
    }
}

double brute_force_cost(const Graph &g, int s, int t) {
    std::vector<char> used(g.n, 0);
    used[s] = 1;
    double best = std::numeric_limits<double>::infinity();
    enumerate_paths(g, s, t, used, 0.0, best);
    return best;
}

double path_weight(const Graph &g, const std::vector<int> &nodes) {
    double total = 0.0;
    for (size_t i = 0; i + 1 < nodes.size(); ++i) {
        double best = std::numeric_limits<double>::infinity();
        for (int e = g.head[nodes[i]]; e < g.head[nodes[i] + 1]; ++e)
            if (g.to[e] == nodes[i + 1]) best = std::min(best, g.w[e]);
        REQUIRE(best < std::numeric_limits<double>::infinity());
        total += best;
    }
    return total;
}

void check_route_valid(const Graph &g, const Route &r, int s, int t) {
    REQUIRE(!r.nodes.empty());
    CHECK(r.nodes.front() == s);
    CHECK(r.nodes.back() == t);
    CHECK(path_weight(g, r.nodes) == doctest::Approx(r.cost).epsilon(1e-9));
}

}  // namespace

TEST_CASE("dijkstra: triangle matches exhaustive path enumeration") {
    Graph g = Graph::from_edges(3, {{0, 1, 1.0}, {1, 2, 1.0}, {0, 2, 3.0}});
    auto r = dijkstra(g, 0, 2);
    REQUIRE(r);
    CHECK(r->cost == doctest::Approx(brute_force_cost(g, 0, 2)));
    CHECK(r->cost == doctest::Approx(2.0));
    CHECK(r->nodes == std::vector<int>{0, 1, 2});
}

TEST_CASE("dijkstra: self query and unreachable target") {
    Graph g = Graph::from_edges(3, {{0, 1, 1.0}});
    auto self = dijkstra(g, 0, 0);
    REQUIRE(self);
    CHECK(self->cost == 0.0);
    CHECK(self->nodes == std::vector<int>{0});
    CHECK_FALSE(dijkstra(g, 0, 2));
    CHECK_FALSE(dijkstra(g, 1, 0));
}

TEST_CASE("dijkstra agrees with Floyd-Warshall on random graphs") {
    std::mt19937_64 rng(101);
    for (int trial = 0; trial < 60; ++trial) {
        Graph g = random_graph(rng, 40, 160);
        auto ap = floyd_warshall(g);
        for (int q = 0; q < 5; ++q) {
            int s = static_cast<int>(rng() % g.n), t = static_cast<int>(rng() % g.n);
            auto r = dijkstra(g, s, t);
            if (ap[s][t] == std::numeric_limits<double>::infinity()) {
                CHECK_FALSE(r);
            } else {
                REQUIRE(r);
                CHECK(r->cost == doctest::Approx(ap[s][t]).epsilon(1e-9));
                check_route_valid(g, *r, s, t);
            }
        }
    }
}

TEST_CASE("astar with zero heuristic is dijkstra") {
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 200; ++trial) {
        Graph g = random_graph(rng, 50, 200);
        int s = static_cast<int>(rng() % g.n), t = static_cast<int>(rng() % g.n);
        auto a = astar(g, s, t, [](int) { return 0.0; });
        auto d = dijkstra(g, s, t);
        REQUIRE(a.has_value() == d.has_value());
        if (d) {
            CHECK(a->cost == d->cost);
            CHECK(a->nodes == d->nodes);
        }
    }
}

TEST_CASE("astar euclidean on a grid: equal cost, no more scans") {
    Graph g = grid_graph(20, 20);
    std::mt19937_64 rng(13);
    for (int q = 0; q < 50; ++q) {
        int s = static_cast<int>(rng() % g.n), t = static_cast<int>(rng() % g.n);
        auto a = astar_euclidean(g, s, t);
        auto d = dijkstra(g, s, t);
        REQUIRE(a);
        REQUIRE(d);
        CHECK(a->cost == doctest::Approx(d->cost));
        CHECK(a->scanned_vertices <= d->scanned_vertices);
    }
}

TEST_CASE("astar euclidean stays exact when weights undercut the geometry") {
    // Lane-style graphs can have edge weights shorter than the straight-line
    // vertex span; the scaled heuristic must not overestimate.
    std::mt19937_64 rng(61);
    for (int trial = 0; trial < 100; ++trial) {
        int n = 3 + static_cast<int>(rng() % 30);
        std::vector<Vec2> pos(n);
        for (Vec2 &p : pos) p = {test::urand(rng) * 100, test::urand(rng) * 100};
        std::vector<std::tuple<int, int, double>> edges;
        int m = static_cast<int>(rng() % (4 * n));
        for (int e = 0; e < m; ++e) {
            int u = static_cast<int>(rng() % n), v = static_cast<int>(rng() % n);
            if (u == v) continue;
            double w = std::max(0.05, distance(pos[u], pos[v]) * (0.3 + 1.7 * test::urand(rng)));
            edges.emplace_back(u, v, w);
        }
        Graph g = Graph::from_edges(n, edges, pos);
        int s = static_cast<int>(rng() % n), t = static_cast<int>(rng() % n);
        auto a = astar_euclidean(g, s, t);
        auto d = dijkstra(g, s, t);
        REQUIRE(a.has_value() == d.has_value());
        if (d) CHECK(a->cost == doctest::Approx(d->cost).epsilon(1e-12));
    }
}

TEST_CASE("astar on a corridor scans only corridor vertices") {
    // Straight line graph: the euclidean heuristic is exact, so the search
    // never expands off the shortest path.
    int n = 30;
    std::vector<std::tuple<int, int, double>> edges;
    std::vector<Vec2> pos;
    for (int i = 0; i < n; ++i) {
        pos.push_back({static_cast<double>(i), 0.0});
        if (i + 1 < n) {
            edges.emplace_back(i, i + 1, 1.0);
            edges.emplace_back(i + 1, i, 1.0);
        }
    }
    Graph g = Graph::from_edges(n, edges, pos);
    auto r = astar_euclidean(g, 0, n - 1);
    REQUIRE(r);
    CHECK(r->scanned_vertices == n);
}

// --------------------------------------------------------------------------
// ALT
// --------------------------------------------------------------------------

TEST_CASE("alt lower bound: triangle-inequality arithmetic") {
    AltIndex idx;
    idx.landmarks = {0};
    // dist(s -> L) = 5, dist(t -> L) = 2 gives bound 3; the from-side table
    // is uninformative here.
    idx.dist_from = {{0.0, 100.0, 100.0}};
    idx.dist_to = {{0.0, 5.0, 2.0}};
    CHECK(alt_lower_bound(idx, 1, 2) == doctest::Approx(3.0));
}

TEST_CASE("alt bound is tight when the source is a landmark") {
    Graph g = Graph::from_edges(3, {{0, 1, 4.0}, {1, 2, 3.0}});
    AltIndex idx = alt_preprocess(g, 1, 42);
    // Force landmark 0 for the check.
    idx.landmarks = {0};
    std::vector<double> from(g.n), to(g.n);
    auto ap = floyd_warshall(g);
    for (int v = 0; v < g.n; ++v) {
        from[v] = ap[0][v];
        to[v] = ap[v][0];
    }
    idx.dist_from = {from};
    idx.dist_to = {to};
    CHECK(alt_lower_bound(idx, 0, 2) == doctest::Approx(ap[0][2]));
}

TEST_CASE("alt admissibility against all-pairs distances") {
    std::mt19937_64 rng(23);
    for (int trial = 0; trial < 20; ++trial) {
        Graph g = random_graph(rng, 50, 200);
        AltIndex idx = alt_preprocess(g, std::min(4, g.n), trial);
        auto ap = floyd_warshall(g);
        for (int v = 0; v < g.n; ++v)
            for (int t = 0; t < g.n; ++t) {
                double h = alt_lower_bound(idx, v, t);
                CHECK(h <= ap[v][t] + 1e-6);  // inf <= inf holds
            }
    }
}

TEST_CASE("alt query cost equals dijkstra on random graphs") {
    std::mt19937_64 rng(29);
    for (int trial = 0; trial < 200; ++trial) {
        Graph g = random_graph(rng, 60, 240);
        AltIndex idx = alt_preprocess(g, std::min(4, g.n), trial);
        for (int q = 0; q < 3; ++q) {
            int s = static_cast<int>(rng() % g.n), t = static_cast<int>(rng() % g.n);
            auto a = alt_query(g, idx, s, t);
            auto d = dijkstra(g, s, t);
            REQUIRE(a.has_value() == d.has_value());
            if (d) {
                CHECK(a->cost == d->cost);
                check_route_valid(g, *a, s, t);
            }
        }
    }
}

// --------------------------------------------------------------------------
// Arc flags
// --------------------------------------------------------------------------

TEST_CASE("arcflags with one cell prunes nothing") {
    std::mt19937_64 rng(31);
    Graph g = random_graph(rng, 40, 150);
    ArcFlagIndex idx = arcflags_preprocess(g, 1);
    for (int q = 0; q < 20; ++q) {
        int s = static_cast<int>(rng() % g.n), t = static_cast<int>(rng() % g.n);
        auto a = arcflags_query(g, idx, s, t);
        auto d = dijkstra(g, s, t);
        REQUIRE(a.has_value() == d.has_value());
        if (d) {
            CHECK(a->cost == d->cost);
            CHECK(a->scanned_vertices == d->scanned_vertices);
        }
    }
}

TEST_CASE("arcflags query cost equals dijkstra on random graphs") {
    std::mt19937_64 rng(37);
    for (int trial = 0; trial < 100; ++trial) {
        Graph g = random_graph(rng, 50, 200);
        ArcFlagIndex idx = arcflags_preprocess(g, 4, trial);
        for (int q = 0; q < 4; ++q) {
            int s = static_cast<int>(rng() % g.n), t = static_cast<int>(rng() % g.n);
            auto a = arcflags_query(g, idx, s, t);
            auto d = dijkstra(g, s, t);
            REQUIRE(a.has_value() == d.has_value());
            if (d) {
                CHECK(a->cost == d->cost);
                check_route_valid(g, *a, s, t);
            }
        }
    }
}

TEST_CASE("arcflags on a 2-cell line never relaxes edges pointing away") {
    // 0 -- 1 -- 2 -- 3 bidirectional, cells {0,1} and {2,3}.
    Graph g = Graph::from_edges(4, {{0, 1, 1.0}, {1, 0, 1.0}, {1, 2, 1.0}, {2, 1, 1.0},
                                    {2, 3, 1.0}, {3, 2, 1.0}});
    ArcFlagIndex idx = arcflags_preprocess_with_cells(g, {0, 0, 1, 1});

    QueryStats stats;
    stats.record_relaxed = true;
    auto r = arcflags_query(g, idx, 0, 3, &stats);
    REQUIRE(r);
    CHECK(r->cost == doctest::Approx(3.0));
    // Edge ids for 1->0 and 2->1 point away from the target cell.
    std::set<int> away;
    for (int e = 0; e < g.edge_count(); ++e) {
        if ((g.from_of[e] == 1 && g.to[e] == 0) || (g.from_of[e] == 2 && g.to[e] == 1))
            away.insert(e);
    }
    for (int e : stats.relaxed_edges) CHECK(away.count(e) == 0);
}

// --------------------------------------------------------------------------
// Contraction hierarchies
// --------------------------------------------------------------------------

TEST_CASE("ch on a path graph unpacks the shortcut") {
    Graph g = Graph::from_edges(3, {{0, 1, 2.0}, {1, 2, 3.0}});
    ChIndex idx = ch_preprocess(g);
    auto r = ch_query(g, idx, 0, 2);
    REQUIRE(r);
    CHECK(r->cost == doctest::Approx(5.0));
    CHECK(r->nodes == std::vector<int>{0, 1, 2});
    CHECK(r->cost == doctest::Approx(dijkstra(g, 0, 2)->cost));
}

TEST_CASE("ch shortcut unpacking reproduces original-edge paths exactly") {
    std::mt19937_64 rng(41);
    for (int trial = 0; trial < 40; ++trial) {
        Graph g = random_graph(rng, 60, 240);
        ChIndex idx = ch_preprocess(g);
        for (size_t e = 0; e < idx.edges.size(); ++e) {
            const auto &rec = idx.edges[e];
            if (rec.part_a < 0) continue;
            // Constituent weights must sum exactly to the shortcut weight.
            CHECK(std::abs(idx.edges[rec.part_a].w + idx.edges[rec.part_b].w - rec.w) <= 1e-9);
        }
        for (int q = 0; q < 5; ++q) {
            int s = static_cast<int>(rng() % g.n), t = static_cast<int>(rng() % g.n);
            auto c = ch_query(g, idx, s, t);
            auto d = dijkstra(g, s, t);
            REQUIRE(c.has_value() == d.has_value());
            if (d) {
                CHECK(c->cost == doctest::Approx(d->cost).epsilon(1e-12));
                check_route_valid(g, *c, s, t);
            }
        }
    }
}

TEST_CASE("ch scans fewer vertices than dijkstra on a grid") {
    Graph g = grid_graph(40, 40);
    ChIndex idx = ch_preprocess(g);
    std::mt19937_64 rng(43);
    long ch_scans = 0, dj_scans = 0;
    for (int q = 0; q < 50; ++q) {
        int s = static_cast<int>(rng() % g.n), t = static_cast<int>(rng() % g.n);
        auto c = ch_query(g, idx, s, t);
        auto d = dijkstra(g, s, t);
        REQUIRE(c);
        REQUIRE(d);
        CHECK(c->cost == doctest::Approx(d->cost));
        ch_scans += c->scanned_vertices;
        dj_scans += d->scanned_vertices;
    }
    CHECK(ch_scans < dj_scans);
}

// --------------------------------------------------------------------------
// Reach
// --------------------------------------------------------------------------

TEST_CASE("reach value on a path graph follows the definition") {
    // s -- v -- t with dist(s,v)=4, dist(v,t)=7: r(v) = min(4,7) = 4.
    Graph g = Graph::from_edges(3, {{0, 1, 4.0}, {1, 2, 7.0}});
    ReachIndex idx = reach_preprocess(g);
    CHECK(idx.reach[1] == doctest::Approx(4.0));
}

TEST_CASE("reach of a star center matches brute force over leaf pairs") {
    // Center 0, leaves 1..5 at varying spoke weights, edges both ways.
    std::vector<std::tuple<int, int, double>> edges;
    std::vector<double> spokes{2.0, 3.0, 5.0, 7.0, 11.0};
    for (int i = 0; i < 5; ++i) {
        edges.emplace_back(0, i + 1, spokes[i]);
        edges.emplace_back(i + 1, 0, spokes[i]);
    }
    Graph g = Graph::from_edges(6, edges);
    ReachIndex idx = reach_preprocess(g);
    double expect = 0.0;
    for (int i = 0; i < 5; ++i)
        for (int j = 0; j < 5; ++j)
            if (i != j) expect = std::max(expect, std::min(spokes[i], spokes[j]));
    CHECK(idx.reach[0] == doctest::Approx(expect));
}

TEST_CASE("reach query cost equals dijkstra on random graphs") {
    std::mt19937_64 rng(47);
    for (int trial = 0; trial < 100; ++trial) {
        Graph g = random_graph(rng, 40, 160);
        ReachIndex idx = reach_preprocess(g);
        for (int q = 0; q < 4; ++q) {
            int s = static_cast<int>(rng() % g.n), t = static_cast<int>(rng() % g.n);
            auto a = reach_query(g, idx, s, t);
            auto d = dijkstra(g, s, t);
            REQUIRE(a.has_value() == d.has_value());
            if (d) {
                CHECK(a->cost == doctest::Approx(d->cost).epsilon(1e-12));
                check_route_valid(g, *a, s, t);
            }
        }
    }
}

TEST_CASE("reach preprocessing enforces its size limit") {
    Graph g = grid_graph(50, 50);  // 2500 > 2000
    CHECK_THROWS_AS(reach_preprocess(g), ValidationError);
    CHECK_NOTHROW(reach_preprocess(g, 3000));
}

// --------------------------------------------------------------------------
// Cross-technique properties
// --------------------------------------------------------------------------

TEST_CASE("determinism: identical inputs yield identical routes") {
    std::mt19937_64 rng(53);
    Graph g = random_graph(rng, 80, 320);
    AltIndex a1 = alt_preprocess(g, 4, 9);
    AltIndex a2 = alt_preprocess(g, 4, 9);
    CHECK(a1.landmarks == a2.landmarks);
    ChIndex c1 = ch_preprocess(g);
    ChIndex c2 = ch_preprocess(g);
    CHECK(c1.rank == c2.rank);
    for (int q = 0; q < 20; ++q) {
        int s = static_cast<int>(rng() % g.n), t = static_cast<int>(rng() % g.n);
        auto r1 = dijkstra(g, s, t);
        auto r2 = dijkstra(g, s, t);
        REQUIRE(r1.has_value() == r2.has_value());
        if (r1) {
            CHECK(r1->nodes == r2->nodes);
            CHECK(r1->cost == r2->cost);
            CHECK(r1->scanned_vertices == r2->scanned_vertices);
        }
    }
}

TEST_CASE("travel-time weighting picks the faster road") {
    // Direct road: 100 m at 5 m/s (20 s). Detour: 128 m at 30 m/s (~4.3 s).
    RoadNetwork net = parse_network(R"({
      "nodes": [{"id": "A", "x": 0, "y": 0}, {"id": "B", "x": 100, "y": 0},
                {"id": "C", "x": 50, "y": 40}],
      "edges": [
        {"from": "A", "to": "B", "length": 100, "speed_limit": 5,
         "spline": [[0, 0], [100, 0]]},
        {"from": "A", "to": "C", "length": 64, "speed_limit": 30,
         "spline": [[0, 0], [50, 40]]},
        {"from": "C", "to": "B", "length": 64, "speed_limit": 30,
         "spline": [[50, 40], [100, 0]]}
      ],
      "lights": [],
      "grid": {"origin": [0, 0], "cell_size": 1.0, "width": 1, "height": 1,
               "passable": ["1"]}
    })");
    Graph by_len = Graph::from_network(net, WeightMode::Length);
    Graph by_time = Graph::from_network(net, WeightMode::TravelTime);
    auto shortest = dijkstra(by_len, 0, 1);
    auto fastest = dijkstra(by_time, 0, 1);
    REQUIRE(shortest);
    REQUIRE(fastest);
    CHECK(shortest->nodes == std::vector<int>{0, 1});
    CHECK(fastest->nodes == std::vector<int>{0, 2, 1});
}
