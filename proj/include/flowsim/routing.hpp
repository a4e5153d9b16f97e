#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "flowsim/geometry.hpp"
#include "flowsim/road_network.hpp"

namespace flowsim::routing {

enum class WeightMode { Length, TravelTime };

/// Weighted directed graph in CSR form, optionally with vertex positions.
struct Graph {
    int n = 0;
    std::vector<int> head;     // size n+1
    std::vector<int> to;       // size m, sorted per vertex by insertion order
    std::vector<double> w;     // size m
    std::vector<int> from_of;  // size m, source vertex of each edge
    std::vector<Vec2> pos;     // size n or empty

    int edge_count() const { return static_cast<int>(to.size()); }

    static Graph from_edges(int n, const std::vector<std::tuple<int, int, double>> &edges,
                            std::vector<Vec2> positions = {});
    static Graph from_network(const RoadNetwork &net, WeightMode mode = WeightMode::Length);

    Graph reversed() const;
};

struct Route {
    std::vector<int> nodes;      // source..target, consecutive pairs joined by edges
    double cost = 0.0;
    long scanned_vertices = 0;   // settled vertices (both directions for bidirectional)
};

/// Optional per-query instrumentation. When record_relaxed is set, every edge
/// the search relaxes is appended (CSR edge ids).
struct QueryStats {
    bool record_relaxed = false;
    std::vector<int> relaxed_edges;
};

// Exact shortest path; ties broken toward smaller vertex id. nullopt = unreachable.
std::optional<Route> dijkstra(const Graph &g, int s, int t, QueryStats *stats = nullptr);

// A* with an admissible heuristic (re-expansion keeps it exact even when the
// heuristic is not consistent). h(v) may be +inf to prune v entirely.
std::optional<Route> astar(const Graph &g, int s, int t,
                           const std::function<double(int)> &h, QueryStats *stats = nullptr);

// Euclidean-heuristic A*; requires vertex positions. The heuristic is scaled
// by the graph's minimum weight-to-span ratio so it stays admissible on any
// positive-weight geometric graph.
std::optional<Route> astar_euclidean(const Graph &g, int s, int t, QueryStats *stats = nullptr);

// --------------------------------------------------------------------------
// ALT (A*, landmarks, triangle inequality)
// --------------------------------------------------------------------------

struct AltIndex {
    std::vector<int> landmarks;
    std::vector<std::vector<double>> dist_from;  // dist_from[l][v] = dist(L_l -> v)
    std::vector<std::vector<double>> dist_to;    // dist_to[l][v]   = dist(v -> L_l)
};

// Farthest-point landmark selection from a seeded random start.
AltIndex alt_preprocess(const Graph &g, int k, std::uint64_t seed);

// Triangle-inequality lower bound on dist(v, t).
double alt_lower_bound(const AltIndex &idx, int v, int t);

std::optional<Route> alt_query(const Graph &g, const AltIndex &idx, int s, int t,
                               QueryStats *stats = nullptr);

// --------------------------------------------------------------------------
// Arc flags
// --------------------------------------------------------------------------

struct ArcFlagIndex {
    int k = 0;
    std::vector<int> cell_of;            // vertex -> cell
    std::vector<std::uint64_t> flags;    // per edge, bit i = may lie on a shortest path into cell i
};

// Partition into k cells (BFS region growing from seeded random centers),
// then flag edges via backward shortest-path DAGs from every boundary vertex.
// k must be in [1, 64].
ArcFlagIndex arcflags_preprocess(const Graph &g, int k, std::uint64_t seed = 0x9e3779b97f4a7c15ull);

// Same flag computation over a caller-supplied partition (for tests).
ArcFlagIndex arcflags_preprocess_with_cells(const Graph &g, std::vector<int> cell_of);

std::optional<Route> arcflags_query(const Graph &g, const ArcFlagIndex &idx, int s, int t,
                                    QueryStats *stats = nullptr);

// --------------------------------------------------------------------------
// Contraction hierarchies
// --------------------------------------------------------------------------

struct ChIndex {
    struct EdgeRec {
        int from = -1;
        int to = -1;
        double w = 0.0;
        int part_a = -1;  // constituent edge rec ids; -1,-1 = original edge
        int part_b = -1;
    };
    std::vector<int> rank;        // vertex -> contraction order (0 = first contracted)
    std::vector<EdgeRec> edges;   // originals + shortcuts
};

// Contracts vertices by edge-difference + contracted-neighbor priority with
// lazy re-evaluation; shortcuts are added only when the witness search finds
// no shorter bypass.
ChIndex ch_preprocess(const Graph &g);

// Bidirectional upward search; the returned path is unpacked to original vertices.
std::optional<Route> ch_query(const Graph &g, const ChIndex &idx, int s, int t);

// --------------------------------------------------------------------------
// Reach
// --------------------------------------------------------------------------

struct ReachIndex {
    std::vector<double> reach;  // upper bound on max over shortest paths P through v of
                                // min{dist(s,v), dist(v,t)}
};

// Exact reach values via all-pairs shortest paths. Throws ValidationError
// when the graph exceeds max_n vertices.
ReachIndex reach_preprocess(const Graph &g, int max_n = 2000);

// Bidirectional Dijkstra with reach pruning.
std::optional<Route> reach_query(const Graph &g, const ReachIndex &idx, int s, int t);

}  // namespace flowsim::routing
