#pragma once

#include <cstdint>
#include <random>
#include <tuple>
#include <vector>

#include "flowsim/routing.hpp"

namespace flowsim::test {

inline double urand(std::mt19937_64 &rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Random weighted digraph over random plane positions. Weights are the
// Euclidean gap scaled up by a random detour factor, so the Euclidean
// heuristic stays admissible (as on road networks).
inline routing::Graph random_graph(std::mt19937_64 &rng, int max_n, int max_m) {
    int n = 2 + static_cast<int>(rng() % (max_n - 1));
    long cap = static_cast<long>(n) * (n - 1);
    int m = static_cast<int>(rng() % (std::min<long>(max_m, cap) + 1));
    std::vector<Vec2> pos(n);
    for (Vec2 &p : pos) p = {urand(rng) * 100.0, urand(rng) * 100.0};
    std::vector<std::tuple<int, int, double>> edges;
    for (int i = 0; i < m; ++i) {
        int u = static_cast<int>(rng() % n);
        int v = static_cast<int>(rng() % n);
        if (u == v) continue;
        double w = std::max(0.1, distance(pos[u], pos[v])) * (1.0 + urand(rng));
        edges.emplace_back(u, v, w);
    }
    return routing::Graph::from_edges(n, edges, std::move(pos));
}

// 4-neighbour grid graph with unit weights, both directions.
inline routing::Graph grid_graph(int w, int h) {
    auto id = [w](int x, int y) { return y * w + x; };
    std::vector<std::tuple<int, int, double>> edges;
    std::vector<Vec2> pos;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            pos.push_back({static_cast<double>(x), static_cast<double>(y)});
            if (x + 1 < w) {
                edges.emplace_back(id(x, y), id(x + 1, y), 1.0);
                edges.emplace_back(id(x + 1, y), id(x, y), 1.0);
            }
            if (y + 1 < h) {
                edges.emplace_back(id(x, y), id(x, y + 1), 1.0);
                edges.emplace_back(id(x, y + 1), id(x, y), 1.0);
            }
        }
    return routing::Graph::from_edges(w * h, edges, std::move(pos));
}

// Independent all-pairs oracle (Floyd-Warshall).
inline std::vector<std::vector<double>> floyd_warshall(const routing::Graph &g) {
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<std::vector<double>> d(g.n, std::vector<double>(g.n, inf));
    for (int v = 0; v < g.n; ++v) d[v][v] = 0.0;
    for (int e = 0; e < g.edge_count(); ++e) {
        int u = g.from_of[e], v = g.to[e];
        d[u][v] = std::min(d[u][v], g.w[e]);
    }
    for (int k = 0; k < g.n; ++k)
        for (int i = 0; i < g.n; ++i) {
            if (d[i][k] == inf) continue;
            for (int j = 0; j < g.n; ++j)
                if (d[i][k] + d[k][j] < d[i][j]) d[i][j] = d[i][k] + d[k][j];
        }
    return d;
}

}  // namespace flowsim::test
