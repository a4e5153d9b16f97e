#include "flowsim/routing.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <limits>
#include <queue>
#include <random>
#include <tuple>

#include "flowsim/errors.hpp"

namespace flowsim::routing {

constexpr double kInf = std::numeric_limits<double>::infinity();

// ---------------------------------------------------------------------------
// Graph construction
// ---------------------------------------------------------------------------

Graph Graph::from_edges(int n, const std::vector<std::tuple<int, int, double>> &edges,
                        std::vector<Vec2> positions) {
    Graph g;
    g.n = n;
    g.pos = std::move(positions);
    g.head.assign(n + 1, 0);
    for (const auto &[u, v, w] : edges) {
        (void)v;
        (void)w;
        g.head[u + 1]++;
    }
    for (int i = 0; i < n; ++i) g.head[i + 1] += g.head[i];
    g.to.resize(edges.size());
    g.w.resize(edges.size());
    g.from_of.resize(edges.size());
    std::vector<int> fill(g.head.begin(), g.head.end() - 1);
    for (const auto &[u, v, w] : edges) {
        int slot = fill[u]++;
        g.to[slot] = v;
        g.w[slot] = w;
        g.from_of[slot] = u;
    }
    return g;
}

Graph Graph::from_network(const RoadNetwork &net, WeightMode mode) {
    std::vector<std::tuple<int, int, double>> edges;
    edges.reserve(net.edges.size());
    for (const Edge &e : net.edges) {
        double w = mode == WeightMode::Length ? e.length : e.length / e.speed_limit;
        edges.emplace_back(e.from, e.to, w);
    }
    std::vector<Vec2> pos;
    pos.reserve(net.nodes.size());
    for (const Node &n : net.nodes) pos.push_back(n.pos);
    return from_edges(static_cast<int>(net.nodes.size()), edges, std::move(pos));
}

Graph Graph::reversed() const {
    std::vector<std::tuple<int, int, double>> edges;
    edges.reserve(to.size());
    for (size_t e = 0; e < to.size(); ++e) edges.emplace_back(to[e], from_of[e], w[e]);
    return from_edges(n, edges, pos);
}

// ---------------------------------------------------------------------------
// Dijkstra
// ---------------------------------------------------------------------------

namespace {

struct HeapEntry {
    double key;
    double d;  // tentative distance when pushed (stale detection)
    int v;
    bool operator>(const HeapEntry &o) const {
        if (key != o.key) return key > o.key;
        if (d != o.d) return d > o.d;
        return v > o.v;
    }
};

using MinHeap = std::priority_queue<HeapEntry, std::vector<HeapEntry>, std::greater<HeapEntry>>;

std::vector<int> rebuild_path(const std::vector<int> &parent, int s, int t) {
    std::vector<int> path;
    for (int v = t; v != -1; v = parent[v]) path.push_back(v);
    std::reverse(path.begin(), path.end());
    assert(!path.empty() && path.front() == s);
    (void)s;
    return path;
}

}  // namespace

// Full single-source distances (and parents). Used by the preprocessors.
static void dijkstra_all(const Graph &g, int s, std::vector<double> &dist,
                         std::vector<int> *parent = nullptr) {
    dist.assign(g.n, kInf);
    if (parent) parent->assign(g.n, -1);
    dist[s] = 0.0;
    MinHeap heap;
    heap.push({0.0, 0.0, s});
    while (!heap.empty()) {
        auto [key, d, u] = heap.top();
        heap.pop();
        if (d != dist[u]) continue;
        for (int e = g.head[u]; e < g.head[u + 1]; ++e) {
            int v = g.to[e];
            double nd = d + g.w[e];
            if (nd < dist[v]) {
                dist[v] = nd;
                if (parent) (*parent)[v] = u;
                heap.push({nd, nd, v});
            } else if (parent && nd == dist[v] && (*parent)[v] > u) {
                (*parent)[v] = u;  // canonical tie-break: smaller predecessor id
            }
        }
    }
}

std::optional<Route> dijkstra(const Graph &g, int s, int t, QueryStats *stats) {
    std::vector<double> dist(g.n, kInf);
    std::vector<int> parent(g.n, -1);
    dist[s] = 0.0;
    MinHeap heap;
    heap.push({0.0, 0.0, s});
    long scanned = 0;
    while (!heap.empty()) {
        auto [key, d, u] = heap.top();
        heap.pop();
        if (d != dist[u]) continue;
        ++scanned;
        if (u == t) break;
        for (int e = g.head[u]; e < g.head[u + 1]; ++e) {
            int v = g.to[e];
            if (stats && stats->record_relaxed) stats->relaxed_edges.push_back(e);
            double nd = d + g.w[e];
            if (nd < dist[v]) {
                dist[v] = nd;
                parent[v] = u;
                heap.push({nd, nd, v});
            } else if (nd == dist[v] && parent[v] > u) {
                parent[v] = u;
            }
        }
    }
    if (dist[t] == kInf) return std::nullopt;
    return Route{rebuild_path(parent, s, t), dist[t], scanned};
}

std::optional<Route> astar(const Graph &g, int s, int t, const std::function<double(int)> &h,
                           QueryStats *stats) {
    std::vector<double> dist(g.n, kInf);
    std::vector<int> parent(g.n, -1);
    dist[s] = 0.0;
    MinHeap heap;
    double hs = h(s);
    if (hs == kInf && s != t) return std::nullopt;
    heap.push({hs, 0.0, s});
    long scanned = 0;
    while (!heap.empty()) {
        auto [key, d, u] = heap.top();
        heap.pop();
        if (d != dist[u]) continue;
        ++scanned;
        if (u == t) break;
        for (int e = g.head[u]; e < g.head[u + 1]; ++e) {
            int v = g.to[e];
            if (stats && stats->record_relaxed) stats->relaxed_edges.push_back(e);
            double nd = d + g.w[e];
            if (nd < dist[v]) {
                double hv = h(v);
                if (hv == kInf) continue;  // provably cannot reach t
                dist[v] = nd;
                parent[v] = u;
                heap.push({nd + hv, nd, v});
            } else if (nd == dist[v] && parent[v] > u) {
                parent[v] = u;
            }
        }
    }
    if (dist[t] == kInf) return std::nullopt;
    return Route{rebuild_path(parent, s, t), dist[t], scanned};
}

std::optional<Route> astar_euclidean(const Graph &g, int s, int t, QueryStats *stats) {
    if (g.pos.empty()) throw ValidationError("astar_euclidean requires vertex positions");
    // Any path from v to t costs at least scale * |v - t|, where scale is the
    // smallest edge weight per unit of straight-line span. This keeps the
    // heuristic admissible even when edge weights undercut the vertex
    // geometry (curved lanes, pulled-in endpoints).
    double scale = std::numeric_limits<double>::infinity();
    for (size_t e = 0; e < g.to.size(); ++e) {
        double span = distance(g.pos[g.from_of[e]], g.pos[g.to[e]]);
        if (span > 1e-12) scale = std::min(scale, g.w[e] / span);
    }
    if (scale == std::numeric_limits<double>::infinity()) scale = 0.0;
    const Vec2 goal = g.pos[t];
    return astar(
        g, s, t, [&, scale](int v) { return scale * distance(g.pos[v], goal); }, stats);
}

// ---------------------------------------------------------------------------
// ALT
// ---------------------------------------------------------------------------

AltIndex alt_preprocess(const Graph &g, int k, std::uint64_t seed) {
    if (k < 1 || k > g.n) throw ValidationError("landmark count must be in [1, vertex count]");
    AltIndex idx;
    Graph rev = g.reversed();

    std::mt19937_64 rng(seed);
    int start = g.n > 0 ? static_cast<int>(rng() % g.n) : 0;

    // Farthest-point traversal. Unreachable vertices count as infinitely far,
    // which spreads landmarks across components; ties break toward smaller id.
    std::vector<double> min_dist(g.n, kInf);
    std::vector<double> from_start;
    dijkstra_all(g, start, from_start);
    int next = 0;
    for (int v = 1; v < g.n; ++v)
        if (from_start[v] > from_start[next]) next = v;

    std::vector<char> taken(g.n, 0);
    for (int i = 0; i < k; ++i) {
        idx.landmarks.push_back(next);
        taken[next] = 1;
        idx.dist_from.emplace_back();
        idx.dist_to.emplace_back();
        dijkstra_all(g, next, idx.dist_from.back());
        dijkstra_all(rev, next, idx.dist_to.back());
        if (i + 1 == k) break;
        const std::vector<double> &df = idx.dist_from.back();
        for (int v = 0; v < g.n; ++v) min_dist[v] = std::min(min_dist[v], df[v]);
        next = -1;
        for (int v = 0; v < g.n; ++v) {
            if (taken[v]) continue;
            if (next == -1 || min_dist[v] > min_dist[next]) next = v;
        }
        if (next == -1) break;  // fewer than k vertices
    }
    return idx;
}

double alt_lower_bound(const AltIndex &idx, int v, int t) {
    double best = 0.0;
    for (size_t l = 0; l < idx.landmarks.size(); ++l) {
        const std::vector<double> &from = idx.dist_from[l];
        const std::vector<double> &to = idx.dist_to[l];
        // dist(v,t) >= dist(L,t) - dist(L,v); if L reaches v but not t, then
        // v cannot reach t either.
        if (from[v] != kInf) {
            if (from[t] == kInf) return kInf;
            best = std::max(best, from[t] - from[v]);
        }
        // dist(v,t) >= dist(v,L) - dist(t,L); if t reaches L but v does not,
        // v cannot reach t.
        if (to[t] != kInf) {
            if (to[v] == kInf) return kInf;
            best = std::max(best, to[v] - to[t]);
        }
    }
    return best;
}

std::optional<Route> alt_query(const Graph &g, const AltIndex &idx, int s, int t,
                               QueryStats *stats) {
    return astar(
        g, s, t, [&](int v) { return alt_lower_bound(idx, v, t); }, stats);
}

// ---------------------------------------------------------------------------
// Arc flags
// ---------------------------------------------------------------------------

static std::vector<int> grow_partition(const Graph &g, int k, std::uint64_t seed) {
    std::vector<int> cell(g.n, -1);
    if (g.n == 0) return cell;
    k = std::min(k, g.n);

    // Undirected adjacency for region growing.
    Graph rev = g.reversed();
    std::mt19937_64 rng(seed);
    std::vector<int> centers;
    std::vector<char> used(g.n, 0);
    while (static_cast<int>(centers.size()) < k) {
        int c = static_cast<int>(rng() % g.n);
        if (used[c]) continue;
        used[c] = 1;
        centers.push_back(c);
    }
    std::queue<int> frontier;
    for (size_t i = 0; i < centers.size(); ++i) {
        cell[centers[i]] = static_cast<int>(i);
        frontier.push(centers[i]);
    }
    while (!frontier.empty()) {
        int u = frontier.front();
        frontier.pop();
        auto claim = [&](int v) {
            if (cell[v] == -1) {
                cell[v] = cell[u];
                frontier.push(v);
            }
        };
        for (int e = g.head[u]; e < g.head[u + 1]; ++e) claim(g.to[e]);
        for (int e = rev.head[u]; e < rev.head[u + 1]; ++e) claim(rev.to[e]);
    }
    for (int v = 0; v < g.n; ++v)
        if (cell[v] == -1) cell[v] = v % k;  // vertices in unreached components
    return cell;
}

ArcFlagIndex arcflags_preprocess_with_cells(const Graph &g, std::vector<int> cell_of) {
    ArcFlagIndex idx;
    idx.cell_of = std::move(cell_of);
    int k = 0;
    for (int c : idx.cell_of) k = std::max(k, c + 1);
    idx.k = std::max(k, 1);
    if (idx.k > 64) throw ValidationError("arc flags support at most 64 cells");
    idx.flags.assign(g.to.size(), 0);

    // Within-cell edges always carry their own cell's flag.
    for (size_t e = 0; e < g.to.size(); ++e)
        if (idx.cell_of[g.from_of[e]] == idx.cell_of[g.to[e]])
            idx.flags[e] |= 1ull << idx.cell_of[g.to[e]];

    // A boundary vertex of cell i has an incoming edge from another cell.
    std::vector<char> boundary(g.n, 0);
    for (size_t e = 0; e < g.to.size(); ++e)
        if (idx.cell_of[g.from_of[e]] != idx.cell_of[g.to[e]]) boundary[g.to[e]] = 1;

    Graph rev = g.reversed();
    std::vector<double> dist;
    for (int b = 0; b < g.n; ++b) {
        if (!boundary[b]) continue;
        std::uint64_t bit = 1ull << idx.cell_of[b];
        dijkstra_all(rev, b, dist);  // dist[u] = dist(u -> b)
        // Flag the whole shortest-path DAG into b, not just one tree, so no
        // edge on any shortest path is missed. The tolerance only admits
        // extra edges, which cannot affect correctness.
        for (size_t e = 0; e < g.to.size(); ++e) {
            int u = g.from_of[e], v = g.to[e];
            if (dist[u] == kInf || dist[v] == kInf) continue;
            if (std::abs(dist[u] - (g.w[e] + dist[v])) <= 1e-9 * (1.0 + dist[u]))
                idx.flags[e] |= bit;
        }
    }
    return idx;
}

ArcFlagIndex arcflags_preprocess(const Graph &g, int k, std::uint64_t seed) {
    if (k < 1) throw ValidationError("arc flag cell count must be >= 1");
    if (k > 64) throw ValidationError("arc flags support at most 64 cells");
    return arcflags_preprocess_with_cells(g, grow_partition(g, k, seed));
}

std::optional<Route> arcflags_query(const Graph &g, const ArcFlagIndex &idx, int s, int t,
                                    QueryStats *stats) {
    const std::uint64_t bit = 1ull << idx.cell_of[t];
    std::vector<double> dist(g.n, kInf);
    std::vector<int> parent(g.n, -1);
    dist[s] = 0.0;
    MinHeap heap;
    heap.push({0.0, 0.0, s});
    long scanned = 0;
    while (!heap.empty()) {
        auto [key, d, u] = heap.top();
        heap.pop();
        if (d != dist[u]) continue;
        ++scanned;
        if (u == t) break;
        for (int e = g.head[u]; e < g.head[u + 1]; ++e) {
            if (!(idx.flags[e] & bit)) continue;  // cannot lie on a shortest path into t's cell
            int v = g.to[e];
            if (stats && stats->record_relaxed) stats->relaxed_edges.push_back(e);
            double nd = d + g.w[e];
            if (nd < dist[v]) {
                dist[v] = nd;
                parent[v] = u;
                heap.push({nd, nd, v});
            } else if (nd == dist[v] && parent[v] > u) {
                parent[v] = u;
            }
        }
    }
    if (dist[t] == kInf) return std::nullopt;
    return Route{rebuild_path(parent, s, t), dist[t], scanned};
}

// ---------------------------------------------------------------------------
// Contraction hierarchies
// ---------------------------------------------------------------------------

namespace {

// Mutable adjacency used during contraction. Edge payloads live in the
// ChIndex::EdgeRec vector; the lists store rec ids.
struct ContractionGraph {
    std::vector<std::vector<int>> out;  // active outgoing edge rec ids
    std::vector<std::vector<int>> in;   // active incoming edge rec ids
    std::vector<ChIndex::EdgeRec> recs;
    std::vector<char> contracted;

    int find_out(int u, int v) const {
        for (int id : out[u])
            if (recs[id].to == v) return id;
        return -1;
    }
};

// Bounded Dijkstra from s in the uncontracted graph, skipping `skip`.
// Leaves tentative distances in a thread-local array; a tentative value is
// the length of a real path, so it is always a sound witness. Missing a
// witness only adds a redundant shortcut, never breaks correctness.
class WitnessSearch {
  public:
    const std::vector<double> &run(const ContractionGraph &cg, int s, int skip, double limit,
                                   int settle_budget) {
        if (dist_.size() < cg.out.size()) {
            dist_.assign(cg.out.size(), kInf);
            touched_.clear();
        } else {
            for (int v : touched_) dist_[v] = kInf;
            touched_.clear();
        }
        MinHeap heap;
        dist_[s] = 0.0;
        touched_.push_back(s);
        heap.push({0.0, 0.0, s});
        int settled = 0;
        while (!heap.empty()) {
            auto [key, d, u] = heap.top();
            heap.pop();
            if (d != dist_[u]) continue;
            if (d > limit) break;
            if (++settled > settle_budget) break;
            for (int id : cg.out[u]) {
                const ChIndex::EdgeRec &r = cg.recs[id];
                int v = r.to;
                if (v == skip || cg.contracted[v]) continue;
                double nd = d + r.w;
                if (nd < dist_[v]) {
                    if (dist_[v] == kInf) touched_.push_back(v);
                    dist_[v] = nd;
                    heap.push({nd, nd, v});
                }
            }
        }
        return dist_;
    }

  private:
    std::vector<double> dist_;
    std::vector<int> touched_;
};

struct ShortcutPlan {
    int from, to;
    double w;
    int part_a, part_b;
};

// Simulate (or perform) the contraction of v; returns the shortcuts required.
std::vector<ShortcutPlan> plan_contraction(const ContractionGraph &cg, WitnessSearch &ws, int v) {
    std::vector<ShortcutPlan> plans;
    for (int in_id : cg.in[v]) {
        const ChIndex::EdgeRec &ein = cg.recs[in_id];
        int u = ein.from;
        if (cg.contracted[u]) continue;
        double max_out = 0.0;
        for (int out_id : cg.out[v]) {
            const ChIndex::EdgeRec &eout = cg.recs[out_id];
            if (!cg.contracted[eout.to] && eout.to != u)
                max_out = std::max(max_out, eout.w);
        }
        const std::vector<double> &wit = ws.run(cg, u, v, ein.w + max_out, 80);
        for (int out_id : cg.out[v]) {
            const ChIndex::EdgeRec &eout = cg.recs[out_id];
            int x = eout.to;
            if (cg.contracted[x] || x == u) continue;
            double via = ein.w + eout.w;
            if (wit[x] <= via) continue;
            int existing = cg.find_out(u, x);
            if (existing >= 0 && cg.recs[existing].w <= via) continue;
            plans.push_back({u, x, via, in_id, out_id});
        }
    }
    return plans;
}

}  // namespace

ChIndex ch_preprocess(const Graph &g) {
    ChIndex idx;
    idx.rank.assign(g.n, -1);

    ContractionGraph cg;
    cg.out.resize(g.n);
    cg.in.resize(g.n);
    cg.contracted.assign(g.n, 0);
    for (size_t e = 0; e < g.to.size(); ++e) {
        int u = g.from_of[e], v = g.to[e];
        if (u == v) continue;  // self loops never help shortest paths
        int existing = cg.find_out(u, v);
        if (existing >= 0) {
            if (cg.recs[existing].w <= g.w[e]) continue;
            // Parallel improvement: retire the old rec from adjacency.
            std::erase(cg.out[u], existing);
            std::erase(cg.in[v], existing);
        }
        int id = static_cast<int>(cg.recs.size());
        cg.recs.push_back({u, v, g.w[e], -1, -1});
        cg.out[u].push_back(id);
        cg.in[v].push_back(id);
    }

    WitnessSearch ws;
    std::vector<int> deleted_neighbors(g.n, 0);
    auto priority = [&](int v) -> double {
        auto plans = plan_contraction(cg, ws, v);
        int degree = 0;
        for (int id : cg.in[v])
            if (!cg.contracted[cg.recs[id].from]) ++degree;
        for (int id : cg.out[v])
            if (!cg.contracted[cg.recs[id].to]) ++degree;
        return static_cast<double>(plans.size()) - degree + deleted_neighbors[v];
    };

    MinHeap queue;
    for (int v = 0; v < g.n; ++v) queue.push({priority(v), 0.0, v});

    int next_rank = 0;
    while (!queue.empty()) {
        auto [key, unused, v] = queue.top();
        (void)unused;
        queue.pop();
        if (cg.contracted[v]) continue;
        double cur = priority(v);
        if (!queue.empty() && cur > queue.top().key) {
            queue.push({cur, 0.0, v});  // lazy re-evaluation
            continue;
        }
        auto plans = plan_contraction(cg, ws, v);
        for (const ShortcutPlan &p : plans) {
            int existing = cg.find_out(p.from, p.to);
            if (existing >= 0) {
                if (cg.recs[existing].w <= p.w) continue;
                std::erase(cg.out[p.from], existing);
                std::erase(cg.in[p.to], existing);
            }
            int id = static_cast<int>(cg.recs.size());
            cg.recs.push_back({p.from, p.to, p.w, p.part_a, p.part_b});
            cg.out[p.from].push_back(id);
            cg.in[p.to].push_back(id);
        }
        cg.contracted[v] = 1;
        idx.rank[v] = next_rank++;
        for (int id : cg.in[v])
            if (!cg.contracted[cg.recs[id].from]) deleted_neighbors[cg.recs[id].from]++;
        for (int id : cg.out[v])
            if (!cg.contracted[cg.recs[id].to]) deleted_neighbors[cg.recs[id].to]++;
    }
    idx.edges = std::move(cg.recs);
    return idx;
}

namespace {

void unpack_rec(const ChIndex &idx, int rec_id, std::vector<int> &out_nodes) {
    const ChIndex::EdgeRec &r = idx.edges[rec_id];
    if (r.part_a < 0) {
        out_nodes.push_back(r.to);
        return;
    }
    unpack_rec(idx, r.part_a, out_nodes);
    unpack_rec(idx, r.part_b, out_nodes);
}

}  // namespace

std::optional<Route> ch_query(const Graph &g, const ChIndex &idx, int s, int t) {
    (void)g;
    if (s == t) return Route{{s}, 0.0, 1};
    int n = static_cast<int>(idx.rank.size());

    // Upward adjacency in both directions over originals + shortcuts.
    std::vector<std::vector<int>> up(n), down(n);  // down holds reversed upward-from-t edges
    for (size_t id = 0; id < idx.edges.size(); ++id) {
        const ChIndex::EdgeRec &r = idx.edges[id];
        if (idx.rank[r.to] > idx.rank[r.from]) up[r.from].push_back(static_cast<int>(id));
        if (idx.rank[r.from] > idx.rank[r.to]) down[r.to].push_back(static_cast<int>(id));
    }

    std::vector<double> df(n, kInf), db(n, kInf);
    std::vector<int> pf(n, -1), pb(n, -1);  // parent edge rec ids
    MinHeap fq, bq;
    df[s] = 0.0;
    db[t] = 0.0;
    fq.push({0.0, 0.0, s});
    bq.push({0.0, 0.0, t});
    double best = kInf;
    int meet = -1;
    long scanned = 0;

    auto settle = [&](MinHeap &q, std::vector<double> &dist, std::vector<int> &parent,
                      const std::vector<std::vector<int>> &adj, bool forward,
                      const std::vector<double> &other) {
        auto [key, d, u] = q.top();
        q.pop();
        if (d != dist[u]) return;
        ++scanned;
        if (other[u] != kInf && d + other[u] < best) {
            best = d + other[u];
            meet = u;
        }
        if (d >= best) return;  // cannot improve beyond the current meeting point
        for (int id : adj[u]) {
            const ChIndex::EdgeRec &r = idx.edges[id];
            int v = forward ? r.to : r.from;
            double nd = d + r.w;
            if (nd < dist[v]) {
                dist[v] = nd;
                parent[v] = id;
                q.push({nd, nd, v});
            }
        }
    };

    while (!fq.empty() || !bq.empty()) {
        double fk = fq.empty() ? kInf : fq.top().key;
        double bk = bq.empty() ? kInf : bq.top().key;
        if (std::min(fk, bk) >= best) break;
        if (fk <= bk)
            settle(fq, df, pf, up, true, db);
        else
            settle(bq, db, pb, down, false, df);
    }
    if (meet == -1) return std::nullopt;

    // Stitch the two upward paths at the meeting vertex and unpack shortcuts.
    std::vector<int> up_recs, down_recs;
    for (int v = meet; pf[v] != -1; v = idx.edges[pf[v]].from) up_recs.push_back(pf[v]);
    for (int v = meet; pb[v] != -1; v = idx.edges[pb[v]].to) down_recs.push_back(pb[v]);
    std::reverse(up_recs.begin(), up_recs.end());

    std::vector<int> nodes{s};
    for (int id : up_recs) unpack_rec(idx, id, nodes);
    for (int id : down_recs) unpack_rec(idx, id, nodes);
    return Route{std::move(nodes), best, scanned};
}

// ---------------------------------------------------------------------------
// Reach
// ---------------------------------------------------------------------------

ReachIndex reach_preprocess(const Graph &g, int max_n) {
    if (g.n > max_n)
        throw ValidationError("reach preprocessing size limit exceeded (" +
                              std::to_string(g.n) + " > " + std::to_string(max_n) + ")");
    ReachIndex idx;
    idx.reach.assign(g.n, 0.0);

    std::vector<std::vector<double>> dist(g.n);
    for (int s = 0; s < g.n; ++s) dijkstra_all(g, s, dist[s]);

    // reach(v) = max over (s,t) with v on some shortest s-t path of
    // min{dist(s,v), dist(v,t)}. The tolerance includes near-ties, which can
    // only raise the bound (safe for query pruning).
    for (int v = 0; v < g.n; ++v) {
        const std::vector<double> &dv = dist[v];
        double r = 0.0;
        for (int s = 0; s < g.n; ++s) {
            double dsv = dist[s][v];
            if (dsv == kInf) continue;
            const std::vector<double> &ds = dist[s];
            for (int t = 0; t < g.n; ++t) {
                double dvt = dv[t];
                if (dvt == kInf) continue;
                if (dsv + dvt <= ds[t] + 1e-9 * (1.0 + ds[t]))
                    r = std::max(r, std::min(dsv, dvt));
            }
        }
        idx.reach[v] = r;
    }
    return idx;
}

std::optional<Route> reach_query(const Graph &g, const ReachIndex &idx, int s, int t) {
    if (s == t) return Route{{s}, 0.0, 1};
    Graph rev = g.reversed();

    std::vector<double> df(g.n, kInf), db(g.n, kInf);
    std::vector<int> pf(g.n, -1), pb(g.n, -1);
    MinHeap fq, bq;
    df[s] = 0.0;
    db[t] = 0.0;
    fq.push({0.0, 0.0, s});
    bq.push({0.0, 0.0, t});
    double best = kInf;
    int meet = -1;
    long scanned = 0;

    // Prune expansion of v when reach(v) is smaller than both the distance
    // from the source and the opposite search radius; the meeting-candidate
    // update happens first, which keeps the query exact.
    auto settle = [&](MinHeap &q, std::vector<double> &dist, std::vector<int> &parent,
                      const Graph &adj, const std::vector<double> &other, const MinHeap &oq) {
        auto [key, d, u] = q.top();
        q.pop();
        if (d != dist[u]) return;
        ++scanned;
        if (other[u] != kInf && d + other[u] < best) {
            best = d + other[u];
            meet = u;
        }
        double radius = oq.empty() ? kInf : oq.top().key;
        if (idx.reach[u] < d - 1e-9 && idx.reach[u] < radius - 1e-9) return;
        for (int e = adj.head[u]; e < adj.head[u + 1]; ++e) {
            int v = adj.to[e];
            double nd = d + adj.w[e];
            if (nd < dist[v]) {
                dist[v] = nd;
                parent[v] = u;
                q.push({nd, nd, v});
            } else if (nd == dist[v] && parent[v] > u) {
                parent[v] = u;
            }
        }
    };

    while (!fq.empty() || !bq.empty()) {
        double fk = fq.empty() ? kInf : fq.top().key;
        double bk = bq.empty() ? kInf : bq.top().key;
        if (fk + bk >= best) break;
        if (fk <= bk)
            settle(fq, df, pf, g, db, bq);
        else
            settle(bq, db, pb, rev, df, fq);
    }
    if (meet == -1) return std::nullopt;

    std::vector<int> nodes;
    for (int v = meet; v != -1; v = pf[v]) nodes.push_back(v);
    std::reverse(nodes.begin(), nodes.end());
    for (int v = pb[meet]; v != -1; v = pb[v]) nodes.push_back(v);
    return Route{std::move(nodes), best, scanned};
}

}  // namespace flowsim::routing
