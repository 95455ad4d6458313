#pragma once

// Exact small-graph engines.
//
// Two independent routes to the same correlation functions:
//   * a spin-sum oracle (2^V terms), and
//   * a current-state-sum engine in which the infinite sum over integer
//     currents per edge is collapsed exactly into three states
//     {zero, even-positive, odd} with weights {1, cosh(t)-1, sinh(t)},
//     t = beta * J_e. Connectivity depends only on the trace (state != zero)
//     and source parity only on the odd states, so the collapse is lossless
//     for every event used here.
//
// Pair/triple/quadruple current sums enumerate per-current states bucketed
// by source set, so exhaustive identity checks stay cheap.

#include <cmath>
#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <unordered_map>
#include <vector>

#include "currentlab/geometry.hpp"
#include "currentlab/stats.hpp"

namespace currentlab::exact {

using VertexMask = std::uint32_t;
using EdgeMask = std::uint32_t;

inline constexpr int kMaxSpinVertices = 24;
inline constexpr int kMaxEngineEdges = 13;

inline VertexMask vertex_mask(std::span<const int> vs) {
    VertexMask m = 0;
    for (int v : vs) m ^= (VertexMask{1} << v);  // multiset: pairs cancel
    return m;
}

// <prod_{x in A} sigma_x> by direct summation over 2^V spin configurations.
inline double spin_correlation(const Graph& g, double beta, std::span<const int> a) {
    if (g.n_vertices > kMaxSpinVertices) throw std::invalid_argument("too many vertices for spin oracle");
    VertexMask amask = vertex_mask(a);
    const std::uint64_t n_conf = std::uint64_t{1} << g.n_vertices;
    KahanSum num, den;
    for (std::uint64_t conf = 0; conf < n_conf; ++conf) {
        double energy = 0.0;
        for (int e = 0; e < g.n_edges(); ++e) {
            auto [u, v] = g.edges[e];
            bool aligned = (((conf >> u) ^ (conf >> v)) & 1u) == 0;
            energy += (aligned ? 1.0 : -1.0) * g.coupling[e];
        }
        double w = std::exp(beta * energy);
        int sign = __builtin_popcountll(conf & amask) % 2 == 0 ? 1 : -1;
        num.add(sign * w);
        den.add(w);
    }
    return num.value() / den.value();
}

inline double spin_partition_function(const Graph& g, double beta) {
    if (g.n_vertices > kMaxSpinVertices) throw std::invalid_argument("too many vertices for spin oracle");
    const std::uint64_t n_conf = std::uint64_t{1} << g.n_vertices;
    KahanSum den;
    for (std::uint64_t conf = 0; conf < n_conf; ++conf) {
        double energy = 0.0;
        for (int e = 0; e < g.n_edges(); ++e) {
            auto [u, v] = g.edges[e];
            bool aligned = (((conf >> u) ^ (conf >> v)) & 1u) == 0;
            energy += (aligned ? 1.0 : -1.0) * g.coupling[e];
        }
        den.add(std::exp(beta * energy));
    }
    return den.value();
}

// One collapsed current: open edges (trace) and odd-parity edges.
struct CurrentView {
    EdgeMask open = 0;
    EdgeMask odd = 0;
};

inline CurrentView operator+(CurrentView a, CurrentView b) {
    return {a.open | b.open, a.odd ^ b.odd};
}

class CurrentEngine {
  public:
    CurrentEngine(const Graph& g, double beta) : graph_(g), beta_(beta) {
        const int ne = g.n_edges();
        if (ne > kMaxEngineEdges) throw std::invalid_argument("too many edges for current engine");
        if (g.n_vertices > 31) throw std::invalid_argument("too many vertices for current engine");
        std::vector<double> w_even(ne), w_odd(ne);
        for (int e = 0; e < ne; ++e) {
            double t = beta * g.coupling[e];
            w_even[e] = std::cosh(t) - 1.0;
            w_odd[e] = std::sinh(t);
        }
        // enumerate 3^E edge-state vectors
        std::uint64_t n_states = 1;
        for (int e = 0; e < ne; ++e) n_states *= 3;
        states_.reserve(n_states);
        std::vector<int> digits(ne, 0);
        for (std::uint64_t s = 0; s < n_states; ++s) {
            double w = 1.0;
            EdgeMask open = 0, odd = 0;
            VertexMask sources = 0;
            for (int e = 0; e < ne; ++e) {
                switch (digits[e]) {
                    case 0: break;
                    case 1:
                        w *= w_even[e];
                        open |= EdgeMask{1} << e;
                        break;
                    case 2:
                        w *= w_odd[e];
                        open |= EdgeMask{1} << e;
                        odd |= EdgeMask{1} << e;
                        sources ^= (VertexMask{1} << g.edges[e].first) ^
                                   (VertexMask{1} << g.edges[e].second);
                        break;
                }
            }
            states_.push_back({w, open, odd, sources});
            for (int e = 0; e < ne; ++e) {
                if (++digits[e] < 3) break;
                digits[e] = 0;
            }
        }
        for (std::size_t i = 0; i < states_.size(); ++i)
            buckets_[states_[i].sources].push_back(static_cast<std::uint32_t>(i));
    }

    const Graph& graph() const { return graph_; }
    double beta() const { return beta_; }

    // Component labels of the open-edge subgraph (all vertices present;
    // isolated vertices are singleton components).
    const std::vector<std::uint8_t>& components(EdgeMask open) const {
        auto it = comp_cache_.find(open);
        if (it != comp_cache_.end()) return it->second;
        std::vector<std::uint8_t> label(graph_.n_vertices);
        std::vector<int> parent(graph_.n_vertices);
        for (int v = 0; v < graph_.n_vertices; ++v) parent[v] = v;
        std::function<int(int)> find = [&](int v) {
            while (parent[v] != v) v = parent[v] = parent[parent[v]];
            return v;
        };
        for (int e = 0; e < graph_.n_edges(); ++e)
            if (open & (EdgeMask{1} << e)) {
                int a = find(graph_.edges[e].first), b = find(graph_.edges[e].second);
                if (a != b) parent[a] = b;
            }
        for (int v = 0; v < graph_.n_vertices; ++v) label[v] = static_cast<std::uint8_t>(find(v));
        return comp_cache_.emplace(open, std::move(label)).first->second;
    }

    bool connected(EdgeMask open, int x, int y) const {
        if (x == y) return true;
        const auto& lab = components(open);
        return lab[x] == lab[y];
    }

    // F_B membership by the component-parity criterion: every connected
    // component of the trace carries an even number of B-points.
    bool pairable(EdgeMask open, VertexMask b) const {
        if (b == 0) return true;
        const auto& lab = components(open);
        std::uint32_t odd_comp = 0;  // parity per component root (roots < 32)
        for (int v = 0; v < graph_.n_vertices; ++v)
            if (b & (VertexMask{1} << v)) odd_comp ^= std::uint32_t{1} << lab[v];
        return odd_comp == 0;
    }

    // Event over a tuple of currents; the views are in source-argument order.
    using Event = std::function<bool(const CurrentEngine&, std::span<const CurrentView>)>;

    // Sum of prod_i w(n_i) * F(n_1..n_k) over currents with the given sources.
    double multi_sum(std::span<const VertexMask> sources, const Event& f) const {
        std::vector<const std::vector<std::uint32_t>*> bs;
        for (VertexMask a : sources) {
            auto it = buckets_.find(a);
            if (it == buckets_.end()) return 0.0;
            bs.push_back(&it->second);
        }
        KahanSum total;
        std::vector<CurrentView> views(sources.size());
        std::vector<std::size_t> idx(sources.size(), 0);
        const std::size_t k = sources.size();
        while (true) {
            double w = 1.0;
            for (std::size_t i = 0; i < k; ++i) {
                const State& st = states_[(*bs[i])[idx[i]]];
                w *= st.weight;
                views[i] = {st.open, st.odd};
            }
            if (!f || f(*this, views)) total.add(w);
            std::size_t i = 0;
            for (; i < k; ++i) {
                if (++idx[i] < bs[i]->size()) break;
                idx[i] = 0;
            }
            if (i == k) break;
        }
        return total.value();
    }

    double sourced_sum(VertexMask a) const {
        VertexMask s[1] = {a};
        return multi_sum(std::span<const VertexMask>(s, 1), nullptr);
    }

    // <sigma_A> = sum_{dn=A} w / sum_{dn=0} w in the current representation
    double correlation_mask(VertexMask a) const { return sourced_sum(a) / sourced_sum(0); }

    double correlation(std::span<const int> a) const { return correlation_mask(vertex_mask(a)); }
    double correlation2(int x, int y) const {
        if (x == y) return 1.0;
        int v[2] = {x, y};
        return correlation(v);
    }

    // P^{A_1,...,A_k}[F] under the product of source-constrained measures.
    double probability(std::span<const VertexMask> sources, const Event& f) const {
        double num = multi_sum(sources, f);
        double den = 1.0;
        for (VertexMask a : sources) den *= sourced_sum(a);
        return num / den;
    }

  private:
    struct State {
        double weight;
        EdgeMask open;
        EdgeMask odd;
        VertexMask sources;
    };

    Graph graph_;
    double beta_;
    std::vector<State> states_;
    std::unordered_map<VertexMask, std::vector<std::uint32_t>> buckets_;
    mutable std::unordered_map<EdgeMask, std::vector<std::uint8_t>> comp_cache_;
};

// ---------------------------------------------------------------------------
// Identity / inequality checks
// ---------------------------------------------------------------------------

struct PairCheck {
    double lhs = 0.0;
    double rhs = 0.0;
    double deviation() const {
        return std::abs(lhs - rhs) / std::max({std::abs(lhs), std::abs(rhs), 1.0});
    }
};

// Predicate over one (summed) current used in the switching lemma.
using SumEvent = std::function<bool(const CurrentEngine&, CurrentView)>;

// Switching lemma: both sides returned; they must agree to ~1e-12 relative.
inline PairCheck verify_switching(const CurrentEngine& eng, VertexMask a, VertexMask b,
                                  const SumEvent& f) {
    auto on_sum = [&](const CurrentEngine& e, std::span<const CurrentView> ns) {
        return !f || f(e, ns[0] + ns[1]);
    };
    VertexMask lhs_sources[2] = {a, b};
    double lhs = eng.multi_sum(lhs_sources, on_sum);
    VertexMask rhs_sources[2] = {a ^ b, 0};
    double rhs = eng.multi_sum(rhs_sources, [&](const CurrentEngine& e, std::span<const CurrentView> ns) {
        CurrentView sum = ns[0] + ns[1];
        if (!e.pairable(sum.open, b)) return false;
        return !f || f(e, sum);
    });
    return {lhs, rhs};
}

// Correlation-ratio identity: <s_A><s_B>/<s_A s_B> = P^{A xor B, 0}[F_B].
inline PairCheck verify_correlation_ratio(const CurrentEngine& eng, VertexMask a, VertexMask b) {
    double lhs = eng.correlation_mask(a) * eng.correlation_mask(b) / eng.correlation_mask(a ^ b);
    VertexMask sources[2] = {a ^ b, 0};
    double rhs = eng.probability(sources, [&](const CurrentEngine& e, std::span<const CurrentView> ns) {
        return e.pairable((ns[0] + ns[1]).open, b);
    });
    return {lhs, rhs};
}

// Ursell 4-point function by the spin oracle.
inline double ursell4_spin(const Graph& g, double beta, int x, int y, int z, int t) {
    auto s2 = [&](int p, int q) {
        int v[2] = {p, q};
        return spin_correlation(g, beta, v);
    };
    int v4[4] = {x, y, z, t};
    return spin_correlation(g, beta, v4) -
           (s2(x, y) * s2(z, t) + s2(x, z) * s2(y, t) + s2(x, t) * s2(y, z));
}

// Ursell 4-point function by the intersection-probability identity:
// U4 = -2 <s_x s_y><s_z s_t> P^{xy,zt}[x <-> z in n1+n2].
inline double ursell4_current(const CurrentEngine& eng, int x, int y, int z, int t) {
    VertexMask xy = (VertexMask{1} << x) ^ (VertexMask{1} << y);
    VertexMask zt = (VertexMask{1} << z) ^ (VertexMask{1} << t);
    VertexMask sources[2] = {xy, zt};
    double p = eng.probability(sources, [&](const CurrentEngine& e, std::span<const CurrentView> ns) {
        return e.connected(ns[0].open | ns[1].open, x, z);
    });
    return -2.0 * eng.correlation_mask(xy) * eng.correlation_mask(zt) * p;
}

// Tree diagram bound: |U4| <= 2 sum_u S(ux)S(uy)S(uz)S(ut).
inline PairCheck verify_tree_bound(const CurrentEngine& eng, int x, int y, int z, int t) {
    double u4 = ursell4_current(eng, x, y, z, t);
    KahanSum tree;
    for (int u = 0; u < eng.graph().n_vertices; ++u)
        tree.add(eng.correlation2(u, x) * eng.correlation2(u, y) * eng.correlation2(u, z) *
                 eng.correlation2(u, t));
    return {std::abs(u4), 2.0 * tree.value()};
}

struct ConnectivityReport {
    PairCheck through_point;        // identity
    PairCheck double_visit;         // lhs <= rhs
    PairCheck sandwich_lower;       // P^{0x,0}[0<->v] <= P^{0x,0u}[0<->v]
    PairCheck sandwich_upper;       // P^{0x,0u}[0<->v] <= sum of three terms
    PairCheck source_monotonicity;  // P^{0u,ux}[v<->u] >= P^{0u,0}[v<->u]
};

// Connectivity identities: the through-point identity, the double-visit
// bound, the conditioning sandwich and source monotonicity; origin at vertex 0.
inline ConnectivityReport verify_connectivity_identities(const CurrentEngine& eng, int x, int u,
                                                         int v) {
    ConnectivityReport r;
    auto m1 = [](int a) { return VertexMask{1} << a; };
    VertexMask zx = m1(0) ^ m1(x);

    auto conn = [&](int a, int b) {
        return [a, b](const CurrentEngine& e, std::span<const CurrentView> ns) {
            EdgeMask open = 0;
            for (auto& n : ns) open |= n.open;
            return e.connected(open, a, b);
        };
    };
    auto conn_both = [&](int a, int b, int c) {
        return [a, b, c](const CurrentEngine& e, std::span<const CurrentView> ns) {
            EdgeMask open = 0;
            for (auto& n : ns) open |= n.open;
            return e.connected(open, a, b) && e.connected(open, a, c);
        };
    };

    VertexMask s_0x[2] = {zx, 0};
    double s0x = eng.correlation_mask(zx);
    r.through_point = {eng.probability(s_0x, conn(u, 0)),
                eng.correlation2(0, u) * eng.correlation2(u, x) / s0x};

    r.double_visit = {eng.probability(s_0x, conn_both(0, u, v)),
                (eng.correlation2(0, v) * eng.correlation2(v, u) * eng.correlation2(u, x) +
                 eng.correlation2(0, u) * eng.correlation2(u, v) * eng.correlation2(v, x)) /
                    s0x};

    // conditioning sandwich with S = {v} and second sources {0, u}
    VertexMask zu = m1(0) ^ m1(u);
    VertexMask s_0x_0u[2] = {zx, zu};
    VertexMask s_0_0u[2] = {0, zu};
    VertexMask s_0_0[2] = {0, 0};
    double p_0x = eng.probability(s_0x, conn(0, v));
    double p_0x_0u = eng.probability(s_0x_0u, conn(0, v));
    double p_0_0u = eng.probability(s_0_0u, conn(0, v));
    double p_0_0 = eng.probability(s_0_0, conn(0, v));
    r.sandwich_lower = {p_0x, p_0x_0u};
    r.sandwich_upper = {p_0x_0u, p_0x + p_0_0u - p_0_0};

    // source monotonicity: P^{0u,ux}[v <-> u] >= P^{0u,0}[v <-> u]
    VertexMask ux = m1(u) ^ m1(x);
    VertexMask s_0u_ux[2] = {zu, ux};
    VertexMask s_0u_0[2] = {zu, 0};
    r.source_monotonicity = {eng.probability(s_0u_ux, conn(v, u)), eng.probability(s_0u_0, conn(v, u))};
    return r;
}

struct DisentangleReport {
    PairCheck first;   // lhs <= rhs
    PairCheck second;  // lhs <= rhs
};

// Both disentangling bounds via three- and four-current sums.
inline DisentangleReport verify_disentangling(const CurrentEngine& eng, int x, int y, int z, int t,
                                              VertexMask s_set) {
    DisentangleReport r;
    auto m1 = [](int a) { return VertexMask{1} << a; };
    VertexMask xy = m1(x) ^ m1(y), zt = m1(z) ^ m1(t);

    VertexMask src2[2] = {xy, zt};
    double lhs1 = eng.probability(src2, [&](const CurrentEngine& e, std::span<const CurrentView> ns) {
        return e.connected(ns[0].open | ns[1].open, x, z);
    });
    VertexMask src3[3] = {xy, 0, zt};
    double rhs1 = eng.probability(src3, [&](const CurrentEngine& e, std::span<const CurrentView> ns) {
        // some u in C_{n1+n2}(x) and in C_{n3}(z)
        EdgeMask open12 = ns[0].open | ns[1].open;
        for (int u = 0; u < e.graph().n_vertices; ++u)
            if (e.connected(open12, x, u) && e.connected(ns[2].open, z, u)) return true;
        return false;
    });
    r.first = {lhs1, rhs1};

    VertexMask zx = m1(0) ^ m1(x), zz = m1(0) ^ m1(z);
    VertexMask zy = m1(0) ^ m1(y), ztt = m1(0) ^ m1(t);
    auto meet_in_s = [s_set](const CurrentEngine& e, std::span<const CurrentView> ns) {
        EdgeMask open13 = ns[0].open | ns[2].open;
        EdgeMask open24 = ns[1].open | ns[3].open;
        for (int u = 0; u < e.graph().n_vertices; ++u)
            if ((s_set & (VertexMask{1} << u)) && e.connected(open13, 0, u) &&
                e.connected(open24, 0, u))
                return true;
        return false;
    };
    VertexMask src4a[4] = {zx, zz, 0, 0};
    VertexMask src4b[4] = {zx, zz, zy, ztt};
    r.second = {eng.probability(src4a, meet_in_s), eng.probability(src4b, meet_in_s)};
    return r;
}

// Simon inequality (graph version with explicit correlators): for 0 in cut,
// y outside, S(0y) <= sum over cut edges (u in cut, v outside) of
// S(0u) * beta J_{uv} * S(vy).
inline PairCheck verify_simon(const CurrentEngine& eng, std::span<const int> cut, int y) {
    std::vector<bool> in_cut(eng.graph().n_vertices, false);
    for (int v : cut) in_cut[v] = true;
    if (!in_cut[0]) throw std::invalid_argument("cut must contain the origin 0");
    if (in_cut[y]) throw std::invalid_argument("y must lie outside the cut set");
    const Graph& g = eng.graph();
    KahanSum rhs;
    for (int e = 0; e < g.n_edges(); ++e) {
        auto [a, b] = g.edges[e];
        int u = -1, v = -1;
        if (in_cut[a] && !in_cut[b]) u = a, v = b;
        if (in_cut[b] && !in_cut[a]) u = b, v = a;
        if (u < 0) continue;
        rhs.add(eng.correlation2(0, u) * eng.beta() * g.coupling[e] * eng.correlation2(v, y));
    }
    return {eng.correlation2(0, y), rhs.value()};
}

// ---------------------------------------------------------------------------
// Validation of the pairability criterion against exhaustive sub-current
// search on true integer currents (n(e) <= 3 captures all parity classes).
// ---------------------------------------------------------------------------
inline bool pairable_bruteforce(const Graph& g, std::span<const int> n_values, VertexMask b) {
    const int ne = g.n_edges();
    std::vector<int> m(ne, 0);
    while (true) {
        VertexMask sources = 0;
        for (int e = 0; e < ne; ++e)
            if (m[e] % 2 == 1)
                sources ^= (VertexMask{1} << g.edges[e].first) ^ (VertexMask{1} << g.edges[e].second);
        if (sources == b) return true;
        int e = 0;
        for (; e < ne; ++e) {
            if (++m[e] <= n_values[e]) break;
            m[e] = 0;
        }
        if (e == ne) return false;
    }
}

}  // namespace currentlab::exact
