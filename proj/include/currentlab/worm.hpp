#pragma once

// Sourced random-current sampling.
//
// The integer current n under P^A factorizes into (i) its edge-parity layer
// eta with weight prod_e tanh(beta J_e)^eta_e restricted to d(eta) = A, and
// (ii) independent activation of even edges with probability
// (cosh t - 1)/cosh t. The parity layer is sampled by a defect-pair worm on
// the extended ensemble (eta, u, v) with pi(eta,u,v) ~ w(eta) on
// d(eta) = A xor {u} xor {v}; a defect step flipping edge (v,w) is accepted
// with min(1, (w'/w) deg(v)/deg(w)), which is in detailed balance, and
// physical configurations are read off only when u = v.

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <vector>

#include "currentlab/geometry.hpp"
#include "currentlab/rng.hpp"
#include "currentlab/stats.hpp"

namespace currentlab::mc {

struct TraceConfig {
    std::vector<std::uint8_t> eta;  // per-edge parity
    std::vector<int> sources;
};

struct SampledCurrent {
    std::vector<std::uint8_t> open;  // parity-odd or activated-even edges
};

class ParitySampler {
  public:
    // diag_bias reweights the extended ensemble by lambda^{1[u != v]};
    // the diagonal conditional (the physical law) is unchanged for any
    // lambda > 0, so it is purely an efficiency dial for large lattices.
    ParitySampler(const Graph& g, double beta, std::vector<int> sources, std::mt19937_64 rng,
                  double diag_bias = 1.0)
        : graph_(&g), rng_(std::move(rng)), eta_(g.n_edges(), 0), sources_(std::move(sources)),
          lambda_(diag_bias) {
        if (sources_.size() % 2 != 0) throw std::invalid_argument("need an even number of sources");
        adj_ = g.adjacency();
        tanh_.resize(g.n_edges());
        for (int e = 0; e < g.n_edges(); ++e) tanh_[e] = std::tanh(beta * g.coupling[e]);
        // initial parity layer: pair sources along BFS paths
        for (std::size_t i = 0; i + 1 < sources_.size(); i += 2)
            flip_path(sources_[i], sources_[i + 1]);
        u_ = 0;
    }

    const Graph& graph() const { return *graph_; }
    const std::vector<std::uint8_t>& eta() const { return eta_; }
    TraceConfig trace() const { return {eta_, sources_}; }

    // One sweep: advance the extended chain in fixed blocks of n_edges
    // composite steps; return at the first block boundary where the state
    // is diagonal (physical). Observing the chain at all diagonal block
    // boundaries is plain occupancy filtering of a stationary chain, so the
    // recorded configurations follow the diagonal conditional exactly;
    // stopping at a first *hitting* time of the diagonal inside an excursion
    // would length-bias the excursions instead.
    void sweep() {
        const long block = std::max(1, graph_->n_edges());
        do {
            for (long i = 0; i < block; ++i) {
                if (v_ == u_) repick_anchor();
                defect_step();
            }
        } while (v_ != u_);
    }

    bool diagonal() const { return v_ == u_; }

  private:
    void repick_anchor() {
        std::uniform_int_distribution<int> vd(0, graph_->n_vertices - 1);
        u_ = v_ = vd(rng_);
    }

    void defect_step() {
        const auto& nb = adj_[v_];
        if (nb.empty()) return;
        std::uniform_int_distribution<std::size_t> pick(0, nb.size() - 1);
        auto [w, e] = nb[pick(rng_)];
        double ratio = eta_[e] ? 1.0 / tanh_[e] : tanh_[e];
        ratio *= double(nb.size()) / double(adj_[w].size());
        if (v_ == u_) ratio *= lambda_;       // opening the defect pair
        else if (w == u_) ratio /= lambda_;   // closing it
        if (ratio < 1.0) {
            std::uniform_real_distribution<double> ud(0.0, 1.0);
            if (ud(rng_) >= ratio) return;
        }
        eta_[e] ^= 1;
        v_ = w;
    }

    void flip_path(int a, int b) {
        if (a == b) return;
        std::vector<int> prev_edge(graph_->n_vertices, -1), prev_v(graph_->n_vertices, -1);
        std::vector<int> queue = {a};
        std::vector<bool> seen(graph_->n_vertices, false);
        seen[a] = true;
        for (std::size_t h = 0; h < queue.size(); ++h) {
            int x = queue[h];
            if (x == b) break;
            for (auto [y, e] : adj_[x])
                if (!seen[y]) {
                    seen[y] = true;
                    prev_edge[y] = e;
                    prev_v[y] = x;
                    queue.push_back(y);
                }
        }
        if (!seen[b]) throw std::invalid_argument("sources not in one component");
        for (int x = b; x != a; x = prev_v[x]) eta_[prev_edge[x]] ^= 1;
    }

    const Graph* graph_;
    std::mt19937_64 rng_;
    std::vector<std::uint8_t> eta_;
    std::vector<int> sources_;
    std::vector<std::vector<std::pair<int, int>>> adj_;
    std::vector<double> tanh_;
    double lambda_ = 1.0;
    int u_ = 0, v_ = 0;
};

// Even-edge activation on top of a parity layer; beta = 0 opens nothing.
inline SampledCurrent activate_even(const TraceConfig& trace, const Graph& g, double beta,
                                    std::mt19937_64& rng) {
    SampledCurrent cur;
    cur.open.assign(g.n_edges(), 0);
    std::uniform_real_distribution<double> ud(0.0, 1.0);
    for (int e = 0; e < g.n_edges(); ++e) {
        if (trace.eta[e]) {
            cur.open[e] = 1;
        } else {
            double t = beta * g.coupling[e];
            double p = (std::cosh(t) - 1.0) / std::cosh(t);
            if (ud(rng) < p) cur.open[e] = 1;
        }
    }
    return cur;
}

struct ClusterPartition {
    std::vector<int> label;

    explicit ClusterPartition(const Graph& g, const std::vector<std::uint8_t>& open) {
        std::vector<int> parent(g.n_vertices);
        for (int v = 0; v < g.n_vertices; ++v) parent[v] = v;
        auto find = [&](int v) {
            while (parent[v] != v) v = parent[v] = parent[parent[v]];
            return v;
        };
        for (int e = 0; e < g.n_edges(); ++e)
            if (open[e]) {
                int a = find(g.edges[e].first), b = find(g.edges[e].second);
                if (a != b) parent[a] = b;
            }
        label.resize(g.n_vertices);
        for (int v = 0; v < g.n_vertices; ++v) label[v] = find(v);
    }

    bool connected(int x, int y) const { return label[x] == label[y]; }
};

inline std::vector<std::uint8_t> union_open(const std::vector<std::uint8_t>& a,
                                            const std::vector<std::uint8_t>& b) {
    std::vector<std::uint8_t> out(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] | b[i];
    return out;
}

// ---------------------------------------------------------------------------
// Audit: empirical parity-configuration frequencies vs the exact marginal
// prod tanh^eta / Z_A on graphs with <= 16 edges. Returns the max absolute
// frequency deviation.
// ---------------------------------------------------------------------------
inline double audit_parity_marginal(const Graph& g, double beta, const std::vector<int>& sources,
                                    long n_samples, std::mt19937_64 rng) {
    if (g.n_edges() > 16) throw std::invalid_argument("audit needs <= 16 edges");
    // exact marginal over parity configs with the right source set
    std::uint32_t a_mask = 0;
    for (int s : sources) a_mask ^= 1u << s;
    std::vector<double> exact_p(std::size_t{1} << g.n_edges(), 0.0);
    double z = 0.0;
    for (std::uint32_t conf = 0; conf < exact_p.size(); ++conf) {
        std::uint32_t d = 0;
        double w = 1.0;
        for (int e = 0; e < g.n_edges(); ++e)
            if (conf & (1u << e)) {
                d ^= (1u << g.edges[e].first) ^ (1u << g.edges[e].second);
                w *= std::tanh(beta * g.coupling[e]);
            }
        if (d == a_mask) {
            exact_p[conf] = w;
            z += w;
        }
    }
    for (auto& p : exact_p) p /= z;

    ParitySampler sampler(g, beta, sources, rng);
    std::vector<long> counts(exact_p.size(), 0);
    for (long i = 0; i < n_samples / 10; ++i) sampler.sweep();  // burn-in
    for (long i = 0; i < n_samples; ++i) {
        sampler.sweep();
        std::uint32_t conf = 0;
        for (int e = 0; e < g.n_edges(); ++e)
            if (sampler.eta()[e]) conf |= 1u << e;
        ++counts[conf];
    }
    double worst = 0.0;
    for (std::size_t c = 0; c < exact_p.size(); ++c)
        worst = std::max(worst, std::abs(double(counts[c]) / double(n_samples) - exact_p[c]));
    return worst;
}

// ---------------------------------------------------------------------------
// Estimators
// ---------------------------------------------------------------------------

// P^{A,0}[x <-> y in n1 + n2]; two independent currents per measurement.
inline Estimate estimate_connect_prob(const Graph& g, double beta, const std::vector<int>& a,
                                      int x, int y, int chains, long sweeps,
                                      std::uint64_t seed) {
    if (chains < 8) throw std::invalid_argument("need at least 8 chains");
    if (x == y) return {1.0, 0.0};
    std::vector<double> chain_means;
    for (int c = 0; c < chains; ++c) {
        ParitySampler s1(g, beta, a, make_stream(seed, "connect-a", c));
        ParitySampler s2(g, beta, {}, make_stream(seed, "connect-0", c));
        auto act_rng = make_stream(seed, "connect-act", c);
        long burn = sweeps / 10;
        for (long i = 0; i < burn; ++i) s1.sweep(), s2.sweep();
        KahanSum hits;
        for (long i = 0; i < sweeps; ++i) {
            s1.sweep();
            s2.sweep();
            auto n1 = activate_even(s1.trace(), g, beta, act_rng);
            auto n2 = activate_even(s2.trace(), g, beta, act_rng);
            ClusterPartition cp(g, union_open(n1.open, n2.open));
            hits.add(cp.connected(x, y) ? 1.0 : 0.0);
        }
        chain_means.push_back(hits.value() / double(sweeps));
    }
    return chain_estimate(chain_means);
}

struct IntersectionStats {
    Estimate p_nonempty;        // P[|T| > 0]
    Estimate mean_size;         // E[|T|]
    Estimate clustering_tail;   // P[M_u < delta*K | u in T]
    long covering_violations = 0;  // deterministic re-check, must stay 0
    long samples = 0;
    long nonempty_samples = 0;
};

// T = C_{n1+n3}(x) of the xy-sourced pair intersected with C_{n2+n4}(z) of
// the zt-sourced pair; covering statistic M_u evaluated in torus metric.
inline IntersectionStats intersection_stats(const Torus& torus, double beta, int x, int y, int z,
                                            int t, const std::vector<long>& lengths, int K,
                                            double delta, int chains, long sweeps,
                                            std::uint64_t seed, double diag_bias = 1.0) {
    if (chains < 8) throw std::invalid_argument("need at least 8 chains");
    check_scale_sequence(lengths, K);
    for (int a : {x, y, z, t})
        for (int b : {x, y, z, t})
            if (a != b && torus.dist_inf(a, b) < 2 * lengths[K])
                throw std::invalid_argument("sources too close for the scale sequence");
    Graph g = torus.as_graph();
    IntersectionStats out;
    std::vector<double> c_nonempty, c_size, c_tail;
    for (int c = 0; c < chains; ++c) {
        ParitySampler s1(g, beta, {x, y}, make_stream(seed, "inter-1", c), diag_bias);
        ParitySampler s2(g, beta, {z, t}, make_stream(seed, "inter-2", c), diag_bias);
        ParitySampler s3(g, beta, {}, make_stream(seed, "inter-3", c), diag_bias);
        ParitySampler s4(g, beta, {}, make_stream(seed, "inter-4", c), diag_bias);
        auto act_rng = make_stream(seed, "inter-act", c);
        long burn = sweeps / 10;
        for (long i = 0; i < burn; ++i) s1.sweep(), s2.sweep(), s3.sweep(), s4.sweep();
        KahanSum nonempty, size_sum, tail_hits, tail_tot;
        for (long i = 0; i < sweeps; ++i) {
            s1.sweep(), s2.sweep(), s3.sweep(), s4.sweep();
            auto n1 = activate_even(s1.trace(), g, beta, act_rng);
            auto n2 = activate_even(s2.trace(), g, beta, act_rng);
            auto n3 = activate_even(s3.trace(), g, beta, act_rng);
            auto n4 = activate_even(s4.trace(), g, beta, act_rng);
            ClusterPartition c13(g, union_open(n1.open, n3.open));
            ClusterPartition c24(g, union_open(n2.open, n4.open));
            std::vector<int> tset;
            for (int s = 0; s < g.n_vertices; ++s)
                if (c13.connected(x, s) && c24.connected(z, s)) tset.push_back(s);
            ++out.samples;
            nonempty.add(tset.empty() ? 0.0 : 1.0);
            size_sum.add(double(tset.size()));
            if (!tset.empty()) {
                ++out.nonempty_samples;
                for (int u : tset) {
                    int m = annular_cover_count(
                        int(tset.size()),
                        [&](int i2) { return long(torus.dist_inf(tset[i2], u)); }, lengths, K);
                    if (double(tset.size()) < std::exp2(m / 5.0)) ++out.covering_violations;
                    tail_tot.add(1.0);
                    if (double(m) < delta * K) tail_hits.add(1.0);
                }
            }
        }
        c_nonempty.push_back(nonempty.value() / double(sweeps));
        c_size.push_back(size_sum.value() / double(sweeps));
        c_tail.push_back(tail_tot.value() > 0 ? tail_hits.value() / tail_tot.value() : 0.0);
    }
    out.p_nonempty = chain_estimate(c_nonempty);
    out.mean_size = chain_estimate(c_size);
    out.clustering_tail = chain_estimate(c_tail);
    return out;
}

// Events for the mixing probe: predicates of one sampled current plus
// geometry. The library covers the box-local events the probe needs.
struct CurrentEvent {
    // cluster of `site` reaches inf-norm distance >= radius from it
    static auto cluster_exits(int site, int radius) {
        return [site, radius](const Torus& torus, const Graph& g,
                              const std::vector<std::uint8_t>& open) {
            ClusterPartition cp(g, open);
            for (int s = 0; s < g.n_vertices; ++s)
                if (torus.dist_inf(site, s) >= radius && cp.connected(site, s)) return true;
            return false;
        };
    }
    // some open edge with both endpoints at distance >= radius from `site`
    static auto open_edge_outside(int site, int radius) {
        return [site, radius](const Torus& torus, const Graph& g,
                              const std::vector<std::uint8_t>& open) {
            for (int e = 0; e < g.n_edges(); ++e)
                if (open[e] && torus.dist_inf(site, g.edges[e].first) >= radius &&
                    torus.dist_inf(site, g.edges[e].second) >= radius)
                    return true;
            return false;
        };
    }
    static auto full() {
        return [](const Torus&, const Graph&, const std::vector<std::uint8_t>&) { return true; };
    }
};

struct MixingEstimate {
    Estimate covariance_abs;  // |P[E and F] - P[E] P[F]|, jackknifed
    double p_e = 0.0, p_f = 0.0;
};

template <typename EventE, typename EventF>
MixingEstimate mixing_probe(const Torus& torus, double beta, const std::vector<int>& sources,
                            EventE&& ev_e, EventF&& ev_f, int chains, long sweeps,
                            std::uint64_t seed) {
    if (chains < 8) throw std::invalid_argument("need at least 8 chains");
    Graph g = torus.as_graph();
    std::vector<double> me(chains), mf(chains), mef(chains);
    for (int c = 0; c < chains; ++c) {
        ParitySampler s(g, beta, sources, make_stream(seed, "mix", c));
        auto act_rng = make_stream(seed, "mix-act", c);
        long burn = sweeps / 10;
        for (long i = 0; i < burn; ++i) s.sweep();
        KahanSum se, sf, sef;
        for (long i = 0; i < sweeps; ++i) {
            s.sweep();
            auto n = activate_even(s.trace(), g, beta, act_rng);
            bool e = ev_e(torus, g, n.open), f = ev_f(torus, g, n.open);
            se.add(e ? 1.0 : 0.0);
            sf.add(f ? 1.0 : 0.0);
            sef.add(e && f ? 1.0 : 0.0);
        }
        me[c] = se.value() / double(sweeps);
        mf[c] = sf.value() / double(sweeps);
        mef[c] = sef.value() / double(sweeps);
    }
    MixingEstimate out;
    out.covariance_abs = jackknife(chains, [&](const std::vector<std::size_t>& idx) {
        double ae = 0, af = 0, aef = 0;
        for (auto c : idx) ae += me[c], af += mf[c], aef += mef[c];
        ae /= double(idx.size()), af /= double(idx.size()), aef /= double(idx.size());
        return std::abs(aef - ae * af);
    });
    for (int c = 0; c < chains; ++c) out.p_e += me[c] / chains, out.p_f += mf[c] / chains;
    return out;
}

}  // namespace currentlab::mc
