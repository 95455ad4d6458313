#pragma once

// Lattice geometry: tori, arbitrary coupled graphs, boxes, annuli and the
// annular covering statistic. Everything here is immutable after
// construction and safe to share across worker threads.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace currentlab {

// A finite simple graph with non-negative edge couplings J_e. The inverse
// temperature is kept separate and multiplies J at use sites.
struct Graph {
    int n_vertices = 0;
    std::vector<std::pair<int, int>> edges;  // u < v
    std::vector<double> coupling;            // J_e >= 0

    int n_edges() const { return static_cast<int>(edges.size()); }

    void add_edge(int u, int v, double j) {
        if (u == v) throw std::invalid_argument("self-loop");
        if (u > v) std::swap(u, v);
        if (v >= n_vertices) throw std::invalid_argument("vertex out of range");
        if (j < 0 || !std::isfinite(j)) throw std::invalid_argument("coupling must be finite and >= 0");
        for (std::size_t e = 0; e < edges.size(); ++e) {
            if (edges[e] == std::make_pair(u, v)) {
                coupling[e] += j;  // merge parallel edges
                return;
            }
        }
        edges.emplace_back(u, v);
        coupling.push_back(j);
    }

    std::vector<std::vector<std::pair<int, int>>> adjacency() const {
        // per vertex: (neighbor, edge index)
        std::vector<std::vector<std::pair<int, int>>> adj(n_vertices);
        for (int e = 0; e < n_edges(); ++e) {
            adj[edges[e].first].emplace_back(edges[e].second, e);
            adj[edges[e].second].emplace_back(edges[e].first, e);
        }
        return adj;
    }
};

// Plain-text edge list: one line "u v J" per edge, '#' comments allowed.
inline Graph load_edge_list(std::istream& in) {
    std::vector<std::array<double, 3>> rows;
    int max_v = -1;
    std::string line;
    while (std::getline(in, line)) {
        auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        std::istringstream ls(line);
        int u, v;
        double j;
        if (!(ls >> u >> v >> j)) continue;
        if (u < 0 || v < 0) throw std::invalid_argument("negative vertex id in edge list");
        rows.push_back({double(u), double(v), j});
        max_v = std::max({max_v, u, v});
    }
    Graph g;
    g.n_vertices = max_v + 1;
    for (auto& r : rows) g.add_edge(int(r[0]), int(r[1]), r[2]);
    return g;
}

inline Graph load_edge_list_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open edge list: " + path);
    return load_edge_list(f);
}

// d-dimensional torus (Z/LZ)^d with uniform nearest-neighbor coupling J.
// Sites are indexed lexicographically; coordinates live in [0, L).
class Torus {
  public:
    Torus(int d, int side, double j) : d_(d), side_(side), coupling_j_(j) {
        if (d < 1 || d > 4) throw std::invalid_argument("torus dimension must be in 1..4");
        if (side < 2) throw std::invalid_argument("torus side must be >= 2");
        if (!(j >= 0) || !std::isfinite(j)) throw std::invalid_argument("coupling must be finite and >= 0");
        n_sites_ = 1;
        for (int k = 0; k < d; ++k) n_sites_ *= side;
    }

    int dim() const { return d_; }
    int side() const { return side_; }
    double coupling() const { return coupling_j_; }
    int n_sites() const { return n_sites_; }
    // |J| = sum of couplings touching one site
    double coupling_norm() const { return 2.0 * d_ * coupling_j_; }

    std::array<int, 4> coords(int site) const {
        std::array<int, 4> c{0, 0, 0, 0};
        for (int k = 0; k < d_; ++k) {
            c[k] = site % side_;
            site /= side_;
        }
        return c;
    }

    int index(const std::array<int, 4>& c) const {
        int site = 0;
        for (int k = d_ - 1; k >= 0; --k) {
            int x = ((c[k] % side_) + side_) % side_;
            site = site * side_ + x;
        }
        return site;
    }

    int neighbor(int site, int axis, int dir) const {  // dir = +1 or -1
        auto c = coords(site);
        c[axis] += dir;
        return index(c);
    }

    int translate(int site, int by) const {
        auto a = coords(site), b = coords(by);
        for (int k = 0; k < d_; ++k) a[k] += b[k];
        return index(a);
    }

    // Minimal-image displacement component in (-L/2, L/2].
    int min_image(int delta) const {
        delta = ((delta % side_) + side_) % side_;
        if (delta > side_ / 2) delta -= side_;
        return delta;
    }

    int norm_inf(int site) const {
        auto c = coords(site);
        int m = 0;
        for (int k = 0; k < d_; ++k) m = std::max(m, std::abs(min_image(c[k])));
        return m;
    }

    int norm_1(int site) const {
        auto c = coords(site);
        int m = 0;
        for (int k = 0; k < d_; ++k) m += std::abs(min_image(c[k]));
        return m;
    }

    int dist_inf(int a, int b) const {
        auto ca = coords(a), cb = coords(b);
        int m = 0;
        for (int k = 0; k < d_; ++k) m = std::max(m, std::abs(min_image(ca[k] - cb[k])));
        return m;
    }

    // Box Lambda_n = {x : |x| <= n} around the origin (minimal image).
    std::vector<int> box_sites(int n) const {
        std::vector<int> out;
        for (int s = 0; s < n_sites_; ++s)
            if (norm_inf(s) <= n) out.push_back(s);
        return out;
    }

    // Ann(k, n) = Lambda_n \ Lambda_{k-1} = {x : k <= |x| <= n}.
    std::vector<int> annulus_sites(int k, int n) const {
        if (k < 0 || n < k || n > side_ / 2)
            throw std::invalid_argument("annulus radii out of range");
        std::vector<int> out;
        for (int s = 0; s < n_sites_; ++s) {
            int r = norm_inf(s);
            if (r >= k && r <= n) out.push_back(s);
        }
        return out;
    }

    std::vector<int> boundary_sites(int n) const { return annulus_sites(n, n); }

    // Nearest-neighbor edge enumeration; on L=2 both wrap edges between a
    // pair coincide and are merged with doubled coupling.
    Graph as_graph() const {
        Graph g;
        g.n_vertices = n_sites_;
        for (int s = 0; s < n_sites_; ++s)
            for (int k = 0; k < d_; ++k) g.add_edge(s, neighbor(s, k, +1), coupling_j_);
        return g;
    }

    int n_edges() const { return side_ == 2 ? d_ * n_sites_ / 2 : d_ * n_sites_; }

  private:
    int d_, side_;
    double coupling_j_;
    int n_sites_;
};

// Number of annuli u + Ann(l_k, l_{k+1}), k = 1..K, that meet X. The length
// sequence must satisfy l_1 >= 1 and l_{k+1} >= 2 l_k.
inline void check_scale_sequence(const std::vector<long>& lengths, int K) {
    if (K < 1 || static_cast<int>(lengths.size()) < K + 1)
        throw std::invalid_argument("scale sequence too short for K");
    if (lengths[1] < 1) throw std::invalid_argument("scale sequence needs l_1 >= 1");
    for (int k = 1; k < K; ++k)
        if (lengths[k + 1] < 2 * lengths[k])
            throw std::invalid_argument("scale sequence must at least double");
}

// Generic version over integer points with an infinity-distance callback,
// shared by exact Z^d sets and torus site sets.
template <typename DistFn>
int annular_cover_count(int n_points, DistFn&& dist_to_u,
                        const std::vector<long>& lengths, int K) {
    check_scale_sequence(lengths, K);
    int hit = 0;
    for (int k = 1; k <= K; ++k) {
        bool meets = false;
        for (int i = 0; i < n_points && !meets; ++i) {
            long r = dist_to_u(i);
            if (r >= lengths[k] && r <= lengths[k + 1]) meets = true;
        }
        hit += meets ? 1 : 0;
    }
    return hit;
}

// Points of Z^d given explicitly; u need not belong to X.
inline int annular_cover_count_zd(const std::vector<std::array<long, 4>>& xset, int d,
                                  const std::array<long, 4>& u,
                                  const std::vector<long>& lengths, int K) {
    return annular_cover_count(
        static_cast<int>(xset.size()),
        [&](int i) {
            long r = 0;
            for (int k = 0; k < d; ++k) r = std::max(r, std::labs(xset[i][k] - u[k]));
            return r;
        },
        lengths, K);
}

// Annular covering lemma: |X| >= 2^{min_u M_u(X)/5}. Deterministic and
// universally quantified; the fuzz harness asserts it never fails.
inline bool covering_bound_holds_zd(const std::vector<std::array<long, 4>>& xset, int d,
                                    const std::vector<long>& lengths, int K) {
    if (xset.empty()) return true;
    int min_m = K + 1;
    for (auto& u : xset)
        min_m = std::min(min_m, annular_cover_count_zd(xset, d, u, lengths, K));
    return static_cast<double>(xset.size()) >= std::exp2(min_m / 5.0);
}

}  // namespace currentlab
