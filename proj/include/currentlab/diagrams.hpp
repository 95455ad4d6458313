#pragma once

// Diagrammatic quantities over a two-point table: truncated bubble and
// susceptibility, box-sum variance, tree sums, bubble-based scale sequence,
// regular-scale detection (P1..P4 with configurable constants), smeared
// gaussianity-bound ingredients, renormalized coupling and Wick pairing sums.

#include <array>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "currentlab/geometry.hpp"
#include "currentlab/stats.hpp"
#include "currentlab/table.hpp"

namespace currentlab::diagrams {

inline int max_radius(const TwoPointTable& t) { return t.side / 2; }

// B_L = sum over |x|_inf <= L of S(x)^2
inline double bubble(const TwoPointTable& t, int l) {
    if (l < 0 || l > max_radius(t)) throw std::invalid_argument("bubble radius out of range");
    Torus geo = t.torus();
    KahanSum acc;
    for (int s = 0; s < t.n_sites(); ++s)
        if (geo.norm_inf(s) <= l) acc.add(t.s[s] * t.s[s]);
    return acc.value();
}

inline double chi(const TwoPointTable& t, int l) {
    if (l < 0 || l > max_radius(t)) throw std::invalid_argument("chi radius out of range");
    Torus geo = t.torus();
    KahanSum acc;
    for (int s = 0; s < t.n_sites(); ++s)
        if (geo.norm_inf(s) <= l) acc.add(t.s[s]);
    return acc.value();
}

// Sigma_L = variance of the spin sum over the box Lambda_L; evaluated as
// sum_r S(r) * #{(x,y) in box^2 : x - y = r mod L}, with the pair count
// factorizing over axes.
inline double sigma_box(const TwoPointTable& t, int l) {
    if (l < 0 || l > max_radius(t)) throw std::invalid_argument("sigma radius out of range");
    Torus geo = t.torus();
    int side = t.side;
    // 1D pair count per wrapped displacement over distinct axis coordinates
    std::vector<int> axis;
    for (int a = 0; a < side; ++a)
        if (std::abs(geo.min_image(a)) <= l) axis.push_back(a);
    std::vector<double> cnt(side, 0.0);
    for (int a : axis)
        for (int b : axis) cnt[((a - b) % side + side) % side] += 1.0;
    KahanSum acc;
    for (int s = 0; s < t.n_sites(); ++s) {
        auto c = geo.coords(s);
        double w = 1.0;
        for (int k = 0; k < t.d; ++k) w *= cnt[c[k]];
        acc.add(w * t.s[s]);
    }
    return acc.value();
}

// 2 sum_u S(u-x)S(u-y)S(u-z)S(u-t) over the torus.
inline double tree_sum(const TwoPointTable& t, const std::array<int, 4>& x,
                       const std::array<int, 4>& y, const std::array<int, 4>& z,
                       const std::array<int, 4>& w) {
    Torus geo = t.torus();
    int xs = geo.index(x), ys = geo.index(y), zs = geo.index(z), ws = geo.index(w);
    KahanSum acc;
    for (int u = 0; u < t.n_sites(); ++u) {
        auto cu = geo.coords(u);
        auto diff = [&](int site) {
            auto c = geo.coords(site);
            std::array<int, 4> d{0, 0, 0, 0};
            for (int k = 0; k < t.d; ++k) d[k] = cu[k] - c[k];
            return geo.index(d);
        };
        acc.add(t.s[diff(xs)] * t.s[diff(ys)] * t.s[diff(zs)] * t.s[diff(ws)]);
    }
    return 2.0 * acc.value();
}

struct RatioRow {
    std::array<std::array<int, 4>, 4> quad;
    double u4 = 0.0;
    double tree = 0.0;
    double ratio = 0.0;        // |u4| / tree, 0 on the 0/0 convention
    bool degenerate = false;   // tree = 0 with u4 != 0
    double bubble_factor = 0.0;  // B_L at the quadruple's minimal spacing
};

inline RatioRow improved_ratio_row(const TwoPointTable& t,
                                   const std::array<std::array<int, 4>, 4>& quad, double u4) {
    Torus geo = t.torus();
    RatioRow row;
    row.quad = quad;
    row.u4 = u4;
    row.tree = tree_sum(t, quad[0], quad[1], quad[2], quad[3]);
    int min_dist = t.side;
    for (int i = 0; i < 4; ++i)
        for (int j = i + 1; j < 4; ++j)
            min_dist = std::min(min_dist, geo.dist_inf(geo.index(quad[i]), geo.index(quad[j])));
    row.bubble_factor = bubble(t, std::min(min_dist, max_radius(t)));
    if (row.tree == 0.0) {
        row.degenerate = u4 != 0.0;
        row.ratio = 0.0;
    } else {
        row.ratio = std::abs(u4) / row.tree;
    }
    return row;
}

struct ScaleSequence {
    double growth = 0.0;        // D
    std::vector<long> lengths;  // l_0 = 0, then each with B_{l_{k+1}} >= D B_{l_k}
    int k_max = 0;
};

inline ScaleSequence scale_sequence(const TwoPointTable& t, double growth) {
    if (!(growth > 1.0)) throw std::invalid_argument("need D > 1");
    ScaleSequence seq;
    seq.growth = growth;
    seq.lengths = {0};
    double b_prev = bubble(t, 0);
    for (long l = 1; l <= max_radius(t); ++l) {
        double b = bubble(t, int(l));
        if (b >= growth * b_prev) {  // first such l is inf{l : B_l >= D B_prev}
            seq.lengths.push_back(l);
            b_prev = b;
            ++seq.k_max;
        }
    }
    return seq;
}

struct RegularScaleFlags {
    int n = 0;  // annulus Ann(n/2, 4n)
    bool p1 = false, p2 = false, p3 = false, p4 = false;
    bool p3_vacuous = false;  // no admissible y on this torus
    bool all() const { return p1 && p2 && p3 && p4; }
};

// P1..P4 with configured (c, C); annuli are evaluated on the torus, so the
// scale n must satisfy 4n <= side/2 for P1/P2 and 2n <= side/2 for P4.
// P2 is restricted to a deterministic subsample of pairs when the annulus
// is large, site stride chosen so the pair count stays near 10^6.
inline RegularScaleFlags regular_scale_flags(const TwoPointTable& t, int n, double c, double cc) {
    Torus geo = t.torus();
    RegularScaleFlags f;
    f.n = n;
    if (n < 1 || 4 * n > max_radius(t) || 2 * n > max_radius(t))
        throw std::invalid_argument("scale does not fit the torus");
    std::vector<int> ann;
    int lo = std::max(1, n / 2);
    for (int s = 1; s < t.n_sites(); ++s) {
        int r = geo.norm_inf(s);
        if (r >= lo && r <= 4 * n) ann.push_back(s);
    }
    double mn = 1e300, mx = -1e300;
    for (int s : ann) mn = std::min(mn, t.s[s]), mx = std::max(mx, t.s[s]);
    f.p1 = mx <= cc * mn;

    std::size_t stride = 1;
    while ((ann.size() / stride) * (ann.size() / stride) > 1000000) ++stride;
    f.p2 = true;
    for (std::size_t i = 0; i < ann.size() && f.p2; i += stride)
        for (std::size_t j = 0; j < ann.size(); j += stride) {
            int x = ann[i], y = ann[j];
            double lhs = std::abs(t.s[x] - t.s[y]);
            double rhs = cc * double(geo.dist_inf(x, y)) / double(geo.norm_inf(x)) * t.s[x];
            if (lhs > rhs) {
                f.p2 = false;
                break;
            }
        }

    double cn = cc * n;
    if (cn >= max_radius(t)) {
        f.p3 = true;  // no y outside Lambda_{Cn} exists on this torus
        f.p3_vacuous = true;
    } else {
        double min_in = 1e300, max_out = -1e300;
        for (int s = 0; s < t.n_sites(); ++s) {
            int r = geo.norm_inf(s);
            if (r <= n) min_in = std::min(min_in, t.s[s]);
            if (double(r) > cn) max_out = std::max(max_out, t.s[s]);
        }
        f.p3 = max_out <= 0.5 * min_in;
    }

    f.p4 = chi(t, 2 * n) >= (1.0 + c) * chi(t, n);
    return f;
}

struct RegularScaleReport {
    std::vector<RegularScaleFlags> flags;  // per dyadic scale
    int count = 0;                         // scales with all four properties
    double target = 0.0;                   // c * log2(N / n) for the range
};

inline RegularScaleReport regular_scales(const TwoPointTable& t, double c, double cc) {
    RegularScaleReport rep;
    int lo_n = 1, hi_n = 1;
    for (int n = 1; 4 * n <= max_radius(t); n *= 2) {
        rep.flags.push_back(regular_scale_flags(t, n, c, cc));
        hi_n = n;
        if (rep.flags.back().all()) ++rep.count;
    }
    if (!rep.flags.empty()) rep.target = c * std::log2(double(hi_n) / double(lo_n));
    return rep;
}

// Gaussianity-bound ingredient S(L, r, beta) in factorized form: the bubble
// factor is frozen at a configured scale l_b, which upper-bounds the exact
// expression whenever B is non-decreasing and l_b <= min spacing; the sum
// over the four box points then factorizes through g(x) = sum_{y in
// Lambda_r} S(x - y).
struct GaussBound {
    double s_bound = 0.0;
    double sigma_l = 0.0;
    double bubble_used = 0.0;
    int r_sites = 0;
};

inline GaussBound gaussianity_bound(const TwoPointTable& t, int r_sites, double c_exp,
                                    int bubble_scale) {
    Torus geo = t.torus();
    if (r_sites > max_radius(t)) throw std::invalid_argument("support exceeds torus");
    GaussBound out;
    out.r_sites = r_sites;
    out.sigma_l = sigma_box(t, max_radius(t));
    out.bubble_used = bubble(t, bubble_scale);
    std::vector<int> box = geo.box_sites(r_sites);
    KahanSum total;
    for (int x = 0; x < t.n_sites(); ++x) {
        auto cx = geo.coords(x);
        KahanSum gx;
        for (int y : box) {
            auto cy = geo.coords(y);
            std::array<int, 4> d{0, 0, 0, 0};
            for (int k = 0; k < t.d; ++k) d[k] = cx[k] - cy[k];
            gx.add(t.s[geo.index(d)]);
        }
        double g = gx.value();
        total.add(g * g * g * g);
    }
    out.s_bound = 2.0 * total.value() /
                  (out.sigma_l * out.sigma_l * std::pow(out.bubble_used, c_exp));
    return out;
}

struct RenormalizedCoupling {
    double g = 0.0;
    int truncation_radius = 0;
    bool xi_reliable = false;  // xi estimate within side/4
};

// g(beta) = (xi^4 chi^2)^{-1} sum over triples |U4(0,x,y,z)|, truncated to
// |x|,|y|,|z| <= radius; u4 is supplied by an exact engine or MC estimator.
inline RenormalizedCoupling renormalized_coupling(
    const TwoPointTable& t, const std::function<double(int, int, int)>& u4, int radius,
    double xi, double chi_full) {
    Torus geo = t.torus();
    RenormalizedCoupling out;
    out.truncation_radius = radius;
    out.xi_reliable = xi > 0.0 && xi <= double(t.side) / 4.0;
    std::vector<int> ball = geo.box_sites(radius);
    KahanSum acc;
    for (int x : ball)
        for (int y : ball)
            for (int z : ball) acc.add(std::abs(u4(x, y, z)));
    if (xi > 0.0 && chi_full > 0.0)
        out.g = acc.value() / (xi * xi * xi * xi * chi_full * chi_full);
    return out;
}

// Wick pairing sum over 2n points given a pair kernel; returns the value and
// the number of enumerated pairings (must equal (2n-1)!!).
inline std::pair<double, long> wick_pairing_sum(
    const std::vector<int>& points, const std::function<double(int, int)>& kernel) {
    if (points.size() % 2 != 0) throw std::invalid_argument("need an even number of points");
    long count = 0;
    std::function<double(std::vector<int>&)> rec = [&](std::vector<int>& rest) -> double {
        if (rest.empty()) {
            ++count;
            return 1.0;
        }
        int a = rest[0];
        double total = 0.0;
        for (std::size_t i = 1; i < rest.size(); ++i) {
            int b = rest[i];
            std::vector<int> next;
            for (std::size_t j = 1; j < rest.size(); ++j)
                if (j != i) next.push_back(rest[j]);
            total += kernel(a, b) * rec(next);
        }
        return total;
    };
    std::vector<int> pts = points;
    double value = rec(pts);
    return {value, count};
}

inline long double_factorial_odd(int two_n) {  // (2n-1)!! for 2n points
    long out = 1;
    for (int i = two_n - 1; i > 1; i -= 2) out *= i;
    return out;
}

}  // namespace currentlab::diagrams
