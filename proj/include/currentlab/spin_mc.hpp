#pragma once

// Spin-space Monte Carlo on tori: plain Ising and Griffiths-Simon blocks of
// N constituent spins per site (block value phi_x = alpha * sum of
// constituents, intra-block coupling g/N all-to-all). Updates are Metropolis
// passes over constituents interleaved with Wolff cluster flips on the
// constituent graph; every pair coupling is ferromagnetic, so the standard
// 1 - exp(-2K) embedding applies to both coupling types.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "currentlab/fft.hpp"
#include "currentlab/geometry.hpp"
#include "currentlab/rng.hpp"
#include "currentlab/stats.hpp"
#include "currentlab/table.hpp"

namespace currentlab::spin {

struct ModelSpec {
    Torus torus;
    double beta = 0.0;
    int gs_n = 1;          // constituents per block; 1 = plain Ising
    double gs_alpha = 1.0;
    double gs_g = 0.0;

    std::string id() const {
        if (gs_n == 1 && gs_alpha == 1.0) return "ising";
        return "gs:N=" + std::to_string(gs_n) + ",alpha=" + std::to_string(gs_alpha) +
               ",g=" + std::to_string(gs_g);
    }
};

inline ModelSpec ising(Torus t, double beta) { return {std::move(t), beta, 1, 1.0, 0.0}; }
inline ModelSpec gs_block(Torus t, double beta, int n, double alpha, double g) {
    return {std::move(t), beta, n, alpha, g};
}

class SpinSampler {
  public:
    SpinSampler(const ModelSpec& m, std::mt19937_64 rng)
        : model_(m), rng_(std::move(rng)), n_(m.gs_n) {
        const Torus& t = m.torus;
        if (n_ < 1) throw std::invalid_argument("need at least one constituent");
        k_cross_ = m.beta * t.coupling() * m.gs_alpha * m.gs_alpha;
        k_in_ = n_ > 1 ? m.gs_g / double(n_) : 0.0;
        sites_ = t.n_sites();
        sigma_.assign(std::size_t(sites_) * n_, 1);
        mag_.assign(sites_, n_);
        std::uniform_int_distribution<int> coin(0, 1);
        for (std::size_t i = 0; i < sigma_.size(); ++i)
            if (coin(rng_)) flip_raw(int(i / n_), int(i % n_));
        neigh_.resize(sites_);
        for (int s = 0; s < sites_; ++s)
            for (int k = 0; k < t.dim(); ++k) {
                neigh_[s].push_back(t.neighbor(s, k, +1));
                neigh_[s].push_back(t.neighbor(s, k, -1));
            }
        p_add_cross_ = 1.0 - std::exp(-2.0 * k_cross_);
        p_add_in_ = 1.0 - std::exp(-2.0 * k_in_);
    }

    const ModelSpec& model() const { return model_; }

    double phi(int site) const { return model_.gs_alpha * double(mag_[site]); }

    void sweep(int wolff_per_sweep = 3) {
        metropolis_pass();
        for (int i = 0; i < wolff_per_sweep; ++i) wolff();
    }

  private:
    void flip_raw(int site, int i) {
        auto& s = sigma_[std::size_t(site) * n_ + i];
        mag_[site] -= 2 * s;
        s = -s;
    }

    void metropolis_pass() {
        std::uniform_real_distribution<double> ud(0.0, 1.0);
        for (int site = 0; site < sites_; ++site) {
            long nb_mag = 0;
            for (int y : neigh_[site]) nb_mag += mag_[y];
            for (int i = 0; i < n_; ++i) {
                int s = sigma_[std::size_t(site) * n_ + i];
                double h = k_cross_ * double(nb_mag) + k_in_ * double(mag_[site] - s);
                double d_e = 2.0 * double(s) * h;
                if (d_e <= 0.0 || ud(rng_) < std::exp(-d_e)) flip_raw(site, i);
            }
        }
    }

    void wolff() {
        std::uniform_int_distribution<std::size_t> pick(0, sigma_.size() - 1);
        std::uniform_real_distribution<double> ud(0.0, 1.0);
        std::size_t seed = pick(rng_);
        int root_sign = sigma_[seed];
        std::vector<std::size_t> stack = {seed};
        flip_raw(int(seed / n_), int(seed % n_));
        while (!stack.empty()) {
            std::size_t cur = stack.back();
            stack.pop_back();
            int site = int(cur / n_);
            // intra-block partners
            if (k_in_ > 0.0)
                for (int j = 0; j < n_; ++j) {
                    std::size_t cand = std::size_t(site) * n_ + j;
                    if (sigma_[cand] == root_sign && ud(rng_) < p_add_in_) {
                        flip_raw(site, j);
                        stack.push_back(cand);
                    }
                }
            // cross-block partners
            if (k_cross_ > 0.0)
                for (int y : neigh_[site])
                    for (int j = 0; j < n_; ++j) {
                        std::size_t cand = std::size_t(y) * n_ + j;
                        if (sigma_[cand] == root_sign && ud(rng_) < p_add_cross_) {
                            flip_raw(y, j);
                            stack.push_back(cand);
                        }
                    }
        }
    }

    ModelSpec model_;
    std::mt19937_64 rng_;
    int n_, sites_;
    double k_cross_, k_in_, p_add_cross_, p_add_in_;
    std::vector<std::int8_t> sigma_;
    std::vector<long> mag_;  // per-site constituent sums
    std::vector<std::vector<int>> neigh_;
};

// ---------------------------------------------------------------------------
// Two-point table: per-sample power spectrum, translation averaged by the
// inverse transform, then symmetrized over axis permutations and sign flips.
// ---------------------------------------------------------------------------

namespace detail {

inline std::vector<std::array<int, 4>> symmetry_orbit(const Torus& t,
                                                      const std::array<int, 4>& c) {
    int d = t.dim();
    std::array<int, 4> perm{0, 1, 2, 3};
    std::vector<std::array<int, 4>> orbit;
    do {
        for (int signs = 0; signs < (1 << d); ++signs) {
            std::array<int, 4> img{0, 0, 0, 0};
            for (int k = 0; k < d; ++k) {
                int v = c[perm[k]];
                if (signs & (1 << k)) v = -v;
                img[k] = ((v % t.side()) + t.side()) % t.side();
            }
            orbit.push_back(img);
        }
    } while (std::next_permutation(perm.begin(), perm.begin() + d));
    return orbit;
}

inline std::vector<double> symmetrize(const Torus& t, const std::vector<double>& raw) {
    std::vector<double> out(raw.size(), 0.0);
    std::vector<bool> done(raw.size(), false);
    for (int site = 0; site < t.n_sites(); ++site) {
        if (done[site]) continue;
        auto orbit = symmetry_orbit(t, t.coords(site));
        KahanSum acc;
        std::vector<int> members;
        for (auto& c : orbit) members.push_back(t.index(c));
        std::sort(members.begin(), members.end());
        members.erase(std::unique(members.begin(), members.end()), members.end());
        for (int m : members) acc.add(raw[m]);
        double mean = acc.value() / double(members.size());
        for (int m : members) {
            out[m] = mean;
            done[m] = true;
        }
    }
    return out;
}

inline double fit_xi(const TwoPointTable& t) {
    // least-squares line through log S(n e1), n = 1..side/4
    std::vector<double> xs, ys;
    for (int n = 1; n <= t.side / 4; ++n) {
        double v = t.axis(n);
        if (v <= 0.0) break;
        xs.push_back(double(n));
        ys.push_back(std::log(v));
    }
    if (xs.size() < 2) return 0.0;
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) mx += xs[i], my += ys[i];
    mx /= double(xs.size()), my /= double(xs.size());
    double sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sxx += (xs[i] - mx) * (xs[i] - mx);
        sxy += (xs[i] - mx) * (ys[i] - my);
    }
    double slope = sxy / sxx;
    return slope < 0 ? -1.0 / slope : 0.0;
}

}  // namespace detail

inline TwoPointTable two_point(const ModelSpec& m, int chains, long sweeps, std::uint64_t seed) {
    if (chains < 8) throw std::invalid_argument("need at least 8 chains");
    const Torus& t = m.torus;
    const int v = t.n_sites();
    std::vector<std::vector<double>> chain_s(chains);
    for (int c = 0; c < chains; ++c) {
        SpinSampler sampler(m, make_stream(seed, "spin-2pt", c));
        long burn = sweeps / 10;
        for (long i = 0; i < burn; ++i) sampler.sweep();
        std::vector<double> power(v, 0.0);
        std::vector<std::complex<double>> buf(v);
        for (long i = 0; i < sweeps; ++i) {
            sampler.sweep();
            for (int s = 0; s < v; ++s) buf[s] = sampler.phi(s);
            fftutil::fft_nd(buf, t.dim(), t.side(), false);
            for (int s = 0; s < v; ++s) power[s] += std::norm(buf[s]);
        }
        for (int s = 0; s < v; ++s) buf[s] = power[s] / double(sweeps);
        fftutil::fft_nd(buf, t.dim(), t.side(), true);
        std::vector<double> corr(v);
        for (int s = 0; s < v; ++s) corr[s] = buf[s].real() / double(v);
        chain_s[c] = detail::symmetrize(t, corr);
    }
    TwoPointTable table;
    table.d = t.dim();
    table.side = t.side();
    table.beta = m.beta;
    table.model_id = m.id();
    table.s.resize(v);
    table.err.resize(v);
    for (int s = 0; s < v; ++s) {
        std::vector<double> per_chain(chains);
        for (int c = 0; c < chains; ++c) per_chain[c] = chain_s[c][s];
        Estimate e = chain_estimate(per_chain);
        table.s[s] = e.value;
        table.err[s] = e.stderr_;
    }
    table.xi = detail::fit_xi(table);
    return table;
}

// Connected 4-point function at fixed sites, jackknifed over chains.
inline Estimate ursell4_mc(const ModelSpec& m, int x, int y, int z, int t, int chains,
                           long sweeps, std::uint64_t seed) {
    if (chains < 8) throw std::invalid_argument("need at least 8 chains");
    std::vector<std::array<double, 7>> acc(chains);  // xyzt, xy, zt, xz, yt, xt, yz
    for (int c = 0; c < chains; ++c) {
        SpinSampler sampler(m, make_stream(seed, "spin-u4", c));
        long burn = sweeps / 10;
        for (long i = 0; i < burn; ++i) sampler.sweep();
        std::array<KahanSum, 7> sums;
        for (long i = 0; i < sweeps; ++i) {
            sampler.sweep();
            double px = sampler.phi(x), py = sampler.phi(y), pz = sampler.phi(z),
                   pt = sampler.phi(t);
            sums[0].add(px * py * pz * pt);
            sums[1].add(px * py);
            sums[2].add(pz * pt);
            sums[3].add(px * pz);
            sums[4].add(py * pt);
            sums[5].add(px * pt);
            sums[6].add(py * pz);
        }
        for (int k = 0; k < 7; ++k) acc[c][k] = sums[k].value() / double(sweeps);
    }
    return jackknife(chains, [&](const std::vector<std::size_t>& idx) {
        std::array<double, 7> m7{};
        for (auto c : idx)
            for (int k = 0; k < 7; ++k) m7[k] += acc[c][k] / double(idx.size());
        return m7[0] - m7[1] * m7[2] - m7[3] * m7[4] - m7[5] * m7[6];
    });
}

// ---------------------------------------------------------------------------
// Smeared field T_{f,L} = sum_x f(x/L) tau_x / sqrt(Sigma_L), with Sigma_L
// the variance of the total spin, estimated within the same run.
// ---------------------------------------------------------------------------

struct SmearedMoments {
    std::vector<Estimate> t_moment;  // index k: <T^k>, k = 1..max_order
    std::vector<Estimate> wick_gap;  // index j: |<T^{2j}> - (2j-1)!! <T^2>^j|, j >= 2
    Estimate sigma_l;
    int r_f = 0;  // half-side of the smallest box enclosing supp f
};

inline SmearedMoments smeared_moments(const ModelSpec& m, const std::vector<double>& f_values,
                                      int max_order, int chains, long sweeps,
                                      std::uint64_t seed) {
    if (chains < 8) throw std::invalid_argument("need at least 8 chains");
    if (max_order < 2 || max_order > 8) throw std::invalid_argument("max_order in [2, 8]");
    const Torus& t = m.torus;
    if (int(f_values.size()) != t.n_sites()) throw std::invalid_argument("f table size mismatch");
    int r_f = 0;
    for (int s = 0; s < t.n_sites(); ++s)
        if (f_values[s] != 0.0) r_f = std::max(r_f, t.norm_inf(s));
    if (r_f > t.side() / 2) throw std::invalid_argument("support does not fit the torus");

    // acc[c] = per-chain means of W^k (k = 1..max_order) then total-spin^2
    std::vector<std::vector<double>> acc(chains, std::vector<double>(max_order + 1, 0.0));
    for (int c = 0; c < chains; ++c) {
        SpinSampler sampler(m, make_stream(seed, "spin-smear", c));
        long burn = sweeps / 10;
        for (long i = 0; i < burn; ++i) sampler.sweep();
        std::vector<KahanSum> sums(max_order + 1);
        for (long i = 0; i < sweeps; ++i) {
            sampler.sweep();
            double w = 0.0, total = 0.0;
            for (int s = 0; s < t.n_sites(); ++s) {
                double p = sampler.phi(s);
                w += f_values[s] * p;
                total += p;
            }
            double pw = 1.0;
            for (int k = 1; k <= max_order; ++k) {
                pw *= w;
                sums[k - 1].add(pw);
            }
            sums[max_order].add(total * total);
        }
        for (int k = 0; k <= max_order; ++k) acc[c][k] = sums[k].value() / double(sweeps);
    }
    auto pooled = [&](const std::vector<std::size_t>& idx, int k) {
        double out = 0.0;
        for (auto c : idx) out += acc[c][k] / double(idx.size());
        return out;
    };
    SmearedMoments out;
    out.r_f = r_f;
    out.sigma_l = jackknife(chains, [&](const std::vector<std::size_t>& idx) {
        return pooled(idx, max_order);
    });
    for (int k = 1; k <= max_order; ++k)
        out.t_moment.push_back(jackknife(chains, [&](const std::vector<std::size_t>& idx) {
            return pooled(idx, k - 1) / std::pow(pooled(idx, max_order), 0.5 * k);
        }));
    for (int j = 2; 2 * j <= max_order; ++j) {
        double dfact = 1.0;
        for (int i = 2 * j - 1; i > 1; i -= 2) dfact *= double(i);
        out.wick_gap.push_back(jackknife(chains, [&, j, dfact](const std::vector<std::size_t>& idx) {
            double sig = pooled(idx, max_order);
            double t2 = pooled(idx, 1) / sig;
            double t2j = pooled(idx, 2 * j - 1) / std::pow(sig, double(j));
            return std::abs(t2j - dfact * std::pow(t2, double(j)));
        }));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Binder-cumulant pseudo-critical locator.
// ---------------------------------------------------------------------------

struct BinderPoint {
    double beta = 0.0;
    Estimate u;  // 1 - <M^4>/(3 <M^2>^2)
};

inline BinderPoint binder_cumulant(const ModelSpec& m, int chains, long sweeps,
                                   std::uint64_t seed) {
    std::vector<double> m2(chains), m4(chains);
    for (int c = 0; c < chains; ++c) {
        SpinSampler sampler(m, make_stream(seed, "spin-binder", c));
        long burn = sweeps / 10;
        for (long i = 0; i < burn; ++i) sampler.sweep();
        KahanSum s2, s4;
        for (long i = 0; i < sweeps; ++i) {
            sampler.sweep();
            double mag = 0.0;
            for (int s = 0; s < m.torus.n_sites(); ++s) mag += sampler.phi(s);
            mag /= double(m.torus.n_sites());
            s2.add(mag * mag);
            s4.add(mag * mag * mag * mag);
        }
        m2[c] = s2.value() / double(sweeps);
        m4[c] = s4.value() / double(sweeps);
    }
    BinderPoint out;
    out.beta = m.beta;
    out.u = jackknife(chains, [&](const std::vector<std::size_t>& idx) {
        double a2 = 0, a4 = 0;
        for (auto c : idx) a2 += m2[c] / double(idx.size()), a4 += m4[c] / double(idx.size());
        return 1.0 - a4 / (3.0 * a2 * a2);
    });
    return out;
}

struct PseudoCritical {
    bool found = false;
    double beta_pc = 0.0;
    double uncertainty = 0.0;
    std::vector<std::vector<BinderPoint>> scans;  // one scan per lattice size
};

// Crossing of Binder cumulants across sizes; the crossing of each adjacent
// size pair is interpolated linearly on the beta grid.
inline PseudoCritical locate_pseudo_critical(int d, const std::vector<int>& sides,
                                             const std::vector<double>& betas, int gs_n,
                                             double gs_alpha, double gs_g, int chains,
                                             long sweeps, std::uint64_t seed) {
    if (sides.size() < 2) throw std::invalid_argument("need at least two sizes");
    PseudoCritical out;
    for (int side : sides) {
        std::vector<BinderPoint> scan;
        for (double beta : betas) {
            ModelSpec m{Torus(d, side, 1.0), beta, gs_n, gs_alpha, gs_g};
            scan.push_back(binder_cumulant(m, chains, sweeps, seed + side));
        }
        out.scans.push_back(std::move(scan));
    }
    std::vector<double> crossings;
    for (std::size_t p = 0; p + 1 < sides.size(); ++p) {
        const auto& a = out.scans[p];
        const auto& b = out.scans[p + 1];
        for (std::size_t i = 0; i + 1 < betas.size(); ++i) {
            double d0 = a[i].u.value - b[i].u.value;
            double d1 = a[i + 1].u.value - b[i + 1].u.value;
            if ((d0 <= 0) != (d1 <= 0)) {
                double frac = d0 / (d0 - d1);
                crossings.push_back(betas[i] + frac * (betas[i + 1] - betas[i]));
                break;
            }
        }
    }
    if (crossings.empty()) return out;  // flagged: no transition located
    out.found = true;
    double mean = 0.0;
    for (double c : crossings) mean += c / double(crossings.size());
    out.beta_pc = mean;
    double spread = 0.0;
    for (double c : crossings) spread = std::max(spread, std::abs(c - mean));
    double step = betas.size() > 1 ? betas[1] - betas[0] : 0.0;
    out.uncertainty = std::max(spread, step);
    return out;
}

}  // namespace currentlab::spin
