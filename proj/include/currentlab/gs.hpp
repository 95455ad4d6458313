#pragma once

// Griffiths-Simon block construction: the exact mean-field block law, a
// quadrature oracle for the target quartic site measure
// rho(dphi) ~ exp(-lambda phi^4 + b phi^2) dphi, and the calibration of
// (alpha_N, g_N) matching the block's (m2, m4) to the target.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "currentlab/stats.hpp"

namespace currentlab::gs {

struct SiteLaw {
    std::array<double, 9> m{};  // m[k] = k-th moment, m[0] = 1
    std::string provenance;     // "block-exact" or "quadrature"

    double kurtosis_ratio() const { return m[4] / (m[2] * m[2]); }
};

// Moments of rho ~ exp(-lambda x^4 + b x^2); lambda > 0, or lambda = 0 with
// b < 0 (Gaussian). Odd moments vanish by symmetry and are set to zero.
inline SiteLaw phi4_moments(double lambda, double b, int k_max = 8) {
    if (!(lambda > 0.0) && !(lambda == 0.0 && b < 0.0))
        throw std::invalid_argument("phi4 measure not normalizable");
    if (k_max > 8) throw std::invalid_argument("k_max <= 8");
    // integration cutoff: beyond r the density (times x^8) is below 1e-60
    // relative to its peak
    double peak = lambda > 0 ? (b > 0 ? std::sqrt(b / (2 * lambda)) : 0.0) : 0.0;
    auto logw = [&](double x) { return -lambda * x * x * x * x + b * x * x; };
    double lw_peak = logw(peak);
    double r = std::max(peak, 1.0);
    while (logw(r) + 8.0 * std::log(r) - lw_peak > -140.0) r *= 1.25;

    using quad = boost::math::quadrature::gauss_kronrod<double, 61>;
    SiteLaw law;
    law.provenance = "quadrature";
    double z = 2.0 * quad::integrate([&](double x) { return std::exp(logw(x) - lw_peak); }, 0.0,
                                     r, 12, 1e-12);
    law.m[0] = 1.0;
    for (int k = 2; k <= k_max; k += 2) {
        double mk = 2.0 * quad::integrate(
                              [&](double x) { return std::pow(x, k) * std::exp(logw(x) - lw_peak); },
                              0.0, r, 12, 1e-12);
        law.m[k] = mk / z;
    }
    return law;
}

// Exact moments of alpha * (sigma_1 + ... + sigma_N) under the mean-field
// Gibbs weight exp((g/2N)(M^2 - N)); O(N) sum over magnetization levels,
// log-space to stay finite up to N = 10^6.
inline SiteLaw block_law_exact(std::int64_t n, double g, double alpha) {
    if (n < 1 || n > 1000000) throw std::invalid_argument("N out of range");
    if (g < 0 || !(alpha > 0)) throw std::invalid_argument("need g >= 0, alpha > 0");
    std::vector<double> lw;  // over M = -N, -N+2, ..., N; symmetric, keep M >= 0
    double lw_max = -1e300;
    std::vector<std::int64_t> ms;
    for (std::int64_t m = n % 2; m <= n; m += 2) {
        double up = double(n + m) / 2.0;
        double l = std::lgamma(double(n) + 1.0) - std::lgamma(up + 1.0) -
                   std::lgamma(double(n) - up + 1.0) +
                   (g / (2.0 * double(n))) * (double(m) * double(m) - double(n));
        lw.push_back(l);
        ms.push_back(m);
        lw_max = std::max(lw_max, l);
    }
    KahanSum z;
    std::array<KahanSum, 9> num;
    for (std::size_t i = 0; i < lw.size(); ++i) {
        double w = std::exp(lw[i] - lw_max);
        double mult = ms[i] == 0 ? 1.0 : 2.0;  // +-M fold together
        z.add(mult * w);
        double phi = alpha * double(ms[i]);
        double p = 1.0;
        for (int k = 2; k <= 8; k += 2) {
            p *= phi * phi;
            num[k].add(mult * w * p);
        }
    }
    SiteLaw law;
    law.provenance = "block-exact";
    law.m[0] = 1.0;
    for (int k = 2; k <= 8; k += 2) law.m[k] = num[k].value() / z.value();
    return law;
}

// Brute-force oracle over all 2^N spin configurations, N <= 20.
inline SiteLaw block_law_bruteforce(int n, double g, double alpha) {
    if (n < 1 || n > 20) throw std::invalid_argument("brute force needs N <= 20");
    KahanSum z;
    std::array<KahanSum, 9> num;
    for (std::uint64_t conf = 0; conf < (std::uint64_t{1} << n); ++conf) {
        std::int64_t m = 2 * __builtin_popcountll(conf) - n;
        double w = std::exp((g / (2.0 * n)) * (double(m) * double(m) - n));
        z.add(w);
        double phi = alpha * double(m), p = 1.0;
        for (int k = 2; k <= 8; k += 2) {
            p *= phi * phi;
            num[k].add(w * p);
        }
    }
    SiteLaw law;
    law.provenance = "block-exact";
    law.m[0] = 1.0;
    for (int k = 2; k <= 8; k += 2) law.m[k] = num[k].value() / z.value();
    return law;
}

struct Calibration {
    double alpha = 0.0;
    double g = 0.0;
    double residual = 0.0;  // max relative mismatch of (m2, m4)
    bool exact_match = false;
};

// Match (m2, m4) of the block law to the target. The kurtosis ratio
// m4/m2^2 of the block law is independent of alpha, so the problem splits:
// solve the ratio equation in g (bracket scan + bisection; fall back to the
// grid minimizer when the target ratio is unattainable), then fix alpha
// from m2. N=1 is degenerate: the ratio is 1 for every g.
inline Calibration calibrate_block(double lambda, double b, std::int64_t n,
                                   double g_max = 4.0) {
    SiteLaw target = phi4_moments(lambda, b);
    double r_target = target.kurtosis_ratio();
    auto ratio = [&](double g) { return block_law_exact(n, g, 1.0).kurtosis_ratio(); };

    Calibration cal;
    if (n == 1) {
        cal.g = 0.0;  // any g works; the block is a single +-alpha spin
    } else {
        const int grid = 160;
        double best_g = 0.0, best_err = 1e300, lo = -1.0, hi = -1.0;
        double prev_g = 0.0, prev_f = ratio(0.0) - r_target;
        if (std::abs(prev_f) < best_err) best_err = std::abs(prev_f), best_g = 0.0;
        for (int i = 1; i <= grid; ++i) {
            double g = g_max * double(i) / grid;
            double f = ratio(g) - r_target;
            if (std::abs(f) < best_err) best_err = std::abs(f), best_g = g;
            if (lo < 0 && ((prev_f <= 0) != (f <= 0))) lo = prev_g, hi = g;
            prev_g = g;
            prev_f = f;
        }
        if (lo >= 0) {
            double flo = ratio(lo) - r_target;
            for (int it = 0; it < 200 && hi - lo > 1e-14 * std::max(1.0, hi); ++it) {
                double mid = 0.5 * (lo + hi);
                double fm = ratio(mid) - r_target;
                if ((fm <= 0) == (flo <= 0)) lo = mid, flo = fm;
                else hi = mid;
            }
            cal.g = 0.5 * (lo + hi);
            cal.exact_match = true;
        } else {
            cal.g = best_g;  // ratio never crosses the target on [0, g_max]
        }
    }
    double m2_unit = block_law_exact(n, cal.g, 1.0).m[2];
    cal.alpha = std::sqrt(target.m[2] / m2_unit);
    SiteLaw got = block_law_exact(n, cal.g, cal.alpha);
    cal.residual = std::max(std::abs(got.m[2] - target.m[2]) / target.m[2],
                            std::abs(got.m[4] - target.m[4]) / target.m[4]);
    return cal;
}

struct ConvergenceRow {
    std::int64_t n = 0;
    Calibration cal;
    double distance = 0.0;    // max_{k<=8} |m_k(block) - m_k(target)|
    double tail_proxy = 0.0;  // m8 / m4^2
};

inline std::vector<ConvergenceRow> convergence_report(double lambda, double b,
                                                      const std::vector<std::int64_t>& ns) {
    SiteLaw target = phi4_moments(lambda, b);
    std::vector<ConvergenceRow> rows;
    for (auto n : ns) {
        ConvergenceRow row;
        row.n = n;
        row.cal = calibrate_block(lambda, b, n);
        SiteLaw got = block_law_exact(n, row.cal.g, row.cal.alpha);
        for (int k = 2; k <= 8; k += 2)
            row.distance = std::max(row.distance, std::abs(got.m[k] - target.m[k]));
        row.tail_proxy = got.m[8] / (got.m[4] * got.m[4]);
        rows.push_back(row);
    }
    return rows;
}

}  // namespace currentlab::gs
