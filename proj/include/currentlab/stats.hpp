#pragma once

// Small statistics helpers: compensated summation, chain-level batch means
// and jackknife over chains for nonlinear estimators.

#include <cmath>
#include <cstddef>
#include <functional>
#include <stdexcept>
#include <vector>

namespace currentlab {

// Kahan-Neumaier compensated accumulator.
class KahanSum {
  public:
    void add(double x) {
        double t = sum_ + x;
        if (std::abs(sum_) >= std::abs(x))
            comp_ += (sum_ - t) + x;
        else
            comp_ += (x - t) + sum_;
        sum_ = t;
    }
    double value() const { return sum_ + comp_; }

  private:
    double sum_ = 0.0, comp_ = 0.0;
};

struct Estimate {
    double value = 0.0;
    double stderr_ = 0.0;
    bool within(double target, double n_sigma) const {
        return std::abs(value - target) <= n_sigma * stderr_;
    }
};

// Mean and standard error across independent chains (each entry is one
// chain's mean).
inline Estimate chain_estimate(const std::vector<double>& chain_means) {
    std::size_t n = chain_means.size();
    if (n < 2) throw std::invalid_argument("need >= 2 chains for an error bar");
    KahanSum s;
    for (double v : chain_means) s.add(v);
    double mean = s.value() / double(n);
    KahanSum q;
    for (double v : chain_means) q.add((v - mean) * (v - mean));
    double var = q.value() / double(n - 1);
    return {mean, std::sqrt(var / double(n))};
}

// Jackknife over chains for a scalar function of per-chain accumulators.
// `reduce` maps a subset of chain indices to the pooled estimate.
inline Estimate jackknife(std::size_t n_chains,
                          const std::function<double(const std::vector<std::size_t>&)>& reduce) {
    if (n_chains < 2) throw std::invalid_argument("need >= 2 chains for jackknife");
    std::vector<std::size_t> all(n_chains);
    for (std::size_t i = 0; i < n_chains; ++i) all[i] = i;
    double full = reduce(all);
    std::vector<double> loo(n_chains);
    for (std::size_t i = 0; i < n_chains; ++i) {
        std::vector<std::size_t> subset;
        subset.reserve(n_chains - 1);
        for (std::size_t j = 0; j < n_chains; ++j)
            if (j != i) subset.push_back(j);
        loo[i] = reduce(subset);
    }
    KahanSum s;
    for (double v : loo) s.add(v);
    double mean_loo = s.value() / double(n_chains);
    KahanSum q;
    for (double v : loo) q.add((v - mean_loo) * (v - mean_loo));
    double var = (double(n_chains) - 1.0) / double(n_chains) * q.value();
    return {full, std::sqrt(var)};
}

inline bool approx_rel(double a, double b, double tol) {
    double scale = std::max({std::abs(a), std::abs(b), 1.0});
    return std::abs(a - b) <= tol * scale;
}

}  // namespace currentlab
