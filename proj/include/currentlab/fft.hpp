#pragma once

// Small separable FFT on d-dimensional tori (lexicographic site index,
// axis-k stride = L^k). Radix-2 iterative transform for power-of-two sides,
// plain DFT otherwise; sides here never exceed a few dozen.

#include <complex>
#include <numbers>
#include <vector>

namespace currentlab::fftutil {

inline void fft_1d(std::vector<std::complex<double>>& a, bool inverse) {
    const std::size_t n = a.size();
    if (n < 2) return;
    if ((n & (n - 1)) == 0) {
        // bit-reversal permutation
        for (std::size_t i = 1, j = 0; i < n; ++i) {
            std::size_t bit = n >> 1;
            for (; j & bit; bit >>= 1) j ^= bit;
            j ^= bit;
            if (i < j) std::swap(a[i], a[j]);
        }
        for (std::size_t len = 2; len <= n; len <<= 1) {
            double ang = 2.0 * std::numbers::pi / double(len) * (inverse ? 1.0 : -1.0);
            std::complex<double> wl(std::cos(ang), std::sin(ang));
            for (std::size_t i = 0; i < n; i += len) {
                std::complex<double> w(1.0);
                for (std::size_t k = 0; k < len / 2; ++k) {
                    auto u = a[i + k], v = a[i + k + len / 2] * w;
                    a[i + k] = u + v;
                    a[i + k + len / 2] = u - v;
                    w *= wl;
                }
            }
        }
    } else {
        std::vector<std::complex<double>> out(n);
        for (std::size_t p = 0; p < n; ++p) {
            std::complex<double> acc = 0.0;
            for (std::size_t x = 0; x < n; ++x) {
                double ang = 2.0 * std::numbers::pi * double(p * x % n) / double(n) *
                             (inverse ? 1.0 : -1.0);
                acc += a[x] * std::complex<double>(std::cos(ang), std::sin(ang));
            }
            out[p] = acc;
        }
        a = std::move(out);
    }
    if (inverse)
        for (auto& z : a) z /= double(n);
}

// In-place transform over all axes of an L^d torus array.
inline void fft_nd(std::vector<std::complex<double>>& a, int d, int side, bool inverse) {
    std::size_t v = a.size();
    std::vector<std::complex<double>> line(side);
    std::size_t stride = 1;
    for (int axis = 0; axis < d; ++axis) {
        std::size_t block = stride * std::size_t(side);
        for (std::size_t base = 0; base < v; base += block)
            for (std::size_t off = 0; off < stride; ++off) {
                for (int i = 0; i < side; ++i) line[i] = a[base + off + stride * std::size_t(i)];
                fft_1d(line, inverse);
                for (int i = 0; i < side; ++i) a[base + off + stride * std::size_t(i)] = line[i];
            }
        stride = block;
    }
}

}  // namespace currentlab::fftutil
