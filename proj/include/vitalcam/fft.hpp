#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <unordered_map>
#include <vector>

namespace vitalcam::detail {

using cplx = std::complex<double>;

inline bool is_pow2(size_t n) { return n != 0 && (n & (n - 1)) == 0; }

inline size_t next_pow2(size_t n) {
    size_t p = 1;
    while (p < n) p <<= 1;
    return p;
}

// Iterative radix-2 Cooley–Tukey, in place. n must be a power of two.
inline void fft_pow2(std::vector<cplx>& a, bool inverse) {
    const size_t n = a.size();
    if (n <= 1) return;
    for (size_t i = 1, j = 0; i < n; ++i) {
        size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    for (size_t len = 2; len <= n; len <<= 1) {
        const double ang = (inverse ? 2.0 : -2.0) * std::numbers::pi / static_cast<double>(len);
        const cplx wlen(std::cos(ang), std::sin(ang));
        for (size_t i = 0; i < n; i += len) {
            cplx w(1.0, 0.0);
            for (size_t k = 0; k < len / 2; ++k) {
                cplx u = a[i + k];
                cplx v = a[i + k + len / 2] * w;
                a[i + k] = u + v;
                a[i + k + len / 2] = u - v;
                w *= wlen;
            }
        }
    }
    if (inverse)
        for (cplx& x : a) x /= static_cast<double>(n);
}

// Precomputed chirp data for Bluestein's algorithm at a fixed length.
struct BluesteinPlan {
    size_t n = 0;
    size_t m = 0;                 // padded power-of-two length >= 2n-1
    std::vector<cplx> chirp;      // exp(-i*pi*k^2/n), k in [0, n)
    std::vector<cplx> kernel_ft;  // FFT of the conjugate-chirp filter
};

inline const BluesteinPlan& bluestein_plan(size_t n) {
    thread_local std::unordered_map<size_t, BluesteinPlan> cache;
    auto it = cache.find(n);
    if (it != cache.end()) return it->second;

    BluesteinPlan plan;
    plan.n = n;
    plan.m = next_pow2(2 * n - 1);
    plan.chirp.resize(n);
    for (size_t k = 0; k < n; ++k) {
        // k^2 mod 2n keeps the phase argument small for large k.
        const double q = static_cast<double>((k * k) % (2 * n));
        const double ang = -std::numbers::pi * q / static_cast<double>(n);
        plan.chirp[k] = cplx(std::cos(ang), std::sin(ang));
    }
    std::vector<cplx> b(plan.m, cplx(0.0, 0.0));
    b[0] = std::conj(plan.chirp[0]);
    for (size_t k = 1; k < n; ++k)
        b[k] = b[plan.m - k] = std::conj(plan.chirp[k]);
    fft_pow2(b, false);
    plan.kernel_ft = std::move(b);
    return cache.emplace(n, std::move(plan)).first->second;
}

// DFT of arbitrary length: radix-2 when possible, Bluestein otherwise.
inline void fft(std::vector<cplx>& a, bool inverse) {
    const size_t n = a.size();
    if (n <= 1) return;
    if (is_pow2(n)) {
        fft_pow2(a, inverse);
        return;
    }
    const BluesteinPlan& plan = bluestein_plan(n);
    std::vector<cplx> x(plan.m, cplx(0.0, 0.0));
    for (size_t k = 0; k < n; ++k) {
        cplx c = inverse ? std::conj(plan.chirp[k]) : plan.chirp[k];
        x[k] = a[k] * c;
    }
    fft_pow2(x, false);
    if (inverse) {
        for (size_t k = 0; k < plan.m; ++k) x[k] *= std::conj(plan.kernel_ft[k]);
    } else {
        for (size_t k = 0; k < plan.m; ++k) x[k] *= plan.kernel_ft[k];
    }
    fft_pow2(x, true);
    const double inv_n = 1.0 / static_cast<double>(n);
    for (size_t k = 0; k < n; ++k) {
        cplx c = inverse ? std::conj(plan.chirp[k]) : plan.chirp[k];
        a[k] = x[k] * c;
        if (inverse) a[k] *= inv_n;
    }
}

}  // namespace vitalcam::detail
