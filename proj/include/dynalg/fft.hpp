#pragma once

#include <complex>
#include <cstddef>
#include <numbers>
#include <vector>

#include "dynalg/errors.hpp"

namespace dynalg::detail {

// In-place iterative radix-2 FFT, n a power of two.  sign = -1 forward,
// +1 inverse (inverse is normalized by 1/n).
inline void fft_pow2(std::complex<double>* data, std::size_t n, int sign) {
    if (n == 0 || (n & (n - 1)) != 0) throw ArgumentError("fft: length must be a power of two");
    // bit reversal
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(data[i], data[j]);
    }
    for (std::size_t len = 2; len <= n; len <<= 1) {
        double ang = static_cast<double>(sign) * 2.0 * std::numbers::pi / static_cast<double>(len);
        std::complex<double> wlen(std::cos(ang), std::sin(ang));
        for (std::size_t i = 0; i < n; i += len) {
            std::complex<double> w(1.0, 0.0);
            for (std::size_t k = 0; k < len / 2; ++k) {
                std::complex<double> u = data[i + k];
                std::complex<double> v = data[i + k + len / 2] * w;
                data[i + k] = u + v;
                data[i + k + len / 2] = u - v;
                w *= wlen;
            }
        }
    }
    if (sign > 0) {
        double inv = 1.0 / static_cast<double>(n);
        for (std::size_t i = 0; i < n; ++i) data[i] *= inv;
    }
}

inline void fft_forward(std::vector<std::complex<double>>& v) { fft_pow2(v.data(), v.size(), -1); }
inline void fft_inverse(std::vector<std::complex<double>>& v) { fft_pow2(v.data(), v.size(), +1); }

}  // namespace dynalg::detail
