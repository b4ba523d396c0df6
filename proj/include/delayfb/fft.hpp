#pragma once

// Minimal complex FFT: iterative radix-2 with a Bluestein fallback for
// arbitrary lengths. Plenty for trace filtering and Welch estimates.

#include <complex>
#include <cstddef>
#include <vector>

#include "delayfb/constants.hpp"

namespace delayfb::fft {

using cplx = std::complex<double>;

inline bool is_pow2(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

namespace detail {

inline void radix2(std::vector<cplx>& a, bool inverse) {
  const std::size_t n = a.size();
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double ang = (inverse ? 1.0 : -1.0) * two_pi / double(len);
    const cplx wl(std::cos(ang), std::sin(ang));
    for (std::size_t i = 0; i < n; i += len) {
      cplx w(1.0);
      for (std::size_t j = 0; j < len / 2; ++j) {
        const cplx u = a[i + j];
        const cplx t = a[i + j + len / 2] * w;
        a[i + j] = u + t;
        a[i + j + len / 2] = u - t;
        w *= wl;
      }
    }
  }
  if (inverse)
    for (auto& x : a) x /= double(n);
}

}  // namespace detail

/// In-place DFT, X_k = sum_n x_n e^{-2pi i k n / N} (inverse divides by N).
inline void transform(std::vector<cplx>& a, bool inverse = false) {
  const std::size_t n = a.size();
  if (n <= 1) return;
  if (is_pow2(n)) {
    detail::radix2(a, inverse);
    return;
  }
  // Bluestein: convolve with a chirp via a power-of-two FFT
  std::size_t m = 1;
  while (m < 2 * n - 1) m <<= 1;
  std::vector<cplx> chirp(n);
  for (std::size_t k = 0; k < n; ++k) {
    // k^2 mod 2n keeps the phase argument bounded
    const std::size_t k2 = (std::size_t)((unsigned long long)k * k % (2ULL * n));
    const double ang = (inverse ? 1.0 : -1.0) * pi * double(k2) / double(n);
    chirp[k] = cplx(std::cos(ang), std::sin(ang));
  }
  std::vector<cplx> fa(m, cplx(0)), fb(m, cplx(0));
  for (std::size_t k = 0; k < n; ++k) fa[k] = a[k] * chirp[k];
  fb[0] = std::conj(chirp[0]);
  for (std::size_t k = 1; k < n; ++k) fb[k] = fb[m - k] = std::conj(chirp[k]);
  detail::radix2(fa, false);
  detail::radix2(fb, false);
  for (std::size_t k = 0; k < m; ++k) fa[k] *= fb[k];
  detail::radix2(fa, true);
  for (std::size_t k = 0; k < n; ++k) a[k] = fa[k] * chirp[k];
  if (inverse)
    for (auto& x : a) x /= double(n);
}

inline std::vector<cplx> forward_real(const std::vector<double>& x) {
  std::vector<cplx> a(x.begin(), x.end());
  transform(a, false);
  return a;
}

}  // namespace delayfb::fft
