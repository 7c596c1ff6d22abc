#pragma once

#include <bit>
#include <cmath>
#include <complex>
#include <vector>

#include "igtk/error.hpp"

namespace igtk {

/// In-place iterative radix-2 FFT with a precomputed twiddle table.
class Fft {
 public:
  explicit Fft(std::size_t n) : n_(n), twiddle_(n / 2) {
    require(n >= 2 && std::has_single_bit(n), ErrorKind::config, "FFT size must be a power of two");
    for (std::size_t k = 0; k < n / 2; ++k) {
      const double a = -2.0 * M_PI * static_cast<double>(k) / static_cast<double>(n);
      twiddle_[k] = {std::cos(a), std::sin(a)};
    }
  }

  std::size_t size() const { return n_; }

  void forward(std::vector<std::complex<double>>& x) const {
    require(x.size() == n_, ErrorKind::shape, "FFT input has wrong length");
    for (std::size_t i = 1, j = 0; i < n_; ++i) {
      std::size_t bit = n_ >> 1;
      for (; j & bit; bit >>= 1) j ^= bit;
      j ^= bit;
      if (i < j) std::swap(x[i], x[j]);
    }
    for (std::size_t len = 2; len <= n_; len <<= 1) {
      const std::size_t step = n_ / len;
      for (std::size_t i = 0; i < n_; i += len) {
        for (std::size_t k = 0; k < len / 2; ++k) {
          const auto u = x[i + k];
          const auto v = x[i + k + len / 2] * twiddle_[k * step];
          x[i + k] = u + v;
          x[i + k + len / 2] = u - v;
        }
      }
    }
  }

 private:
  std::size_t n_;
  std::vector<std::complex<double>> twiddle_;
};

}  // namespace igtk
