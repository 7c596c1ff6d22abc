#pragma once

#include <cstddef>
#include <vector>

namespace igtk::nn {

/// Dense NCHW tensor.
template <typename T>
struct Tensor {
  int n = 0, c = 0, h = 0, w = 0;
  std::vector<T> data;

  Tensor() = default;
  Tensor(int n_, int c_, int h_, int w_, T fill = T(0))
      : n(n_), c(c_), h(h_), w(w_), data(static_cast<std::size_t>(n_) * c_ * h_ * w_, fill) {}

  std::size_t size() const { return data.size(); }
  std::size_t plane() const { return static_cast<std::size_t>(h) * w; }
  std::size_t sample_stride() const { return static_cast<std::size_t>(c) * plane(); }

  T* sample(int i) { return data.data() + static_cast<std::size_t>(i) * sample_stride(); }
  const T* sample(int i) const { return data.data() + static_cast<std::size_t>(i) * sample_stride(); }
  T* channel(int i, int ch) { return sample(i) + static_cast<std::size_t>(ch) * plane(); }
  const T* channel(int i, int ch) const { return sample(i) + static_cast<std::size_t>(ch) * plane(); }

  bool same_shape(const Tensor& o) const { return n == o.n && c == o.c && h == o.h && w == o.w; }
};

}  // namespace igtk::nn
