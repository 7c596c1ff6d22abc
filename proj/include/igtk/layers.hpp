#pragma once

// Layers with explicit reverse-mode backward passes. Each layer keeps the
// activations its backward pass needs from the most recent training forward;
// `infer` never touches that state.

#include <Eigen/Dense>
#include <cmath>
#include <string>
#include <vector>

#include "igtk/error.hpp"
#include "igtk/random.hpp"
#include "igtk/tensor.hpp"

namespace igtk::nn {

template <typename T>
struct Parameter {
  std::string name;
  std::vector<std::uint32_t> dims;
  std::vector<T> value;
  std::vector<T> grad;
  bool trainable = true;
};

template <typename T>
class ParameterStore {
 public:
  std::size_t add(std::string name, std::vector<std::uint32_t> dims, bool trainable = true) {
    std::size_t count = 1;
    for (auto d : dims) count *= d;
    params_.push_back({std::move(name), std::move(dims), std::vector<T>(count, T(0)),
                       std::vector<T>(trainable ? count : 0, T(0)), trainable});
    return params_.size() - 1;
  }

  Parameter<T>& operator[](std::size_t i) { return params_[i]; }
  const Parameter<T>& operator[](std::size_t i) const { return params_[i]; }
  std::size_t size() const { return params_.size(); }
  auto begin() { return params_.begin(); }
  auto end() { return params_.end(); }
  auto begin() const { return params_.begin(); }
  auto end() const { return params_.end(); }

  void zero_grad() {
    for (auto& p : params_) std::fill(p.grad.begin(), p.grad.end(), T(0));
  }

 private:
  std::vector<Parameter<T>> params_;
};

template <typename T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// ---------------------------------------------------------------------------

template <typename T>
class Conv2d {
 public:
  Conv2d() = default;
  Conv2d(ParameterStore<T>& ps, const std::string& name, int in_ch, int out_ch, int kernel, int stride, int pad)
      : in_(in_ch), out_(out_ch), k_(kernel), stride_(stride), pad_(pad) {
    weight_ = ps.add(name + ".weight", {static_cast<std::uint32_t>(out_ch), static_cast<std::uint32_t>(in_ch),
                                        static_cast<std::uint32_t>(kernel), static_cast<std::uint32_t>(kernel)});
  }

  void init_he(ParameterStore<T>& ps, Rng& rng) const {
    const double std_dev = std::sqrt(2.0 / (in_ * k_ * k_));
    for (auto& v : ps[weight_].value) v = static_cast<T>(std_dev * standard_normal(rng));
  }

  int out_size(int in) const { return (in + 2 * pad_ - k_) / stride_ + 1; }

  Tensor<T> forward(const Tensor<T>& x, ParameterStore<T>& ps, bool train) {
    if (train) input_ = x;
    return infer(x, ps);
  }

  Tensor<T> infer(const Tensor<T>& x, const ParameterStore<T>& ps) const {
    require(x.c == in_, ErrorKind::shape, "conv input channel mismatch");
    const int ho = out_size(x.h), wo = out_size(x.w);
    Tensor<T> y(x.n, out_, ho, wo);
    const int rows = in_ * k_ * k_;
    RowMat<T> cols(rows, ho * wo);
    Eigen::Map<const RowMat<T>> wmat(ps[weight_].value.data(), out_, rows);
    for (int i = 0; i < x.n; ++i) {
      im2col(x, i, cols);
      Eigen::Map<RowMat<T>> out(y.sample(i), out_, ho * wo);
      out.noalias() = wmat * cols;
    }
    return y;
  }

  Tensor<T> backward(const Tensor<T>& dy, ParameterStore<T>& ps) {
    const Tensor<T>& x = input_;
    const int rows = in_ * k_ * k_;
    const int hw = dy.h * dy.w;
    RowMat<T> cols(rows, hw);
    RowMat<T> dcols(rows, hw);
    Eigen::Map<const RowMat<T>> wmat(ps[weight_].value.data(), out_, rows);
    Eigen::Map<RowMat<T>> dw(ps[weight_].grad.data(), out_, rows);
    Tensor<T> dx(x.n, x.c, x.h, x.w);
    for (int i = 0; i < x.n; ++i) {
      im2col(x, i, cols);
      Eigen::Map<const RowMat<T>> g(dy.sample(i), out_, hw);
      dw.noalias() += g * cols.transpose();
      dcols.noalias() = wmat.transpose() * g;
      col2im(dcols, dx, i);
    }
    input_ = {};
    return dx;
  }

 private:
  void im2col(const Tensor<T>& x, int i, RowMat<T>& cols) const {
    const int ho = out_size(x.h), wo = out_size(x.w);
    for (int ci = 0; ci < in_; ++ci) {
      const T* src = x.channel(i, ci);
      for (int ky = 0; ky < k_; ++ky) {
        for (int kx = 0; kx < k_; ++kx) {
          T* dst = cols.data() + static_cast<std::size_t>((ci * k_ + ky) * k_ + kx) * ho * wo;
          for (int oy = 0; oy < ho; ++oy) {
            const int iy = oy * stride_ - pad_ + ky;
            for (int ox = 0; ox < wo; ++ox) {
              const int ix = ox * stride_ - pad_ + kx;
              dst[oy * wo + ox] = (iy >= 0 && iy < x.h && ix >= 0 && ix < x.w) ? src[iy * x.w + ix] : T(0);
            }
          }
        }
      }
    }
  }

  void col2im(const RowMat<T>& dcols, Tensor<T>& dx, int i) const {
    const int ho = out_size(dx.h), wo = out_size(dx.w);
    for (int ci = 0; ci < in_; ++ci) {
      T* dst = dx.channel(i, ci);
      for (int ky = 0; ky < k_; ++ky) {
        for (int kx = 0; kx < k_; ++kx) {
          const T* src = dcols.data() + static_cast<std::size_t>((ci * k_ + ky) * k_ + kx) * ho * wo;
          for (int oy = 0; oy < ho; ++oy) {
            const int iy = oy * stride_ - pad_ + ky;
            if (iy < 0 || iy >= dx.h) continue;
            for (int ox = 0; ox < wo; ++ox) {
              const int ix = ox * stride_ - pad_ + kx;
              if (ix >= 0 && ix < dx.w) dst[iy * dx.w + ix] += src[oy * wo + ox];
            }
          }
        }
      }
    }
  }

  int in_ = 0, out_ = 0, k_ = 3, stride_ = 1, pad_ = 1;
  std::size_t weight_ = 0;
  Tensor<T> input_;
};

// ---------------------------------------------------------------------------

/// Per-channel batch normalization. Training uses batch statistics and
/// updates exponential running averages; inference uses the running values.
template <typename T>
class BatchNorm2d {
 public:
  BatchNorm2d() = default;
  BatchNorm2d(ParameterStore<T>& ps, const std::string& name, int channels, double momentum = 0.99, double eps = 1e-3)
      : c_(channels), momentum_(momentum), eps_(eps) {
    const auto ch = static_cast<std::uint32_t>(channels);
    gamma_ = ps.add(name + ".gamma", {ch});
    beta_ = ps.add(name + ".beta", {ch});
    mean_ = ps.add(name + ".running_mean", {ch}, false);
    var_ = ps.add(name + ".running_var", {ch}, false);
    std::fill(ps[gamma_].value.begin(), ps[gamma_].value.end(), T(1));
    std::fill(ps[var_].value.begin(), ps[var_].value.end(), T(1));
  }

  Tensor<T> forward(const Tensor<T>& x, ParameterStore<T>& ps, bool train) {
    if (!train) return infer(x, ps);
    const std::size_t plane = x.plane();
    const double m = static_cast<double>(x.n) * static_cast<double>(plane);
    Tensor<T> y(x.n, x.c, x.h, x.w);
    xhat_ = Tensor<T>(x.n, x.c, x.h, x.w);
    inv_std_.assign(static_cast<std::size_t>(c_), T(0));
    for (int ch = 0; ch < c_; ++ch) {
      double sum = 0.0;
      for (int i = 0; i < x.n; ++i) {
        const T* p = x.channel(i, ch);
        for (std::size_t j = 0; j < plane; ++j) sum += p[j];
      }
      const double mean = sum / m;
      double sq = 0.0;
      for (int i = 0; i < x.n; ++i) {
        const T* p = x.channel(i, ch);
        for (std::size_t j = 0; j < plane; ++j) sq += (p[j] - mean) * (p[j] - mean);
      }
      const double var = sq / m;
      const double inv = 1.0 / std::sqrt(var + eps_);
      inv_std_[static_cast<std::size_t>(ch)] = static_cast<T>(inv);
      const T g = ps[gamma_].value[static_cast<std::size_t>(ch)];
      const T b = ps[beta_].value[static_cast<std::size_t>(ch)];
      for (int i = 0; i < x.n; ++i) {
        const T* p = x.channel(i, ch);
        T* xh = xhat_.channel(i, ch);
        T* q = y.channel(i, ch);
        for (std::size_t j = 0; j < plane; ++j) {
          xh[j] = static_cast<T>((p[j] - mean) * inv);
          q[j] = g * xh[j] + b;
        }
      }
      auto& rm = ps[mean_].value[static_cast<std::size_t>(ch)];
      auto& rv = ps[var_].value[static_cast<std::size_t>(ch)];
      const double unbiased = m > 1.0 ? var * m / (m - 1.0) : var;
      rm = static_cast<T>(momentum_ * rm + (1.0 - momentum_) * mean);
      rv = static_cast<T>(momentum_ * rv + (1.0 - momentum_) * unbiased);
    }
    return y;
  }

  Tensor<T> infer(const Tensor<T>& x, const ParameterStore<T>& ps) const {
    Tensor<T> y(x.n, x.c, x.h, x.w);
    const std::size_t plane = x.plane();
    for (int ch = 0; ch < c_; ++ch) {
      const auto c = static_cast<std::size_t>(ch);
      const double inv = 1.0 / std::sqrt(static_cast<double>(ps[var_].value[c]) + eps_);
      const double scale = ps[gamma_].value[c] * inv;
      const double shift = ps[beta_].value[c] - ps[mean_].value[c] * scale;
      for (int i = 0; i < x.n; ++i) {
        const T* p = x.channel(i, ch);
        T* q = y.channel(i, ch);
        for (std::size_t j = 0; j < plane; ++j) q[j] = static_cast<T>(p[j] * scale + shift);
      }
    }
    return y;
  }

  Tensor<T> backward(const Tensor<T>& dy, ParameterStore<T>& ps) {
    Tensor<T> dx(dy.n, dy.c, dy.h, dy.w);
    const std::size_t plane = dy.plane();
    const double m = static_cast<double>(dy.n) * static_cast<double>(plane);
    for (int ch = 0; ch < c_; ++ch) {
      const auto c = static_cast<std::size_t>(ch);
      double sum_dy = 0.0, sum_dy_xhat = 0.0;
      for (int i = 0; i < dy.n; ++i) {
        const T* g = dy.channel(i, ch);
        const T* xh = xhat_.channel(i, ch);
        for (std::size_t j = 0; j < plane; ++j) {
          sum_dy += g[j];
          sum_dy_xhat += g[j] * xh[j];
        }
      }
      ps[gamma_].grad[c] += static_cast<T>(sum_dy_xhat);
      ps[beta_].grad[c] += static_cast<T>(sum_dy);
      const double k = ps[gamma_].value[c] * inv_std_[c] / m;
      for (int i = 0; i < dy.n; ++i) {
        const T* g = dy.channel(i, ch);
        const T* xh = xhat_.channel(i, ch);
        T* d = dx.channel(i, ch);
        for (std::size_t j = 0; j < plane; ++j) d[j] = static_cast<T>(k * (m * g[j] - sum_dy - xh[j] * sum_dy_xhat));
      }
    }
    xhat_ = {};
    return dx;
  }

 private:
  int c_ = 0;
  double momentum_ = 0.99, eps_ = 1e-3;
  std::size_t gamma_ = 0, beta_ = 0, mean_ = 0, var_ = 0;
  Tensor<T> xhat_;
  std::vector<T> inv_std_;
};

// ---------------------------------------------------------------------------

template <typename T>
class Relu {
 public:
  Tensor<T> forward(const Tensor<T>& x, bool train) {
    Tensor<T> y = infer(x);
    if (train) output_ = y;
    return y;
  }

  static Tensor<T> infer(Tensor<T> x) {
    for (auto& v : x.data) v = v > T(0) ? v : T(0);
    return x;
  }

  Tensor<T> backward(Tensor<T> dy) {
    for (std::size_t i = 0; i < dy.data.size(); ++i)
      if (!(output_.data[i] > T(0))) dy.data[i] = T(0);
    output_ = {};
    return dy;
  }

 private:
  Tensor<T> output_;
};

// ---------------------------------------------------------------------------

template <typename T>
struct GlobalAvgPool {
  static Tensor<T> forward(const Tensor<T>& x) {
    Tensor<T> y(x.n, x.c, 1, 1);
    const std::size_t plane = x.plane();
    for (int i = 0; i < x.n; ++i)
      for (int ch = 0; ch < x.c; ++ch) {
        double s = 0.0;
        const T* p = x.channel(i, ch);
        for (std::size_t j = 0; j < plane; ++j) s += p[j];
        y.data[static_cast<std::size_t>(i) * x.c + ch] = static_cast<T>(s / static_cast<double>(plane));
      }
    return y;
  }

  static Tensor<T> backward(const Tensor<T>& dy, int h, int w) {
    Tensor<T> dx(dy.n, dy.c, h, w);
    const T scale = T(1) / static_cast<T>(h * w);
    for (int i = 0; i < dy.n; ++i)
      for (int ch = 0; ch < dy.c; ++ch) {
        const T g = dy.data[static_cast<std::size_t>(i) * dy.c + ch] * scale;
        T* p = dx.channel(i, ch);
        std::fill(p, p + dx.plane(), g);
      }
    return dx;
  }
};

// ---------------------------------------------------------------------------

/// Affine map from N x C (stored as N x C x 1 x 1) to N x K.
template <typename T>
class Linear {
 public:
  Linear() = default;
  Linear(ParameterStore<T>& ps, const std::string& name, int in, int out) : in_(in), out_(out) {
    weight_ = ps.add(name + ".weight", {static_cast<std::uint32_t>(out), static_cast<std::uint32_t>(in)});
    bias_ = ps.add(name + ".bias", {static_cast<std::uint32_t>(out)});
  }

  void init_glorot(ParameterStore<T>& ps, Rng& rng) const {
    const double limit = std::sqrt(6.0 / (in_ + out_));
    for (auto& v : ps[weight_].value) v = static_cast<T>(limit * (2.0 * uniform01(rng) - 1.0));
  }

  void zero(ParameterStore<T>& ps) const {
    std::fill(ps[weight_].value.begin(), ps[weight_].value.end(), T(0));
    std::fill(ps[bias_].value.begin(), ps[bias_].value.end(), T(0));
  }

  Tensor<T> forward(const Tensor<T>& x, const ParameterStore<T>& ps, bool train) {
    if (train) input_ = x;
    return infer(x, ps);
  }

  Tensor<T> infer(const Tensor<T>& x, const ParameterStore<T>& ps) const {
    require(static_cast<int>(x.sample_stride()) == in_, ErrorKind::shape, "linear input width mismatch");
    Tensor<T> y(x.n, out_, 1, 1);
    Eigen::Map<const RowMat<T>> xin(x.data.data(), x.n, in_);
    Eigen::Map<const RowMat<T>> w(ps[weight_].value.data(), out_, in_);
    Eigen::Map<const Eigen::Matrix<T, 1, Eigen::Dynamic>> b(ps[bias_].value.data(), out_);
    Eigen::Map<RowMat<T>> out(y.data.data(), x.n, out_);
    out.noalias() = xin * w.transpose();
    out.rowwise() += b;
    return y;
  }

  Tensor<T> backward(const Tensor<T>& dy, ParameterStore<T>& ps) {
    const Tensor<T>& x = input_;
    Eigen::Map<const RowMat<T>> xin(x.data.data(), x.n, in_);
    Eigen::Map<const RowMat<T>> g(dy.data.data(), dy.n, out_);
    Eigen::Map<const RowMat<T>> w(ps[weight_].value.data(), out_, in_);
    Eigen::Map<RowMat<T>> dw(ps[weight_].grad.data(), out_, in_);
    Eigen::Map<Eigen::Matrix<T, 1, Eigen::Dynamic>> db(ps[bias_].grad.data(), out_);
    dw.noalias() += g.transpose() * xin;
    db += g.colwise().sum();
    Tensor<T> dx(x.n, x.c, x.h, x.w);
    Eigen::Map<RowMat<T>> dxm(dx.data.data(), x.n, in_);
    dxm.noalias() = g * w;
    input_ = {};
    return dx;
  }

 private:
  int in_ = 0, out_ = 0;
  std::size_t weight_ = 0, bias_ = 0;
  Tensor<T> input_;
};

}  // namespace igtk::nn
