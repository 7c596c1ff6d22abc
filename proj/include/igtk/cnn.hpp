#pragma once

// Task-trained residual CNN over 96x64 log-mel patches: per-class logistic
// (sigmoid) or softmax loss with inverse-frequency class weights, Adam
// training and validation-best model selection.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "igtk/binary_io.hpp"
#include "igtk/error.hpp"
#include "igtk/layers.hpp"
#include "igtk/log_mel.hpp"
#include "igtk/metrics.hpp"
#include "igtk/random.hpp"
#include "igtk/segmentation.hpp"

namespace igtk {

enum class CnnLoss { sigmoid, softmax };

struct CnnConfig {
  int stem_channels = 16;
  std::vector<int> blocks_per_stage = {2, 2, 2};
  std::vector<int> channels_per_stage = {16, 32, 64};
  int num_classes = 2;
  std::uint64_t seed = 0;
  double learning_rate = 3e-5;
  int batch_size = 64;
  int epochs = 100;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  double bn_momentum = 0.99;
  CnnLoss loss = CnnLoss::sigmoid;
  bool zero_init_head = false;
  std::string task;  // informational; set by the CLI

  /// Small network for gradient checks and overfit sanity runs.
  static CnnConfig tiny(int num_classes = 2) {
    CnnConfig c;
    c.stem_channels = 4;
    c.blocks_per_stage = {1, 1};
    c.channels_per_stage = {4, 8};
    c.num_classes = num_classes;
    return c;
  }

  void validate() const {
    require(num_classes >= 2, ErrorKind::config, "CNN needs at least 2 classes");
    require(stem_channels >= 1, ErrorKind::config, "stem_channels must be >= 1");
    require(!blocks_per_stage.empty() && blocks_per_stage.size() == channels_per_stage.size(), ErrorKind::config,
            "blocks_per_stage and channels_per_stage must be non-empty and equally long");
    for (std::size_t i = 0; i < blocks_per_stage.size(); ++i)
      require(blocks_per_stage[i] >= 1 && channels_per_stage[i] >= 1, ErrorKind::config, "stage widths must be >= 1");
    require(learning_rate > 0.0 && batch_size >= 1 && epochs >= 1, ErrorKind::config,
            "learning_rate, batch_size and epochs must be positive");
  }
};

inline void to_json(nlohmann::json& j, const CnnConfig& c) {
  j = {{"stem_channels", c.stem_channels},
       {"blocks_per_stage", c.blocks_per_stage},
       {"channels_per_stage", c.channels_per_stage},
       {"num_classes", c.num_classes},
       {"seed", c.seed},
       {"learning_rate", c.learning_rate},
       {"batch_size", c.batch_size},
       {"epochs", c.epochs},
       {"adam_beta1", c.adam_beta1},
       {"adam_beta2", c.adam_beta2},
       {"adam_eps", c.adam_eps},
       {"bn_momentum", c.bn_momentum},
       {"loss", c.loss == CnnLoss::sigmoid ? "sigmoid" : "softmax"},
       {"zero_init_head", c.zero_init_head},
       {"task", c.task}};
}

inline void from_json(const nlohmann::json& j, CnnConfig& c) {
  c = CnnConfig{};
  c.stem_channels = j.value("stem_channels", c.stem_channels);
  c.blocks_per_stage = j.value("blocks_per_stage", c.blocks_per_stage);
  c.channels_per_stage = j.value("channels_per_stage", c.channels_per_stage);
  c.num_classes = j.value("num_classes", c.num_classes);
  c.seed = j.value("seed", c.seed);
  c.learning_rate = j.value("learning_rate", c.learning_rate);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.epochs = j.value("epochs", c.epochs);
  c.adam_beta1 = j.value("adam_beta1", c.adam_beta1);
  c.adam_beta2 = j.value("adam_beta2", c.adam_beta2);
  c.adam_eps = j.value("adam_eps", c.adam_eps);
  c.bn_momentum = j.value("bn_momentum", c.bn_momentum);
  c.loss = j.value("loss", std::string("sigmoid")) == "softmax" ? CnnLoss::softmax : CnnLoss::sigmoid;
  c.zero_init_head = j.value("zero_init_head", c.zero_init_head);
  c.task = j.value("task", std::string{});
}

/// w_c = N / (K * n_c) over segment-level counts, so the mean per-segment
/// weight is 1. Classes absent from the data get weight 1 (never used).
inline std::vector<double> class_weights(std::span<const std::size_t> counts) {
  const double n = std::accumulate(counts.begin(), counts.end(), 0.0);
  const auto k = static_cast<double>(counts.size());
  std::vector<double> w(counts.size(), 1.0);
  for (std::size_t c = 0; c < counts.size(); ++c)
    if (counts[c] > 0) w[c] = n / (k * static_cast<double>(counts[c]));
  return w;
}

namespace nn {

template <typename T>
class ResidualBlock {
 public:
  ResidualBlock() = default;
  ResidualBlock(ParameterStore<T>& ps, const std::string& name, int in, int out, int stride, double momentum)
      : conv1_(ps, name + ".conv1", in, out, 3, stride, 1), bn1_(ps, name + ".bn1", out, momentum),
        conv2_(ps, name + ".conv2", out, out, 3, 1, 1), bn2_(ps, name + ".bn2", out, momentum),
        project_(stride != 1 || in != out) {
    if (project_) {
      proj_conv_ = Conv2d<T>(ps, name + ".proj", in, out, 1, stride, 0);
      proj_bn_ = BatchNorm2d<T>(ps, name + ".proj_bn", out, momentum);
    }
  }

  void init(ParameterStore<T>& ps, Rng& rng) const {
    conv1_.init_he(ps, rng);
    conv2_.init_he(ps, rng);
    if (project_) proj_conv_.init_he(ps, rng);
  }

  Tensor<T> forward(const Tensor<T>& x, ParameterStore<T>& ps, bool train) {
    auto a = conv1_.forward(x, ps, train);
    a = bn1_.forward(a, ps, train);
    a = relu1_.forward(a, train);
    a = conv2_.forward(a, ps, train);
    a = bn2_.forward(a, ps, train);
    if (project_) {
      const auto s = proj_bn_.forward(proj_conv_.forward(x, ps, train), ps, train);
      for (std::size_t i = 0; i < a.size(); ++i) a.data[i] += s.data[i];
    } else {
      for (std::size_t i = 0; i < a.size(); ++i) a.data[i] += x.data[i];
    }
    return relu_out_.forward(a, train);
  }

  Tensor<T> infer(const Tensor<T>& x, const ParameterStore<T>& ps) const {
    auto a = Relu<T>::infer(bn1_.infer(conv1_.infer(x, ps), ps));
    a = bn2_.infer(conv2_.infer(a, ps), ps);
    if (project_) {
      const auto s = proj_bn_.infer(proj_conv_.infer(x, ps), ps);
      for (std::size_t i = 0; i < a.size(); ++i) a.data[i] += s.data[i];
    } else {
      for (std::size_t i = 0; i < a.size(); ++i) a.data[i] += x.data[i];
    }
    return Relu<T>::infer(std::move(a));
  }

  Tensor<T> backward(const Tensor<T>& dy, ParameterStore<T>& ps) {
    const auto d = relu_out_.backward(dy);
    auto da = bn2_.backward(d, ps);
    da = conv2_.backward(da, ps);
    da = relu1_.backward(std::move(da));
    da = bn1_.backward(da, ps);
    auto dx = conv1_.backward(da, ps);
    if (project_) {
      const auto ds = proj_conv_.backward(proj_bn_.backward(d, ps), ps);
      for (std::size_t i = 0; i < dx.size(); ++i) dx.data[i] += ds.data[i];
    } else {
      for (std::size_t i = 0; i < dx.size(); ++i) dx.data[i] += d.data[i];
    }
    return dx;
  }

 private:
  Conv2d<T> conv1_;
  BatchNorm2d<T> bn1_;
  Relu<T> relu1_;
  Conv2d<T> conv2_;
  BatchNorm2d<T> bn2_;
  bool project_ = false;
  Conv2d<T> proj_conv_;
  BatchNorm2d<T> proj_bn_;
  Relu<T> relu_out_;
};

}  // namespace nn

template <typename T>
struct LossResult {
  double value = 0.0;
  nn::Tensor<T> dlogits;
};

/// Mean over the batch of class-weighted per-segment losses. Sigmoid mode sums
/// binary cross-entropy over classes (one-vs-rest); softmax mode uses
/// categorical cross-entropy.
template <typename T>
LossResult<T> weighted_loss(const nn::Tensor<T>& logits, std::span<const int> labels, std::span<const double> weights,
                            CnnLoss kind) {
  const int n = logits.n;
  const int k = logits.c;
  require(static_cast<int>(labels.size()) == n, ErrorKind::shape, "labels do not match batch size");
  require(static_cast<int>(weights.size()) == k, ErrorKind::shape, "class weights do not match class count");
  LossResult<T> out;
  out.dlogits = nn::Tensor<T>(n, k, 1, 1);
  double total = 0.0;
  for (int i = 0; i < n; ++i) {
    const int y = labels[static_cast<std::size_t>(i)];
    require(y >= 0 && y < k, ErrorKind::domain, "label " + std::to_string(y) + " outside 0..K-1");
    const double w = weights[static_cast<std::size_t>(y)];
    const T* z = logits.data.data() + static_cast<std::size_t>(i) * k;
    T* g = out.dlogits.data.data() + static_cast<std::size_t>(i) * k;
    double seg = 0.0;
    if (kind == CnnLoss::sigmoid) {
      for (int c = 0; c < k; ++c) {
        const double zc = z[c];
        const double t = c == y ? 1.0 : 0.0;
        seg += std::max(zc, 0.0) - zc * t + std::log1p(std::exp(-std::abs(zc)));
        const double s = 1.0 / (1.0 + std::exp(-zc));
        g[c] = static_cast<T>(w * (s - t) / n);
      }
    } else {
      double mx = z[0];
      for (int c = 1; c < k; ++c) mx = std::max(mx, static_cast<double>(z[c]));
      double denom = 0.0;
      for (int c = 0; c < k; ++c) denom += std::exp(z[c] - mx);
      const double log_denom = std::log(denom) + mx;
      seg = log_denom - z[y];
      for (int c = 0; c < k; ++c) g[c] = static_cast<T>(w * (std::exp(z[c] - log_denom) - (c == y ? 1.0 : 0.0)) / n);
    }
    total += w * seg;
  }
  out.value = total / n;
  return out;
}

/// Logits to a class distribution: normalized sigmoids, or softmax.
inline ClassDistribution distribution_from_logits(std::span<const double> z, CnnLoss kind) {
  std::vector<double> p(z.size());
  if (kind == CnnLoss::sigmoid) {
    for (std::size_t c = 0; c < z.size(); ++c) p[c] = 1.0 / (1.0 + std::exp(-z[c]));
  } else {
    const double mx = *std::max_element(z.begin(), z.end());
    for (std::size_t c = 0; c < z.size(); ++c) p[c] = std::exp(z[c] - mx);
  }
  const double sum = std::accumulate(p.begin(), p.end(), 0.0);
  for (auto& v : p) v /= sum;
  return {std::move(p)};
}

template <typename T>
class CnnModel {
 public:
  using Scalar = T;

  explicit CnnModel(CnnConfig cfg) : cfg_(std::move(cfg)) {
    cfg_.validate();
    stem_ = nn::Conv2d<T>(params_, "stem.conv", 1, cfg_.stem_channels, 3, 1, 1);
    stem_bn_ = nn::BatchNorm2d<T>(params_, "stem.bn", cfg_.stem_channels, cfg_.bn_momentum);
    int in = cfg_.stem_channels;
    for (std::size_t s = 0; s < cfg_.blocks_per_stage.size(); ++s) {
      for (int b = 0; b < cfg_.blocks_per_stage[s]; ++b) {
        const int stride = (s > 0 && b == 0) ? 2 : 1;
        const int out = cfg_.channels_per_stage[s];
        blocks_.emplace_back(params_, "stage" + std::to_string(s) + ".block" + std::to_string(b), in, out, stride,
                             cfg_.bn_momentum);
        in = out;
      }
    }
    head_ = nn::Linear<T>(params_, "head", in, cfg_.num_classes);

    Rng rng(derive_seed(cfg_.seed, "cnn-init"));
    stem_.init_he(params_, rng);
    for (const auto& blk : blocks_) blk.init(params_, rng);
    if (cfg_.zero_init_head) head_.zero(params_);
    else head_.init_glorot(params_, rng);
  }

  const CnnConfig& config() const { return cfg_; }
  nn::ParameterStore<T>& params() { return params_; }
  const nn::ParameterStore<T>& params() const { return params_; }

  /// Training-mode forward (batch statistics, caches activations).
  nn::Tensor<T> forward_train(const nn::Tensor<T>& x) {
    auto a = stem_bn_.forward(stem_.forward(x, params_, true), params_, true);
    a = stem_relu_.forward(a, true);
    for (auto& blk : blocks_) a = blk.forward(a, params_, true);
    pooled_h_ = a.h;
    pooled_w_ = a.w;
    return head_.forward(nn::GlobalAvgPool<T>::forward(a), params_, true);
  }

  void backward(const nn::Tensor<T>& dlogits) {
    auto d = head_.backward(dlogits, params_);
    d = nn::GlobalAvgPool<T>::backward(d, pooled_h_, pooled_w_);
    for (auto it = blocks_.rbegin(); it != blocks_.rend(); ++it) d = it->backward(d, params_);
    d = stem_relu_.backward(std::move(d));
    d = stem_bn_.backward(d, params_);
    stem_.backward(d, params_);
  }

  /// Inference-mode logits (running statistics); no state is touched.
  nn::Tensor<T> logits(const nn::Tensor<T>& x) const {
    for (const auto v : x.data) require(std::isfinite(static_cast<double>(v)), ErrorKind::numeric, "non-finite CNN input");
    auto a = nn::Relu<T>::infer(stem_bn_.infer(stem_.infer(x, params_), params_));
    for (const auto& blk : blocks_) a = blk.infer(a, params_);
    return head_.infer(nn::GlobalAvgPool<T>::forward(a), params_);
  }

  std::vector<ClassDistribution> predict(std::span<const LogMelPatch> patches) const {
    const auto z = logits(to_tensor(patches));
    std::vector<ClassDistribution> out;
    const auto k = static_cast<std::size_t>(cfg_.num_classes);
    std::vector<double> row(k);
    for (int i = 0; i < z.n; ++i) {
      for (std::size_t c = 0; c < k; ++c) row[c] = static_cast<double>(z.data[static_cast<std::size_t>(i) * k + c]);
      out.push_back(distribution_from_logits(row, cfg_.loss));
    }
    return out;
  }

  ClassDistribution forward(const LogMelPatch& patch) const { return predict(std::span(&patch, 1)).front(); }

  static nn::Tensor<T> to_tensor(std::span<const LogMelPatch> patches) {
    nn::Tensor<T> x(static_cast<int>(patches.size()), 1, static_cast<int>(kPatchFrames), static_cast<int>(kPatchBins));
    for (std::size_t i = 0; i < patches.size(); ++i) {
      require(patches[i].values.size() == kPatchFrames * kPatchBins, ErrorKind::shape, "patch must be 96x64");
      std::copy(patches[i].values.begin(), patches[i].values.end(), x.sample(static_cast<int>(i)));
    }
    return x;
  }

  /// FNV-1a over every parameter and buffer, in registration order.
  std::uint64_t hash() const {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const auto& p : params_) {
      h = fnv1a(p.name, h);
      const auto* bytes = reinterpret_cast<const char*>(p.value.data());
      h = fnv1a(std::string_view(bytes, p.value.size() * sizeof(T)), h);
    }
    return h;
  }

 private:
  CnnConfig cfg_;
  nn::ParameterStore<T> params_;
  nn::Conv2d<T> stem_;
  nn::BatchNorm2d<T> stem_bn_;
  nn::Relu<T> stem_relu_;
  std::vector<nn::ResidualBlock<T>> blocks_;
  nn::Linear<T> head_;
  int pooled_h_ = 0, pooled_w_ = 0;
};

using Cnn = CnnModel<float>;

template <typename T>
std::vector<int> labels_of(std::span<const LabeledSegment> batch) {
  std::vector<int> y;
  y.reserve(batch.size());
  for (const auto& s : batch) y.push_back(s.label);
  return y;
}

/// Clears gradients, runs a training forward and backward pass, and leaves
/// the batch gradients in `model.params()`. Returns the loss.
template <typename T>
double loss_and_gradients(CnnModel<T>& model, std::span<const LabeledSegment> batch, std::span<const double> weights) {
  std::vector<LogMelPatch> patches;
  patches.reserve(batch.size());
  for (const auto& s : batch) patches.push_back(s.patch);
  const auto y = labels_of<T>(batch);
  model.params().zero_grad();
  const auto z = model.forward_train(CnnModel<T>::to_tensor(patches));
  auto res = weighted_loss<T>(z, y, weights, model.config().loss);
  model.backward(res.dlogits);
  return res.value;
}

/// Training-mode loss without touching gradients.
template <typename T>
double loss(CnnModel<T>& model, std::span<const LabeledSegment> batch, std::span<const double> weights) {
  std::vector<LogMelPatch> patches;
  for (const auto& s : batch) patches.push_back(s.patch);
  const auto z = model.forward_train(CnnModel<T>::to_tensor(patches));
  return weighted_loss<T>(z, labels_of<T>(batch), weights, model.config().loss).value;
}

class Adam {
 public:
  Adam(double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
      : lr_(lr), b1_(beta1), b2_(beta2), eps_(eps) {}

  template <typename T>
  void step(nn::ParameterStore<T>& ps) {
    if (m_.empty()) {
      m_.resize(ps.size());
      v_.resize(ps.size());
      for (std::size_t i = 0; i < ps.size(); ++i) {
        m_[i].assign(ps[i].grad.size(), 0.0);
        v_[i].assign(ps[i].grad.size(), 0.0);
      }
    }
    ++t_;
    const double c1 = 1.0 - std::pow(b1_, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(b2_, static_cast<double>(t_));
    for (std::size_t i = 0; i < ps.size(); ++i) {
      auto& p = ps[i];
      if (!p.trainable) continue;
      for (std::size_t j = 0; j < p.value.size(); ++j) {
        const double g = p.grad[j];
        m_[i][j] = b1_ * m_[i][j] + (1.0 - b1_) * g;
        v_[i][j] = b2_ * v_[i][j] + (1.0 - b2_) * g * g;
        p.value[j] = static_cast<T>(p.value[j] - lr_ * (m_[i][j] / c1) / (std::sqrt(v_[i][j] / c2) + eps_));
      }
    }
  }

 private:
  double lr_, b1_, b2_, eps_;
  std::uint64_t t_ = 0;
  std::vector<std::vector<double>> m_, v_;
};

struct ValidationUtterance {
  std::string utterance_id;
  int label = 0;
  std::vector<LogMelPatch> patches;
};

/// Utterance-level predictions: segment distributions averaged per utterance.
template <typename T>
std::vector<AggregatedPrediction> predict_utterances(const CnnModel<T>& model, std::span<const ValidationUtterance> utts) {
  std::vector<AggregatedPrediction> out;
  out.reserve(utts.size());
  for (const auto& u : utts) {
    const auto dists = model.predict(u.patches);
    out.push_back(aggregate(dists));
  }
  return out;
}

/// Mean one-vs-rest AUC at utterance level; NaN when no class is computable.
template <typename T>
double validation_auc(const CnnModel<T>& model, std::span<const ValidationUtterance> utts) {
  const auto preds = predict_utterances(model, utts);
  std::vector<ClassDistribution> scores;
  std::vector<int> labels;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    scores.push_back(preds[i].distribution);
    labels.push_back(utts[i].label);
  }
  try {
    return auc_ovr(scores, labels).mean;
  } catch (const Error&) {
    return std::numeric_limits<double>::quiet_NaN();
  }
}

/// Index of the best epoch score; the earliest wins ties and NaN never wins.
inline std::size_t select_best_epoch(std::span<const double> scores) {
  std::size_t best = 0;
  double best_score = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (scores[i] > best_score) {
      best_score = scores[i];
      best = i;
    }
  }
  return best;
}

template <typename T>
struct CnnTrainResult {
  CnnModel<T> model;
  std::vector<double> epoch_loss;
  std::vector<double> epoch_val_auc;
  std::size_t best_epoch = 0;  // 0-based
};

using EpochCallback = std::function<void(int epoch, double loss, double val_auc)>;

template <typename T = float>
CnnTrainResult<T> train_cnn(const CnnConfig& cfg, std::span<const LabeledSegment> train,
                            std::span<const ValidationUtterance> val, const EpochCallback& on_epoch = {}) {
  require(!train.empty(), ErrorKind::precondition, "empty training set");
  require(!val.empty(), ErrorKind::precondition, "empty validation set");
  CnnModel<T> model(cfg);
  const auto weights = class_weights(segment_class_frequencies(train, cfg.num_classes));
  Adam adam(cfg.learning_rate, cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps);

  CnnTrainResult<T> result{model, {}, {}, 0};
  double best = -std::numeric_limits<double>::infinity();
  std::vector<std::size_t> order(train.size());
  std::vector<LabeledSegment> batch;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), 0);
    Rng rng(derive_seed(cfg.seed, "cnn-shuffle", static_cast<std::uint64_t>(epoch)));
    shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
      batch.clear();
      for (std::size_t i = start; i < end; ++i) batch.push_back(train[order[i]]);
      const double l = loss_and_gradients(model, std::span<const LabeledSegment>(batch), weights);
      if (!std::isfinite(l))
        fail(ErrorKind::training, "non-finite loss in epoch " + std::to_string(epoch + 1));
      adam.step(model.params());
      loss_sum += l;
      ++batches;
    }
    const double auc = validation_auc(model, val);
    result.epoch_loss.push_back(loss_sum / static_cast<double>(batches));
    result.epoch_val_auc.push_back(auc);
    if (on_epoch) on_epoch(epoch + 1, result.epoch_loss.back(), auc);
    if (auc > best || epoch == 0) {
      if (auc > best) best = auc;
      result.model = model;
    }
  }
  result.best_epoch = select_best_epoch(result.epoch_val_auc);
  return result;
}

// ---------------------------------------------------------------------------
// Checkpoint: "IGC1", config JSON (u32 length + bytes), u32 tensor count, then
// per tensor: u32 name length + UTF-8 name, u32 rank, rank x u32 dims,
// little-endian f32 data.

template <typename T>
void save_checkpoint(const CnnModel<T>& model, std::ostream& out) {
  binary::put_magic(out, "IGC1");
  binary::put_string(out, nlohmann::json(model.config()).dump());
  binary::put_u32(out, static_cast<std::uint32_t>(model.params().size()));
  for (const auto& p : model.params()) {
    binary::put_string(out, p.name);
    binary::put_u32(out, static_cast<std::uint32_t>(p.dims.size()));
    for (auto d : p.dims) binary::put_u32(out, d);
    for (auto v : p.value) binary::put_f32(out, static_cast<float>(v));
  }
}

template <typename T>
void save_checkpoint(const CnnModel<T>& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  require(out.good(), ErrorKind::io, "cannot write " + path.string());
  save_checkpoint(model, out);
}

template <typename T = float>
CnnModel<T> load_checkpoint(std::istream& in) {
  binary::expect_magic(in, "IGC1");
  CnnConfig cfg;
  try {
    cfg = nlohmann::json::parse(binary::get_string(in)).get<CnnConfig>();
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::format, std::string("bad checkpoint config: ") + e.what());
  }
  CnnModel<T> model(cfg);
  const auto count = binary::get_u32(in);
  require(count == model.params().size(), ErrorKind::format, "checkpoint tensor count does not match architecture");
  for (std::uint32_t i = 0; i < count; ++i) {
    auto& p = model.params()[i];
    const auto name = binary::get_string(in, 1024);
    require(name == p.name, ErrorKind::format, "checkpoint tensor '" + name + "' where '" + p.name + "' expected");
    const auto rank = binary::get_u32(in);
    require(rank == p.dims.size(), ErrorKind::format, "rank mismatch for " + name);
    for (std::uint32_t r = 0; r < rank; ++r)
      require(binary::get_u32(in) == p.dims[r], ErrorKind::format, "shape mismatch for " + name);
    for (auto& v : p.value) v = static_cast<T>(binary::get_f32(in));
  }
  return model;
}

template <typename T = float>
CnnModel<T> load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), ErrorKind::io, "cannot open " + path.string());
  return load_checkpoint<T>(in);
}

}  // namespace igtk
