#pragma once

// Classifier heads over pooled embeddings, and the "IGH1" head checkpoint:
// magic, JSON config (u32 length + bytes), then a binary payload of
// little-endian f64 parameters (logistic) or trees (forest).

#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "igtk/binary_io.hpp"
#include "igtk/core_data.hpp"
#include "igtk/embeddings.hpp"
#include "igtk/forest.hpp"
#include "igtk/logistic.hpp"

namespace igtk {

enum class HeadKind { logistic, forest };

inline std::string_view head_name(HeadKind k) { return k == HeadKind::logistic ? "LOGISTIC" : "FOREST"; }

inline HeadKind parse_head(std::string_view s) {
  std::string u;
  for (char c : s) u.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
  if (u == "LOGISTIC" || u == "LR") return HeadKind::logistic;
  if (u == "FOREST" || u == "RF") return HeadKind::forest;
  fail(ErrorKind::config, "unknown head '" + std::string(s) + "'");
}

struct HeadModel {
  TaskId task = TaskId::two_mild;
  std::variant<LogisticModel, ForestModel> model;

  HeadKind kind() const { return std::holds_alternative<LogisticModel>(model) ? HeadKind::logistic : HeadKind::forest; }

  ClassDistribution predict(std::span<const double> x) const {
    if (const auto* lr = std::get_if<LogisticModel>(&model)) return predict_logistic(*lr, x);
    return predict_forest(std::get<ForestModel>(model), x);
  }

  std::size_t dim() const {
    if (const auto* lr = std::get_if<LogisticModel>(&model)) return lr->dim();
    return std::get<ForestModel>(model).dim;
  }
};

/// Row-stacks the pooled embeddings of `utterances` in order.
inline Eigen::MatrixXd feature_matrix(const EmbeddingTable& table, std::span<const Utterance* const> utterances) {
  Eigen::MatrixXd x(static_cast<Eigen::Index>(utterances.size()), static_cast<Eigen::Index>(table.dim()));
  for (std::size_t i = 0; i < utterances.size(); ++i) {
    const auto& e = table.at(utterances[i]->utterance_id);
    for (std::size_t j = 0; j < e.dim(); ++j) x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = e.vector[j];
  }
  return x;
}

struct HeadTrainingOptions {
  LogisticOptions logistic;
  ForestOptions forest;
};

inline HeadModel fit_head(HeadKind kind, const EmbeddingTable& table, const Manifest& manifest,
                          std::span<const Utterance* const> train, TaskId task, const HeadTrainingOptions& opts = {}) {
  const auto x = feature_matrix(table, train);
  std::vector<int> y;
  y.reserve(train.size());
  for (const auto* u : train) y.push_back(manifest.label(*u, task));
  const int k = task_spec(task).num_classes;
  HeadModel head;
  head.task = task;
  if (kind == HeadKind::logistic) head.model = fit_logistic(x, y, k, opts.logistic).model;
  else head.model = fit_forest(x, y, k, opts.forest);
  return head;
}

namespace detail {

inline void put_vec(std::ostream& out, const Eigen::VectorXd& v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) binary::put_f64(out, v[i]);
}

inline void get_vec(std::istream& in, Eigen::VectorXd& v, Eigen::Index n) {
  v.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = binary::get_f64(in);
}

}  // namespace detail

inline void save_head(const HeadModel& head, std::ostream& out) {
  nlohmann::json cfg{{"kind", head_name(head.kind())}, {"task", task_name(head.task)}, {"dim", head.dim()}};
  if (const auto* lr = std::get_if<LogisticModel>(&head.model)) {
    cfg["num_classes"] = lr->num_classes();
    cfg["l2_lambda"] = lr->l2_lambda;
  } else {
    const auto& f = std::get<ForestModel>(head.model);
    cfg["num_classes"] = f.num_classes;
    cfg["n_trees"] = f.options.n_trees;
    cfg["max_depth"] = f.options.max_depth;
    cfg["min_samples_split"] = f.options.min_samples_split;
    cfg["max_features"] = f.options.max_features;
    cfg["seed"] = f.options.seed;
  }
  binary::put_magic(out, "IGH1");
  binary::put_string(out, cfg.dump());
  if (const auto* lr = std::get_if<LogisticModel>(&head.model)) {
    detail::put_vec(out, lr->feature_mean);
    detail::put_vec(out, lr->feature_scale);
    for (Eigen::Index r = 0; r < lr->weights.rows(); ++r)
      for (Eigen::Index c = 0; c < lr->weights.cols(); ++c) binary::put_f64(out, lr->weights(r, c));
    detail::put_vec(out, lr->bias);
  } else {
    const auto& f = std::get<ForestModel>(head.model);
    binary::put_u32(out, static_cast<std::uint32_t>(f.trees.size()));
    for (const auto& t : f.trees) {
      binary::put_u32(out, static_cast<std::uint32_t>(t.nodes.size()));
      for (const auto& n : t.nodes) {
        binary::put_i32(out, n.feature);
        if (n.feature >= 0) {
          binary::put_f64(out, n.threshold);
          binary::put_i32(out, n.left);
          binary::put_i32(out, n.right);
        } else {
          for (double p : n.distribution) binary::put_f64(out, p);
        }
      }
    }
  }
}

inline HeadModel load_head(std::istream& in) {
  binary::expect_magic(in, "IGH1");
  nlohmann::json cfg;
  try {
    cfg = nlohmann::json::parse(binary::get_string(in));
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::format, std::string("bad head config: ") + e.what());
  }
  HeadModel head;
  head.task = parse_task(cfg.at("task").get<std::string>());
  const auto dim = cfg.at("dim").get<Eigen::Index>();
  const int k = cfg.at("num_classes").get<int>();
  require(dim > 0 && k >= 2, ErrorKind::format, "head config has invalid shape");
  if (parse_head(cfg.at("kind").get<std::string>()) == HeadKind::logistic) {
    LogisticModel m;
    m.l2_lambda = cfg.value("l2_lambda", 1e-4);
    detail::get_vec(in, m.feature_mean, dim);
    detail::get_vec(in, m.feature_scale, dim);
    m.weights.resize(k, dim);
    for (Eigen::Index r = 0; r < k; ++r)
      for (Eigen::Index c = 0; c < dim; ++c) m.weights(r, c) = binary::get_f64(in);
    detail::get_vec(in, m.bias, k);
    head.model = std::move(m);
  } else {
    ForestModel f;
    f.num_classes = k;
    f.dim = static_cast<std::size_t>(dim);
    f.options.n_trees = cfg.value("n_trees", 200);
    f.options.max_depth = cfg.value("max_depth", 0);
    f.options.min_samples_split = cfg.value("min_samples_split", 2);
    f.options.max_features = cfg.value("max_features", 0);
    f.options.seed = cfg.value("seed", std::uint64_t{0});
    f.trees.resize(binary::get_u32(in));
    for (auto& t : f.trees) {
      t.nodes.resize(binary::get_u32(in));
      for (auto& n : t.nodes) {
        n.feature = binary::get_i32(in);
        if (n.feature >= 0) {
          require(n.feature < dim, ErrorKind::format, "tree feature index out of range");
          n.threshold = binary::get_f64(in);
          n.left = binary::get_i32(in);
          n.right = binary::get_i32(in);
          require(n.left > 0 && n.right > 0 && static_cast<std::size_t>(std::max(n.left, n.right)) < t.nodes.size(),
                  ErrorKind::format, "tree child index out of range");
        } else {
          n.distribution.resize(static_cast<std::size_t>(k));
          for (auto& p : n.distribution) p = binary::get_f64(in);
        }
      }
    }
    head.model = std::move(f);
  }
  return head;
}

inline void save_head(const HeadModel& head, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  require(out.good(), ErrorKind::io, "cannot write " + path.string());
  save_head(head, out);
}

inline HeadModel load_head(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), ErrorKind::io, "cannot open " + path.string());
  return load_head(in);
}

}  // namespace igtk
