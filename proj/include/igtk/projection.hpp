#pragma once

// Two-component PCA of an embedding table for cluster inspection in external
// tools. Components come from block subspace iteration on the centered data
// with a Jacobi Rayleigh-Ritz step; the covariance matrix is never formed.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <vector>

#include "igtk/core_data.hpp"
#include "igtk/embeddings.hpp"
#include "igtk/error.hpp"
#include "igtk/random.hpp"

namespace igtk {

/// Eigen-decomposition of a small symmetric matrix by cyclic Jacobi
/// rotations. Eigenvalues come back in descending order with matching
/// eigenvector columns.
inline void jacobi_eigen(Eigen::MatrixXd a, Eigen::VectorXd& values, Eigen::MatrixXd& vectors) {
  const auto n = a.rows();
  vectors = Eigen::MatrixXd::Identity(n, n);
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (Eigen::Index p = 0; p < n; ++p)
      for (Eigen::Index q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
    if (off <= 1e-30 * std::max(1.0, a.squaredNorm())) break;
    for (Eigen::Index p = 0; p < n; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        if (a(p, q) == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0), s = t * c;
        for (Eigen::Index k = 0; k < n; ++k) {
          const double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
          const double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
          const double vkp = vectors(k, p), vkq = vectors(k, q);
          vectors(k, p) = c * vkp - s * vkq;
          vectors(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
  std::sort(order.begin(), order.end(), [&](auto x, auto y) { return a(x, x) > a(y, y); });
  values.resize(n);
  Eigen::MatrixXd sorted(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    values[i] = a(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(i)]);
    sorted.col(i) = vectors.col(order[static_cast<std::size_t>(i)]);
  }
  vectors = std::move(sorted);
}

struct Projection {
  Eigen::MatrixXd coordinates;  // N x 2
  Eigen::MatrixXd components;   // D x 2, orthonormal columns
  Eigen::Vector2d variance;     // per component, divisor N - 1
  Eigen::VectorXd mean;
};

inline Projection pca2(const Eigen::MatrixXd& data, std::uint64_t seed = 0) {
  const auto n = data.rows();
  const auto d = data.cols();
  require(n >= 3, ErrorKind::projection, "need at least 3 points to project, got " + std::to_string(n));
  require(d >= 1, ErrorKind::projection, "empty embedding");
  Projection out;
  out.mean = data.colwise().mean().transpose();
  const Eigen::MatrixXd x = data.rowwise() - out.mean.transpose();

  const Eigen::Index block = std::min<Eigen::Index>(d, 10);
  Rng rng(derive_seed(seed, "pca"));
  Eigen::MatrixXd q(d, block);
  for (Eigen::Index i = 0; i < q.size(); ++i) q.data()[i] = standard_normal(rng);
  q = Eigen::HouseholderQR<Eigen::MatrixXd>(q).householderQ() * Eigen::MatrixXd::Identity(d, block);

  Eigen::VectorXd ritz_values;
  Eigen::MatrixXd ritz_vectors;
  double previous = -1.0;
  for (int it = 0; it < 2000; ++it) {
    const Eigen::MatrixXd xq = x * q;
    const Eigen::MatrixXd small = xq.transpose() * xq;
    jacobi_eigen(small, ritz_values, ritz_vectors);
    q = q * ritz_vectors;  // Rayleigh-Ritz rotation
    if (block == d) break;
    const double top = ritz_values[0] + ritz_values[std::min<Eigen::Index>(1, block - 1)];
    if (it > 0 && std::abs(top - previous) <= 1e-14 * std::max(1.0, std::abs(top))) break;
    previous = top;
    Eigen::MatrixXd z = x.transpose() * (x * q);
    q = Eigen::HouseholderQR<Eigen::MatrixXd>(z).householderQ() * Eigen::MatrixXd::Identity(d, block);
  }

  out.components = Eigen::MatrixXd::Zero(d, 2);
  for (Eigen::Index c = 0; c < std::min<Eigen::Index>(2, block); ++c) {
    Eigen::VectorXd v = q.col(c).normalized();
    // Deterministic sign: first nonzero loading positive.
    for (Eigen::Index i = 0; i < d; ++i) {
      if (std::abs(v[i]) > 1e-12) {
        if (v[i] < 0) v = -v;
        break;
      }
    }
    out.components.col(c) = v;
  }
  out.coordinates = x * out.components;
  for (int c = 0; c < 2; ++c) out.variance[c] = out.coordinates.col(c).squaredNorm() / static_cast<double>(n - 1);
  return out;
}

/// CSV with header "utterance_id,x,y,rating,phrase_id", one row per table entry.
inline Projection export_projection(const EmbeddingTable& table, const Manifest& manifest,
                                    const std::filesystem::path& csv_path, std::uint64_t seed = 0) {
  std::vector<std::string> ids;
  Eigen::MatrixXd data(static_cast<Eigen::Index>(table.size()), static_cast<Eigen::Index>(table.dim()));
  Eigen::Index row = 0;
  for (const auto& [id, e] : table.rows()) {
    ids.push_back(id);
    for (std::size_t j = 0; j < e.dim(); ++j) data(row, static_cast<Eigen::Index>(j)) = e.vector[j];
    ++row;
  }
  auto proj = pca2(data, seed);
  std::ofstream out(csv_path);
  require(out.good(), ErrorKind::io, "cannot write " + csv_path.string());
  out << "utterance_id,x,y,rating,phrase_id\n";
  out.precision(17);
  for (std::size_t i = 0; i < ids.size(); ++i) {
    const auto& u = manifest.utterance(ids[i]);
    out << ids[i] << ',' << proj.coordinates(static_cast<Eigen::Index>(i), 0) << ','
        << proj.coordinates(static_cast<Eigen::Index>(i), 1) << ',' << manifest.rating_of(u.speaker_id) << ','
        << u.phrase_id << '\n';
  }
  return proj;
}

}  // namespace igtk
