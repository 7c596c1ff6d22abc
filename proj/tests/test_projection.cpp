#include <fstream>

#include <Eigen/Eigenvalues>

#include "igtk/projection.hpp"
#include "igtk/random.hpp"
#include "test_util.hpp"

using namespace igtk;

namespace {
Eigen::MatrixXd random_matrix(int n, int d, std::uint64_t seed) {
  Rng rng(seed);
  Eigen::MatrixXd x(n, d);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < d; ++j) x(i, j) = standard_normal(rng) * (1.0 + j);  // distinct spectrum
  return x;
}
}  // namespace

TEST_CASE("centered 2-D data: projection is a rotation") {
  Eigen::MatrixXd x = random_matrix(40, 2, 1);
  x = x.rowwise() - x.colwise().mean();
  const auto p = pca2(x);
  for (int i = 0; i < 40; ++i)
    for (int j = 0; j < 40; ++j) CHECK(std::abs((x.row(i) - x.row(j)).norm() - (p.coordinates.row(i) - p.coordinates.row(j)).norm()) < 1e-9);
  CHECK((p.components.transpose() * p.components - Eigen::Matrix2d::Identity()).norm() < 1e-12);
}

TEST_CASE("rank-1 data has zero second-component variance") {
  Eigen::VectorXd dir = Eigen::VectorXd::LinSpaced(6, 1.0, 2.0).normalized();
  Eigen::MatrixXd x(20, 6);
  for (int i = 0; i < 20; ++i) x.row(i) = (i - 7.0) * dir.transpose();
  const auto p = pca2(x);
  CHECK(p.variance[0] > 1.0);
  CHECK(p.variance[1] < 1e-20);
}

TEST_CASE("reconstruction error matches a dense eigensolver") {
  const Eigen::MatrixXd x = random_matrix(50, 10, 2);
  const auto p = pca2(x, 5);
  const Eigen::MatrixXd xc = x.rowwise() - x.colwise().mean();
  const double ours = (xc - p.coordinates * p.components.transpose()).squaredNorm();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(xc.transpose() * xc);
  const Eigen::MatrixXd top = es.eigenvectors().rightCols(2);
  const double oracle = (xc - xc * top * top.transpose()).squaredNorm();
  CHECK(std::abs(ours - oracle) <= 1e-8 * std::max(1.0, oracle));
}

TEST_CASE("block iteration path (D > 10) agrees with the dense eigensolver") {
  const Eigen::MatrixXd x = random_matrix(80, 25, 3);
  const auto p = pca2(x, 1);
  const Eigen::MatrixXd xc = x.rowwise() - x.colwise().mean();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(xc.transpose() * xc / 79.0);
  CHECK(p.variance[0] == Catch::Approx(es.eigenvalues()[24]).epsilon(1e-9));
  CHECK(p.variance[1] == Catch::Approx(es.eigenvalues()[23]).epsilon(1e-9));
}

TEST_CASE("sign convention: first nonzero loading positive, independent of seed") {
  const Eigen::MatrixXd x = random_matrix(30, 12, 4);
  const auto a = pca2(x, 1);
  const auto b = pca2(x, 2);
  for (int c = 0; c < 2; ++c) {
    int first = 0;
    while (std::abs(a.components(first, c)) <= 1e-12) ++first;
    CHECK(a.components(first, c) > 0.0);
    CHECK((a.components.col(c) - b.components.col(c)).norm() < 1e-6);
  }
}

TEST_CASE("fewer than three points is a projection error") {
  REQUIRE_ERROR_KIND(pca2(Eigen::MatrixXd::Ones(2, 3)), ErrorKind::projection);
}

TEST_CASE("projection CSV export") {
  TempDir dir("proj");
  EmbeddingTable t;
  std::vector<Utterance> utts;
  for (int i = 0; i < 5; ++i) {
    const std::string id = "u" + std::to_string(i);
    t.insert(id, {{double(i), double(i * i), 1.0}, EmbeddingSource::import_other, EmbeddingLevel::utterance});
    utts.push_back({id, "A", i + 1, "x", "a.wav", 1.0});
  }
  const Manifest m(utts, {{"A", 2}});
  export_projection(t, m, dir.path() / "p.csv");
  std::ifstream in(dir.path() / "p.csv");
  std::string header, row;
  std::getline(in, header);
  CHECK(header == "utterance_id,x,y,rating,phrase_id");
  int rows = 0;
  while (std::getline(in, row)) {
    ++rows;
    CHECK(row.find(",2,") != std::string::npos);
  }
  CHECK(rows == 5);
}
