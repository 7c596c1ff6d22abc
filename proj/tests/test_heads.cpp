#include <sstream>

#include "checks.hpp"
#include "igtk/heads.hpp"
#include "test_util.hpp"

using namespace igtk;

namespace {

// Gaussian blobs, one per class, in d dimensions.
void blobs(int n_per_class, int k, int d, double spread, std::uint64_t seed, Eigen::MatrixXd& x, std::vector<int>& y) {
  Rng rng(seed);
  x.resize(n_per_class * k, d);
  y.clear();
  for (int c = 0; c < k; ++c)
    for (int i = 0; i < n_per_class; ++i) {
      const int r = c * n_per_class + i;
      for (int j = 0; j < d; ++j) x(r, j) = (j == c % d ? 3.0 : 0.0) + spread * standard_normal(rng);
      y.push_back(c);
    }
}

double train_accuracy(const std::function<ClassDistribution(std::span<const double>)>& f, const Eigen::MatrixXd& x,
                      const std::vector<int>& y) {
  int hit = 0;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const Eigen::VectorXd row = x.row(i);
    hit += argmax(f(std::span<const double>(row.data(), static_cast<std::size_t>(row.size()))).probs) == y[static_cast<std::size_t>(i)];
  }
  return double(hit) / double(x.rows());
}

}  // namespace

TEST_CASE("logistic gradient matches central differences") { CHECK(checks::logistic_gradient_error(2) < 1e-6); }

TEST_CASE("logistic fit converges and separates blobs") {
  Eigen::MatrixXd x;
  std::vector<int> y;
  blobs(40, 3, 5, 0.7, 1, x, y);
  const auto fit = fit_logistic(x, y, 3);
  CHECK(fit.converged);
  CHECK(fit.gradient_norm < 1e-6);
  CHECK(train_accuracy([&](std::span<const double> r) { return predict_logistic(fit.model, r); }, x, y) > 0.95);
}

TEST_CASE("logistic objective is convex: random and zero init reach the same optimum") {
  Eigen::MatrixXd x;
  std::vector<int> y;
  blobs(30, 3, 4, 1.5, 2, x, y);
  LogisticOptions opts;
  opts.l2_lambda = 1e-2;
  const auto a = fit_logistic(x, y, 3, opts);
  opts.random_init = true;
  opts.seed = 99;
  const auto b = fit_logistic(x, y, 3, opts);
  CHECK(a.converged);
  CHECK(b.converged);
  CHECK(std::abs(a.objective - b.objective) < 1e-10);
  const Eigen::VectorXd row = x.row(0);
  const auto pa = predict_logistic(a.model, std::span<const double>(row.data(), 4));
  const auto pb = predict_logistic(b.model, std::span<const double>(row.data(), 4));
  for (std::size_t c = 0; c < 3; ++c) CHECK(std::abs(pa.probs[c] - pb.probs[c]) < 1e-5);
}

TEST_CASE("logistic rejects single-class training labels") {
  Eigen::MatrixXd x = Eigen::MatrixXd::Random(5, 2);
  const std::vector<int> y(5, 1);
  REQUIRE_ERROR_KIND(fit_logistic(x, y, 2), ErrorKind::precondition);
}

TEST_CASE("balanced bootstrap draws the minority count from every class") {
  std::vector<int> labels;
  for (int i = 0; i < 50; ++i) labels.push_back(0);
  for (int i = 0; i < 7; ++i) labels.push_back(1);
  for (int i = 0; i < 20; ++i) labels.push_back(3);
  Rng rng(3);
  const auto idx = balanced_bootstrap(labels, 4, rng);
  std::array<int, 4> count{};
  for (auto i : idx) ++count[static_cast<std::size_t>(labels[i])];
  CHECK(count == std::array<int, 4>{7, 7, 0, 7});
}

TEST_CASE("forest fits blobs, probabilities on the simplex, thread-independent") {
  Eigen::MatrixXd x;
  std::vector<int> y;
  blobs(30, 3, 6, 0.8, 4, x, y);
  ForestOptions opts;
  opts.n_trees = 25;
  opts.seed = 17;
  opts.threads = 1;
  const auto one = fit_forest(x, y, 3, opts);
  opts.threads = 3;
  const auto three = fit_forest(x, y, 3, opts);
  CHECK(train_accuracy([&](std::span<const double> r) { return predict_forest(one, r); }, x, y) > 0.95);
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const Eigen::VectorXd row = x.row(i);
    const std::span<const double> r(row.data(), 6);
    const auto a = predict_forest(one, r);
    CHECK(a.is_simplex());
    CHECK(a.probs == predict_forest(three, r).probs);
  }
}

TEST_CASE("forest with one point per class still splits") {
  Eigen::MatrixXd x(2, 1);
  x << 0.0, 1.0;
  const std::vector<int> y = {0, 1};
  ForestOptions opts;
  opts.n_trees = 5;
  const auto f = fit_forest(x, y, 2, opts);
  const std::vector<double> lo = {0.0}, hi = {1.0};
  CHECK(predict_forest(f, lo).probs[0] == 1.0);
  CHECK(predict_forest(f, hi).probs[1] == 1.0);
}

TEST_CASE("head checkpoints round trip for both kinds") {
  Eigen::MatrixXd x;
  std::vector<int> y;
  blobs(20, 2, 3, 1.0, 6, x, y);
  EmbeddingTable table;
  std::vector<Utterance> utts;
  std::vector<SpeakerRating> ratings;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const std::string id = "u" + std::to_string(i);
    table.insert(id, {{x(i, 0), x(i, 1), x(i, 2)}, EmbeddingSource::import_other, EmbeddingLevel::utterance});
    utts.push_back({id, "s" + std::to_string(i), 1, "x", "a.wav", 1.0});
    ratings.push_back({"s" + std::to_string(i), y[static_cast<std::size_t>(i)] == 0 ? 0 : 3});
  }
  const Manifest m(utts, ratings);
  std::vector<const Utterance*> train;
  for (const auto& u : m.utterances) train.push_back(&u);
  HeadTrainingOptions opts;
  opts.forest.n_trees = 10;
  for (auto kind : {HeadKind::logistic, HeadKind::forest}) {
    const auto head = fit_head(kind, table, m, train, TaskId::two_mild, opts);
    CHECK(head.kind() == kind);
    std::stringstream s;
    save_head(head, s);
    const auto back = load_head(s);
    CHECK(back.kind() == kind);
    CHECK(back.task == TaskId::two_mild);
    const auto& v = table.at("u3").vector;
    CHECK(back.predict(v).probs == head.predict(v).probs);
  }
  CHECK(parse_head("forest") == HeadKind::forest);
  REQUIRE_ERROR_KIND(parse_head("svm"), ErrorKind::config);
}
