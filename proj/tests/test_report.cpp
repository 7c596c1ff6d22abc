#include <sstream>

#include "igtk/random.hpp"
#include "igtk/report.hpp"
#include "test_util.hpp"

using namespace igtk;

namespace {

std::vector<UtterancePrediction> random_predictions(std::size_t n, TaskId task, std::uint64_t seed) {
  Rng rng(seed);
  const int k = task_spec(task).num_classes;
  std::vector<UtterancePrediction> out;
  for (std::size_t i = 0; i < n; ++i) {
    UtterancePrediction p;
    p.utterance_id = "u" + std::to_string(i);
    p.speaker_id = "s" + std::to_string(i % 17);
    p.phrase_id = 1 + static_cast<int>(i % 4);
    p.rating = static_cast<int>(uniform_index(rng, 5));
    p.label = map_task(p.rating, task);
    std::vector<double> s(static_cast<std::size_t>(k));
    double sum = 0.0;
    for (auto& v : s) sum += v = uniform01(rng) + (&v - s.data() == p.label ? 0.5 : 0.0);
    for (auto& v : s) v /= sum;
    p.scores = {s};
    p.predicted = argmax(s);
    out.push_back(std::move(p));
  }
  return out;
}

}  // namespace

TEST_CASE("group breakdown reproduces 2a/(1+a) for each rating group") {
  const auto preds = random_predictions(400, TaskId::two_mild, 3);
  const auto r = evaluate_predictions(preds, TaskId::two_mild);
  REQUIRE(r.per_group.size() == 5);
  for (const auto& [rating, g] : r.per_group) {
    CHECK(std::abs(g.f1 - homogeneous_group_f1(g.accuracy)) <= 1e-12);
    CHECK(g.count > 0);
  }
}

TEST_CASE("empty groups are absent rather than zero") {
  auto preds = random_predictions(100, TaskId::two_modr, 4);
  preds.erase(std::remove_if(preds.begin(), preds.end(), [](const auto& p) { return p.rating == 4; }), preds.end());
  const auto r = evaluate_predictions(preds, TaskId::two_modr);
  CHECK(r.per_group.count(4) == 0);
  CHECK(r.per_group.count(0) == 1);
}

TEST_CASE("groups only for binary tasks") {
  const auto r = evaluate_predictions(random_predictions(100, TaskId::five_class, 5), TaskId::five_class);
  CHECK(r.per_group.empty());
  CHECK(r.per_class_auc.size() == 5);
  CHECK(r.overall.mean_auc.has_value());
}

TEST_CASE("phrase breakdown ranks by AUC and omits AUC for one-class phrases") {
  auto preds = random_predictions(200, TaskId::two_mild, 6);
  for (auto& p : preds)
    if (p.phrase_id == 4) {
      p.rating = 2;
      p.label = 1;
    }
  const auto r = evaluate_predictions(preds, TaskId::two_mild, {{1, "one"}, {4, "four"}});
  REQUIRE(r.per_phrase.size() == 4);
  CHECK_FALSE(r.per_phrase.back().auc.has_value());
  CHECK(r.per_phrase.back().phrase_id == 4);
  CHECK(r.per_phrase.back().phrase_text == "four");
  for (std::size_t i = 1; i + 1 < r.per_phrase.size(); ++i) CHECK(*r.per_phrase[i - 1].auc >= *r.per_phrase[i].auc);
  for (const auto& m : r.per_phrase) {
    CHECK(m.accuracy >= 0.0);
    CHECK(m.accuracy <= 1.0);
  }
}

TEST_CASE("report JSON carries every field") {
  auto r = evaluate_predictions(random_predictions(80, TaskId::two_mild, 7), TaskId::two_mild);
  r.config = {{"seed", 1}};
  const auto j = to_json(r);
  for (const char* key : {"task_id", "overall", "per_class_auc", "per_group", "per_phrase", "counts", "config"})
    CHECK(j.contains(key));
  CHECK(j["task_id"] == "TWO_MILD");
  CHECK(j["overall"].contains("mean_auc"));
  CHECK(j["counts"]["utterances"] == 80);
}

TEST_CASE("prediction files round trip") {
  const auto preds = random_predictions(30, TaskId::three_class, 8);
  TempDir dir("preds");
  write_predictions(preds, dir.path() / "p.jsonl");
  const auto back = load_predictions(dir.path() / "p.jsonl");
  REQUIRE(back.size() == preds.size());
  CHECK(back[5].scores.probs == preds[5].scores.probs);
  CHECK(back[5].rating == preds[5].rating);
  REQUIRE_ERROR_KIND(evaluate_predictions(std::vector<UtterancePrediction>{}, TaskId::two_mild), ErrorKind::evaluation);
}
