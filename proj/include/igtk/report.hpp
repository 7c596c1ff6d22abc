#pragma once

// Evaluation reports: overall metrics, per-intelligibility-group and
// per-phrase breakdowns, JSON serialization, and utterance-level prediction
// files.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "igtk/core_data.hpp"
#include "igtk/metrics.hpp"

namespace igtk {

struct UtterancePrediction {
  std::string utterance_id;
  std::string speaker_id;
  int phrase_id = 0;
  int rating = 0;  // original five-point rating
  int label = 0;   // rating mapped through the task
  int predicted = 0;
  ClassDistribution scores;
};

struct OverallMetrics {
  std::optional<double> mean_auc;
  double f1 = 0.0;
  double accuracy = 0.0;
};

struct GroupMetrics {
  double f1 = 0.0;
  double accuracy = 0.0;
  std::size_t count = 0;
};

struct PhraseMetrics {
  int phrase_id = 0;
  std::string phrase_text;
  std::optional<double> auc;
  double f1 = 0.0;
  double accuracy = 0.0;
  std::size_t count = 0;
};

struct EvalReport {
  TaskId task = TaskId::two_mild;
  int num_classes = 2;
  OverallMetrics overall;
  std::vector<std::optional<double>> per_class_auc;
  std::map<int, GroupMetrics> per_group;  // keyed by five-point rating; binary tasks only
  std::vector<PhraseMetrics> per_phrase;  // ranked by AUC, descending
  std::size_t num_utterances = 0;
  std::size_t num_speakers = 0;
  std::vector<std::size_t> class_counts;
  nlohmann::json config;
};

/// For each five-point rating group (homogeneous true label in a binary task)
/// the accuracy and the F1 of the group's own label as positive class.
/// Groups with no utterances are absent.
inline std::map<int, GroupMetrics> group_breakdown(std::span<const int> preds, std::span<const int> labels,
                                                   std::span<const int> ratings, int num_classes = 2) {
  require(preds.size() == labels.size() && preds.size() == ratings.size(), ErrorKind::shape,
          "predictions, labels and ratings differ in length");
  std::map<int, GroupMetrics> out;
  for (int r = 0; r < kNumRatings; ++r) {
    std::vector<int> gp, gl;
    for (std::size_t i = 0; i < preds.size(); ++i)
      if (ratings[i] == r) {
        gp.push_back(preds[i]);
        gl.push_back(labels[i]);
      }
    if (gp.empty()) continue;
    const int positive = gl.front();
    require(std::all_of(gl.begin(), gl.end(), [&](int l) { return l == positive; }), ErrorKind::integrity,
            "rating group " + std::to_string(r) + " has mixed task labels");
    const auto scores = per_class_scores(gp, gl, num_classes);
    out[r] = {scores[static_cast<std::size_t>(positive)].f1, accuracy(gp, gl), gp.size()};
  }
  return out;
}

/// Metrics on each phrase's utterances, ranked by AUC (phrases whose subset
/// holds a single class have no AUC and sort last).
inline std::vector<PhraseMetrics> phrase_breakdown(std::span<const int> preds, std::span<const ClassDistribution> scores,
                                                   std::span<const int> labels, std::span<const int> phrase_ids,
                                                   int num_classes) {
  require(preds.size() == scores.size() && preds.size() == labels.size() && preds.size() == phrase_ids.size(),
          ErrorKind::shape, "phrase breakdown inputs differ in length");
  std::map<int, std::vector<std::size_t>> by_phrase;
  for (std::size_t i = 0; i < preds.size(); ++i) by_phrase[phrase_ids[i]].push_back(i);
  std::vector<PhraseMetrics> out;
  for (const auto& [pid, idx] : by_phrase) {
    std::vector<int> p, l;
    std::vector<ClassDistribution> s;
    for (auto i : idx) {
      p.push_back(preds[i]);
      l.push_back(labels[i]);
      s.push_back(scores[i]);
    }
    PhraseMetrics m;
    m.phrase_id = pid;
    m.count = idx.size();
    m.accuracy = accuracy(p, l);
    m.f1 = f1_weighted(p, l, num_classes);
    try {
      m.auc = auc_ovr(s, l).mean;
    } catch (const Error&) {
      m.auc.reset();
    }
    out.push_back(std::move(m));
  }
  std::stable_sort(out.begin(), out.end(), [](const PhraseMetrics& a, const PhraseMetrics& b) {
    if (a.auc.has_value() != b.auc.has_value()) return a.auc.has_value();
    return a.auc.value_or(0.0) > b.auc.value_or(0.0);
  });
  return out;
}

inline EvalReport evaluate_predictions(std::span<const UtterancePrediction> preds, TaskId task,
                                       const std::map<int, std::string>& phrase_texts = {}) {
  require(!preds.empty(), ErrorKind::evaluation, "no predictions to evaluate");
  EvalReport r;
  r.task = task;
  r.num_classes = task_spec(task).num_classes;
  std::vector<int> p, l, ratings, phrases;
  std::vector<ClassDistribution> s;
  std::set<std::string> speakers;
  r.class_counts.assign(static_cast<std::size_t>(r.num_classes), 0);
  for (const auto& u : preds) {
    require(static_cast<int>(u.scores.num_classes()) == r.num_classes, ErrorKind::shape,
            "prediction for '" + u.utterance_id + "' has the wrong class count");
    p.push_back(u.predicted);
    l.push_back(u.label);
    ratings.push_back(u.rating);
    phrases.push_back(u.phrase_id);
    s.push_back(u.scores);
    speakers.insert(u.speaker_id);
    ++r.class_counts.at(static_cast<std::size_t>(u.label));
  }
  r.num_utterances = preds.size();
  r.num_speakers = speakers.size();
  r.overall.accuracy = accuracy(p, l);
  r.overall.f1 = f1_weighted(p, l, r.num_classes);
  try {
    const auto auc = auc_ovr(s, l);
    r.overall.mean_auc = auc.mean;
    r.per_class_auc = auc.per_class;
  } catch (const Error&) {
    r.per_class_auc.assign(static_cast<std::size_t>(r.num_classes), std::nullopt);
  }
  if (r.num_classes == 2) r.per_group = group_breakdown(p, l, ratings, r.num_classes);
  r.per_phrase = phrase_breakdown(p, s, l, phrases, r.num_classes);
  for (auto& m : r.per_phrase) {
    const auto it = phrase_texts.find(m.phrase_id);
    if (it != phrase_texts.end()) m.phrase_text = it->second;
  }
  return r;
}

namespace detail {

inline nlohmann::json opt_json(const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); }

}  // namespace detail

inline nlohmann::json to_json(const EvalReport& r) {
  nlohmann::json j;
  j["task_id"] = task_name(r.task);
  j["num_classes"] = r.num_classes;
  j["overall"] = {{"mean_auc", detail::opt_json(r.overall.mean_auc)}, {"f1", r.overall.f1}, {"accuracy", r.overall.accuracy}};
  j["per_class_auc"] = nlohmann::json::array();
  for (const auto& a : r.per_class_auc) j["per_class_auc"].push_back(detail::opt_json(a));
  j["per_group"] = nlohmann::json::object();
  for (const auto& [rating, g] : r.per_group)
    j["per_group"][std::string(kRatingNames[static_cast<std::size_t>(rating)])] = {
        {"rating", rating}, {"f1", g.f1}, {"accuracy", g.accuracy}, {"count", g.count}};
  j["per_phrase"] = nlohmann::json::array();
  for (const auto& m : r.per_phrase)
    j["per_phrase"].push_back({{"phrase_id", m.phrase_id},
                               {"phrase_text", m.phrase_text},
                               {"auc", detail::opt_json(m.auc)},
                               {"f1", m.f1},
                               {"accuracy", m.accuracy},
                               {"count", m.count}});
  j["counts"] = {{"utterances", r.num_utterances}, {"speakers", r.num_speakers}, {"per_class", r.class_counts}};
  if (!r.config.is_null()) j["config"] = r.config;
  return j;
}

// ---------------------------------------------------------------------------
// Prediction files: JSON lines {"utterance_id","speaker_id","phrase_id",
// "rating","label","predicted","scores":[...]}.

inline void write_predictions(std::span<const UtterancePrediction> preds, const std::filesystem::path& path) {
  std::ofstream out(path);
  require(out.good(), ErrorKind::io, "cannot write " + path.string());
  for (const auto& u : preds)
    out << nlohmann::json{{"utterance_id", u.utterance_id}, {"speaker_id", u.speaker_id}, {"phrase_id", u.phrase_id},
                          {"rating", u.rating},             {"label", u.label},           {"predicted", u.predicted},
                          {"scores", u.scores.probs}}
               .dump()
        << '\n';
}

inline std::vector<UtterancePrediction> parse_predictions(std::istream& in) {
  std::vector<UtterancePrediction> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      UtterancePrediction u;
      u.utterance_id = j.at("utterance_id").get<std::string>();
      u.speaker_id = j.value("speaker_id", std::string{});
      u.phrase_id = j.value("phrase_id", 0);
      u.rating = j.at("rating").get<int>();
      u.label = j.at("label").get<int>();
      u.predicted = j.at("predicted").get<int>();
      u.scores.probs = j.at("scores").get<std::vector<double>>();
      out.push_back(std::move(u));
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorKind::parse, "line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

inline std::vector<UtterancePrediction> load_predictions(const std::filesystem::path& path) {
  std::ifstream in(path);
  require(in.good(), ErrorKind::io, "cannot open " + path.string());
  return parse_predictions(in);
}

}  // namespace igtk
