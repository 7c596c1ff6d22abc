#pragma once

// Checks the bundled reference fixtures: count tables, the group-F1 identity,
// task maps, split rounding, exact AUC cases and the per-phrase report format.
// No model training is involved.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "igtk/core_data.hpp"
#include "igtk/error.hpp"
#include "igtk/metrics.hpp"
#include "igtk/report.hpp"

namespace igtk {

struct FixtureCheck {
  std::string fixture;
  std::string name;
  bool passed = false;
  std::string detail;
};

namespace fixture_detail {

inline nlohmann::json load(const std::filesystem::path& dir, const std::string& file) {
  const auto path = dir / file;
  std::ifstream in(path);
  require(in.good(), ErrorKind::integrity, "missing fixture file " + path.string());
  try {
    auto j = nlohmann::json::parse(in);
    require(j.contains("provenance"), ErrorKind::integrity,
            "fixture " + file + " carries no provenance");
    return j;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::parse, "fixture " + file + ": " + e.what());
  }
}

inline std::string fmt(double v) {
  std::ostringstream s;
  s.precision(6);
  s << v;
  return s.str();
}

inline void split_counts(const nlohmann::json& j, std::vector<FixtureCheck>& out) {
  const std::string f = "split_counts.json";
  const auto& tot = j.at("totals");
  std::size_t all_spk = 0, all_utt = 0;
  for (const char* split : {"TRAIN", "VAL", "TEST"}) {
    for (const char* what : {"speakers", "utterances"}) {
      std::size_t sum = 0;
      for (auto v : j.at(what).at(split)) sum += v.get<std::size_t>();
      const auto expect = tot.at(what).at(split).get<std::size_t>();
      out.push_back({f, std::string(what) + " " + split + " rows sum to total", sum == expect,
                     std::to_string(sum) + " vs " + std::to_string(expect)});
      (std::string(what) == "speakers" ? all_spk : all_utt) += sum;
    }
  }
  out.push_back({f, "speakers across splits", all_spk == tot.at("all_speakers").get<std::size_t>(), std::to_string(all_spk)});
  out.push_back({f, "utterances across splits", all_utt == tot.at("all_utterances").get<std::size_t>(), std::to_string(all_utt)});

  const auto ratios = j.at("target_ratios").get<std::vector<double>>();
  const double tol = j.at("ratio_tolerance").get<double>();
  const char* names[] = {"TRAIN", "VAL", "TEST"};
  for (std::size_t s = 0; s < 3; ++s) {
    const double share = tot.at("speakers").at(names[s]).get<double>() / static_cast<double>(all_spk);
    out.push_back({f, std::string("speaker share ") + names[s] + " within tolerance of target",
                   std::abs(share - ratios[s]) <= tol + 1e-12, fmt(share) + " vs " + fmt(ratios[s])});
  }
  const auto sizes = split_sizes(all_spk, {ratios[0], ratios[1], ratios[2]});
  bool ok = true;
  for (std::size_t s = 0; s < 3; ++s)
    ok = ok && std::abs(static_cast<double>(sizes[s]) / static_cast<double>(all_spk) - ratios[s]) <= tol;
  out.push_back({f, "split_sizes for the same speaker count within tolerance", ok,
                 std::to_string(sizes[0]) + "/" + std::to_string(sizes[1]) + "/" + std::to_string(sizes[2])});
}

inline void group_identity(const nlohmann::json& j, std::vector<FixtureCheck>& out) {
  const std::string f = "group_f1_identity.json";
  const double tol = j.at("tolerance").get<double>();
  for (const auto& row : j.at("rows")) {
    const double a = row.at("accuracy").get<double>();
    const double expect = row.at("f1").get<double>();
    // Build a homogeneous 1000-utterance positive group with accuracy a and
    // run it through the real group breakdown.
    const int n = 1000;
    const int correct = static_cast<int>(std::lround(a * n));
    std::vector<int> preds(n, 0), labels(n, 1), ratings(n, 2);
    for (int i = 0; i < correct; ++i) preds[static_cast<std::size_t>(i)] = 1;
    const double got = group_breakdown(preds, labels, ratings).at(2).f1;
    const double closed = homogeneous_group_f1(a);
    const bool ok = std::abs(got - expect) <= tol && std::abs(got - closed) <= 1e-12;
    out.push_back({f, row.at("group").get<std::string>() + " accuracy " + fmt(a) + " -> F1 " + fmt(expect), ok,
                   "computed " + fmt(got)});
  }
}

inline void task_mapping(const nlohmann::json& j, std::vector<FixtureCheck>& out) {
  for (const auto& [name, row] : j.at("mappings").items()) {
    const auto task = parse_task(name);
    bool ok = row.size() == kNumRatings;
    for (int r = 0; ok && r < kNumRatings; ++r) ok = map_task(r, task) == row.at(static_cast<std::size_t>(r)).get<int>();
    out.push_back({"task_mapping.json", name, ok, row.dump()});
  }
}

inline void split_size_cases(const nlohmann::json& j, std::vector<FixtureCheck>& out) {
  const auto r = j.at("ratios").get<std::vector<double>>();
  for (const auto& c : j.at("cases")) {
    const auto n = c.at("n").get<std::size_t>();
    const auto expect = c.at("sizes").get<std::vector<std::size_t>>();
    const auto got = split_sizes(n, {r[0], r[1], r[2]});
    const bool ok = got[0] == expect[0] && got[1] == expect[1] && got[2] == expect[2];
    out.push_back({"split_sizes.json", "N=" + std::to_string(n), ok,
                   std::to_string(got[0]) + "/" + std::to_string(got[1]) + "/" + std::to_string(got[2])});
  }
}

inline void auc_cases(const nlohmann::json& j, std::vector<FixtureCheck>& out) {
  for (const auto& c : j.at("cases")) {
    const auto scores = c.at("scores").get<std::vector<double>>();
    const auto labels = c.at("labels").get<std::vector<int>>();
    const double expect = c.at("expected_auc").at("numerator").get<double>() /
                          c.at("expected_auc").at("denominator").get<double>();
    const auto got = binary_auc(scores, labels);
    out.push_back({"auc_oracle.json", c.at("name").get<std::string>(), got.has_value() && *got == expect,
                   got ? fmt(*got) + " vs " + fmt(expect) : "not computable"});
  }
}

inline void phrase_metrics(const nlohmann::json& j, std::vector<FixtureCheck>& out) {
  const std::string f = "phrase_metrics.json";
  const auto& rows = j.at("per_phrase");
  bool in_range = true, ranked = true;
  double prev = 2.0, worst_sentence = 2.0, best_word = -1.0;
  for (const auto& r : rows) {
    for (const char* k : {"auc", "f1", "accuracy"}) {
      const double v = r.at(k).get<double>();
      in_range = in_range && v >= 0.0 && v <= 1.0;
    }
    const double auc = r.at("auc").get<double>();
    ranked = ranked && auc <= prev;
    prev = auc;
    if (r.at("kind") == "sentence") worst_sentence = std::min(worst_sentence, auc);
    else best_word = std::max(best_word, auc);
  }
  out.push_back({f, "metrics within [0,1]", in_range, ""});
  out.push_back({f, "entries ordered by AUC", ranked, ""});
  out.push_back({f, "every listed sentence outranks every listed word", worst_sentence > best_word,
                 fmt(worst_sentence) + " > " + fmt(best_word)});
}

}  // namespace fixture_detail

/// Runs every fixture check under `dir`; a missing file raises an integrity error.
inline std::vector<FixtureCheck> verify_fixtures(const std::filesystem::path& dir) {
  using namespace fixture_detail;
  std::vector<FixtureCheck> out;
  split_counts(load(dir, "split_counts.json"), out);
  group_identity(load(dir, "group_f1_identity.json"), out);
  task_mapping(load(dir, "task_mapping.json"), out);
  split_size_cases(load(dir, "split_sizes.json"), out);
  auc_cases(load(dir, "auc_oracle.json"), out);
  phrase_metrics(load(dir, "phrase_metrics.json"), out);
  return out;
}

}  // namespace igtk
