#pragma once

// Dataset manifests, intelligibility ratings, task mappings and
// speaker-disjoint splits.

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "igtk/error.hpp"
#include "igtk/random.hpp"

namespace igtk {

inline constexpr int kNumRatings = 5;

enum class Rating : int { typical = 0, mild = 1, moderate = 2, severe = 3, profound = 4 };

inline constexpr std::array<std::string_view, kNumRatings> kRatingNames = {
    "typical", "mild", "moderate", "severe", "profound"};

struct Utterance {
  std::string utterance_id;
  std::string speaker_id;
  int phrase_id = 0;
  std::string phrase_text;
  std::filesystem::path audio_path;
  std::optional<double> duration;  // seconds; absent when the manifest omits it
};

struct SpeakerRating {
  std::string speaker_id;
  int intelligibility = 0;
};

// ---------------------------------------------------------------------------
// Tasks

enum class TaskId { five_class, three_class, two_modr, two_mild };

inline constexpr std::array<TaskId, 4> kAllTasks = {TaskId::five_class, TaskId::three_class,
                                                    TaskId::two_modr, TaskId::two_mild};

struct TaskSpec {
  TaskId id;
  std::array<int, kNumRatings> mapping;
  int num_classes;

  int operator()(int rating) const {
    require(rating >= 0 && rating < kNumRatings, ErrorKind::domain,
            "rating " + std::to_string(rating) + " outside 0..4");
    return mapping[static_cast<std::size_t>(rating)];
  }
};

inline TaskSpec task_spec(TaskId id) {
  switch (id) {
    case TaskId::five_class: return {id, {0, 1, 2, 3, 4}, 5};
    case TaskId::three_class: return {id, {0, 1, 2, 2, 2}, 3};
    case TaskId::two_modr: return {id, {0, 0, 1, 1, 1}, 2};
    case TaskId::two_mild: return {id, {0, 1, 1, 1, 1}, 2};
  }
  fail(ErrorKind::config, "unknown task");
}

inline int map_task(int rating, TaskId task) { return task_spec(task)(rating); }

inline std::string_view task_name(TaskId id) {
  switch (id) {
    case TaskId::five_class: return "FIVE_CLASS";
    case TaskId::three_class: return "THREE_CLASS";
    case TaskId::two_modr: return "TWO_MODR";
    case TaskId::two_mild: return "TWO_MILD";
  }
  return "?";
}

/// Accepts the canonical upper-case names and the lower/kebab CLI spellings
/// ("two-mild", "two_mild", "5", ...).
inline TaskId parse_task(std::string_view text) {
  std::string s;
  for (char c : text) s.push_back(c == '-' ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
  if (s == "FIVE_CLASS" || s == "5" || s == "5_CLASS") return TaskId::five_class;
  if (s == "THREE_CLASS" || s == "3" || s == "3_CLASS") return TaskId::three_class;
  if (s == "TWO_MODR" || s == "MODR+" || s == "MODR") return TaskId::two_modr;
  if (s == "TWO_MILD" || s == "MILD+" || s == "MILD") return TaskId::two_mild;
  fail(ErrorKind::config, "unknown task '" + std::string(text) + "'");
}

// ---------------------------------------------------------------------------
// Manifest

class Manifest {
 public:
  std::vector<Utterance> utterances;
  std::vector<SpeakerRating> ratings;

  Manifest() = default;
  Manifest(std::vector<Utterance> utts, std::vector<SpeakerRating> rts)
      : utterances(std::move(utts)), ratings(std::move(rts)) {
    index();
  }

  int rating_of(const std::string& speaker_id) const {
    const auto it = rating_index_.find(speaker_id);
    require(it != rating_index_.end(), ErrorKind::integrity, "speaker '" + speaker_id + "' has no rating");
    return it->second;
  }

  bool has_rating(const std::string& speaker_id) const { return rating_index_.count(speaker_id) != 0; }

  const Utterance& utterance(const std::string& utterance_id) const {
    const auto it = utterance_index_.find(utterance_id);
    require(it != utterance_index_.end(), ErrorKind::integrity, "unknown utterance '" + utterance_id + "'");
    return utterances[it->second];
  }

  bool contains(const std::string& utterance_id) const { return utterance_index_.count(utterance_id) != 0; }

  int label(const Utterance& u, TaskId task) const { return map_task(rating_of(u.speaker_id), task); }

  std::vector<std::string> speakers() const {
    std::vector<std::string> out;
    out.reserve(ratings.size());
    for (const auto& r : ratings) out.push_back(r.speaker_id);
    std::sort(out.begin(), out.end());
    return out;
  }

  /// Checks every cross-reference; throws on the first violation.
  void validate() const {
    std::set<std::string> seen_speakers;
    for (const auto& r : ratings) {
      require(r.intelligibility >= 0 && r.intelligibility < kNumRatings, ErrorKind::integrity,
              "speaker '" + r.speaker_id + "' has rating outside 0..4");
      require(seen_speakers.insert(r.speaker_id).second, ErrorKind::integrity,
              "speaker '" + r.speaker_id + "' rated more than once");
    }
    std::set<std::string> seen_utts;
    std::map<int, std::string> phrase_text;
    for (const auto& u : utterances) {
      require(seen_utts.insert(u.utterance_id).second, ErrorKind::integrity,
              "duplicate utterance_id '" + u.utterance_id + "'");
      require(seen_speakers.count(u.speaker_id) != 0, ErrorKind::integrity,
              "utterance '" + u.utterance_id + "' cites unrated speaker '" + u.speaker_id + "'");
      require(u.phrase_id >= 1, ErrorKind::integrity,
              "utterance '" + u.utterance_id + "' has phrase_id < 1");
      require(!u.duration || *u.duration > 0.0, ErrorKind::integrity,
              "utterance '" + u.utterance_id + "' has non-positive duration");
      auto [it, inserted] = phrase_text.emplace(u.phrase_id, u.phrase_text);
      require(inserted || it->second == u.phrase_text, ErrorKind::integrity,
              "phrase_id " + std::to_string(u.phrase_id) + " carries two different texts");
    }
  }

  void index() {
    rating_index_.clear();
    utterance_index_.clear();
    for (const auto& r : ratings) rating_index_[r.speaker_id] = r.intelligibility;
    for (std::size_t i = 0; i < utterances.size(); ++i) utterance_index_[utterances[i].utterance_id] = i;
  }

 private:
  std::unordered_map<std::string, int> rating_index_;
  std::unordered_map<std::string, std::size_t> utterance_index_;
};

namespace detail {

template <typename T>
T json_field(const nlohmann::json& j, const char* key, std::size_t line) {
  const auto it = j.find(key);
  require(it != j.end(), ErrorKind::parse, "line " + std::to_string(line) + ": missing field '" + key + "'");
  try {
    return it->get<T>();
  } catch (const nlohmann::json::exception&) {
    fail(ErrorKind::parse, "line " + std::to_string(line) + ": field '" + key + "' has the wrong type");
  }
}

}  // namespace detail

/// Reads a JSON-lines manifest holding "utterance" and "rating" records.
/// Relative audio paths are resolved against the manifest's directory.
inline Manifest parse_manifest(std::istream& in, const std::filesystem::path& base_dir = {}) {
  std::vector<Utterance> utts;
  std::vector<SpeakerRating> ratings;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      fail(ErrorKind::parse, "line " + std::to_string(lineno) + ": " + e.what());
    }
    require(j.is_object(), ErrorKind::parse, "line " + std::to_string(lineno) + ": expected a JSON object");
    const auto kind = detail::json_field<std::string>(j, "kind", lineno);
    if (kind == "utterance") {
      Utterance u;
      u.utterance_id = detail::json_field<std::string>(j, "utterance_id", lineno);
      u.speaker_id = detail::json_field<std::string>(j, "speaker_id", lineno);
      u.phrase_id = detail::json_field<int>(j, "phrase_id", lineno);
      u.phrase_text = detail::json_field<std::string>(j, "phrase_text", lineno);
      std::filesystem::path p = detail::json_field<std::string>(j, "audio_path", lineno);
      u.audio_path = (p.is_relative() && !base_dir.empty()) ? base_dir / p : p;
      if (j.contains("duration")) u.duration = detail::json_field<double>(j, "duration", lineno);
      utts.push_back(std::move(u));
    } else if (kind == "rating") {
      SpeakerRating r;
      r.speaker_id = detail::json_field<std::string>(j, "speaker_id", lineno);
      r.intelligibility = detail::json_field<int>(j, "intelligibility", lineno);
      ratings.push_back(std::move(r));
    } else {
      fail(ErrorKind::parse, "line " + std::to_string(lineno) + ": unknown record kind '" + kind + "'");
    }
  }
  Manifest m(std::move(utts), std::move(ratings));
  m.validate();
  return m;
}

inline Manifest load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  require(in.good(), ErrorKind::io, "cannot open manifest " + path.string());
  return parse_manifest(in, path.parent_path());
}

/// Ratings first, then utterances; audio paths are written relative to
/// `base_dir` when they live beneath it.
inline void write_manifest(const Manifest& m, const std::filesystem::path& path) {
  std::ofstream out(path);
  require(out.good(), ErrorKind::io, "cannot write manifest " + path.string());
  const auto base = path.parent_path();
  for (const auto& r : m.ratings) {
    out << nlohmann::json{{"kind", "rating"}, {"speaker_id", r.speaker_id}, {"intelligibility", r.intelligibility}}.dump()
        << '\n';
  }
  for (const auto& u : m.utterances) {
    auto rel = u.audio_path;
    if (!base.empty()) {
      auto candidate = u.audio_path.lexically_relative(base);
      if (!candidate.empty() && *candidate.begin() != "..") rel = candidate;
    }
    nlohmann::json j{{"kind", "utterance"},   {"utterance_id", u.utterance_id}, {"speaker_id", u.speaker_id},
                     {"phrase_id", u.phrase_id}, {"phrase_text", u.phrase_text},   {"audio_path", rel.generic_string()}};
    if (u.duration) j["duration"] = *u.duration;
    out << j.dump() << '\n';
  }
}

// ---------------------------------------------------------------------------
// Splits

enum class Split { train = 0, val = 1, test = 2 };

inline std::string_view split_name(Split s) {
  switch (s) {
    case Split::train: return "train";
    case Split::val: return "val";
    case Split::test: return "test";
  }
  return "?";
}

inline Split parse_split(std::string_view s) {
  if (s == "train" || s == "TRAIN") return Split::train;
  if (s == "val" || s == "VAL") return Split::val;
  if (s == "test" || s == "TEST") return Split::test;
  fail(ErrorKind::parse, "unknown split '" + std::string(s) + "'");
}

struct SplitAssignment {
  std::map<std::string, Split> by_speaker;
  std::uint64_t seed = 0;

  Split of(const std::string& speaker_id) const {
    const auto it = by_speaker.find(speaker_id);
    require(it != by_speaker.end(), ErrorKind::integrity, "speaker '" + speaker_id + "' missing from split");
    return it->second;
  }

  std::array<std::size_t, 3> counts() const {
    std::array<std::size_t, 3> c{};
    for (const auto& [_, s] : by_speaker) ++c[static_cast<std::size_t>(s)];
    return c;
  }

  bool operator==(const SplitAssignment& o) const { return by_speaker == o.by_speaker; }
};

using SplitRatios = std::array<double, 3>;
inline constexpr SplitRatios kDefaultRatios = {0.70, 0.15, 0.15};

/// Target speaker counts: round(train), round(val), remainder to test.
inline std::array<std::size_t, 3> split_sizes(std::size_t n, const SplitRatios& ratios) {
  const double sum = ratios[0] + ratios[1] + ratios[2];
  require(std::abs(sum - 1.0) <= 1e-9, ErrorKind::config, "split ratios must sum to 1");
  for (double r : ratios) require(r >= 0.0, ErrorKind::config, "split ratios must be nonnegative");
  const auto n_train = static_cast<std::size_t>(std::llround(ratios[0] * static_cast<double>(n)));
  const auto n_val = std::min(n - std::min(n, n_train),
                              static_cast<std::size_t>(std::llround(ratios[1] * static_cast<double>(n))));
  return {std::min(n, n_train), n_val, n - std::min(n, n_train) - n_val};
}

/// Seeded speaker-level partition. With `stratify_by` set, speakers are
/// shuffled within each rating and dealt so every rating is spread across the
/// splits while the global counts stay identical to the pure random mode.
inline SplitAssignment split_speakers(std::vector<std::string> speakers, const SplitRatios& ratios,
                                      std::uint64_t seed, const Manifest* stratify_by = nullptr) {
  std::sort(speakers.begin(), speakers.end());
  speakers.erase(std::unique(speakers.begin(), speakers.end()), speakers.end());
  const auto sizes = split_sizes(speakers.size(), ratios);
  require(speakers.size() >= 3, ErrorKind::precondition, "need at least 3 speakers to split");

  Rng rng(derive_seed(seed, "split"));
  shuffle(speakers.begin(), speakers.end(), rng);

  SplitAssignment out;
  out.seed = seed;
  if (stratify_by == nullptr) {
    for (std::size_t i = 0; i < speakers.size(); ++i) {
      const Split s = i < sizes[0] ? Split::train : (i < sizes[0] + sizes[1] ? Split::val : Split::test);
      out.by_speaker[speakers[i]] = s;
    }
    return out;
  }

  std::stable_sort(speakers.begin(), speakers.end(), [&](const std::string& a, const std::string& b) {
    return stratify_by->rating_of(a) < stratify_by->rating_of(b);
  });
  // Deal along the rating-ordered list, always to the split furthest behind
  // its pro-rata quota.
  const double n = static_cast<double>(speakers.size());
  std::array<std::size_t, 3> given{};
  for (std::size_t i = 0; i < speakers.size(); ++i) {
    std::size_t best = 0;
    double best_deficit = -1e300;
    for (std::size_t s = 0; s < 3; ++s) {
      if (given[s] >= sizes[s]) continue;
      const double deficit = static_cast<double>(i + 1) * static_cast<double>(sizes[s]) / n - static_cast<double>(given[s]);
      if (deficit > best_deficit) {
        best_deficit = deficit;
        best = s;
      }
    }
    ++given[best];
    out.by_speaker[speakers[i]] = static_cast<Split>(best);
  }
  return out;
}

inline void write_split(const SplitAssignment& split, const std::filesystem::path& path) {
  std::ofstream out(path);
  require(out.good(), ErrorKind::io, "cannot write split file " + path.string());
  for (const auto& [spk, s] : split.by_speaker)
    out << nlohmann::json{{"speaker_id", spk}, {"split", split_name(s)}}.dump() << '\n';
}

inline SplitAssignment load_split(const std::filesystem::path& path) {
  std::ifstream in(path);
  require(in.good(), ErrorKind::io, "cannot open split file " + path.string());
  SplitAssignment out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      fail(ErrorKind::parse, "line " + std::to_string(lineno) + ": " + e.what());
    }
    const auto spk = detail::json_field<std::string>(j, "speaker_id", lineno);
    const auto s = parse_split(detail::json_field<std::string>(j, "split", lineno));
    require(out.by_speaker.emplace(spk, s).second, ErrorKind::integrity,
            "speaker '" + spk + "' assigned to more than one split");
  }
  return out;
}

/// Utterances of the manifest that fall in `which`.
inline std::vector<const Utterance*> utterances_in(const Manifest& m, const SplitAssignment& split, Split which) {
  std::vector<const Utterance*> out;
  for (const auto& u : m.utterances)
    if (split.of(u.speaker_id) == which) out.push_back(&u);
  return out;
}

}  // namespace igtk
