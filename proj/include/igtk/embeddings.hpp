#pragma once

// Per-utterance embedding vectors: time-average pooling, the built-in
// mel-statistics reference embedder and the JSON-lines import/export format
// for externally computed representations.

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "igtk/error.hpp"
#include "igtk/log_mel.hpp"

namespace igtk {

enum class EmbeddingSource { mel_stats, import_trill, import_trill_distilled, import_asr_enc, import_other };

inline std::string_view source_name(EmbeddingSource s) {
  switch (s) {
    case EmbeddingSource::mel_stats: return "MEL_STATS";
    case EmbeddingSource::import_trill: return "IMPORT_TRILL";
    case EmbeddingSource::import_trill_distilled: return "IMPORT_TRILL_DISTILLED";
    case EmbeddingSource::import_asr_enc: return "IMPORT_ASR_ENC";
    case EmbeddingSource::import_other: return "IMPORT_OTHER";
  }
  return "?";
}

inline EmbeddingSource parse_source(std::string_view s) {
  for (auto v : {EmbeddingSource::mel_stats, EmbeddingSource::import_trill, EmbeddingSource::import_trill_distilled,
                 EmbeddingSource::import_asr_enc, EmbeddingSource::import_other})
    if (source_name(v) == s) return v;
  fail(ErrorKind::format, "unknown embedding source '" + std::string(s) + "'");
}

/// Known dimensionalities: TRILL layer 19 (12288), TRILL-distilled (2048),
/// ASR encoder (640). Anything else is IMPORT_OTHER.
inline EmbeddingSource source_for_dim(std::size_t dim) {
  switch (dim) {
    case 12288: return EmbeddingSource::import_trill;
    case 2048: return EmbeddingSource::import_trill_distilled;
    case 640: return EmbeddingSource::import_asr_enc;
    default: return EmbeddingSource::import_other;
  }
}

inline constexpr std::size_t kMelStatsDim = 256;

enum class EmbeddingLevel { segment, utterance };

struct Embedding {
  std::vector<double> vector;
  EmbeddingSource source = EmbeddingSource::import_other;
  EmbeddingLevel level = EmbeddingLevel::utterance;

  std::size_t dim() const { return vector.size(); }
};

/// Element-wise mean over time.
inline std::vector<double> pool_time_average(std::span<const std::vector<double>> vectors) {
  require(!vectors.empty(), ErrorKind::precondition, "cannot pool an empty list");
  const std::size_t d = vectors.front().size();
  std::vector<double> sum(d, 0.0);
  for (const auto& v : vectors) {
    require(v.size() == d, ErrorKind::shape, "ragged vectors: " + std::to_string(v.size()) + " vs " + std::to_string(d));
    for (std::size_t i = 0; i < d; ++i) sum[i] += v[i];
  }
  for (auto& s : sum) s /= static_cast<double>(vectors.size());
  return sum;
}

namespace detail {

// Column-wise mean and population standard deviation of a rows x cols block.
inline void column_mean_std(std::span<const float> values, std::size_t rows, std::size_t cols, double* mean_out,
                            double* std_out) {
  for (std::size_t b = 0; b < cols; ++b) {
    double mean = 0.0;
    for (std::size_t t = 0; t < rows; ++t) mean += values[t * cols + b];
    mean /= static_cast<double>(rows);
    double var = 0.0;
    for (std::size_t t = 0; t < rows; ++t) {
      const double d = values[t * cols + b] - mean;
      var += d * d;
    }
    mean_out[b] = mean;
    std_out[b] = std::sqrt(var / static_cast<double>(rows));
  }
}

}  // namespace detail

/// 256-d statistics of a block of 64-bin log-mel frames: per-bin mean and
/// standard deviation, then mean and standard deviation of the frame-to-frame
/// deltas. Layout: [mean(64) | std(64) | delta mean(64) | delta std(64)].
inline std::vector<double> mel_stats(std::span<const float> frames, std::size_t num_frames, std::size_t num_bins = kPatchBins) {
  require(num_bins == kPatchBins, ErrorKind::shape, "mel statistics need 64-bin frames");
  require(num_frames >= 1 && frames.size() == num_frames * num_bins, ErrorKind::shape, "frame block has wrong size");
  std::vector<double> out(kMelStatsDim, 0.0);
  detail::column_mean_std(frames, num_frames, num_bins, out.data(), out.data() + num_bins);
  if (num_frames > 1) {
    std::vector<float> deltas((num_frames - 1) * num_bins);
    for (std::size_t t = 0; t + 1 < num_frames; ++t)
      for (std::size_t b = 0; b < num_bins; ++b)
        deltas[t * num_bins + b] = frames[(t + 1) * num_bins + b] - frames[t * num_bins + b];
    detail::column_mean_std(deltas, num_frames - 1, num_bins, out.data() + 2 * num_bins, out.data() + 3 * num_bins);
  }
  return out;
}

inline std::vector<double> mel_stats_embed(const LogMelPatch& patch) {
  return mel_stats(patch.values, kPatchFrames);
}

/// Statistics of one 16 kHz segment's own frames (no padding).
inline std::vector<double> mel_stats_embed(const Waveform& segment) {
  const auto frames = log_mel(segment, FrontendVariant::cnn);
  return mel_stats(frames.values, frames.num_frames);
}

/// Utterance-level reference embedding: mel statistics of every 96-frame
/// patch, time-averaged. Returns the per-segment vectors in `segments` when
/// asked.
inline Embedding embed_utterance_mel_stats(const LogMelFrames& frames,
                                           std::vector<std::vector<double>>* segments = nullptr) {
  std::vector<std::vector<double>> per_patch;
  for (const auto& p : make_patches(frames)) per_patch.push_back(mel_stats_embed(p));
  Embedding e{pool_time_average(per_patch), EmbeddingSource::mel_stats, EmbeddingLevel::utterance};
  if (segments) *segments = std::move(per_patch);
  return e;
}

// ---------------------------------------------------------------------------

class EmbeddingTable {
 public:
  EmbeddingSource source = EmbeddingSource::import_other;

  std::size_t dim() const { return dim_; }
  std::size_t size() const { return rows_.size(); }
  bool empty() const { return rows_.empty(); }

  void insert(const std::string& utterance_id, Embedding e) {
    require(!e.vector.empty(), ErrorKind::format, "empty embedding for '" + utterance_id + "'");
    if (rows_.empty()) dim_ = e.dim();
    require(e.dim() == dim_, ErrorKind::format,
            "embedding for '" + utterance_id + "' has dim " + std::to_string(e.dim()) + ", table has " + std::to_string(dim_));
    for (double v : e.vector) require(std::isfinite(v), ErrorKind::numeric, "non-finite embedding for '" + utterance_id + "'");
    e.level = EmbeddingLevel::utterance;
    require(rows_.emplace(utterance_id, std::move(e)).second, ErrorKind::format,
            "duplicate embedding for '" + utterance_id + "'");
  }

  const Embedding& at(const std::string& utterance_id) const {
    const auto it = rows_.find(utterance_id);
    require(it != rows_.end(), ErrorKind::integrity, "no embedding for utterance '" + utterance_id + "'");
    return it->second;
  }

  bool contains(const std::string& utterance_id) const { return rows_.count(utterance_id) != 0; }

  const std::map<std::string, Embedding>& rows() const { return rows_; }

 private:
  std::size_t dim_ = 0;
  std::map<std::string, Embedding> rows_;
};

/// Reads {"utterance_id","dim","vector":[...]} or {"utterance_id","dim",
/// "segments":[[...],...]} lines; segment lists are pooled on load. An
/// optional "source" names the embedder, otherwise it is guessed from dim.
inline EmbeddingTable parse_embeddings(std::istream& in, std::optional<std::size_t> expected_dim = std::nullopt) {
  EmbeddingTable table;
  std::string line;
  std::size_t lineno = 0;
  auto where = [&] { return "line " + std::to_string(lineno) + ": "; };
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      fail(ErrorKind::format, where() + e.what());
    }
    require(j.is_object() && j.contains("utterance_id") && j.contains("dim"), ErrorKind::format,
            where() + "expected utterance_id and dim");
    std::string id;
    std::optional<EmbeddingSource> tagged;
    std::size_t dim = 0;
    std::vector<double> vec;
    std::vector<std::vector<double>> segs;
    try {
      id = j.at("utterance_id").get<std::string>();
      dim = j.at("dim").get<std::size_t>();
      if (j.contains("source")) tagged = parse_source(j.at("source").get<std::string>());
      if (j.contains("vector")) vec = j.at("vector").get<std::vector<double>>();
      else if (j.contains("segments")) segs = j.at("segments").get<std::vector<std::vector<double>>>();
      else fail(ErrorKind::format, where() + "needs \"vector\" or \"segments\"");
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorKind::format, where() + e.what());
    }
    if (!segs.empty()) {
      for (const auto& s : segs)
        require(s.size() == dim, ErrorKind::format, where() + "segment length " + std::to_string(s.size()) +
                                                        " does not match declared dim " + std::to_string(dim));
      vec = pool_time_average(segs);
    }
    require(vec.size() == dim, ErrorKind::format, where() + "vector length " + std::to_string(vec.size()) +
                                                      " does not match declared dim " + std::to_string(dim));
    if (expected_dim)
      require(dim == *expected_dim, ErrorKind::format,
              where() + "dim " + std::to_string(dim) + " but " + std::to_string(*expected_dim) + " expected");
    if (table.empty()) table.source = tagged.value_or(source_for_dim(dim));
    table.insert(id, {std::move(vec), table.source, EmbeddingLevel::utterance});
  }
  return table;
}

inline EmbeddingTable import_embeddings(const std::filesystem::path& path, std::optional<std::size_t> expected_dim = std::nullopt) {
  std::ifstream in(path);
  require(in.good(), ErrorKind::io, "cannot open embedding file " + path.string());
  return parse_embeddings(in, expected_dim);
}

inline void write_embeddings(const EmbeddingTable& table, std::ostream& out) {
  for (const auto& [id, e] : table.rows())
    out << nlohmann::json{{"utterance_id", id}, {"dim", e.dim()}, {"source", source_name(table.source)}, {"vector", e.vector}}
               .dump()
        << '\n';
}

inline void write_embeddings(const EmbeddingTable& table, const std::filesystem::path& path) {
  std::ofstream out(path);
  require(out.good(), ErrorKind::io, "cannot write " + path.string());
  write_embeddings(table, out);
}

}  // namespace igtk
