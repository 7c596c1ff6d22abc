#pragma once

// Glue shared by the command-line tool and the end-to-end tests: per-utterance
// featurization and embedding (optionally parallel, output independent of
// scheduling), head prediction and CNN dataset assembly.

#include <algorithm>
#include <atomic>
#include <exception>
#include <filesystem>
#include <functional>
#include <map>
#include <mutex>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "igtk/cnn.hpp"
#include "igtk/core_data.hpp"
#include "igtk/embeddings.hpp"
#include "igtk/heads.hpp"
#include "igtk/log_mel.hpp"
#include "igtk/report.hpp"
#include "igtk/resample.hpp"
#include "igtk/segmentation.hpp"

namespace igtk {

/// Runs `fn(i)` for i in [0, n) on up to `threads` workers; rethrows the first
/// failure (lowest index) after all workers stop.
inline void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& fn) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(n, 1)));
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::mutex mu;
  std::size_t err_index = n;
  std::exception_ptr err;
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(mu);
          if (i < err_index) {
            err_index = i;
            err = std::current_exception();
          }
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (err) std::rethrow_exception(err);
}

/// Zero-pads so that at least one analysis window fits.
inline LogMelFrames featurize_waveform(const LogMelFrontend& frontend, Waveform w) {
  const auto min_len = static_cast<std::size_t>(frontend.config().window_length);
  if (w.samples.size() < min_len) w.samples.resize(min_len, 0.0f);
  return frontend(w);
}

inline LogMelFrames featurize_file(const LogMelFrontend& frontend, const std::filesystem::path& audio) {
  return featurize_waveform(frontend, load_audio_16k(audio));
}

/// MEL_STATS embedding for each utterance, computed from `frames_for(u)`.
inline EmbeddingTable embed_mel_stats(std::span<const Utterance* const> utts,
                                      const std::function<LogMelFrames(const Utterance&)>& frames_for,
                                      unsigned threads = 1) {
  std::vector<Embedding> rows(utts.size());
  parallel_for(utts.size(), threads, [&](std::size_t i) { rows[i] = embed_utterance_mel_stats(frames_for(*utts[i])); });
  EmbeddingTable table;
  table.source = EmbeddingSource::mel_stats;
  for (std::size_t i = 0; i < utts.size(); ++i) table.insert(utts[i]->utterance_id, std::move(rows[i]));
  return table;
}

inline std::vector<const Utterance*> all_utterances(const Manifest& m) {
  std::vector<const Utterance*> out;
  out.reserve(m.utterances.size());
  for (const auto& u : m.utterances) out.push_back(&u);
  return out;
}

inline UtterancePrediction make_prediction(const Utterance& u, const Manifest& manifest, TaskId task,
                                           ClassDistribution scores) {
  UtterancePrediction p;
  p.utterance_id = u.utterance_id;
  p.speaker_id = u.speaker_id;
  p.phrase_id = u.phrase_id;
  p.rating = manifest.rating_of(u.speaker_id);
  p.label = map_task(p.rating, task);
  p.predicted = argmax(scores.probs);
  p.scores = std::move(scores);
  return p;
}

inline std::vector<UtterancePrediction> predict_head(const HeadModel& head, const EmbeddingTable& table,
                                                     const Manifest& manifest, std::span<const Utterance* const> utts) {
  require(head.dim() == table.dim(), ErrorKind::shape,
          "head expects dim " + std::to_string(head.dim()) + " but embeddings have dim " + std::to_string(table.dim()));
  std::vector<UtterancePrediction> out;
  out.reserve(utts.size());
  for (const auto* u : utts) out.push_back(make_prediction(*u, manifest, head.task, head.predict(table.at(u->utterance_id).vector)));
  return out;
}

template <typename T>
std::vector<UtterancePrediction> predict_cnn(const CnnModel<T>& model, TaskId task, const Manifest& manifest,
                                             std::span<const Utterance* const> utts,
                                             const std::function<LogMelFrames(const Utterance&)>& frames_for) {
  std::vector<UtterancePrediction> out;
  out.reserve(utts.size());
  for (const auto* u : utts) {
    const auto patches = make_patches(frames_for(*u), u->utterance_id);
    out.push_back(make_prediction(*u, manifest, task, aggregate(model.predict(patches)).distribution));
  }
  return out;
}

inline std::vector<LabeledSegment> training_segments(const Manifest& manifest, std::span<const Utterance* const> utts,
                                                     TaskId task,
                                                     const std::function<LogMelFrames(const Utterance&)>& frames_for) {
  std::vector<LabeledSegment> out;
  for (const auto* u : utts) {
    auto segs = propagate_labels(*u, make_patches(frames_for(*u), u->utterance_id), manifest, task);
    std::move(segs.begin(), segs.end(), std::back_inserter(out));
  }
  return out;
}

inline std::vector<ValidationUtterance> validation_set(const Manifest& manifest, std::span<const Utterance* const> utts,
                                                       TaskId task,
                                                       const std::function<LogMelFrames(const Utterance&)>& frames_for) {
  std::vector<ValidationUtterance> out;
  for (const auto* u : utts)
    out.push_back({u->utterance_id, manifest.label(*u, task), make_patches(frames_for(*u), u->utterance_id)});
  return out;
}

inline std::map<int, std::string> phrase_texts(const Manifest& m) {
  std::map<int, std::string> out;
  for (const auto& u : m.utterances) out.emplace(u.phrase_id, u.phrase_text);
  return out;
}

}  // namespace igtk
