#include <sstream>

#include "igtk/embeddings.hpp"
#include "igtk/random.hpp"
#include "test_util.hpp"

using namespace igtk;

TEST_CASE("mel statistics of a constant block") {
  const std::vector<float> block(10 * 64, 2.5f);
  const auto v = mel_stats(block, 10);
  REQUIRE(v.size() == kMelStatsDim);
  for (std::size_t b = 0; b < 64; ++b) {
    CHECK(v[b] == Catch::Approx(2.5));
    CHECK(v[64 + b] == Catch::Approx(0.0).margin(1e-12));
    CHECK(v[128 + b] == Catch::Approx(0.0).margin(1e-12));
    CHECK(v[192 + b] == Catch::Approx(0.0).margin(1e-12));
  }
}

TEST_CASE("mel statistics of a ramp") {
  // Bin b of frame t holds t: mean (T-1)/2, deltas all 1.
  const std::size_t t_count = 5;
  std::vector<float> block(t_count * 64);
  for (std::size_t t = 0; t < t_count; ++t)
    for (std::size_t b = 0; b < 64; ++b) block[t * 64 + b] = static_cast<float>(t);
  const auto v = mel_stats(block, t_count);
  CHECK(v[0] == Catch::Approx(2.0));
  CHECK(v[64] == Catch::Approx(std::sqrt(2.0)));
  CHECK(v[128] == Catch::Approx(1.0));
  CHECK(v[192] == Catch::Approx(0.0).margin(1e-12));
}

TEST_CASE("time pooling averages element-wise") {
  const std::vector<std::vector<double>> v = {{1, 2}, {3, 6}};
  CHECK(pool_time_average(v) == std::vector<double>{2, 4});
  const std::vector<std::vector<double>> ragged = {{1, 2}, {3}};
  REQUIRE_ERROR_KIND(pool_time_average(ragged), ErrorKind::shape);
}

TEST_CASE("utterance embedding pools per-patch statistics") {
  LogMelFrames f;
  f.num_bins = 64;
  f.num_frames = 200;
  Rng rng(4);
  f.values.resize(200 * 64);
  for (auto& x : f.values) x = static_cast<float>(standard_normal(rng));
  std::vector<std::vector<double>> segs;
  const auto e = embed_utterance_mel_stats(f, &segs);
  REQUIRE(segs.size() == 2);
  CHECK(e.dim() == kMelStatsDim);
  CHECK(e.vector == pool_time_average(segs));
}

TEST_CASE("import accepts vectors and segment lists") {
  std::istringstream in(
      R"({"utterance_id":"a","dim":3,"vector":[1,2,3]})"
      "\n"
      R"({"utterance_id":"b","dim":3,"segments":[[0,0,0],[2,4,6]]})"
      "\n");
  const auto t = parse_embeddings(in, 3);
  CHECK(t.dim() == 3);
  CHECK(t.at("b").vector == std::vector<double>{1, 2, 3});
  CHECK(t.source == EmbeddingSource::import_other);
  std::stringstream out;
  write_embeddings(t, out);
  const auto back = parse_embeddings(out);
  CHECK(back.at("a").vector == t.at("a").vector);
}

TEST_CASE("import rejects inconsistent dimensions and duplicates") {
  std::istringstream wrong_dim(R"({"utterance_id":"a","dim":4,"vector":[1,2,3]})");
  REQUIRE_ERROR_KIND(parse_embeddings(wrong_dim), ErrorKind::format);
  std::istringstream wrong_expected(R"({"utterance_id":"a","dim":3,"vector":[1,2,3]})");
  REQUIRE_ERROR_KIND(parse_embeddings(wrong_expected, 640), ErrorKind::format);
  std::istringstream mixed(
      R"({"utterance_id":"a","dim":2,"vector":[1,2]})"
      "\n"
      R"({"utterance_id":"b","dim":3,"vector":[1,2,3]})");
  REQUIRE_ERROR_KIND(parse_embeddings(mixed), ErrorKind::format);
  std::istringstream dup(
      R"({"utterance_id":"a","dim":1,"vector":[1]})"
      "\n"
      R"({"utterance_id":"a","dim":1,"vector":[2]})");
  REQUIRE_ERROR_KIND(parse_embeddings(dup), ErrorKind::format);
  std::istringstream ragged(R"({"utterance_id":"a","dim":2,"segments":[[1,2],[3]]})");
  REQUIRE_ERROR_KIND(parse_embeddings(ragged), ErrorKind::format);
}

TEST_CASE("source inferred from known dimensions") {
  CHECK(source_for_dim(12288) == EmbeddingSource::import_trill);
  CHECK(source_for_dim(2048) == EmbeddingSource::import_trill_distilled);
  CHECK(source_for_dim(640) == EmbeddingSource::import_asr_enc);
  CHECK(source_for_dim(7) == EmbeddingSource::import_other);
  CHECK(parse_source(source_name(EmbeddingSource::mel_stats)) == EmbeddingSource::mel_stats);
}

TEST_CASE("a written source tag survives the round trip") {
  EmbeddingTable t;
  t.source = EmbeddingSource::mel_stats;
  t.insert("a", {{1.0, 2.0}, EmbeddingSource::mel_stats});
  std::stringstream out;
  write_embeddings(t, out);
  CHECK(parse_embeddings(out).source == EmbeddingSource::mel_stats);
  std::istringstream bad(R"({"utterance_id":"a","dim":1,"source":"WHAT","vector":[1]})");
  REQUIRE_ERROR_KIND(parse_embeddings(bad), ErrorKind::format);
}
