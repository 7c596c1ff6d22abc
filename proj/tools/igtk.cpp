// igtk: command-line driver for the intelligibility toolkit.
// Exit codes: 0 success, 1 validation/usage error, 2 runtime error.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "igtk/cnn.hpp"
#include "igtk/core_data.hpp"
#include "igtk/embeddings.hpp"
#include "igtk/error.hpp"
#include "igtk/fixtures.hpp"
#include "igtk/heads.hpp"
#include "igtk/log_mel.hpp"
#include "igtk/pipeline.hpp"
#include "igtk/projection.hpp"
#include "igtk/report.hpp"
#include "igtk/synth.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace igtk;

namespace {

fs::path output_dir() {
  const char* env = std::getenv("IGTK_OUTPUT_DIR");
  return env && *env ? fs::path(env) : fs::path(".");
}

// Relative output paths land under $IGTK_OUTPUT_DIR when it is set.
fs::path out_path(const std::string& given) {
  fs::path p(given);
  if (p.is_absolute()) return p;
  return output_dir() / p;
}

void ensure_parent(const fs::path& p) {
  if (p.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(p.parent_path(), ec);
    require(!ec, ErrorKind::io, "cannot create " + p.parent_path().string());
  }
}

SplitRatios parse_ratios(const std::string& text) {
  std::vector<double> v;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      v.push_back(std::stod(item, &used));
      require(used == item.size(), ErrorKind::usage, "--ratios: bad number '" + item + "'");
    } catch (const std::logic_error&) {
      fail(ErrorKind::usage, "--ratios: bad number '" + item + "'");
    }
  }
  require(v.size() == 3, ErrorKind::usage, "--ratios expects three comma-separated values");
  return {v[0], v[1], v[2]};
}

std::vector<TaskId> parse_tasks(const std::string& text) {
  std::string u;
  for (char c : text) u.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
  if (u == "ALL") return {kAllTasks.begin(), kAllTasks.end()};
  return {parse_task(text)};
}

fs::path feature_file(const fs::path& dir, const std::string& utterance_id) { return dir / (utterance_id + ".igf"); }

/// Frames from the feature cache when given, otherwise from the audio.
std::function<LogMelFrames(const Utterance&)> frame_source(const std::optional<std::string>& features,
                                                           FrontendVariant variant) {
  if (features) {
    const fs::path dir(*features);
    return [dir](const Utterance& u) { return read_features(feature_file(dir, u.utterance_id)); };
  }
  auto frontend = std::make_shared<LogMelFrontend>(FrontendConfig::for_variant(variant));
  return [frontend](const Utterance& u) { return featurize_file(*frontend, u.audio_path); };
}

EmbeddingTable load_or_make_embeddings(const Manifest& m, const std::string& embedder,
                                       const std::optional<std::string>& features, unsigned threads) {
  std::string upper;
  for (char c : embedder) upper.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
  if (upper == "MEL_STATS") {
    const auto utts = all_utterances(m);
    return embed_mel_stats(utts, frame_source(features, FrontendVariant::cnn), threads);
  }
  if (upper.rfind("IMPORT:", 0) == 0) {
    const std::string path = embedder.substr(7);
    require(!path.empty(), ErrorKind::usage, "--embedder IMPORT:<path> needs a path");
    return import_embeddings(path);
  }
  fail(ErrorKind::usage, "--embedder must be MEL_STATS or IMPORT:<path>, got '" + embedder + "'");
}

void check_coverage(const EmbeddingTable& table, std::span<const Utterance* const> utts) {
  for (const auto* u : utts)
    require(table.contains(u->utterance_id), ErrorKind::integrity, "no embedding for utterance '" + u->utterance_id + "'");
}

void write_json(const json& j, const fs::path& path) {
  ensure_parent(path);
  std::ofstream out(path);
  require(out.good(), ErrorKind::io, "cannot write " + path.string());
  out << j.dump(2) << '\n';
}

}  // namespace

int run(int argc, char** argv) {
  CLI::App app{"Speech intelligibility classification toolkit"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "igtk 0.1.0");

  // synth
  auto* synth = app.add_subcommand("synth", "Generate a seeded synthetic corpus (WAV + manifest)");
  std::string synth_out = "corpus";
  int synth_speakers = 100;
  std::uint64_t synth_seed = 42;
  synth->add_option("--out", synth_out, "Output directory")->capture_default_str();
  synth->add_option("--speakers", synth_speakers, "Number of speakers")->capture_default_str()->check(CLI::PositiveNumber);
  synth->add_option("--seed", synth_seed, "Seed")->capture_default_str();

  // split
  auto* split = app.add_subcommand("split", "Speaker-disjoint train/val/test split");
  std::string split_manifest, split_out = "split.jsonl", split_ratios = "0.70,0.15,0.15";
  std::uint64_t split_seed = 42;
  bool split_stratify = false;
  split->add_option("--manifest", split_manifest, "Manifest JSONL")->required();
  split->add_option("--out", split_out, "Split JSONL")->capture_default_str();
  split->add_option("--ratios", split_ratios, "TRAIN,VAL,TEST ratios")->capture_default_str();
  split->add_option("--seed", split_seed, "Seed")->capture_default_str();
  split->add_flag("--stratify", split_stratify, "Spread every rating across the splits");

  // featurize
  auto* feat = app.add_subcommand("featurize", "Compute log-mel feature caches");
  std::string feat_manifest, feat_out = "features", feat_variant = "cnn";
  unsigned threads = 0;
  feat->add_option("--manifest", feat_manifest, "Manifest JSONL")->required();
  feat->add_option("--out", feat_out, "Cache directory")->capture_default_str();
  feat->add_option("--variant", feat_variant, "cnn or asr")->capture_default_str()->check(CLI::IsMember({"cnn", "asr"}));
  feat->add_option("--threads", threads, "Worker threads (0 = all cores)");

  // train-cnn
  auto* tcnn = app.add_subcommand("train-cnn", "Train the segment CNN");
  std::string tcnn_manifest, tcnn_split, tcnn_task = "TWO_MILD", tcnn_out = "cnn.igc", tcnn_loss = "sigmoid";
  std::optional<std::string> tcnn_features;
  std::uint64_t tcnn_seed = 42;
  CnnConfig cnn_cfg;
  bool tcnn_tiny = false;
  tcnn->add_option("--manifest", tcnn_manifest, "Manifest JSONL")->required();
  tcnn->add_option("--split", tcnn_split, "Split JSONL")->required();
  tcnn->add_option("--features", tcnn_features, "Feature cache directory (computed from audio when absent)");
  tcnn->add_option("--task", tcnn_task, "FIVE_CLASS, THREE_CLASS, TWO_MODR or TWO_MILD")->capture_default_str();
  tcnn->add_option("--out", tcnn_out, "Checkpoint path")->capture_default_str();
  tcnn->add_option("--seed", tcnn_seed, "Seed")->capture_default_str();
  tcnn->add_option("--epochs", cnn_cfg.epochs, "Epochs")->capture_default_str();
  tcnn->add_option("--lr", cnn_cfg.learning_rate, "Adam learning rate")->capture_default_str();
  tcnn->add_option("--batch", cnn_cfg.batch_size, "Batch size")->capture_default_str();
  tcnn->add_option("--loss", tcnn_loss, "sigmoid or softmax")->capture_default_str()->check(CLI::IsMember({"sigmoid", "softmax"}));
  tcnn->add_flag("--tiny", tcnn_tiny, "Use the small architecture");

  // embed
  auto* embed = app.add_subcommand("embed", "Compute pooled utterance embeddings");
  std::string embed_manifest, embed_embedder = "MEL_STATS", embed_out = "embeddings.jsonl";
  std::optional<std::string> embed_features;
  embed->add_option("--manifest", embed_manifest, "Manifest JSONL")->required();
  embed->add_option("--embedder", embed_embedder, "MEL_STATS or IMPORT:<path>")->capture_default_str();
  embed->add_option("--features", embed_features, "Feature cache directory");
  embed->add_option("--out", embed_out, "Embedding JSONL")->capture_default_str();
  embed->add_option("--threads", threads, "Worker threads (0 = all cores)");

  // import-embeddings
  auto* imp = app.add_subcommand("import-embeddings", "Validate and pool externally computed embeddings");
  std::string imp_in, imp_manifest, imp_out = "embeddings.jsonl";
  std::optional<std::size_t> imp_dim;
  imp->add_option("--in", imp_in, "Input JSONL (vector or segments per line)")->required();
  imp->add_option("--manifest", imp_manifest, "Manifest whose utterances must all be covered")->required();
  imp->add_option("--dim", imp_dim, "Expected dimension");
  imp->add_option("--out", imp_out, "Pooled embedding JSONL")->capture_default_str();

  // fit-head
  auto* fit = app.add_subcommand("fit-head", "Fit a logistic or forest head on pooled embeddings");
  std::string fit_manifest, fit_split, fit_embeddings, fit_head_kind = "LOGISTIC", fit_task = "TWO_MILD", fit_out = "head.igh";
  std::uint64_t fit_seed = 42;
  HeadTrainingOptions head_opts;
  fit->add_option("--manifest", fit_manifest, "Manifest JSONL")->required();
  fit->add_option("--split", fit_split, "Split JSONL")->required();
  fit->add_option("--embeddings", fit_embeddings, "Embedding JSONL")->required();
  fit->add_option("--head", fit_head_kind, "LOGISTIC or FOREST")->capture_default_str();
  fit->add_option("--task", fit_task, "Task")->capture_default_str();
  fit->add_option("--out", fit_out, "Head checkpoint")->capture_default_str();
  fit->add_option("--seed", fit_seed, "Seed")->capture_default_str();
  fit->add_option("--lambda", head_opts.logistic.l2_lambda, "L2 strength")->capture_default_str();
  fit->add_option("--max-iter", head_opts.logistic.max_iterations, "Logistic iteration cap")->capture_default_str();
  fit->add_option("--trees", head_opts.forest.n_trees, "Forest size")->capture_default_str();

  // evaluate
  auto* ev = app.add_subcommand("evaluate", "Evaluate on a split and write a JSON report");
  std::string ev_manifest, ev_report = "report.json", ev_task = "ALL", ev_on = "TEST", ev_head_kind = "LOGISTIC";
  std::optional<std::string> ev_split, ev_embeddings, ev_model, ev_cnn, ev_features, ev_predictions, ev_predictions_out;
  std::uint64_t ev_seed = 42;
  HeadTrainingOptions ev_opts;
  ev->add_option("--manifest", ev_manifest, "Manifest JSONL")->required();
  ev->add_option("--split", ev_split, "Split JSONL");
  ev->add_option("--report", ev_report, "Report JSON")->capture_default_str();
  ev->add_option("--task", ev_task, "Task or ALL")->capture_default_str();
  ev->add_option("--on", ev_on, "Split to evaluate")->capture_default_str()->check(CLI::IsMember({"TRAIN", "VAL", "TEST"}, CLI::ignore_case));
  ev->add_option("--embeddings", ev_embeddings, "Embedding JSONL (fits the head on TRAIN unless --model is given)");
  ev->add_option("--head", ev_head_kind, "LOGISTIC or FOREST")->capture_default_str();
  ev->add_option("--model", ev_model, "Fitted head checkpoint");
  ev->add_option("--cnn", ev_cnn, "CNN checkpoint");
  ev->add_option("--features", ev_features, "Feature cache directory for --cnn");
  ev->add_option("--predictions", ev_predictions, "Evaluate an existing prediction JSONL");
  ev->add_option("--predictions-out", ev_predictions_out, "Write the utterance predictions (single task only)");
  ev->add_option("--seed", ev_seed, "Seed")->capture_default_str();
  ev->add_option("--lambda", ev_opts.logistic.l2_lambda, "L2 strength")->capture_default_str();
  ev->add_option("--trees", ev_opts.forest.n_trees, "Forest size")->capture_default_str();

  // project
  auto* proj = app.add_subcommand("project", "2-D PCA projection export for external plotting");
  std::string proj_manifest, proj_embeddings, proj_out = "projection.csv";
  std::optional<std::string> proj_raw;
  std::uint64_t proj_seed = 42;
  proj->add_option("--manifest", proj_manifest, "Manifest JSONL")->required();
  proj->add_option("--embeddings", proj_embeddings, "Embedding JSONL")->required();
  proj->add_option("--out", proj_out, "CSV path")->capture_default_str();
  proj->add_option("--raw-out", proj_raw, "Also write the raw embeddings as JSONL");
  proj->add_option("--seed", proj_seed, "Seed")->capture_default_str();

  // verify-fixtures
  auto* ver = app.add_subcommand("verify-fixtures", "Check the bundled reference fixtures");
  std::string ver_dir = "fixtures";
  ver->add_option("--dir", ver_dir, "Fixture directory")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  if (synth->parsed()) {
    auto cfg = SynthConfig::defaults(synth_speakers, synth_seed);
    const auto dir = out_path(synth_out);
    const auto m = generate_corpus(cfg, dir);
    std::cout << "wrote " << m.utterances.size() << " utterances from " << m.ratings.size() << " speakers to "
              << dir.string() << "\n";
  } else if (split->parsed()) {
    const auto m = load_manifest(split_manifest);
    const auto a = split_speakers(m.speakers(), parse_ratios(split_ratios), derive_seed(split_seed, "split"),
                                  split_stratify ? &m : nullptr);
    const auto path = out_path(split_out);
    ensure_parent(path);
    write_split(a, path);
    const auto c = a.counts();
    std::cout << "TRAIN " << c[0] << "  VAL " << c[1] << "  TEST " << c[2] << " speakers -> " << path.string() << "\n";
  } else if (feat->parsed()) {
    const auto m = load_manifest(feat_manifest);
    const auto dir = out_path(feat_out);
    std::error_code ec;
    fs::create_directories(dir, ec);
    require(!ec, ErrorKind::io, "cannot create " + dir.string());
    const LogMelFrontend frontend(FrontendConfig::for_variant(feat_variant == "asr" ? FrontendVariant::asr : FrontendVariant::cnn));
    parallel_for(m.utterances.size(), threads, [&](std::size_t i) {
      const auto& u = m.utterances[i];
      write_features(feature_file(dir, u.utterance_id), featurize_file(frontend, u.audio_path));
    });
    std::cout << "featurized " << m.utterances.size() << " utterances -> " << dir.string() << "\n";
  } else if (tcnn->parsed()) {
    const auto m = load_manifest(tcnn_manifest);
    const auto a = load_split(tcnn_split);
    const auto task = parse_task(tcnn_task);
    CnnConfig cfg = tcnn_tiny ? CnnConfig::tiny() : CnnConfig{};
    cfg.epochs = cnn_cfg.epochs;
    cfg.learning_rate = cnn_cfg.learning_rate;
    cfg.batch_size = cnn_cfg.batch_size;
    cfg.num_classes = task_spec(task).num_classes;
    cfg.loss = tcnn_loss == "softmax" ? CnnLoss::softmax : CnnLoss::sigmoid;
    cfg.seed = derive_seed(tcnn_seed, "cnn");
    cfg.task = std::string(task_name(task));
    cfg.validate();
    const auto frames = frame_source(tcnn_features, FrontendVariant::cnn);
    const auto train = training_segments(m, utterances_in(m, a, Split::train), task, frames);
    const auto val = validation_set(m, utterances_in(m, a, Split::val), task, frames);
    const auto result = train_cnn<float>(cfg, train, val, [](int epoch, double loss, double auc) {
      std::cout << "epoch " << epoch << "  loss " << loss << "  val_mean_auc " << auc << "\n";
    });
    const auto path = out_path(tcnn_out);
    ensure_parent(path);
    save_checkpoint(result.model, path);
    std::cout << "best epoch " << result.best_epoch + 1 << " -> " << path.string() << "\n";
  } else if (embed->parsed()) {
    const auto m = load_manifest(embed_manifest);
    const auto table = load_or_make_embeddings(m, embed_embedder, embed_features, threads);
    check_coverage(table, all_utterances(m));
    const auto path = out_path(embed_out);
    ensure_parent(path);
    write_embeddings(table, path);
    std::cout << "wrote " << table.size() << " embeddings of dim " << table.dim() << " -> " << path.string() << "\n";
  } else if (imp->parsed()) {
    const auto m = load_manifest(imp_manifest);
    auto table = import_embeddings(imp_in, imp_dim);
    check_coverage(table, all_utterances(m));
    const auto path = out_path(imp_out);
    ensure_parent(path);
    write_embeddings(table, path);
    std::cout << "imported " << table.size() << " embeddings (" << source_name(table.source) << ", dim " << table.dim()
              << ") -> " << path.string() << "\n";
  } else if (fit->parsed()) {
    const auto m = load_manifest(fit_manifest);
    const auto a = load_split(fit_split);
    const auto table = import_embeddings(fit_embeddings);
    const auto train = utterances_in(m, a, Split::train);
    check_coverage(table, train);
    head_opts.logistic.seed = derive_seed(fit_seed, "logistic");
    head_opts.forest.seed = derive_seed(fit_seed, "forest");
    const auto head = fit_head(parse_head(fit_head_kind), table, m, train, parse_task(fit_task), head_opts);
    const auto path = out_path(fit_out);
    ensure_parent(path);
    save_head(head, path);
    std::cout << head_name(head.kind()) << " head for " << task_name(head.task) << " -> " << path.string() << "\n";
  } else if (ev->parsed()) {
    const auto m = load_manifest(ev_manifest);
    const int sources = int(ev_embeddings.has_value()) + int(ev_cnn.has_value()) + int(ev_predictions.has_value());
    require(sources == 1, ErrorKind::usage, "evaluate needs exactly one of --embeddings, --cnn, --predictions");
    require(!ev_model || ev_embeddings, ErrorKind::usage, "--model requires --embeddings");
    require(!ev_features || ev_cnn, ErrorKind::usage, "--features only applies with --cnn");
    std::vector<TaskId> tasks = parse_tasks(ev_task);
    require(!ev_predictions_out || tasks.size() == 1, ErrorKind::usage, "--predictions-out needs a single --task");

    json config = {{"manifest", ev_manifest}, {"task", ev_task}, {"on", ev_on}, {"seed", ev_seed}};
    std::vector<const Utterance*> eval_utts;
    std::optional<SplitAssignment> assignment;
    if (ev_split) {
      assignment = load_split(*ev_split);
      config["split"] = *ev_split;
      eval_utts = utterances_in(m, *assignment, parse_split(ev_on));
    } else {
      require(ev_predictions.has_value(), ErrorKind::usage, "--split is required unless --predictions is given");
    }

    json reports = json::array();
    std::vector<UtterancePrediction> last_preds;
    for (const auto task : tasks) {
      std::vector<UtterancePrediction> preds;
      json task_config = config;
      if (ev_predictions) {
        preds = load_predictions(*ev_predictions);
        task_config["predictions"] = *ev_predictions;
      } else if (ev_cnn) {
        const auto model = load_checkpoint<float>(*ev_cnn);
        require(model.config().task.empty() || model.config().task == task_name(task), ErrorKind::config,
                "--cnn checkpoint was trained for " + model.config().task);
        preds = predict_cnn(model, task, m, eval_utts, frame_source(ev_features, FrontendVariant::cnn));
        task_config["cnn"] = *ev_cnn;
        task_config["cnn_config"] = model.config();
      } else {
        const auto table = import_embeddings(*ev_embeddings);
        check_coverage(table, eval_utts);
        task_config["embeddings"] = *ev_embeddings;
        task_config["embedding_source"] = source_name(table.source);
        HeadModel head;
        if (ev_model) {
          head = load_head(*ev_model);
          require(head.task == task, ErrorKind::config,
                  "--model was fitted for " + std::string(task_name(head.task)) + ", not " + std::string(task_name(task)));
          task_config["model"] = *ev_model;
        } else {
          const auto train = utterances_in(m, *assignment, Split::train);
          check_coverage(table, train);
          ev_opts.logistic.seed = derive_seed(ev_seed, "logistic");
          ev_opts.forest.seed = derive_seed(ev_seed, "forest");
          head = fit_head(parse_head(ev_head_kind), table, m, train, task, ev_opts);
          task_config["head"] = head_name(head.kind());
          task_config["l2_lambda"] = ev_opts.logistic.l2_lambda;
          task_config["max_iterations"] = ev_opts.logistic.max_iterations;
          task_config["n_trees"] = ev_opts.forest.n_trees;
        }
        preds = predict_head(head, table, m, eval_utts);
      }
      auto report = evaluate_predictions(preds, task, phrase_texts(m));
      report.config = task_config;
      reports.push_back(to_json(report));
      last_preds = std::move(preds);
      const auto& o = report.overall;
      std::cout << task_name(task) << ": mean_auc " << (o.mean_auc ? std::to_string(*o.mean_auc) : "n/a") << "  f1 "
                << o.f1 << "  accuracy " << o.accuracy << "\n";
    }
    write_json({{"reports", reports}}, out_path(ev_report));
    if (ev_predictions_out) {
      const auto path = out_path(*ev_predictions_out);
      ensure_parent(path);
      write_predictions(last_preds, path);
    }
  } else if (proj->parsed()) {
    const auto m = load_manifest(proj_manifest);
    const auto table = import_embeddings(proj_embeddings);
    const auto path = out_path(proj_out);
    ensure_parent(path);
    const auto p = export_projection(table, m, path, derive_seed(proj_seed, "pca"));
    if (proj_raw) {
      const auto raw = out_path(*proj_raw);
      ensure_parent(raw);
      write_embeddings(table, raw);
    }
    std::cout << "projected " << table.size() << " points; explained variance " << p.variance[0] << ", " << p.variance[1]
              << " -> " << path.string() << "\n";
  } else if (ver->parsed()) {
    const auto checks = verify_fixtures(ver_dir);
    std::size_t failed = 0;
    for (const auto& c : checks) {
      std::cout << (c.passed ? "PASS  " : "FAIL  ") << c.fixture << "  " << c.name;
      if (!c.detail.empty()) std::cout << "  (" << c.detail << ")";
      std::cout << "\n";
      failed += c.passed ? 0 : 1;
    }
    std::cout << checks.size() - failed << "/" << checks.size() << " fixture checks passed\n";
    return failed == 0 ? 0 : 2;
  }
  return 0;
}

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.is_validation() ? 1 : 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
