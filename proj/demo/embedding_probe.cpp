// In-memory walkthrough: synthesize a small corpus, embed every utterance with
// mel statistics, fit a logistic head on the training speakers and print the
// test-set report for the typical-vs-impaired task.

#include <iostream>

#include "igtk/pipeline.hpp"
#include "igtk/synth.hpp"

int main(int argc, char** argv) {
  using namespace igtk;
  const int speakers = argc > 1 ? std::atoi(argv[1]) : 40;
  const auto cfg = SynthConfig::defaults(speakers, 7);
  const auto profiles = synth_speakers(cfg);
  const auto manifest = synth_manifest(cfg);

  std::map<std::string, std::vector<float>> audio;
  for (const auto& spk : profiles)
    for (const auto& ph : cfg.phrases) audio[utterance_id_for(spk, ph)] = render_utterance(cfg, spk, ph, spk.rating).output;

  const LogMelFrontend frontend(FrontendConfig::cnn());
  const auto utts = all_utterances(manifest);
  const auto table = embed_mel_stats(utts, [&](const Utterance& u) {
    return featurize_waveform(frontend, {audio.at(u.utterance_id), kTargetRate});
  });

  const auto split = split_speakers(manifest.speakers(), kDefaultRatios, derive_seed(7, "split"), &manifest);
  const auto head = fit_head(HeadKind::logistic, table, manifest, utterances_in(manifest, split, Split::train), TaskId::two_mild);
  const auto preds = predict_head(head, table, manifest, utterances_in(manifest, split, Split::test));
  std::cout << to_json(evaluate_predictions(preds, TaskId::two_mild, phrase_texts(manifest))).dump(2) << "\n";
}
