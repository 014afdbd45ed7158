#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "signdense/aligner.hpp"
#include "signdense/corpus.hpp"
#include "signdense/density.hpp"
#include "signdense/matrix.hpp"
#include "signdense/signcl.hpp"

namespace signdense {

struct SynthConfig {
  std::size_t n_classes = 8;
  std::size_t dim_in = 16;
  std::size_t dim_out = 8;
  double frames_per_gloss_mean = 9.0;
  double frame_jitter = 2.0;  // frame count = round(mean + U(-jitter, jitter)), at least 1
  double noise_sigma = 0.5;
  double prototype_radius = 2.0;
  std::size_t glosses_per_clip = 6;
  std::size_t n_clips = 50;
  double words_per_gloss = 2.3;  // text_len = max(1, round(glosses * words_per_gloss))
  double logit_smoothing = 0.05;
  std::uint64_t seed = 0;
};

struct SyntheticData {
  GlossVocab vocab;
  Corpus corpus;                          // every clip carries gold spans
  std::vector<LogProbSequence> logprobs;  // parallel to corpus.clips
  Matrix prototypes;                      // row k is the prototype of gloss k+1
};

void validate(const SynthConfig& cfg);

SyntheticData gen_synthetic(const SynthConfig& cfg);

struct TrainConfig {
  double lambda = 0.01;
  // Hinge margin; nullopt selects the median inter-gloss distance of the
  // initial encoding.
  std::optional<double> feature_margin;
  // Encoder output scale; nullopt calibrates it at initialization so the
  // median inter-gloss distance of the initial encoding equals
  // `calibrated_inter_distance`.
  std::optional<double> feature_scale;
  double calibrated_inter_distance = 64.0;
  double learning_rate = 1.0;
  std::size_t epochs = 200;
  std::size_t dim_out = 8;
  MarginConfig margin_cfg;
  UnpairedAnchors unpaired = UnpairedAnchors::kKeep;
  std::uint64_t seed = 0;
};

void validate(const TrainConfig& cfg);

// Encoder z = s * tanh(W x + b) with a fixed (untrained) scale s, followed
// by a linear softmax head U (z / s) + c that stands in for the translation
// decoder. The contrastive term measures distances in z.
struct Model {
  Matrix encoder_weight;  // dim_out x dim_in
  std::vector<double> encoder_bias;
  Matrix head_weight;  // n_classes x dim_out
  std::vector<double> head_bias;
  double output_scale = 1.0;

  static Model init(std::size_t dim_in, std::size_t dim_out, std::size_t n_classes, std::uint64_t seed);

  std::size_t parameter_count() const noexcept;
  // Flat views for optimizers and finite-difference checks, in member order.
  std::vector<double> flatten() const;
  void assign(const std::vector<double>& flat);

  Matrix encode(const Matrix& frames) const;
};

// Per-frame targets for the softmax head; nullopt frames carry no label.
struct TrainingClip {
  const Matrix* frames = nullptr;
  std::vector<std::optional<std::size_t>> labels;  // class index = gloss_id - 1
  std::vector<GlossSpan> spans;
  std::size_t text_len = 1;
};

struct ObjectiveValue {
  double total = 0.0;
  double mle = 0.0;
  double signcl = 0.0;
  Model gradient;
};

// Mean over clips of lambda * signcl + mle, and its exact gradient.
// `pairs[c]` is the pair set for clip c.
ObjectiveValue evaluate_objective(const Model& model, const std::vector<TrainingClip>& clips,
                                  const std::vector<PairSet>& pairs, double lambda, double feature_margin,
                                  UnpairedAnchors unpaired = UnpairedAnchors::kKeep);

struct EpochLoss {
  double mle = 0.0;
  double signcl = 0.0;
};

struct TrainReport {
  double sdr_before = 0.0;
  double sdr_after = 0.0;
  double feature_margin = 0.0;
  double feature_scale = 1.0;
  double train_accuracy = 0.0;
  std::vector<EpochLoss> loss_curve;
  DensityReport final_density;
  std::vector<GlossGroup> final_groups;  // encoded representative frames
};

// Uses gold spans unless `spans` (one list per clip) is supplied.
TrainReport train(const Corpus& corpus, std::size_t n_classes, const TrainConfig& cfg,
                  const std::optional<std::vector<std::vector<GlossSpan>>>& spans = std::nullopt);

}  // namespace signdense
