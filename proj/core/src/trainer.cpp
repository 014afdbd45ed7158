#include "signdense/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "signdense/error.hpp"
#include "signdense/splitmix64.hpp"

namespace signdense {
namespace {

constexpr std::size_t kMaxPrototypeAttempts = 10000;

// Stream tags for derive_seed.
constexpr std::uint64_t kPrototypeStream = 1;
constexpr std::uint64_t kClipStream = 2;
constexpr std::uint64_t kModelStream = 3;
constexpr std::uint64_t kPairStream = 4;

std::vector<double> random_direction(SplitMix64& rng, std::size_t dim) {
  std::vector<double> v(dim);
  double norm2 = 0.0;
  while (norm2 < 1e-12) {
    for (double& x : v) x = rng.next_gaussian();
    norm2 = squared_norm(v);
  }
  const double inv = 1.0 / std::sqrt(norm2);
  for (double& x : v) x *= inv;
  return v;
}

Matrix sample_prototypes(const SynthConfig& cfg, SplitMix64& rng) {
  const double min_sep = 4.0 * cfg.noise_sigma;
  Matrix protos;
  for (std::size_t k = 0; k < cfg.n_classes; ++k) {
    bool placed = false;
    for (std::size_t attempt = 0; attempt < kMaxPrototypeAttempts && !placed; ++attempt) {
      auto p = random_direction(rng, cfg.dim_in);
      for (double& x : p) x *= cfg.prototype_radius;
      placed = true;
      for (std::size_t j = 0; j < protos.rows() && placed; ++j) {
        placed = euclidean_distance(p, protos.row(j)) >= min_sep;
      }
      if (placed) protos.append_row(p);
    }
    if (!placed) {
      throw Error(ErrorCode::InfeasibleSeparation,
                  "could not place prototype " + std::to_string(k + 1) + " at separation " + std::to_string(min_sep) +
                      " on a sphere of radius " + std::to_string(cfg.prototype_radius) + " in dim " +
                      std::to_string(cfg.dim_in));
    }
  }
  return protos;
}

double tanh_derivative_from_output(double z) { return 1.0 - z * z; }

std::vector<TrainingClip> make_training_clips(const Corpus& corpus,
                                              const std::vector<std::vector<GlossSpan>>& spans,
                                              std::size_t n_classes) {
  std::vector<TrainingClip> out;
  out.reserve(corpus.clips.size());
  for (std::size_t c = 0; c < corpus.clips.size(); ++c) {
    const auto& clip = corpus.clips[c];
    TrainingClip tc;
    tc.frames = &clip.features.frames;
    tc.labels.assign(clip.features.length(), std::nullopt);
    tc.spans = spans[c];
    tc.text_len = clip.annotation.text_len;
    for (const auto& s : spans[c]) {
      if (s.gloss_id == kBlankId || s.gloss_id > n_classes) {
        throw Error(ErrorCode::InvalidArgument, clip.features.clip_id + ": gloss id outside 1..n_classes");
      }
      if (s.end >= clip.features.length()) {
        throw Error(ErrorCode::SpanOutOfRange, clip.features.clip_id + ": span past the last frame");
      }
      for (std::size_t t = s.start; t <= s.end; ++t) tc.labels[t] = s.gloss_id - 1;
    }
    out.push_back(std::move(tc));
  }
  return out;
}

std::vector<GlossGroup> encoded_groups(const Model& model, const std::vector<TrainingClip>& clips) {
  Corpus encoded;
  std::vector<std::vector<GlossSpan>> spans;
  for (const auto& clip : clips) {
    encoded.clips.push_back({FeatureSequence{"", model.encode(*clip.frames)}, GlossAnnotation{}});
    spans.push_back(clip.spans);
  }
  return spans_to_groups(encoded, spans);
}

double median_inter_distance(const std::vector<GlossGroup>& groups) {
  std::vector<double> d;
  for (std::size_t i = 0; i < groups.size(); ++i) {
    for (std::size_t j = i + 1; j < groups.size(); ++j) d.push_back(inter_gloss_distance(groups[i], groups[j]));
  }
  if (d.empty()) throw Error(ErrorCode::SingleGroupCorpus, "median inter-gloss distance needs two glosses");
  std::sort(d.begin(), d.end());
  const std::size_t mid = d.size() / 2;
  return d.size() % 2 == 1 ? d[mid] : 0.5 * (d[mid - 1] + d[mid]);
}

double training_accuracy(const Model& model, const std::vector<TrainingClip>& clips) {
  std::size_t correct = 0;
  std::size_t total = 0;
  const std::size_t n_classes = model.head_weight.rows();
  for (const auto& clip : clips) {
    const Matrix z = model.encode(*clip.frames);
    for (std::size_t t = 0; t < z.rows(); ++t) {
      if (!clip.labels[t]) continue;
      std::size_t best = 0;
      double best_score = -std::numeric_limits<double>::infinity();
      for (std::size_t k = 0; k < n_classes; ++k) {
        double s = model.head_bias[k];
        for (std::size_t c = 0; c < z.cols(); ++c) s += model.head_weight(k, c) * z(t, c) / model.output_scale;
        if (s > best_score) {
          best_score = s;
          best = k;
        }
      }
      correct += best == *clip.labels[t] ? 1 : 0;
      ++total;
    }
  }
  return total == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(total);
}

}  // namespace

void validate(const SynthConfig& cfg) {
  if (cfg.n_classes < 2) throw Error(ErrorCode::InvalidArgument, "synth: n_classes must be >= 2");
  if (cfg.dim_in < 2 || cfg.dim_out < 2) throw Error(ErrorCode::InvalidArgument, "synth: dims must be >= 2");
  if (cfg.glosses_per_clip == 0 || cfg.n_clips == 0) {
    throw Error(ErrorCode::InvalidArgument, "synth: glosses_per_clip and n_clips must be positive");
  }
  if (!(cfg.frames_per_gloss_mean > 0.0) || !(cfg.frame_jitter >= 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "synth: frames_per_gloss_mean > 0 and frame_jitter >= 0 required");
  }
  if (!(cfg.noise_sigma >= 0.0)) throw Error(ErrorCode::InvalidArgument, "synth: noise_sigma must be >= 0");
  if (!(cfg.prototype_radius > 0.0)) throw Error(ErrorCode::InvalidArgument, "synth: prototype_radius must be > 0");
  if (!(cfg.words_per_gloss > 0.0)) throw Error(ErrorCode::InvalidArgument, "synth: words_per_gloss must be > 0");
  if (!(cfg.logit_smoothing > 0.0 && cfg.logit_smoothing < 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "synth: logit_smoothing must be in (0, 1)");
  }
}

SyntheticData gen_synthetic(const SynthConfig& cfg) {
  validate(cfg);
  std::vector<std::string> names;
  for (std::size_t k = 1; k <= cfg.n_classes; ++k) names.push_back("G" + std::to_string(k));

  SyntheticData data{GlossVocab(std::move(names)), {}, {}, {}};
  SplitMix64 proto_rng(derive_seed(cfg.seed, kPrototypeStream));
  data.prototypes = sample_prototypes(cfg, proto_rng);

  const double on_class = std::log(1.0 - cfg.logit_smoothing);
  const double off_class = std::log(cfg.logit_smoothing / static_cast<double>(cfg.n_classes));
  const auto text_len = static_cast<std::size_t>(
      std::max<long long>(1, std::llround(static_cast<double>(cfg.glosses_per_clip) * cfg.words_per_gloss)));

  for (std::size_t c = 0; c < cfg.n_clips; ++c) {
    SplitMix64 rng(derive_seed(derive_seed(cfg.seed, kClipStream), c));
    Clip clip;
    clip.features.clip_id = "clip" + std::to_string(c);
    clip.annotation.clip_id = clip.features.clip_id;
    clip.annotation.text_len = text_len;
    std::vector<FrameSpan> spans;
    LogProbSequence logits{clip.features.clip_id, {}};
    std::vector<double> frame(cfg.dim_in);
    std::vector<double> logit_row(cfg.n_classes + 1);
    GlossId previous = kBlankId;
    for (std::size_t g = 0; g < cfg.glosses_per_clip; ++g) {
      // Adjacent glosses differ, so spans can abut without a blank frame.
      GlossId gloss = 0;
      if (previous == kBlankId) {
        gloss = static_cast<GlossId>(1 + rng.next_u64() % cfg.n_classes);
      } else {
        const auto k = static_cast<GlossId>(1 + rng.next_u64() % (cfg.n_classes - 1));
        gloss = k >= previous ? k + 1 : k;
      }
      previous = gloss;
      const double jitter = cfg.frame_jitter * (2.0 * rng.next_unit() - 1.0);
      const auto count = static_cast<std::size_t>(std::max<long long>(1, std::llround(cfg.frames_per_gloss_mean + jitter)));
      const std::size_t start = clip.features.frames.rows();
      const auto proto = data.prototypes.row(gloss - 1);
      for (std::size_t f = 0; f < count; ++f) {
        for (std::size_t d = 0; d < cfg.dim_in; ++d) frame[d] = proto[d] + cfg.noise_sigma * rng.next_gaussian();
        clip.features.frames.append_row(frame);
        std::fill(logit_row.begin(), logit_row.end(), off_class);
        logit_row[gloss] = on_class;
        logits.frames.append_row(logit_row);
      }
      clip.annotation.glosses.push_back(gloss);
      spans.push_back({start, start + count - 1});
    }
    clip.annotation.gold_spans = std::move(spans);
    data.corpus.clips.push_back(std::move(clip));
    data.logprobs.push_back(std::move(logits));
  }
  return data;
}

void validate(const TrainConfig& cfg) {
  if (!(cfg.lambda >= 0.0)) throw Error(ErrorCode::InvalidArgument, "train: lambda must be >= 0");
  if (!(cfg.learning_rate >= 0.0) || !std::isfinite(cfg.learning_rate)) {
    throw Error(ErrorCode::InvalidArgument, "train: learning_rate must be finite and >= 0");
  }
  if (cfg.epochs == 0) throw Error(ErrorCode::InvalidArgument, "train: epochs must be >= 1");
  if (cfg.dim_out < 2) throw Error(ErrorCode::InvalidArgument, "train: dim_out must be >= 2");
  if (cfg.feature_scale && !(*cfg.feature_scale > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "train: feature_scale must be > 0");
  }
  if (!(cfg.calibrated_inter_distance > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "train: calibrated_inter_distance must be > 0");
  }
  if (cfg.feature_margin && !(*cfg.feature_margin > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "train: feature_margin must be > 0");
  }
}

Model Model::init(std::size_t dim_in, std::size_t dim_out, std::size_t n_classes, std::uint64_t seed) {
  SplitMix64 rng(seed);
  Model m;
  m.encoder_weight = Matrix(dim_out, dim_in);
  const double enc_scale = 1.0 / std::sqrt(static_cast<double>(dim_in));
  for (double& w : m.encoder_weight.data()) w = enc_scale * rng.next_gaussian();
  m.encoder_bias.assign(dim_out, 0.0);
  m.head_weight = Matrix(n_classes, dim_out);
  const double head_scale = 1.0 / std::sqrt(static_cast<double>(dim_out));
  for (double& w : m.head_weight.data()) w = head_scale * rng.next_gaussian();
  m.head_bias.assign(n_classes, 0.0);
  return m;
}

std::size_t Model::parameter_count() const noexcept {
  return encoder_weight.data().size() + encoder_bias.size() + head_weight.data().size() + head_bias.size();
}

std::vector<double> Model::flatten() const {
  std::vector<double> out;
  out.reserve(parameter_count());
  out.insert(out.end(), encoder_weight.data().begin(), encoder_weight.data().end());
  out.insert(out.end(), encoder_bias.begin(), encoder_bias.end());
  out.insert(out.end(), head_weight.data().begin(), head_weight.data().end());
  out.insert(out.end(), head_bias.begin(), head_bias.end());
  return out;
}

void Model::assign(const std::vector<double>& flat) {
  if (flat.size() != parameter_count()) throw Error(ErrorCode::DimMismatch, "parameter vector has the wrong length");
  auto it = flat.begin();
  for (double& w : encoder_weight.data()) w = *it++;
  for (double& w : encoder_bias) w = *it++;
  for (double& w : head_weight.data()) w = *it++;
  for (double& w : head_bias) w = *it++;
}

Matrix Model::encode(const Matrix& frames) const {
  if (frames.cols() != encoder_weight.cols()) {
    throw Error(ErrorCode::DimMismatch, "encoder expects dim " + std::to_string(encoder_weight.cols()) + ", got " +
                                            std::to_string(frames.cols()));
  }
  Matrix z(frames.rows(), encoder_weight.rows());
  for (std::size_t t = 0; t < frames.rows(); ++t) {
    const auto x = frames.row(t);
    for (std::size_t o = 0; o < encoder_weight.rows(); ++o) {
      double a = encoder_bias[o];
      const auto w = encoder_weight.row(o);
      for (std::size_t i = 0; i < x.size(); ++i) a += w[i] * x[i];
      z(t, o) = output_scale * std::tanh(a);
    }
  }
  return z;
}

ObjectiveValue evaluate_objective(const Model& model, const std::vector<TrainingClip>& clips,
                                  const std::vector<PairSet>& pairs, double lambda, double feature_margin,
                                  UnpairedAnchors unpaired) {
  if (clips.empty()) throw Error(ErrorCode::InvalidArgument, "objective over zero clips");
  if (pairs.size() != clips.size()) throw Error(ErrorCode::InvalidArgument, "need one pair set per clip");
  const std::size_t n_classes = model.head_weight.rows();
  const std::size_t dim_out = model.encoder_weight.rows();
  const std::size_t dim_in = model.encoder_weight.cols();
  const double clip_weight = 1.0 / static_cast<double>(clips.size());

  ObjectiveValue out;
  out.gradient.encoder_weight = Matrix(dim_out, dim_in);
  out.gradient.encoder_bias.assign(dim_out, 0.0);
  out.gradient.head_weight = Matrix(n_classes, dim_out);
  out.gradient.head_bias.assign(n_classes, 0.0);

  const double inv_scale = 1.0 / model.output_scale;
  std::vector<double> scores(n_classes);
  std::vector<double> unit(dim_out);
  for (std::size_t c = 0; c < clips.size(); ++c) {
    const Matrix& x = *clips[c].frames;
    const Matrix z = model.encode(x);
    Matrix dz(z.rows(), dim_out);

    std::size_t labeled = 0;
    for (const auto& l : clips[c].labels) labeled += l ? 1 : 0;
    double clip_mle = 0.0;
    if (labeled > 0) {
      const double frame_weight = 1.0 / static_cast<double>(labeled);
      for (std::size_t t = 0; t < z.rows(); ++t) {
        if (!clips[c].labels[t]) continue;
        const std::size_t target = *clips[c].labels[t];
        for (std::size_t o = 0; o < dim_out; ++o) unit[o] = z(t, o) * inv_scale;
        double peak = -std::numeric_limits<double>::infinity();
        for (std::size_t k = 0; k < n_classes; ++k) {
          double s = model.head_bias[k];
          for (std::size_t o = 0; o < dim_out; ++o) s += model.head_weight(k, o) * unit[o];
          scores[k] = s;
          peak = std::max(peak, s);
        }
        double norm = 0.0;
        for (double s : scores) norm += std::exp(s - peak);
        const double log_norm = peak + std::log(norm);
        clip_mle += (log_norm - scores[target]) * frame_weight;
        for (std::size_t k = 0; k < n_classes; ++k) {
          const double delta = (std::exp(scores[k] - log_norm) - (k == target ? 1.0 : 0.0)) * frame_weight * clip_weight;
          out.gradient.head_bias[k] += delta;
          for (std::size_t o = 0; o < dim_out; ++o) {
            out.gradient.head_weight(k, o) += delta * unit[o];
            dz(t, o) += delta * model.head_weight(k, o) * inv_scale;
          }
        }
      }
    }

    const LossValue contrastive = signcl_loss(z, pairs[c], LossConfig{feature_margin, lambda}, unpaired);
    const double contrastive_scale = lambda * clip_weight;
    const auto contrastive_grad = contrastive.gradient.data();
    auto dz_flat = dz.data();
    for (std::size_t i = 0; i < dz_flat.size(); ++i) dz_flat[i] += contrastive_scale * contrastive_grad[i];

    out.mle += clip_mle * clip_weight;
    out.signcl += contrastive.loss * clip_weight;

    for (std::size_t t = 0; t < z.rows(); ++t) {
      const auto xt = x.row(t);
      for (std::size_t o = 0; o < dim_out; ++o) {
        const double da = dz(t, o) * model.output_scale * tanh_derivative_from_output(z(t, o) * inv_scale);
        if (da == 0.0) continue;
        out.gradient.encoder_bias[o] += da;
        auto gw = out.gradient.encoder_weight.row(o);
        for (std::size_t i = 0; i < dim_in; ++i) gw[i] += da * xt[i];
      }
    }
  }
  out.total = combined_loss(out.signcl, out.mle, lambda);
  return out;
}

TrainReport train(const Corpus& corpus, std::size_t n_classes, const TrainConfig& cfg,
                  const std::optional<std::vector<std::vector<GlossSpan>>>& spans) {
  validate(cfg);
  if (corpus.clips.empty()) throw Error(ErrorCode::InvalidArgument, "train: empty corpus");
  if (n_classes < 2) throw Error(ErrorCode::InvalidArgument, "train: need at least two classes");

  std::vector<std::vector<GlossSpan>> clip_spans;
  if (spans) {
    clip_spans = *spans;
    if (clip_spans.size() != corpus.clips.size()) {
      throw Error(ErrorCode::InvalidArgument, "train: spans must be given for every clip");
    }
  } else {
    for (const auto& clip : corpus.clips) clip_spans.push_back(spans_from_gold(clip.annotation));
  }
  const auto clips = make_training_clips(corpus, clip_spans, n_classes);
  for (const auto& clip : clips) {
    if (clip.frames->rows() < 2) throw Error(ErrorCode::TooFewFrames, "train: every clip needs at least 2 frames");
  }

  Model model = Model::init(corpus.dim(), cfg.dim_out, n_classes, derive_seed(cfg.seed, kModelStream));
  std::vector<double> margins;
  margins.reserve(clips.size());
  for (const auto& clip : clips) margins.push_back(estimate_margin(clip.frames->rows(), clip.text_len, cfg.margin_cfg));

  TrainReport report;
  if (cfg.feature_scale) {
    model.output_scale = *cfg.feature_scale;
  } else {
    const double unit_median = median_inter_distance(encoded_groups(model, clips));
    // Coincident initial clusters leave nothing to calibrate against.
    model.output_scale = unit_median > 0.0 ? cfg.calibrated_inter_distance / unit_median : 1.0;
  }
  report.feature_scale = model.output_scale;
  const auto initial_groups = encoded_groups(model, clips);
  report.sdr_before = dataset_sdr(initial_groups).dataset_sdr;
  report.feature_margin = cfg.feature_margin ? *cfg.feature_margin : median_inter_distance(initial_groups);
  if (!(report.feature_margin > 0.0)) report.feature_margin = cfg.calibrated_inter_distance;

  std::vector<double> params = model.flatten();
  std::vector<PairSet> pairs(clips.size());
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    const std::uint64_t epoch_seed = derive_seed(derive_seed(cfg.seed, kPairStream), epoch);
    for (std::size_t c = 0; c < clips.size(); ++c) {
      pairs[c] = sample_pairs(clips[c].frames->rows(), margins[c], derive_seed(epoch_seed, c));
    }
    const auto value = evaluate_objective(model, clips, pairs, cfg.lambda, report.feature_margin, cfg.unpaired);
    if (!std::isfinite(value.total)) {
      throw Error(ErrorCode::DivergenceDetected, "objective is non-finite at epoch " + std::to_string(epoch));
    }
    report.loss_curve.push_back({value.mle, value.signcl});
    if (cfg.learning_rate > 0.0) {
      const auto grad = value.gradient.flatten();
      for (std::size_t i = 0; i < params.size(); ++i) params[i] -= cfg.learning_rate * grad[i];
      for (double p : params) {
        if (!std::isfinite(p)) {
          throw Error(ErrorCode::DivergenceDetected, "parameters became non-finite at epoch " + std::to_string(epoch));
        }
      }
      model.assign(params);
    }
  }

  report.final_groups = encoded_groups(model, clips);
  report.final_density = dataset_sdr(report.final_groups);
  report.sdr_after = report.final_density.dataset_sdr;
  report.train_accuracy = training_accuracy(model, clips);
  return report;
}

}  // namespace signdense
