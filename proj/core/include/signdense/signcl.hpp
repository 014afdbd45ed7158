#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "signdense/corpus.hpp"
#include "signdense/matrix.hpp"

namespace signdense {

struct MarginConfig {
  double zipf_factor = 2.3;  // spoken words per gloss
  double floor = 10.0;       // minimum temporal margin, in frames
};

struct PairTriple {
  std::size_t anchor = 0;
  std::size_t positive = 0;
  std::optional<std::size_t> negative;

  bool operator==(const PairTriple&) const = default;
};

struct PairSet {
  std::vector<PairTriple> triples;
  std::size_t n_frames = 0;
  double temporal_margin = 0.0;

  std::size_t negative_count() const noexcept;
  bool operator==(const PairSet&) const = default;
};

struct LossConfig {
  double feature_margin = 64.0;  // m, hinge floor on negative distances
  double lambda = 0.01;          // weight of the contrastive term
};

// How anchors that have no valid negative enter the loss.
enum class UnpairedAnchors {
  kKeep,  // positive term only; still counted in N
  kSkip,  // dropped from the sum and from N
};

struct LossValue {
  double loss = 0.0;
  Matrix gradient;  // d loss / d frames, same shape as the input
  std::size_t negative_terms = 0;
  std::size_t active_hinges = 0;
};

// max(floor, n_frames / text_len * zipf_factor), unrounded.
double estimate_margin(std::size_t n_frames, std::size_t text_len, const MarginConfig& cfg = {});

// One triple per anchor frame. The positive is the next frame (previous for
// the last one). The negative is drawn from {i : |i - anchor| > 2 * margin}
// with SplitMix64(seed ^ anchor), index = next_u64 mod |valid|.
PairSet sample_pairs(std::size_t n_frames, double temporal_margin, std::uint64_t seed);

void validate(const PairSet& pairs);

LossValue signcl_loss(const Matrix& features, const PairSet& pairs, const LossConfig& cfg,
                      UnpairedAnchors policy = UnpairedAnchors::kKeep);

inline LossValue signcl_loss(const FeatureSequence& features, const PairSet& pairs, const LossConfig& cfg,
                             UnpairedAnchors policy = UnpairedAnchors::kKeep) {
  return signcl_loss(features.frames, pairs, cfg, policy);
}

// lambda * signcl + mle
double combined_loss(double signcl, double mle, double lambda);

}  // namespace signdense
