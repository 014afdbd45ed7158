#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "signdense/corpus.hpp"
#include "signdense/matrix.hpp"

namespace signdense {

// One representative vector per occurrence of a gloss (rows of `members`).
struct GlossGroup {
  GlossId gloss_id = 0;
  Matrix members;

  std::size_t size() const noexcept { return members.rows(); }
};

struct GlossMetrics {
  GlossId gloss_id = 0;
  std::optional<double> intra;  // undefined for singleton groups
  double mean_inter = 0.0;
  std::optional<double> sdr;    // intra / mean_inter
};

struct DensityReport {
  std::vector<GlossMetrics> per_gloss;
  double dataset_sdr = 0.0;
  std::vector<GlossId> excluded;
};

struct DensityBin {
  std::size_t lo_rank = 0;  // 1-based, inclusive
  std::size_t hi_rank = 0;
  std::vector<GlossId> gloss_ids;
  double mean_sdr = 0.0;
  std::optional<double> mean_accuracy;
};

// Mean Euclidean distance over all cross pairs. Accumulation order depends
// only on the gloss ids, so the result is bitwise symmetric in (a, b).
double inter_gloss_distance(const GlossGroup& a, const GlossGroup& b);

// Mean Euclidean distance over ordered pairs x != y; nullopt when |g| < 2.
std::optional<double> intra_gloss_distance(const GlossGroup& g);

// `target` is matched against `all_groups` by gloss_id; every group with a
// different id contributes to the mean inter-gloss distance.
GlossMetrics gloss_sdr(const GlossGroup& target, std::span<const GlossGroup> all_groups);

DensityReport dataset_sdr(std::span<const GlossGroup> groups);

std::vector<DensityBin> bin_glosses(std::span<const GlossMetrics> metrics, std::size_t n_bins,
                                    const std::optional<std::map<GlossId, double>>& accuracy = std::nullopt);

}  // namespace signdense
