#include "signdense/density.hpp"

#include <algorithm>
#include <numeric>
#include <set>
#include <string>

#include "signdense/error.hpp"

namespace signdense {
namespace {

double sum_cross_distances(const Matrix& a, const Matrix& b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < b.rows(); ++j) acc += euclidean_distance(a.row(i), b.row(j));
  }
  return acc;
}

void check_group(const GlossGroup& g) {
  if (g.size() == 0) {
    throw Error(ErrorCode::InvalidArgument, "gloss " + std::to_string(g.gloss_id) + " has no members");
  }
}

// Inter-gloss distances against every other group, in input order.
double mean_inter_for(std::size_t target, std::span<const GlossGroup> groups) {
  double acc = 0.0;
  std::size_t count = 0;
  for (std::size_t j = 0; j < groups.size(); ++j) {
    if (groups[j].gloss_id == groups[target].gloss_id) continue;
    acc += inter_gloss_distance(groups[target], groups[j]);
    ++count;
  }
  if (count == 0) {
    throw Error(ErrorCode::SingleGroupCorpus,
                "gloss " + std::to_string(groups[target].gloss_id) + " has no other gloss to compare with");
  }
  return acc / static_cast<double>(count);
}

GlossMetrics finish_metrics(const GlossGroup& g, double mean_inter) {
  GlossMetrics m;
  m.gloss_id = g.gloss_id;
  m.intra = intra_gloss_distance(g);
  m.mean_inter = mean_inter;
  if (m.intra && mean_inter > 0.0) m.sdr = *m.intra / mean_inter;
  return m;
}

}  // namespace

double inter_gloss_distance(const GlossGroup& a, const GlossGroup& b) {
  check_group(a);
  check_group(b);
  if (a.gloss_id == b.gloss_id) {
    throw Error(ErrorCode::InvalidArgument, "inter-gloss distance needs two distinct glosses");
  }
  if (a.members.cols() != b.members.cols()) {
    throw Error(ErrorCode::DimMismatch, "glosses " + std::to_string(a.gloss_id) + " and " +
                                            std::to_string(b.gloss_id) + " differ in dimension");
  }
  const bool a_first = a.gloss_id < b.gloss_id;
  const Matrix& lo = a_first ? a.members : b.members;
  const Matrix& hi = a_first ? b.members : a.members;
  return sum_cross_distances(lo, hi) / (static_cast<double>(lo.rows()) * static_cast<double>(hi.rows()));
}

std::optional<double> intra_gloss_distance(const GlossGroup& g) {
  const std::size_t n = g.size();
  if (n < 2) return std::nullopt;
  // d is symmetric, so the ordered-pair sum is twice the unordered one.
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) acc += euclidean_distance(g.members.row(i), g.members.row(j));
  }
  return 2.0 * acc / (static_cast<double>(n) * static_cast<double>(n - 1));
}

GlossMetrics gloss_sdr(const GlossGroup& target, std::span<const GlossGroup> all_groups) {
  check_group(target);
  const auto it = std::find_if(all_groups.begin(), all_groups.end(),
                               [&](const GlossGroup& g) { return g.gloss_id == target.gloss_id; });
  if (it == all_groups.end()) {
    throw Error(ErrorCode::InvalidArgument,
                "gloss " + std::to_string(target.gloss_id) + " is not part of the supplied groups");
  }
  const auto index = static_cast<std::size_t>(it - all_groups.begin());
  return finish_metrics(target, mean_inter_for(index, all_groups));
}

DensityReport dataset_sdr(std::span<const GlossGroup> groups) {
  if (groups.size() < 2) {
    throw Error(ErrorCode::SingleGroupCorpus, "need at least two glosses, got " + std::to_string(groups.size()));
  }
  std::set<GlossId> seen;
  for (const auto& g : groups) {
    check_group(g);
    if (!seen.insert(g.gloss_id).second) {
      throw Error(ErrorCode::InvalidArgument, "gloss " + std::to_string(g.gloss_id) + " appears twice");
    }
  }

  // The pairwise table is filled once; inter_gloss_distance is symmetric
  // bit-for-bit so either triangle is valid.
  const std::size_t k = groups.size();
  std::vector<double> inter(k * k, 0.0);
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = i + 1; j < k; ++j) {
      inter[i * k + j] = inter[j * k + i] = inter_gloss_distance(groups[i], groups[j]);
    }
  }

  DensityReport report;
  double sdr_sum = 0.0;
  std::size_t defined = 0;
  for (std::size_t i = 0; i < k; ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      if (j != i) acc += inter[i * k + j];
    }
    auto m = finish_metrics(groups[i], acc / static_cast<double>(k - 1));
    if (m.sdr) {
      sdr_sum += *m.sdr;
      ++defined;
    } else {
      report.excluded.push_back(m.gloss_id);
    }
    report.per_gloss.push_back(std::move(m));
  }
  if (defined == 0) throw Error(ErrorCode::NoDefinedSdr, "every gloss has an undefined SDR");
  report.dataset_sdr = sdr_sum / static_cast<double>(defined);
  return report;
}

std::vector<DensityBin> bin_glosses(std::span<const GlossMetrics> metrics, std::size_t n_bins,
                                    const std::optional<std::map<GlossId, double>>& accuracy) {
  if (n_bins == 0) throw Error(ErrorCode::InvalidArgument, "n_bins must be positive");
  std::vector<const GlossMetrics*> ranked;
  for (const auto& m : metrics) {
    if (m.sdr) ranked.push_back(&m);
  }
  if (ranked.size() < n_bins) {
    throw Error(ErrorCode::TooFewGlosses, std::to_string(ranked.size()) + " glosses with defined SDR for " +
                                              std::to_string(n_bins) + " bins");
  }
  std::stable_sort(ranked.begin(), ranked.end(), [](const GlossMetrics* a, const GlossMetrics* b) {
    if (*a->sdr != *b->sdr) return *a->sdr < *b->sdr;
    return a->gloss_id < b->gloss_id;
  });

  const std::size_t base = ranked.size() / n_bins;
  const std::size_t extra = ranked.size() % n_bins;
  std::vector<DensityBin> bins;
  std::size_t cursor = 0;
  for (std::size_t b = 0; b < n_bins; ++b) {
    const std::size_t size = base + (b < extra ? 1 : 0);
    DensityBin bin;
    bin.lo_rank = cursor + 1;
    bin.hi_rank = cursor + size;
    double sdr_sum = 0.0;
    double acc_sum = 0.0;
    std::size_t acc_count = 0;
    for (std::size_t i = cursor; i < cursor + size; ++i) {
      bin.gloss_ids.push_back(ranked[i]->gloss_id);
      sdr_sum += *ranked[i]->sdr;
      if (accuracy) {
        if (const auto it = accuracy->find(ranked[i]->gloss_id); it != accuracy->end()) {
          acc_sum += it->second;
          ++acc_count;
        }
      }
    }
    bin.mean_sdr = sdr_sum / static_cast<double>(size);
    if (acc_count > 0) bin.mean_accuracy = acc_sum / static_cast<double>(acc_count);
    bins.push_back(std::move(bin));
    cursor += size;
  }
  return bins;
}

}  // namespace signdense
