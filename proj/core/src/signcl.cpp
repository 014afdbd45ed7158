#include "signdense/signcl.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "signdense/error.hpp"
#include "signdense/splitmix64.hpp"

namespace signdense {
namespace {

std::size_t frame_gap(std::size_t a, std::size_t b) { return a > b ? a - b : b - a; }

// Adds scale * d(rows a, b)/d(row a) and its mirror to the gradient.
void accumulate_distance_grad(Matrix& grad, const Matrix& f, std::size_t a, std::size_t b, double dist,
                              double scale) {
  if (dist == 0.0) return;
  const double k = scale / dist;
  auto ga = grad.row(a);
  auto gb = grad.row(b);
  const auto fa = f.row(a);
  const auto fb = f.row(b);
  for (std::size_t c = 0; c < f.cols(); ++c) {
    const double g = k * (fa[c] - fb[c]);
    ga[c] += g;
    gb[c] -= g;
  }
}

}  // namespace

std::size_t PairSet::negative_count() const noexcept {
  return static_cast<std::size_t>(
      std::count_if(triples.begin(), triples.end(), [](const PairTriple& t) { return t.negative.has_value(); }));
}

double estimate_margin(std::size_t n_frames, std::size_t text_len, const MarginConfig& cfg) {
  if (text_len == 0) throw Error(ErrorCode::ZeroTextLength, "text length must be positive");
  if (n_frames == 0) throw Error(ErrorCode::InvalidArgument, "frame count must be positive");
  if (!(cfg.zipf_factor > 0.0) || !(cfg.floor >= 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "margin config needs zipf_factor > 0 and floor >= 0");
  }
  return std::max(cfg.floor, static_cast<double>(n_frames) / static_cast<double>(text_len) * cfg.zipf_factor);
}

PairSet sample_pairs(std::size_t n_frames, double temporal_margin, std::uint64_t seed) {
  if (n_frames < 2) {
    throw Error(ErrorCode::TooFewFrames, "need at least 2 frames, got " + std::to_string(n_frames));
  }
  if (!std::isfinite(temporal_margin) || temporal_margin < 0.0) {
    throw Error(ErrorCode::InvalidArgument, "temporal margin must be finite and nonnegative");
  }
  const double min_gap = 2.0 * temporal_margin;
  PairSet out;
  out.n_frames = n_frames;
  out.temporal_margin = temporal_margin;
  out.triples.reserve(n_frames);
  std::vector<std::size_t> valid;
  for (std::size_t st = 0; st < n_frames; ++st) {
    PairTriple t;
    t.anchor = st;
    t.positive = st + 1 < n_frames ? st + 1 : st - 1;
    valid.clear();
    for (std::size_t i = 0; i < n_frames; ++i) {
      if (static_cast<double>(frame_gap(i, st)) > min_gap) valid.push_back(i);
    }
    if (!valid.empty()) {
      SplitMix64 rng(seed ^ static_cast<std::uint64_t>(st));
      t.negative = valid[rng.next_u64() % valid.size()];
    }
    out.triples.push_back(t);
  }
  return out;
}

void validate(const PairSet& pairs) {
  for (const auto& t : pairs.triples) {
    const bool bad = t.anchor >= pairs.n_frames || t.positive >= pairs.n_frames ||
                     (t.negative && *t.negative >= pairs.n_frames);
    if (bad) {
      throw Error(ErrorCode::IndexOutOfRange, "triple for anchor " + std::to_string(t.anchor) +
                                                  " references a frame outside 0.." +
                                                  std::to_string(pairs.n_frames - 1));
    }
  }
  if (pairs.triples.size() != pairs.n_frames) {
    throw Error(ErrorCode::InvalidArgument, "expected one triple per frame (" + std::to_string(pairs.n_frames) +
                                                "), got " + std::to_string(pairs.triples.size()));
  }
  std::vector<bool> seen(pairs.n_frames, false);
  for (const auto& t : pairs.triples) {
    if (seen[t.anchor]) {
      throw Error(ErrorCode::InvalidArgument, "anchor " + std::to_string(t.anchor) + " appears twice");
    }
    seen[t.anchor] = true;
    if (frame_gap(t.anchor, t.positive) != 1) {
      throw Error(ErrorCode::InvalidArgument, "positive for anchor " + std::to_string(t.anchor) + " is not adjacent");
    }
    if (t.negative && !(static_cast<double>(frame_gap(t.anchor, *t.negative)) > 2.0 * pairs.temporal_margin)) {
      throw Error(ErrorCode::InvalidArgument, "negative for anchor " + std::to_string(t.anchor) +
                                                  " is within twice the temporal margin");
    }
  }
}

LossValue signcl_loss(const Matrix& features, const PairSet& pairs, const LossConfig& cfg, UnpairedAnchors policy) {
  if (!(cfg.feature_margin > 0.0)) throw Error(ErrorCode::InvalidArgument, "feature margin must be positive");
  if (features.rows() == 0) throw Error(ErrorCode::InvalidArgument, "empty feature matrix");
  if (pairs.n_frames != features.rows()) {
    throw Error(ErrorCode::DimMismatch, "pair set is for " + std::to_string(pairs.n_frames) + " frames, features have " +
                                            std::to_string(features.rows()));
  }
  validate(pairs);

  LossValue out;
  out.gradient = Matrix(features.rows(), features.cols());
  std::size_t n_terms = 0;
  double sum = 0.0;
  // First pass: raw distances and hinge activity; scale by 1/N afterwards.
  struct Term {
    std::size_t a, b;
    double dist, weight;
  };
  std::vector<Term> terms;
  terms.reserve(2 * pairs.triples.size());
  for (const auto& t : pairs.triples) {
    if (!t.negative && policy == UnpairedAnchors::kSkip) continue;
    ++n_terms;
    const double d_pos = euclidean_distance(features.row(t.anchor), features.row(t.positive));
    sum += d_pos;
    terms.push_back({t.anchor, t.positive, d_pos, 1.0});
    if (t.negative) {
      ++out.negative_terms;
      const double d_neg = euclidean_distance(features.row(t.anchor), features.row(*t.negative));
      if (d_neg < cfg.feature_margin) {
        sum += cfg.feature_margin - d_neg;
        ++out.active_hinges;
        terms.push_back({t.anchor, *t.negative, d_neg, -1.0});
      }
    }
  }
  if (n_terms == 0) return out;

  const double inv_n = 1.0 / static_cast<double>(n_terms);
  out.loss = sum * inv_n;
  for (const auto& term : terms) {
    accumulate_distance_grad(out.gradient, features, term.a, term.b, term.dist, term.weight * inv_n);
  }
  return out;
}

double combined_loss(double signcl, double mle, double lambda) {
  if (!(lambda >= 0.0)) throw Error(ErrorCode::InvalidArgument, "lambda must be nonnegative");
  return lambda * signcl + mle;
}

}  // namespace signdense
