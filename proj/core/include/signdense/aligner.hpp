#pragma once

#include <algorithm>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "signdense/corpus.hpp"
#include "signdense/density.hpp"
#include "signdense/error.hpp"

namespace signdense {

struct GlossSpan {
  GlossId gloss_id = 0;
  std::size_t start = 0;
  std::size_t end = 0;  // inclusive
  std::size_t representative = 0;

  bool operator==(const GlossSpan&) const = default;
};

// Best path through the blank-extended label sequence
// [blank, g1, blank, g2, ..., gL, blank]; `states[t]` is the extended-label
// index occupied at frame t.
struct CtcPath {
  double log_prob = 0.0;
  std::vector<std::size_t> states;
};

// L plus one separating blank for every adjacent repeated gloss.
std::size_t min_ctc_length(std::span<const GlossId> glosses);

CtcPath viterbi_path(const LogProbSequence& logprobs, std::span<const GlossId> glosses);

// Exactly glosses.size() spans, in order; representative is the midpoint.
std::vector<GlossSpan> forced_align(const LogProbSequence& logprobs, std::span<const GlossId> glosses);

// Gold spans from an annotation, midpoint representatives.
std::vector<GlossSpan> spans_from_gold(const GlossAnnotation& annotation);

// `spans[c]` belongs to `corpus.clips[c]`. Groups come back sorted by gloss id.
std::vector<GlossGroup> spans_to_groups(const Corpus& corpus, const std::vector<std::vector<GlossSpan>>& spans);

struct WerResult {
  std::size_t substitutions = 0;
  std::size_t deletions = 0;
  std::size_t insertions = 0;
  std::size_t ref_len = 0;
  double wer = 0.0;

  std::size_t errors() const noexcept { return substitutions + deletions + insertions; }
};

// Levenshtein alignment with unit costs. On backtrace ties a diagonal step
// (match or substitution) wins over deletion, deletion over insertion.
template <typename Token>
WerResult wer(std::span<const Token> reference, std::span<const Token> hypothesis) {
  if (reference.empty()) throw Error(ErrorCode::EmptyReference, "reference sequence is empty");
  const std::size_t n = reference.size();
  const std::size_t m = hypothesis.size();
  std::vector<std::size_t> cost((n + 1) * (m + 1));
  auto at = [&](std::size_t i, std::size_t j) -> std::size_t& { return cost[i * (m + 1) + j]; };
  for (std::size_t i = 0; i <= n; ++i) at(i, 0) = i;
  for (std::size_t j = 0; j <= m; ++j) at(0, j) = j;
  for (std::size_t i = 1; i <= n; ++i) {
    for (std::size_t j = 1; j <= m; ++j) {
      const std::size_t diag = at(i - 1, j - 1) + (reference[i - 1] == hypothesis[j - 1] ? 0 : 1);
      at(i, j) = std::min({diag, at(i - 1, j) + 1, at(i, j - 1) + 1});
    }
  }

  WerResult r;
  r.ref_len = n;
  std::size_t i = n;
  std::size_t j = m;
  while (i > 0 || j > 0) {
    if (i > 0 && j > 0) {
      const bool same = reference[i - 1] == hypothesis[j - 1];
      if (at(i, j) == at(i - 1, j - 1) + (same ? 0 : 1)) {
        if (!same) ++r.substitutions;
        --i;
        --j;
        continue;
      }
    }
    if (i > 0 && at(i, j) == at(i - 1, j) + 1) {
      ++r.deletions;
      --i;
    } else {
      ++r.insertions;
      --j;
    }
  }
  r.wer = static_cast<double>(r.errors()) / static_cast<double>(n);
  return r;
}

inline WerResult wer(const std::vector<GlossId>& reference, const std::vector<GlossId>& hypothesis) {
  return wer<GlossId>(std::span<const GlossId>(reference), std::span<const GlossId>(hypothesis));
}

inline WerResult wer(const std::vector<std::string>& reference, const std::vector<std::string>& hypothesis) {
  return wer<std::string>(std::span<const std::string>(reference), std::span<const std::string>(hypothesis));
}

}  // namespace signdense
