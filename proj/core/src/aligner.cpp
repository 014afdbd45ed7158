#include "signdense/aligner.hpp"

#include <cmath>
#include <limits>
#include <map>

namespace signdense {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Extended label at index s: even positions are blanks.
GlossId label_at(std::span<const GlossId> glosses, std::size_t s) {
  return s % 2 == 0 ? kBlankId : glosses[s / 2];
}

}  // namespace

std::size_t min_ctc_length(std::span<const GlossId> glosses) {
  std::size_t repeats = 0;
  for (std::size_t i = 1; i < glosses.size(); ++i) {
    if (glosses[i] == glosses[i - 1]) ++repeats;
  }
  return glosses.size() + repeats;
}

CtcPath viterbi_path(const LogProbSequence& logprobs, std::span<const GlossId> glosses) {
  if (glosses.empty()) throw Error(ErrorCode::EmptyGlossList, logprobs.clip_id + ": no glosses to align");
  const std::size_t n_classes = logprobs.frames.cols();
  for (GlossId g : glosses) {
    if (g == kBlankId || g >= n_classes) {
      throw Error(ErrorCode::InvalidArgument, logprobs.clip_id + ": gloss id " + std::to_string(g) +
                                                  " outside 1.." + std::to_string(n_classes - 1));
    }
  }
  const std::size_t frames = logprobs.frames.rows();
  const std::size_t needed = min_ctc_length(glosses);
  if (frames < needed) {
    throw Error(ErrorCode::SequenceTooShort, logprobs.clip_id + ": T=" + std::to_string(frames) +
                                                 " but the gloss sequence needs " + std::to_string(needed));
  }

  const std::size_t states = 2 * glosses.size() + 1;
  std::vector<double> score(states, kNegInf);
  std::vector<double> next(states);
  // back[t * states + s] = predecessor state at frame t-1.
  std::vector<std::size_t> back(frames * states, 0);

  score[0] = logprobs.frames(0, kBlankId);
  score[1] = logprobs.frames(0, glosses[0]);
  for (std::size_t t = 1; t < frames; ++t) {
    for (std::size_t s = 0; s < states; ++s) {
      const GlossId label = label_at(glosses, s);
      // Candidates examined from most to least advanced; a strict '>' keeps
      // the most advanced predecessor on ties.
      double best = kNegInf;
      std::size_t from = s;
      if (s >= 2 && label != kBlankId && label != label_at(glosses, s - 2) && score[s - 2] > best) {
        best = score[s - 2];
        from = s - 2;
      }
      if (s >= 1 && score[s - 1] > best) {
        best = score[s - 1];
        from = s - 1;
      }
      if (score[s] > best) {
        best = score[s];
        from = s;
      }
      next[s] = best == kNegInf ? kNegInf : best + logprobs.frames(t, label);
      back[t * states + s] = from;
    }
    std::swap(score, next);
  }

  std::size_t last = states - 1;
  if (score[states - 2] > score[states - 1]) last = states - 2;
  if (score[last] == kNegInf) {
    throw Error(ErrorCode::SequenceTooShort, logprobs.clip_id + ": no path with finite probability");
  }

  CtcPath path;
  path.log_prob = score[last];
  path.states.resize(frames);
  std::size_t s = last;
  for (std::size_t t = frames; t-- > 0;) {
    path.states[t] = s;
    if (t > 0) s = back[t * states + s];
  }
  return path;
}

std::vector<GlossSpan> forced_align(const LogProbSequence& logprobs, std::span<const GlossId> glosses) {
  const CtcPath path = viterbi_path(logprobs, glosses);
  std::vector<GlossSpan> spans(glosses.size());
  std::vector<bool> seen(glosses.size(), false);
  for (std::size_t t = 0; t < path.states.size(); ++t) {
    const std::size_t s = path.states[t];
    if (s % 2 == 0) continue;
    const std::size_t v = s / 2;
    if (!seen[v]) {
      spans[v] = {glosses[v], t, t, t};
      seen[v] = true;
    }
    spans[v].end = t;
  }
  for (auto& span : spans) span.representative = (span.start + span.end) / 2;
  return spans;
}

std::vector<GlossSpan> spans_from_gold(const GlossAnnotation& annotation) {
  if (!annotation.gold_spans) {
    throw Error(ErrorCode::InvalidArgument, annotation.clip_id + ": annotation carries no gold spans");
  }
  std::vector<GlossSpan> out;
  out.reserve(annotation.glosses.size());
  for (std::size_t i = 0; i < annotation.glosses.size(); ++i) {
    const auto& s = (*annotation.gold_spans)[i];
    out.push_back({annotation.glosses[i], s.start, s.end, (s.start + s.end) / 2});
  }
  return out;
}

std::vector<GlossGroup> spans_to_groups(const Corpus& corpus, const std::vector<std::vector<GlossSpan>>& spans) {
  if (spans.size() != corpus.clips.size()) {
    throw Error(ErrorCode::InvalidArgument, "got spans for " + std::to_string(spans.size()) + " clips, corpus has " +
                                                std::to_string(corpus.clips.size()));
  }
  std::map<GlossId, GlossGroup> groups;
  for (std::size_t c = 0; c < spans.size(); ++c) {
    const auto& features = corpus.clips[c].features;
    for (const auto& span : spans[c]) {
      if (span.representative >= features.length()) {
        throw Error(ErrorCode::FrameOutOfRange, features.clip_id + ": representative frame " +
                                                    std::to_string(span.representative) + " but T=" +
                                                    std::to_string(features.length()));
      }
      auto& g = groups[span.gloss_id];
      g.gloss_id = span.gloss_id;
      g.members.append_row(features.frames.row(span.representative));
    }
  }
  std::vector<GlossGroup> out;
  out.reserve(groups.size());
  for (auto& [id, g] : groups) out.push_back(std::move(g));
  return out;
}

}  // namespace signdense
