#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "signdense/matrix.hpp"

namespace signdense {

// Gloss ids index the vocabulary starting at 1; 0 is the CTC blank.
using GlossId = std::uint32_t;
inline constexpr GlossId kBlankId = 0;

struct FrameSpan {
  std::size_t start = 0;
  std::size_t end = 0;  // inclusive

  bool operator==(const FrameSpan&) const = default;
};

struct FeatureSequence {
  std::string clip_id;
  Matrix frames;  // T x dim

  std::size_t length() const noexcept { return frames.rows(); }
  std::size_t dim() const noexcept { return frames.cols(); }
};

struct GlossAnnotation {
  std::string clip_id;
  std::vector<GlossId> glosses;
  std::size_t text_len = 1;
  std::optional<std::vector<FrameSpan>> gold_spans;
};

class GlossVocab {
 public:
  GlossVocab() = default;
  explicit GlossVocab(std::vector<std::string> names);

  // Number of real glosses (V); the blank is not counted.
  std::size_t size() const noexcept { return names_.size(); }
  const std::string& name(GlossId id) const;
  std::optional<GlossId> find(std::string_view name) const;
  const std::vector<std::string>& names() const noexcept { return names_; }

 private:
  std::vector<std::string> names_;
  std::unordered_map<std::string, GlossId> index_;
};

// Per-frame log-probabilities; column 0 is the blank.
struct LogProbSequence {
  std::string clip_id;
  Matrix frames;  // T x (V+1)
};

struct Clip {
  FeatureSequence features;
  GlossAnnotation annotation;
};

struct Corpus {
  std::vector<Clip> clips;
  std::vector<std::string> unmatched_features;
  std::vector<std::string> unmatched_annotations;

  std::size_t dim() const noexcept { return clips.empty() ? 0 : clips.front().features.dim(); }
};

inline constexpr double kLogProbTolerance = 1e-6;

void validate(const FeatureSequence& seq);
void validate(const LogProbSequence& seq);
// Checks ordering/disjointness always; the upper bound only when frame_count is given.
void validate_spans(const std::vector<FrameSpan>& spans, std::optional<std::size_t> frame_count,
                    std::string_view context);

// Reads SGF1 binary or falls back to CSV. clip_id defaults to the file stem.
FeatureSequence load_features(const std::filesystem::path& path);
LogProbSequence load_logprobs(const std::filesystem::path& path);
void write_features(const std::filesystem::path& path, const FeatureSequence& seq);
void write_logprobs(const std::filesystem::path& path, const LogProbSequence& seq);

FeatureSequence parse_features_csv(std::string_view text, std::string clip_id);

GlossVocab load_vocab(const std::filesystem::path& path);
std::vector<GlossAnnotation> load_annotations(const std::filesystem::path& path,
                                              const GlossVocab& vocab);
std::vector<GlossAnnotation> parse_annotations(std::string_view jsonl, const GlossVocab& vocab,
                                               std::string_view source = "<memory>");

Corpus join_corpus(std::vector<FeatureSequence> features, std::vector<GlossAnnotation> annotations);

// Loads every *.sgf / *.csv (features) or *.sgl (log-probs) file in a
// directory, sorted by file name.
std::vector<FeatureSequence> load_feature_dir(const std::filesystem::path& dir);
std::vector<LogProbSequence> load_logprob_dir(const std::filesystem::path& dir);

}  // namespace signdense
