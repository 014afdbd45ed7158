#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "signdense/aligner.hpp"
#include "signdense/density.hpp"
#include "signdense/signcl.hpp"
#include "signdense/stats.hpp"
#include "signdense/trainer.hpp"

namespace signdense {

// Reals render with 17 significant digits ("%.17g"); non-finite values and
// nullopt render as null. Output is byte-stable for identical inputs.
std::string format_real(double value);

// Streaming JSON emitter. Keys appear exactly in call order.
class JsonWriter {
 public:
  // indent == 0 produces single-line output (used for JSONL).
  explicit JsonWriter(int indent = 2) : indent_(indent) {}

  JsonWriter& begin_object();
  JsonWriter& end_object();
  // Inline arrays keep their elements on one line even when indenting.
  JsonWriter& begin_array(bool inline_elements = false);
  JsonWriter& end_array();
  JsonWriter& key(std::string_view name);

  JsonWriter& value(double v);
  JsonWriter& value(std::optional<double> v);
  JsonWriter& value(std::int64_t v);
  JsonWriter& value(std::uint64_t v);
  JsonWriter& value(std::uint32_t v) { return value(static_cast<std::uint64_t>(v)); }
  JsonWriter& value(int v) { return value(static_cast<std::int64_t>(v)); }
  JsonWriter& value(bool v);
  JsonWriter& value(std::string_view v);
  JsonWriter& value(const char* v) { return value(std::string_view(v)); }
  JsonWriter& value(const std::string& v) { return value(std::string_view(v)); }
  JsonWriter& null();
  // Splices pre-rendered JSON as one value.
  JsonWriter& raw(std::string_view json);

  const std::string& str() const noexcept { return out_; }

 private:
  struct Frame {
    bool is_array;
    bool inline_elements;
    bool empty = true;
  };

  void before_value();
  void newline(std::size_t depth);
  bool compact() const;

  int indent_;
  std::string out_;
  std::vector<Frame> stack_;
  bool after_key_ = false;
};

std::string escape_json_string(std::string_view s);

// {dataset_sdr, per_gloss:[{gloss,intra,mean_inter,sdr}], excluded:[...]}.
// Glosses render as names when a vocabulary is given, ids otherwise.
void write_json(JsonWriter& w, const DensityReport& report, const GlossVocab* vocab = nullptr);
std::string to_json(const DensityReport& report, const GlossVocab* vocab = nullptr);

// Header bin,lo_rank,hi_rank,mean_sdr,mean_accuracy; bins are 1-based.
std::string bins_to_csv(std::span<const DensityBin> bins);

void write_json(JsonWriter& w, const PairSet& pairs);
std::string to_json(const PairSet& pairs);
// Reads the format written by to_json(PairSet); temporal_margin defaults to 0.
PairSet parse_pair_set(std::string_view json);

void write_json(JsonWriter& w, const WerResult& result);

// {"id":..., "spans":[[start,end,rep,gloss],...]} on one line.
std::string spans_to_jsonl_line(std::string_view clip_id, std::span<const GlossSpan> spans, const GlossVocab& vocab);

void write_json(JsonWriter& w, const TrainReport& report);
std::string to_json(const TrainReport& report);

}  // namespace signdense
