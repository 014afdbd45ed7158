#include "signdense/report.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include "json.hpp"
#include "signdense/error.hpp"

namespace signdense {

std::string format_real(double value) {
  if (!std::isfinite(value)) return "null";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", value);
  return buf;
}

std::string escape_json_string(std::string_view s) {
  std::string out;
  out.reserve(s.size() + 2);
  out.push_back('"');
  for (const char ch : s) {
    const auto c = static_cast<unsigned char>(ch);
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\r': out += "\\r"; break;
      case '\t': out += "\\t"; break;
      case '\b': out += "\\b"; break;
      case '\f': out += "\\f"; break;
      default:
        if (c < 0x20) {
          char buf[8];
          std::snprintf(buf, sizeof(buf), "\\u%04x", c);
          out += buf;
        } else {
          out.push_back(ch);
        }
    }
  }
  out.push_back('"');
  return out;
}

bool JsonWriter::compact() const {
  return indent_ == 0 || (!stack_.empty() && stack_.back().inline_elements);
}

void JsonWriter::newline(std::size_t depth) {
  out_.push_back('\n');
  out_.append(depth * static_cast<std::size_t>(indent_), ' ');
}

void JsonWriter::before_value() {
  if (after_key_) {
    after_key_ = false;
    return;
  }
  if (stack_.empty()) return;
  auto& top = stack_.back();
  if (!top.empty) out_ += compact() && indent_ != 0 ? ", " : ",";
  if (!compact()) newline(stack_.size());
  top.empty = false;
}

JsonWriter& JsonWriter::begin_object() {
  before_value();
  out_.push_back('{');
  const bool parent_inline = !stack_.empty() && stack_.back().inline_elements;
  stack_.push_back({false, parent_inline});
  return *this;
}

JsonWriter& JsonWriter::end_object() {
  const Frame top = stack_.back();
  stack_.pop_back();
  if (!top.empty && indent_ != 0 && !top.inline_elements) newline(stack_.size());
  out_.push_back('}');
  return *this;
}

JsonWriter& JsonWriter::begin_array(bool inline_elements) {
  before_value();
  out_.push_back('[');
  const bool parent_inline = !stack_.empty() && stack_.back().inline_elements;
  stack_.push_back({true, inline_elements || parent_inline});
  return *this;
}

JsonWriter& JsonWriter::end_array() {
  const Frame top = stack_.back();
  stack_.pop_back();
  if (!top.empty && indent_ != 0 && !top.inline_elements) newline(stack_.size());
  out_.push_back(']');
  return *this;
}

JsonWriter& JsonWriter::key(std::string_view name) {
  before_value();
  out_ += escape_json_string(name);
  out_ += indent_ == 0 ? ":" : ": ";
  after_key_ = true;
  return *this;
}

JsonWriter& JsonWriter::value(double v) {
  before_value();
  out_ += format_real(v);
  return *this;
}

JsonWriter& JsonWriter::value(std::optional<double> v) { return v ? value(*v) : null(); }

JsonWriter& JsonWriter::value(std::int64_t v) {
  before_value();
  out_ += std::to_string(v);
  return *this;
}

JsonWriter& JsonWriter::value(std::uint64_t v) {
  before_value();
  out_ += std::to_string(v);
  return *this;
}

JsonWriter& JsonWriter::value(bool v) {
  before_value();
  out_ += v ? "true" : "false";
  return *this;
}

JsonWriter& JsonWriter::value(std::string_view v) {
  before_value();
  out_ += escape_json_string(v);
  return *this;
}

JsonWriter& JsonWriter::null() {
  before_value();
  out_ += "null";
  return *this;
}

JsonWriter& JsonWriter::raw(std::string_view json) {
  before_value();
  out_ += json;
  return *this;
}

namespace {

void write_gloss(JsonWriter& w, GlossId id, const GlossVocab* vocab) {
  if (vocab) {
    w.value(vocab->name(id));
  } else {
    w.value(static_cast<std::uint64_t>(id));
  }
}

}  // namespace

void write_json(JsonWriter& w, const DensityReport& report, const GlossVocab* vocab) {
  w.begin_object();
  w.key("dataset_sdr").value(report.dataset_sdr);
  w.key("per_gloss").begin_array();
  for (const auto& m : report.per_gloss) {
    w.begin_object();
    w.key("gloss");
    write_gloss(w, m.gloss_id, vocab);
    w.key("intra").value(m.intra);
    w.key("mean_inter").value(m.mean_inter);
    w.key("sdr").value(m.sdr);
    w.end_object();
  }
  w.end_array();
  w.key("excluded").begin_array(true);
  for (GlossId id : report.excluded) write_gloss(w, id, vocab);
  w.end_array();
  w.end_object();
}

std::string to_json(const DensityReport& report, const GlossVocab* vocab) {
  JsonWriter w;
  write_json(w, report, vocab);
  return w.str() + "\n";
}

std::string bins_to_csv(std::span<const DensityBin> bins) {
  std::string out = "bin,lo_rank,hi_rank,mean_sdr,mean_accuracy\n";
  for (std::size_t b = 0; b < bins.size(); ++b) {
    out += std::to_string(b + 1) + "," + std::to_string(bins[b].lo_rank) + "," + std::to_string(bins[b].hi_rank) +
           "," + format_real(bins[b].mean_sdr) + "," +
           (bins[b].mean_accuracy ? format_real(*bins[b].mean_accuracy) : std::string()) + "\n";
  }
  return out;
}

void write_json(JsonWriter& w, const PairSet& pairs) {
  w.begin_object();
  w.key("n_frames").value(static_cast<std::uint64_t>(pairs.n_frames));
  w.key("temporal_margin").value(pairs.temporal_margin);
  w.key("negative_terms").value(static_cast<std::uint64_t>(pairs.negative_count()));
  w.key("triples").begin_array();
  for (const auto& t : pairs.triples) {
    w.begin_array(true);
    w.value(static_cast<std::uint64_t>(t.anchor)).value(static_cast<std::uint64_t>(t.positive));
    if (t.negative) {
      w.value(static_cast<std::uint64_t>(*t.negative));
    } else {
      w.null();
    }
    w.end_array();
  }
  w.end_array();
  w.end_object();
}

std::string to_json(const PairSet& pairs) {
  JsonWriter w;
  write_json(w, pairs);
  return w.str() + "\n";
}

PairSet parse_pair_set(std::string_view text) {
  using nlohmann::json;
  const json doc = json::parse(text, nullptr, false);
  if (doc.is_discarded() || !doc.is_object()) throw Error(ErrorCode::MalformedRecord, "pair set is not a JSON object");
  PairSet out;
  const auto n = doc.find("n_frames");
  if (n == doc.end() || !n->is_number_unsigned()) {
    throw Error(ErrorCode::MalformedRecord, "pair set needs unsigned integer 'n_frames'");
  }
  out.n_frames = n->get<std::size_t>();
  if (const auto m = doc.find("temporal_margin"); m != doc.end() && !m->is_null()) {
    if (!m->is_number()) throw Error(ErrorCode::MalformedRecord, "'temporal_margin' must be a number");
    out.temporal_margin = m->get<double>();
  }
  const auto triples = doc.find("triples");
  if (triples == doc.end() || !triples->is_array()) {
    throw Error(ErrorCode::MalformedRecord, "pair set needs array 'triples'");
  }
  for (const auto& t : *triples) {
    const bool ok = t.is_array() && (t.size() == 2 || t.size() == 3) && t[0].is_number_unsigned() &&
                    t[1].is_number_unsigned() && (t.size() == 2 || t[2].is_null() || t[2].is_number_unsigned());
    if (!ok) throw Error(ErrorCode::MalformedRecord, "triple must be [anchor, positive, negative|null]");
    PairTriple triple{t[0].get<std::size_t>(), t[1].get<std::size_t>(), std::nullopt};
    if (t.size() == 3 && !t[2].is_null()) triple.negative = t[2].get<std::size_t>();
    out.triples.push_back(triple);
  }
  return out;
}

void write_json(JsonWriter& w, const WerResult& result) {
  w.begin_object();
  w.key("substitutions").value(static_cast<std::uint64_t>(result.substitutions));
  w.key("deletions").value(static_cast<std::uint64_t>(result.deletions));
  w.key("insertions").value(static_cast<std::uint64_t>(result.insertions));
  w.key("ref_len").value(static_cast<std::uint64_t>(result.ref_len));
  w.key("wer").value(result.wer);
  w.end_object();
}

std::string spans_to_jsonl_line(std::string_view clip_id, std::span<const GlossSpan> spans, const GlossVocab& vocab) {
  JsonWriter w(0);
  w.begin_object();
  w.key("id").value(clip_id);
  w.key("spans").begin_array();
  for (const auto& s : spans) {
    w.begin_array();
    w.value(static_cast<std::uint64_t>(s.start))
        .value(static_cast<std::uint64_t>(s.end))
        .value(static_cast<std::uint64_t>(s.representative))
        .value(vocab.name(s.gloss_id));
    w.end_array();
  }
  w.end_array();
  w.end_object();
  return w.str();
}

void write_json(JsonWriter& w, const TrainReport& report) {
  w.begin_object();
  w.key("sdr_before").value(report.sdr_before);
  w.key("sdr_after").value(report.sdr_after);
  w.key("feature_margin").value(report.feature_margin);
  w.key("feature_scale").value(report.feature_scale);
  w.key("train_accuracy").value(report.train_accuracy);
  w.key("loss_curve").begin_array();
  for (const auto& e : report.loss_curve) {
    w.begin_object();
    w.key("mle").value(e.mle);
    w.key("signcl").value(e.signcl);
    w.end_object();
  }
  w.end_array();
  w.key("final_density");
  write_json(w, report.final_density);
  w.end_object();
}

std::string to_json(const TrainReport& report) {
  JsonWriter w;
  write_json(w, report);
  return w.str() + "\n";
}

}  // namespace signdense
