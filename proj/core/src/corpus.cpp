#include "signdense/corpus.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <set>
#include <sstream>
#include <unordered_set>

#include "json.hpp"
#include "signdense/error.hpp"

namespace signdense {
namespace {

constexpr std::array<char, 4> kFeatureMagic = {'S', 'G', 'F', '1'};
constexpr std::array<char, 4> kLogProbMagic = {'S', 'G', 'L', '1'};
constexpr std::size_t kHeaderBytes = 12;

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open '" + path.string() + "'");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::uint32_t read_u32_le(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

void append_u32_le(std::string& out, std::uint32_t v) {
  for (int shift = 0; shift < 32; shift += 8) out.push_back(static_cast<char>((v >> shift) & 0xffU));
}

bool has_magic(std::string_view bytes, const std::array<char, 4>& magic) {
  return bytes.size() >= magic.size() && std::equal(magic.begin(), magic.end(), bytes.begin());
}

Matrix decode_binary(std::string_view bytes, const std::array<char, 4>& magic, const std::string& where) {
  if (!has_magic(bytes, magic)) {
    throw Error(ErrorCode::MalformedHeader, where + ": bad magic, expected '" +
                                                std::string(magic.begin(), magic.end()) + "'");
  }
  if (bytes.size() < kHeaderBytes) throw Error(ErrorCode::TruncatedFile, where + ": header cut short");
  const auto* raw = reinterpret_cast<const unsigned char*>(bytes.data());
  const std::uint32_t rows = read_u32_le(raw + 4);
  const std::uint32_t cols = read_u32_le(raw + 8);
  if (rows == 0 || cols == 0) {
    throw Error(ErrorCode::MalformedHeader, where + ": T and dim must be positive");
  }
  const std::uint64_t expected = static_cast<std::uint64_t>(rows) * cols * 4;
  const std::uint64_t payload = bytes.size() - kHeaderBytes;
  if (payload < expected) {
    throw Error(ErrorCode::TruncatedFile, where + ": payload has " + std::to_string(payload) +
                                              " bytes, header declares " + std::to_string(expected));
  }
  if (payload > expected) {
    throw Error(ErrorCode::MalformedHeader, where + ": " + std::to_string(payload - expected) +
                                                " trailing bytes after payload");
  }
  Matrix m(rows, cols);
  auto out = m.data();
  const unsigned char* p = raw + kHeaderBytes;
  for (std::size_t i = 0; i < out.size(); ++i, p += 4) {
    out[i] = static_cast<double>(std::bit_cast<float>(read_u32_le(p)));
  }
  return m;
}

std::string encode_binary(const Matrix& m, const std::array<char, 4>& magic, const std::string& where) {
  std::string out(magic.begin(), magic.end());
  append_u32_le(out, static_cast<std::uint32_t>(m.rows()));
  append_u32_le(out, static_cast<std::uint32_t>(m.cols()));
  out.reserve(out.size() + m.data().size() * 4);
  for (double v : m.data()) {
    const auto f = static_cast<float>(v);
    if (!std::isfinite(f)) throw Error(ErrorCode::NonFiniteValue, where + ": value not representable as f32");
    append_u32_le(out, std::bit_cast<std::uint32_t>(f));
  }
  return out;
}

void write_file(const std::filesystem::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot write '" + path.string() + "'");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::IoError, "write failed for '" + path.string() + "'");
}

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    if (nl == std::string_view::npos) {
      if (pos < text.size()) lines.push_back(text.substr(pos));
      break;
    }
    lines.push_back(text.substr(pos, nl - pos));
    pos = nl + 1;
  }
  return lines;
}

}  // namespace

GlossVocab::GlossVocab(std::vector<std::string> names) : names_(std::move(names)) {
  if (names_.empty()) throw Error(ErrorCode::MalformedRecord, "vocabulary is empty");
  for (std::size_t i = 0; i < names_.size(); ++i) {
    if (names_[i].empty()) {
      throw Error(ErrorCode::MalformedRecord, "vocabulary entry " + std::to_string(i + 1) + " is empty");
    }
    if (!index_.emplace(names_[i], static_cast<GlossId>(i + 1)).second) {
      throw Error(ErrorCode::MalformedRecord, "duplicate vocabulary entry '" + names_[i] + "'");
    }
  }
}

const std::string& GlossVocab::name(GlossId id) const {
  if (id == kBlankId || id > names_.size()) {
    throw Error(ErrorCode::UnknownGloss, "gloss id " + std::to_string(id) + " not in vocabulary");
  }
  return names_[id - 1];
}

std::optional<GlossId> GlossVocab::find(std::string_view name) const {
  const auto it = index_.find(std::string(name));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

void validate(const FeatureSequence& seq) {
  if (seq.frames.rows() == 0 || seq.frames.cols() == 0) {
    throw Error(ErrorCode::MalformedHeader, seq.clip_id + ": empty feature matrix");
  }
  const auto data = seq.frames.data();
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (!std::isfinite(data[i])) {
      throw Error(ErrorCode::NonFiniteValue, seq.clip_id + ": frame " + std::to_string(i / seq.dim()) +
                                                 " column " + std::to_string(i % seq.dim()));
    }
  }
}

void validate(const LogProbSequence& seq) {
  if (seq.frames.rows() == 0 || seq.frames.cols() < 2) {
    throw Error(ErrorCode::MalformedHeader, seq.clip_id + ": log-prob matrix needs T>=1 and V+1>=2");
  }
  for (std::size_t t = 0; t < seq.frames.rows(); ++t) {
    const auto row = seq.frames.row(t);
    double peak = -std::numeric_limits<double>::infinity();
    for (double v : row) {
      if (std::isnan(v) || v == std::numeric_limits<double>::infinity()) {
        throw Error(ErrorCode::NonFiniteValue, seq.clip_id + ": frame " + std::to_string(t));
      }
      peak = std::max(peak, v);
    }
    double acc = 0.0;
    for (double v : row) acc += std::exp(v - peak);
    const double lse = peak + std::log(acc);
    if (!(std::abs(lse) <= kLogProbTolerance)) {
      throw Error(ErrorCode::MalformedRecord, seq.clip_id + ": frame " + std::to_string(t) +
                                                  " log-probs do not normalize (logsumexp " +
                                                  std::to_string(lse) + ")");
    }
  }
}

void validate_spans(const std::vector<FrameSpan>& spans, std::optional<std::size_t> frame_count,
                    std::string_view context) {
  for (std::size_t i = 0; i < spans.size(); ++i) {
    const auto& s = spans[i];
    if (s.start > s.end) {
      throw Error(ErrorCode::SpanOrderViolation, std::string(context) + ": span " + std::to_string(i) +
                                                     " has start > end");
    }
    if (i > 0 && s.start <= spans[i - 1].end) {
      throw Error(ErrorCode::SpanOrderViolation, std::string(context) + ": span " + std::to_string(i) +
                                                     " overlaps or precedes span " + std::to_string(i - 1));
    }
    if (frame_count && s.end >= *frame_count) {
      throw Error(ErrorCode::SpanOutOfRange, std::string(context) + ": span " + std::to_string(i) +
                                                 " ends at " + std::to_string(s.end) + " but T=" +
                                                 std::to_string(*frame_count));
    }
  }
}

FeatureSequence parse_features_csv(std::string_view text, std::string clip_id) {
  FeatureSequence seq{std::move(clip_id), {}};
  std::vector<double> row;
  std::size_t line_no = 0;
  for (auto line : split_lines(text)) {
    ++line_no;
    line = trim(line);
    if (line.empty()) continue;
    row.clear();
    std::size_t pos = 0;
    while (true) {
      const auto comma = line.find(',', pos);
      const auto field = trim(line.substr(pos, comma == std::string_view::npos ? line.npos : comma - pos));
      double value = 0.0;
      const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
      if (field.empty() || ec != std::errc() || ptr != field.data() + field.size()) {
        throw Error(ErrorCode::MalformedRecord, seq.clip_id + ": line " + std::to_string(line_no) +
                                                    ": cannot parse '" + std::string(field) + "'");
      }
      if (!std::isfinite(value)) {
        throw Error(ErrorCode::NonFiniteValue, seq.clip_id + ": line " + std::to_string(line_no));
      }
      row.push_back(value);
      if (comma == std::string_view::npos) break;
      pos = comma + 1;
    }
    if (!seq.frames.empty() && row.size() != seq.frames.cols()) {
      throw Error(ErrorCode::MalformedRecord, seq.clip_id + ": line " + std::to_string(line_no) + " has " +
                                                  std::to_string(row.size()) + " columns, expected " +
                                                  std::to_string(seq.frames.cols()));
    }
    seq.frames.append_row(row);
  }
  if (seq.frames.empty()) throw Error(ErrorCode::MalformedRecord, seq.clip_id + ": no frames");
  return seq;
}

FeatureSequence load_features(const std::filesystem::path& path) {
  const std::string bytes = read_file(path);
  const std::string where = path.string();
  FeatureSequence seq;
  if (has_magic(bytes, kFeatureMagic)) {
    seq = FeatureSequence{path.stem().string(), decode_binary(bytes, kFeatureMagic, where)};
  } else if (has_magic(bytes, kLogProbMagic)) {
    throw Error(ErrorCode::MalformedHeader, where + ": SGL1 log-prob file given where features expected");
  } else {
    seq = parse_features_csv(bytes, path.stem().string());
  }
  validate(seq);
  return seq;
}

LogProbSequence load_logprobs(const std::filesystem::path& path) {
  const std::string bytes = read_file(path);
  LogProbSequence seq{path.stem().string(), decode_binary(bytes, kLogProbMagic, path.string())};
  validate(seq);
  return seq;
}

void write_features(const std::filesystem::path& path, const FeatureSequence& seq) {
  validate(seq);
  write_file(path, encode_binary(seq.frames, kFeatureMagic, path.string()));
}

void write_logprobs(const std::filesystem::path& path, const LogProbSequence& seq) {
  write_file(path, encode_binary(seq.frames, kLogProbMagic, path.string()));
}

GlossVocab load_vocab(const std::filesystem::path& path) {
  const std::string text = read_file(path);
  std::vector<std::string> names;
  for (auto line : split_lines(text)) {
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    names.emplace_back(line);
  }
  try {
    return GlossVocab(std::move(names));
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.what());
  }
}

std::vector<GlossAnnotation> parse_annotations(std::string_view jsonl, const GlossVocab& vocab,
                                               std::string_view source) {
  using nlohmann::json;
  std::vector<GlossAnnotation> out;
  std::size_t line_no = 0;
  for (auto line : split_lines(jsonl)) {
    ++line_no;
    line = trim(line);
    if (line.empty()) continue;
    const std::string where = std::string(source) + ":" + std::to_string(line_no);
    const json rec = json::parse(line, nullptr, /*allow_exceptions=*/false);
    if (rec.is_discarded() || !rec.is_object()) {
      throw Error(ErrorCode::MalformedRecord, where + ": not a JSON object");
    }
    GlossAnnotation ann;
    const auto id = rec.find("id");
    if (id == rec.end() || !id->is_string() || id->get<std::string>().empty()) {
      throw Error(ErrorCode::MalformedRecord, where + ": missing string key 'id'");
    }
    ann.clip_id = id->get<std::string>();
    const auto glosses = rec.find("glosses");
    if (glosses == rec.end() || !glosses->is_array() || glosses->empty()) {
      throw Error(ErrorCode::MalformedRecord, where + ": 'glosses' must be a nonempty array");
    }
    for (const auto& g : *glosses) {
      if (!g.is_string()) throw Error(ErrorCode::MalformedRecord, where + ": gloss entries must be strings");
      const auto gid = vocab.find(g.get<std::string>());
      if (!gid) throw Error(ErrorCode::UnknownGloss, where + ": gloss '" + g.get<std::string>() + "'");
      ann.glosses.push_back(*gid);
    }
    const auto text_len = rec.find("text_len");
    if (text_len == rec.end() || !text_len->is_number_integer() || text_len->get<std::int64_t>() < 1) {
      throw Error(ErrorCode::MalformedRecord, where + ": 'text_len' must be an integer >= 1");
    }
    ann.text_len = text_len->get<std::size_t>();
    if (const auto spans = rec.find("spans"); spans != rec.end() && !spans->is_null()) {
      if (!spans->is_array() || spans->size() != ann.glosses.size()) {
        throw Error(ErrorCode::MalformedRecord, where + ": 'spans' must hold one [start,end] per gloss");
      }
      std::vector<FrameSpan> parsed;
      for (const auto& s : *spans) {
        if (!s.is_array() || s.size() != 2 || !s[0].is_number_integer() || !s[1].is_number_integer() ||
            s[0].get<std::int64_t>() < 0 || s[1].get<std::int64_t>() < 0) {
          throw Error(ErrorCode::MalformedRecord, where + ": span must be [start,end] of nonnegative integers");
        }
        parsed.push_back({s[0].get<std::size_t>(), s[1].get<std::size_t>()});
      }
      validate_spans(parsed, std::nullopt, where);
      ann.gold_spans = std::move(parsed);
    }
    out.push_back(std::move(ann));
  }
  return out;
}

std::vector<GlossAnnotation> load_annotations(const std::filesystem::path& path, const GlossVocab& vocab) {
  return parse_annotations(read_file(path), vocab, path.string());
}

Corpus join_corpus(std::vector<FeatureSequence> features, std::vector<GlossAnnotation> annotations) {
  std::unordered_map<std::string, std::size_t> ann_index;
  for (std::size_t i = 0; i < annotations.size(); ++i) {
    if (!ann_index.emplace(annotations[i].clip_id, i).second) {
      throw Error(ErrorCode::DuplicateClipId, "annotation id '" + annotations[i].clip_id + "' repeated");
    }
  }
  std::unordered_set<std::string> feature_ids;
  for (const auto& f : features) {
    if (!feature_ids.insert(f.clip_id).second) {
      throw Error(ErrorCode::DuplicateClipId, "feature id '" + f.clip_id + "' repeated");
    }
  }

  Corpus corpus;
  std::vector<bool> used(annotations.size(), false);
  for (auto& f : features) {
    const auto it = ann_index.find(f.clip_id);
    if (it == ann_index.end()) {
      corpus.unmatched_features.push_back(f.clip_id);
      continue;
    }
    if (!corpus.clips.empty() && f.dim() != corpus.dim()) {
      throw Error(ErrorCode::DimMismatch, f.clip_id + ": dim " + std::to_string(f.dim()) + " differs from " +
                                              std::to_string(corpus.dim()));
    }
    auto& ann = annotations[it->second];
    if (ann.gold_spans) validate_spans(*ann.gold_spans, f.length(), f.clip_id);
    used[it->second] = true;
    corpus.clips.push_back({std::move(f), std::move(ann)});
  }
  for (std::size_t i = 0; i < annotations.size(); ++i) {
    if (!used[i]) corpus.unmatched_annotations.push_back(annotations[i].clip_id);
  }
  if (corpus.clips.empty()) throw Error(ErrorCode::EmptyJoin, "no clip id present in both features and annotations");
  return corpus;
}

namespace {

std::vector<std::filesystem::path> list_dir(const std::filesystem::path& dir,
                                            const std::set<std::string>& extensions) {
  if (!std::filesystem::is_directory(dir)) {
    throw Error(ErrorCode::IoError, "'" + dir.string() + "' is not a directory");
  }
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file() && extensions.count(entry.path().extension().string())) {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end());
  return files;
}

}  // namespace

std::vector<FeatureSequence> load_feature_dir(const std::filesystem::path& dir) {
  std::vector<FeatureSequence> out;
  for (const auto& p : list_dir(dir, {".sgf", ".csv"})) out.push_back(load_features(p));
  return out;
}

std::vector<LogProbSequence> load_logprob_dir(const std::filesystem::path& dir) {
  std::vector<LogProbSequence> out;
  for (const auto& p : list_dir(dir, {".sgl"})) out.push_back(load_logprobs(p));
  return out;
}

}  // namespace signdense
