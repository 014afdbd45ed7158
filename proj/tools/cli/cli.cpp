#include "cli.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "manifest.hpp"
#include "signdense/aligner.hpp"
#include "signdense/corpus.hpp"
#include "signdense/density.hpp"
#include "signdense/error.hpp"
#include "signdense/pca.hpp"
#include "signdense/report.hpp"
#include "signdense/signcl.hpp"
#include "signdense/stats.hpp"
#include "signdense/trainer.hpp"
#include "tables.hpp"

namespace signdense::cli {

namespace fs = std::filesystem;

namespace {

struct Globals {
  std::uint64_t seed = 0;
  std::string out;
  std::string format = "json";
};

struct CorpusArgs {
  std::string features;
  std::string annotations;
  std::string vocab;
  std::string align;
  bool use_gold = false;
};

struct DensityArgs {
  CorpusArgs corpus;
  std::size_t bins = 0;
  std::string bins_out;
  std::string accuracy;
};

struct AlignArgs {
  std::string logits;
  std::string annotations;
  std::string vocab;
};

struct WerArgs {
  std::string ref;
  std::string hyp;
};

struct MarginArgs {
  std::optional<double> margin;
  bool margin_auto = false;
  std::optional<std::size_t> text_len;
  double zipf = 2.3;
  double floor = 10.0;
};

struct PairsArgs {
  std::optional<std::size_t> frames;
  std::string features;
  MarginArgs margin;
};

struct LossArgs {
  std::string features;
  std::string pairs;
  bool sample = false;
  MarginArgs margin;
  double feature_margin = 64.0;
  bool skip_unpaired = false;
  std::string gradient_out;
};

struct CorrelateArgs {
  std::string input;
  std::vector<std::string> pairs;
};

struct TrainArgs {
  std::string config;
  SynthConfig synth;
  TrainConfig train;
  std::optional<double> feature_margin;
  std::optional<double> feature_scale;
  bool skip_unpaired = false;
  bool compare = false;
  std::string pca;
};

struct ProjectArgs {
  CorpusArgs corpus;
};

// Output destination for the primary report of a command.
class Sink {
 public:
  Sink(const Globals& g, std::ostream& out) : globals_(g), out_(out) {}

  bool to_file() const { return !globals_.out.empty(); }
  fs::path path() const { return globals_.out; }

  void emit(const std::string& text) const {
    if (to_file()) {
      write_file(globals_.out, text);
    } else {
      out_ << text;
    }
  }

  // report.json -> report.<suffix>
  fs::path sidecar(const std::string& suffix) const {
    fs::path p(globals_.out);
    return p.parent_path() / (p.stem().string() + "." + suffix);
  }

 private:
  const Globals& globals_;
  std::ostream& out_;
};

std::string option_name(const CLI::Option* opt) {
  const auto& l = opt->get_lnames();
  if (!l.empty()) return l.front();
  const auto& s = opt->get_snames();
  return s.empty() ? opt->get_name() : s.front();
}

void collect_config(const CLI::App* app, std::vector<std::pair<std::string, std::string>>& out) {
  for (const CLI::Option* opt : app->get_options()) {
    const std::string name = option_name(opt);
    if (name == "help" || name == "config") continue;
    std::string value;
    if (opt->count() > 0) {
      const auto results = opt->reduced_results();
      for (std::size_t i = 0; i < results.size(); ++i) value += (i ? "," : "") + results[i];
      if (opt->get_expected_min() == 0 && value.empty()) value = "true";
    } else {
      value = opt->get_default_str();
      if (opt->get_expected_min() == 0 && value.empty()) value = "false";
    }
    out.emplace_back(name, value);
  }
}

RunManifest make_manifest(const CLI::App& root, const CLI::App* sub, const Globals& g) {
  RunManifest m;
  m.command = sub->get_name();
  collect_config(&root, m.config);
  collect_config(sub, m.config);
  m.seed = g.seed;
  m.version = SIGNDENSE_VERSION;
  m.timestamp = utc_timestamp();
  return m;
}

void write_manifest(const Sink& sink, const RunManifest& m, const fs::path& path) {
  if (sink.to_file()) write_file(path, to_json(m));
}

void check_format(const Globals& g) {
  if (g.format != "json" && g.format != "csv") {
    throw Error(ErrorCode::InvalidArgument, "--format must be json or csv, got '" + g.format + "'");
  }
}

// Loads the corpus and maps every clip to spans, from gold annotations or by
// forced alignment against a directory of log-prob files.
struct LoadedCorpus {
  GlossVocab vocab;
  Corpus corpus;
  std::vector<std::vector<GlossSpan>> spans;
};

LoadedCorpus load_corpus(const CorpusArgs& a, RunManifest& manifest) {
  if (!a.align.empty() && a.use_gold) {
    throw Error(ErrorCode::InvalidArgument, "--align and --use-gold-spans are mutually exclusive");
  }
  LoadedCorpus lc;
  lc.vocab = load_vocab(a.vocab);
  add_input(manifest, a.vocab);
  auto annotations = load_annotations(a.annotations, lc.vocab);
  add_input(manifest, a.annotations);
  auto features = load_feature_dir(a.features);
  add_input(manifest, a.features);
  lc.corpus = join_corpus(std::move(features), std::move(annotations));

  if (a.align.empty()) {
    for (const auto& clip : lc.corpus.clips) {
      if (!clip.annotation.gold_spans) {
        throw Error(ErrorCode::MalformedRecord, a.annotations + ": clip '" + clip.annotation.clip_id +
                                                    "' has no spans; pass --align with log-prob files");
      }
      lc.spans.push_back(spans_from_gold(clip.annotation));
    }
    return lc;
  }

  std::map<std::string, LogProbSequence> logits;
  for (auto& lp : load_logprob_dir(a.align)) logits.emplace(lp.clip_id, std::move(lp));
  add_input(manifest, a.align);
  for (const auto& clip : lc.corpus.clips) {
    const auto it = logits.find(clip.annotation.clip_id);
    if (it == logits.end()) {
      throw Error(ErrorCode::MalformedRecord, a.align + ": no log-prob file for clip '" + clip.annotation.clip_id + "'");
    }
    const auto& lp = it->second;
    if (lp.frames.rows() != clip.features.length() || lp.frames.cols() != lc.vocab.size() + 1) {
      throw Error(ErrorCode::DimMismatch, a.align + ": clip '" + clip.annotation.clip_id + "' log-probs are " +
                                              std::to_string(lp.frames.rows()) + "x" +
                                              std::to_string(lp.frames.cols()) + ", expected " +
                                              std::to_string(clip.features.length()) + "x" +
                                              std::to_string(lc.vocab.size() + 1));
    }
    lc.spans.push_back(forced_align(lp, clip.annotation.glosses));
  }
  return lc;
}

std::map<GlossId, double> load_accuracy(const std::string& path, const GlossVocab& vocab) {
  const auto table = load_csv(path);
  const auto gcol = table.column("gloss");
  const auto acol = table.column("accuracy");
  if (!gcol || !acol) throw Error(ErrorCode::MalformedRecord, path + ": needs columns gloss,accuracy");
  std::map<GlossId, double> out;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const std::string where = path + ": row " + std::to_string(r + 1);
    const auto id = vocab.find(table.rows[r][*gcol]);
    if (!id) throw Error(ErrorCode::UnknownGloss, where + ": gloss '" + table.rows[r][*gcol] + "'");
    const auto acc = parse_cell(table.rows[r][*acol], where);
    if (acc) out[*id] = *acc;
  }
  return out;
}

std::string per_gloss_csv(const DensityReport& report, const GlossVocab& vocab) {
  std::string out = "gloss,intra,mean_inter,sdr\n";
  auto opt = [](const std::optional<double>& v) { return v ? format_real(*v) : std::string(); };
  for (const auto& m : report.per_gloss) {
    out += vocab.name(m.gloss_id) + "," + opt(m.intra) + "," + format_real(m.mean_inter) + "," + opt(m.sdr) + "\n";
  }
  return out;
}

int cmd_density(const CLI::App& root, const CLI::App* sub, const Globals& g, const DensityArgs& a,
                std::ostream& out) {
  check_format(g);
  Sink sink(g, out);
  auto manifest = make_manifest(root, sub, g);
  const auto lc = load_corpus(a.corpus, manifest);
  const auto groups = spans_to_groups(lc.corpus, lc.spans);
  const auto report = dataset_sdr(groups);

  std::optional<std::string> bins_csv;
  if (a.bins > 0) {
    std::optional<std::map<GlossId, double>> accuracy;
    if (!a.accuracy.empty()) {
      accuracy = load_accuracy(a.accuracy, lc.vocab);
      add_input(manifest, a.accuracy);
    }
    bins_csv = bins_to_csv(bin_glosses(report.per_gloss, a.bins, accuracy));
  }

  sink.emit(g.format == "csv" ? per_gloss_csv(report, lc.vocab) : to_json(report, &lc.vocab));
  if (bins_csv) {
    if (!a.bins_out.empty()) {
      write_file(a.bins_out, *bins_csv);
    } else if (sink.to_file()) {
      write_file(sink.sidecar("bins.csv"), *bins_csv);
    } else {
      out << *bins_csv;
    }
  }
  write_manifest(sink, manifest, sink.sidecar("manifest.json"));
  return kExitOk;
}

int cmd_align(const CLI::App& root, const CLI::App* sub, const Globals& g, const AlignArgs& a, std::ostream& out) {
  Sink sink(g, out);
  auto manifest = make_manifest(root, sub, g);
  const auto vocab = load_vocab(a.vocab);
  add_input(manifest, a.vocab);
  const auto annotations = load_annotations(a.annotations, vocab);
  add_input(manifest, a.annotations);
  std::vector<LogProbSequence> logits;
  if (fs::is_directory(a.logits)) {
    logits = load_logprob_dir(a.logits);
  } else {
    logits.push_back(load_logprobs(a.logits));
  }
  add_input(manifest, a.logits);

  std::map<std::string, const GlossAnnotation*> by_id;
  for (const auto& ann : annotations) by_id.emplace(ann.clip_id, &ann);
  std::string text;
  for (const auto& lp : logits) {
    const auto it = by_id.find(lp.clip_id);
    if (it == by_id.end()) {
      throw Error(ErrorCode::MalformedRecord, a.annotations + ": no annotation for clip '" + lp.clip_id + "'");
    }
    if (lp.frames.cols() != vocab.size() + 1) {
      throw Error(ErrorCode::DimMismatch, lp.clip_id + ": " + std::to_string(lp.frames.cols()) +
                                              " log-prob columns, vocabulary needs " +
                                              std::to_string(vocab.size() + 1));
    }
    try {
      const auto spans = forced_align(lp, it->second->glosses);
      text += spans_to_jsonl_line(lp.clip_id, spans, vocab) + "\n";
    } catch (const Error& e) {
      throw Error(e.code(), "clip '" + lp.clip_id + "': " + e.what());
    }
  }
  sink.emit(text);
  write_manifest(sink, manifest, sink.sidecar("manifest.json"));
  return kExitOk;
}

int cmd_wer(const CLI::App& root, const CLI::App* sub, const Globals& g, const WerArgs& a, std::ostream& out) {
  check_format(g);
  Sink sink(g, out);
  auto manifest = make_manifest(root, sub, g);
  const auto ref = load_token_jsonl(a.ref);
  add_input(manifest, a.ref);
  const auto hyp = load_token_jsonl(a.hyp);
  add_input(manifest, a.hyp);
  for (const auto& [id, tokens] : hyp) {
    if (!ref.count(id)) throw Error(ErrorCode::MalformedRecord, a.hyp + ": id '" + id + "' has no reference");
  }
  if (ref.empty()) throw Error(ErrorCode::EmptyReference, a.ref + ": no reference sequences");

  WerResult total;
  std::string csv = "id,substitutions,deletions,insertions,ref_len,wer\n";
  for (const auto& [id, tokens] : ref) {
    const auto it = hyp.find(id);
    const std::vector<std::string> none;
    WerResult r;
    try {
      r = wer(tokens, it == hyp.end() ? none : it->second);
    } catch (const Error& e) {
      throw Error(e.code(), a.ref + ": id '" + id + "': " + e.what());
    }
    total.substitutions += r.substitutions;
    total.deletions += r.deletions;
    total.insertions += r.insertions;
    total.ref_len += r.ref_len;
    csv += id + "," + std::to_string(r.substitutions) + "," + std::to_string(r.deletions) + "," +
           std::to_string(r.insertions) + "," + std::to_string(r.ref_len) + "," + format_real(r.wer) + "\n";
  }
  total.wer = static_cast<double>(total.errors()) / static_cast<double>(total.ref_len);

  if (g.format == "csv") {
    sink.emit(csv);
  } else {
    JsonWriter w;
    write_json(w, total);
    sink.emit(w.str() + "\n");
  }
  write_manifest(sink, manifest, sink.sidecar("manifest.json"));
  return kExitOk;
}

double resolve_margin(const MarginArgs& m, std::size_t n_frames) {
  if (m.margin && m.margin_auto) throw Error(ErrorCode::InvalidArgument, "--margin and --margin-auto are exclusive");
  if (m.margin) {
    if (!(*m.margin >= 0.0) || !std::isfinite(*m.margin)) {
      throw Error(ErrorCode::InvalidArgument, "--margin must be finite and >= 0");
    }
    return *m.margin;
  }
  if (!m.margin_auto) throw Error(ErrorCode::InvalidArgument, "give --margin or --margin-auto with --text-len");
  if (!m.text_len) throw Error(ErrorCode::InvalidArgument, "--margin-auto needs --text-len");
  return estimate_margin(n_frames, *m.text_len, MarginConfig{m.zipf, m.floor});
}

int cmd_pairs(const CLI::App& root, const CLI::App* sub, const Globals& g, const PairsArgs& a, std::ostream& out) {
  Sink sink(g, out);
  auto manifest = make_manifest(root, sub, g);
  if (a.frames.has_value() == !a.features.empty()) {
    throw Error(ErrorCode::InvalidArgument, "give exactly one of --frames or --features");
  }
  std::size_t n = a.frames.value_or(0);
  if (!a.features.empty()) {
    n = load_features(a.features).length();
    add_input(manifest, a.features);
  }
  const auto pairs = sample_pairs(n, resolve_margin(a.margin, n), g.seed);
  sink.emit(to_json(pairs));
  write_manifest(sink, manifest, sink.sidecar("manifest.json"));
  return kExitOk;
}

int cmd_loss(const CLI::App& root, const CLI::App* sub, const Globals& g, const LossArgs& a, std::ostream& out) {
  Sink sink(g, out);
  auto manifest = make_manifest(root, sub, g);
  if (a.sample == !a.pairs.empty()) {
    throw Error(ErrorCode::InvalidArgument, "ambiguous pair source: give exactly one of --pairs or --sample");
  }
  const auto features = load_features(a.features);
  add_input(manifest, a.features);
  PairSet pairs;
  if (a.sample) {
    pairs = sample_pairs(features.length(), resolve_margin(a.margin, features.length()), g.seed);
  } else {
    try {
      pairs = parse_pair_set(read_file(a.pairs));
    } catch (const Error& e) {
      throw Error(e.code(), a.pairs + ": " + e.what());
    }
    add_input(manifest, a.pairs);
  }
  if (!(a.feature_margin > 0.0) || !std::isfinite(a.feature_margin)) {
    throw Error(ErrorCode::InvalidArgument, "-m must be finite and > 0");
  }
  const auto policy = a.skip_unpaired ? UnpairedAnchors::kSkip : UnpairedAnchors::kKeep;
  const auto v = signcl_loss(features, pairs, LossConfig{a.feature_margin, 0.01}, policy);
  if (!std::isfinite(v.loss)) throw Error(ErrorCode::DivergenceDetected, "loss is non-finite");
  double sq = 0.0;
  for (std::size_t r = 0; r < v.gradient.rows(); ++r) sq += squared_norm(v.gradient.row(r));

  JsonWriter w;
  w.begin_object();
  w.key("loss").value(v.loss);
  w.key("grad_norm").value(std::sqrt(sq));
  w.key("n_frames").value(static_cast<std::uint64_t>(features.length()));
  w.key("temporal_margin").value(pairs.temporal_margin);
  w.key("negative_terms").value(static_cast<std::uint64_t>(v.negative_terms));
  w.key("active_hinges").value(static_cast<std::uint64_t>(v.active_hinges));
  w.end_object();
  sink.emit(w.str() + "\n");
  if (!a.gradient_out.empty()) write_features(a.gradient_out, FeatureSequence{features.clip_id, v.gradient});
  write_manifest(sink, manifest, sink.sidecar("manifest.json"));
  return kExitOk;
}

int cmd_correlate(const CLI::App& root, const CLI::App* sub, const Globals& g, const CorrelateArgs& a,
                  std::ostream& out) {
  check_format(g);
  Sink sink(g, out);
  auto manifest = make_manifest(root, sub, g);
  const auto table = load_csv(a.input);
  add_input(manifest, a.input);
  std::vector<std::string> requested = a.pairs;
  if (requested.empty()) requested.push_back("sdr:accuracy");

  JsonWriter w;
  w.begin_object();
  w.key("n_rows").value(static_cast<std::uint64_t>(table.rows.size()));
  w.key("pairs").begin_array();
  std::string csv = "x,y,n,pearson_r,pearson_p,spearman_rho,spearman_p\n";
  for (const auto& pair_arg : requested) {
    const auto colon = pair_arg.find(':');
    if (colon == std::string::npos) throw Error(ErrorCode::InvalidArgument, "--pair expects x:y, got '" + pair_arg + "'");
    const std::string xname = pair_arg.substr(0, colon);
    const std::string yname = pair_arg.substr(colon + 1);
    const auto xc = table.column(xname);
    const auto yc = table.column(yname);
    if (!xc || !yc) {
      throw Error(ErrorCode::MalformedRecord, a.input + ": no column '" + (xc ? yname : xname) + "'");
    }
    std::vector<double> xs, ys;
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
      const std::string where = a.input + ": row " + std::to_string(r + 1);
      const auto x = parse_cell(table.rows[r][*xc], where);
      const auto y = parse_cell(table.rows[r][*yc], where);
      if (x && y) {
        xs.push_back(*x);
        ys.push_back(*y);
      }
    }
    const auto p = pearson(xs, ys);
    const auto s = spearman(xs, ys);
    w.begin_object();
    w.key("x").value(xname);
    w.key("y").value(yname);
    w.key("n").value(static_cast<std::uint64_t>(p.n));
    w.key("pearson").begin_object().key("r").value(p.coefficient).key("p").value(p.p_value).end_object();
    w.key("spearman").begin_object().key("rho").value(s.coefficient).key("p").value(s.p_value).end_object();
    w.end_object();
    csv += xname + "," + yname + "," + std::to_string(p.n) + "," + format_real(p.coefficient) + "," +
           format_real(p.p_value) + "," + format_real(s.coefficient) + "," + format_real(s.p_value) + "\n";
  }
  w.end_array();
  w.end_object();
  sink.emit(g.format == "csv" ? csv : w.str() + "\n");
  write_manifest(sink, manifest, sink.sidecar("manifest.json"));
  return kExitOk;
}

std::string points_csv(const std::vector<ProjectedPoint>& pts, const GlossVocab& vocab) {
  std::string out = "gloss,x,y\n";
  for (const auto& p : pts) out += vocab.name(p.gloss_id) + "," + format_real(p.x) + "," + format_real(p.y) + "\n";
  return out;
}

std::string points_json(const std::vector<ProjectedPoint>& pts, const GlossVocab& vocab) {
  JsonWriter w;
  w.begin_array();
  for (const auto& p : pts) {
    w.begin_object();
    w.key("gloss").value(vocab.name(p.gloss_id));
    w.key("x").value(p.x);
    w.key("y").value(p.y);
    w.end_object();
  }
  w.end_array();
  return w.str() + "\n";
}

std::string compare_json(const TrainArgs& a, std::uint64_t seed, const TrainReport& base, const TrainReport& cl) {
  const double delta = cl.sdr_after - base.sdr_after;
  std::optional<double> rel;
  if (base.sdr_after != 0.0) rel = (base.sdr_after - cl.sdr_after) / base.sdr_after;
  JsonWriter w;
  w.begin_object();
  w.key("lambda").value(a.train.lambda);
  w.key("seed").value(seed);
  w.key("epochs").value(static_cast<std::uint64_t>(a.train.epochs));
  w.key("sdr_before").value(base.sdr_before);
  w.key("sdr_after_baseline").value(base.sdr_after);
  w.key("sdr_after_signcl").value(cl.sdr_after);
  w.key("sdr_delta").value(delta);
  w.key("sdr_rel_reduction").value(rel);
  w.key("accuracy_baseline").value(base.train_accuracy);
  w.key("accuracy_signcl").value(cl.train_accuracy);
  w.end_object();
  return w.str() + "\n";
}

int cmd_train(const CLI::App& root, const CLI::App* sub, const Globals& g, TrainArgs a, std::ostream& out) {
  auto manifest = make_manifest(root, sub, g);
  if (!a.config.empty()) add_input(manifest, a.config);
  a.synth.seed = g.seed;
  a.synth.dim_out = a.train.dim_out;
  a.train.seed = g.seed;
  a.train.feature_margin = a.feature_margin;
  a.train.feature_scale = a.feature_scale;
  a.train.unpaired = a.skip_unpaired ? UnpairedAnchors::kSkip : UnpairedAnchors::kKeep;

  const auto data = gen_synthetic(a.synth);
  const auto report = train(data.corpus, a.synth.n_classes, a.train);
  std::optional<TrainReport> baseline;
  if (a.compare) {
    TrainConfig c0 = a.train;
    c0.lambda = 0.0;
    baseline = train(data.corpus, a.synth.n_classes, c0);
  }

  const bool to_dir = !g.out.empty();
  const fs::path dir(g.out);
  if (to_dir) fs::create_directories(dir);
  std::string primary;
  if (a.compare) {
    primary = compare_json(a, g.seed, *baseline, report);
    if (to_dir) {
      write_file(dir / "baseline.json", to_json(*baseline));
      write_file(dir / "signcl.json", to_json(report));
      write_file(dir / "compare.json", primary);
    }
  } else {
    primary = to_json(report);
    if (to_dir) write_file(dir / "report.json", primary);
  }
  if (to_dir || !a.pca.empty()) {
    const auto csv = points_csv(pca_2d(report.final_groups), data.vocab);
    write_file(a.pca.empty() ? dir / "pca.csv" : fs::path(a.pca), csv);
  }
  if (to_dir) {
    write_file(dir / "manifest.json", to_json(manifest));
  } else {
    out << primary;
  }
  return kExitOk;
}

int cmd_project(const CLI::App& root, const CLI::App* sub, const Globals& g, const ProjectArgs& a,
                std::ostream& out) {
  check_format(g);
  Sink sink(g, out);
  auto manifest = make_manifest(root, sub, g);
  const auto lc = load_corpus(a.corpus, manifest);
  const auto groups = spans_to_groups(lc.corpus, lc.spans);
  const auto pts = pca_2d(groups);
  sink.emit(g.format == "csv" ? points_csv(pts, lc.vocab) : points_json(pts, lc.vocab));
  write_manifest(sink, manifest, sink.sidecar("manifest.json"));
  return kExitOk;
}

void add_corpus_options(CLI::App* sub, CorpusArgs& a) {
  sub->add_option("--features", a.features, "Directory of .sgf/.csv feature files")->required();
  sub->add_option("--annotations", a.annotations, "Annotation JSONL")->required();
  sub->add_option("--vocab", a.vocab, "Vocabulary, one gloss per line")->required();
  sub->add_option("--align", a.align, "Directory of .sgl log-prob files to align against");
  sub->add_flag("--use-gold-spans", a.use_gold, "Use annotation spans (default when --align is absent)");
}

void add_margin_options(CLI::App* sub, MarginArgs& m) {
  sub->add_option("--margin", m.margin, "Temporal margin in frames");
  sub->add_flag("--margin-auto", m.margin_auto, "Estimate the margin from --text-len");
  sub->add_option("--text-len", m.text_len, "Spoken-text length for --margin-auto");
  sub->add_option("--zipf", m.zipf, "Spoken words per gloss");
  sub->add_option("--margin-floor", m.floor, "Lower bound of the estimated margin");
}

// Turns `--config file.toml` into option tokens placed ahead of the command
// line, so explicit flags win. Unknown keys are input errors.
std::vector<std::string> expand_config(const std::vector<std::string>& args, const CLI::App* train) {
  auto cmd = std::find(args.begin(), args.end(), "train");
  if (cmd == args.end()) return args;
  std::string path;
  for (auto it = cmd + 1; it != args.end(); ++it) {
    if (*it == "--config" && it + 1 != args.end()) path = *(it + 1);
    if (it->rfind("--config=", 0) == 0) path = it->substr(9);
  }
  if (path.empty()) return args;
  if (!fs::is_regular_file(path)) throw Error(ErrorCode::IoError, "cannot open config '" + path + "'");

  std::vector<std::string> injected;
  for (const auto& item : CLI::ConfigTOML().from_file(path)) {
    if (item.name == "++" || item.name == "--") continue;
    std::string key;
    for (const auto& p : item.parents) key += p + ".";
    key += item.name;
    const CLI::Option* opt = train->get_option_no_throw("--" + key);
    if (opt == nullptr || key == "config") {
      throw Error(ErrorCode::InvalidArgument, path + ": unknown config key '" + key + "'");
    }
    std::string value;
    for (std::size_t i = 0; i < item.inputs.size(); ++i) value += (i ? "," : "") + item.inputs[i];
    injected.push_back("--" + key + "=" + value);
  }
  std::vector<std::string> out(args.begin(), cmd + 1);
  out.insert(out.end(), injected.begin(), injected.end());
  out.insert(out.end(), cmd + 1, args.end());
  return out;
}

}  // namespace

int run(const std::vector<std::string>& raw_args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Representation density analysis and contrastive training for sign-language features",
               "signdense"};
  app.require_subcommand(1);
  app.option_defaults()->always_capture_default()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);

  Globals g;
  app.add_option("--seed", g.seed, "Seed for every random stream");
  app.add_option("--out", g.out, "Output file (output directory for train)");
  app.add_option("--format", g.format, "json or csv")->check(CLI::IsMember({"json", "csv"}));

  auto configure = [](CLI::App* sub) {
    sub->fallthrough();
    sub->option_defaults()->always_capture_default()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
    return sub;
  };

  DensityArgs density;
  auto* s_density = configure(app.add_subcommand("density", "Per-gloss SDR report for a corpus"));
  add_corpus_options(s_density, density.corpus);
  s_density->add_option("--bins", density.bins, "Split glosses into k SDR-ranked bins (0 = off)");
  s_density->add_option("--bins-out", density.bins_out, "Bins CSV path");
  s_density->add_option("--accuracy", density.accuracy, "CSV gloss,accuracy averaged per bin");

  AlignArgs align;
  auto* s_align = configure(app.add_subcommand("align", "CTC forced alignment to JSONL spans"));
  s_align->add_option("--logits", align.logits, "SGL1 file or directory")->required();
  s_align->add_option("--annotations", align.annotations, "Annotation JSONL")->required();
  s_align->add_option("--vocab", align.vocab, "Vocabulary file")->required();

  WerArgs werargs;
  auto* s_wer = configure(app.add_subcommand("wer", "Word error rate between two JSONL token files"));
  s_wer->add_option("--ref", werargs.ref, "Reference JSONL")->required();
  s_wer->add_option("--hyp", werargs.hyp, "Hypothesis JSONL")->required();

  PairsArgs pairs;
  auto* s_pairs = configure(app.add_subcommand("pairs", "Sample anchor/positive/negative frame triples"));
  s_pairs->add_option("--frames", pairs.frames, "Number of frames");
  s_pairs->add_option("--features", pairs.features, "Take the frame count from a feature file");
  add_margin_options(s_pairs, pairs.margin);

  LossArgs loss;
  auto* s_loss = configure(app.add_subcommand("loss", "Contrastive loss and gradient norm for one clip"));
  s_loss->add_option("--features", loss.features, "Feature file")->required();
  s_loss->add_option("--pairs", loss.pairs, "Pair set JSON");
  s_loss->add_flag("--sample", loss.sample, "Sample pairs instead of reading them");
  add_margin_options(s_loss, loss.margin);
  s_loss->add_option("-m,--feature-margin", loss.feature_margin, "Hinge margin on negative distances");
  s_loss->add_flag("--skip-unpaired", loss.skip_unpaired, "Drop anchors without a negative");
  s_loss->add_option("--gradient-out", loss.gradient_out, "Write the gradient as SGF1");

  CorrelateArgs corr;
  auto* s_corr = configure(app.add_subcommand("correlate", "Pearson and Spearman correlation of CSV columns"));
  s_corr->add_option("--input", corr.input, "CSV with a header row")->required();
  s_corr->add_option("--pair", corr.pairs, "Column pair x:y (repeatable, default sdr:accuracy)")
      ->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);

  TrainArgs tr;
  auto* s_train = configure(app.add_subcommand("train", "Train the toy encoder on synthetic data"));
  s_train->add_option("--config", tr.config, "TOML file; keys match the long options");
  s_train->add_option("--lambda", tr.train.lambda, "Weight of the contrastive term");
  s_train->add_option("--epochs", tr.train.epochs, "Full-batch epochs");
  s_train->add_option("--lr", tr.train.learning_rate, "Learning rate");
  s_train->add_option("--feature-margin", tr.feature_margin, "Hinge margin (default: median initial distance)");
  s_train->add_option("--feature-scale", tr.feature_scale, "Encoder output scale (default: calibrated)");
  s_train->add_option("--inter-distance", tr.train.calibrated_inter_distance,
                      "Median inter-gloss distance targeted by scale calibration");
  s_train->add_option("--zipf", tr.train.margin_cfg.zipf_factor, "Spoken words per gloss for the margin");
  s_train->add_option("--margin-floor", tr.train.margin_cfg.floor, "Lower bound of the temporal margin");
  s_train->add_flag("--skip-unpaired", tr.skip_unpaired, "Drop anchors without a negative");
  s_train->add_flag("--compare", tr.compare, "Also train a lambda = 0 arm and report the SDR change");
  s_train->add_option("--pca", tr.pca, "Write PCA plot data (gloss,x,y)");
  s_train->add_option("--synth.n_classes", tr.synth.n_classes);
  s_train->add_option("--synth.dim_in", tr.synth.dim_in);
  s_train->add_option("--synth.dim_out", tr.train.dim_out);
  s_train->add_option("--synth.frames_per_gloss_mean", tr.synth.frames_per_gloss_mean);
  s_train->add_option("--synth.frame_jitter", tr.synth.frame_jitter);
  s_train->add_option("--synth.noise_sigma", tr.synth.noise_sigma);
  s_train->add_option("--synth.prototype_radius", tr.synth.prototype_radius);
  s_train->add_option("--synth.glosses_per_clip", tr.synth.glosses_per_clip);
  s_train->add_option("--synth.n_clips", tr.synth.n_clips);
  s_train->add_option("--synth.words_per_gloss", tr.synth.words_per_gloss);
  s_train->add_option("--synth.logit_smoothing", tr.synth.logit_smoothing);

  ProjectArgs project;
  auto* s_project = configure(app.add_subcommand("project", "PCA projection of representative frames"));
  add_corpus_options(s_project, project.corpus);

  std::string command = "signdense";
  try {
    auto args = expand_config(raw_args, s_train);
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e, out, err);
    return rc == 0 ? kExitOk : kExitInput;
  } catch (const Error& e) {
    err << command << ": " << e.what() << "\n";
    return kExitInput;
  }

  const CLI::App* sub = app.get_subcommands().front();
  command += " " + sub->get_name();
  try {
    if (sub == s_density) return cmd_density(app, sub, g, density, out);
    if (sub == s_align) return cmd_align(app, sub, g, align, out);
    if (sub == s_wer) return cmd_wer(app, sub, g, werargs, out);
    if (sub == s_pairs) return cmd_pairs(app, sub, g, pairs, out);
    if (sub == s_loss) return cmd_loss(app, sub, g, loss, out);
    if (sub == s_corr) return cmd_correlate(app, sub, g, corr, out);
    if (sub == s_train) return cmd_train(app, sub, g, tr, out);
    if (sub == s_project) return cmd_project(app, sub, g, project, out);
  } catch (const Error& e) {
    err << command << ": " << e.what() << "\n";
    return is_numerical_failure(e.code()) ? kExitNumerical : kExitInput;
  } catch (const std::exception& e) {
    err << command << ": " << e.what() << "\n";
    return kExitInput;
  }
  return kExitInput;
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run(args, out, err);
}

}  // namespace signdense::cli
