// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fail.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "cli.hpp"
#include "json.hpp"
#include "signdense/aligner.hpp"
#include "signdense/density.hpp"
#include "signdense/error.hpp"
#include "signdense/signcl.hpp"
#include "signdense/splitmix64.hpp"
#include "signdense/stats.hpp"
#include "signdense/trainer.hpp"
#include "support/oracles.hpp"
#include "support/test_util.hpp"

using namespace signdense;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

// 1
Outcome metric_oracle() {
  const auto t0 = Clock::now();
  SplitMix64 rng(1001);
  double worst = 0.0;
  std::size_t checks = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const auto rc = testutil::random_corpus(rng, 6, 5, 4);
    for (std::size_t i = 0; i < rc.groups.size(); ++i) {
      for (std::size_t j = 0; j < rc.groups.size(); ++j) {
        if (i == j) continue;
        worst = std::max(worst, std::abs(inter_gloss_distance(rc.groups[i], rc.groups[j]) -
                                         oracle::inter(rc.clouds[i], rc.clouds[j])));
        ++checks;
      }
      const auto intra = intra_gloss_distance(rc.groups[i]);
      const auto expect_intra = oracle::intra(rc.clouds[i]);
      if (intra.has_value() != expect_intra.has_value()) return {false, "intra definedness differs"};
      if (intra) worst = std::max(worst, std::abs(*intra - *expect_intra));
      const auto m = gloss_sdr(rc.groups[i], rc.groups);
      const auto o = oracle::sdr(i, rc.clouds);
      if (m.sdr.has_value() != o.sdr.has_value()) return {false, "sdr definedness differs"};
      worst = std::max(worst, std::abs(m.mean_inter - o.mean_inter));
      if (m.sdr) worst = std::max(worst, std::abs(*m.sdr - *o.sdr));
      checks += 3;
    }
  }
  const double secs = seconds_since(t0);
  return {worst <= 1e-12 && secs < 5.0, std::to_string(checks) + " values, max abs err " + fmt("%.2e", worst) +
                                            ", " + fmt("%.2f", secs) + " s"};
}

// 2
Outcome worked_goldens() {
  const GlossGroup g1{1, Matrix{{0, 0}, {0, 2}}};
  const GlossGroup g2{2, Matrix{{10, 0}, {10, 2}}};
  const std::vector<GlossGroup> groups = {g1, g2};
  const double sdr = *gloss_sdr(g1, groups).sdr;

  Matrix f;
  for (double v : {0.0, 1.0, 2.0, 30.0, 31.0, 32.0}) f.append_row(std::vector<double>{v});
  PairSet pairs;
  pairs.n_frames = 6;
  pairs.temporal_margin = 1.0;
  pairs.triples = {{0, 1, 3}, {1, 2, 4}, {2, 3, 5}, {3, 4, 0}, {4, 5, 1}, {5, 4, 2}};
  const double loss = signcl_loss(f, pairs, LossConfig{10.0, 0.01}).loss;
  return {std::abs(sdr - 0.19804) <= 1e-5 && loss == 5.5,
          "SDR(G1) = " + fmt("%.6f", sdr) + ", loss = " + fmt("%.17g", loss)};
}

// 3
Outcome gradient_check() {
  const auto t0 = Clock::now();
  SplitMix64 rng(1003);
  int instances = 0;
  double worst = 0.0;
  while (instances < 100) {
    const std::size_t n = 2 + rng.next_u64() % 9;
    const std::size_t dim = 1 + rng.next_u64() % 5;
    Matrix f(n, dim);
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t c = 0; c < dim; ++c) f(r, c) = 4.0 * rng.next_gaussian();
    const double m = 1.0 + 6.0 * rng.next_unit();
    const auto pairs = sample_pairs(n, 0.25 * rng.next_unit() * static_cast<double>(n), rng.next_u64());
    bool near_kink = false;
    for (std::size_t a = 0; a < n && !near_kink; ++a)
      for (std::size_t b = a + 1; b < n; ++b) {
        const double d = euclidean_distance(f.row(a), f.row(b));
        if (d <= 1e-3 || std::abs(d - m) <= 1e-3) near_kink = true;
      }
    if (near_kink) continue;
    const LossConfig cfg{m, 0.01};
    const auto v = signcl_loss(f, pairs, cfg);
    const double h = 1e-5;
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t c = 0; c < dim; ++c) {
        Matrix up = f, down = f;
        up(r, c) += h;
        down(r, c) -= h;
        const double fd = (signcl_loss(up, pairs, cfg).loss - signcl_loss(down, pairs, cfg).loss) / (2 * h);
        const double g = v.gradient(r, c);
        worst = std::max(worst, std::abs(fd - g) / std::max(1.0, std::abs(g)));
      }
    ++instances;
  }
  const double secs = seconds_since(t0);
  return {worst <= 1e-5 && secs < 10.0, std::to_string(instances) + " instances, max rel err " + fmt("%.2e", worst) +
                                            ", " + fmt("%.2f", secs) + " s"};
}

// 4
Outcome invariances() {
  SplitMix64 rng(1004);
  double sdr_worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const auto rc = testutil::random_corpus(rng, 6, 5, 4);
    const std::size_t dim = rc.groups[0].members.cols();
    const auto q = testutil::random_orthogonal(rng, dim);
    std::vector<double> shift(dim);
    for (double& s : shift) s = 20.0 * (rng.next_unit() - 0.5);
    const double scale = 0.1 + 10.0 * rng.next_unit();
    const auto moved = testutil::transform_groups(rc.groups, q, shift, 1.0);
    const auto scaled = testutil::transform_groups(rc.groups, q, shift, scale);
    auto rel = [](double a, double b) { return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-300}); };
    for (std::size_t i = 0; i < rc.groups.size(); ++i) {
      const auto base = gloss_sdr(rc.groups[i], rc.groups);
      const auto iso = gloss_sdr(moved[i], moved);
      const auto sc = gloss_sdr(scaled[i], scaled);
      sdr_worst = std::max({sdr_worst, rel(base.mean_inter, iso.mean_inter),
                            rel(scale * base.mean_inter, sc.mean_inter)});
      if (base.intra) {
        if (*base.intra == 0.0) {
          sdr_worst = std::max({sdr_worst, std::abs(*iso.intra), std::abs(*sc.intra)});
        } else {
          sdr_worst = std::max({sdr_worst, rel(*base.intra, *iso.intra), rel(scale * *base.intra, *sc.intra)});
        }
      }
      if (base.sdr && *base.sdr != 0.0) {
        sdr_worst = std::max({sdr_worst, rel(*base.sdr, *iso.sdr), rel(*base.sdr, *sc.sdr)});
      }
    }
  }

  double loss_worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 2 + rng.next_u64() % 12;
    const std::size_t dim = 1 + rng.next_u64() % 5;
    Matrix f(n, dim), g(n, dim);
    std::vector<double> shift(dim);
    for (double& s : shift) s = 50.0 * rng.next_gaussian();
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t c = 0; c < dim; ++c) {
        f(r, c) = 5.0 * rng.next_gaussian();
        g(r, c) = f(r, c) + shift[c];
      }
    const auto pairs = sample_pairs(n, 1.0, rng.next_u64());
    const auto a = signcl_loss(f, pairs, LossConfig{8.0, 0.01});
    const auto b = signcl_loss(g, pairs, LossConfig{8.0, 0.01});
    loss_worst = std::max(loss_worst, std::abs(a.loss - b.loss));
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t c = 0; c < dim; ++c) loss_worst = std::max(loss_worst, std::abs(a.gradient(r, c) - b.gradient(r, c)));
  }

  double pearson_worst = 0.0;
  int spearman_mismatch = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 3 + rng.next_u64() % 18;
    std::vector<double> x(n), y(n), ax(n), mx(n);
    for (std::size_t i = 0; i < n; ++i) {
      x[i] = rng.next_gaussian();
      y[i] = rng.next_gaussian();
    }
    double a = 10.0 * rng.next_gaussian();
    if (std::abs(a) < 1e-3) a = 1.0;
    const double b = 100.0 * rng.next_gaussian();
    for (std::size_t i = 0; i < n; ++i) {
      ax[i] = a * x[i] + b;
      mx[i] = std::exp(x[i]) + x[i] * x[i] * x[i];
    }
    pearson_worst = std::max(pearson_worst, std::abs(pearson(ax, y).coefficient -
                                                     (a > 0 ? 1.0 : -1.0) * pearson(x, y).coefficient));
    if (spearman(mx, y).coefficient != spearman(x, y).coefficient) ++spearman_mismatch;
    if (spearman(x, mx).coefficient != 1.0 && average_ranks(x) == average_ranks(mx)) ++spearman_mismatch;
  }

  const bool pass = sdr_worst <= 1e-9 && loss_worst <= 1e-9 && pearson_worst <= 1e-12 && spearman_mismatch == 0;
  return {pass, "SDR rel " + fmt("%.1e", sdr_worst) + ", loss abs " + fmt("%.1e", loss_worst) + ", pearson " +
                    fmt("%.1e", pearson_worst) + ", spearman mismatches " + std::to_string(spearman_mismatch)};
}

// 5
Outcome ctc_optimality() {
  const auto t0 = Clock::now();
  SplitMix64 rng(1005);
  int aligned = 0, too_short = 0, failures = 0;
  double worst = 0.0;
  while (aligned < 500) {
    const std::size_t frames = 1 + rng.next_u64() % 8;
    const std::size_t vocab = 1 + rng.next_u64() % 3;
    const std::size_t length = 1 + rng.next_u64() % 3;
    std::vector<GlossId> glosses(length);
    for (auto& g : glosses) g = static_cast<GlossId>(1 + rng.next_u64() % vocab);
    LogProbSequence lp{"x", {}};
    std::vector<std::vector<double>> rows;
    for (std::size_t t = 0; t < frames; ++t) {
      std::vector<double> row(vocab + 1);
      double peak = -1e300;
      for (double& s : row) peak = std::max(peak, s = 4.0 * rng.next_gaussian());
      double acc = 0;
      for (double s : row) acc += std::exp(s - peak);
      for (double& s : row) s = s - peak - std::log(acc);
      lp.frames.append_row(row);
      rows.push_back(row);
    }
    const auto best = oracle::ctc_best_by_enumeration(rows, glosses);
    if (frames < min_ctc_length(glosses)) {
      ++too_short;
      bool threw = false;
      try {
        forced_align(lp, glosses);
      } catch (const Error& e) {
        threw = e.code() == ErrorCode::SequenceTooShort;
      }
      if (!threw || best) ++failures;
      continue;
    }
    if (!best) {
      ++failures;
      continue;
    }
    worst = std::max(worst, std::abs(viterbi_path(lp, glosses).log_prob - *best));
    const auto spans = forced_align(lp, glosses);
    bool ok = spans.size() == length;
    for (std::size_t i = 0; ok && i < length; ++i) {
      ok = spans[i].gloss_id == glosses[i] && spans[i].start <= spans[i].representative &&
           spans[i].representative <= spans[i].end && spans[i].end < frames &&
           spans[i].representative == (spans[i].start + spans[i].end) / 2 &&
           (i == 0 || spans[i - 1].end < spans[i].start);
    }
    if (!ok) ++failures;
    ++aligned;
  }
  const double secs = seconds_since(t0);
  return {worst <= 1e-9 && failures == 0,
          std::to_string(aligned) + " aligned + " + std::to_string(too_short) + " infeasible, max score diff " +
              fmt("%.1e", worst) + ", structural failures " + std::to_string(failures) + ", " + fmt("%.2f", secs) +
              " s"};
}

// 6
Outcome wer_oracle() {
  SplitMix64 rng(1006);
  int mismatches = 0;
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<std::string> ref(1 + rng.next_u64() % 8), hyp(rng.next_u64() % 9);
    for (auto& t : ref) t = std::string(1, static_cast<char>('a' + rng.next_u64() % 4));
    for (auto& t : hyp) t = std::string(1, static_cast<char>('a' + rng.next_u64() % 4));
    if (wer(ref, hyp).errors() != oracle::levenshtein(ref, hyp)) ++mismatches;
    if (wer(ref, ref).wer != 0.0) ++mismatches;
    if (wer(std::vector<std::string>{ref[0]}, std::vector<std::string>{ref[0]}).wer != 0.0) ++mismatches;
  }
  return {mismatches == 0, "500 pairs, mismatches " + std::to_string(mismatches)};
}

// 7
Outcome statistics() {
  SplitMix64 rng(1007);
  double worst = 0.0;
  int instances = 0;
  while (instances < 100) {
    const std::size_t n = 3 + rng.next_u64() % 18;
    const bool ties = instances % 3 == 0;
    std::vector<double> x(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
      x[i] = ties ? static_cast<double>(rng.next_u64() % 4) : rng.next_gaussian();
      y[i] = ties ? static_cast<double>(rng.next_u64() % 4) : rng.next_gaussian();
    }
    try {
      worst = std::max(worst, std::abs(pearson(x, y).coefficient - oracle::pearson(x, y)));
      worst = std::max(worst, std::abs(spearman(x, y).coefficient - oracle::spearman(x, y)));
    } catch (const Error&) {
      continue;  // constant draw
    }
    ++instances;
  }
  const double p = t_two_sided_p(12.706, 1);
  const double quad = oracle::t_two_sided_p_by_quadrature(12.706, 1);
  const bool pass = worst <= 1e-12 && std::abs(p - 0.05) <= 5e-4 && std::abs(quad - 0.05) <= 5e-4 &&
                    std::abs(p - quad) <= 1e-6;
  return {pass, "max coef err " + fmt("%.1e", worst) + ", p(12.706, 1) = " + fmt("%.6f", p) + ", quadrature " +
                    fmt("%.6f", quad)};
}

// 8
Outcome density_reduction() {
  const auto t0 = Clock::now();
  int wins = 0;
  double rel_sum = 0.0;
  std::string per_seed;
  const int seeds = 5;
  for (int s = 1; s <= seeds; ++s) {
    SynthConfig sc;
    sc.seed = static_cast<std::uint64_t>(s);
    const auto data = gen_synthetic(sc);
    TrainConfig base;
    base.seed = sc.seed;
    base.lambda = 0.0;
    TrainConfig with = base;
    with.lambda = 0.01;
    const auto r0 = train(data.corpus, sc.n_classes, base);
    const auto r1 = train(data.corpus, sc.n_classes, with);
    if (r1.sdr_after < r0.sdr_after) ++wins;
    const double rel = (r0.sdr_after - r1.sdr_after) / r0.sdr_after;
    rel_sum += rel;
    per_seed += (s > 1 ? " " : "") + fmt("%.3f", r0.sdr_after) + "->" + fmt("%.3f", r1.sdr_after);
  }
  const double mean_rel = rel_sum / seeds;
  const double secs = seconds_since(t0);
  return {wins >= 4 && mean_rel >= 0.10 && secs < 180.0,
          std::to_string(wins) + "/5 wins, mean rel reduction " + fmt("%.1f", 100.0 * mean_rel) + "% [" + per_seed +
              "], " + fmt("%.1f", secs) + " s"};
}

// 9
std::map<std::string, std::string> read_tree(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    const auto name = fs::relative(e.path(), dir).string();
    if (name.find("manifest") != std::string::npos) continue;  // carries the timestamp
    out[name] = testutil::read_text(e.path().string());
  }
  return out;
}

Outcome cli_determinism() {
  testutil::TempDir work("acceptance_cli");
  SynthConfig sc;
  sc.n_classes = 5;
  sc.n_clips = 8;
  sc.glosses_per_clip = 4;
  sc.seed = 9;
  const auto data = gen_synthetic(sc);
  fs::create_directories(work / "features");
  fs::create_directories(work / "logits");
  std::string vocab, ann, ref, table = "gloss,sdr,accuracy\n";
  for (const auto& name : data.vocab.names()) vocab += name + "\n";
  for (std::size_t i = 0; i < data.corpus.clips.size(); ++i) {
    const auto& clip = data.corpus.clips[i];
    write_features(work / "features" / (clip.features.clip_id + ".sgf"), clip.features);
    write_logprobs(work / "logits" / (clip.features.clip_id + ".sgl"), data.logprobs[i]);
    nlohmann::json glosses = nlohmann::json::array();
    for (auto g : clip.annotation.glosses) glosses.push_back(data.vocab.name(g));
    nlohmann::json spans = nlohmann::json::array();
    for (const auto& s : *clip.annotation.gold_spans) spans.push_back({s.start, s.end});
    ann += nlohmann::json({{"id", clip.annotation.clip_id}, {"glosses", glosses},
                           {"text_len", clip.annotation.text_len}, {"spans", spans}})
               .dump() +
           "\n";
    ref += nlohmann::json({{"id", clip.annotation.clip_id}, {"tokens", glosses}}).dump() + "\n";
  }
  for (int k = 0; k < 8; ++k) table += "G" + std::to_string(k) + "," + fmt("%.3f", 0.1 * k + 0.05 * (k % 3)) + "," +
                                       fmt("%.3f", 0.9 - 0.07 * k + 0.04 * (k % 2)) + "\n";
  testutil::write_text((work / "vocab.txt").string(), vocab);
  testutil::write_text((work / "ann.jsonl").string(), ann);
  testutil::write_text((work / "ref.jsonl").string(), ref);
  testutil::write_text((work / "table.csv").string(), table);
  const auto clip0 = (work / "features" / (data.corpus.clips[0].features.clip_id + ".sgf")).string();
  const auto w = [&](const char* name) { return (work / name).string(); };
  const std::vector<std::string> corpus = {"--features", w("features"), "--annotations", w("ann.jsonl"), "--vocab",
                                           w("vocab.txt")};
  auto with = [](std::vector<std::string> a, const std::vector<std::string>& b) {
    a.insert(a.end(), b.begin(), b.end());
    return a;
  };

  struct Command {
    std::string name;
    std::vector<std::string> args;
    bool out_is_dir = false;
  };
  const std::vector<Command> commands = {
      {"density", with({"density", "--bins", "3"}, corpus)},
      {"density-align", with({"density", "--align", w("logits")}, corpus)},
      {"align", {"align", "--logits", w("logits"), "--annotations", w("ann.jsonl"), "--vocab", w("vocab.txt")}},
      {"wer", {"wer", "--ref", w("ref.jsonl"), "--hyp", w("ref.jsonl")}},
      {"pairs", {"pairs", "--features", clip0, "--margin-auto", "--text-len", "3"}},
      {"loss", {"loss", "--features", clip0, "--sample", "--margin", "2", "-m", "4", "--gradient-out", "GRAD"}},
      {"correlate", {"correlate", "--input", w("table.csv"), "--pair", "sdr:accuracy"}},
      {"train", {"train", "--compare", "--epochs", "20", "--synth.n_clips", "10"}, true},
      {"project", with({"project", "--format", "csv"}, corpus)},
  };

  int identical = 0;
  std::string failed;
  for (const auto& cmd : commands) {
    std::vector<std::map<std::string, std::string>> trees;
    std::vector<std::string> stdouts;
    for (int rep = 0; rep < 2; ++rep) {
      const fs::path dir = work / ("run_" + cmd.name + "_" + std::to_string(rep));
      fs::create_directories(dir);
      std::vector<std::string> args = {"--seed", "42"};
      for (auto a : cmd.args) args.push_back(a == "GRAD" ? (dir / "grad.sgf").string() : a);
      const std::string out_path = cmd.out_is_dir ? (dir / "out").string() : (dir / "report.out").string();
      std::ostringstream o1, e1;
      auto to_file = args;
      to_file.push_back("--out");
      to_file.push_back(out_path);
      const int c1 = cli::run(to_file, o1, e1);
      std::ostringstream o2, e2;
      const int c2 = cli::run(args, o2, e2);
      if (c1 != 0 || c2 != 0) {
        failed += " " + cmd.name + "(exit " + std::to_string(c1) + "/" + std::to_string(c2) + ": " + e1.str() +
                  e2.str() + ")";
        trees.clear();
        break;
      }
      trees.push_back(read_tree(dir));
      stdouts.push_back(o2.str());
    }
    if (trees.size() != 2) continue;
    if (trees[0] == trees[1] && stdouts[0] == stdouts[1] && !trees[0].empty()) {
      ++identical;
    } else {
      failed += " " + cmd.name;
    }
  }
  return {identical == static_cast<int>(commands.size()),
          std::to_string(identical) + "/" + std::to_string(commands.size()) + " commands byte-identical" +
              (failed.empty() ? "" : "; differing:" + failed)};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"metric oracle suite", metric_oracle},
      {"worked-example goldens", worked_goldens},
      {"gradient check", gradient_check},
      {"invariance suite", invariances},
      {"CTC alignment optimality", ctc_optimality},
      {"WER oracle", wer_oracle},
      {"statistics", statistics},
      {"density reduction on synthetic data", density_reduction},
      {"CLI determinism", cli_determinism},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) ++failures;
    std::printf("[%s] %zu %s: %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(), o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%zu/%zu criteria passed\n", criteria.size() - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
