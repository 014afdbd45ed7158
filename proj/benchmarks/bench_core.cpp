#include <benchmark/benchmark.h>

#include <cmath>

#include "signdense/aligner.hpp"
#include "signdense/density.hpp"
#include "signdense/signcl.hpp"
#include "signdense/splitmix64.hpp"
#include "signdense/trainer.hpp"

using namespace signdense;

namespace {

std::vector<GlossGroup> random_groups(std::size_t glosses, std::size_t members, std::size_t dim) {
  SplitMix64 rng(1);
  std::vector<GlossGroup> out;
  for (std::size_t g = 0; g < glosses; ++g) {
    GlossGroup group{static_cast<GlossId>(g + 1), Matrix(members, dim)};
    for (std::size_t r = 0; r < members; ++r)
      for (std::size_t c = 0; c < dim; ++c) group.members(r, c) = rng.next_gaussian() + static_cast<double>(g);
    out.push_back(std::move(group));
  }
  return out;
}

}  // namespace

static void BM_DatasetSdr(benchmark::State& state) {
  const auto groups = random_groups(static_cast<std::size_t>(state.range(0)), 8, 64);
  for (auto _ : state) benchmark::DoNotOptimize(dataset_sdr(groups).dataset_sdr);
}
BENCHMARK(BM_DatasetSdr)->Arg(16)->Arg(64)->Arg(128);

static void BM_ForcedAlign(benchmark::State& state) {
  const std::size_t frames = static_cast<std::size_t>(state.range(0));
  const std::size_t vocab = 100;
  SplitMix64 rng(2);
  LogProbSequence lp{"bench", Matrix(frames, vocab + 1)};
  for (std::size_t t = 0; t < frames; ++t) {
    double acc = 0.0;
    for (std::size_t k = 0; k <= vocab; ++k) acc += std::exp(lp.frames(t, k) = rng.next_gaussian());
    for (std::size_t k = 0; k <= vocab; ++k) lp.frames(t, k) -= std::log(acc);
  }
  std::vector<GlossId> glosses(frames / 9);
  for (auto& g : glosses) g = static_cast<GlossId>(1 + rng.next_u64() % vocab);
  for (auto _ : state) benchmark::DoNotOptimize(forced_align(lp, glosses));
}
BENCHMARK(BM_ForcedAlign)->Arg(90)->Arg(300);

static void BM_SignclLoss(benchmark::State& state) {
  const std::size_t frames = static_cast<std::size_t>(state.range(0));
  SplitMix64 rng(3);
  Matrix f(frames, 512);
  for (std::size_t r = 0; r < frames; ++r)
    for (std::size_t c = 0; c < 512; ++c) f(r, c) = rng.next_gaussian();
  const auto pairs = sample_pairs(frames, estimate_margin(frames, frames / 20), 7);
  for (auto _ : state) benchmark::DoNotOptimize(signcl_loss(f, pairs, LossConfig{}).loss);
}
BENCHMARK(BM_SignclLoss)->Arg(100)->Arg(400);

static void BM_TrainEpoch(benchmark::State& state) {
  const auto data = gen_synthetic(SynthConfig{});
  TrainConfig cfg;
  cfg.epochs = 1;
  for (auto _ : state) benchmark::DoNotOptimize(train(data.corpus, 8, cfg).sdr_after);
}
BENCHMARK(BM_TrainEpoch)->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();
