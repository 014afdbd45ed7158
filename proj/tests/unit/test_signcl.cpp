#include <gtest/gtest.h>

#include <cmath>
#include <functional>

#include "signdense/error.hpp"
#include "signdense/report.hpp"
#include "signdense/signcl.hpp"
#include "signdense/splitmix64.hpp"
#include "support/test_util.hpp"

using namespace signdense;

namespace {

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected signdense::Error";
  return ErrorCode::InvalidArgument;
}

Matrix column(std::initializer_list<double> values) {
  Matrix m;
  for (double v : values) m.append_row(std::vector<double>{v});
  return m;
}

PairSet explicit_pairs(std::size_t n, std::vector<PairTriple> triples) {
  PairSet p;
  p.n_frames = n;
  p.temporal_margin = 0.0;
  p.triples = std::move(triples);
  return p;
}

}  // namespace

TEST(EstimateMargin, Examples) {
  EXPECT_DOUBLE_EQ(estimate_margin(100, 10), 23.0);
  EXPECT_DOUBLE_EQ(estimate_margin(40, 20), 10.0);
  EXPECT_EQ(code_of([] { estimate_margin(40, 0); }), ErrorCode::ZeroTextLength);
  EXPECT_DOUBLE_EQ(estimate_margin(40, 20, MarginConfig{2.3, 0.0}), 40.0 / 20.0 * 2.3);
}

TEST(SamplePairs, ShortClipHasNoNegatives) {
  const auto p = sample_pairs(3, 1.0, 99);
  ASSERT_EQ(p.triples.size(), 3u);
  EXPECT_EQ(p.triples[0], (PairTriple{0, 1, std::nullopt}));
  EXPECT_EQ(p.triples[1], (PairTriple{1, 2, std::nullopt}));
  EXPECT_EQ(p.triples[2], (PairTriple{2, 1, std::nullopt}));
  EXPECT_EQ(p.negative_count(), 0u);
}

TEST(SamplePairs, FirstAnchorNegativeIsFar) {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto p = sample_pairs(6, 1.0, seed);
    EXPECT_EQ(p.triples[0].positive, 1u);
    ASSERT_TRUE(p.triples[0].negative);
    EXPECT_GE(*p.triples[0].negative, 3u);
    EXPECT_LE(*p.triples[0].negative, 5u);
  }
}

TEST(SamplePairs, MatchesGoldenStream) {
  const auto golden = testutil::read_text(std::string(SIGNDENSE_TEST_DATA_DIR) + "/pairs_n6_m1_seed7.json");
  const auto p = sample_pairs(6, 1.0, 7);
  EXPECT_EQ(p, parse_pair_set(golden));
  EXPECT_EQ(to_json(p), golden);
}

TEST(SamplePairs, InvariantsAndDeterminism) {
  SplitMix64 rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 2 + rng.next_u64() % 60;
    const double margin = 15.0 * rng.next_unit();
    const std::uint64_t seed = rng.next_u64();
    const auto p = sample_pairs(n, margin, seed);
    EXPECT_NO_THROW(validate(p));
    EXPECT_EQ(p, sample_pairs(n, margin, seed));
    for (const auto& t : p.triples) {
      std::size_t far = 0;
      for (std::size_t i = 0; i < n; ++i)
        if (std::abs(static_cast<double>(i) - static_cast<double>(t.anchor)) > 2.0 * margin) ++far;
      EXPECT_EQ(t.negative.has_value(), far > 0);
    }
  }
  EXPECT_EQ(code_of([] { sample_pairs(1, 1.0, 0); }), ErrorCode::TooFewFrames);
}

TEST(SignclLoss, WorkedExample) {
  const Matrix f = column({0, 1, 2, 30, 31, 32});
  const auto pairs = explicit_pairs(6, {{0, 1, 3}, {1, 2, 4}, {2, 3, 5}, {3, 4, 0}, {4, 5, 1}, {5, 4, 2}});
  const auto v = signcl_loss(f, pairs, LossConfig{10.0, 0.01});
  EXPECT_DOUBLE_EQ(v.loss, 5.5);
  EXPECT_EQ(v.negative_terms, 6u);
  EXPECT_EQ(v.active_hinges, 0u);
  EXPECT_EQ(v.gradient.rows(), 6u);
  EXPECT_EQ(v.gradient.cols(), 1u);
}

TEST(SignclLoss, ZeroWhenPositivesCoincideAndNegativesFar) {
  const Matrix f = column({0, 0, 100, 100});
  const auto pairs = explicit_pairs(4, {{0, 1, 2}, {1, 0, 3}, {2, 3, 0}, {3, 2, 1}});
  const auto v = signcl_loss(f, pairs, LossConfig{10.0, 0.01});
  EXPECT_EQ(v.loss, 0.0);
  for (std::size_t r = 0; r < 4; ++r) EXPECT_EQ(v.gradient(r, 0), 0.0);
}

TEST(SignclLoss, IndexOutOfRange) {
  const Matrix f = column({0, 1, 2});
  const auto pairs = explicit_pairs(3, {{0, 1, 3}, {1, 2, std::nullopt}, {2, 1, std::nullopt}});
  EXPECT_EQ(code_of([&] { signcl_loss(f, pairs, LossConfig{}); }), ErrorCode::IndexOutOfRange);
}

TEST(SignclLoss, SkipPolicyDropsUnpairedAnchors) {
  const Matrix f = column({0, 3, 9});
  const auto pairs = explicit_pairs(3, {{0, 1, 2}, {1, 2, std::nullopt}, {2, 1, std::nullopt}});
  // Kept: (3 + max(0, 10 - 9) + 6 + 6) / 3. Skipped: only anchor 0 remains.
  EXPECT_DOUBLE_EQ(signcl_loss(f, pairs, LossConfig{10.0, 0.01}).loss, 16.0 / 3.0);
  EXPECT_DOUBLE_EQ(signcl_loss(f, pairs, LossConfig{10.0, 0.01}, UnpairedAnchors::kSkip).loss, 4.0);
}

TEST(SignclLoss, GradientMatchesFiniteDifferences) {
  SplitMix64 rng(11);
  int checked = 0;
  while (checked < 200) {
    const std::size_t n = 2 + rng.next_u64() % 9;
    const std::size_t dim = 1 + rng.next_u64() % 5;
    Matrix f(n, dim);
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t c = 0; c < dim; ++c) f(r, c) = 4.0 * rng.next_gaussian();
    const double m = 1.0 + 6.0 * rng.next_unit();
    const auto pairs = sample_pairs(n, 0.5 * rng.next_unit() * static_cast<double>(n) / 2.0, rng.next_u64());

    bool singular = false;
    for (std::size_t a = 0; a < n && !singular; ++a)
      for (std::size_t b = a + 1; b < n; ++b) {
        const double d = euclidean_distance(f.row(a), f.row(b));
        if (d <= 1e-3 || std::abs(d - m) <= 1e-3) singular = true;
      }
    if (singular) continue;

    const LossConfig cfg{m, 0.01};
    const auto v = signcl_loss(f, pairs, cfg);
    const double h = 1e-5;
    for (std::size_t r = 0; r < n; ++r) {
      for (std::size_t c = 0; c < dim; ++c) {
        Matrix up = f, down = f;
        up(r, c) += h;
        down(r, c) -= h;
        const double fd = (signcl_loss(up, pairs, cfg).loss - signcl_loss(down, pairs, cfg).loss) / (2 * h);
        const double g = v.gradient(r, c);
        EXPECT_LE(std::abs(fd - g), 1e-5 * std::max(1.0, std::abs(g))) << "r=" << r << " c=" << c;
      }
    }
    ++checked;
  }
}

TEST(SignclLoss, TranslationInvariance) {
  SplitMix64 rng(12);
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
    const LossConfig cfg{8.0, 0.01};
    const auto a = signcl_loss(f, pairs, cfg);
    const auto b = signcl_loss(g, pairs, cfg);
    EXPECT_NEAR(a.loss, b.loss, 1e-9);
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t c = 0; c < dim; ++c) EXPECT_NEAR(a.gradient(r, c), b.gradient(r, c), 1e-9);
  }
}

TEST(SignclLoss, Monotonicity) {
  // Frame 3 only appears in the positive pair (2, 3). Frames 2 and 3 are
  // negatives of 0 and 1 and have 0 as their negative.
  const auto pairs = explicit_pairs(4, {{0, 1, 2}, {1, 0, 2}, {2, 3, 0}, {3, 2, 0}});
  SplitMix64 rng(13);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t dim = 1 + rng.next_u64() % 4;
    Matrix f(4, dim);
    for (std::size_t r = 0; r < 4; ++r)
      for (std::size_t c = 0; c < dim; ++c) f(r, c) = 3.0 * rng.next_gaussian();
    const LossConfig cfg{1.0 + 8.0 * rng.next_unit(), 0.01};

    double last = signcl_loss(f, pairs, cfg).loss;
    Matrix g = f;
    for (int step = 0; step < 20; ++step) {
      for (std::size_t c = 0; c < dim; ++c) g(3, c) += 0.25 * (f(3, c) - f(2, c));
      const double loss = signcl_loss(g, pairs, cfg).loss;
      EXPECT_GE(loss, last - 1e-12);
      last = loss;
    }

    // Push the (2, 3) pair rigidly away from the midpoint of 0 and 1 along a
    // direction that increases both distances.
    std::vector<double> dir(dim);
    double norm = 0;
    for (std::size_t c = 0; c < dim; ++c) {
      dir[c] = f(2, c) + f(3, c) - f(0, c) - f(1, c);
      norm += dir[c] * dir[c];
    }
    if (norm < 1e-12) continue;
    g = f;
    last = signcl_loss(g, pairs, cfg).loss;
    double d02 = euclidean_distance(g.row(0), g.row(2));
    double d12 = euclidean_distance(g.row(1), g.row(2));
    double d03 = euclidean_distance(g.row(0), g.row(3));
    for (int step = 0; step < 20; ++step) {
      for (std::size_t c = 0; c < dim; ++c) {
        g(2, c) += 0.5 * dir[c] / std::sqrt(norm);
        g(3, c) += 0.5 * dir[c] / std::sqrt(norm);
      }
      const double n02 = euclidean_distance(g.row(0), g.row(2));
      const double n12 = euclidean_distance(g.row(1), g.row(2));
      const double n03 = euclidean_distance(g.row(0), g.row(3));
      const double loss = signcl_loss(g, pairs, cfg).loss;
      if (n02 >= d02 && n12 >= d12 && n03 >= d03) {
        EXPECT_LE(loss, last + 1e-12);
      }
      d02 = n02;
      d12 = n12;
      d03 = n03;
      last = loss;
    }
  }
}

TEST(SignclLoss, NonNegativeAndZeroOnlyWhenSatisfied) {
  SplitMix64 rng(14);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 2 + rng.next_u64() % 10;
    Matrix f(n, 2);
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t c = 0; c < 2; ++c) f(r, c) = 4.0 * rng.next_gaussian();
    const auto v = signcl_loss(f, sample_pairs(n, 0.5, rng.next_u64()), LossConfig{3.0, 0.01});
    EXPECT_GT(v.loss, 0.0);
  }
}

TEST(SignclLoss, ValidateRejectsBadSets) {
  EXPECT_EQ(code_of([] { validate(explicit_pairs(3, {{0, 2, std::nullopt}, {1, 2, std::nullopt}, {2, 1, std::nullopt}})); }),
            ErrorCode::InvalidArgument);
  EXPECT_EQ(code_of([] { validate(explicit_pairs(3, {{0, 1, std::nullopt}, {1, 2, std::nullopt}})); }),
            ErrorCode::InvalidArgument);
  EXPECT_EQ(code_of([] { validate(explicit_pairs(3, {{0, 1, 5}, {1, 2, std::nullopt}, {2, 1, std::nullopt}})); }),
            ErrorCode::IndexOutOfRange);
  EXPECT_EQ(code_of([] { signcl_loss(column({0, 1}), explicit_pairs(3, {}), LossConfig{}); }), ErrorCode::DimMismatch);
}

TEST(CombinedLoss, Examples) {
  EXPECT_NEAR(combined_loss(5.5, 2.0, 0.01), 2.055, 1e-15);
  EXPECT_EQ(combined_loss(123.0, 2.0, 0.0), 2.0);
  EXPECT_EQ(combined_loss(0.0, 2.0, 0.3), 2.0);
  EXPECT_EQ(code_of([] { combined_loss(1.0, 1.0, -0.1); }), ErrorCode::InvalidArgument);
}
