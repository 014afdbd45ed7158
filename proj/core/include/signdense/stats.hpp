#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace signdense {

struct CorrResult {
  double coefficient = 0.0;
  std::size_t n = 0;
  double p_value = 1.0;
};

// Requires n >= 3 equal-length samples, neither constant. The p-value is the
// two-sided Student-t tail with n - 2 degrees of freedom.
CorrResult pearson(std::span<const double> x, std::span<const double> y);

// Pearson on average (fractional) ranks.
CorrResult spearman(std::span<const double> x, std::span<const double> y);

// 1-based average ranks; tied values share the mean of their positions.
std::vector<double> average_ranks(std::span<const double> values);

// Regularized incomplete beta I_x(a, b) by Lentz's continued fraction.
double regularized_incomplete_beta(double x, double a, double b);

// P(|T| >= |t|) for Student's t with `df` degrees of freedom.
double t_two_sided_p(double t, double df);

}  // namespace signdense
