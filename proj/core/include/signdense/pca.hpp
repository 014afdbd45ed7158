#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "signdense/density.hpp"

namespace signdense {

struct ProjectedPoint {
  GlossId gloss_id = 0;
  double x = 0.0;
  double y = 0.0;
};

struct PowerIterationOptions {
  double tolerance = 1e-10;
  std::size_t max_iterations = 10000;
};

struct EigenPair {
  double value = 0.0;
  std::vector<double> vector;
};

// Top-k eigenpairs of a symmetric PSD matrix by power iteration with
// Hotelling deflation. Vectors are unit length with their largest-magnitude
// component positive.
std::vector<EigenPair> top_eigenpairs(const Matrix& symmetric, std::size_t k, const PowerIterationOptions& opts = {});

// Projects the pooled, centered point cloud onto its two leading principal
// axes. Points come back group by group, members in order.
std::vector<ProjectedPoint> pca_2d(std::span<const GlossGroup> groups, const PowerIterationOptions& opts = {});

}  // namespace signdense
