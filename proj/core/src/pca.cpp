#include "signdense/pca.hpp"

#include <algorithm>
#include <cmath>

#include "signdense/error.hpp"
#include "signdense/splitmix64.hpp"

namespace signdense {
namespace {

constexpr std::uint64_t kStartVectorSeed = 0x5ca1ab1e;

void normalize(std::vector<double>& v) {
  const double norm = std::sqrt(squared_norm(v));
  for (double& x : v) x /= norm;
}

void fix_sign(std::vector<double>& v) {
  const auto it = std::max_element(v.begin(), v.end(), [](double a, double b) { return std::abs(a) < std::abs(b); });
  if (it != v.end() && *it < 0.0) {
    for (double& x : v) x = -x;
  }
}

std::vector<double> multiply(const Matrix& m, const std::vector<double>& v) {
  std::vector<double> out(m.rows(), 0.0);
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const auto row = m.row(r);
    for (std::size_t c = 0; c < m.cols(); ++c) out[r] += row[c] * v[c];
  }
  return out;
}

// Removes components along `basis` (already orthonormal).
void orthogonalize(std::vector<double>& v, const std::vector<EigenPair>& basis) {
  for (const auto& e : basis) {
    double dot = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) dot += v[i] * e.vector[i];
    for (std::size_t i = 0; i < v.size(); ++i) v[i] -= dot * e.vector[i];
  }
}

// Any unit vector orthogonal to `basis`, for a null deflated matrix.
std::vector<double> orthogonal_completion(std::size_t dim, const std::vector<EigenPair>& basis) {
  for (std::size_t axis = 0; axis < dim; ++axis) {
    std::vector<double> v(dim, 0.0);
    v[axis] = 1.0;
    orthogonalize(v, basis);
    if (squared_norm(v) > 1e-12) {
      normalize(v);
      return v;
    }
  }
  return std::vector<double>(dim, 0.0);
}

}  // namespace

std::vector<EigenPair> top_eigenpairs(const Matrix& symmetric, std::size_t k, const PowerIterationOptions& opts) {
  const std::size_t n = symmetric.rows();
  if (n == 0 || symmetric.cols() != n) throw Error(ErrorCode::InvalidArgument, "expected a nonempty square matrix");
  if (k > n) throw Error(ErrorCode::InvalidArgument, "asked for more eigenpairs than the dimension");

  Matrix work = symmetric;
  double scale = 0.0;
  for (double x : symmetric.data()) scale = std::max(scale, std::abs(x));
  std::vector<EigenPair> out;
  SplitMix64 rng(kStartVectorSeed);
  for (std::size_t idx = 0; idx < k; ++idx) {
    std::vector<double> v(n);
    for (double& x : v) x = rng.next_unit() + 0.5;
    orthogonalize(v, out);
    normalize(v);

    double lambda = 0.0;
    bool null_space = false;
    for (std::size_t it = 0; it < opts.max_iterations; ++it) {
      auto w = multiply(work, v);
      orthogonalize(w, out);
      const double norm = std::sqrt(squared_norm(w));
      if (norm <= 1e-14 * std::max(scale, 1.0)) {
        null_space = true;
        break;
      }
      for (double& x : w) x /= norm;
      double diff_plus = 0.0;
      double diff_minus = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        diff_plus = std::max(diff_plus, std::abs(w[i] - v[i]));
        diff_minus = std::max(diff_minus, std::abs(w[i] + v[i]));
      }
      v = std::move(w);
      lambda = norm;
      if (std::min(diff_plus, diff_minus) < opts.tolerance) break;
    }
    if (null_space) {
      v = orthogonal_completion(n, out);
      lambda = 0.0;
    } else {
      // Rayleigh quotient against the undeflated matrix.
      const auto av = multiply(symmetric, v);
      lambda = 0.0;
      for (std::size_t i = 0; i < n; ++i) lambda += v[i] * av[i];
    }
    fix_sign(v);
    for (std::size_t r = 0; r < n; ++r) {
      for (std::size_t c = 0; c < n; ++c) work(r, c) -= lambda * v[r] * v[c];
    }
    out.push_back({lambda, std::move(v)});
  }
  return out;
}

std::vector<ProjectedPoint> pca_2d(std::span<const GlossGroup> groups, const PowerIterationOptions& opts) {
  std::size_t total = 0;
  std::size_t dim = 0;
  for (const auto& g : groups) {
    if (g.size() == 0) continue;
    if (dim == 0) dim = g.members.cols();
    if (g.members.cols() != dim) throw Error(ErrorCode::DimMismatch, "groups differ in dimension");
    total += g.size();
  }
  if (total < 2) throw Error(ErrorCode::InvalidArgument, "PCA needs at least two points");
  if (dim < 2) throw Error(ErrorCode::InvalidArgument, "PCA to 2-D needs dim >= 2");

  std::vector<double> centroid(dim, 0.0);
  for (const auto& g : groups) {
    for (std::size_t r = 0; r < g.size(); ++r) {
      const auto row = g.members.row(r);
      for (std::size_t c = 0; c < dim; ++c) centroid[c] += row[c];
    }
  }
  for (double& c : centroid) c /= static_cast<double>(total);

  Matrix cov(dim, dim);
  std::vector<double> centered(dim);
  for (const auto& g : groups) {
    for (std::size_t r = 0; r < g.size(); ++r) {
      const auto row = g.members.row(r);
      for (std::size_t c = 0; c < dim; ++c) centered[c] = row[c] - centroid[c];
      for (std::size_t a = 0; a < dim; ++a) {
        for (std::size_t b = 0; b < dim; ++b) cov(a, b) += centered[a] * centered[b];
      }
    }
  }
  for (double& x : cov.data()) x /= static_cast<double>(total - 1);

  const auto axes = top_eigenpairs(cov, 2, opts);
  double trace = 0.0;
  for (std::size_t i = 0; i < dim; ++i) trace += cov(i, i);
  if (!(axes[0].value > 1e-14 * std::max(trace, 1.0)) || trace == 0.0) {
    throw Error(ErrorCode::DegenerateCovariance, "point cloud has zero variance");
  }

  std::vector<ProjectedPoint> out;
  out.reserve(total);
  for (const auto& g : groups) {
    for (std::size_t r = 0; r < g.size(); ++r) {
      const auto row = g.members.row(r);
      ProjectedPoint p{g.gloss_id, 0.0, 0.0};
      for (std::size_t c = 0; c < dim; ++c) {
        const double v = row[c] - centroid[c];
        p.x += v * axes[0].vector[c];
        p.y += v * axes[1].vector[c];
      }
      out.push_back(p);
    }
  }
  return out;
}

}  // namespace signdense
