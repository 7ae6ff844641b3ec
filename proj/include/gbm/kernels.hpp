#pragma once

// OpenMP data-parallel kernels behind the public operations.
//
// Every kernel produces results that do not depend on the thread count:
// per-voxel kernels write disjoint outputs, and floating-point reductions
// go through blocked_reduce, which combines fixed-size block partials in
// block order. Serial counterparts used for testing and benchmarking live
// in gbm/reference.hpp.

#include <algorithm>
#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "gbm/volume.hpp"

namespace gbm::kernels {

inline constexpr std::size_t kReduceBlock = std::size_t{1} << 14;

// Sums fn(begin, end) over consecutive blocks of kReduceBlock items.
// T needs a default constructor that yields the identity and operator+=.
template <class T, class BlockFn>
T blocked_reduce(std::size_t n, BlockFn&& fn) {
  const std::size_t blocks = (n + kReduceBlock - 1) / kReduceBlock;
  std::vector<T> partial(blocks);
  const auto nblocks = static_cast<std::int64_t>(blocks);
#pragma omp parallel for schedule(static)
  for (std::int64_t b = 0; b < nblocks; ++b) {
    const std::size_t begin = static_cast<std::size_t>(b) * kReduceBlock;
    partial[b] = fn(begin, std::min(n, begin + kReduceBlock));
  }
  T total{};
  for (const T& p : partial) total += p;
  return total;
}

struct Moments {
  std::size_t count = 0;
  double mean = 0.0;
  // Population variance.
  double variance = 0.0;
};

// Mean and population variance over the nonzero entries (two-pass).
Moments nonzero_moments(std::span<const double> values);

// 1 where a member voxel has a 6-neighbour outside the mask (out-of-grid
// sides count as outside), else 0.
std::vector<std::uint8_t> surface_mask(std::span<const std::uint8_t> member, const Index3& dims);

// Exact squared Euclidean distance (mm^2) from every voxel to the nearest
// site, separable lower-envelope transform along each axis in turn.
// Voxels with no site anywhere get +infinity.
std::vector<double> squared_distance_transform(std::span<const std::uint8_t> sites, const Index3& dims,
                                               const Spacing3& spacing);

// Distance in mm from each `from` voxel to the nearest `to` voxel. Both
// sets are given as coordinates inside `dims`; `to` must be nonempty.
std::vector<double> nearest_distances(std::span<const Index3> from, std::span<const Index3> to,
                                      const Index3& dims, const Spacing3& spacing);

enum class Sampling { kTrilinear, kNearest };

// out(x) = src(inverse(x)) where inverse maps output voxel index to source
// voxel index via the 3x3 matrix `inverse` about `center` in physical
// space. Samples outside the source grid read 0.
std::vector<double> resample_rotated(std::span<const double> src, const Geometry& geometry,
                                     const std::array<std::array<double, 3>, 3>& inverse, Sampling sampling);

// Binary rater decisions grouped by distinct per-voxel decision pattern.
struct DecisionPatterns {
  std::size_t raters = 0;
  // decisions[p * raters + j] is rater j's decision (0/1) in pattern p.
  std::vector<std::uint8_t> decisions;
  std::vector<std::size_t> counts;
  // Pattern index of every voxel.
  std::vector<std::uint32_t> voxel_pattern;

  std::size_t pattern_count() const { return counts.size(); }
};

// Patterns are ordered by their bit code (rater j is bit j), so the table
// is identical for any rater-independent voxel permutation.
DecisionPatterns decision_patterns(std::span<const std::span<const std::uint8_t>> raters);

}  // namespace gbm::kernels
