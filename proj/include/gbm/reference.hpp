#pragma once

// Straightforward serial implementations of the parallel kernels and of
// STAPLE. They share no code with gbm/kernels.hpp and exist so tests and
// the benchmark can check the fast paths against a slow, obvious one.

#include <array>
#include <span>
#include <vector>

#include "gbm/fusion.hpp"
#include "gbm/kernels.hpp"
#include "gbm/volume.hpp"

namespace gbm::reference {

kernels::Moments nonzero_moments(std::span<const double> values);

std::vector<std::uint8_t> surface_mask(std::span<const std::uint8_t> member, const Index3& dims);

// All-pairs nearest distance.
std::vector<double> nearest_distances(std::span<const Index3> from, std::span<const Index3> to,
                                      const Spacing3& spacing);

std::vector<double> resample_rotated(std::span<const double> src, const Geometry& geometry,
                                     const std::array<std::array<double, 3>, 3>& inverse, kernels::Sampling sampling);

// Voxel-by-voxel EM with no pattern grouping.
StapleResult staple_binary(std::span<const RegionMask> raters, const StapleConfig& cfg = {});

}  // namespace gbm::reference
