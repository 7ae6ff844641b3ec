#pragma once

#include <array>
#include <cstdint>
#include <span>

#include "gbm/volume.hpp"

namespace gbm {

struct BoundingBox {
  Index3 low{0, 0, 0};   // inclusive
  Index3 high{0, 0, 0};  // exclusive

  Index3 extent() const { return {high[0] - low[0], high[1] - low[1], high[2] - low[2]}; }
  bool valid_for(const Geometry& g) const;

  friend bool operator==(const BoundingBox&, const BoundingBox&) = default;
};

enum class Axis : std::uint8_t { kX = 0, kY = 1, kZ = 2 };

enum class Interpolation { kTrilinear, kNearest };

using AxisSet = std::array<bool, 3>;

struct AugmentSpec {
  Axis rotation_axis = Axis::kX;
  double rotation_deg = 0.0;
  AxisSet flip_axes{false, false, false};
  double gamma = 1.0;
  std::uint64_t seed = 0;
};

inline constexpr Index3 kDefaultTargetDims{192, 224, 160};
inline constexpr double kMaxRotationDeg = 30.0;
inline constexpr double kGammaLow = 0.7;
inline constexpr double kGammaHigh = 1.5;

// Tightest box around voxels nonzero in any modality.
BoundingBox brain_bounding_box(std::span<const VoxelGrid> modalities);

// Centers the box contents in a grid of target dims. Per axis a smaller box
// is zero-padded (odd remainder on the high side) and a larger one is
// center-cropped (odd remainder trimmed from the high side). The affine is
// shifted so every retained voxel keeps its world position.
VoxelGrid crop_and_fit(const VoxelGrid& grid, const BoundingBox& box, const Index3& target_dims);
LabelVolume crop_and_fit(const LabelVolume& labels, const BoundingBox& box, const Index3& target_dims);

// Brain-only z-score: mean and population std over nonzero voxels; zero
// voxels stay exactly 0.
VoxelGrid zscore_normalize(const VoxelGrid& grid);

// Mirrors voxel values along each selected axis. Geometry is unchanged.
VoxelGrid flip3d(const VoxelGrid& grid, const AxisSet& axes);
LabelVolume flip3d(const LabelVolume& labels, const AxisSet& axes);
RegionMask flip3d(const RegionMask& mask, const AxisSet& axes);

// Rotation about the grid center (in physical space) around one axis by
// degrees in [0, 30]. Samples falling outside the source read 0.
VoxelGrid rotate3d(const VoxelGrid& grid, Axis axis, double degrees, Interpolation interpolation);
// Label payloads are always nearest-neighbour.
LabelVolume rotate3d(const LabelVolume& labels, Axis axis, double degrees);
RegionMask rotate3d(const RegionMask& mask, Axis axis, double degrees);

// min + (max - min) * ((v - min) / (max - min))^gamma. Constant grids are
// returned unchanged; min and max map to themselves exactly.
VoxelGrid gamma_transform(const VoxelGrid& grid, double gamma);

// Deterministic in the seed: rotation axis uniform, rotation_deg uniform in
// [0, 30], each flip axis with probability 1/2, gamma uniform in [0.7, 1.5].
AugmentSpec sample_augmentation(std::uint64_t seed);

// rotate (trilinear), flip, then gamma.
VoxelGrid apply_augmentation(const VoxelGrid& grid, const AugmentSpec& spec);
// rotate (nearest), flip; no intensity change.
LabelVolume apply_augmentation(const LabelVolume& labels, const AugmentSpec& spec);

}  // namespace gbm
