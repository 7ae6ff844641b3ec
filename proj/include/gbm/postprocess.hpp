#pragma once

#include <cstddef>

#include "gbm/volume.hpp"

namespace gbm {

struct PostprocessConfig {
  // Minimum total number of enhancing-tumor voxels kept as label 4.
  std::size_t et_threshold = 200;
};

// When the volume holds fewer than cfg.et_threshold label-4 voxels in total,
// every label-4 voxel becomes label 1 (necrosis). Otherwise unchanged.
LabelVolume et_threshold_relabel(const LabelVolume& labels, const PostprocessConfig& cfg = {});

}  // namespace gbm
