#pragma once

#include <array>
#include <span>
#include <string>
#include <vector>

#include "gbm/volume.hpp"

namespace gbm {

// Conventions for masks with no voxels. The one-sided HD95 penalty is a
// fixed convention constant (mm), not a measured quantity.
struct EmptyMaskPolicy {
  double both_empty_dsc = 100.0;
  double both_empty_hd95 = 0.0;
  double one_empty_hd95_penalty = 373.1287;
};

struct CaseMetrics {
  std::string case_id;
  // Indexed by Region: DSC in percent, HD95 in mm.
  std::array<double, 3> dsc{};
  std::array<double, 3> hd95{};
};

enum class LossForm {
  // DSC + CE exactly as the combined loss is usually printed: the soft-Dice
  // similarity plus the cross-entropy.
  kLiteral,
  // (1 - soft-Dice) + CE, the quantity a training loop minimizes.
  kConventional,
};

struct LossConfig {
  double epsilon = 1e-5;
  LossForm form = LossForm::kConventional;
};

// Probabilities are clamped to [kLogClamp, 1 - kLogClamp] before the log.
inline constexpr double kLogClamp = 1e-12;

// 100 * 2|A∩B| / (|A| + |B|), with the policy's empty-mask conventions.
double dice(const RegionMask& a, const RegionMask& b, const EmptyMaskPolicy& policy = {});

// Member voxels with at least one 6-neighbour outside the mask, in linear
// voxel order.
std::vector<Index3> surface_voxels(const RegionMask& m);

// 95th percentile (linear interpolation) of the pooled surface-to-surface
// distances in both directions, in mm.
double hd95(const RegionMask& a, const RegionMask& b, const EmptyMaskPolicy& policy = {});

// Soft-Dice term (2Σyp + ε) / (Σy + Σp + ε) combined with CE = -Σ y log p.
double soft_dice_ce(const ProbabilityVolume& p, const RegionMask& y, const LossConfig& cfg = {});

CaseMetrics evaluate_case(const LabelVolume& pred, const LabelVolume& gt, const EmptyMaskPolicy& policy = {},
                          std::string case_id = {});

// q-th quantile (q in [0, 1]) of ascending-sorted values, linearly
// interpolated between order statistics at position q * (n - 1).
double quantile_sorted(std::span<const double> sorted, double q);

}  // namespace gbm
