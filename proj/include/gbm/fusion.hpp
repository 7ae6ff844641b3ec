#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "gbm/postprocess.hpp"
#include "gbm/volume.hpp"

namespace gbm {

// How STAPLE sets the prior probability that a voxel is foreground.
enum class PriorMode {
  // One scalar: the mean of all rater decisions over all voxels.
  kGlobalMean,
  // Per voxel: the fraction of raters marking that voxel.
  kVoxelwiseMean,
  // StapleConfig::fixed_prior everywhere.
  kFixed,
};

struct StapleConfig {
  int max_iter = 50;
  // Stop once the mean absolute change of the voxel weights drops below this.
  double tol = 1e-6;
  PriorMode prior = PriorMode::kGlobalMean;
  double fixed_prior = 0.5;
  // Sensitivity and specificity are kept inside [clamp, 1 - clamp].
  double clamp = 1e-6;
  // Starting sensitivity and specificity of every rater.
  double initial_performance = 0.99;

  // Throws kBadArgument on out-of-range settings.
  void validate() const;
};

struct RaterPerformance {
  double sensitivity = 0.0;
  double specificity = 0.0;
};

struct StapleResult {
  // Posterior probability that each voxel is foreground.
  ProbabilityVolume weights;
  std::vector<RaterPerformance> performances;
  // Number of M-steps taken.
  int iterations = 0;
  // Observed-data log-likelihood at every E-step, in order.
  std::vector<double> loglik_trace;
  // weights >= 0.5.
  RegionMask consensus;
};

// Voxel-wise mean of one region's probabilities.
ProbabilityVolume average_probabilities(std::span<const ProbabilityVolume> probs);

// Most frequent label per voxel; ties go to the smallest tied label.
LabelVolume majority_vote(std::span<const LabelVolume> raters);

// Binary STAPLE expectation-maximization over >= 2 raters of one region.
StapleResult staple_binary(std::span<const RegionMask> raters, const StapleConfig& cfg = {});

// Per-region STAPLE over ET, TC and WT, recombined with decompose_regions.
// A region every method leaves empty stays empty without running STAPLE.
LabelVolume staple_regions(std::span<const LabelVolume> methods, const StapleConfig& cfg = {});

// One fold's (or one model's) region probabilities.
struct RegionProbabilities {
  ProbabilityVolume et;
  ProbabilityVolume tc;
  ProbabilityVolume wt;
};

using MethodFolds = std::vector<RegionProbabilities>;

// Averages a method's folds per region, thresholds at 0.5 and decomposes
// the three masks into labels.
LabelVolume fuse_folds(std::span<const RegionProbabilities> folds);

// fuse_folds per method, staple_regions across methods, then the
// enhancing-tumor size rule.
LabelVolume ensemble_pipeline(std::span<const MethodFolds> methods, const StapleConfig& cfg = {},
                              const PostprocessConfig& post = {});

}  // namespace gbm
