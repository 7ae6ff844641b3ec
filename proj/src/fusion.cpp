#include "gbm/fusion.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "gbm/kernels.hpp"

namespace gbm {

void StapleConfig::validate() const {
  if (max_iter < 1) throw Error(ErrorKind::kBadArgument, "STAPLE max_iter must be >= 1");
  if (!(tol > 0.0)) throw Error(ErrorKind::kBadArgument, "STAPLE tol must be > 0");
  if (!(clamp > 0.0 && clamp < 0.5)) throw Error(ErrorKind::kBadArgument, "STAPLE clamp must be in (0, 0.5)");
  if (!(fixed_prior >= 0.0 && fixed_prior <= 1.0)) {
    throw Error(ErrorKind::kBadArgument, "STAPLE fixed prior must be in [0, 1]");
  }
  if (!(initial_performance > 0.0 && initial_performance < 1.0)) {
    throw Error(ErrorKind::kBadArgument, "STAPLE initial performance must be in (0, 1)");
  }
}

ProbabilityVolume average_probabilities(std::span<const ProbabilityVolume> probs) {
  if (probs.empty()) throw Error(ErrorKind::kEmptyInput, "average_probabilities needs at least one input");
  const ProbabilityVolume& first = probs.front();
  for (const auto& p : probs) {
    require_same_grid(first.geometry(), p.geometry(), "average_probabilities");
    if (p.region() != first.region()) {
      throw Error(ErrorKind::kRegionMismatch, "average_probabilities mixes " +
                                                  std::string(region_name(first.region())) + " and " +
                                                  std::string(region_name(p.region())));
    }
  }
  const std::size_t n = first.size();
  const double count = static_cast<double>(probs.size());
  std::vector<double> out(n);
  const auto size = static_cast<std::int64_t>(n);
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < size; ++i) {
    double sum = 0.0;
    double lo = 1.0;
    double hi = 0.0;
    for (const auto& p : probs) {
      const double v = p[i];
      sum += v;
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    // Rounding in sum/count can step just outside the inputs' range.
    out[i] = std::clamp(sum / count, lo, hi);
  }
  return ProbabilityVolume(first.geometry(), first.region(), std::move(out));
}

LabelVolume majority_vote(std::span<const LabelVolume> raters) {
  if (raters.empty()) throw Error(ErrorKind::kEmptyInput, "majority_vote needs at least one rater");
  for (const auto& r : raters) require_same_grid(raters.front().geometry(), r.geometry(), "majority_vote");
  const std::size_t n = raters.front().size();
  std::vector<std::uint8_t> out(n);
  const auto size = static_cast<std::int64_t>(n);
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < size; ++i) {
    std::array<int, 5> votes{};
    for (const auto& r : raters) ++votes[r[i]];
    std::uint8_t best = 0;
    for (std::uint8_t label : kBratsLabels) {
      if (votes[label] > votes[best]) best = label;
    }
    out[i] = best;
  }
  return LabelVolume(raters.front().geometry(), std::move(out));
}

namespace {

struct EStep {
  std::vector<double> weight;
  double loglik = 0.0;
};

// Posterior foreground probability per decision pattern and the
// observed-data log-likelihood, summed in pattern order.
EStep expectation(const kernels::DecisionPatterns& patterns, std::span<const double> prior,
                  std::span<const RaterPerformance> perf) {
  const std::size_t r = patterns.raters;
  const std::size_t np = patterns.pattern_count();
  std::vector<double> log_sens(r), log_miss(r), log_spec(r), log_false(r);
  for (std::size_t j = 0; j < r; ++j) {
    log_sens[j] = std::log(perf[j].sensitivity);
    log_miss[j] = std::log1p(-perf[j].sensitivity);
    log_spec[j] = std::log(perf[j].specificity);
    log_false[j] = std::log1p(-perf[j].specificity);
  }
  EStep out;
  out.weight.resize(np);
  for (std::size_t p = 0; p < np; ++p) {
    const std::uint8_t* d = &patterns.decisions[p * r];
    double fg = 0.0;
    double bg = 0.0;
    for (std::size_t j = 0; j < r; ++j) {
      fg += d[j] ? log_sens[j] : log_miss[j];
      bg += d[j] ? log_false[j] : log_spec[j];
    }
    const double f = prior[p];
    double w;
    double l;
    if (f <= 0.0) {
      w = 0.0;
      l = bg;
    } else if (f >= 1.0) {
      w = 1.0;
      l = fg;
    } else {
      const double a = std::log(f) + fg;
      const double b = std::log1p(-f) + bg;
      const double m = std::max(a, b);
      l = m + std::log(std::exp(a - m) + std::exp(b - m));
      w = std::clamp(std::exp(a - l), 0.0, 1.0);
    }
    out.weight[p] = w;
    out.loglik += static_cast<double>(patterns.counts[p]) * l;
  }
  return out;
}

void maximization(const kernels::DecisionPatterns& patterns, std::span<const double> weight, double clamp,
                  std::vector<RaterPerformance>& perf) {
  const std::size_t r = patterns.raters;
  double fg_mass = 0.0;
  double bg_mass = 0.0;
  std::vector<double> true_pos(r, 0.0), true_neg(r, 0.0);
  for (std::size_t p = 0; p < patterns.pattern_count(); ++p) {
    const double c = static_cast<double>(patterns.counts[p]);
    const double fg = c * weight[p];
    const double bg = c * (1.0 - weight[p]);
    fg_mass += fg;
    bg_mass += bg;
    const std::uint8_t* d = &patterns.decisions[p * r];
    for (std::size_t j = 0; j < r; ++j) {
      if (d[j]) {
        true_pos[j] += fg;
      } else {
        true_neg[j] += bg;
      }
    }
  }
  for (std::size_t j = 0; j < r; ++j) {
    if (fg_mass > 0.0) perf[j].sensitivity = true_pos[j] / fg_mass;
    if (bg_mass > 0.0) perf[j].specificity = true_neg[j] / bg_mass;
    perf[j].sensitivity = std::clamp(perf[j].sensitivity, clamp, 1.0 - clamp);
    perf[j].specificity = std::clamp(perf[j].specificity, clamp, 1.0 - clamp);
  }
}

std::vector<double> pattern_priors(const kernels::DecisionPatterns& patterns, const StapleConfig& cfg,
                                   std::size_t voxels) {
  const std::size_t r = patterns.raters;
  const std::size_t np = patterns.pattern_count();
  std::vector<double> ones(np, 0.0);
  for (std::size_t p = 0; p < np; ++p) {
    for (std::size_t j = 0; j < r; ++j) ones[p] += patterns.decisions[p * r + j];
  }
  std::vector<double> prior(np);
  switch (cfg.prior) {
    case PriorMode::kGlobalMean: {
      double total = 0.0;
      for (std::size_t p = 0; p < np; ++p) total += static_cast<double>(patterns.counts[p]) * ones[p];
      std::fill(prior.begin(), prior.end(), total / (static_cast<double>(voxels) * static_cast<double>(r)));
      break;
    }
    case PriorMode::kVoxelwiseMean:
      for (std::size_t p = 0; p < np; ++p) prior[p] = ones[p] / static_cast<double>(r);
      break;
    case PriorMode::kFixed:
      std::fill(prior.begin(), prior.end(), cfg.fixed_prior);
      break;
  }
  return prior;
}

}  // namespace

StapleResult staple_binary(std::span<const RegionMask> raters, const StapleConfig& cfg) {
  cfg.validate();
  if (raters.size() < 2) throw Error(ErrorKind::kTooFewRaters, "STAPLE needs at least two raters");
  const RegionMask& first = raters.front();
  for (const auto& r : raters) {
    require_same_grid(first.geometry(), r.geometry(), "staple_binary");
    if (r.region() != first.region()) throw Error(ErrorKind::kRegionMismatch, "STAPLE raters disagree on region");
  }

  std::vector<std::span<const std::uint8_t>> decisions;
  decisions.reserve(raters.size());
  for (const auto& r : raters) decisions.push_back(r.members());
  const kernels::DecisionPatterns patterns = kernels::decision_patterns(decisions);

  if (patterns.pattern_count() == 1) {
    const auto d = std::span(patterns.decisions);
    if (std::all_of(d.begin(), d.end(), [&](std::uint8_t v) { return v == d.front(); })) {
      throw Error(ErrorKind::kDegenerateInput, "every rater marks every voxel identically");
    }
  }

  const std::size_t voxels = first.size();
  const std::vector<double> prior = pattern_priors(patterns, cfg, voxels);
  const double start = std::clamp(cfg.initial_performance, cfg.clamp, 1.0 - cfg.clamp);
  std::vector<RaterPerformance> perf(raters.size(), RaterPerformance{start, start});

  StapleResult result{ProbabilityVolume(first.geometry(), first.region(), std::vector<double>(voxels, 0.0)),
                      {}, 0, {}, RegionMask(first.geometry(), first.region())};

  EStep e = expectation(patterns, prior, perf);
  result.loglik_trace.push_back(e.loglik);
  for (int iter = 1; iter <= cfg.max_iter; ++iter) {
    maximization(patterns, e.weight, cfg.clamp, perf);
    result.iterations = iter;
    std::vector<double> previous = std::move(e.weight);
    e = expectation(patterns, prior, perf);
    result.loglik_trace.push_back(e.loglik);

    double change = 0.0;
    for (std::size_t p = 0; p < patterns.pattern_count(); ++p) {
      change += static_cast<double>(patterns.counts[p]) * std::abs(e.weight[p] - previous[p]);
    }
    if (change / static_cast<double>(voxels) < cfg.tol) break;
  }

  std::vector<double> weights(voxels);
  const auto size = static_cast<std::int64_t>(voxels);
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < size; ++i) weights[i] = e.weight[patterns.voxel_pattern[i]];

  result.weights = ProbabilityVolume(first.geometry(), first.region(), std::move(weights));
  result.performances = std::move(perf);
  result.consensus = binarize(result.weights, 0.5);
  return result;
}

LabelVolume staple_regions(std::span<const LabelVolume> methods, const StapleConfig& cfg) {
  if (methods.size() < 2) throw Error(ErrorKind::kTooFewRaters, "staple_regions needs at least two methods");
  for (const auto& m : methods) require_same_grid(methods.front().geometry(), m.geometry(), "staple_regions");

  std::vector<RegionMasks> composed;
  composed.reserve(methods.size());
  for (const auto& m : methods) composed.push_back(compose_regions(m));

  const Geometry& geometry = methods.front().geometry();
  std::vector<RegionMask> fused;
  for (Region region : kRegions) {
    std::vector<RegionMask> raters;
    raters.reserve(composed.size());
    for (const auto& c : composed) raters.push_back(c[region]);
    const bool all_empty = std::all_of(raters.begin(), raters.end(), [](const RegionMask& m) { return m.empty_mask(); });
    const bool unanimous = std::all_of(raters.begin(), raters.end(), [&](const RegionMask& m) { return m == raters.front(); });
    if (all_empty) {
      fused.emplace_back(geometry, region);
    } else if (unanimous) {
      fused.push_back(raters.front());
    } else {
      fused.push_back(staple_binary(raters, cfg).consensus);
    }
  }
  return decompose_regions(fused[0], fused[1], fused[2]);
}

LabelVolume fuse_folds(std::span<const RegionProbabilities> folds) {
  if (folds.empty()) throw Error(ErrorKind::kEmptyInput, "a method needs at least one fold");
  std::array<std::vector<ProbabilityVolume>, 3> per_region;
  for (const auto& fold : folds) {
    const std::array<const ProbabilityVolume*, 3> slots{&fold.et, &fold.tc, &fold.wt};
    for (std::size_t r = 0; r < 3; ++r) {
      if (slots[r]->region() != kRegions[r]) {
        throw Error(ErrorKind::kRegionMismatch, "fold slot " + std::string(region_name(kRegions[r])) +
                                                    " holds a " + std::string(region_name(slots[r]->region())) +
                                                    " volume");
      }
      per_region[r].push_back(*slots[r]);
    }
  }
  std::array<RegionMask, 3> masks{binarize(average_probabilities(per_region[0]), 0.5),
                                  binarize(average_probabilities(per_region[1]), 0.5),
                                  binarize(average_probabilities(per_region[2]), 0.5)};
  return decompose_regions(masks[0], masks[1], masks[2]);
}

LabelVolume ensemble_pipeline(std::span<const MethodFolds> methods, const StapleConfig& cfg,
                              const PostprocessConfig& post) {
  if (methods.size() < 2) throw Error(ErrorKind::kTooFewRaters, "the ensemble needs at least two methods");
  std::vector<LabelVolume> per_method;
  per_method.reserve(methods.size());
  for (const auto& folds : methods) per_method.push_back(fuse_folds(folds));
  return et_threshold_relabel(staple_regions(per_method, cfg), post);
}

}  // namespace gbm
