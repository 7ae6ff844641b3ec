#include "gbm/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "gbm/kernels.hpp"

namespace gbm {

namespace {

struct OverlapCounts {
  std::size_t a = 0;
  std::size_t b = 0;
  std::size_t both = 0;
};

OverlapCounts overlap(const RegionMask& a, const RegionMask& b) {
  const auto ma = a.members();
  const auto mb = b.members();
  std::size_t na = 0, nb = 0, both = 0;
  const auto size = static_cast<std::int64_t>(ma.size());
#pragma omp parallel for reduction(+ : na, nb, both) schedule(static)
  for (std::int64_t i = 0; i < size; ++i) {
    na += ma[i];
    nb += mb[i];
    both += ma[i] & mb[i];
  }
  return {na, nb, both};
}

}  // namespace

double dice(const RegionMask& a, const RegionMask& b, const EmptyMaskPolicy& policy) {
  require_same_grid(a.geometry(), b.geometry(), "dice");
  const OverlapCounts c = overlap(a, b);
  if (c.a == 0 && c.b == 0) return policy.both_empty_dsc;
  if (c.a == 0 || c.b == 0) return 0.0;
  return 100.0 * 2.0 * static_cast<double>(c.both) / static_cast<double>(c.a + c.b);
}

std::vector<Index3> surface_voxels(const RegionMask& m) {
  const Geometry& g = m.geometry();
  const std::vector<std::uint8_t> surface = kernels::surface_mask(m.members(), g.dims);
  std::vector<Index3> out;
  for (std::size_t i = 0; i < surface.size(); ++i) {
    if (surface[i]) out.push_back(g.coords(i));
  }
  return out;
}

double quantile_sorted(std::span<const double> sorted, double q) {
  if (sorted.empty()) throw Error(ErrorKind::kEmptyInput, "quantile of an empty sample");
  if (!(q >= 0.0 && q <= 1.0)) throw Error(ErrorKind::kBadArgument, "quantile level outside [0,1]");
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  if (frac == 0.0) return sorted[lo];
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

double hd95(const RegionMask& a, const RegionMask& b, const EmptyMaskPolicy& policy) {
  require_same_grid(a.geometry(), b.geometry(), "hd95");
  const Geometry& g = a.geometry();
  const std::vector<Index3> sa = surface_voxels(a);
  const std::vector<Index3> sb = surface_voxels(b);
  if (sa.empty() && sb.empty()) return policy.both_empty_hd95;
  if (sa.empty() || sb.empty()) return policy.one_empty_hd95_penalty;

  std::vector<double> pooled = kernels::nearest_distances(sa, sb, g.dims, g.spacing);
  const std::vector<double> back = kernels::nearest_distances(sb, sa, g.dims, g.spacing);
  pooled.insert(pooled.end(), back.begin(), back.end());
  std::sort(pooled.begin(), pooled.end());
  return quantile_sorted(pooled, 0.95);
}

double soft_dice_ce(const ProbabilityVolume& p, const RegionMask& y, const LossConfig& cfg) {
  require_same_grid(p.geometry(), y.geometry(), "soft_dice_ce");
  if (!(cfg.epsilon > 0.0)) throw Error(ErrorKind::kBadArgument, "loss epsilon must be > 0");
  struct Sums {
    double yp = 0.0, y = 0.0, p = 0.0, ce = 0.0;
    Sums& operator+=(const Sums& o) {
      yp += o.yp;
      y += o.y;
      p += o.p;
      ce += o.ce;
      return *this;
    }
  };
  const auto prob = p.probabilities();
  const auto truth = y.members();
  const Sums s = kernels::blocked_reduce<Sums>(prob.size(), [&](std::size_t b, std::size_t e) {
    Sums acc;
    for (std::size_t i = b; i < e; ++i) {
      const double yi = truth[i];
      acc.yp += yi * prob[i];
      acc.y += yi;
      acc.p += prob[i];
      if (truth[i]) acc.ce -= std::log(std::clamp(prob[i], kLogClamp, 1.0 - kLogClamp));
    }
    return acc;
  });
  const double soft_dice = (2.0 * s.yp + cfg.epsilon) / (s.y + s.p + cfg.epsilon);
  return cfg.form == LossForm::kLiteral ? soft_dice + s.ce : (1.0 - soft_dice) + s.ce;
}

CaseMetrics evaluate_case(const LabelVolume& pred, const LabelVolume& gt, const EmptyMaskPolicy& policy,
                          std::string case_id) {
  require_same_grid(pred.geometry(), gt.geometry(), "evaluate_case " + case_id);
  const RegionMasks p = compose_regions(pred);
  const RegionMasks t = compose_regions(gt);
  CaseMetrics m;
  m.case_id = std::move(case_id);
  for (Region r : kRegions) {
    const auto k = static_cast<std::size_t>(r);
    m.dsc[k] = dice(p[r], t[r], policy);
    m.hd95[k] = hd95(p[r], t[r], policy);
  }
  return m;
}

}  // namespace gbm
