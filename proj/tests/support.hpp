#pragma once

// Shared generators and brute-force oracles for the test binaries. The
// oracles deliberately avoid every library helper beyond the Volume types:
// dice counts voxels, surfaces are found by neighbour lookup, distances by
// all pairs, and the percentile is recomputed from its definition.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "gbm/fusion.hpp"
#include "gbm/volume.hpp"

namespace gbm::test {

using Rng = std::mt19937_64;

inline double uniform(Rng& rng, double lo = 0.0, double hi = 1.0) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline std::int64_t uniform_int(Rng& rng, std::int64_t lo, std::int64_t hi) {
  return std::uniform_int_distribution<std::int64_t>(lo, hi)(rng);
}

inline Index3 random_dims(Rng& rng, std::int64_t lo, std::int64_t hi) {
  return {uniform_int(rng, lo, hi), uniform_int(rng, lo, hi), uniform_int(rng, lo, hi)};
}

inline Spacing3 random_spacing(Rng& rng) {
  return {uniform(rng, 0.5, 2.0), uniform(rng, 0.5, 2.0), uniform(rng, 0.5, 2.0)};
}

// Blobby mask: union of a few random boxes, then speckle.
inline RegionMask random_mask(Rng& rng, const Geometry& g, Region region = Region::kWT, double speckle = 0.05) {
  std::vector<std::uint8_t> m(g.voxel_count(), 0);
  const auto boxes = uniform_int(rng, 0, 3);
  for (std::int64_t b = 0; b < boxes; ++b) {
    Index3 lo{}, hi{};
    for (int a = 0; a < 3; ++a) {
      lo[a] = uniform_int(rng, 0, g.dims[a] - 1);
      hi[a] = uniform_int(rng, lo[a], g.dims[a] - 1);
    }
    for (auto k = lo[2]; k <= hi[2]; ++k)
      for (auto j = lo[1]; j <= hi[1]; ++j)
        for (auto i = lo[0]; i <= hi[0]; ++i) m[g.linear_index(i, j, k)] = 1;
  }
  for (auto& v : m) {
    if (uniform(rng) < speckle) v ^= 1;
  }
  return RegionMask(g, region, std::move(m));
}

inline LabelVolume random_labels(Rng& rng, const Geometry& g) {
  std::vector<std::uint8_t> labels(g.voxel_count());
  for (auto& l : labels) l = kBratsLabels[static_cast<std::size_t>(uniform_int(rng, 0, 3))];
  return LabelVolume(g, std::move(labels));
}

// Nested balls about the grid center: WT radius r_wt, TC radius r_tc, and
// ET a shell of TC from r_et_inner outwards.
inline LabelVolume ball_phantom(const Index3& dims, double r_wt, double r_tc, double r_et_inner) {
  const Geometry g = Geometry::make(dims);
  std::vector<std::uint8_t> labels(g.voxel_count(), 0);
  for (std::size_t idx = 0; idx < labels.size(); ++idx) {
    const Index3 c = g.coords(idx);
    double r2 = 0.0;
    for (int a = 0; a < 3; ++a) {
      const double d = static_cast<double>(c[a]) - (static_cast<double>(dims[a]) - 1.0) / 2.0;
      r2 += d * d;
    }
    const double r = std::sqrt(r2);
    if (r <= r_tc) {
      labels[idx] = r >= r_et_inner ? 4 : 1;
    } else if (r <= r_wt) {
      labels[idx] = 2;
    }
  }
  return LabelVolume(g, std::move(labels));
}

inline RegionMask ball_mask(const Index3& dims, double radius, Region region = Region::kWT) {
  const LabelVolume v = ball_phantom(dims, radius, -1.0, 0.0);
  std::vector<std::uint8_t> m(v.size());
  for (std::size_t i = 0; i < m.size(); ++i) m[i] = v[i] != 0;
  return RegionMask(v.geometry(), region, std::move(m));
}

// Rater seeing truth through flips: positives drop with 1 - sens, negatives
// appear with 1 - spec.
inline RegionMask noisy_rater(Rng& rng, const RegionMask& truth, double sens, double spec) {
  std::vector<std::uint8_t> m(truth.size());
  for (std::size_t i = 0; i < m.size(); ++i) {
    const double u = uniform(rng);
    m[i] = truth[i] ? (u < sens) : (u >= spec);
  }
  return RegionMask(truth.geometry(), truth.region(), std::move(m));
}

// One fold's probability map for a region: truth pushed to 0.7 / 0.3 plus
// gaussian noise, clamped to [0, 1].
inline ProbabilityVolume noisy_probability(Rng& rng, const RegionMask& truth, double sigma) {
  std::normal_distribution<double> noise(0.0, sigma);
  std::vector<double> p(truth.size());
  for (std::size_t i = 0; i < p.size(); ++i) {
    p[i] = std::clamp((truth[i] ? 0.7 : 0.3) + noise(rng), 0.0, 1.0);
  }
  return ProbabilityVolume(truth.geometry(), truth.region(), std::move(p));
}

inline RegionProbabilities noisy_fold(Rng& rng, const LabelVolume& truth, double sigma) {
  const RegionMasks m = compose_regions(truth);
  return {noisy_probability(rng, m.et, sigma), noisy_probability(rng, m.tc, sigma), noisy_probability(rng, m.wt, sigma)};
}

// Three methods x five folds of independently noised probabilities around
// one truth.
inline std::vector<MethodFolds> ensemble_phantom(Rng& rng, const LabelVolume& truth, double sigma = 0.22) {
  std::vector<MethodFolds> methods(3);
  for (auto& folds : methods) {
    for (int f = 0; f < 5; ++f) folds.push_back(noisy_fold(rng, truth, sigma));
  }
  return methods;
}

namespace oracle {

inline double dice(const RegionMask& a, const RegionMask& b) {
  std::size_t na = 0, nb = 0, both = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    na += a[i];
    nb += b[i];
    both += a[i] && b[i];
  }
  if (na + nb == 0) return 100.0;
  return 100.0 * 2.0 * static_cast<double>(both) / static_cast<double>(na + nb);
}

inline std::vector<Index3> surface(const RegionMask& m) {
  const Index3 d = m.geometry().dims;
  auto inside = [&](std::int64_t i, std::int64_t j, std::int64_t k) {
    return i >= 0 && j >= 0 && k >= 0 && i < d[0] && j < d[1] && k < d[2] && m[i + d[0] * (j + d[1] * k)];
  };
  std::vector<Index3> out;
  for (std::int64_t k = 0; k < d[2]; ++k)
    for (std::int64_t j = 0; j < d[1]; ++j)
      for (std::int64_t i = 0; i < d[0]; ++i) {
        if (!inside(i, j, k)) continue;
        if (!inside(i - 1, j, k) || !inside(i + 1, j, k) || !inside(i, j - 1, k) || !inside(i, j + 1, k) ||
            !inside(i, j, k - 1) || !inside(i, j, k + 1)) {
          out.push_back({i, j, k});
        }
      }
  return out;
}

inline double percentile(std::vector<double> v, double q) {
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = static_cast<std::size_t>(std::ceil(pos));
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

inline double hd95(const RegionMask& a, const RegionMask& b, double penalty = 373.1287) {
  const auto sa = surface(a);
  const auto sb = surface(b);
  if (sa.empty() && sb.empty()) return 0.0;
  if (sa.empty() || sb.empty()) return penalty;
  const Spacing3 sp = a.geometry().spacing;
  auto nearest = [&](const std::vector<Index3>& from, const std::vector<Index3>& to, std::vector<double>& out) {
    for (const auto& p : from) {
      double best = std::numeric_limits<double>::infinity();
      for (const auto& q : to) {
        const double dx = (p[0] - q[0]) * sp[0], dy = (p[1] - q[1]) * sp[1], dz = (p[2] - q[2]) * sp[2];
        best = std::min(best, std::sqrt(dx * dx + dy * dy + dz * dz));
      }
      out.push_back(best);
    }
  };
  std::vector<double> all;
  nearest(sa, sb, all);
  nearest(sb, sa, all);
  return percentile(std::move(all), 0.95);
}

}  // namespace oracle

// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("gbmseg_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace gbm::test
