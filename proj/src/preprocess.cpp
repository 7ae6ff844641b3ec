#include "gbm/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <string>

#include "gbm/kernels.hpp"

namespace gbm {

bool BoundingBox::valid_for(const Geometry& g) const {
  for (int a = 0; a < 3; ++a) {
    if (low[a] < 0 || high[a] > g.dims[a] || low[a] >= high[a]) return false;
  }
  return true;
}

BoundingBox brain_bounding_box(std::span<const VoxelGrid> modalities) {
  if (modalities.empty()) throw Error(ErrorKind::kEmptyInput, "brain_bounding_box needs at least one modality");
  const Geometry& g = modalities.front().geometry();
  for (const auto& m : modalities) require_same_grid(g, m.geometry(), "brain_bounding_box");

  Index3 lo = g.dims;
  Index3 hi{-1, -1, -1};
#pragma omp parallel
  {
    Index3 tlo = g.dims;
    Index3 thi{-1, -1, -1};
#pragma omp for schedule(static) nowait
    for (std::int64_t k = 0; k < g.dims[2]; ++k) {
      for (std::int64_t j = 0; j < g.dims[1]; ++j) {
        for (std::int64_t i = 0; i < g.dims[0]; ++i) {
          const std::size_t idx = g.linear_index(i, j, k);
          const bool brain = std::any_of(modalities.begin(), modalities.end(),
                                         [&](const VoxelGrid& m) { return m[idx] != 0.0; });
          if (!brain) continue;
          const Index3 c{i, j, k};
          for (int a = 0; a < 3; ++a) {
            tlo[a] = std::min(tlo[a], c[a]);
            thi[a] = std::max(thi[a], c[a]);
          }
        }
      }
    }
#pragma omp critical
    for (int a = 0; a < 3; ++a) {
      lo[a] = std::min(lo[a], tlo[a]);
      hi[a] = std::max(hi[a], thi[a]);
    }
  }
  if (hi[0] < 0) throw Error(ErrorKind::kNoBrainVoxels, "every modality is identically zero");
  return {lo, {hi[0] + 1, hi[1] + 1, hi[2] + 1}};
}

namespace {

template <class T>
Volume<T> crop_fit_impl(const Volume<T>& src, const BoundingBox& box, const Index3& target) {
  const Geometry& g = src.geometry();
  if (!box.valid_for(g)) throw Error(ErrorKind::kGeometryMismatch, "bounding box does not fit the grid");
  for (int a = 0; a < 3; ++a) {
    if (target[a] < 1) throw Error(ErrorKind::kBadArgument, "target dims must be >= 1");
  }
  const Index3 extent = box.extent();
  Index3 offset{};
  for (int a = 0; a < 3; ++a) {
    offset[a] = extent[a] >= target[a] ? box.low[a] + (extent[a] - target[a]) / 2
                                       : box.low[a] - (target[a] - extent[a]) / 2;
  }

  Geometry out_geometry{target, g.spacing, g.affine};
  for (int r = 0; r < 3; ++r) {
    double shift = 0.0;
    for (int c = 0; c < 3; ++c) shift += g.affine[r][c] * static_cast<double>(offset[c]);
    out_geometry.affine[r][3] = g.affine[r][3] + shift;
  }
  Volume<T> out(out_geometry, T{});
#pragma omp parallel for schedule(static)
  for (std::int64_t k = 0; k < target[2]; ++k) {
    const std::int64_t sk = offset[2] + k;
    if (sk < box.low[2] || sk >= box.high[2]) continue;
    for (std::int64_t j = 0; j < target[1]; ++j) {
      const std::int64_t sj = offset[1] + j;
      if (sj < box.low[1] || sj >= box.high[1]) continue;
      for (std::int64_t i = 0; i < target[0]; ++i) {
        const std::int64_t si = offset[0] + i;
        if (si < box.low[0] || si >= box.high[0]) continue;
        out.at(i, j, k) = src.at(si, sj, sk);
      }
    }
  }
  return out;
}

template <class T>
Volume<T> flip_impl(const Volume<T>& src, const AxisSet& axes) {
  const Geometry& g = src.geometry();
  Volume<T> out(g, T{});
  const Index3& d = g.dims;
#pragma omp parallel for schedule(static)
  for (std::int64_t k = 0; k < d[2]; ++k) {
    const std::int64_t sk = axes[2] ? d[2] - 1 - k : k;
    for (std::int64_t j = 0; j < d[1]; ++j) {
      const std::int64_t sj = axes[1] ? d[1] - 1 - j : j;
      for (std::int64_t i = 0; i < d[0]; ++i) {
        const std::int64_t si = axes[0] ? d[0] - 1 - i : i;
        out.at(i, j, k) = src.at(si, sj, sk);
      }
    }
  }
  return out;
}

std::array<std::array<double, 3>, 3> inverse_rotation(Axis axis, double degrees) {
  const double t = degrees * std::numbers::pi / 180.0;
  const double c = std::cos(t);
  const double s = std::sin(t);
  const int a = static_cast<int>(axis);
  const int u = (a + 1) % 3;
  const int v = (a + 2) % 3;
  // Forward rotation in the (u, v) plane; the inverse is its transpose.
  std::array<std::array<double, 3>, 3> m{};
  m[a][a] = 1.0;
  m[u][u] = c;
  m[u][v] = s;
  m[v][u] = -s;
  m[v][v] = c;
  return m;
}

void check_angle(double degrees) {
  if (!(degrees >= 0.0 && degrees <= kMaxRotationDeg)) {
    throw Error(ErrorKind::kBadAngle, "rotation " + std::to_string(degrees) + " outside [0, 30] degrees");
  }
}

std::vector<double> rotate_values(std::span<const double> values, const Geometry& g, Axis axis, double degrees,
                                  kernels::Sampling sampling) {
  return kernels::resample_rotated(values, g, inverse_rotation(axis, degrees), sampling);
}

std::vector<std::uint8_t> to_bytes(const std::vector<double>& values) {
  std::vector<std::uint8_t> out(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) out[i] = static_cast<std::uint8_t>(values[i]);
  return out;
}

}  // namespace

VoxelGrid crop_and_fit(const VoxelGrid& grid, const BoundingBox& box, const Index3& target_dims) {
  return crop_fit_impl(grid, box, target_dims);
}

LabelVolume crop_and_fit(const LabelVolume& labels, const BoundingBox& box, const Index3& target_dims) {
  const Volume<std::uint8_t> src(labels.geometry(),
                                 std::vector<std::uint8_t>(labels.labels().begin(), labels.labels().end()));
  Volume<std::uint8_t> out = crop_fit_impl(src, box, target_dims);
  return LabelVolume(out.geometry(), std::vector<std::uint8_t>(out.values().begin(), out.values().end()));
}

VoxelGrid zscore_normalize(const VoxelGrid& grid) {
  const kernels::Moments m = kernels::nonzero_moments(grid.values());
  if (m.count == 0) throw Error(ErrorKind::kNoBrainVoxels, "z-score of an all-zero volume");
  const double sd = std::sqrt(m.variance);
  if (!(sd > 0.0)) throw Error(ErrorKind::kZeroVariance, "all brain voxels share one value");
  VoxelGrid out = grid;
  auto values = out.values();
  const auto n = static_cast<std::int64_t>(values.size());
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < n; ++i) {
    if (values[i] != 0.0) values[i] = (values[i] - m.mean) / sd;
  }
  return out;
}

VoxelGrid flip3d(const VoxelGrid& grid, const AxisSet& axes) { return flip_impl(grid, axes); }

LabelVolume flip3d(const LabelVolume& labels, const AxisSet& axes) {
  const Volume<std::uint8_t> src(labels.geometry(),
                                 std::vector<std::uint8_t>(labels.labels().begin(), labels.labels().end()));
  Volume<std::uint8_t> out = flip_impl(src, axes);
  return LabelVolume(out.geometry(), std::vector<std::uint8_t>(out.values().begin(), out.values().end()));
}

RegionMask flip3d(const RegionMask& mask, const AxisSet& axes) {
  const Volume<std::uint8_t> src(mask.geometry(),
                                 std::vector<std::uint8_t>(mask.members().begin(), mask.members().end()));
  Volume<std::uint8_t> out = flip_impl(src, axes);
  return RegionMask(out.geometry(), mask.region(),
                    std::vector<std::uint8_t>(out.values().begin(), out.values().end()));
}

VoxelGrid rotate3d(const VoxelGrid& grid, Axis axis, double degrees, Interpolation interpolation) {
  check_angle(degrees);
  if (degrees == 0.0) return grid;
  const auto sampling =
      interpolation == Interpolation::kNearest ? kernels::Sampling::kNearest : kernels::Sampling::kTrilinear;
  return VoxelGrid(grid.geometry(), rotate_values(grid.values(), grid.geometry(), axis, degrees, sampling));
}

LabelVolume rotate3d(const LabelVolume& labels, Axis axis, double degrees) {
  check_angle(degrees);
  if (degrees == 0.0) return labels;
  const std::vector<double> values(labels.labels().begin(), labels.labels().end());
  return LabelVolume(labels.geometry(), to_bytes(rotate_values(values, labels.geometry(), axis, degrees,
                                                               kernels::Sampling::kNearest)));
}

RegionMask rotate3d(const RegionMask& mask, Axis axis, double degrees) {
  check_angle(degrees);
  if (degrees == 0.0) return mask;
  const std::vector<double> values(mask.members().begin(), mask.members().end());
  return RegionMask(mask.geometry(), mask.region(),
                    to_bytes(rotate_values(values, mask.geometry(), axis, degrees, kernels::Sampling::kNearest)));
}

VoxelGrid gamma_transform(const VoxelGrid& grid, double gamma) {
  if (!(gamma > 0.0) || !std::isfinite(gamma)) {
    throw Error(ErrorKind::kBadArgument, "gamma must be a positive finite number");
  }
  const auto values = grid.values();
  if (values.empty()) return grid;
  const auto [min_it, max_it] = std::minmax_element(values.begin(), values.end());
  const double lo = *min_it;
  const double hi = *max_it;
  if (!(hi > lo)) return grid;
  const double range = hi - lo;
  VoxelGrid out = grid;
  auto dst = out.values();
  const auto n = static_cast<std::int64_t>(dst.size());
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < n; ++i) {
    const double v = dst[i];
    if (v == lo || v == hi) continue;
    dst[i] = std::clamp(lo + range * std::pow((v - lo) / range, gamma), lo, hi);
  }
  return out;
}

AugmentSpec sample_augmentation(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  // Uniform in [0, 1) from the top 53 bits; mt19937_64's output sequence is
  // fixed by the standard, so specs reproduce across platforms.
  auto unit = [&rng] { return static_cast<double>(rng() >> 11) * 0x1.0p-53; };
  AugmentSpec spec;
  spec.seed = seed;
  spec.rotation_axis = static_cast<Axis>(rng() % 3);
  spec.rotation_deg = kMaxRotationDeg * unit();
  const std::uint64_t bits = rng();
  for (int a = 0; a < 3; ++a) spec.flip_axes[a] = ((bits >> (63 - a)) & 1U) != 0;
  spec.gamma = kGammaLow + (kGammaHigh - kGammaLow) * unit();
  return spec;
}

VoxelGrid apply_augmentation(const VoxelGrid& grid, const AugmentSpec& spec) {
  return gamma_transform(flip3d(rotate3d(grid, spec.rotation_axis, spec.rotation_deg, Interpolation::kTrilinear),
                                spec.flip_axes),
                         spec.gamma);
}

LabelVolume apply_augmentation(const LabelVolume& labels, const AugmentSpec& spec) {
  return flip3d(rotate3d(labels, spec.rotation_axis, spec.rotation_deg), spec.flip_axes);
}

}  // namespace gbm
