#include "gbm/volume.hpp"

#include <algorithm>
#include <cmath>

namespace gbm {

Affine identity_affine() {
  Affine a{};
  for (int r = 0; r < 4; ++r) a[r][r] = 1.0;
  return a;
}

Affine diagonal_affine(const Spacing3& spacing) {
  Affine a = identity_affine();
  for (int r = 0; r < 3; ++r) a[r][r] = spacing[r];
  return a;
}

Geometry Geometry::make(const Index3& dims, const Spacing3& spacing) {
  Geometry g{dims, spacing, diagonal_affine(spacing)};
  g.validate();
  return g;
}

std::size_t Geometry::voxel_count() const {
  return static_cast<std::size_t>(dims[0]) * static_cast<std::size_t>(dims[1]) *
         static_cast<std::size_t>(dims[2]);
}

Index3 Geometry::coords(std::size_t index) const {
  const auto idx = static_cast<std::int64_t>(index);
  const std::int64_t plane = dims[0] * dims[1];
  return {idx % dims[0], (idx % plane) / dims[0], idx / plane};
}

bool Geometry::same_grid(const Geometry& other) const {
  if (dims != other.dims) return false;
  for (int a = 0; a < 3; ++a) {
    const double scale = std::max(std::abs(spacing[a]), std::abs(other.spacing[a]));
    if (std::abs(spacing[a] - other.spacing[a]) > 1e-6 * scale) return false;
  }
  return true;
}

void Geometry::validate() const {
  for (int a = 0; a < 3; ++a) {
    if (dims[a] < 1) {
      throw Error(ErrorKind::kDimensionError, "dims must be >= 1 on every axis");
    }
    if (!(spacing[a] > 0.0) || !std::isfinite(spacing[a])) {
      throw Error(ErrorKind::kDimensionError, "spacing must be positive and finite");
    }
  }
}

namespace {

std::string dims_string(const Index3& d) {
  return std::to_string(d[0]) + "x" + std::to_string(d[1]) + "x" + std::to_string(d[2]);
}

}  // namespace

void require_same_grid(const Geometry& a, const Geometry& b, std::string_view what) {
  if (!a.same_grid(b)) {
    throw Error(ErrorKind::kGeometryMismatch,
                std::string(what) + ": grid " + dims_string(a.dims) + " vs " + dims_string(b.dims));
  }
}

std::string_view region_name(Region region) {
  switch (region) {
    case Region::kET: return "ET";
    case Region::kTC: return "TC";
    case Region::kWT: return "WT";
  }
  return "?";
}

LabelVolume::LabelVolume(Geometry geometry, std::vector<std::uint8_t> labels)
    : data_(std::move(geometry), std::move(labels)) {
  for (std::uint8_t v : data_.values()) {
    if (!is_brats_label(v)) {
      throw Error(ErrorKind::kBadLabel, "label value " + std::to_string(v) + " is not in {0,1,2,4}");
    }
  }
}

LabelVolume::LabelVolume(Geometry geometry) : data_(std::move(geometry), std::uint8_t{0}) {}

LabelVolume LabelVolume::from_grid(const VoxelGrid& grid) {
  std::vector<std::uint8_t> labels(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double v = grid[i];
    const double r = std::nearbyint(v);
    if (r != v || !is_brats_label(static_cast<std::int64_t>(r))) {
      throw Error(ErrorKind::kBadLabel,
                  "voxel " + std::to_string(i) + " holds " + std::to_string(v) +
                      ", expected one of 0, 1, 2, 4");
    }
    labels[i] = static_cast<std::uint8_t>(r);
  }
  return LabelVolume(grid.geometry(), std::move(labels));
}

VoxelGrid LabelVolume::to_grid() const {
  std::vector<double> values(labels().begin(), labels().end());
  return VoxelGrid(geometry(), std::move(values));
}

RegionMask::RegionMask(Geometry geometry, Region region, std::vector<std::uint8_t> member)
    : data_(std::move(geometry), std::move(member)), region_(region) {
  for (auto& v : data_.values()) v = v != 0 ? 1 : 0;
}

RegionMask::RegionMask(Geometry geometry, Region region)
    : data_(std::move(geometry), std::uint8_t{0}), region_(region) {}

std::size_t RegionMask::count() const {
  const auto m = members();
  std::size_t n = 0;
  const auto size = static_cast<std::int64_t>(m.size());
#pragma omp parallel for reduction(+ : n) schedule(static)
  for (std::int64_t i = 0; i < size; ++i) n += m[i];
  return n;
}

ProbabilityVolume::ProbabilityVolume(Geometry geometry, Region region, std::vector<double> prob)
    : data_(std::move(geometry), std::move(prob)), region_(region) {
  for (double p : data_.values()) {
    if (!(p >= 0.0 && p <= 1.0)) {
      throw Error(ErrorKind::kBadProbability, "probability " + std::to_string(p) + " outside [0,1]");
    }
  }
}

ProbabilityVolume ProbabilityVolume::from_mask(const RegionMask& mask) {
  std::vector<double> prob(mask.members().begin(), mask.members().end());
  return ProbabilityVolume(mask.geometry(), mask.region(), std::move(prob));
}

const RegionMask& RegionMasks::operator[](Region region) const {
  switch (region) {
    case Region::kET: return et;
    case Region::kTC: return tc;
    case Region::kWT: break;
  }
  return wt;
}

RegionMasks compose_regions(const LabelVolume& labels) {
  const std::size_t n = labels.size();
  std::vector<std::uint8_t> et(n), tc(n), wt(n);
  const auto src = labels.labels();
  const auto size = static_cast<std::int64_t>(n);
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < size; ++i) {
    const std::uint8_t l = src[i];
    et[i] = l == 4;
    tc[i] = l == 1 || l == 4;
    wt[i] = l != 0;
  }
  const Geometry& g = labels.geometry();
  return {RegionMask(g, Region::kET, std::move(et)), RegionMask(g, Region::kTC, std::move(tc)),
          RegionMask(g, Region::kWT, std::move(wt))};
}

LabelVolume decompose_regions(const RegionMask& et, const RegionMask& tc, const RegionMask& wt) {
  require_same_grid(et.geometry(), tc.geometry(), "decompose_regions ET/TC");
  require_same_grid(et.geometry(), wt.geometry(), "decompose_regions ET/WT");
  const std::size_t n = et.size();
  std::vector<std::uint8_t> labels(n);
  const auto e = et.members();
  const auto t = tc.members();
  const auto w = wt.members();
  const auto size = static_cast<std::int64_t>(n);
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < size; ++i) {
    labels[i] = e[i] ? 4 : t[i] ? 1 : w[i] ? 2 : 0;
  }
  return LabelVolume(et.geometry(), std::move(labels));
}

RegionMask binarize(const ProbabilityVolume& prob, double threshold) {
  if (!(threshold >= 0.0 && threshold <= 1.0)) {
    throw Error(ErrorKind::kBadThreshold, "threshold " + std::to_string(threshold) + " outside [0,1]");
  }
  const auto p = prob.probabilities();
  std::vector<std::uint8_t> member(p.size());
  const auto size = static_cast<std::int64_t>(p.size());
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < size; ++i) member[i] = p[i] >= threshold;
  return RegionMask(prob.geometry(), prob.region(), std::move(member));
}

std::size_t count_label(const LabelVolume& labels, std::int64_t label) {
  if (!is_brats_label(label)) {
    throw Error(ErrorKind::kBadLabel, "label " + std::to_string(label) + " is not in {0,1,2,4}");
  }
  const auto src = labels.labels();
  const auto target = static_cast<std::uint8_t>(label);
  std::size_t n = 0;
  const auto size = static_cast<std::int64_t>(src.size());
#pragma omp parallel for reduction(+ : n) schedule(static)
  for (std::int64_t i = 0; i < size; ++i) n += src[i] == target;
  return n;
}

}  // namespace gbm
