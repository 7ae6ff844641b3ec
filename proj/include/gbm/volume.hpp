#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "gbm/error.hpp"

namespace gbm {

using Index3 = std::array<std::int64_t, 3>;
using Spacing3 = std::array<double, 3>;
using Affine = std::array<std::array<double, 4>, 4>;

Affine identity_affine();
Affine diagonal_affine(const Spacing3& spacing);

// Grid geometry shared by every volume type.
//
// Voxels are stored in a single linear order with the first axis varying
// fastest: index = i + dims[0] * (j + dims[1] * k). This is also the NIfTI
// on-disk order, so volumes can be read and written without reordering.
struct Geometry {
  Index3 dims{1, 1, 1};
  Spacing3 spacing{1.0, 1.0, 1.0};
  Affine affine = identity_affine();

  // dims with a diagonal affine built from spacing.
  static Geometry make(const Index3& dims, const Spacing3& spacing = {1.0, 1.0, 1.0});

  std::size_t voxel_count() const;

  std::size_t linear_index(std::int64_t i, std::int64_t j, std::int64_t k) const {
    return static_cast<std::size_t>(i + dims[0] * (j + dims[1] * k));
  }

  Index3 coords(std::size_t index) const;

  bool contains(std::int64_t i, std::int64_t j, std::int64_t k) const {
    return i >= 0 && j >= 0 && k >= 0 && i < dims[0] && j < dims[1] && k < dims[2];
  }

  // Same dims and (to 1e-6 relative) the same spacing. The affine is not
  // compared: predictions and references routinely disagree on it in the
  // last float32 bit.
  bool same_grid(const Geometry& other) const;

  // Throws kDimensionError unless dims >= 1 and spacing > 0 on every axis.
  void validate() const;

  friend bool operator==(const Geometry&, const Geometry&) = default;
};

// Throws kGeometryMismatch naming `what` if the grids differ.
void require_same_grid(const Geometry& a, const Geometry& b, std::string_view what);

// Dense scalar payload over a Geometry.
template <class T>
class Volume {
 public:
  Volume() = default;

  explicit Volume(Geometry geometry, T fill = T{}) : geometry_(std::move(geometry)) {
    geometry_.validate();
    values_.assign(geometry_.voxel_count(), fill);
  }

  Volume(Geometry geometry, std::vector<T> values)
      : geometry_(std::move(geometry)), values_(std::move(values)) {
    geometry_.validate();
    if (values_.size() != geometry_.voxel_count()) {
      throw Error(ErrorKind::kDimensionMismatch,
                  "volume holds " + std::to_string(values_.size()) + " values, dims imply " +
                      std::to_string(geometry_.voxel_count()));
    }
  }

  const Geometry& geometry() const { return geometry_; }
  std::size_t size() const { return values_.size(); }

  std::span<const T> values() const { return values_; }
  std::span<T> values() { return values_; }

  const T& operator[](std::size_t index) const { return values_[index]; }
  T& operator[](std::size_t index) { return values_[index]; }

  const T& at(std::int64_t i, std::int64_t j, std::int64_t k) const {
    return values_[geometry_.linear_index(i, j, k)];
  }
  T& at(std::int64_t i, std::int64_t j, std::int64_t k) {
    return values_[geometry_.linear_index(i, j, k)];
  }

  // Replaces the affine only; dims and spacing stay fixed.
  void set_affine(const Affine& affine) { geometry_.affine = affine; }

  friend bool operator==(const Volume&, const Volume&) = default;

 private:
  Geometry geometry_;
  std::vector<T> values_;
};

using VoxelGrid = Volume<double>;

// The three evaluated tumor sub-regions.
enum class Region : std::uint8_t { kET = 0, kTC = 1, kWT = 2 };

inline constexpr std::array<Region, 3> kRegions{Region::kET, Region::kTC, Region::kWT};

std::string_view region_name(Region region);

inline constexpr std::array<std::uint8_t, 4> kBratsLabels{0, 1, 2, 4};

constexpr bool is_brats_label(std::int64_t label) {
  return label == 0 || label == 1 || label == 2 || label == 4;
}

// Per-voxel BraTS labels: 0 background, 1 necrosis / non-enhancing core,
// 2 edema, 4 enhancing tumor. No other value can be stored.
class LabelVolume {
 public:
  LabelVolume(Geometry geometry, std::vector<std::uint8_t> labels);
  // All background.
  explicit LabelVolume(Geometry geometry);

  // Rounds each value to the nearest integer; anything that is not exactly
  // an integer in {0, 1, 2, 4} raises kBadLabel.
  static LabelVolume from_grid(const VoxelGrid& grid);
  VoxelGrid to_grid() const;

  const Geometry& geometry() const { return data_.geometry(); }
  std::size_t size() const { return data_.size(); }
  std::span<const std::uint8_t> labels() const { return data_.values(); }
  std::uint8_t operator[](std::size_t index) const { return data_[index]; }

  friend bool operator==(const LabelVolume&, const LabelVolume&) = default;

 private:
  Volume<std::uint8_t> data_;
};

// Binary membership for one region. Stored as 0/1 bytes.
class RegionMask {
 public:
  // Any nonzero byte counts as a member.
  RegionMask(Geometry geometry, Region region, std::vector<std::uint8_t> member);
  RegionMask(Geometry geometry, Region region);

  const Geometry& geometry() const { return data_.geometry(); }
  Region region() const { return region_; }
  std::size_t size() const { return data_.size(); }
  std::span<const std::uint8_t> members() const { return data_.values(); }
  bool operator[](std::size_t index) const { return data_[index] != 0; }

  std::size_t count() const;
  bool empty_mask() const { return count() == 0; }

  friend bool operator==(const RegionMask&, const RegionMask&) = default;

 private:
  Volume<std::uint8_t> data_;
  Region region_ = Region::kWT;
};

// Per-voxel probability of membership in one region, each value in [0, 1].
class ProbabilityVolume {
 public:
  ProbabilityVolume(Geometry geometry, Region region, std::vector<double> prob);

  static ProbabilityVolume from_mask(const RegionMask& mask);

  const Geometry& geometry() const { return data_.geometry(); }
  Region region() const { return region_; }
  std::size_t size() const { return data_.size(); }
  std::span<const double> probabilities() const { return data_.values(); }
  double operator[](std::size_t index) const { return data_[index]; }

  friend bool operator==(const ProbabilityVolume&, const ProbabilityVolume&) = default;

 private:
  Volume<double> data_;
  Region region_ = Region::kWT;
};

struct RegionMasks {
  RegionMask et;
  RegionMask tc;
  RegionMask wt;

  const RegionMask& operator[](Region region) const;
};

// ET = {4}, TC = {1, 4}, WT = {1, 2, 4}.
RegionMasks compose_regions(const LabelVolume& labels);

// Priority ET > TC > WT: 4 if in ET, else 1 if in TC, else 2 if in WT,
// else 0. Inconsistent (non-nested) masks are resolved by the same order.
LabelVolume decompose_regions(const RegionMask& et, const RegionMask& tc, const RegionMask& wt);

// member = prob >= threshold. Throws kBadThreshold outside [0, 1].
RegionMask binarize(const ProbabilityVolume& prob, double threshold);

// Throws kBadLabel unless label is one of 0, 1, 2, 4.
std::size_t count_label(const LabelVolume& labels, std::int64_t label);

}  // namespace gbm
