#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>

#include "gbm/volume.hpp"

namespace gbm {

// Supported NIfTI-1 datatype codes.
enum class NiftiDatatype : std::int16_t {
  kUint8 = 2,
  kInt16 = 4,
  kInt32 = 8,
  kFloat32 = 16,
  kFloat64 = 64,
};

bool is_supported_datatype(std::int16_t code);

struct NiftiHeader {
  Index3 dims{1, 1, 1};
  NiftiDatatype datatype = NiftiDatatype::kFloat32;
  Spacing3 spacing{1.0, 1.0, 1.0};
  // Voxel index to world mm, resolved from sform, qform or spacing (in that
  // order of preference).
  Affine affine = identity_affine();
  double scale_slope = 1.0;
  double scale_intercept = 0.0;
  std::string magic = "n+1";
  std::int16_t qform_code = 0;
  std::int16_t sform_code = 1;
  std::string description;
  // Set when the source file was in the opposite byte order to the host.
  bool byte_swapped = false;

  // A float32/float64/uint8 header for a volume with the given geometry.
  static NiftiHeader for_geometry(const Geometry& geometry, NiftiDatatype datatype);

  Geometry geometry() const;
};

struct NiftiVolume {
  NiftiHeader header;
  VoxelGrid grid;
};

// Parses the 348-byte header. The byte order is detected from sizeof_hdr.
// Throws kNotNifti or kUnsupportedDatatype.
NiftiHeader validate_header(std::span<const std::byte> raw);

// Reads a single-file NIfTI-1 volume, transparently gunzipping when the
// file starts with the gzip magic bytes. Values have scl_slope/scl_inter
// applied when the slope is nonzero.
NiftiVolume read_volume(const std::filesystem::path& path);

// Writes header + grid as a single-file NIfTI-1 (magic "n+1", vox_offset
// 352, host byte order). A ".gz" suffix selects gzip output. Integer
// datatypes round to nearest and saturate.
void write_volume(const std::filesystem::path& path, const NiftiHeader& header, const VoxelGrid& grid);

// Convenience wrappers for label volumes (stored as uint8).
LabelVolume read_labels(const std::filesystem::path& path);
void write_labels(const std::filesystem::path& path, const LabelVolume& labels);

// Strips ".nii" / ".nii.gz" from a filename.
std::string nifti_stem(const std::filesystem::path& path);
bool has_nifti_extension(const std::filesystem::path& path);

}  // namespace gbm
