#include "gbm/nifti_io.hpp"

#include <zlib.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <vector>

namespace gbm {

static_assert(std::endian::native == std::endian::little, "host byte order assumed little-endian");

namespace {

constexpr std::int32_t kHeaderSize = 348;
constexpr std::int64_t kDataOffset = 352;

// Field offsets within the NIfTI-1 header.
constexpr std::size_t kOffDim = 40;
constexpr std::size_t kOffDatatype = 70;
constexpr std::size_t kOffBitpix = 72;
constexpr std::size_t kOffPixdim = 76;
constexpr std::size_t kOffVoxOffset = 108;
constexpr std::size_t kOffSclSlope = 112;
constexpr std::size_t kOffSclInter = 116;
constexpr std::size_t kOffXyztUnits = 123;
constexpr std::size_t kOffDescrip = 148;
constexpr std::size_t kOffQformCode = 252;
constexpr std::size_t kOffSformCode = 254;
constexpr std::size_t kOffQuatern = 256;
constexpr std::size_t kOffQoffset = 268;
constexpr std::size_t kOffSrow = 280;
constexpr std::size_t kOffMagic = 344;

template <class T>
T load(std::span<const std::byte> raw, std::size_t offset, bool swap) {
  std::array<std::byte, sizeof(T)> bytes;
  std::memcpy(bytes.data(), raw.data() + offset, sizeof(T));
  if (swap) std::reverse(bytes.begin(), bytes.end());
  T value;
  std::memcpy(&value, bytes.data(), sizeof(T));
  return value;
}

template <class T>
void store(std::vector<std::byte>& out, std::size_t offset, T value) {
  std::memcpy(out.data() + offset, &value, sizeof(T));
}

int bytes_per_voxel(NiftiDatatype type) {
  switch (type) {
    case NiftiDatatype::kUint8: return 1;
    case NiftiDatatype::kInt16: return 2;
    case NiftiDatatype::kInt32: return 4;
    case NiftiDatatype::kFloat32: return 4;
    case NiftiDatatype::kFloat64: return 8;
  }
  return 0;
}

double det3(const Affine& a) {
  return a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1]) -
         a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0]) +
         a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0]);
}

Affine quatern_to_affine(double b, double c, double d, const Spacing3& spacing, double qfac,
                         double qx, double qy, double qz) {
  double a = 1.0 - (b * b + c * c + d * d);
  if (a < 1e-7) {
    a = 1.0 / std::sqrt(b * b + c * c + d * d);
    b *= a;
    c *= a;
    d *= a;
    a = 0.0;
  } else {
    a = std::sqrt(a);
  }
  const double xd = spacing[0];
  const double yd = spacing[1];
  const double zd = spacing[2] * qfac;

  Affine m = identity_affine();
  m[0][0] = (a * a + b * b - c * c - d * d) * xd;
  m[0][1] = 2.0 * (b * c - a * d) * yd;
  m[0][2] = 2.0 * (b * d + a * c) * zd;
  m[1][0] = 2.0 * (b * c + a * d) * xd;
  m[1][1] = (a * a + c * c - b * b - d * d) * yd;
  m[1][2] = 2.0 * (c * d - a * b) * zd;
  m[2][0] = 2.0 * (b * d - a * c) * xd;
  m[2][1] = 2.0 * (c * d + a * b) * yd;
  m[2][2] = (a * a + d * d - c * c - b * b) * zd;
  m[0][3] = qx;
  m[1][3] = qy;
  m[2][3] = qz;
  return m;
}

std::vector<std::byte> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kIoFailure, "cannot open " + path.string());
  std::vector<std::byte> bytes;
  in.seekg(0, std::ios::end);
  const auto size = static_cast<std::size_t>(in.tellg());
  in.seekg(0, std::ios::beg);
  bytes.resize(size);
  in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(size));
  if (!in) throw Error(ErrorKind::kIoFailure, "cannot read " + path.string());
  return bytes;
}

bool is_gzip(std::span<const std::byte> bytes) {
  return bytes.size() >= 2 && bytes[0] == std::byte{0x1F} && bytes[1] == std::byte{0x8B};
}

std::vector<std::byte> gunzip(std::span<const std::byte> compressed, const std::filesystem::path& path) {
  z_stream zs{};
  if (inflateInit2(&zs, 16 + MAX_WBITS) != Z_OK) {
    throw Error(ErrorKind::kIoFailure, "zlib init failed for " + path.string());
  }
  std::vector<std::byte> out;
  std::vector<std::byte> chunk(1 << 18);
  zs.next_in = reinterpret_cast<Bytef*>(const_cast<std::byte*>(compressed.data()));
  zs.avail_in = static_cast<uInt>(compressed.size());
  int rc = Z_OK;
  while (rc != Z_STREAM_END) {
    zs.next_out = reinterpret_cast<Bytef*>(chunk.data());
    zs.avail_out = static_cast<uInt>(chunk.size());
    rc = inflate(&zs, Z_NO_FLUSH);
    if (rc != Z_OK && rc != Z_STREAM_END) {
      inflateEnd(&zs);
      // A cut-off stream yields whatever was decoded; the header/data size
      // checks downstream report it as truncation.
      if (rc == Z_BUF_ERROR) break;
      throw Error(ErrorKind::kIoFailure, "corrupt gzip stream in " + path.string());
    }
    out.insert(out.end(), chunk.begin(), chunk.begin() + (chunk.size() - zs.avail_out));
  }
  if (rc == Z_STREAM_END) inflateEnd(&zs);
  return out;
}

std::vector<std::byte> gzip(std::span<const std::byte> plain, const std::filesystem::path& path) {
  z_stream zs{};
  if (deflateInit2(&zs, 6, Z_DEFLATED, 16 + MAX_WBITS, 8, Z_DEFAULT_STRATEGY) != Z_OK) {
    throw Error(ErrorKind::kIoFailure, "zlib init failed for " + path.string());
  }
  std::vector<std::byte> out(deflateBound(&zs, static_cast<uLong>(plain.size())));
  zs.next_in = reinterpret_cast<Bytef*>(const_cast<std::byte*>(plain.data()));
  zs.avail_in = static_cast<uInt>(plain.size());
  zs.next_out = reinterpret_cast<Bytef*>(out.data());
  zs.avail_out = static_cast<uInt>(out.size());
  const int rc = deflate(&zs, Z_FINISH);
  deflateEnd(&zs);
  if (rc != Z_STREAM_END) throw Error(ErrorKind::kIoFailure, "gzip compression failed for " + path.string());
  out.resize(zs.total_out);
  return out;
}

bool ends_with(const std::string& s, std::string_view suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

struct ParsedHeader {
  NiftiHeader header;
  std::int64_t data_offset = kDataOffset;
};

ParsedHeader parse_header(std::span<const std::byte> raw) {
  if (raw.size() < static_cast<std::size_t>(kHeaderSize)) {
    throw Error(ErrorKind::kNotNifti, "fewer than 348 header bytes");
  }
  bool swap = false;
  if (load<std::int32_t>(raw, 0, false) != kHeaderSize) {
    if (load<std::int32_t>(raw, 0, true) != kHeaderSize) {
      throw Error(ErrorKind::kNotNifti, "sizeof_hdr is not 348 in either byte order");
    }
    swap = true;
  }
  const char* magic = reinterpret_cast<const char*>(raw.data() + kOffMagic);
  if (std::memcmp(magic, "n+1\0", 4) != 0) {
    if (std::memcmp(magic, "ni1\0", 4) == 0) {
      throw Error(ErrorKind::kNotNifti, "two-file (.hdr/.img) NIfTI is not supported");
    }
    throw Error(ErrorKind::kNotNifti, "magic is not \"n+1\"");
  }

  ParsedHeader parsed;
  NiftiHeader& h = parsed.header;
  h.byte_swapped = swap;
  h.magic = "n+1";

  const auto datatype = load<std::int16_t>(raw, kOffDatatype, swap);
  if (!is_supported_datatype(datatype)) {
    throw Error(ErrorKind::kUnsupportedDatatype, "datatype code " + std::to_string(datatype));
  }
  h.datatype = static_cast<NiftiDatatype>(datatype);

  std::array<std::int16_t, 8> dim{};
  for (int i = 0; i < 8; ++i) dim[i] = load<std::int16_t>(raw, kOffDim + 2 * i, swap);
  if (dim[0] < 1 || dim[0] > 7) {
    throw Error(ErrorKind::kDimensionError, "dim[0] = " + std::to_string(dim[0]));
  }
  for (int a = 1; a <= dim[0]; ++a) {
    if (dim[a] < 1) throw Error(ErrorKind::kDimensionError, "non-positive dim[" + std::to_string(a) + "]");
    if (a > 3 && dim[a] != 1) {
      throw Error(ErrorKind::kDimensionError, "more than 3 non-unit dimensions");
    }
  }
  for (int a = 0; a < 3; ++a) h.dims[a] = a + 1 <= dim[0] ? dim[a + 1] : 1;

  std::array<float, 8> pixdim{};
  for (int i = 0; i < 8; ++i) pixdim[i] = load<float>(raw, kOffPixdim + 4 * i, swap);
  for (int a = 0; a < 3; ++a) {
    const double s = std::abs(static_cast<double>(pixdim[a + 1]));
    h.spacing[a] = s > 0.0 && std::isfinite(s) ? s : 1.0;
  }

  const float vox_offset = load<float>(raw, kOffVoxOffset, swap);
  parsed.data_offset = std::max<std::int64_t>(kDataOffset, static_cast<std::int64_t>(vox_offset));

  const float slope = load<float>(raw, kOffSclSlope, swap);
  const float inter = load<float>(raw, kOffSclInter, swap);
  h.scale_slope = std::isfinite(slope) ? slope : 0.0;
  h.scale_intercept = std::isfinite(inter) ? inter : 0.0;

  char descrip[81] = {};
  std::memcpy(descrip, raw.data() + kOffDescrip, 80);
  h.description = descrip;

  h.qform_code = load<std::int16_t>(raw, kOffQformCode, swap);
  h.sform_code = load<std::int16_t>(raw, kOffSformCode, swap);

  Affine affine = diagonal_affine(h.spacing);
  if (h.sform_code > 0) {
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 4; ++c) {
        affine[r][c] = load<float>(raw, kOffSrow + 16 * r + 4 * c, swap);
      }
    }
  } else if (h.qform_code > 0) {
    const double qfac = pixdim[0] < 0.0f ? -1.0 : 1.0;
    affine = quatern_to_affine(load<float>(raw, kOffQuatern, swap), load<float>(raw, kOffQuatern + 4, swap),
                               load<float>(raw, kOffQuatern + 8, swap), h.spacing, qfac,
                               load<float>(raw, kOffQoffset, swap), load<float>(raw, kOffQoffset + 4, swap),
                               load<float>(raw, kOffQoffset + 8, swap));
  }
  if (!(std::abs(det3(affine)) > 0.0) || !std::isfinite(det3(affine))) {
    affine = diagonal_affine(h.spacing);
  }
  h.affine = affine;
  return parsed;
}

template <class T>
void decode(std::span<const std::byte> data, bool swap, std::vector<double>& out) {
  const auto n = static_cast<std::int64_t>(out.size());
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < n; ++i) {
    out[i] = static_cast<double>(load<T>(data, static_cast<std::size_t>(i) * sizeof(T), swap));
  }
}

template <class T>
T to_integer(double v) {
  if (std::isnan(v)) return 0;
  const double r = std::nearbyint(v);
  if (r <= static_cast<double>(std::numeric_limits<T>::min())) return std::numeric_limits<T>::min();
  if (r >= static_cast<double>(std::numeric_limits<T>::max())) return std::numeric_limits<T>::max();
  return static_cast<T>(r);
}

template <class T>
void encode(std::span<const double> values, std::vector<std::byte>& out, std::size_t offset,
            double slope, double inter) {
  const bool identity = slope == 0.0 || (slope == 1.0 && inter == 0.0);
  const auto n = static_cast<std::int64_t>(values.size());
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < n; ++i) {
    const double v = identity ? values[i] : (values[i] - inter) / slope;
    T stored;
    if constexpr (std::is_floating_point_v<T>) {
      stored = static_cast<T>(v);
    } else {
      stored = to_integer<T>(v);
    }
    std::memcpy(out.data() + offset + static_cast<std::size_t>(i) * sizeof(T), &stored, sizeof(T));
  }
}

}  // namespace

bool is_supported_datatype(std::int16_t code) {
  return code == 2 || code == 4 || code == 8 || code == 16 || code == 64;
}

NiftiHeader NiftiHeader::for_geometry(const Geometry& geometry, NiftiDatatype datatype) {
  NiftiHeader h;
  h.dims = geometry.dims;
  h.spacing = geometry.spacing;
  h.affine = geometry.affine;
  h.datatype = datatype;
  return h;
}

Geometry NiftiHeader::geometry() const {
  Geometry g{dims, spacing, affine};
  g.validate();
  return g;
}

NiftiHeader validate_header(std::span<const std::byte> raw) { return parse_header(raw).header; }

NiftiVolume read_volume(const std::filesystem::path& path) {
  std::vector<std::byte> bytes = read_file(path);
  if (is_gzip(bytes)) bytes = gunzip(bytes, path);

  ParsedHeader parsed = parse_header(bytes);
  const NiftiHeader& h = parsed.header;
  const Geometry geometry = h.geometry();
  const std::size_t n = geometry.voxel_count();
  const std::size_t needed = n * static_cast<std::size_t>(bytes_per_voxel(h.datatype));
  const auto offset = static_cast<std::size_t>(parsed.data_offset);
  if (bytes.size() < offset || bytes.size() - offset < needed) {
    throw Error(ErrorKind::kTruncatedFile, path.string() + ": data section holds " +
                                               std::to_string(bytes.size() > offset ? bytes.size() - offset : 0) +
                                               " bytes, dims imply " + std::to_string(needed));
  }
  const std::span<const std::byte> data(bytes.data() + offset, needed);
  std::vector<double> values(n);
  switch (h.datatype) {
    case NiftiDatatype::kUint8: decode<std::uint8_t>(data, h.byte_swapped, values); break;
    case NiftiDatatype::kInt16: decode<std::int16_t>(data, h.byte_swapped, values); break;
    case NiftiDatatype::kInt32: decode<std::int32_t>(data, h.byte_swapped, values); break;
    case NiftiDatatype::kFloat32: decode<float>(data, h.byte_swapped, values); break;
    case NiftiDatatype::kFloat64: decode<double>(data, h.byte_swapped, values); break;
  }
  // slope 0 means "no scaling"; identity scaling is skipped so -0.0 and NaN
  // payloads survive bit-exactly.
  if (h.scale_slope != 0.0 && !(h.scale_slope == 1.0 && h.scale_intercept == 0.0)) {
    for (double& v : values) v = v * h.scale_slope + h.scale_intercept;
  }
  return {h, VoxelGrid(geometry, std::move(values))};
}

void write_volume(const std::filesystem::path& path, const NiftiHeader& header, const VoxelGrid& grid) {
  if (header.dims != grid.geometry().dims) {
    throw Error(ErrorKind::kDimensionMismatch, "header dims do not match grid dims for " + path.string());
  }
  for (int a = 0; a < 3; ++a) {
    if (header.dims[a] > std::numeric_limits<std::int16_t>::max()) {
      throw Error(ErrorKind::kDimensionMismatch, "dimension exceeds the NIfTI-1 int16 limit");
    }
  }
  const int bpv = bytes_per_voxel(header.datatype);
  std::vector<std::byte> out(static_cast<std::size_t>(kDataOffset) + grid.size() * static_cast<std::size_t>(bpv));

  store<std::int32_t>(out, 0, kHeaderSize);
  store<std::int16_t>(out, kOffDim, 3);
  for (int a = 0; a < 3; ++a) store<std::int16_t>(out, kOffDim + 2 * (a + 1), static_cast<std::int16_t>(header.dims[a]));
  for (int a = 4; a < 8; ++a) store<std::int16_t>(out, kOffDim + 2 * a, 1);
  store<std::int16_t>(out, kOffDatatype, static_cast<std::int16_t>(header.datatype));
  store<std::int16_t>(out, kOffBitpix, static_cast<std::int16_t>(8 * bpv));
  store<float>(out, kOffPixdim, 1.0f);
  for (int a = 0; a < 3; ++a) store<float>(out, kOffPixdim + 4 * (a + 1), static_cast<float>(header.spacing[a]));
  store<float>(out, kOffVoxOffset, static_cast<float>(kDataOffset));
  store<float>(out, kOffSclSlope, static_cast<float>(header.scale_slope));
  store<float>(out, kOffSclInter, static_cast<float>(header.scale_intercept));
  out[kOffXyztUnits] = std::byte{2};  // mm
  const std::size_t descrip_len = std::min<std::size_t>(header.description.size(), 79);
  std::memcpy(out.data() + kOffDescrip, header.description.data(), descrip_len);
  // Geometry always goes through the sform; no quaternion is written.
  store<std::int16_t>(out, kOffQformCode, 0);
  store<std::int16_t>(out, kOffSformCode, header.sform_code > 0 ? header.sform_code : std::int16_t{1});
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 4; ++c) store<float>(out, kOffSrow + 16 * r + 4 * c, static_cast<float>(header.affine[r][c]));
  }
  std::memcpy(out.data() + kOffMagic, "n+1\0", 4);

  const auto values = grid.values();
  const auto offset = static_cast<std::size_t>(kDataOffset);
  switch (header.datatype) {
    case NiftiDatatype::kUint8: encode<std::uint8_t>(values, out, offset, header.scale_slope, header.scale_intercept); break;
    case NiftiDatatype::kInt16: encode<std::int16_t>(values, out, offset, header.scale_slope, header.scale_intercept); break;
    case NiftiDatatype::kInt32: encode<std::int32_t>(values, out, offset, header.scale_slope, header.scale_intercept); break;
    case NiftiDatatype::kFloat32: encode<float>(values, out, offset, header.scale_slope, header.scale_intercept); break;
    case NiftiDatatype::kFloat64: encode<double>(values, out, offset, header.scale_slope, header.scale_intercept); break;
  }

  if (ends_with(path.string(), ".gz")) out = gzip(out, path);

  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  if (!file) throw Error(ErrorKind::kIoFailure, "cannot open " + path.string() + " for writing");
  file.write(reinterpret_cast<const char*>(out.data()), static_cast<std::streamsize>(out.size()));
  if (!file) throw Error(ErrorKind::kIoFailure, "write failed for " + path.string());
}

LabelVolume read_labels(const std::filesystem::path& path) {
  return LabelVolume::from_grid(read_volume(path).grid);
}

void write_labels(const std::filesystem::path& path, const LabelVolume& labels) {
  write_volume(path, NiftiHeader::for_geometry(labels.geometry(), NiftiDatatype::kUint8), labels.to_grid());
}

std::string nifti_stem(const std::filesystem::path& path) {
  std::string name = path.filename().string();
  for (std::string_view ext : {".nii.gz", ".nii"}) {
    if (ends_with(name, ext)) return name.substr(0, name.size() - ext.size());
  }
  return name;
}

bool has_nifti_extension(const std::filesystem::path& path) {
  const std::string name = path.filename().string();
  return ends_with(name, ".nii") || ends_with(name, ".nii.gz");
}

}  // namespace gbm
