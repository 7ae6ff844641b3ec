#include <algorithm>
#include <cstring>
#include <fstream>
#include <iterator>

#include "doctest.h"
#include "gbm/nifti_io.hpp"
#include "support.hpp"

using namespace gbm;
namespace fs = std::filesystem;

namespace {

const fs::path kFixtures = GBM_FIXTURE_DIR;

std::vector<std::byte> read_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::vector<char> raw((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  std::vector<std::byte> out(raw.size());
  std::memcpy(out.data(), raw.data(), raw.size());
  return out;
}

ErrorKind kind_of(const fs::path& p) {
  try {
    read_volume(p);
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("no error raised for " << p);
  return ErrorKind::kIoFailure;
}

void check_fixture_affine(const Affine& a) {
  const double expected[3][4] = {{1.5, 0, 0, -10}, {0, 2, 0, 20.5}, {0, 0, 2.5, -30.25}};
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 4; ++c) CHECK(a[r][c] == doctest::Approx(expected[r][c]).epsilon(1e-6));
}

}  // namespace

TEST_SUITE("nifti_io") {

TEST_CASE("float32 fixture written by an independent tool reads 0..7 in voxel order") {
  const NiftiVolume v = read_volume(kFixtures / "f32_2x2x2.nii");
  CHECK(v.header.dims == Index3{2, 2, 2});
  CHECK(v.header.datatype == NiftiDatatype::kFloat32);
  CHECK(v.header.spacing == Spacing3{1.5, 2.0, 2.5});
  check_fixture_affine(v.header.affine);
  for (std::size_t i = 0; i < 8; ++i) CHECK(v.grid[i] == static_cast<double>(i));
}

TEST_CASE("gzip copy is transparent") {
  const NiftiVolume plain = read_volume(kFixtures / "f32_2x2x2.nii");
  const NiftiVolume gz = read_volume(kFixtures / "f32_2x2x2.nii.gz");
  CHECK(gz.grid == plain.grid);
  CHECK(gz.header.affine == plain.header.affine);
}

TEST_CASE("big-endian file parses to the same logical fields") {
  const NiftiVolume le = read_volume(kFixtures / "f32_2x2x2.nii");
  const NiftiVolume be = read_volume(kFixtures / "f32_2x2x2_be.nii");
  CHECK_FALSE(le.header.byte_swapped);
  CHECK(be.header.byte_swapped);
  CHECK(be.header.dims == le.header.dims);
  CHECK(be.header.spacing == le.header.spacing);
  CHECK(be.header.affine == le.header.affine);
  CHECK(be.grid == le.grid);

  const auto raw = read_bytes(kFixtures / "f32_2x2x2_be.nii");
  const NiftiHeader h = validate_header(std::span(raw).first(348));
  CHECK(h.byte_swapped);
  CHECK(h.datatype == NiftiDatatype::kFloat32);
}

TEST_CASE("integer payload with slope and intercept") {
  const NiftiVolume v = read_volume(kFixtures / "i16_scaled.nii");
  CHECK(v.header.datatype == NiftiDatatype::kInt16);
  const std::vector<double> expected{-1, 7, 3, 11, 1, 9, 5, 13};
  CHECK(std::equal(expected.begin(), expected.end(), v.grid.values().begin()));
}

TEST_CASE("qform is used when sform is absent") {
  const NiftiVolume v = read_volume(kFixtures / "u8_qform.nii");
  CHECK(v.header.dims == Index3{3, 2, 2});
  const double expected[3][4] = {{0, -2, 0, 5}, {1, 0, 0, -7}, {0, 0, 3, 11}};
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 4; ++c) CHECK(v.header.affine[r][c] == doctest::Approx(expected[r][c]).epsilon(1e-6));
  CHECK(v.header.spacing == Spacing3{1.0, 2.0, 3.0});
}

TEST_CASE("unit trailing dimension is squeezed, a real fourth dimension is not") {
  const NiftiVolume v = read_volume(kFixtures / "f32_2x2x2x1.nii");
  CHECK(v.header.dims == Index3{2, 2, 2});
  CHECK(kind_of(kFixtures / "f32_2x2x2x2.nii") == ErrorKind::kDimensionError);
}

TEST_CASE("error kinds") {
  CHECK(kind_of(kFixtures / "rgb.nii") == ErrorKind::kUnsupportedDatatype);
  CHECK(kind_of(kFixtures / "truncated.nii") == ErrorKind::kTruncatedFile);
  CHECK(kind_of(kFixtures / "does_not_exist.nii") == ErrorKind::kIoFailure);
  const std::vector<std::byte> zeros(348, std::byte{0});
  try {
    validate_header(zeros);
    FAIL("zeros accepted");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kNotNifti);
  }
}

TEST_CASE("write then read is bit-exact and gzip output starts with the gzip magic") {
  const fs::path dir = test::scratch_dir("nifti_roundtrip");
  test::Rng rng(3);
  const Geometry g = Geometry::make({4, 4, 4}, {0.9, 1.1, 3.0});
  std::vector<double> values(64);
  for (auto& v : values) v = static_cast<float>(test::uniform(rng, -1e3, 1e3));
  const VoxelGrid grid(g, values);
  for (const char* name : {"a.nii", "a.nii.gz"}) {
    write_volume(dir / name, NiftiHeader::for_geometry(g, NiftiDatatype::kFloat32), grid);
    const NiftiVolume back = read_volume(dir / name);
    CHECK(back.grid.values().size() == 64);
    CHECK(std::equal(values.begin(), values.end(), back.grid.values().begin()));
    CHECK(back.header.spacing == Spacing3{static_cast<float>(0.9), static_cast<float>(1.1), 3.0});
  }
  const auto gz = read_bytes(dir / "a.nii.gz");
  REQUIRE(gz.size() > 2);
  CHECK(gz[0] == std::byte{0x1F});
  CHECK(gz[1] == std::byte{0x8B});
  const auto plain = read_bytes(dir / "a.nii");
  CHECK(plain.size() == 352 + 64 * 4);
  CHECK(std::memcmp(plain.data() + 344, "n+1\0", 4) == 0);
}

TEST_CASE("header dims must match the grid") {
  const fs::path dir = test::scratch_dir("nifti_mismatch");
  NiftiHeader h = NiftiHeader::for_geometry(Geometry::make({2, 2, 2}), NiftiDatatype::kFloat32);
  const VoxelGrid nine(Geometry::make({9, 1, 1}));
  try {
    write_volume(dir / "bad.nii", h, nine);
    FAIL("mismatch accepted");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kDimensionMismatch);
  }
}

TEST_CASE("integer writes round and saturate, labels round-trip") {
  const fs::path dir = test::scratch_dir("nifti_int");
  const Geometry g = Geometry::make({4, 1, 1});
  const VoxelGrid grid(g, std::vector<double>{-3.6, 2.4, 300.0, 40000.0});
  write_volume(dir / "u8.nii", NiftiHeader::for_geometry(g, NiftiDatatype::kUint8), grid);
  const NiftiVolume u8 = read_volume(dir / "u8.nii");
  CHECK(std::vector<double>(u8.grid.values().begin(), u8.grid.values().end()) == std::vector<double>{0, 2, 255, 255});

  NiftiHeader h16 = NiftiHeader::for_geometry(g, NiftiDatatype::kFloat32);
  h16.datatype = NiftiDatatype::kInt16;
  write_volume(dir / "i16.nii.gz", h16, grid);
  const NiftiVolume i16 = read_volume(dir / "i16.nii.gz");
  CHECK(std::vector<double>(i16.grid.values().begin(), i16.grid.values().end()) ==
        std::vector<double>{-4, 2, 300, 32767});

  test::Rng rng(5);
  const LabelVolume labels = test::random_labels(rng, Geometry::make({5, 6, 7}, {1.0, 1.0, 2.0}));
  write_labels(dir / "seg.nii.gz", labels);
  CHECK(read_labels(dir / "seg.nii.gz") == labels);
}

TEST_CASE("float64 and affine survive a round trip") {
  const fs::path dir = test::scratch_dir("nifti_f64");
  test::Rng rng(9);
  Geometry g = Geometry::make({3, 5, 2}, {1.0, 0.5, 4.0});
  g.affine[0][3] = -12.25;
  g.affine[1][3] = 3.5;
  std::vector<double> values(g.voxel_count());
  for (auto& v : values) v = test::uniform(rng, -1.0, 1.0);
  const VoxelGrid grid(g, values);
  write_volume(dir / "d.nii", NiftiHeader::for_geometry(g, NiftiDatatype::kFloat64), grid);
  const NiftiVolume back = read_volume(dir / "d.nii");
  CHECK(back.grid == grid);
}

TEST_CASE("filename helpers") {
  CHECK(nifti_stem("x/BraTS_001_seg.nii.gz") == "BraTS_001_seg");
  CHECK(nifti_stem("a.nii") == "a");
  CHECK(has_nifti_extension("a.nii.gz"));
  CHECK_FALSE(has_nifti_extension("a.txt"));
}

}
