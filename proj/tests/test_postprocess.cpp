#include "doctest.h"
#include "gbm/postprocess.hpp"
#include "support.hpp"

using namespace gbm;

namespace {

LabelVolume with_et(std::size_t et_voxels) {
  const Geometry g = Geometry::make({10, 10, 10});
  std::vector<std::uint8_t> l(g.voxel_count(), 0);
  for (std::size_t i = 0; i < l.size(); ++i) l[i] = i % 3 == 0 ? 2 : i % 3 == 1 ? 1 : 0;
  for (std::size_t i = 0; i < et_voxels; ++i) l[i * 3 + 2] = 4;
  return LabelVolume(g, std::move(l));
}

}  // namespace

TEST_SUITE("postprocess") {

TEST_CASE("199 enhancing voxels fall below the threshold") {
  const LabelVolume v = with_et(199);
  const LabelVolume out = et_threshold_relabel(v);
  CHECK(count_label(out, 4) == 0);
  CHECK(count_label(out, 1) == count_label(v, 1) + 199);
  CHECK(count_label(out, 2) == count_label(v, 2));
  CHECK(count_label(out, 0) == count_label(v, 0));
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (v[i] == 4) CHECK(out[i] == 1);
  }
}

TEST_CASE("exactly the threshold is kept") {
  const LabelVolume v = with_et(200);
  CHECK(et_threshold_relabel(v) == v);
  CHECK(et_threshold_relabel(with_et(0)) == with_et(0));
  CHECK(et_threshold_relabel(v, {201}) != v);
  CHECK(et_threshold_relabel(with_et(1), {0}) == with_et(1));
}

TEST_CASE("property: idempotent and WT/TC invariant") {
  test::Rng rng(19);
  for (int trial = 0; trial < 100; ++trial) {
    const Geometry g = Geometry::make(test::random_dims(rng, 2, 10));
    std::vector<std::uint8_t> l(g.voxel_count());
    const double p4 = test::uniform(rng, 0.0, 0.5);
    for (auto& v : l) v = test::uniform(rng) < p4 ? 4 : kBratsLabels[static_cast<std::size_t>(test::uniform_int(rng, 0, 2))];
    const LabelVolume v(g, std::move(l));
    const PostprocessConfig cfg{static_cast<std::size_t>(test::uniform_int(rng, 0, 300))};
    const LabelVolume once = et_threshold_relabel(v, cfg);
    CHECK(et_threshold_relabel(once, cfg) == once);
    const RegionMasks before = compose_regions(v);
    const RegionMasks after = compose_regions(once);
    CHECK(before.wt == after.wt);
    CHECK(before.tc == after.tc);
  }
}

}
