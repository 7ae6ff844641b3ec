#pragma once

// Synthetic end-to-end run: phantom scans on disk, then preprocess, fuse,
// evaluate and report through the command-line entry point.

#include <fstream>
#include <sstream>

#include "gbm/cli.hpp"
#include "gbm/harness.hpp"
#include "gbm/nifti_io.hpp"
#include "support.hpp"

namespace gbm::test {

inline constexpr Index3 kScanDims{56, 60, 48};
inline constexpr std::array<const char*, 4> kModalities{"t1", "t1ce", "t2", "flair"};

struct CliRun {
  int code = 0;
  std::string out;
  std::string err;
};

inline CliRun run(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

inline std::string case_name(int i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "Phantom_%05d", i + 1);
  return buf;
}

// Ellipsoidal brain around a nested ball tumor; every
// modality sees brain intensity plus noise and a brighter tumor.
inline void write_phantom_case(Rng& rng, const std::filesystem::path& dir, const std::string& id) {
  const Geometry g = Geometry::make(kScanDims, {1.0, 1.0, 1.0});
  const LabelVolume tumor = ball_phantom(kScanDims, 10.0, 7.0, 4.0);
  std::vector<std::uint8_t> seg(g.voxel_count(), 0);
  std::vector<std::uint8_t> brain(g.voxel_count(), 0);
  for (std::size_t i = 0; i < seg.size(); ++i) {
    const Index3 c = g.coords(i);
    const double x = (c[0] - 27.5) / 22.0, y = (c[1] - 29.5) / 25.0, z = (c[2] - 23.5) / 19.0;
    brain[i] = x * x + y * y + z * z <= 1.0;
    seg[i] = brain[i] ? tumor[i] : 0;
  }
  std::filesystem::create_directories(dir);
  write_labels(dir / (id + "_seg.nii.gz"), LabelVolume(g, seg));
  std::normal_distribution<double> noise(0.0, 5.0);
  for (std::size_t m = 0; m < kModalities.size(); ++m) {
    VoxelGrid img(g);
    for (std::size_t i = 0; i < seg.size(); ++i) {
      if (brain[i]) img[i] = 100.0 + 20.0 * static_cast<double>(m) + (seg[i] ? 40.0 * seg[i] : 0.0) + noise(rng);
    }
    write_volume(dir / (id + "_" + kModalities[m] + ".nii.gz"), NiftiHeader::for_geometry(g, NiftiDatatype::kFloat32),
                 img);
  }
}

struct PipelineResult {
  bool ok = true;
  std::string failure;
  std::vector<CaseMetrics> cases;
};

inline PipelineResult run_pipeline(const std::filesystem::path& root, int n_cases, std::uint64_t seed) {
  namespace fs = std::filesystem;
  PipelineResult result;
  auto fail = [&](const std::string& step, const CliRun& r) {
    result.ok = false;
    result.failure = step + " exited " + std::to_string(r.code) + ": " + r.err;
    return result;
  };
  Rng rng(seed);
  const fs::path gt_dir = root / "gt";
  fs::create_directories(gt_dir);
  for (int c = 0; c < n_cases; ++c) {
    const std::string id = case_name(c);
    const fs::path raw = root / "raw" / id;
    write_phantom_case(rng, raw, id);

    std::vector<std::string> args{"preprocess", "--out", (root / "prep" / id).string(), "--target", "48,48,48",
                                  "--labels", (raw / (id + "_seg.nii.gz")).string()};
    for (const char* m : kModalities) {
      args.push_back("--modality");
      args.push_back((raw / (id + "_" + m + ".nii.gz")).string());
    }
    if (const CliRun r = run(args); r.code != 0) return fail("preprocess", r);
    fs::copy_file(root / "prep" / id / (id + "_seg.nii.gz"), gt_dir / (id + "_seg.nii.gz"),
                  fs::copy_options::overwrite_existing);

    // Stand-in for three trained networks with five folds each.
    const LabelVolume truth = read_labels(gt_dir / (id + "_seg.nii.gz"));
    const auto methods = ensemble_phantom(rng, truth, 0.18);
    for (std::size_t m = 0; m < methods.size(); ++m) {
      for (std::size_t f = 0; f < methods[m].size(); ++f) {
        const fs::path dir = root / "probs" / ("method" + std::to_string(m)) / ("fold" + std::to_string(f));
        fs::create_directories(dir);
        const RegionProbabilities& p = methods[m][f];
        for (const auto* prob : {&p.et, &p.tc, &p.wt}) {
          const auto v = prob->probabilities();
          const VoxelGrid grid(prob->geometry(), std::vector<double>(v.begin(), v.end()));
          write_volume(dir / (id + "_" + std::string(region_name(prob->region())) + ".nii.gz"),
                       NiftiHeader::for_geometry(grid.geometry(), NiftiDatatype::kFloat32), grid);
        }
      }
    }
  }
  if (const CliRun r = run({"fuse", "--method", "ensemble", "--input", (root / "probs").string(), "--out",
                            (root / "fused").string()});
      r.code != 0) {
    return fail("fuse", r);
  }
  if (const CliRun r = run({"evaluate", "--pred", (root / "fused").string(), "--gt", gt_dir.string(), "--out",
                            (root / "eval").string()});
      r.code != 0) {
    return fail("evaluate", r);
  }
  if (const CliRun r = run({"report", "--input", (root / "eval" / "metrics.csv").string(), "--name", "Ensemble",
                            "--out", (root / "report").string()});
      r.code != 0) {
    return fail("report", r);
  }
  std::ifstream csv(root / "eval" / "metrics.csv");
  std::ostringstream text;
  text << csv.rdbuf();
  result.cases = parse_case_csv(text.str());
  return result;
}

}  // namespace gbm::test
