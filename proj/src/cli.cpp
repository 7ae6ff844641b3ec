#include "gbm/cli.hpp"

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>

#include "CLI11.hpp"
#include "gbm/fusion.hpp"
#include "gbm/harness.hpp"
#include "gbm/nifti_io.hpp"
#include "gbm/postprocess.hpp"
#include "gbm/preprocess.hpp"
#include "json.hpp"

namespace gbm {

namespace fs = std::filesystem;

namespace {

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  if (!file) throw Error(ErrorKind::kIoFailure, "cannot open " + path.string() + " for writing");
  file << text;
  if (!file) throw Error(ErrorKind::kIoFailure, "write failed for " + path.string());
}

void ensure_directory(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw Error(ErrorKind::kIoFailure, "cannot create directory " + dir.string());
}

std::vector<fs::path> sorted_entries(const fs::path& dir, bool directories) {
  if (!fs::is_directory(dir)) throw Error(ErrorKind::kIoFailure, dir.string() + " is not a directory");
  std::vector<fs::path> out;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (directories ? entry.is_directory() : entry.is_regular_file() && has_nifti_extension(entry.path())) {
      out.push_back(entry.path());
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

// case id -> file, for label volumes in one method directory.
std::map<std::string, fs::path> label_files(const fs::path& dir) {
  std::map<std::string, fs::path> out;
  for (const auto& f : sorted_entries(dir, false)) out.emplace(case_identifier(f.filename().string()), f);
  return out;
}

// "<case>_et.nii.gz" -> (case, ET).
std::optional<std::pair<std::string, Region>> region_file(const fs::path& path) {
  const std::string stem = nifti_stem(path);
  if (stem.size() < 4 || stem[stem.size() - 3] != '_') return std::nullopt;
  std::string tag = stem.substr(stem.size() - 2);
  std::transform(tag.begin(), tag.end(), tag.begin(), [](unsigned char c) { return std::tolower(c); });
  const std::string id = stem.substr(0, stem.size() - 3);
  if (tag == "et") return std::pair{id, Region::kET};
  if (tag == "tc") return std::pair{id, Region::kTC};
  if (tag == "wt") return std::pair{id, Region::kWT};
  return std::nullopt;
}

using RegionFiles = std::map<std::string, std::array<std::optional<fs::path>, 3>>;

RegionFiles probability_files(const fs::path& dir) {
  RegionFiles out;
  for (const auto& f : sorted_entries(dir, false)) {
    if (auto rf = region_file(f)) out[rf->first][static_cast<std::size_t>(rf->second)] = f;
  }
  return out;
}

bool complete(const RegionFiles& files, const std::string& id) {
  const auto it = files.find(id);
  return it != files.end() && std::all_of(it->second.begin(), it->second.end(), [](const auto& p) { return p.has_value(); });
}

RegionProbabilities load_probabilities(const RegionFiles& files, const std::string& id) {
  const auto& slots = files.at(id);
  auto load = [&](Region r) {
    const fs::path& path = *slots[static_cast<std::size_t>(r)];
    const VoxelGrid grid = read_volume(path).grid;
    const auto v = grid.values();
    return ProbabilityVolume(grid.geometry(), r, std::vector<double>(v.begin(), v.end()));
  };
  return {load(Region::kET), load(Region::kTC), load(Region::kWT)};
}

// Case ids present in every map; the rest are reported.
template <class Map, class Complete>
std::vector<std::string> common_cases(const std::vector<Map>& maps, const std::vector<fs::path>& dirs, Complete&& ok,
                                      std::ostream& err) {
  std::set<std::string> all;
  for (const auto& m : maps) {
    for (const auto& [id, unused] : m) all.insert(id);
  }
  std::vector<std::string> out;
  for (const auto& id : all) {
    bool everywhere = true;
    for (std::size_t i = 0; i < maps.size(); ++i) {
      if (!ok(maps[i], id)) {
        err << "warning: case " << id << " missing or incomplete in " << dirs[i].string() << "; skipped\n";
        everywhere = false;
      }
    }
    if (everywhere) out.push_back(id);
  }
  return out;
}

struct FuseOptions {
  std::string input;
  std::string out;
  std::string method = "staple";
  bool staple = false;
  std::size_t et_threshold = 200;
  int max_iter = 50;
  double tol = 1e-6;
};

int run_fuse(const FuseOptions& o, std::ostream& out, std::ostream& err) {
  const std::string method = o.staple ? "staple" : o.method;
  StapleConfig staple;
  staple.max_iter = o.max_iter;
  staple.tol = o.tol;
  staple.validate();
  const PostprocessConfig post{o.et_threshold};
  const std::vector<fs::path> members = sorted_entries(o.input, true);
  if (members.empty()) throw Error(ErrorKind::kEmptyInput, "no method subdirectories under " + o.input);
  ensure_directory(o.out);
  std::size_t written = 0;

  if (method == "vote" || method == "staple") {
    std::vector<std::map<std::string, fs::path>> maps;
    for (const auto& m : members) maps.push_back(label_files(m));
    const auto ids = common_cases(maps, members, [](const auto& m, const std::string& id) { return m.contains(id); }, err);
    for (const auto& id : ids) {
      std::vector<LabelVolume> raters;
      for (const auto& m : maps) raters.push_back(read_labels(m.at(id)));
      const LabelVolume fused = method == "vote" ? majority_vote(raters) : staple_regions(raters, staple);
      write_labels(fs::path(o.out) / (id + ".nii.gz"), et_threshold_relabel(fused, post));
      ++written;
    }
  } else if (method == "mean") {
    std::vector<RegionFiles> maps;
    for (const auto& m : members) maps.push_back(probability_files(m));
    const auto ids = common_cases(maps, members, complete, err);
    for (const auto& id : ids) {
      std::vector<RegionProbabilities> folds;
      for (const auto& m : maps) folds.push_back(load_probabilities(m, id));
      write_labels(fs::path(o.out) / (id + ".nii.gz"), et_threshold_relabel(fuse_folds(folds), post));
      ++written;
    }
  } else if (method == "ensemble") {
    // input/<method>/<fold>/<case>_{et,tc,wt}.nii[.gz]
    std::vector<std::vector<RegionFiles>> per_method;
    std::vector<RegionFiles> flat;
    std::vector<fs::path> flat_dirs;
    for (const auto& m : members) {
      std::vector<RegionFiles> folds;
      for (const auto& fold : sorted_entries(m, true)) {
        folds.push_back(probability_files(fold));
        flat.push_back(folds.back());
        flat_dirs.push_back(fold);
      }
      if (folds.empty()) throw Error(ErrorKind::kEmptyInput, "method " + m.string() + " has no fold directories");
      per_method.push_back(std::move(folds));
    }
    const auto ids = common_cases(flat, flat_dirs, complete, err);
    for (const auto& id : ids) {
      std::vector<MethodFolds> methods;
      for (const auto& folds : per_method) {
        MethodFolds mf;
        for (const auto& f : folds) mf.push_back(load_probabilities(f, id));
        methods.push_back(std::move(mf));
      }
      write_labels(fs::path(o.out) / (id + ".nii.gz"), ensemble_pipeline(methods, staple, post));
      ++written;
    }
  } else {
    throw CLI::ValidationError("--method", "unknown fusion method " + method);
  }
  if (written == 0) throw Error(ErrorKind::kNoMatchedCases, "no case is present for every input under " + o.input);
  out << "fused " << written << " case(s) with " << method << " into " << o.out << "\n";
  return kExitOk;
}

struct PreprocessOptions {
  std::vector<std::string> modalities;
  std::string labels;
  std::string out;
  std::vector<std::int64_t> target{kDefaultTargetDims.begin(), kDefaultTargetDims.end()};
  bool no_zscore = false;
};

int run_preprocess(const PreprocessOptions& o, std::ostream& out) {
  std::vector<NiftiVolume> inputs;
  for (const auto& m : o.modalities) inputs.push_back(read_volume(m));
  std::vector<VoxelGrid> grids;
  for (const auto& v : inputs) grids.push_back(v.grid);
  const BoundingBox box = brain_bounding_box(grids);
  const Index3 target{o.target[0], o.target[1], o.target[2]};
  ensure_directory(o.out);
  for (std::size_t i = 0; i < grids.size(); ++i) {
    VoxelGrid fitted = crop_and_fit(grids[i], box, target);
    if (!o.no_zscore) fitted = zscore_normalize(fitted);
    const fs::path dst = fs::path(o.out) / (nifti_stem(o.modalities[i]) + ".nii.gz");
    write_volume(dst, NiftiHeader::for_geometry(fitted.geometry(), NiftiDatatype::kFloat32), fitted);
  }
  if (!o.labels.empty()) {
    const LabelVolume labels = read_labels(o.labels);
    write_labels(fs::path(o.out) / (nifti_stem(o.labels) + ".nii.gz"), crop_and_fit(labels, box, target));
  }
  nlohmann::ordered_json j{{"low", box.low}, {"high", box.high}, {"target", target}};
  write_text(fs::path(o.out) / "bbox.json", j.dump(2) + "\n");
  out << "brain box [" << box.low[0] << "," << box.low[1] << "," << box.low[2] << ") - [" << box.high[0] << ","
      << box.high[1] << "," << box.high[2] << "), wrote " << grids.size() << " volume(s) to " << o.out << "\n";
  return kExitOk;
}

struct AugmentOptions {
  std::string input;
  std::string labels;
  std::string out;
  std::uint64_t seed = 0;
};

int run_augment(const AugmentOptions& o, std::ostream& out) {
  const AugmentSpec spec = sample_augmentation(o.seed);
  ensure_directory(o.out);
  const NiftiVolume src = read_volume(o.input);
  const VoxelGrid augmented = apply_augmentation(src.grid, spec);
  write_volume(fs::path(o.out) / (nifti_stem(o.input) + "_aug.nii.gz"),
               NiftiHeader::for_geometry(augmented.geometry(), NiftiDatatype::kFloat32), augmented);
  if (!o.labels.empty()) {
    write_labels(fs::path(o.out) / (nifti_stem(o.labels) + "_aug.nii.gz"),
                 apply_augmentation(read_labels(o.labels), spec));
  }
  const nlohmann::ordered_json j{{"seed", spec.seed},
                                 {"rotation_axis", static_cast<int>(spec.rotation_axis)},
                                 {"rotation_deg", spec.rotation_deg},
                                 {"flip_axes", spec.flip_axes},
                                 {"gamma", spec.gamma}};
  out << j.dump(2) << "\n";
  return kExitOk;
}

struct EvaluateOptions {
  std::string pred;
  std::string gt;
  std::string out;
  std::string manifest;
};

int run_evaluate(const EvaluateOptions& o, std::ostream& out, std::ostream& err) {
  const Pairing pairing = o.manifest.empty() ? pair_cases(o.pred, o.gt) : read_manifest(o.manifest);
  const DatasetEvaluation eval = evaluate_pairs(pairing);
  for (const auto& w : eval.warnings) err << "warning: " << w << "\n";
  const AggregateReport report = aggregate(eval.cases);
  ensure_directory(o.out);
  write_text(fs::path(o.out) / "metrics.csv", render_case_csv(eval.cases));
  write_text(fs::path(o.out) / "report.json", render_report_json(eval.cases, report));
  const std::string table = render_aggregate_table(report);
  write_text(fs::path(o.out) / "aggregate.tsv", table);
  out << "evaluated " << eval.cases.size() << " case(s)\n" << table;
  return kExitOk;
}

struct ReportOptions {
  std::vector<std::string> inputs;
  std::vector<std::string> names;
  std::string out;
};

int run_report(const ReportOptions& o, std::ostream& out) {
  if (!o.names.empty() && o.names.size() != o.inputs.size()) {
    throw CLI::ValidationError("--name", "give one name per --input");
  }
  std::vector<std::pair<std::string, AggregateReport>> reports;
  std::vector<MethodSummary> summaries;
  for (std::size_t i = 0; i < o.inputs.size(); ++i) {
    std::ifstream in(o.inputs[i], std::ios::binary);
    if (!in) throw Error(ErrorKind::kIoFailure, "cannot open " + o.inputs[i]);
    std::ostringstream text;
    text << in.rdbuf();
    std::vector<CaseMetrics> cases;
    try {
      cases = parse_case_csv(text.str());
    } catch (const Error& e) {
      throw Error(e.kind(), o.inputs[i] + ": " + e.what());
    }
    const std::string name = o.names.empty() ? fs::path(o.inputs[i]).stem().string() : o.names[i];
    reports.emplace_back(name, aggregate(cases));
    summaries.push_back(summarize_method(name, reports.back().second));
  }
  const std::vector<MethodSummary> ranked = rank_all(summaries);
  ensure_directory(o.out);
  write_text(fs::path(o.out) / "ranking.csv", render_ranking_csv(ranked));
  write_text(fs::path(o.out) / "ranking.json", render_ranking_json(ranked, reports));
  for (const auto& [name, report] : reports) {
    const std::string table = render_aggregate_table(report);
    write_text(fs::path(o.out) / ("aggregate_" + name + ".tsv"), table);
    out << name << " (" << report.n_cases << " cases)\n" << table << "\n";
  }
  out << render_ranking_csv(ranked);
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Glioma segmentation toolkit: preprocessing, ensemble fusion and evaluation", "gbmseg"};
  app.require_subcommand(1);

  PreprocessOptions pre;
  auto* preprocess = app.add_subcommand("preprocess", "crop to the brain box, fit to target dims and z-score");
  preprocess->add_option("--modality", pre.modalities, "input modality volume (repeat per modality)")->required();
  preprocess->add_option("--labels", pre.labels, "label volume cropped with the same box");
  preprocess->add_option("--out", pre.out, "output directory")->required();
  preprocess->add_option("--target", pre.target, "target dims, e.g. 192,224,160")->delimiter(',')->expected(3);
  preprocess->add_flag("--no-zscore", pre.no_zscore, "skip intensity normalization");

  AugmentOptions aug;
  auto* augment = app.add_subcommand("augment", "apply one seeded random augmentation");
  augment->add_option("--input", aug.input, "intensity volume")->required();
  augment->add_option("--labels", aug.labels, "label volume transformed alongside");
  augment->add_option("--seed", aug.seed, "augmentation seed")->required();
  augment->add_option("--out", aug.out, "output directory")->required();

  FuseOptions fo;
  auto* fuse = app.add_subcommand("fuse", "fuse per-method predictions into one segmentation per case");
  fuse->add_option("--input", fo.input, "directory with one subdirectory per method (or fold)")->required();
  fuse->add_option("--out", fo.out, "output directory")->required();
  fuse->add_option("--method", fo.method, "mean | vote | staple | ensemble")
      ->check(CLI::IsMember({"mean", "vote", "staple", "ensemble"}));
  fuse->add_flag("--staple", fo.staple, "shorthand for --method staple");
  fuse->add_option("--et-threshold", fo.et_threshold, "relabel ET to necrosis below this many voxels")
      ->capture_default_str();
  fuse->add_option("--staple-max-iter", fo.max_iter, "STAPLE iteration cap")->capture_default_str();
  fuse->add_option("--staple-tol", fo.tol, "STAPLE convergence tolerance")->capture_default_str();

  EvaluateOptions ev;
  auto* evaluate = app.add_subcommand("evaluate", "per-case DSC/HD95 plus aggregate statistics");
  evaluate->add_option("--pred", ev.pred, "prediction directory")->required();
  evaluate->add_option("--gt", ev.gt, "ground-truth directory")->required();
  evaluate->add_option("--out", ev.out, "report directory")->required();
  evaluate->add_option("--manifest", ev.manifest, "CSV case_id,pred,gt overriding filename pairing");

  ReportOptions rep;
  auto* report = app.add_subcommand("report", "aggregate and rank methods from per-case CSV files");
  report->add_option("--input", rep.inputs, "per-case metrics CSV (repeat per method)")->required();
  report->add_option("--name", rep.names, "method name per input (defaults to the file stem)");
  report->add_option("--out", rep.out, "report directory")->required();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    if (code != 0) {
      err << app.help();
      return kExitUsage;
    }
    return kExitOk;
  }

  try {
    if (*preprocess) return run_preprocess(pre, out);
    if (*augment) return run_augment(aug, out);
    if (*fuse) return run_fuse(fo, out, err);
    if (*evaluate) return run_evaluate(ev, out, err);
    if (*report) return run_report(rep, out);
  } catch (const CLI::ValidationError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  }
  err << app.help();
  return kExitUsage;
}

int cli_main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run_cli(args, std::cout, std::cerr);
}

}  // namespace gbm
