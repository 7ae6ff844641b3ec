#include <fstream>
#include <sstream>

#include "doctest.h"
#include "gbm/harness.hpp"
#include "gbm/nifti_io.hpp"
#include "json.hpp"
#include "support.hpp"

using namespace gbm;
namespace fs = std::filesystem;

namespace {

const fs::path kGolden = GBM_GOLDEN_DIR;

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

MethodSummary method(std::string name, double dsc, double hd) {
  MethodSummary m;
  m.method_name = std::move(name);
  m.avg_dsc = dsc;
  m.avg_hd95 = hd;
  return m;
}

// Table 1 of the validation results: averages over ET/TC/WT.
std::vector<MethodSummary> table1() {
  return {method("DeepSeg A", 85.21, 11.71), method("DeepSeg B", 85.76, 14.12), method("nnU-Net A", 87.78, 9.60),
          method("nnU-Net B", 87.87, 10.14), method("Ensemble", 87.81, 9.58)};
}

std::vector<CaseMetrics> golden_cases() {
  return {{"BraTS2021_00002", {91.254, 80.0, 100.0}, {1.41421356, 2.0, 0.0}},
          {"BraTS2021_00010", {0.0, 200.0 / 3.0, 95.5}, {373.1287, 3.7416573867739413, 1.0}}};
}

}  // namespace

TEST_SUITE("harness") {

TEST_CASE("summary statistics") {
  const std::vector<double> one{42.5};
  const SummaryStats s1 = summarize(one);
  CHECK(s1.mean == 42.5);
  CHECK(s1.median == 42.5);
  CHECK(s1.std_dev == 0.0);
  CHECK(s1.quantile_25 == 42.5);
  CHECK(s1.quantile_75 == 42.5);

  const std::vector<double> four{100, 80, 90, 90};
  const SummaryStats s = summarize(four);
  CHECK(s.mean == doctest::Approx(90.0));
  CHECK(s.median == doctest::Approx(90.0));
  CHECK(s.quantile_25 == doctest::Approx(87.5));
  CHECK(s.quantile_75 == doctest::Approx(92.5));
  CHECK(s.std_dev == doctest::Approx(std::sqrt(50.0)));
  CHECK_THROWS_AS(aggregate({}), Error);
}

TEST_CASE("property: statistics ignore case order") {
  test::Rng rng(23);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> v(static_cast<std::size_t>(test::uniform_int(rng, 1, 40)));
    for (auto& x : v) x = test::uniform(rng, 0.0, 100.0);
    const SummaryStats a = summarize(v);
    std::shuffle(v.begin(), v.end(), rng);
    const SummaryStats b = summarize(v);
    CHECK(a.mean == b.mean);
    CHECK(a.std_dev == b.std_dev);
    CHECK(a.median == b.median);
    CHECK(a.quantile_25 <= a.median);
    CHECK(a.median <= a.quantile_75);
  }
}

TEST_CASE("ranking Table 1 under dsc_only") {
  const auto ranked = rank_methods(table1(), RankStrategy::kDscOnly);
  CHECK(ranked[0].method_name == "nnU-Net B");
  CHECK(ranked[1].method_name == "Ensemble");
  CHECK(ranked[0].rank_for(RankStrategy::kDscOnly) == 1);
  CHECK(ranked[4].method_name == "DeepSeg A");

  const auto all = rank_all(table1());
  CHECK(all[0].method_name == "nnU-Net B");
  for (const auto& m : all) {
    for (const RankStrategy s : kRankStrategies) CHECK(m.rank_for(s) >= 1);
  }
  const auto by_avg = rank_methods(table1(), RankStrategy::kAvgRank);
  CHECK(by_avg[0].method_name == "Ensemble");
}

TEST_CASE("ranking edge cases") {
  const std::vector<MethodSummary> single{method("only", 50.0, 5.0)};
  for (const RankStrategy s : kRankStrategies) {
    const auto r = rank_methods(single, s);
    CHECK(r[0].rank_for(s) == 1);
  }
  const std::vector<MethodSummary> tied{method("a", 80.0, 9.0), method("b", 80.0, 4.0)};
  CHECK(rank_methods(tied, RankStrategy::kDscOnly)[0].method_name == "b");
  CHECK(strategy_name(RankStrategy::kDscMinusHd95) == "dsc_minus_hd95");
}

TEST_CASE("case identifiers") {
  CHECK(case_identifier("BraTS2021_00001_seg.nii.gz") == "BraTS2021_00001");
  CHECK(case_identifier("BraTS2021_00001.nii") == "BraTS2021_00001");
  CHECK(case_identifier("BraTS2021_Validation_01739_pred.nii.gz") == "BraTS2021_Validation_01739");
  CHECK(case_identifier("patient.nii.gz") == "patient");
}

TEST_CASE("Table 2 layout renders from its published rows") {
  AggregateReport r;
  r.n_cases = 1;
  const double mean[6] = {87.63, 87.49, 91.87, 12.13, 6.27, 14.89};
  const double sd[6] = {18.22, 24.31, 10.97, 59.61, 27.79, 63.32};
  const double med[6] = {93.70, 96.04, 95.11, 1.00, 2.00, 1.41};
  const double q25[6] = {85.77, 91.33, 91.09, 1.00, 1.00, 1.00};
  const double q75[6] = {96.62, 98.20, 97.22, 1.73, 4.12, 3.00};
  for (int c = 0; c < 6; ++c) {
    SummaryStats& s = c < 3 ? r.dsc[c] : r.hd95[c - 3];
    s = {mean[c], sd[c], med[c], q25[c], q75[c]};
  }
  CHECK(render_aggregate_table(r) == slurp(kGolden / "table2.tsv"));
}

TEST_CASE("per-case CSV matches the golden file and parses back") {
  const std::string csv = render_case_csv(golden_cases());
  CHECK(csv == slurp(kGolden / "metrics.csv"));
  CHECK(csv.substr(0, csv.find('\n')) == kCaseCsvHeader);
  const auto back = parse_case_csv(csv);
  REQUIRE(back.size() == 2);
  CHECK(back[1].case_id == "BraTS2021_00010");
  CHECK(back[1].hd95[0] == 373.1287);
  CHECK(back[0].dsc[0] == 91.25);
  CHECK_THROWS_AS(parse_case_csv("case,dsc\nx,1\n"), Error);
  CHECK_THROWS_AS(parse_case_csv(std::string(kCaseCsvHeader) + "\nx,1,2,3,4,5,oops\n"), Error);
}

TEST_CASE("JSON reports") {
  const auto cases = golden_cases();
  const auto j = nlohmann::json::parse(render_report_json(cases, aggregate(cases)));
  CHECK(j["cases"].size() == 2);
  CHECK(j["cases"][0]["case_id"] == "BraTS2021_00002");
  CHECK(j["aggregate"].contains("n_cases"));

  const auto ranked = rank_all(table1());
  std::vector<std::pair<std::string, AggregateReport>> reports;
  const auto rj = nlohmann::json::parse(render_ranking_json(ranked, reports));
  CHECK(rj.is_object());
  CHECK(render_ranking_csv(ranked).rfind("method,avg_dsc,avg_hd95,rank_dsc_only,rank_avg_rank,rank_dsc_minus_hd95\n", 0) == 0);
}

TEST_CASE("dataset evaluation pairs files by case id") {
  const fs::path root = test::scratch_dir("harness_eval");
  const fs::path pred = root / "pred", gt = root / "gt";
  fs::create_directories(pred);
  fs::create_directories(gt);
  const LabelVolume truth = test::ball_phantom({16, 16, 16}, 6, 4, 2);
  for (const char* id : {"BraTS2021_00003", "BraTS2021_00001", "BraTS2021_00002"}) {
    write_labels(gt / (std::string(id) + "_seg.nii.gz"), truth);
    write_labels(pred / (std::string(id) + ".nii.gz"), truth);
  }
  write_labels(pred / "BraTS2021_00009.nii.gz", truth);
  const DatasetEvaluation eval = evaluate_dataset(pred, gt);
  REQUIRE(eval.cases.size() == 3);
  CHECK(eval.cases[0].case_id == "BraTS2021_00001");
  CHECK(eval.cases[2].case_id == "BraTS2021_00003");
  CHECK(eval.cases[1].dsc[2] == 100.0);
  REQUIRE(eval.warnings.size() == 1);
  CHECK(eval.warnings[0].find("BraTS2021_00009") != std::string::npos);

  const fs::path e1 = root / "e1", e2 = root / "e2";
  fs::create_directories(e1);
  fs::create_directories(e2);
  try {
    evaluate_dataset(e1, e2);
    FAIL("no error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kNoMatchedCases);
  }

  std::ofstream(root / "manifest.csv") << "case_id,pred,gt\nx,pred/BraTS2021_00001.nii.gz,gt/BraTS2021_00002_seg.nii.gz\n";
  const DatasetEvaluation m = evaluate_pairs(read_manifest(root / "manifest.csv"));
  REQUIRE(m.cases.size() == 1);
  CHECK(m.cases[0].case_id == "x");

  std::ofstream(gt / "BraTS2021_00004_seg.nii.gz") << "garbage";
  write_labels(pred / "BraTS2021_00004.nii.gz", truth);
  try {
    evaluate_dataset(pred, gt);
    FAIL("no error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kUnreadableVolume);
    CHECK(std::string(e.what()).find("BraTS2021_00004") != std::string::npos);
  }
}

}
