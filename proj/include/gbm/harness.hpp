#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "gbm/metrics.hpp"

namespace gbm {

struct SummaryStats {
  double mean = 0.0;
  double std_dev = 0.0;  // population
  double median = 0.0;
  double quantile_25 = 0.0;
  double quantile_75 = 0.0;
};

struct AggregateReport {
  std::size_t n_cases = 0;
  // Indexed by Region.
  std::array<SummaryStats, 3> dsc{};
  std::array<SummaryStats, 3> hd95{};
};

enum class RankStrategy {
  // avg_dsc descending, ties by avg_hd95 ascending.
  kDscOnly,
  // Mean of the DSC rank and the HD95 rank, ties by avg_dsc.
  kAvgRank,
  // avg_dsc - avg_hd95 descending.
  kDscMinusHd95,
};

inline constexpr std::array<RankStrategy, 3> kRankStrategies{RankStrategy::kDscOnly, RankStrategy::kAvgRank,
                                                            RankStrategy::kDscMinusHd95};

std::string_view strategy_name(RankStrategy strategy);

struct MethodSummary {
  std::string method_name;
  double avg_dsc = 0.0;   // mean of the three region DSC means
  double avg_hd95 = 0.0;  // mean of the three region HD95 means
  // 1-based position under each strategy; 0 until ranked.
  std::array<int, 3> rank{0, 0, 0};

  int rank_for(RankStrategy s) const { return rank[static_cast<std::size_t>(s)]; }
};

SummaryStats summarize(std::span<const double> values);

// Mean, population std-dev, median and linear-interpolation quartiles per
// region and metric. Throws kEmptyInput for no cases.
AggregateReport aggregate(std::span<const CaseMetrics> cases);

MethodSummary summarize_method(std::string name, const AggregateReport& report);

// Orders summaries under one strategy and records the 1-based position in
// that strategy's rank slot. Method name breaks any remaining tie.
std::vector<MethodSummary> rank_methods(std::span<const MethodSummary> summaries, RankStrategy strategy);

// Fills all three rank slots; returned in dsc_only order.
std::vector<MethodSummary> rank_all(std::span<const MethodSummary> summaries);

// Case identifier of a volume filename: the extension is dropped and the
// name is cut after its last all-digit '_'-separated token, so
// "BraTS2021_00001_seg.nii.gz" and "BraTS2021_00001.nii" both give
// "BraTS2021_00001". Names with no digit token are used whole.
std::string case_identifier(std::string_view filename);

struct CasePair {
  std::string case_id;
  std::filesystem::path pred;
  std::filesystem::path gt;
};

struct Pairing {
  std::vector<CasePair> pairs;  // sorted by case_id
  std::vector<std::string> warnings;
};

// Pairs NIfTI files of two directories by case_identifier.
Pairing pair_cases(const std::filesystem::path& pred_dir, const std::filesystem::path& gt_dir);

// Explicit pairing from a CSV with header "case_id,pred,gt"; relative
// paths resolve against the manifest's directory.
Pairing read_manifest(const std::filesystem::path& manifest);

struct DatasetEvaluation {
  std::vector<CaseMetrics> cases;  // sorted by case_id
  std::vector<std::string> warnings;
};

// Evaluates every pair (cases in parallel). Throws kNoMatchedCases when
// nothing pairs and kUnreadableVolume with the case id on load failures.
DatasetEvaluation evaluate_pairs(const Pairing& pairing, const EmptyMaskPolicy& policy = {});
DatasetEvaluation evaluate_dataset(const std::filesystem::path& pred_dir, const std::filesystem::path& gt_dir,
                                   const EmptyMaskPolicy& policy = {});

inline constexpr std::string_view kCaseCsvHeader = "case_id,dsc_et,dsc_tc,dsc_wt,hd95_et,hd95_tc,hd95_wt";

// Header row plus one row per case; DSC with 2 decimals, HD95 with 4; LF
// line endings.
std::string render_case_csv(std::span<const CaseMetrics> cases);
// Throws kBadCsv on a header or field mismatch.
std::vector<CaseMetrics> parse_case_csv(std::string_view text);

// Tab-separated DSC/HD95 x ET/TC/WT table with Mean, StdDev, Median,
// 25quantile and 75quantile rows.
std::string render_aggregate_table(const AggregateReport& report);

// method,avg_dsc,avg_hd95,rank_dsc_only,rank_avg_rank,rank_dsc_minus_hd95
std::string render_ranking_csv(std::span<const MethodSummary> ranked);

// JSON text: {"cases": [...], "aggregate": {...}} with the CSV field names.
std::string render_report_json(std::span<const CaseMetrics> cases, const AggregateReport& report);
std::string render_ranking_json(std::span<const MethodSummary> ranked,
                                std::span<const std::pair<std::string, AggregateReport>> reports);

}  // namespace gbm
