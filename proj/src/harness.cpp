#include "gbm/harness.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

#include "gbm/nifti_io.hpp"
#include "json.hpp"

namespace gbm {

namespace fs = std::filesystem;

std::string_view strategy_name(RankStrategy strategy) {
  switch (strategy) {
    case RankStrategy::kDscOnly: return "dsc_only";
    case RankStrategy::kAvgRank: return "avg_rank";
    case RankStrategy::kDscMinusHd95: return "dsc_minus_hd95";
  }
  return "?";
}

SummaryStats summarize(std::span<const double> values) {
  if (values.empty()) throw Error(ErrorKind::kEmptyInput, "no values to summarize");
  // Statistics are taken over the sorted sample so the result does not
  // depend on input order.
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  const double n = static_cast<double>(sorted.size());
  SummaryStats s;
  s.mean = std::accumulate(sorted.begin(), sorted.end(), 0.0) / n;
  double sq = 0.0;
  for (double v : sorted) sq += (v - s.mean) * (v - s.mean);
  s.std_dev = std::sqrt(sq / n);
  s.median = quantile_sorted(sorted, 0.5);
  s.quantile_25 = quantile_sorted(sorted, 0.25);
  s.quantile_75 = quantile_sorted(sorted, 0.75);
  return s;
}

AggregateReport aggregate(std::span<const CaseMetrics> cases) {
  if (cases.empty()) throw Error(ErrorKind::kEmptyInput, "aggregate needs at least one case");
  AggregateReport report;
  report.n_cases = cases.size();
  std::vector<double> column(cases.size());
  for (std::size_t r = 0; r < 3; ++r) {
    for (std::size_t i = 0; i < cases.size(); ++i) column[i] = cases[i].dsc[r];
    report.dsc[r] = summarize(column);
    for (std::size_t i = 0; i < cases.size(); ++i) column[i] = cases[i].hd95[r];
    report.hd95[r] = summarize(column);
  }
  return report;
}

MethodSummary summarize_method(std::string name, const AggregateReport& report) {
  MethodSummary m;
  m.method_name = std::move(name);
  m.avg_dsc = (report.dsc[0].mean + report.dsc[1].mean + report.dsc[2].mean) / 3.0;
  m.avg_hd95 = (report.hd95[0].mean + report.hd95[1].mean + report.hd95[2].mean) / 3.0;
  return m;
}

namespace {

// Positions of `summaries` sorted under `strategy`.
std::vector<std::size_t> rank_order(std::span<const MethodSummary> summaries, RankStrategy strategy) {
  const std::size_t n = summaries.size();
  std::vector<double> score(n, 0.0);
  if (strategy == RankStrategy::kAvgRank) {
    for (std::size_t i = 0; i < n; ++i) {
      int dsc_rank = 1;
      int hd_rank = 1;
      for (std::size_t j = 0; j < n; ++j) {
        dsc_rank += summaries[j].avg_dsc > summaries[i].avg_dsc;
        hd_rank += summaries[j].avg_hd95 < summaries[i].avg_hd95;
      }
      score[i] = (dsc_rank + hd_rank) / 2.0;
    }
  } else if (strategy == RankStrategy::kDscMinusHd95) {
    for (std::size_t i = 0; i < n; ++i) score[i] = -(summaries[i].avg_dsc - summaries[i].avg_hd95);
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const MethodSummary& x = summaries[a];
    const MethodSummary& y = summaries[b];
    switch (strategy) {
      case RankStrategy::kDscOnly:
        if (x.avg_dsc != y.avg_dsc) return x.avg_dsc > y.avg_dsc;
        if (x.avg_hd95 != y.avg_hd95) return x.avg_hd95 < y.avg_hd95;
        break;
      case RankStrategy::kAvgRank:
      case RankStrategy::kDscMinusHd95:
        if (score[a] != score[b]) return score[a] < score[b];
        if (x.avg_dsc != y.avg_dsc) return x.avg_dsc > y.avg_dsc;
        break;
    }
    return x.method_name < y.method_name;
  });
  return order;
}

}  // namespace

std::vector<MethodSummary> rank_methods(std::span<const MethodSummary> summaries, RankStrategy strategy) {
  if (summaries.empty()) throw Error(ErrorKind::kEmptyInput, "no methods to rank");
  const auto order = rank_order(summaries, strategy);
  std::vector<MethodSummary> out;
  out.reserve(order.size());
  for (std::size_t pos = 0; pos < order.size(); ++pos) {
    out.push_back(summaries[order[pos]]);
    out.back().rank[static_cast<std::size_t>(strategy)] = static_cast<int>(pos) + 1;
  }
  return out;
}

std::vector<MethodSummary> rank_all(std::span<const MethodSummary> summaries) {
  if (summaries.empty()) throw Error(ErrorKind::kEmptyInput, "no methods to rank");
  std::vector<MethodSummary> ranked(summaries.begin(), summaries.end());
  for (RankStrategy s : kRankStrategies) {
    const auto order = rank_order(summaries, s);
    for (std::size_t pos = 0; pos < order.size(); ++pos) {
      ranked[order[pos]].rank[static_cast<std::size_t>(s)] = static_cast<int>(pos) + 1;
    }
  }
  std::sort(ranked.begin(), ranked.end(),
            [](const MethodSummary& a, const MethodSummary& b) { return a.rank[0] < b.rank[0]; });
  return ranked;
}

std::string case_identifier(std::string_view filename) {
  std::string stem = nifti_stem(fs::path(std::string(filename)));
  if (stem == std::string(filename)) {
    const auto dot = stem.find('.');
    if (dot != std::string::npos && dot > 0) stem.resize(dot);
  }
  std::size_t cut = std::string::npos;
  std::size_t start = 0;
  while (start <= stem.size()) {
    std::size_t end = stem.find('_', start);
    if (end == std::string::npos) end = stem.size();
    const std::string_view token(stem.data() + start, end - start);
    if (!token.empty() && std::all_of(token.begin(), token.end(), [](char c) { return c >= '0' && c <= '9'; })) {
      cut = end;
    }
    start = end + 1;
  }
  return cut == std::string::npos ? stem : stem.substr(0, cut);
}

namespace {

std::map<std::string, fs::path> index_directory(const fs::path& dir, std::string_view role,
                                                std::vector<std::string>& warnings) {
  if (!fs::is_directory(dir)) throw Error(ErrorKind::kIoFailure, std::string(role) + " directory " + dir.string() + " does not exist");
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && has_nifti_extension(entry.path())) files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  std::map<std::string, fs::path> index;
  for (const auto& f : files) {
    const std::string id = case_identifier(f.filename().string());
    if (!index.emplace(id, f).second) {
      warnings.push_back(std::string(role) + " file " + f.filename().string() + " repeats case " + id + "; ignored");
    }
  }
  return index;
}

}  // namespace

Pairing pair_cases(const fs::path& pred_dir, const fs::path& gt_dir) {
  Pairing out;
  const auto preds = index_directory(pred_dir, "prediction", out.warnings);
  const auto gts = index_directory(gt_dir, "ground-truth", out.warnings);
  for (const auto& [id, path] : preds) {
    const auto it = gts.find(id);
    if (it == gts.end()) {
      out.warnings.push_back("prediction " + path.filename().string() + " has no ground truth (case " + id + "); skipped");
      continue;
    }
    out.pairs.push_back({id, path, it->second});
  }
  for (const auto& [id, path] : gts) {
    if (!preds.contains(id)) {
      out.warnings.push_back("ground truth " + path.filename().string() + " has no prediction (case " + id + "); skipped");
    }
  }
  return out;
}

namespace {

std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    fields.emplace_back(line.substr(start, comma == std::string_view::npos ? line.npos : comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return fields;
}

std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (!line.empty()) lines.push_back(line);
    start = end + 1;
  }
  return lines;
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kIoFailure, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

Pairing read_manifest(const fs::path& manifest) {
  const std::string text = read_text(manifest);
  const auto lines = split_lines(text);
  if (lines.empty() || lines.front() != "case_id,pred,gt") {
    throw Error(ErrorKind::kBadCsv, manifest.string() + ": expected header case_id,pred,gt");
  }
  const fs::path base = manifest.parent_path();
  Pairing out;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto f = split_csv_line(lines[i]);
    if (f.size() != 3) throw Error(ErrorKind::kBadCsv, manifest.string() + ": line " + std::to_string(i + 1));
    auto resolve = [&](const std::string& p) { return fs::path(p).is_absolute() ? fs::path(p) : base / p; };
    out.pairs.push_back({f[0], resolve(f[1]), resolve(f[2])});
  }
  std::sort(out.pairs.begin(), out.pairs.end(),
            [](const CasePair& a, const CasePair& b) { return a.case_id < b.case_id; });
  return out;
}

DatasetEvaluation evaluate_pairs(const Pairing& pairing, const EmptyMaskPolicy& policy) {
  if (pairing.pairs.empty()) throw Error(ErrorKind::kNoMatchedCases, "no prediction/ground-truth pairs found");
  const auto n = static_cast<std::int64_t>(pairing.pairs.size());
  std::vector<CaseMetrics> cases(pairing.pairs.size());
  std::vector<std::exception_ptr> failures(pairing.pairs.size());

#pragma omp parallel for schedule(dynamic, 1)
  for (std::int64_t i = 0; i < n; ++i) {
    const CasePair& pair = pairing.pairs[i];
    try {
      auto load = [&](const fs::path& path) {
        try {
          return read_labels(path);
        } catch (const Error& e) {
          throw Error(ErrorKind::kUnreadableVolume, "case " + pair.case_id + ", " + path.string() + ": " + e.what());
        }
      };
      const LabelVolume pred = load(pair.pred);
      const LabelVolume gt = load(pair.gt);
      cases[i] = evaluate_case(pred, gt, policy, pair.case_id);
    } catch (const Error& e) {
      failures[i] = e.kind() == ErrorKind::kUnreadableVolume
                        ? std::current_exception()
                        : std::make_exception_ptr(Error(e.kind(), "case " + pair.case_id + ": " + e.what()));
    } catch (...) {
      failures[i] = std::current_exception();
    }
  }
  for (const auto& f : failures) {
    if (f) std::rethrow_exception(f);
  }
  return {std::move(cases), pairing.warnings};
}

DatasetEvaluation evaluate_dataset(const fs::path& pred_dir, const fs::path& gt_dir, const EmptyMaskPolicy& policy) {
  return evaluate_pairs(pair_cases(pred_dir, gt_dir), policy);
}

namespace {

std::string fixed(double v, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  return buf;
}

double parse_number(const std::string& field, std::size_t line) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (ec != std::errc() || ptr != field.data() + field.size()) {
    throw Error(ErrorKind::kBadCsv, "line " + std::to_string(line) + ": not a number: '" + field + "'");
  }
  return v;
}

}  // namespace

std::string render_case_csv(std::span<const CaseMetrics> cases) {
  std::string out(kCaseCsvHeader);
  out += '\n';
  for (const auto& c : cases) {
    out += c.case_id;
    for (double v : c.dsc) out += "," + fixed(v, 2);
    for (double v : c.hd95) out += "," + fixed(v, 4);
    out += '\n';
  }
  return out;
}

std::vector<CaseMetrics> parse_case_csv(std::string_view text) {
  const auto lines = split_lines(text);
  if (lines.empty() || lines.front() != kCaseCsvHeader) {
    throw Error(ErrorKind::kBadCsv, "expected header " + std::string(kCaseCsvHeader));
  }
  std::vector<CaseMetrics> cases;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto f = split_csv_line(lines[i]);
    if (f.size() != 7) throw Error(ErrorKind::kBadCsv, "line " + std::to_string(i + 1) + ": expected 7 fields");
    CaseMetrics c;
    c.case_id = f[0];
    for (std::size_t r = 0; r < 3; ++r) {
      c.dsc[r] = parse_number(f[1 + r], i + 1);
      c.hd95[r] = parse_number(f[4 + r], i + 1);
    }
    cases.push_back(std::move(c));
  }
  return cases;
}

std::string render_aggregate_table(const AggregateReport& report) {
  std::string out = "\tDSC\t\t\tHD95\t\t\n\tET\tTC\tWT\tET\tTC\tWT\n";
  const std::array<std::pair<const char*, double SummaryStats::*>, 5> rows{{
      {"Mean", &SummaryStats::mean},
      {"StdDev", &SummaryStats::std_dev},
      {"Median", &SummaryStats::median},
      {"25quantile", &SummaryStats::quantile_25},
      {"75quantile", &SummaryStats::quantile_75},
  }};
  for (const auto& [label, field] : rows) {
    out += label;
    for (const auto& s : report.dsc) out += "\t" + fixed(s.*field, 2);
    for (const auto& s : report.hd95) out += "\t" + fixed(s.*field, 2);
    out += '\n';
  }
  return out;
}

std::string render_ranking_csv(std::span<const MethodSummary> ranked) {
  std::string out = "method,avg_dsc,avg_hd95,rank_dsc_only,rank_avg_rank,rank_dsc_minus_hd95\n";
  for (const auto& m : ranked) {
    out += m.method_name + "," + fixed(m.avg_dsc, 2) + "," + fixed(m.avg_hd95, 4);
    for (int r : m.rank) out += "," + std::to_string(r);
    out += '\n';
  }
  return out;
}

namespace {

using Json = nlohmann::ordered_json;

Json stats_json(const SummaryStats& s) {
  return Json{{"mean", s.mean},
              {"std_dev", s.std_dev},
              {"median", s.median},
              {"quantile_25", s.quantile_25},
              {"quantile_75", s.quantile_75}};
}

Json aggregate_json(const AggregateReport& report) {
  Json dsc = Json::object();
  Json hd = Json::object();
  for (Region r : kRegions) {
    const auto k = static_cast<std::size_t>(r);
    dsc[std::string(region_name(r))] = stats_json(report.dsc[k]);
    hd[std::string(region_name(r))] = stats_json(report.hd95[k]);
  }
  return Json{{"n_cases", report.n_cases}, {"dsc", dsc}, {"hd95", hd}};
}

}  // namespace

std::string render_report_json(std::span<const CaseMetrics> cases, const AggregateReport& report) {
  Json rows = Json::array();
  for (const auto& c : cases) {
    rows.push_back(Json{{"case_id", c.case_id},
                        {"dsc_et", c.dsc[0]},
                        {"dsc_tc", c.dsc[1]},
                        {"dsc_wt", c.dsc[2]},
                        {"hd95_et", c.hd95[0]},
                        {"hd95_tc", c.hd95[1]},
                        {"hd95_wt", c.hd95[2]}});
  }
  return Json{{"cases", rows}, {"aggregate", aggregate_json(report)}}.dump(2) + "\n";
}

std::string render_ranking_json(std::span<const MethodSummary> ranked,
                                std::span<const std::pair<std::string, AggregateReport>> reports) {
  Json methods = Json::array();
  for (const auto& m : ranked) {
    Json ranks = Json::object();
    for (RankStrategy s : kRankStrategies) ranks[std::string(strategy_name(s))] = m.rank_for(s);
    methods.push_back(Json{{"method", m.method_name}, {"avg_dsc", m.avg_dsc}, {"avg_hd95", m.avg_hd95}, {"rank", ranks}});
  }
  Json aggregates = Json::object();
  for (const auto& [name, report] : reports) aggregates[name] = aggregate_json(report);
  return Json{{"methods", methods}, {"aggregates", aggregates}}.dump(2) + "\n";
}

}  // namespace gbm
