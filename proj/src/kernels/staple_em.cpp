#include <map>

#include "gbm/kernels.hpp"

namespace gbm::kernels {

namespace {

constexpr std::size_t kDenseRaterLimit = 16;

DecisionPatterns dense_patterns(std::span<const std::span<const std::uint8_t>> raters) {
  const std::size_t r = raters.size();
  const std::size_t n = raters.front().size();
  const std::size_t codes = std::size_t{1} << r;
  const auto size = static_cast<std::int64_t>(n);

  std::vector<std::uint32_t> code(n);
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < size; ++i) {
    std::uint32_t c = 0;
    for (std::size_t j = 0; j < r; ++j) c |= static_cast<std::uint32_t>(raters[j][i] != 0) << j;
    code[i] = c;
  }

  std::vector<std::size_t> histogram(codes, 0);
#pragma omp parallel
  {
    std::vector<std::size_t> local(codes, 0);
#pragma omp for schedule(static) nowait
    for (std::int64_t i = 0; i < size; ++i) ++local[code[i]];
#pragma omp critical
    for (std::size_t c = 0; c < codes; ++c) histogram[c] += local[c];
  }

  DecisionPatterns out;
  out.raters = r;
  std::vector<std::uint32_t> remap(codes, 0);
  for (std::size_t c = 0; c < codes; ++c) {
    if (histogram[c] == 0) continue;
    remap[c] = static_cast<std::uint32_t>(out.counts.size());
    out.counts.push_back(histogram[c]);
    for (std::size_t j = 0; j < r; ++j) out.decisions.push_back(static_cast<std::uint8_t>((c >> j) & 1U));
  }
  out.voxel_pattern.resize(n);
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < size; ++i) out.voxel_pattern[i] = remap[code[i]];
  return out;
}

// Many raters: distinct patterns are collected in an ordered map whose key
// lists decisions from the last rater to the first, which sorts patterns
// the same way as the dense bit code does.
DecisionPatterns sparse_patterns(std::span<const std::span<const std::uint8_t>> raters) {
  const std::size_t r = raters.size();
  const std::size_t n = raters.front().size();
  std::map<std::vector<std::uint8_t>, std::size_t> table;
  std::vector<std::uint8_t> key(r);
  auto key_of = [&](std::size_t i) {
    for (std::size_t j = 0; j < r; ++j) key[r - 1 - j] = raters[j][i] != 0;
    return key;
  };
  for (std::size_t i = 0; i < n; ++i) ++table[key_of(i)];

  DecisionPatterns out;
  out.raters = r;
  std::map<std::vector<std::uint8_t>, std::uint32_t> index;
  for (const auto& [k, count] : table) {
    index.emplace(k, static_cast<std::uint32_t>(out.counts.size()));
    out.counts.push_back(count);
    for (std::size_t j = 0; j < r; ++j) out.decisions.push_back(k[r - 1 - j]);
  }
  out.voxel_pattern.resize(n);
  for (std::size_t i = 0; i < n; ++i) out.voxel_pattern[i] = index.at(key_of(i));
  return out;
}

}  // namespace

DecisionPatterns decision_patterns(std::span<const std::span<const std::uint8_t>> raters) {
  if (raters.empty()) return {};
  return raters.size() <= kDenseRaterLimit ? dense_patterns(raters) : sparse_patterns(raters);
}

}  // namespace gbm::kernels
