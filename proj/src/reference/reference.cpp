#include "gbm/reference.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace gbm::reference {

kernels::Moments nonzero_moments(std::span<const double> values) {
  kernels::Moments m;
  double sum = 0.0;
  for (double v : values) {
    if (v != 0.0) {
      ++m.count;
      sum += v;
    }
  }
  if (m.count == 0) return m;
  m.mean = sum / static_cast<double>(m.count);
  double sq = 0.0;
  for (double v : values) {
    if (v != 0.0) sq += (v - m.mean) * (v - m.mean);
  }
  m.variance = sq / static_cast<double>(m.count);
  return m;
}

std::vector<std::uint8_t> surface_mask(std::span<const std::uint8_t> member, const Index3& dims) {
  const Geometry g{dims, {1.0, 1.0, 1.0}, identity_affine()};
  std::vector<std::uint8_t> out(member.size(), 0);
  constexpr std::array<Index3, 6> kSteps{{{1, 0, 0}, {-1, 0, 0}, {0, 1, 0}, {0, -1, 0}, {0, 0, 1}, {0, 0, -1}}};
  for (std::size_t idx = 0; idx < member.size(); ++idx) {
    if (!member[idx]) continue;
    const Index3 c = g.coords(idx);
    for (const Index3& s : kSteps) {
      const std::int64_t i = c[0] + s[0], j = c[1] + s[1], k = c[2] + s[2];
      if (!g.contains(i, j, k) || !member[g.linear_index(i, j, k)]) {
        out[idx] = 1;
        break;
      }
    }
  }
  return out;
}

std::vector<double> nearest_distances(std::span<const Index3> from, std::span<const Index3> to,
                                      const Spacing3& spacing) {
  std::vector<double> out;
  out.reserve(from.size());
  for (const Index3& a : from) {
    double best = std::numeric_limits<double>::infinity();
    for (const Index3& b : to) {
      double d2 = 0.0;
      for (int ax = 0; ax < 3; ++ax) {
        const double d = static_cast<double>(a[ax] - b[ax]) * spacing[ax];
        d2 += d * d;
      }
      best = std::min(best, d2);
    }
    out.push_back(std::sqrt(best));
  }
  return out;
}

std::vector<double> resample_rotated(std::span<const double> src, const Geometry& geometry,
                                     const std::array<std::array<double, 3>, 3>& inverse,
                                     kernels::Sampling sampling) {
  const Index3& d = geometry.dims;
  const Spacing3& sp = geometry.spacing;
  std::vector<double> out(src.size(), 0.0);
  for (std::size_t idx = 0; idx < src.size(); ++idx) {
    const Index3 c = geometry.coords(idx);
    std::array<double, 3> p{};
    for (int a = 0; a < 3; ++a) p[a] = (c[a] - (d[a] - 1) / 2.0) * sp[a];
    std::array<double, 3> s{};
    for (int r = 0; r < 3; ++r) {
      s[r] = (inverse[r][0] * p[0] + inverse[r][1] * p[1] + inverse[r][2] * p[2]) / sp[r] + (d[r] - 1) / 2.0;
    }
    if (sampling == kernels::Sampling::kNearest) {
      const Index3 n{std::llround(s[0]), std::llround(s[1]), std::llround(s[2])};
      if (geometry.contains(n[0], n[1], n[2])) out[idx] = src[geometry.linear_index(n[0], n[1], n[2])];
      continue;
    }
    bool inside = true;
    for (int a = 0; a < 3; ++a) inside = inside && s[a] >= -1e-9 && s[a] <= d[a] - 1 + 1e-9;
    if (!inside) continue;
    double value = 0.0;
    for (int di = 0; di < 2; ++di) {
      for (int dj = 0; dj < 2; ++dj) {
        for (int dk = 0; dk < 2; ++dk) {
          const std::array<int, 3> up{di, dj, dk};
          Index3 at{};
          double w = 1.0;
          for (int a = 0; a < 3; ++a) {
            const double x = std::clamp(s[a], 0.0, static_cast<double>(d[a] - 1));
            const auto base = static_cast<std::int64_t>(std::floor(x));
            const double f = x - static_cast<double>(base);
            at[a] = std::min(base + up[a], d[a] - 1);
            w *= up[a] ? f : 1.0 - f;
          }
          if (w != 0.0) value += w * src[geometry.linear_index(at[0], at[1], at[2])];
        }
      }
    }
    out[idx] = value;
  }
  return out;
}

StapleResult staple_binary(std::span<const RegionMask> raters, const StapleConfig& cfg) {
  cfg.validate();
  if (raters.size() < 2) throw Error(ErrorKind::kTooFewRaters, "STAPLE needs at least two raters");
  const RegionMask& first = raters.front();
  for (const auto& r : raters) require_same_grid(first.geometry(), r.geometry(), "reference::staple_binary");
  const std::size_t n = first.size();
  const std::size_t nr = raters.size();

  std::vector<double> prior(n, cfg.fixed_prior);
  if (cfg.prior != PriorMode::kFixed) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double ones = 0.0;
      for (const auto& r : raters) ones += r[i] ? 1.0 : 0.0;
      prior[i] = ones / static_cast<double>(nr);
      total += ones;
    }
    if (cfg.prior == PriorMode::kGlobalMean) {
      std::fill(prior.begin(), prior.end(), total / (static_cast<double>(n) * static_cast<double>(nr)));
    }
  }

  const double start = std::clamp(cfg.initial_performance, cfg.clamp, 1.0 - cfg.clamp);
  std::vector<double> sens(nr, start), spec(nr, start);
  std::vector<double> w(n, 0.0);

  auto e_step = [&] {
    double ll = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double fg = prior[i];
      double bg = 1.0 - prior[i];
      for (std::size_t j = 0; j < nr; ++j) {
        fg *= raters[j][i] ? sens[j] : 1.0 - sens[j];
        bg *= raters[j][i] ? 1.0 - spec[j] : spec[j];
      }
      w[i] = fg / (fg + bg);
      ll += std::log(fg + bg);
    }
    return ll;
  };
  auto m_step = [&] {
    double fg_mass = 0.0, bg_mass = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      fg_mass += w[i];
      bg_mass += 1.0 - w[i];
    }
    for (std::size_t j = 0; j < nr; ++j) {
      double tp = 0.0, tn = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        if (raters[j][i]) {
          tp += w[i];
        } else {
          tn += 1.0 - w[i];
        }
      }
      if (fg_mass > 0.0) sens[j] = tp / fg_mass;
      if (bg_mass > 0.0) spec[j] = tn / bg_mass;
      sens[j] = std::clamp(sens[j], cfg.clamp, 1.0 - cfg.clamp);
      spec[j] = std::clamp(spec[j], cfg.clamp, 1.0 - cfg.clamp);
    }
  };

  StapleResult result{ProbabilityVolume(first.geometry(), first.region(), std::vector<double>(n, 0.0)),
                      {}, 0, {}, RegionMask(first.geometry(), first.region())};
  result.loglik_trace.push_back(e_step());
  for (int iter = 1; iter <= cfg.max_iter; ++iter) {
    m_step();
    result.iterations = iter;
    const std::vector<double> previous = w;
    result.loglik_trace.push_back(e_step());
    double change = 0.0;
    for (std::size_t i = 0; i < n; ++i) change += std::abs(w[i] - previous[i]);
    if (change / static_cast<double>(n) < cfg.tol) break;
  }
  for (std::size_t j = 0; j < nr; ++j) result.performances.push_back({sens[j], spec[j]});
  result.weights = ProbabilityVolume(first.geometry(), first.region(), w);
  result.consensus = binarize(result.weights, 0.5);
  return result;
}

}  // namespace gbm::reference
