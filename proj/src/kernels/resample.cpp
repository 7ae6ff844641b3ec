#include <cmath>

#include "gbm/kernels.hpp"

namespace gbm::kernels {

std::vector<double> resample_rotated(std::span<const double> src, const Geometry& geometry,
                                     const std::array<std::array<double, 3>, 3>& inverse, Sampling sampling) {
  const Index3& d = geometry.dims;
  const Spacing3& sp = geometry.spacing;
  const std::array<double, 3> center{(d[0] - 1) / 2.0, (d[1] - 1) / 2.0, (d[2] - 1) / 2.0};
  constexpr double kEdge = 1e-9;
  std::vector<double> out(src.size(), 0.0);

#pragma omp parallel for schedule(static)
  for (std::int64_t k = 0; k < d[2]; ++k) {
    for (std::int64_t j = 0; j < d[1]; ++j) {
      for (std::int64_t i = 0; i < d[0]; ++i) {
        const std::array<double, 3> p{(i - center[0]) * sp[0], (j - center[1]) * sp[1], (k - center[2]) * sp[2]};
        std::array<double, 3> s{};
        for (int r = 0; r < 3; ++r) {
          const double phys = inverse[r][0] * p[0] + inverse[r][1] * p[1] + inverse[r][2] * p[2];
          s[r] = phys / sp[r] + center[r];
        }
        double value = 0.0;
        if (sampling == Sampling::kNearest) {
          const std::int64_t si = std::llround(s[0]);
          const std::int64_t sj = std::llround(s[1]);
          const std::int64_t sk = std::llround(s[2]);
          if (geometry.contains(si, sj, sk)) value = src[geometry.linear_index(si, sj, sk)];
        } else {
          bool inside = true;
          std::array<std::int64_t, 3> lo{};
          std::array<std::int64_t, 3> hi{};
          std::array<double, 3> frac{};
          for (int a = 0; a < 3; ++a) {
            if (s[a] < -kEdge || s[a] > static_cast<double>(d[a] - 1) + kEdge) {
              inside = false;
              break;
            }
            const double c = std::clamp(s[a], 0.0, static_cast<double>(d[a] - 1));
            lo[a] = static_cast<std::int64_t>(std::floor(c));
            hi[a] = std::min(lo[a] + 1, d[a] - 1);
            frac[a] = c - static_cast<double>(lo[a]);
          }
          if (inside) {
            for (int corner = 0; corner < 8; ++corner) {
              double w = 1.0;
              std::array<std::int64_t, 3> idx{};
              for (int a = 0; a < 3; ++a) {
                const bool upper = (corner >> a) & 1;
                idx[a] = upper ? hi[a] : lo[a];
                w *= upper ? frac[a] : 1.0 - frac[a];
              }
              if (w != 0.0) value += w * src[geometry.linear_index(idx[0], idx[1], idx[2])];
            }
          }
        }
        out[geometry.linear_index(i, j, k)] = value;
      }
    }
  }
  return out;
}

}  // namespace gbm::kernels
