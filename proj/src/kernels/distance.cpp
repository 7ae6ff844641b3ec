#include <cmath>
#include <limits>

#include "gbm/kernels.hpp"

namespace gbm::kernels {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// One axis of the lower-envelope transform: out[q] = min_p f[p] + ((q-p)*w)^2
// over the finite entries of f. `site`/`boundary` are caller-owned scratch
// of length n and n+1.
void envelope_1d(const double* f, double* out, std::int64_t n, double w, std::vector<std::int64_t>& site,
                 std::vector<double>& boundary) {
  std::int64_t k = -1;
  for (std::int64_t q = 0; q < n; ++q) {
    if (f[q] == kInf) continue;
    const double xq = static_cast<double>(q) * w;
    double s = -kInf;
    while (k >= 0) {
      const std::int64_t v = site[k];
      const double xv = static_cast<double>(v) * w;
      s = ((f[q] + xq * xq) - (f[v] + xv * xv)) / (2.0 * (xq - xv));
      if (s <= boundary[k]) {
        --k;
        s = -kInf;
      } else {
        break;
      }
    }
    ++k;
    site[k] = q;
    boundary[k] = s;
  }
  if (k < 0) {
    for (std::int64_t q = 0; q < n; ++q) out[q] = kInf;
    return;
  }
  boundary[k + 1] = kInf;
  std::int64_t j = 0;
  for (std::int64_t q = 0; q < n; ++q) {
    const double xq = static_cast<double>(q) * w;
    while (boundary[j + 1] < xq) ++j;
    const double d = static_cast<double>(q - site[j]) * w;
    out[q] = d * d + f[site[j]];
  }
}

// Runs envelope_1d along `axis` for every line of the grid, in place.
void transform_axis(std::vector<double>& grid, const Index3& dims, int axis, double w) {
  const std::int64_t n = dims[axis];
  const std::int64_t stride = axis == 0 ? 1 : axis == 1 ? dims[0] : dims[0] * dims[1];
  const int a1 = axis == 0 ? 1 : 0;
  const int a2 = axis == 2 ? 1 : 2;
  const std::int64_t n1 = dims[a1];
  const std::int64_t n2 = dims[a2];
  const std::int64_t s1 = a1 == 0 ? 1 : dims[0];
  const std::int64_t s2 = a2 == 1 ? dims[0] : dims[0] * dims[1];
  const std::int64_t lines = n1 * n2;

#pragma omp parallel
  {
    std::vector<double> f(static_cast<std::size_t>(n));
    std::vector<double> out(static_cast<std::size_t>(n));
    std::vector<std::int64_t> site(static_cast<std::size_t>(n));
    std::vector<double> boundary(static_cast<std::size_t>(n) + 1);
#pragma omp for schedule(static)
    for (std::int64_t line = 0; line < lines; ++line) {
      const std::int64_t base = (line % n1) * s1 + (line / n1) * s2;
      bool any = false;
      for (std::int64_t q = 0; q < n; ++q) {
        f[q] = grid[base + q * stride];
        any = any || f[q] != kInf;
      }
      if (!any) continue;
      envelope_1d(f.data(), out.data(), n, w, site, boundary);
      for (std::int64_t q = 0; q < n; ++q) grid[base + q * stride] = out[q];
    }
  }
}

}  // namespace

std::vector<double> squared_distance_transform(std::span<const std::uint8_t> sites, const Index3& dims,
                                               const Spacing3& spacing) {
  std::vector<double> grid(sites.size());
  const auto n = static_cast<std::int64_t>(sites.size());
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < n; ++i) grid[i] = sites[i] ? 0.0 : kInf;
  for (int axis = 0; axis < 3; ++axis) transform_axis(grid, dims, axis, spacing[axis]);
  return grid;
}

std::vector<double> nearest_distances(std::span<const Index3> from, std::span<const Index3> to,
                                      const Index3& dims, const Spacing3& spacing) {
  if (from.empty()) return {};
  // The transform only needs a box holding every query and every site; the
  // separable envelope is exact on any such box.
  Index3 lo = dims;
  Index3 hi{0, 0, 0};
  auto extend = [&](const Index3& c) {
    for (int a = 0; a < 3; ++a) {
      lo[a] = std::min(lo[a], c[a]);
      hi[a] = std::max(hi[a], c[a] + 1);
    }
  };
  for (const Index3& c : from) extend(c);
  for (const Index3& c : to) extend(c);
  const Index3 box{hi[0] - lo[0], hi[1] - lo[1], hi[2] - lo[2]};

  std::vector<std::uint8_t> sites(static_cast<std::size_t>(box[0] * box[1] * box[2]), 0);
  auto local = [&](const Index3& c) {
    return static_cast<std::size_t>((c[0] - lo[0]) + box[0] * ((c[1] - lo[1]) + box[1] * (c[2] - lo[2])));
  };
  for (const Index3& c : to) sites[local(c)] = 1;
  const std::vector<double> sq = squared_distance_transform(sites, box, spacing);

  std::vector<double> out(from.size());
  const auto n = static_cast<std::int64_t>(from.size());
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < n; ++i) out[i] = std::sqrt(sq[local(from[i])]);
  return out;
}

}  // namespace gbm::kernels
