// Times each OpenMP kernel against its serial reference on one synthetic
// input and prints a table. Usage: bench_kernels [grid_edge] [repeats]

#include <omp.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <numbers>
#include <random>

#include "gbm/fusion.hpp"
#include "gbm/kernels.hpp"
#include "gbm/reference.hpp"

using namespace gbm;

namespace {

template <class Fn>
double best_of(int repeats, Fn&& fn) {
  double best = 1e300;
  for (int r = 0; r < repeats; ++r) {
    const auto t0 = std::chrono::steady_clock::now();
    fn();
    best = std::min(best, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
  }
  return best;
}

void row(const char* name, double serial, double parallel) {
  std::printf("%-22s %12.4f %12.4f %9.1fx\n", name, serial * 1e3, parallel * 1e3, serial / parallel);
}

RegionMask ball(const Geometry& g, double radius, std::mt19937_64& rng, double flip) {
  std::vector<std::uint8_t> m(g.voxel_count());
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (std::size_t i = 0; i < m.size(); ++i) {
    const Index3 c = g.coords(i);
    double r2 = 0.0;
    for (int a = 0; a < 3; ++a) r2 += std::pow(c[a] - (g.dims[a] - 1) / 2.0, 2);
    m[i] = (r2 <= radius * radius) != (u(rng) < flip);
  }
  return RegionMask(g, Region::kWT, std::move(m));
}

std::vector<Index3> coords(std::span<const std::uint8_t> m, const Geometry& g) {
  std::vector<Index3> out;
  for (std::size_t i = 0; i < m.size(); ++i) {
    if (m[i]) out.push_back(g.coords(i));
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  const std::int64_t edge = argc > 1 ? std::atoll(argv[1]) : 96;
  const int repeats = argc > 2 ? std::atoi(argv[2]) : 3;
  const Geometry g = Geometry::make({edge, edge, edge}, {1.0, 1.0, 1.2});
  std::mt19937_64 rng(1);
  std::printf("grid %lld^3, %d threads, best of %d\n", static_cast<long long>(edge), omp_get_max_threads(), repeats);
  std::printf("%-22s %12s %12s %10s\n", "kernel", "serial ms", "parallel ms", "speedup");

  std::vector<double> values(g.voxel_count());
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (auto& v : values) v = u(rng) < 0.4 ? 0.0 : u(rng) * 1000.0;
  row("nonzero_moments", best_of(repeats, [&] { reference::nonzero_moments(values); }),
      best_of(repeats, [&] { kernels::nonzero_moments(values); }));

  const RegionMask a = ball(g, edge / 3.0, rng, 0.0);
  const RegionMask b = ball(g, edge / 3.0 + 1.5, rng, 0.0);
  row("surface_mask", best_of(repeats, [&] { reference::surface_mask(a.members(), g.dims); }),
      best_of(repeats, [&] { kernels::surface_mask(a.members(), g.dims); }));

  // All-pairs is quadratic; time it on a subsample and scale.
  const auto sa = coords(kernels::surface_mask(a.members(), g.dims), g);
  const auto sb = coords(kernels::surface_mask(b.members(), g.dims), g);
  const std::size_t sample = std::min<std::size_t>(sa.size(), 2000);
  const double pairs = best_of(1, [&] { reference::nearest_distances(std::span(sa).first(sample), sb, g.spacing); });
  row("nearest_distances", pairs * static_cast<double>(sa.size()) / static_cast<double>(sample),
      best_of(repeats, [&] { kernels::nearest_distances(sa, sb, g.dims, g.spacing); }));

  const double t = 20.0 * std::numbers::pi / 180.0;
  const std::array<std::array<double, 3>, 3> inv{{{1, 0, 0}, {0, std::cos(t), std::sin(t)}, {0, -std::sin(t), std::cos(t)}}};
  row("resample trilinear",
      best_of(repeats, [&] { reference::resample_rotated(values, g, inv, kernels::Sampling::kTrilinear); }),
      best_of(repeats, [&] { kernels::resample_rotated(values, g, inv, kernels::Sampling::kTrilinear); }));

  std::vector<RegionMask> raters;
  for (int r = 0; r < 3; ++r) raters.push_back(ball(g, edge / 3.0, rng, 0.05));
  StapleConfig cfg;
  cfg.max_iter = 10;
  cfg.tol = 1e-300;
  row("staple (10 iters)", best_of(1, [&] { reference::staple_binary(raters, cfg); }),
      best_of(repeats, [&] { staple_binary(raters, cfg); }));
  return 0;
}
