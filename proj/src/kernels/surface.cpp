#include "gbm/kernels.hpp"

namespace gbm::kernels {

std::vector<std::uint8_t> surface_mask(std::span<const std::uint8_t> member, const Index3& dims) {
  const std::int64_t nx = dims[0];
  const std::int64_t ny = dims[1];
  const std::int64_t nz = dims[2];
  std::vector<std::uint8_t> surface(member.size(), 0);
  auto inside = [&](std::int64_t i, std::int64_t j, std::int64_t k) {
    return i >= 0 && j >= 0 && k >= 0 && i < nx && j < ny && k < nz && member[i + nx * (j + ny * k)] != 0;
  };
#pragma omp parallel for schedule(static)
  for (std::int64_t k = 0; k < nz; ++k) {
    for (std::int64_t j = 0; j < ny; ++j) {
      for (std::int64_t i = 0; i < nx; ++i) {
        const std::int64_t idx = i + nx * (j + ny * k);
        if (member[idx] == 0) continue;
        const bool interior = inside(i - 1, j, k) && inside(i + 1, j, k) && inside(i, j - 1, k) &&
                              inside(i, j + 1, k) && inside(i, j, k - 1) && inside(i, j, k + 1);
        surface[idx] = interior ? 0 : 1;
      }
    }
  }
  return surface;
}

}  // namespace gbm::kernels
