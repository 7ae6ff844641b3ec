#include "gbm/kernels.hpp"

namespace gbm::kernels {

namespace {

struct CountSum {
  std::size_t count = 0;
  double sum = 0.0;
  CountSum& operator+=(const CountSum& o) {
    count += o.count;
    sum += o.sum;
    return *this;
  }
};

}  // namespace

Moments nonzero_moments(std::span<const double> values) {
  const CountSum first = blocked_reduce<CountSum>(values.size(), [&](std::size_t b, std::size_t e) {
    CountSum acc;
    for (std::size_t i = b; i < e; ++i) {
      if (values[i] != 0.0) {
        ++acc.count;
        acc.sum += values[i];
      }
    }
    return acc;
  });
  Moments m;
  m.count = first.count;
  if (m.count == 0) return m;
  m.mean = first.sum / static_cast<double>(m.count);
  const double sq = blocked_reduce<double>(values.size(), [&](std::size_t b, std::size_t e) {
    double acc = 0.0;
    for (std::size_t i = b; i < e; ++i) {
      if (values[i] != 0.0) {
        const double d = values[i] - m.mean;
        acc += d * d;
      }
    }
    return acc;
  });
  m.variance = sq / static_cast<double>(m.count);
  return m;
}

}  // namespace gbm::kernels
