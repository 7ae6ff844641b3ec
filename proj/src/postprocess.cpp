#include "gbm/postprocess.hpp"

#include <vector>

namespace gbm {

LabelVolume et_threshold_relabel(const LabelVolume& labels, const PostprocessConfig& cfg) {
  if (count_label(labels, 4) >= cfg.et_threshold) return labels;
  std::vector<std::uint8_t> out(labels.labels().begin(), labels.labels().end());
  for (auto& l : out) {
    if (l == 4) l = 1;
  }
  return LabelVolume(labels.geometry(), std::move(out));
}

}  // namespace gbm
