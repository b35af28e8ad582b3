#pragma once

#include <map>
#include <optional>
#include <vector>

#include "bevmap/core.hpp"

namespace bevmap {

struct IouReport {
  std::map<int, double> per_class;  // only classes present in pred or gt
  double mean = 0.0;
};

/// IoU per evaluated class over cells where gt != ignore_label. Classes absent
/// from both maps are left out of the mean. Throws if none is evaluable.
IouReport mean_iou(const LabelGrid& pred, const LabelGrid& gt, const std::vector<int>& eval_classes,
                   std::optional<int> ignore_label = std::nullopt);

inline constexpr double kDeltaThreshold = 1.25;

struct DepthMetricReport {
  double ard = 0.0;
  double rmse = 0.0;
  double rmse_log = 0.0;
  double delta_acc = 0.0;
  std::size_t count = 0;
};

/// Depth errors over jointly valid cells; delta_acc counts max(p/g, g/p) < 1.25.
DepthMetricReport depth_metrics(const DepthMap& pred, const DepthMap& gt);

}  // namespace bevmap
