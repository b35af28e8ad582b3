#include "bevmap/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "bevmap/error.hpp"

namespace bevmap {

IouReport mean_iou(const LabelGrid& pred, const LabelGrid& gt, const std::vector<int>& eval_classes,
                   std::optional<int> ignore_label) {
  if (pred.height != gt.height || pred.width != gt.width) throw ValidationError("eval", "label grids differ in shape");
  IouReport report;
  double sum = 0.0;
  for (int cls : eval_classes) {
    std::size_t inter = 0;
    std::size_t uni = 0;
    for (std::size_t i = 0; i < gt.label.size(); ++i) {
      if (ignore_label && gt.label[i] == *ignore_label) continue;
      const bool p = pred.label[i] == cls;
      const bool g = gt.label[i] == cls;
      inter += p && g;
      uni += p || g;
    }
    if (uni == 0) continue;
    const double iou = static_cast<double>(inter) / static_cast<double>(uni);
    report.per_class[cls] = iou;
    sum += iou;
  }
  if (report.per_class.empty()) throw ValidationError("eval", "no evaluable class in either map");
  report.mean = sum / static_cast<double>(report.per_class.size());
  return report;
}

DepthMetricReport depth_metrics(const DepthMap& pred, const DepthMap& gt) {
  if (pred.height != gt.height || pred.width != gt.width) throw ValidationError("eval", "depth maps differ in shape");
  DepthMetricReport r;
  double abs_rel = 0.0;
  double sq = 0.0;
  double sq_log = 0.0;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < gt.depth.size(); ++i) {
    if (!pred.valid[i] || !gt.valid[i]) continue;
    const double p = pred.depth[i];
    const double g = gt.depth[i];
    if (!(p > 0.0) || !(g > 0.0)) throw ValidationError("eval", "nonpositive depth in log term");
    abs_rel += std::abs(p - g) / g;
    sq += (p - g) * (p - g);
    const double dl = std::log(p) - std::log(g);
    sq_log += dl * dl;
    hits += std::max(p / g, g / p) < kDeltaThreshold;
    ++r.count;
  }
  if (r.count == 0) throw ValidationError("eval", "no jointly valid depth cell");
  const double n = static_cast<double>(r.count);
  r.ard = abs_rel / n;
  r.rmse = std::sqrt(sq / n);
  r.rmse_log = std::sqrt(sq_log / n);
  r.delta_acc = static_cast<double>(hits) / n;
  return r;
}

}  // namespace bevmap
