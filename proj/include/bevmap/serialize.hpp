#pragma once

#include <filesystem>
#include <vector>

#include "json.hpp"

#include "bevmap/align.hpp"
#include "bevmap/core.hpp"
#include "bevmap/masking.hpp"
#include "bevmap/metrics.hpp"
#include "bevmap/projection.hpp"
#include "bevmap/refine.hpp"
#include "bevmap/simulator.hpp"
#include "bevmap/warp.hpp"

namespace bevmap {

using nlohmann::json;

// JSON schemas of the external interfaces. Parsers throw ValidationError with
// stage "config" on missing or mistyped fields.

json to_json(const BevConfig& cfg);  // {"k","l","extent_z_m","extent_x_m"}
BevConfig bev_config_from_json(const json& j);

json to_json(const WarpParams& theta);  // {"box":{tx,ty,rot,log_scale},"flow":{rows,cols,data}}
WarpParams warp_params_from_json(const json& j);

json to_json(const std::vector<PixelBox>& boxes);  // [{x0,y0,x1,y1}, ...]
std::vector<PixelBox> boxes_from_json(const json& j);

json to_json(const LayoutParams& p);
LayoutParams layout_params_from_json(const json& j);
LayoutPrior layout_prior_from_json(const json& j);

json to_json(const DenseStack& stack);  // {"layers":[{"in","out","weight","bias"}]}
CriticParams critic_params_from_json(const json& j);
json to_json(const RefinerParams& p);
RefinerParams refiner_params_from_json(const json& j);

CameraIntrinsics intrinsics_from_json(const json& j);  // {"fx","fy","cx","cy"}
json to_json(const CameraIntrinsics& K);

ClassCatalog catalog_from_json(const json& j);  // [{"name","id","role"}]
json to_json(const ClassCatalog& catalog);

AlignConfig align_config_from_json(const json& j, AlignConfig base = {});
LossWeights loss_weights_from_json(const json& j, LossWeights base = {});

json to_json(const IouReport& r);
json to_json(const DepthMetricReport& r);

json read_json_file(const std::filesystem::path& path);
void write_json_file(const json& j, const std::filesystem::path& path);

}  // namespace bevmap
