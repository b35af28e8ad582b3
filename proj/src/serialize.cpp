#include "bevmap/serialize.hpp"

#include <fstream>
#include <iomanip>

#include "bevmap/error.hpp"

namespace bevmap {
namespace {

template <class T>
T field(const json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) throw ValidationError("config", std::string("missing field '") + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ValidationError("config", std::string("field '") + key + "': " + e.what());
  }
}

template <class T>
void optional_field(const json& j, const char* key, T& out) {
  if (j.is_object() && j.contains(key)) out = field<T>(j, key);
}

json stack_json(const DenseStack& stack) {
  json layers = json::array();
  for (const auto& l : stack.layers) {
    layers.push_back({{"in", l.in}, {"out", l.out}, {"weight", l.weight}, {"bias", l.bias}});
  }
  return {{"layers", layers}};
}

void stack_from_json(const json& j, DenseStack& stack) {
  const auto layers = field<json>(j, "layers");
  if (!layers.is_array()) throw ValidationError("config", "'layers' must be an array");
  for (const auto& lj : layers) {
    DenseLayer l(field<int>(lj, "in"), field<int>(lj, "out"));
    l.weight = field<std::vector<double>>(lj, "weight");
    l.bias = field<std::vector<double>>(lj, "bias");
    if (l.in <= 0 || l.out <= 0 || l.weight.size() != static_cast<std::size_t>(l.in) * l.out ||
        l.bias.size() != static_cast<std::size_t>(l.out)) {
      throw ValidationError("config", "layer shape does not match its weights");
    }
    if (!stack.layers.empty() && stack.layers.back().out != l.in) {
      throw ValidationError("config", "consecutive layer sizes do not chain");
    }
    stack.layers.push_back(std::move(l));
  }
}

}  // namespace

json to_json(const BevConfig& cfg) {
  return {{"k", cfg.rows}, {"l", cfg.cols}, {"extent_z_m", cfg.extent_z}, {"extent_x_m", cfg.extent_x}};
}

BevConfig bev_config_from_json(const json& j) {
  BevConfig cfg;
  optional_field(j, "k", cfg.rows);
  optional_field(j, "l", cfg.cols);
  optional_field(j, "extent_z_m", cfg.extent_z);
  optional_field(j, "extent_x_m", cfg.extent_x);
  cfg.validate();
  return cfg;
}

json to_json(const WarpParams& theta) {
  return {{"box",
           {{"tx", theta.box.tx},
            {"ty", theta.box.ty},
            {"rot", theta.box.rotation},
            {"log_scale", theta.box.log_scale}}},
          {"flow", {{"rows", theta.flow.rows}, {"cols", theta.flow.cols}, {"data", theta.flow.data}}}};
}

WarpParams warp_params_from_json(const json& j) {
  const auto box = field<json>(j, "box");
  const auto flow = field<json>(j, "flow");
  WarpParams theta = WarpParams::identity(field<int>(flow, "rows"), field<int>(flow, "cols"));
  theta.box = {field<double>(box, "tx"), field<double>(box, "ty"), field<double>(box, "rot"),
               field<double>(box, "log_scale")};
  auto data = field<std::vector<double>>(flow, "data");
  if (data.size() != theta.flow.data.size()) throw ValidationError("config", "flow data length mismatch");
  theta.flow.data = std::move(data);
  theta.validate();
  return theta;
}

json to_json(const std::vector<PixelBox>& boxes) {
  json a = json::array();
  for (const auto& b : boxes) a.push_back({{"x0", b.x0}, {"y0", b.y0}, {"x1", b.x1}, {"y1", b.y1}});
  return a;
}

std::vector<PixelBox> boxes_from_json(const json& j) {
  if (!j.is_array()) throw ValidationError("config", "boxes must be a JSON array");
  std::vector<PixelBox> boxes;
  for (const auto& b : j) {
    boxes.push_back({field<int>(b, "x0"), field<int>(b, "y0"), field<int>(b, "x1"), field<int>(b, "y1")});
  }
  return boxes;
}

json to_json(const LayoutParams& p) {
  return {{"topology", to_string(p.topology)},
          {"lanes_per_direction", p.lanes_per_direction},
          {"lane_width_m", p.lane_width},
          {"curve_radius_m", p.curve_radius},
          {"curve_direction", p.curve_direction},
          {"intersection_distance_m", p.intersection_distance},
          {"branch_side", p.branch_side},
          {"sidewalk", p.sidewalk},
          {"sidewalk_width_m", p.sidewalk_width},
          {"heading_jitter_deg", p.heading_jitter_deg}};
}

LayoutParams layout_params_from_json(const json& j) {
  LayoutParams p;
  p.topology = parse_topology(field<std::string>(j, "topology"));
  optional_field(j, "lanes_per_direction", p.lanes_per_direction);
  optional_field(j, "lane_width_m", p.lane_width);
  optional_field(j, "curve_radius_m", p.curve_radius);
  optional_field(j, "curve_direction", p.curve_direction);
  optional_field(j, "intersection_distance_m", p.intersection_distance);
  optional_field(j, "branch_side", p.branch_side);
  optional_field(j, "sidewalk", p.sidewalk);
  optional_field(j, "sidewalk_width_m", p.sidewalk_width);
  optional_field(j, "heading_jitter_deg", p.heading_jitter_deg);
  return p;
}

LayoutPrior layout_prior_from_json(const json& j) {
  LayoutPrior p;
  if (j.is_object() && j.contains("topology_weights")) {
    const auto w = field<std::vector<double>>(j, "topology_weights");
    if (w.size() != 4) throw ValidationError("config", "topology_weights needs four entries");
    std::copy(w.begin(), w.end(), p.topology_weights.begin());
  }
  optional_field(j, "min_lanes", p.min_lanes);
  optional_field(j, "max_lanes", p.max_lanes);
  optional_field(j, "min_lane_width_m", p.min_lane_width);
  optional_field(j, "max_lane_width_m", p.max_lane_width);
  optional_field(j, "sidewalk_probability", p.sidewalk_probability);
  optional_field(j, "max_jitter_deg", p.max_jitter_deg);
  return p;
}

json to_json(const DenseStack& stack) { return stack_json(stack); }

CriticParams critic_params_from_json(const json& j) {
  CriticParams p;
  stack_from_json(j, p);
  if (p.layers.empty() || p.output_size() != 1) throw ValidationError("config", "critic must have a scalar output");
  return p;
}

json to_json(const RefinerParams& p) {
  auto j = stack_json(p);
  j["rows"] = p.rows;
  j["cols"] = p.cols;
  j["channels"] = p.channels;
  return j;
}

RefinerParams refiner_params_from_json(const json& j) {
  RefinerParams p;
  p.rows = field<int>(j, "rows");
  p.cols = field<int>(j, "cols");
  p.channels = field<int>(j, "channels");
  stack_from_json(j, p);
  const int n = p.rows * p.cols * p.channels;
  if (p.layers.size() != 2 || p.input_size() != n || p.output_size() != n) {
    throw ValidationError("config", "refiner layers do not match its map shape");
  }
  return p;
}

CameraIntrinsics intrinsics_from_json(const json& j) {
  CameraIntrinsics K{field<double>(j, "fx"), field<double>(j, "fy"), field<double>(j, "cx"), field<double>(j, "cy")};
  K.validate();
  return K;
}

json to_json(const CameraIntrinsics& K) { return {{"fx", K.fx}, {"fy", K.fy}, {"cx", K.cx}, {"cy", K.cy}}; }

ClassCatalog catalog_from_json(const json& j) {
  if (!j.is_array()) throw ValidationError("config", "catalog must be a JSON array");
  std::vector<ClassInfo> classes;
  for (const auto& c : j) {
    const auto role = field<std::string>(c, "role");
    ClassRole r;
    if (role == "foreground") {
      r = ClassRole::kForeground;
    } else if (role == "background") {
      r = ClassRole::kBackground;
    } else if (role == "unknown") {
      r = ClassRole::kUnknown;
    } else {
      throw ValidationError("config", "unknown class role '" + role + "'");
    }
    classes.push_back({field<std::string>(c, "name"), field<int>(c, "id"), r});
  }
  return ClassCatalog(std::move(classes));
}

json to_json(const ClassCatalog& catalog) {
  json a = json::array();
  for (const auto& c : catalog.classes()) {
    const char* role = c.role == ClassRole::kForeground   ? "foreground"
                       : c.role == ClassRole::kBackground ? "background"
                                                          : "unknown";
    a.push_back({{"name", c.name}, {"id", c.id}, {"role", role}});
  }
  return a;
}

AlignConfig align_config_from_json(const json& j, AlignConfig base) {
  optional_field(j, "lambda2", base.lambda2);
  optional_field(j, "lambda3", base.lambda3);
  optional_field(j, "max_iters", base.max_iters);
  optional_field(j, "step_size", base.step_size);
  optional_field(j, "convergence_tol", base.convergence_tol);
  optional_field(j, "restarts", base.restarts);
  optional_field(j, "flow_rows", base.flow_rows);
  optional_field(j, "flow_cols", base.flow_cols);
  optional_field(j, "blur_sigmas", base.blur_sigmas);
  base.validate();
  return base;
}

LossWeights loss_weights_from_json(const json& j, LossWeights base) {
  optional_field(j, "lambda", base.lambda);
  optional_field(j, "clip_c", base.clip_c);
  optional_field(j, "critic_lr", base.critic_lr);
  optional_field(j, "gen_lr", base.gen_lr);
  base.validate();
  return base;
}

json to_json(const IouReport& r) {
  json per = json::object();
  for (const auto& [cls, iou] : r.per_class) per[std::to_string(cls)] = iou;
  return {{"per_class", per}, {"mean_iou", r.mean}};
}

json to_json(const DepthMetricReport& r) {
  return {{"ard", r.ard}, {"rmse", r.rmse}, {"rmse_log", r.rmse_log}, {"delta_acc", r.delta_acc}, {"count", r.count}};
}

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("load", "cannot open '" + path.string() + "'");
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ValidationError("load", "'" + path.string() + "': " + e.what());
  }
}

void write_json_file(const json& j, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw ValidationError("save", "cannot open '" + path.string() + "' for writing");
  out << std::setw(2) << j << "\n";
}

}  // namespace bevmap
