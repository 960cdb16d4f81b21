#include <functional>
#include <cmath>
#include <limits>

#include "linesfm/pipeline.hpp"

namespace linesfm::pipeline {

namespace {

enum class Kind { kNum, kInt, kBool, kStr, kEnum };

struct KeySpec {
  std::string key;
  Kind kind;
  io::Json def;
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();
  std::vector<std::string> choices;
};

constexpr double kInf = std::numeric_limits<double>::infinity();

KeySpec Num(std::string key, double def, double lo = -kInf, double hi = kInf) {
  return {std::move(key), Kind::kNum, def, lo, hi, {}};
}
KeySpec Int(std::string key, int def, double lo = -kInf, double hi = kInf) {
  return {std::move(key), Kind::kInt, def, lo, hi, {}};
}
KeySpec Bool(std::string key, bool def) { return {std::move(key), Kind::kBool, def, 0, 0, {}}; }
KeySpec Str(std::string key, std::string def) { return {std::move(key), Kind::kStr, std::move(def), 0, 0, {}}; }
KeySpec Enum(std::string key, std::string def, std::vector<std::string> choices) {
  return {std::move(key), Kind::kEnum, std::move(def), 0, 0, std::move(choices)};
}

void AddThresholds(std::vector<KeySpec>& s, const std::string& prefix) {
  const MatchThresholds d;
  s.push_back(Num(prefix + ".t_theta", d.t_theta, 0));
  s.push_back(Num(prefix + ".t_dP", d.t_dP, 0));
  s.push_back(Num(prefix + ".t_dO", d.t_dO, 0));
  s.push_back(Num(prefix + ".t_LBD", d.t_LBD, 0));
  s.push_back(Num(prefix + ".alpha_theta", d.alpha_theta, 0));
  s.push_back(Num(prefix + ".alpha_dist", d.alpha_dist, 0));
  s.push_back(Num(prefix + ".alpha_ortho", d.alpha_ortho, 0));
  s.push_back(Num(prefix + ".alpha_lbd", d.alpha_lbd, 0));
  s.push_back(Num(prefix + ".fov_margin", d.fov_margin, 0));
}

const std::vector<KeySpec>& Schema() {
  static const std::vector<KeySpec> schema = [] {
    std::vector<KeySpec> s;
    s.push_back(Int("seed", 0, 0));
    s.push_back(Int("threads", 0, 0));
    s.push_back(Str("paths.dataset", "dataset"));
    s.push_back(Str("paths.output_dir", "out"));
    s.push_back(Str("paths.gt_cloud", ""));
    s.push_back(Num("ingest.max_skew", 0.05, 0));

    s.push_back(Enum("detect.mode", "lsd", {"lsd", "segments2d", "synthetic"}));
    s.push_back(Bool("detect.compute_lbd", true));
    const DetectionConfig dc;
    s.push_back(Int("detection.smoothness_window", dc.smoothness_window, 1));
    s.push_back(Num("detection.smoothness_threshold", dc.smoothness_threshold, 0));
    s.push_back(Bool("detection.non_max_suppression", dc.non_max_suppression));
    s.push_back(Num("detection.discontinuity_jump", dc.discontinuity_jump, 0));
    s.push_back(Num("detection.pixel_radius", dc.pixel_radius, 0));
    s.push_back(Int("detection.ransac_iters", dc.ransac_iters, 1));
    s.push_back(Num("detection.ransac_inlier_dist", dc.ransac_inlier_dist, 0));
    s.push_back(Int("detection.min_inliers", dc.min_inliers, 2));
    s.push_back(Num("detection.reproj_angle_tol", dc.reproj_angle_tol, 0));
    s.push_back(Num("detection.reproj_dist_tol", dc.reproj_dist_tol, 0));
    s.push_back(Num("detection.merge_angle_tol", dc.merge_angle_tol, 0));
    s.push_back(Num("detection.merge_line_dist", dc.merge_line_dist, 0));
    const LsdConfig lc;
    s.push_back(Num("lsd.angle_tolerance_deg", lc.angle_tolerance_deg, 0, 90));
    s.push_back(Num("lsd.gradient_quantization", lc.gradient_quantization, 0));
    s.push_back(Num("lsd.min_length", lc.min_length, 0));
    s.push_back(Num("lsd.max_width", lc.max_width, 0));
    s.push_back(Int("lsd.min_region_size", lc.min_region_size, 1));

    AddThresholds(s, "match");
    AddThresholds(s, "refine");
    s.push_back(Bool("association.local_refinement", true));

    const SolverConfig sc;
    s.push_back(Int("ba.max_iters", sc.max_iters, 0));
    s.push_back(Num("ba.initial_damping", sc.initial_damping, 0));
    s.push_back(Num("ba.damping_up", sc.damping_up, 1));
    s.push_back(Num("ba.damping_down", sc.damping_down, 0, 1));
    s.push_back(Num("ba.gradient_tolerance", sc.gradient_tolerance, 0));
    s.push_back(Num("ba.relative_cost_tolerance", sc.relative_cost_tolerance, 0));
    s.push_back(Num("ba.absolute_cost_tolerance", sc.absolute_cost_tolerance, 0));
    s.push_back(Enum("ba.loss", "none", {"none", "huber"}));
    s.push_back(Num("ba.huber_delta", sc.huber_delta, 0));
    s.push_back(Bool("ba.use_schur", sc.use_schur));
    s.push_back(Num("ba.lambda_R", 1.0, 0));
    s.push_back(Num("ba.lambda_L", 1.0, 0));
    s.push_back(Bool("ba.use_points", true));
    s.push_back(Int("ba.reassociation_rounds", 0, 0));
    s.push_back(Bool("ba.lidar_scale_gauge", true));

    s.push_back(Num("depth.voxel_size", 0.1, 0));
    s.push_back(Int("depth.occlusion_radius", 5, 0));
    s.push_back(Num("depth.occlusion_rel_tol", 0.2, 0));
    s.push_back(Int("depth.min_consistent", 2, 1));
    s.push_back(Num("depth.rel_tol", 0.05, 0));
    s.push_back(Num("depth.segment_spacing", 0.1, 0));

    s.push_back(Num("eval.threshold", 0.5, 0));
    s.push_back(Enum("eval.alignment", "none", {"none", "sim3", "se3"}));
    s.push_back(Num("eval.gt_spacing", 0.1, 0));

    const chain::SyntheticSetup ss;
    s.push_back(Int("synth.boxes", ss.boxes, 1));
    s.push_back(Int("synth.num_points", ss.num_points, 0));
    s.push_back(Bool("synth.ground_plane", ss.ground_plane));
    s.push_back(Int("synth.views", ss.views, 1));
    s.push_back(Num("synth.orbit_radius", ss.orbit_radius, 0));
    s.push_back(Num("synth.orbit_height", ss.orbit_height));
    s.push_back(Num("synth.orbit_arc", ss.orbit_arc));
    s.push_back(Int("synth.width", ss.K.width, 1));
    s.push_back(Int("synth.height", ss.K.height, 1));
    s.push_back(Num("synth.fx", ss.K.fx, 0));
    s.push_back(Num("synth.fy", ss.K.fy, 0));
    s.push_back(Int("synth.lidar_rings", 64, 1));
    s.push_back(Int("synth.lidar_points_per_ring", 1024, 1));
    s.push_back(Num("synth.lidar_fov_up", 0.3927));
    s.push_back(Num("synth.lidar_fov_down", -0.3927));
    s.push_back(Bool("synth.render_images", true));
    s.push_back(Num("synth.frame_interval", 0.1, 0));
    s.push_back(Bool("synth.perturb_first_pose", false));

    s.push_back(Num("noise.sigma_T", 0.0, 0));
    s.push_back(Num("noise.sigma_R", 0.0, 0));
    s.push_back(Num("noise.pixel_sigma", 0.0, 0));
    s.push_back(Num("noise.lidar_sigma", 0.0, 0));
    return s;
  }();
  return schema;
}

const KeySpec* Find(const std::string& key) {
  for (const auto& k : Schema()) {
    if (k.key == key) return &k;
  }
  return nullptr;
}

[[noreturn]] void Invalid(const std::string& key, const std::string& what) {
  Throw(ErrorCode::kConfigInvalid, "config key '" + key + "': " + what);
}

io::Json Checked(const KeySpec& spec, const io::Json& v) {
  switch (spec.kind) {
    case Kind::kNum: {
      if (!v.is_number()) Invalid(spec.key, "expected a number");
      const double x = v.get<double>();
      if (!std::isfinite(x) || x < spec.lo || x > spec.hi) Invalid(spec.key, "value out of range");
      return x;
    }
    case Kind::kInt: {
      if (!v.is_number_integer()) Invalid(spec.key, "expected an integer");
      const auto x = v.get<std::int64_t>();
      if (x < spec.lo || x > spec.hi || x > std::numeric_limits<int>::max()) Invalid(spec.key, "value out of range");
      return static_cast<int>(x);
    }
    case Kind::kBool:
      if (!v.is_boolean()) Invalid(spec.key, "expected true or false");
      return v;
    case Kind::kStr:
      if (!v.is_string()) Invalid(spec.key, "expected a string");
      return v;
    case Kind::kEnum: {
      if (!v.is_string()) Invalid(spec.key, "expected a string");
      const auto s = v.get<std::string>();
      for (const auto& c : spec.choices) {
        if (c == s) return v;
      }
      std::string allowed;
      for (const auto& c : spec.choices) allowed += (allowed.empty() ? "" : ", ") + c;
      Invalid(spec.key, "must be one of: " + allowed);
    }
  }
  return v;
}

template <typename Fn>
void Revalidate(const std::string& section, Fn fn) {
  try {
    fn();
  } catch (const Error& e) {
    Throw(ErrorCode::kConfigInvalid, "config section '" + section + "': " + e.what());
  }
}

MatchThresholds ThresholdsAt(const Config& c, const std::string& prefix) {
  MatchThresholds t;
  t.t_theta = c.Num(prefix + ".t_theta");
  t.t_dP = c.Num(prefix + ".t_dP");
  t.t_dO = c.Num(prefix + ".t_dO");
  t.t_LBD = c.Num(prefix + ".t_LBD");
  t.alpha_theta = c.Num(prefix + ".alpha_theta");
  t.alpha_dist = c.Num(prefix + ".alpha_dist");
  t.alpha_ortho = c.Num(prefix + ".alpha_ortho");
  t.alpha_lbd = c.Num(prefix + ".alpha_lbd");
  t.fov_margin = c.Num(prefix + ".fov_margin");
  Revalidate(prefix, [&] { t.Validate(); });
  return t;
}

}  // namespace

Config::Config() : values_(io::Json::object()), base_dir_(".") {
  for (const auto& k : Schema()) values_[k.key] = k.def;
}

Config Config::Load(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) Throw(ErrorCode::kConfigInvalid, "config file not found: " + path.string());
  io::Json doc;
  try {
    doc = io::ReadJson(path);
  } catch (const Error& e) {
    Throw(ErrorCode::kConfigInvalid, e.what());
  }
  return FromJson(doc, path.parent_path().empty() ? std::filesystem::path(".") : path.parent_path());
}

Config Config::FromJson(const io::Json& doc, const std::filesystem::path& base_dir) {
  if (!doc.is_object()) Throw(ErrorCode::kConfigInvalid, "config must be a JSON object");
  Config c;
  c.base_dir_ = base_dir;
  // Sections may be nested objects or dotted keys.
  std::function<void(const io::Json&, const std::string&)> load = [&](const io::Json& obj, const std::string& prefix) {
    for (const auto& [name, value] : obj.items()) {
      const std::string key = prefix.empty() ? name : prefix + "." + name;
      if (value.is_object() && !Find(key)) {
        load(value, key);
      } else {
        c.Set(key, value);
      }
    }
  };
  load(doc, "");
  // Cross-module invariants.
  c.Detection();
  c.Match();
  c.Chain();
  c.Noise();
  return c;
}

void Config::Set(const std::string& key, const io::Json& value) {
  const KeySpec* spec = Find(key);
  if (!spec) Throw(ErrorCode::kConfigInvalid, "unknown config key '" + key + "'");
  values_[key] = Checked(*spec, value);
}

double Config::Num(const std::string& key) const { return values_.at(key).get<double>(); }
int Config::Int(const std::string& key) const { return values_.at(key).get<int>(); }
bool Config::Bool(const std::string& key) const { return values_.at(key).get<bool>(); }
std::string Config::Str(const std::string& key) const { return values_.at(key).get<std::string>(); }

std::filesystem::path Config::Path(const std::string& key) const {
  const std::filesystem::path p = Str(key);
  if (p.empty() || p.is_absolute()) return p;
  return base_dir_ / p;
}

std::string Config::Hash() const { return io::Sha256Hex(values_.dump()); }

std::vector<std::string> Config::Keys() {
  std::vector<std::string> keys;
  for (const auto& k : Schema()) keys.push_back(k.key);
  return keys;
}

DetectionConfig Config::Detection() const {
  DetectionConfig d;
  d.smoothness_window = Int("detection.smoothness_window");
  d.smoothness_threshold = Num("detection.smoothness_threshold");
  d.non_max_suppression = Bool("detection.non_max_suppression");
  d.discontinuity_jump = Num("detection.discontinuity_jump");
  d.pixel_radius = Num("detection.pixel_radius");
  d.ransac_iters = Int("detection.ransac_iters");
  d.ransac_inlier_dist = Num("detection.ransac_inlier_dist");
  d.min_inliers = Int("detection.min_inliers");
  d.reproj_angle_tol = Num("detection.reproj_angle_tol");
  d.reproj_dist_tol = Num("detection.reproj_dist_tol");
  d.merge_angle_tol = Num("detection.merge_angle_tol");
  d.merge_line_dist = Num("detection.merge_line_dist");
  d.rng_seed = static_cast<std::uint64_t>(Int("seed"));
  Revalidate("detection", [&] { d.Validate(); });
  return d;
}

LsdConfig Config::Lsd() const {
  LsdConfig l;
  l.angle_tolerance_deg = Num("lsd.angle_tolerance_deg");
  l.gradient_quantization = Num("lsd.gradient_quantization");
  l.min_length = Num("lsd.min_length");
  l.max_width = Num("lsd.max_width");
  l.min_region_size = Int("lsd.min_region_size");
  return l;
}

MatchThresholds Config::Match() const { return ThresholdsAt(*this, "match"); }

chain::ChainOptions Config::Chain() const {
  chain::ChainOptions o;
  o.thresholds = Match();
  o.refine_thresholds = ThresholdsAt(*this, "refine");
  o.clustering.local_refinement = Bool("association.local_refinement");
  o.reassociation_rounds = Int("ba.reassociation_rounds");
  o.lidar_scale_gauge = Bool("ba.lidar_scale_gauge");
  o.lambda_R = Num("ba.lambda_R");
  o.lambda_L = Num("ba.lambda_L");
  SolverConfig& s = o.solver;
  s.max_iters = Int("ba.max_iters");
  s.initial_damping = Num("ba.initial_damping");
  s.damping_up = Num("ba.damping_up");
  s.damping_down = Num("ba.damping_down");
  s.gradient_tolerance = Num("ba.gradient_tolerance");
  s.relative_cost_tolerance = Num("ba.relative_cost_tolerance");
  s.absolute_cost_tolerance = Num("ba.absolute_cost_tolerance");
  s.loss = Str("ba.loss") == "huber" ? LossType::kHuber : LossType::kNone;
  s.huber_delta = Num("ba.huber_delta");
  s.use_schur = Bool("ba.use_schur");
  Revalidate("ba", [&] { s.Validate(); });
  return o;
}

FusionConfig Config::Fusion() const {
  FusionConfig f;
  f.min_consistent = Int("depth.min_consistent");
  f.rel_tol = Num("depth.rel_tol");
  f.merge_voxel = 0.5 * Num("depth.voxel_size");
  return f;
}

synthetic::NoiseSpec Config::Noise() const {
  synthetic::NoiseSpec n;
  n.sigma_T = Num("noise.sigma_T");
  n.sigma_R = Num("noise.sigma_R");
  n.pixel_sigma = Num("noise.pixel_sigma");
  n.lidar_sigma = Num("noise.lidar_sigma");
  n.seed = static_cast<std::uint64_t>(Int("seed"));
  Revalidate("noise", [&] { n.Validate(); });
  return n;
}

chain::SyntheticSetup Config::Synthetic() const {
  chain::SyntheticSetup s;
  s.boxes = Int("synth.boxes");
  s.num_points = Int("synth.num_points");
  s.ground_plane = Bool("synth.ground_plane");
  s.views = Int("synth.views");
  s.orbit_radius = Num("synth.orbit_radius");
  s.orbit_height = Num("synth.orbit_height");
  s.orbit_arc = Num("synth.orbit_arc");
  s.K.width = Int("synth.width");
  s.K.height = Int("synth.height");
  s.K.fx = Num("synth.fx");
  s.K.fy = Num("synth.fy");
  s.K.cx = 0.5 * (s.K.width - 1);
  s.K.cy = 0.5 * (s.K.height - 1);
  s.noise = Noise();
  s.scene_seed = static_cast<std::uint64_t>(Int("seed"));
  return s;
}

}  // namespace linesfm::pipeline
