// SPDX-License-Identifier: Apache-2.0
#include <voxtrack/tracker.hpp>

#include <cstdio>
#include <fstream>
#include <sstream>

namespace voxtrack {

void TrackerConfig::validate() const {
  const auto check = [](bool ok, const char* what) {
    if (!ok) raise(ErrorCode::BadConfig, what);
  };
  check(delta_v > 0, "delta_v must be positive");
  check(alpha >= 0, "alpha must be non-negative");
  check(tau_iou >= 0 && tau_iou <= 1, "tau_iou must be in [0,1]");
  check(score_low < score_high, "score_low must be below score_high");
  check(score_low >= 0 && score_high <= 1, "score thresholds must be in [0,1]");
  check(min_hits >= 1, "min_hits must be at least 1");
  check(max_age >= 1, "max_age must be at least 1");
  check(weights.w_iou >= 0 && weights.w_docm >= 0 && weights.w_app >= 0,
        "weights must be non-negative");
  check(weights.w_iou > 0 || weights.w_docm > 0 || weights.w_app > 0,
        "at least one weight must be positive");
  check(weights.gate_iou >= 0 && weights.gate_iou <= 1, "gate_iou must be in [0,1]");
  check(gate_iou_low >= 0 && gate_iou_low <= 1, "gate_iou_low must be in [0,1]");
  check(kappa >= 0, "kappa must be non-negative");
  check(delta_t_hist >= 1, "delta_t_hist must be at least 1");
  check(ema_embedding >= 0 && ema_embedding <= 1, "ema_embedding must be in [0,1]");
  check(q_depth > 0 && q_depth_vel > 0 && r_depth > 0,
        "noise variances must be positive");
  check(threads >= 1, "threads must be at least 1");
}

NoiseConfig TrackerConfig::noise() const {
  NoiseConfig n = NoiseConfig::defaults();
  n.q_base(4, 4) = q_depth;
  n.q_base(8, 8) = q_depth_vel;
  n.r(4, 4) = r_depth;
  n.alpha = alpha;
  n.tau_iou = tau_iou;
  return n;
}

namespace {

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

const char* fmt_bool(bool b) { return b ? "true" : "false"; }

bool parse_bool(const std::string& v, const std::string& key) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  raise(ErrorCode::BadConfig, key + ": expected true/false, got '" + v + "'");
}

double parse_double(const std::string& v, const std::string& key) {
  std::size_t pos = 0;
  double out = 0;
  try {
    out = std::stod(v, &pos);
  } catch (const std::exception&) {
    raise(ErrorCode::BadConfig, key + ": not a number: '" + v + "'");
  }
  if (pos != v.size())
    raise(ErrorCode::BadConfig, key + ": trailing characters in '" + v + "'");
  return out;
}

int parse_int(const std::string& v, const std::string& key) {
  const double d = parse_double(v, key);
  const int i = static_cast<int>(d);
  if (static_cast<double>(i) != d)
    raise(ErrorCode::BadConfig, key + ": expected integer, got '" + v + "'");
  return i;
}

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

}  // namespace

std::string serialize_config(const TrackerConfig& c) {
  std::ostringstream out;
  out << "delta_v=" << fmt_double(c.delta_v) << "\n";
  out << "alpha=" << fmt_double(c.alpha) << "\n";
  out << "tau_iou=" << fmt_double(c.tau_iou) << "\n";
  out << "score_high=" << fmt_double(c.score_high) << "\n";
  out << "score_low=" << fmt_double(c.score_low) << "\n";
  out << "min_hits=" << c.min_hits << "\n";
  out << "max_age=" << c.max_age << "\n";
  out << "w_iou=" << fmt_double(c.weights.w_iou) << "\n";
  out << "w_docm=" << fmt_double(c.weights.w_docm) << "\n";
  out << "w_app=" << fmt_double(c.weights.w_app) << "\n";
  out << "gate_iou=" << fmt_double(c.weights.gate_iou) << "\n";
  out << "gate_iou_low=" << fmt_double(c.gate_iou_low) << "\n";
  out << "occlusion_metric="
      << (c.occlusion_metric == OcclusionMetric::Box2D ? "box2d" : "voxel3d")
      << "\n";
  out << "projection_mode="
      << (c.projection_mode == ProjectionMode::MaskGuided ? "mask" : "bbox")
      << "\n";
  out << "kappa=" << fmt_double(c.kappa) << "\n";
  out << "iou_mode=" << (c.iou_mode == IouMode::Voxel3D ? "voxel3d" : "box2d")
      << "\n";
  out << "danc=" << fmt_bool(c.danc) << "\n";
  out << "docm=" << fmt_bool(c.docm) << "\n";
  out << "track_cloud_mode="
      << (c.track_cloud_mode == TrackCloudMode::PredictTranslate ? "translate"
                                                                 : "static")
      << "\n";
  out << "delta_t_hist=" << c.delta_t_hist << "\n";
  out << "ema_embedding=" << fmt_double(c.ema_embedding) << "\n";
  out << "q_depth=" << fmt_double(c.q_depth) << "\n";
  out << "q_depth_vel=" << fmt_double(c.q_depth_vel) << "\n";
  out << "r_depth=" << fmt_double(c.r_depth) << "\n";
  out << "threads=" << c.threads << "\n";
  return out.str();
}

void apply_config_entry(TrackerConfig& c, const std::string& key,
                        const std::string& value) {
  if (key == "delta_v") c.delta_v = parse_double(value, key);
  else if (key == "alpha") c.alpha = parse_double(value, key);
  else if (key == "tau_iou") c.tau_iou = parse_double(value, key);
  else if (key == "score_high") c.score_high = parse_double(value, key);
  else if (key == "score_low") c.score_low = parse_double(value, key);
  else if (key == "min_hits") c.min_hits = parse_int(value, key);
  else if (key == "max_age") c.max_age = parse_int(value, key);
  else if (key == "w_iou") c.weights.w_iou = parse_double(value, key);
  else if (key == "w_docm") c.weights.w_docm = parse_double(value, key);
  else if (key == "w_app") c.weights.w_app = parse_double(value, key);
  else if (key == "gate_iou") c.weights.gate_iou = parse_double(value, key);
  else if (key == "gate_iou_low") c.gate_iou_low = parse_double(value, key);
  else if (key == "occlusion_metric") {
    if (value == "box2d") c.occlusion_metric = OcclusionMetric::Box2D;
    else if (value == "voxel3d") c.occlusion_metric = OcclusionMetric::Voxel3D;
    else raise(ErrorCode::BadConfig, "occlusion_metric: unknown value '" + value + "'");
  } else if (key == "projection_mode") {
    if (value == "mask") c.projection_mode = ProjectionMode::MaskGuided;
    else if (value == "bbox") c.projection_mode = ProjectionMode::BoundingBox;
    else raise(ErrorCode::BadConfig, "projection_mode: unknown value '" + value + "'");
  } else if (key == "kappa") c.kappa = parse_double(value, key);
  else if (key == "iou_mode") {
    if (value == "voxel3d") c.iou_mode = IouMode::Voxel3D;
    else if (value == "box2d") c.iou_mode = IouMode::Box2D;
    else raise(ErrorCode::BadConfig, "iou_mode: unknown value '" + value + "'");
  } else if (key == "danc") c.danc = parse_bool(value, key);
  else if (key == "docm") c.docm = parse_bool(value, key);
  else if (key == "track_cloud_mode") {
    if (value == "translate") c.track_cloud_mode = TrackCloudMode::PredictTranslate;
    else if (value == "static") c.track_cloud_mode = TrackCloudMode::StaticLast;
    else raise(ErrorCode::BadConfig, "track_cloud_mode: unknown value '" + value + "'");
  } else if (key == "delta_t_hist") c.delta_t_hist = parse_int(value, key);
  else if (key == "ema_embedding") c.ema_embedding = parse_double(value, key);
  else if (key == "q_depth") c.q_depth = parse_double(value, key);
  else if (key == "q_depth_vel") c.q_depth_vel = parse_double(value, key);
  else if (key == "r_depth") c.r_depth = parse_double(value, key);
  else if (key == "threads") c.threads = parse_int(value, key);
  else raise(ErrorCode::BadConfig, "unknown config key '" + key + "'");
}

TrackerConfig parse_config_text(const std::string& text) {
  TrackerConfig c;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      raise(ErrorCode::BadConfig, "expected key=value, got '" + line + "'");
    apply_config_entry(c, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  c.validate();
  return c;
}

TrackerConfig load_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) raise(ErrorCode::MissingFile, path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str());
}

std::string RunStats::to_text(const TrackerConfig& config) const {
  std::ostringstream out;
  out << "frames=" << frames << "\n";
  char line[64];
  std::snprintf(line, sizeof(line), "total_ms=%.3f\n", total_ms);
  out << line;
  std::snprintf(line, sizeof(line), "mean_frame_ms=%.3f\n",
                frames > 0 ? total_ms / frames : 0.0);
  out << line;
  std::snprintf(line, sizeof(line), "max_frame_ms=%.3f\n", max_frame_ms);
  out << line;
  out << "voxel_cap_hits=" << voxel_cap_hits << "\n";
  out << "iou_pairs=" << iou_pairs << "\n";
  out << "iou_pairs_skipped=" << iou_pairs_skipped << "\n";
  out << "tracks_created=" << tracks_created << "\n";
  out << "tracks_removed=" << tracks_removed << "\n";
  out << "rows_emitted=" << rows_emitted << "\n";
  out << "kernels=" << kernel_variant << "\n";
  out << "--- config ---\n" << serialize_config(config);
  return out.str();
}

}  // namespace voxtrack
