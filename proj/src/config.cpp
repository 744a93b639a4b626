#include "roadscale/config.hpp"

#include <charconv>
#include <cmath>
#include <functional>
#include <map>
#include <numbers>
#include <sstream>

#include "roadscale/errors.hpp"
#include "roadscale/io.hpp"

namespace roadscale {

std::string_view to_string(MotionSource s) { return s == MotionSource::Vo ? "vo" : "essential"; }

double PipelineConfig::theta0_rad() const { return theta0_deg * std::numbers::pi / 180.0; }

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

double to_double(const std::string& v) {
  double out = 0.0;
  std::string_view s = v;
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(out)) throw std::invalid_argument("number");
  return out;
}

template <typename Int>
Int to_int(const std::string& v) {
  Int out{};
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) throw std::invalid_argument("integer");
  return out;
}

std::uint8_t to_label(const std::string& v) {
  const int x = to_int<int>(v);
  if (x < 0 || x > 255) throw std::invalid_argument("label");
  return static_cast<std::uint8_t>(x);
}

bool to_bool(const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw std::invalid_argument("bool");
}

std::set<std::uint8_t> to_label_set(const std::string& v) {
  std::set<std::uint8_t> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.insert(to_label(item));
  }
  return out;
}

using Setter = std::function<void(PipelineConfig&, const std::string&)>;

const std::map<std::string, Setter, std::less<>>& setters() {
  static const std::map<std::string, Setter, std::less<>> table = {
      {"fx", [](PipelineConfig& c, const std::string& v) { c.scene.fx = to_double(v); }},
      {"fy", [](PipelineConfig& c, const std::string& v) { c.scene.fy = to_double(v); }},
      {"cx", [](PipelineConfig& c, const std::string& v) { c.scene.cx = to_double(v); }},
      {"cy", [](PipelineConfig& c, const std::string& v) { c.scene.cy = to_double(v); }},
      {"image_width", [](PipelineConfig& c, const std::string& v) { c.scene.image_width = to_int<int>(v); }},
      {"image_height", [](PipelineConfig& c, const std::string& v) { c.scene.image_height = to_int<int>(v); }},
      {"camera_height_m", [](PipelineConfig& c, const std::string& v) { c.scene.camera_height_m = to_double(v); }},
      {"road_label", [](PipelineConfig& c, const std::string& v) { c.scene.road_label = to_label(v); }},
      {"dynamic_labels", [](PipelineConfig& c, const std::string& v) { c.dynamic_labels = to_label_set(v); }},
      {"theta0_deg", [](PipelineConfig& c, const std::string& v) { c.theta0_deg = to_double(v); }},
      {"beta_a", [](PipelineConfig& c, const std::string& v) { c.beta_a = to_int<int>(v); }},
      {"window_q", [](PipelineConfig& c, const std::string& v) { c.window_q = to_int<std::size_t>(v); }},
      {"filter_sigma", [](PipelineConfig& c, const std::string& v) { c.filter_sigma = to_double(v); }},
      {"min_points", [](PipelineConfig& c, const std::string& v) { c.min_points = to_int<std::size_t>(v); }},
      {"seed", [](PipelineConfig& c, const std::string& v) { c.seed = to_int<std::uint64_t>(v); }},
      {"ransac_iterations", [](PipelineConfig& c, const std::string& v) { c.essential.iterations = to_int<int>(v); }},
      {"ransac_sampson_px", [](PipelineConfig& c, const std::string& v) { c.essential.sampson_px = to_double(v); }},
      {"ransac_min_disparity_px", [](PipelineConfig& c, const std::string& v) { c.essential.min_disparity = to_double(v); }},
      {"ransac_confidence", [](PipelineConfig& c, const std::string& v) { c.essential.confidence = to_double(v); }},
      {"plane_iterations", [](PipelineConfig& c, const std::string& v) { c.plane.iterations = to_int<int>(v); }},
      {"plane_dist_tol", [](PipelineConfig& c, const std::string& v) { c.plane.dist_tol = to_double(v); }},
      {"plane_min_inliers", [](PipelineConfig& c, const std::string& v) { c.plane.min_inliers = to_int<std::size_t>(v); }},
      {"motion_source",
       [](PipelineConfig& c, const std::string& v) {
         if (v == "vo") c.motion_source = MotionSource::Vo;
         else if (v == "essential") c.motion_source = MotionSource::Essential;
         else throw std::invalid_argument("motion_source");
       }},
      {"pnp_refine", [](PipelineConfig& c, const std::string& v) { c.pnp_refine = to_bool(v); }},
      {"global_scale", [](PipelineConfig& c, const std::string& v) { c.global_scale = to_double(v); }},
      // synthetic scene
      {"plane_extent_m", [](PipelineConfig& c, const std::string& v) { c.scene.plane_extent_m = to_double(v); }},
      {"road_half_width_m", [](PipelineConfig& c, const std::string& v) { c.scene.road_half_width_m = to_double(v); }},
      {"min_depth_m", [](PipelineConfig& c, const std::string& v) { c.scene.min_depth_m = to_double(v); }},
      {"n_road_points", [](PipelineConfig& c, const std::string& v) { c.scene.n_road_points = to_int<int>(v); }},
      {"n_clutter_points", [](PipelineConfig& c, const std::string& v) { c.scene.n_clutter_points = to_int<int>(v); }},
      {"clutter_height_min_m", [](PipelineConfig& c, const std::string& v) { c.scene.clutter_height_min_m = to_double(v); }},
      {"clutter_height_max_m", [](PipelineConfig& c, const std::string& v) { c.scene.clutter_height_max_m = to_double(v); }},
      {"clutter_on_road_fraction",
       [](PipelineConfig& c, const std::string& v) { c.scene.clutter_on_road_fraction = to_double(v); }},
      {"n_dynamic_points", [](PipelineConfig& c, const std::string& v) { c.scene.n_dynamic_points = to_int<int>(v); }},
      {"dynamic_velocity_mps", [](PipelineConfig& c, const std::string& v) { c.scene.dynamic_velocity_mps = to_double(v); }},
      {"pixel_noise_px", [](PipelineConfig& c, const std::string& v) { c.scene.pixel_noise_px = to_double(v); }},
      {"trajectory", [](PipelineConfig& c, const std::string& v) { c.scene.trajectory = parse_trajectory(v); }},
      {"n_frames", [](PipelineConfig& c, const std::string& v) { c.scene.n_frames = to_int<int>(v); }},
      {"speed_mps", [](PipelineConfig& c, const std::string& v) { c.scene.speed_mps = to_double(v); }},
      {"frame_rate_hz", [](PipelineConfig& c, const std::string& v) { c.scene.frame_rate_hz = to_double(v); }},
  };
  return table;
}

void require(bool ok, const std::string& what) {
  if (!ok) throw Error(ErrorCode::ConfigError, what);
}

}  // namespace

void PipelineConfig::validate() const {
  try {
    scene.validate();
  } catch (const Error& e) {
    if (e.code() == ErrorCode::ConfigError) throw;
    throw Error(ErrorCode::ConfigError, e.detail());
  }
  require(!dynamic_labels.contains(scene.road_label), "road_label must not also be a dynamic label");
  require(theta0_deg > 0 && theta0_deg < 90, "theta0_deg must be in (0, 90)");
  require(window_q >= 1, "window_q must be at least 1");
  require(filter_sigma > 0, "filter_sigma must be positive");
  require(min_points >= 3, "min_points must be at least 3");
  require(essential.iterations >= 1, "ransac_iterations must be at least 1");
  require(essential.sampson_px > 0, "ransac_sampson_px must be positive");
  require(essential.min_disparity >= 0, "ransac_min_disparity_px must be non-negative");
  require(essential.confidence > 0 && essential.confidence <= 1, "ransac_confidence must be in (0, 1]");
  require(plane.iterations >= 1, "plane_iterations must be at least 1");
  require(plane.dist_tol > 0, "plane_dist_tol must be positive");
  require(plane.min_inliers >= 3, "plane_min_inliers must be at least 3");
  require(global_scale > 0, "global_scale must be positive");
}

PipelineConfig parse_config(std::string_view text) {
  PipelineConfig config;
  std::set<std::string, std::less<>> seen;
  std::istringstream in{std::string(text)};
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto hash = raw.find('#');
    const std::string line = trim(std::string_view(raw).substr(0, hash));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    const std::string where = "line " + std::to_string(line_no) + ": ";
    if (eq == std::string::npos) throw Error(ErrorCode::ConfigError, where + "expected key = value", line_no);
    const std::string key = trim(std::string_view(line).substr(0, eq));
    const std::string value = trim(std::string_view(line).substr(eq + 1));
    const auto it = setters().find(key);
    if (it == setters().end()) throw Error(ErrorCode::ConfigError, where + "unknown key '" + key + "'", line_no);
    if (!seen.insert(key).second) throw Error(ErrorCode::ConfigError, where + "duplicate key '" + key + "'", line_no);
    try {
      it->second(config, value);
    } catch (const Error& e) {
      throw Error(ErrorCode::ConfigError, where + e.detail(), line_no);
    } catch (const std::exception&) {
      throw Error(ErrorCode::ConfigError, where + "bad value '" + value + "' for " + key, line_no);
    }
  }
  if (!config.dynamic_labels.empty()) config.scene.dynamic_label = *config.dynamic_labels.begin();
  config.scene.seed = config.seed;
  config.validate();
  return config;
}

PipelineConfig load_config(const std::filesystem::path& path) {
  std::string text;
  try {
    text = io::read_file(path);
  } catch (const Error& e) {
    throw Error(ErrorCode::ConfigError, e.detail());
  }
  try {
    return parse_config(text);
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.detail(), e.line());
  }
}

std::string format_config(const PipelineConfig& c) {
  using io::format_number;
  std::string labels;
  for (const auto l : c.dynamic_labels) labels += (labels.empty() ? "" : ",") + std::to_string(l);
  const auto& s = c.scene;
  std::ostringstream os;
  os << "fx = " << format_number(s.fx) << "\n"
     << "fy = " << format_number(s.fy) << "\n"
     << "cx = " << format_number(s.cx) << "\n"
     << "cy = " << format_number(s.cy) << "\n"
     << "image_width = " << s.image_width << "\n"
     << "image_height = " << s.image_height << "\n"
     << "camera_height_m = " << format_number(s.camera_height_m) << "\n"
     << "road_label = " << int{s.road_label} << "\n"
     << "dynamic_labels = " << labels << "\n"
     << "theta0_deg = " << format_number(c.theta0_deg) << "\n"
     << "beta_a = " << c.beta_a << "\n"
     << "window_q = " << c.window_q << "\n"
     << "filter_sigma = " << format_number(c.filter_sigma) << "\n"
     << "min_points = " << c.min_points << "\n"
     << "seed = " << c.seed << "\n"
     << "ransac_iterations = " << c.essential.iterations << "\n"
     << "ransac_sampson_px = " << format_number(c.essential.sampson_px) << "\n"
     << "ransac_min_disparity_px = " << format_number(c.essential.min_disparity) << "\n"
     << "ransac_confidence = " << format_number(c.essential.confidence) << "\n"
     << "plane_iterations = " << c.plane.iterations << "\n"
     << "plane_dist_tol = " << format_number(c.plane.dist_tol) << "\n"
     << "plane_min_inliers = " << c.plane.min_inliers << "\n"
     << "motion_source = " << to_string(c.motion_source) << "\n"
     << "pnp_refine = " << (c.pnp_refine ? "true" : "false") << "\n"
     << "global_scale = " << format_number(c.global_scale) << "\n"
     << "plane_extent_m = " << format_number(s.plane_extent_m) << "\n"
     << "road_half_width_m = " << format_number(s.road_half_width_m) << "\n"
     << "min_depth_m = " << format_number(s.min_depth_m) << "\n"
     << "n_road_points = " << s.n_road_points << "\n"
     << "n_clutter_points = " << s.n_clutter_points << "\n"
     << "clutter_height_min_m = " << format_number(s.clutter_height_min_m) << "\n"
     << "clutter_height_max_m = " << format_number(s.clutter_height_max_m) << "\n"
     << "clutter_on_road_fraction = " << format_number(s.clutter_on_road_fraction) << "\n"
     << "n_dynamic_points = " << s.n_dynamic_points << "\n"
     << "dynamic_velocity_mps = " << format_number(s.dynamic_velocity_mps) << "\n"
     << "pixel_noise_px = " << format_number(s.pixel_noise_px) << "\n"
     << "trajectory = " << format_trajectory(s.trajectory) << "\n"
     << "n_frames = " << s.n_frames << "\n"
     << "speed_mps = " << format_number(s.speed_mps) << "\n"
     << "frame_rate_hz = " << format_number(s.frame_rate_hz) << "\n";
  return os.str();
}

}  // namespace roadscale
