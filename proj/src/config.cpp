#include "optoskin/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <initializer_list>
#include <set>
#include <sstream>

#include "optoskin/error.hpp"

namespace optoskin {

namespace fs = std::filesystem;

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

namespace {

// Strict view of a JSON object: every key must be consumed or finish() throws.
class Fields {
 public:
  Fields(const Json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j_.is_object()) throw ConfigError(where_ + ": expected a JSON object");
  }

  const Json* find(const char* key) {
    seen_.insert(key);
    const auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  template <class T>
  void get(const char* key, T& out) {
    if (const auto* v = find(key)) out = convert<T>(*v, key);
  }

  template <class T>
  T require(const char* key) {
    const auto* v = find(key);
    if (!v) throw ConfigError(where_ + ": missing field '" + key + "'");
    return convert<T>(*v, key);
  }

  std::string path(const char* key) const { return where_ + "." + key; }

  void finish() const {
    for (const auto& [key, value] : j_.items()) {
      if (!seen_.count(key)) throw ConfigError(where_ + ": unknown field '" + key + "'");
    }
  }

 private:
  template <class T>
  T convert(const Json& v, const char* key) const {
    try {
      if constexpr (std::is_floating_point_v<T>) {
        if (v.is_null()) return std::numeric_limits<T>::quiet_NaN();
        if (!v.is_number()) throw ConfigError(path(key) + ": expected a number");
      } else if constexpr (std::is_integral_v<T> && !std::is_same_v<T, bool>) {
        if (!v.is_number_integer()) throw ConfigError(path(key) + ": expected an integer");
        if constexpr (std::is_unsigned_v<T>) {
          if (v.is_number_integer() && !v.is_number_unsigned() && v.get<std::int64_t>() < 0) {
            throw ConfigError(path(key) + ": expected a non-negative integer");
          }
        }
      }
      return v.get<T>();
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(path(key) + ": " + e.what());
    }
  }

  const Json& j_;
  std::string where_;
  std::set<std::string> seen_;
};

Json point_json(Point2 p) { return Json::array({p.x, p.y}); }

Point2 point_from_json(const Json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number()) {
    throw ConfigError(where + ": expected [x, y]");
  }
  return {j[0].get<double>(), j[1].get<double>()};
}

Json roi_json(RoiBand roi) { return Json{{"v_lo_px", roi.v_lo}, {"v_hi_px", roi.v_hi}}; }

RoiBand roi_from_json(const Json& j, const std::string& where) {
  Fields f(j, where);
  RoiBand roi;
  f.get("v_lo_px", roi.v_lo);
  f.get("v_hi_px", roi.v_hi);
  f.finish();
  if (!(roi.v_lo >= 0 && roi.v_lo <= roi.v_hi && roi.v_hi < kSensorHeight)) throw ConfigError(where + ": invalid band");
  return roi;
}

ParamMask mask_from_json(const Json& j, const std::string& where) {
  Fields f(j, where);
  ParamMask m;
  f.get("position", m.position);
  f.get("skew", m.skew);
  f.get("k1", m.k1);
  f.get("focal", m.focal);
  f.finish();
  return m;
}

Json mask_json(const ParamMask& m) {
  return Json{{"position", m.position}, {"skew", m.skew}, {"k1", m.k1}, {"focal", m.focal}};
}

TaxelConvention taxel_from_string(const std::string& s) {
  if (s == "circle_area") return TaxelConvention::CircleArea;
  if (s == "square_tile") return TaxelConvention::SquareTile;
  throw ConfigError("taxel_convention: expected circle_area or square_tile, got '" + s + "'");
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  return out;
}

void close_out(std::ofstream& out, const fs::path& path) {
  out.flush();
  if (!out) throw IoError("write failed: " + path.string());
}

std::string opt(const std::optional<double>& v) { return v ? format_double(*v) : ""; }

}  // namespace

Json read_json_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return Json::parse(ss.str());
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

void write_json_file(const Json& doc, const fs::path& path) {
  auto out = open_out(path);
  out << doc.dump(2) << '\n';
  close_out(out, path);
}

// ---------------------------------------------------------------------------
// Geometry and layout

Json to_json(const CameraModel& m) {
  return Json{{"position_mm", point_json(m.position)}, {"orientation_rad", m.orientation_rad},
              {"skew_rad", m.skew_rad},                {"focal_px", m.focal_px},
              {"u_center_px", m.u_center},             {"k1", m.k1}};
}

CameraModel camera_model_from_json(const Json& j) {
  Fields f(j, "camera_model");
  CameraModel m;
  if (const auto* p = f.find("position_mm")) m.position = point_from_json(*p, "camera_model.position_mm");
  f.get("orientation_rad", m.orientation_rad);
  f.get("skew_rad", m.skew_rad);
  f.get("focal_px", m.focal_px);
  f.get("u_center_px", m.u_center);
  f.get("k1", m.k1);
  f.finish();
  return m;
}

Json to_json(const CameraPair& models) { return Json::array({to_json(models[0]), to_json(models[1])}); }

CameraPair camera_pair_from_json(const Json& j) {
  // Accept a calibrated-models document as well as a bare pair.
  const Json& arr = j.is_object() && j.contains("camera_models") ? j.at("camera_models") : j;
  if (!arr.is_array() || arr.size() != 2) throw ConfigError("camera_models: expected an array of two models");
  return {camera_model_from_json(arr[0]), camera_model_from_json(arr[1])};
}

Json to_json(const SensorLayout& l) {
  Json pts = Json::array();
  for (const auto& p : l.grid_points) pts.push_back(point_json(p));
  return Json{{"side_mm", l.side_mm},
              {"thickness_mm", l.thickness_mm},
              {"grid_spacing_mm", l.grid_spacing_mm},
              {"repetitions", l.repetitions},
              {"press_duration_s", l.press_duration_s},
              {"bits_per_event", l.bits_per_event},
              {"skin_area_mm2", l.skin_area_mm2},
              {"probed_area_mm2", l.probed_area_mm2},
              {"grid_points_mm", std::move(pts)}};
}

SensorLayout layout_from_json(const Json& j) {
  Fields f(j, "layout");
  SensorLayout l = SensorLayout::meander();
  const auto* pts = f.find("grid_points_mm");
  const auto* meander = f.find("meander");
  if (pts && meander) throw ConfigError("layout: give either grid_points_mm or meander, not both");
  if (meander) {
    Fields m(*meander, "layout.meander");
    int columns = 25, rows = 10;
    double spacing = 4.0;
    Point2 origin{2.0, 40.0};
    m.get("columns", columns);
    m.get("rows", rows);
    m.get("spacing_mm", spacing);
    if (const auto* o = m.find("origin_mm")) origin = point_from_json(*o, "layout.meander.origin_mm");
    m.finish();
    if (columns < 1 || rows < 1 || !(spacing > 0)) throw ConfigError("layout.meander: invalid dimensions");
    l = SensorLayout::meander(columns, rows, spacing, origin);
  }
  if (pts) {
    if (!pts->is_array()) throw ConfigError("layout.grid_points_mm: expected an array");
    l.grid_points.clear();
    for (const auto& p : *pts) l.grid_points.push_back(point_from_json(p, "layout.grid_points_mm"));
  }
  f.get("side_mm", l.side_mm);
  f.get("thickness_mm", l.thickness_mm);
  f.get("grid_spacing_mm", l.grid_spacing_mm);
  f.get("repetitions", l.repetitions);
  f.get("press_duration_s", l.press_duration_s);
  f.get("bits_per_event", l.bits_per_event);
  f.get("skin_area_mm2", l.skin_area_mm2);
  f.get("probed_area_mm2", l.probed_area_mm2);
  f.finish();
  l.validate();
  return l;
}

Json to_json(const SyncSpec& s) {
  return Json{{"n_taps", s.n_taps},
              {"tap_interval_s", s.tap_interval_s},
              {"post_pause_s", s.post_pause_s},
              {"search_window_s", s.search_window_s},
              {"bin_s", s.bin_s},
              {"threshold_factor", s.threshold_factor},
              {"foot_factor", s.foot_factor},
              {"spacing_tolerance_s", s.spacing_tolerance_s}};
}

SyncSpec sync_from_json(const Json& j) {
  Fields f(j, "sync");
  SyncSpec s;
  f.get("n_taps", s.n_taps);
  f.get("tap_interval_s", s.tap_interval_s);
  f.get("post_pause_s", s.post_pause_s);
  f.get("search_window_s", s.search_window_s);
  f.get("bin_s", s.bin_s);
  f.get("threshold_factor", s.threshold_factor);
  f.get("foot_factor", s.foot_factor);
  f.get("spacing_tolerance_s", s.spacing_tolerance_s);
  f.finish();
  s.validate();
  return s;
}

Json to_json(const PressSchedule& s) {
  Json presses = Json::array();
  for (const auto& p : s.presses) {
    presses.push_back(Json{{"onset_s", p.onset_s},
                           {"ground_truth_mm", point_json(p.ground_truth)},
                           {"press_index", p.press_index},
                           {"repetition", p.repetition}});
  }
  return Json{{"press_duration_s", s.press_duration_s}, {"presses", std::move(presses)}};
}

PressSchedule schedule_from_json(const Json& j, const SensorLayout& layout, const SyncSpec& sync) {
  Fields f(j, "schedule");
  PressSchedule s;
  const auto* presses = f.find("presses");
  const auto* period = f.find("period_s");
  if (presses && period) throw ConfigError("schedule: give either presses or period_s, not both");
  if (presses) {
    if (!presses->is_array()) throw ConfigError("schedule.presses: expected an array");
    s.press_duration_s = layout.press_duration_s;
    for (const auto& pj : *presses) {
      Fields p(pj, "schedule.presses[]");
      ScheduledPress sp;
      sp.onset_s = p.require<double>("onset_s");
      if (const auto* g = p.find("ground_truth_mm")) {
        sp.ground_truth = point_from_json(*g, "schedule.presses[].ground_truth_mm");
      } else {
        throw ConfigError("schedule.presses[]: missing field 'ground_truth_mm'");
      }
      p.get("press_index", sp.press_index);
      p.get("repetition", sp.repetition);
      p.finish();
      s.presses.push_back(sp);
    }
  } else {
    double period_s = 3.7;
    if (period) period_s = period->get<double>();
    s = PressSchedule::regular(layout, sync, period_s);
  }
  f.get("press_duration_s", s.press_duration_s);
  f.finish();
  s.validate();
  return s;
}

Json to_json(const PipelineParams& p) {
  return Json{{"roi", roi_json(p.roi)},
              {"dbscan", Json{{"eps_px", p.dbscan.eps},
                              {"min_samples", p.dbscan.min_samples},
                              {"min_cluster_points", p.dbscan.min_cluster_points}}},
              {"baseline_s", p.baseline_s},
              {"refine_onsets", p.refine_onsets},
              {"refine", Json{{"bin_s", p.refine.bin_s},
                              {"search_s", p.refine.search_s},
                              {"threshold_factor", p.refine.threshold_factor}}}};
}

PipelineParams pipeline_from_json(const Json& j) {
  Fields f(j, "pipeline");
  PipelineParams p;
  if (const auto* r = f.find("roi")) p.roi = roi_from_json(*r, "pipeline.roi");
  if (const auto* d = f.find("dbscan")) {
    Fields g(*d, "pipeline.dbscan");
    g.get("eps_px", p.dbscan.eps);
    g.get("min_samples", p.dbscan.min_samples);
    g.get("min_cluster_points", p.dbscan.min_cluster_points);
    g.finish();
  }
  f.get("baseline_s", p.baseline_s);
  f.get("refine_onsets", p.refine_onsets);
  if (const auto* r = f.find("refine")) {
    Fields g(*r, "pipeline.refine");
    g.get("bin_s", p.refine.bin_s);
    g.get("search_s", p.refine.search_s);
    g.get("threshold_factor", p.refine.threshold_factor);
    g.finish();
  }
  f.finish();
  p.dbscan.validate();
  if (!(p.baseline_s >= 0)) throw ConfigError("pipeline.baseline_s must be non-negative");
  return p;
}

Json to_json(const CusumParams& c) {
  return Json{{"bin_s", c.bin_s},
              {"sigma_s", c.sigma_s},
              {"rate_multiplier", c.rate_multiplier},
              {"min_consecutive_bins", c.min_consecutive_bins},
              {"h", c.h},
              {"detect_window_s", c.detect_window_s},
              {"cooldown_s", c.cooldown_s},
              {"false_alarm_budget_per_s", c.false_alarm_budget_per_s}};
}

CusumParams cusum_from_json(const Json& j) {
  Fields f(j, "cusum");
  CusumParams c;
  f.get("bin_s", c.bin_s);
  f.get("sigma_s", c.sigma_s);
  f.get("rate_multiplier", c.rate_multiplier);
  f.get("min_consecutive_bins", c.min_consecutive_bins);
  f.get("h", c.h);
  f.get("detect_window_s", c.detect_window_s);
  f.get("cooldown_s", c.cooldown_s);
  f.get("false_alarm_budget_per_s", c.false_alarm_budget_per_s);
  f.finish();
  c.validate();
  return c;
}

// ---------------------------------------------------------------------------
// Run configuration

void RunConfig::validate() const {
  for (int c = 0; c < 2; ++c) {
    if (camera_files[c].empty()) throw ConfigError("run config: camera file " + std::to_string(c + 1) + " missing");
  }
  layout.validate();
  sync.validate();
  schedule.validate();
  for (const auto& m : camera_models) m.validate(layout.side_mm);
  pipeline.dbscan.validate();
  latency.cusum.validate();
  const auto expected = layout.grid_points.size() * static_cast<std::size_t>(layout.repetitions);
  if (schedule.presses.size() != expected) {
    throw ConfigError("run config: schedule has " + std::to_string(schedule.presses.size()) +
                      " presses, layout implies " + std::to_string(expected));
  }
  for (const auto k : ablation.factors) {
    if (k < 1) throw ConfigError("ablation.factors must be >= 1");
  }
  if (ablation.n_seeds < 1) throw ConfigError("ablation.n_seeds must be >= 1");
  if (latency.thin_k < 1) throw ConfigError("latency.thin_k must be >= 1");
}

RunConfig run_config_from_json(const Json& j, const fs::path& base_dir) {
  Fields f(j, "run config");
  RunConfig rc;
  if (const auto* v = f.find("schema_version"); v && *v != kSchemaVersion) {
    throw ConfigError("run config: unsupported schema_version " + v->dump());
  }
  if (const auto* files = f.find("camera_files")) {
    if (!files->is_array() || files->size() != 2 || !(*files)[0].is_string() || !(*files)[1].is_string()) {
      throw ConfigError("run config.camera_files: expected two paths");
    }
    for (int c = 0; c < 2; ++c) {
      fs::path p = (*files)[c].get<std::string>();
      rc.camera_files[c] = p.is_absolute() ? p : base_dir / p;
    }
  }
  if (const auto* l = f.find("layout")) rc.layout = layout_from_json(*l);
  if (const auto* s = f.find("sync")) rc.sync = sync_from_json(*s);
  if (const auto* s = f.find("schedule")) {
    rc.schedule = schedule_from_json(*s, rc.layout, rc.sync);
  } else {
    rc.schedule = PressSchedule::regular(rc.layout, rc.sync);
  }
  if (const auto* m = f.find("camera_models")) rc.camera_models = camera_pair_from_json(*m);
  if (const auto* p = f.find("pipeline")) rc.pipeline = pipeline_from_json(*p);
  if (const auto* t = f.find("taxel_convention")) {
    if (!t->is_string()) throw ConfigError("taxel_convention: expected a string");
    rc.taxel_convention = taxel_from_string(t->get<std::string>());
  }
  if (const auto* c = f.find("calibration")) {
    Fields g(*c, "calibration");
    if (const auto* free = g.find("free_params")) {
      if (free->is_array()) {
        if (free->size() != 2) throw ConfigError("calibration.free_params: expected one mask per camera");
        for (int i = 0; i < 2; ++i) rc.calibration.options.free[i] = mask_from_json((*free)[i], "calibration.free_params");
      } else {
        const auto m = mask_from_json(*free, "calibration.free_params");
        rc.calibration.options.free = {m, m};
      }
    }
    g.get("max_iterations", rc.calibration.options.max_iterations);
    g.get("relative_tolerance", rc.calibration.options.relative_tolerance);
    g.get("initial_lambda", rc.calibration.options.initial_lambda);
    g.get("min_observations", rc.calibration.options.min_observations);
    g.get("train_repetition", rc.calibration.train_repetition);
    g.get("excluded_trials", rc.calibration.excluded_trials);
    g.finish();
  }
  if (const auto* a = f.find("ablation")) {
    Fields g(*a, "ablation");
    g.get("factors", rc.ablation.factors);
    g.get("n_seeds", rc.ablation.n_seeds);
    g.get("per_k_reference", rc.ablation.per_k_reference);
    g.finish();
  }
  if (const auto* l = f.find("latency")) {
    Fields g(*l, "latency");
    if (const auto* c = g.find("cusum")) rc.latency.cusum = cusum_from_json(*c);
    if (const auto* h = g.find("h"); h && !h->is_null()) {
      if (!h->is_number()) throw ConfigError("latency.h: expected a number or null");
      rc.latency.h = h->get<double>();
    }
    g.get("pre_roll_s", rc.latency.pre_roll_s);
    g.get("idle_offset_s", rc.latency.idle_offset_s);
    g.get("thin_k", rc.latency.thin_k);
    g.finish();
  }
  f.get("seed", rc.seed);
  f.finish();
  rc.validate();
  return rc;
}

Json to_json(const RunConfig& rc, const fs::path& base_dir) {
  Json files = Json::array();
  for (const auto& p : rc.camera_files) {
    const auto rel = p.lexically_relative(base_dir);
    const bool below = !rel.empty() && *rel.begin() != "..";
    files.push_back((below ? rel : p).generic_string());
  }
  Json free = Json::array({mask_json(rc.calibration.options.free[0]), mask_json(rc.calibration.options.free[1])});
  return Json{{"schema_version", kSchemaVersion},
              {"camera_files", std::move(files)},
              {"layout", to_json(rc.layout)},
              {"sync", to_json(rc.sync)},
              {"schedule", to_json(rc.schedule)},
              {"camera_models", to_json(rc.camera_models)},
              {"pipeline", to_json(rc.pipeline)},
              {"taxel_convention", to_string(rc.taxel_convention)},
              {"calibration", Json{{"free_params", std::move(free)},
                                   {"max_iterations", rc.calibration.options.max_iterations},
                                   {"relative_tolerance", rc.calibration.options.relative_tolerance},
                                   {"initial_lambda", rc.calibration.options.initial_lambda},
                                   {"min_observations", rc.calibration.options.min_observations},
                                   {"train_repetition", rc.calibration.train_repetition},
                                   {"excluded_trials", rc.calibration.excluded_trials}}},
              {"ablation", Json{{"factors", rc.ablation.factors},
                                {"n_seeds", rc.ablation.n_seeds},
                                {"per_k_reference", rc.ablation.per_k_reference}}},
              {"latency", Json{{"cusum", to_json(rc.latency.cusum)},
                               {"h", rc.latency.h ? Json(*rc.latency.h) : Json(nullptr)},
                               {"pre_roll_s", rc.latency.pre_roll_s},
                               {"idle_offset_s", rc.latency.idle_offset_s},
                               {"thin_k", rc.latency.thin_k}}},
              {"seed", rc.seed}};
}

RunConfig load_run_config(const fs::path& path) {
  return run_config_from_json(read_json_file(path), path.parent_path());
}

// ---------------------------------------------------------------------------
// Simulation

SimulateConfig simulate_config_from_json(const Json& j) {
  Fields f(j, "synth config");
  SimulateConfig cfg;
  auto& s = cfg.synth;
  if (const auto* v = f.find("schema_version"); v && *v != kSchemaVersion) {
    throw ConfigError("synth config: unsupported schema_version " + v->dump());
  }
  if (const auto* l = f.find("layout")) s.layout = layout_from_json(*l);
  if (const auto* m = f.find("camera_models")) s.models = camera_pair_from_json(*m);
  if (const auto* y = f.find("sync")) s.sync = sync_from_json(*y);
  f.get("press_period_s", s.press_period_s);
  if (const auto* sc = f.find("schedule")) s.schedule = schedule_from_json(*sc, s.layout, s.sync);
  f.get("tap_start_s", s.tap_start_s);
  f.get("tail_s", s.tail_s);
  f.get("camera2_offset_s", s.camera2_offset_s);
  f.get("burst_events_per_press_per_camera", s.burst_events_per_press_per_camera);
  f.get("sigma_u_px", s.sigma_u_px);
  f.get("sigma_v_px", s.sigma_v_px);
  f.get("v_center_px", s.v_center_px);
  f.get("center_jitter_px", s.center_jitter_px);
  f.get("center_jitter_dof", s.center_jitter_dof);
  f.get("onset_jitter_s", s.onset_jitter_s);
  if (const auto* p = f.find("profile")) {
    Fields g(*p, "synth config.profile");
    g.get("rise", s.profile.rise);
    g.get("plateau", s.profile.plateau);
    g.get("fall", s.profile.fall);
    g.finish();
  }
  f.get("background_rate_per_camera", s.background_rate_per_camera);
  if (const auto* r = f.find("roi")) s.roi = roi_from_json(*r, "synth config.roi");
  f.get("press_count_scale", s.press_count_scale);
  f.get("seed", s.seed);
  if (const auto* e = f.find("event_format")) {
    const auto name = e->is_string() ? e->get<std::string>() : std::string();
    if (name == "csv") cfg.event_format = EventFormat::Csv;
    else if (name == "bin") cfg.event_format = EventFormat::Bin;
    else throw ConfigError("synth config.event_format: expected csv or bin");
  }
  if (const auto* r = f.find("run")) {
    if (!r->is_object()) throw ConfigError("synth config.run: expected an object");
    for (const char* owned : {"camera_files", "layout", "sync", "schedule", "schema_version"}) {
      if (r->contains(owned)) throw ConfigError(std::string("synth config.run: '") + owned + "' is set by the simulator");
    }
    cfg.run_overrides = *r;
  }
  f.finish();
  s.validate();
  return cfg;
}

Json to_json(const SynthSpec& s) {
  Json j{{"schema_version", kSchemaVersion},
         {"layout", to_json(s.layout)},
         {"camera_models", to_json(s.models)},
         {"sync", to_json(s.sync)},
         {"press_period_s", s.press_period_s},
         {"tap_start_s", s.tap_start_s},
         {"tail_s", s.tail_s},
         {"camera2_offset_s", s.camera2_offset_s},
         {"burst_events_per_press_per_camera", s.burst_events_per_press_per_camera},
         {"sigma_u_px", s.sigma_u_px},
         {"sigma_v_px", s.sigma_v_px},
         {"v_center_px", s.v_center_px},
         {"center_jitter_px", s.center_jitter_px},
         {"center_jitter_dof", s.center_jitter_dof},
         {"onset_jitter_s", s.onset_jitter_s},
         {"profile", Json{{"rise", s.profile.rise}, {"plateau", s.profile.plateau}, {"fall", s.profile.fall}}},
         {"background_rate_per_camera", s.background_rate_per_camera},
         {"roi", roi_json(s.roi)},
         {"press_count_scale", s.press_count_scale},
         {"seed", s.seed}};
  if (s.schedule) j["schedule"] = to_json(*s.schedule);
  return j;
}

Json to_json(const TruthManifest& t) {
  Json presses = Json::array();
  for (const auto& p : t.presses) {
    Json cams = Json::array();
    for (int c = 0; c < 2; ++c) {
      cams.push_back(Json{{"u_ideal_px", p.u_ideal[c] ? Json(*p.u_ideal[c]) : Json(nullptr)},
                          {"u_center_px", p.u_center[c]},
                          {"n_events", p.n_events[c]}});
    }
    presses.push_back(Json{{"trial_index", p.trial_index},
                           {"press_index", p.press_index},
                           {"repetition", p.repetition},
                           {"ground_truth_mm", point_json(p.ground_truth)},
                           {"onset_s", p.onset_s},
                           {"in_view", p.in_view},
                           {"cameras", std::move(cams)}});
  }
  std::array<std::size_t, 2> background{};
  for (int c = 0; c < 2; ++c) {
    background[c] = static_cast<std::size_t>(
        std::count(t.sources[c].begin(), t.sources[c].end(), kBackgroundSource));
  }
  return Json{{"schema_version", kSchemaVersion},
              {"seed", t.seed},
              {"camera2_offset_s", t.camera2_offset_s},
              {"tap_onsets_s", t.tap_onsets_s},
              {"n_events", Json::array({t.sources[0].size(), t.sources[1].size()})},
              {"n_background_events", Json::array({background[0], background[1]})},
              {"presses", std::move(presses)}};
}

// ---------------------------------------------------------------------------
// Reports

Json to_json(const EvaluationReport& r) {
  return Json{{"schema_version", kSchemaVersion},
              {"rmse_mm", r.rmse_mm},
              {"rmse_x_mm", r.rmse_x_mm},
              {"rmse_y_mm", r.rmse_y_mm},
              {"mean_trial_std_mm", r.mean_trial_std_mm},
              {"cmre_percent", r.cmre_percent},
              {"pass_rate_percent", r.pass_rate_percent},
              {"reference_p95_mm", r.reference_p95_mm},
              {"effective_taxels_probed", r.effective_taxels_probed},
              {"effective_taxels_full", r.effective_taxels_full},
              {"taxel_convention", to_string(r.taxel_convention)},
              {"n_presses", r.n_presses},
              {"n_valid", r.n_valid}};
}

Json calibration_report_json(const CalibrationResult& fit, const CameraPair& initial, std::size_t n_observations) {
  std::vector<double> res;
  for (const auto& r : fit.residuals_mm) {
    if (r) res.push_back(*r);
  }
  Json pct = Json::object();
  for (double q : {50.0, 90.0, 95.0, 100.0}) {
    pct["p" + std::to_string(static_cast<int>(q))] =
        res.empty() ? Json(nullptr) : Json(percentile(res, q));
  }
  return Json{{"schema_version", kSchemaVersion},
              {"camera_models", to_json(fit.models)},
              {"initial_models", to_json(initial)},
              {"fit", Json{{"n_observations", n_observations},
                           {"degenerate_count", fit.degenerate_count},
                           {"iterations", fit.iterations},
                           {"converged", fit.converged},
                           {"final_cost", fit.final_cost},
                           {"initial_rmse_mm", fit.initial_rmse_mm},
                           {"rmse_mm", fit.rmse_mm},
                           {"residual_percentiles_mm", std::move(pct)}}}};
}

Json to_json(const LatencyReport& r) {
  std::size_t detected = 0;
  for (const auto& o : r.onsets_s) detected += o.has_value();
  return Json{{"schema_version", kSchemaVersion},
              {"h_used", r.h_used},
              {"n_trials", r.onsets_s.size()},
              {"n_detected", detected},
              {"tpr", r.tpr},
              {"median_onset_s", r.median_onset_s},
              {"latency_width_ms", r.latency_width_ms},
              {"false_alarm_rate_per_s", r.false_alarm_rate_per_s},
              {"cooldown_s", r.cooldown_s}};
}

Json trial_manifest_json(std::span<const PressTrial> trials) {
  Json arr = Json::array();
  for (const auto& t : trials) {
    arr.push_back(Json{{"trial_index", t.trial_index},
                       {"press_index", t.press_index},
                       {"repetition", t.repetition},
                       {"window_us", Json::array({t.window.t0_us, t.window.t1_us})},
                       {"baseline_window_us", Json::array({t.baseline_window.t0_us, t.baseline_window.t1_us})},
                       {"n_events", Json::array({t.cam1.events().size(), t.cam2.events().size()})},
                       {"ground_truth_mm", point_json(t.ground_truth)},
                       {"missing", t.missing}});
  }
  return Json{{"schema_version", kSchemaVersion}, {"trials", std::move(arr)}};
}

Json to_json(const AblationSweep& s) {
  Json curve = Json::array();
  for (const auto& c : s.curve) {
    curve.push_back(Json{{"k", c.k},
                         {"mean_pass_rate_percent", c.mean_pass_rate},
                         {"sd_pass_rate_percent", c.sd_pass_rate},
                         {"mean_rmse_mm", c.mean_rmse_mm},
                         {"mean_cluster_size", c.mean_cluster_size}});
  }
  return Json{{"schema_version", kSchemaVersion},
              {"factors", s.factors},
              {"seeds", s.seeds},
              {"reference_p95_mm", s.reference_p95_mm},
              {"per_k_reference", s.per_k_reference},
              {"curve", std::move(curve)}};
}

void write_per_press_csv(const EvaluationReport& r, const fs::path& path) {
  auto out = open_out(path);
  out << "trial_index,press_index,repetition,valid,pass,error_mm\n";
  for (const auto& e : r.per_press_errors) {
    out << e.trial_index << ',' << e.press_index << ',' << e.repetition << ',' << int(e.valid) << ',' << int(e.pass)
        << ',' << (e.valid ? format_double(e.error_mm) : "") << '\n';
  }
  close_out(out, path);
}

void write_localization_csv(std::span<const LocalizationResult> results, const fs::path& path) {
  auto out = open_out(path);
  out << "trial_index,press_index,repetition,status,reason,gt_x_mm,gt_y_mm,est_x_mm,est_y_mm,error_mm,"
         "condition,out_of_bounds,cam1_events,cam1_clusters,cam1_cluster_size,cam1_u_px,"
         "cam2_events,cam2_clusters,cam2_cluster_size,cam2_u_px\n";
  for (const auto& r : results) {
    out << r.trial_index << ',' << r.press_index << ',' << r.repetition << ',' << to_string(r.status) << ','
        << r.reason << ',' << format_double(r.ground_truth.x) << ',' << format_double(r.ground_truth.y) << ',';
    if (r.triangulation) {
      out << format_double(r.triangulation->estimate.x) << ',' << format_double(r.triangulation->estimate.y) << ','
          << (r.valid() ? format_double(r.error_mm) : "") << ',' << format_double(r.triangulation->condition) << ','
          << int(r.triangulation->out_of_bounds);
    } else {
      out << ",,,,";
    }
    for (const auto& c : r.cams) {
      out << ',' << c.n_events << ',' << c.n_clusters << ',' << c.cluster_size << ','
          << (c.valid ? format_double(c.centroid_u) : "");
    }
    out << '\n';
  }
  close_out(out, path);
}

void write_sweep_csv(const AblationSweep& s, const fs::path& path) {
  auto out = open_out(path);
  out << "k,seed,rmse_mm,pass_rate,mean_cluster_size\n";
  for (const auto& c : s.cells) {
    out << c.k << ',' << c.seed << ',' << format_double(c.report.rmse_mm) << ','
        << format_double(c.report.pass_rate_percent) << ',' << format_double(c.mean_cluster_size) << '\n';
  }
  close_out(out, path);
}

void write_curve_csv(const AblationSweep& s, const fs::path& path) {
  auto out = open_out(path);
  out << "k,mean_pass_rate,sd_pass_rate,mean_rmse_mm,mean_cluster_size\n";
  for (const auto& c : s.curve) {
    out << c.k << ',' << format_double(c.mean_pass_rate) << ',' << format_double(c.sd_pass_rate) << ','
        << format_double(c.mean_rmse_mm) << ',' << format_double(c.mean_cluster_size) << '\n';
  }
  close_out(out, path);
}

void write_onsets_csv(const LatencyReport& r, const fs::path& path) {
  auto out = open_out(path);
  out << "trial,onset_s,true_positive\n";
  for (std::size_t i = 0; i < r.onsets_s.size(); ++i) {
    out << i << ',' << opt(r.onsets_s[i]) << ',' << int(r.true_positive[i]) << '\n';
  }
  close_out(out, path);
}

void write_roc_csv(std::span<const RocPoint> roc, const fs::path& path) {
  auto out = open_out(path);
  out << "h,tpr,false_alarm_rate_per_s\n";
  for (const auto& p : roc) {
    out << format_double(p.h) << ',' << format_double(p.tpr) << ',' << format_double(p.false_alarm_rate_per_s) << '\n';
  }
  close_out(out, path);
}

}  // namespace optoskin
