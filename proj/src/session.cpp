#include "velopad/session.hpp"

#include <cmath>
#include <functional>
#include <map>
#include <stdexcept>

#include "velopad/crosstalk.hpp"

namespace velopad {

using nlohmann::json;

void SessionConfig::set_frames_per_capture(int n) {
  readout.frames_per_capture = n;
  pipeline.frames_per_capture = n;
}

void SessionConfig::validate() const {
  geometry.validate();
  model.validate();
  readout.validate();
  pipeline.validate();
  bend.validate();
  if (readout.frames_per_capture != pipeline.frames_per_capture) {
    throw std::invalid_argument("readout and pipeline disagree on frames per capture");
  }
  if (!(diffusion_sigma >= 0.0)) throw std::invalid_argument("diffusion sigma must be nonnegative");
}

double SessionConfig::capture_period() const {
  return readout.frame_period * static_cast<double>(readout.frames_per_capture);
}

Mechanisms parse_mechanisms(std::string_view list) {
  if (list == "all") return {};
  if (list == "none" || list.empty()) return Mechanisms::all_off();
  Mechanisms m = Mechanisms::all_off();
  std::size_t start = 0;
  while (start <= list.size()) {
    const std::size_t comma = list.find(',', start);
    const auto item = list.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start);
    if (item == "sheet_paths") {
      m.sheet_paths = true;
    } else if (item == "finite_off") {
      m.finite_off = true;
    } else if (item == "diffusion") {
      m.diffusion = true;
    } else {
      throw std::invalid_argument("unknown mechanism '" + std::string(item) + "'");
    }
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return m;
}

std::string format_mechanisms(const Mechanisms& m) {
  std::string out;
  auto add = [&](bool on, const char* name) {
    if (!on) return;
    if (!out.empty()) out += ',';
    out += name;
  };
  add(m.sheet_paths, "sheet_paths");
  add(m.finite_off, "finite_off");
  add(m.diffusion, "diffusion");
  return out.empty() ? "none" : out;
}

json config_to_json(const SessionConfig& c) {
  json j;
  j["rows"] = c.geometry.rows;
  j["cols"] = c.geometry.cols;
  j["pitch-mm"] = c.geometry.pitch * 1e3;
  j["line-width-mm"] = c.geometry.line_width * 1e3;
  j["bias-ohm"] = c.readout.r_bias;
  j["vdd"] = c.readout.v_dd;
  j["adc-bits"] = c.readout.adc_bits;
  j["frames-n"] = c.readout.frames_per_capture;
  j["frame-period-ms"] = c.readout.frame_period * 1e3;
  j["blur-sigma"] = c.pipeline.blur_sigma;
  j["normalization"] = c.pipeline.normalization == Normalization::softmax ? "softmax" : "sn";
  j["seed"] = c.seed;
  j["mechanisms"] = format_mechanisms(c.readout.mechanisms);
  j["ground-unselected"] = c.readout.ground_unselected;
  j["noise-mv"] = c.readout.noise_sigma * 1e3;
  j["diffusion-mm"] = c.diffusion_sigma * 1e3;
  j["bend-radius-cm"] = c.bend.flat() ? json(nullptr) : json(c.bend.bending_radius * 1e2);
  j["bend-axis"] = c.bend.axis == BendAxis::horizontal ? "horizontal" : "vertical";
  j["bend-scale"] = c.bend.stress_profile_scale;
  j["r-off-ohm"] = c.model.r_off;
  j["r-on-ohm"] = c.model.r_on;
  j["p-half-n"] = c.model.p_half;
  j["gamma"] = c.model.gamma;
  j["r-sheet-ohm"] = c.model.r_sheet;
  return j;
}

namespace {

double number(const json& v, const std::string& key) {
  if (!v.is_number()) throw std::invalid_argument("config key '" + key + "' needs a number");
  return v.get<double>();
}

long integer(const json& v, const std::string& key) {
  if (!v.is_number_integer() && !v.is_number_unsigned()) {
    throw std::invalid_argument("config key '" + key + "' needs an integer");
  }
  return v.get<long>();
}

std::size_t count(const json& v, const std::string& key) {
  const long n = integer(v, key);
  if (n < 1) throw std::invalid_argument("config key '" + key + "' must be at least 1");
  return static_cast<std::size_t>(n);
}

using Setter = std::function<void(SessionConfig&, const json&, const std::string&)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"rows", [](auto& c, const json& v, const auto& k) { c.geometry.rows = count(v, k); }},
      {"cols", [](auto& c, const json& v, const auto& k) { c.geometry.cols = count(v, k); }},
      {"pitch-mm", [](auto& c, const json& v, const auto& k) { c.geometry.pitch = number(v, k) * 1e-3; }},
      {"line-width-mm", [](auto& c, const json& v, const auto& k) { c.geometry.line_width = number(v, k) * 1e-3; }},
      {"bias-ohm", [](auto& c, const json& v, const auto& k) { c.readout.r_bias = number(v, k); }},
      {"vdd", [](auto& c, const json& v, const auto& k) { c.readout.v_dd = number(v, k); }},
      {"adc-bits", [](auto& c, const json& v, const auto& k) { c.readout.adc_bits = static_cast<int>(integer(v, k)); }},
      {"frames-n", [](auto& c, const json& v, const auto& k) { c.set_frames_per_capture(static_cast<int>(integer(v, k))); }},
      {"frame-period-ms", [](auto& c, const json& v, const auto& k) { c.readout.frame_period = number(v, k) * 1e-3; }},
      {"blur-sigma", [](auto& c, const json& v, const auto& k) { c.pipeline.blur_sigma = number(v, k); }},
      {"normalization",
       [](auto& c, const json& v, const auto&) {
         const auto s = v.is_string() ? v.get<std::string>() : std::string();
         if (s == "sn") {
           c.pipeline.normalization = Normalization::square_by_max;
         } else if (s == "softmax") {
           c.pipeline.normalization = Normalization::softmax;
         } else {
           throw std::invalid_argument("normalization must be 'sn' or 'softmax'");
         }
       }},
      {"seed",
       [](auto& c, const json& v, const auto& k) {
         const long s = integer(v, k);
         if (s < 0) throw std::invalid_argument("seed must be nonnegative");
         c.seed = static_cast<std::uint64_t>(s);
       }},
      {"mechanisms",
       [](auto& c, const json& v, const auto&) {
         if (v.is_string()) {
           c.readout.mechanisms = parse_mechanisms(v.get<std::string>());
         } else if (v.is_array()) {
           std::string joined;
           for (const auto& item : v) {
             if (!item.is_string()) throw std::invalid_argument("mechanism names must be strings");
             if (!joined.empty()) joined += ',';
             joined += item.get<std::string>();
           }
           c.readout.mechanisms = parse_mechanisms(joined);
         } else {
           throw std::invalid_argument("mechanisms must be a list or comma-separated string");
         }
       }},
      {"ground-unselected",
       [](auto& c, const json& v, const auto&) {
         if (!v.is_boolean()) throw std::invalid_argument("ground-unselected must be a boolean");
         c.readout.ground_unselected = v.get<bool>();
       }},
      {"noise-mv", [](auto& c, const json& v, const auto& k) { c.readout.noise_sigma = number(v, k) * 1e-3; }},
      {"diffusion-mm", [](auto& c, const json& v, const auto& k) { c.diffusion_sigma = number(v, k) * 1e-3; }},
      {"bend-radius-cm",
       [](auto& c, const json& v, const auto& k) {
         if (v.is_null() || (v.is_string() && v.get<std::string>() == "flat")) {
           c.bend.bending_radius = std::numeric_limits<double>::infinity();
           return;
         }
         const double r = number(v, k);
         c.bend.bending_radius = r == 0.0 ? std::numeric_limits<double>::infinity() : r * 1e-2;
       }},
      {"bend-axis",
       [](auto& c, const json& v, const auto&) {
         const auto s = v.is_string() ? v.get<std::string>() : std::string();
         if (s == "horizontal") {
           c.bend.axis = BendAxis::horizontal;
         } else if (s == "vertical") {
           c.bend.axis = BendAxis::vertical;
         } else {
           throw std::invalid_argument("bend-axis must be 'horizontal' or 'vertical'");
         }
       }},
      {"bend-scale", [](auto& c, const json& v, const auto& k) { c.bend.stress_profile_scale = number(v, k); }},
      {"r-off-ohm", [](auto& c, const json& v, const auto& k) { c.model.r_off = number(v, k); }},
      {"r-on-ohm", [](auto& c, const json& v, const auto& k) { c.model.r_on = number(v, k); }},
      {"p-half-n", [](auto& c, const json& v, const auto& k) { c.model.p_half = number(v, k); }},
      {"gamma", [](auto& c, const json& v, const auto& k) { c.model.gamma = number(v, k); }},
      {"r-sheet-ohm", [](auto& c, const json& v, const auto& k) { c.model.r_sheet = number(v, k); }},
  };
  return table;
}

}  // namespace

void apply_config_delta(SessionConfig& config, const json& delta) {
  if (!delta.is_object()) throw std::invalid_argument("config delta must be an object");
  SessionConfig next = config;
  for (const auto& [key, value] : delta.items()) {
    const auto it = setters().find(key);
    if (it == setters().end()) throw std::invalid_argument("unknown config key '" + key + "'");
    it->second(next, value, key);
  }
  next.validate();
  config = std::move(next);
}

std::vector<StrokeEvent> sample_polyline(std::span<const Point> points, double force, double step,
                                         double speed, double start) {
  if (!(step > 0.0)) throw std::invalid_argument("polyline step must be positive");
  if (!(speed >= 0.0)) throw std::invalid_argument("pen speed must be nonnegative");
  std::vector<StrokeEvent> events;
  if (points.empty()) return events;
  events.push_back({points[0].x, points[0].y, force, start});
  double travelled = 0.0;
  for (std::size_t i = 1; i < points.size(); ++i) {
    const double dx = points[i].x - points[i - 1].x;
    const double dy = points[i].y - points[i - 1].y;
    const double length = std::hypot(dx, dy);
    const auto n = static_cast<std::size_t>(std::max(1.0, std::ceil(length / step - 1e-9)));
    for (std::size_t k = 1; k <= n; ++k) {
      const double u = static_cast<double>(k) / static_cast<double>(n);
      const double t = speed > 0.0 ? start + (travelled + u * length) / speed : start;
      events.push_back({points[i - 1].x + u * dx, points[i - 1].y + u * dy, force, t});
    }
    travelled += length;
  }
  return events;
}

Stimulus parse_stimulus(const json& doc) {
  if (!doc.is_object()) throw std::invalid_argument("stimulus must be a JSON object");
  Stimulus s;
  for (const auto& e : doc.value("strokes", json::array())) {
    s.strokes.push_back({e.at("x_mm").get<double>() * 1e-3, e.at("y_mm").get<double>() * 1e-3,
                         e.value("force_n", 1.0), e.value("t", 0.0)});
    s.timed = s.timed || e.contains("t");
  }
  for (const auto& p : doc.value("paths", json::array())) {
    std::vector<Point> pts;
    for (const auto& xy : p.at("points_mm")) pts.push_back({xy.at(0).get<double>() * 1e-3, xy.at(1).get<double>() * 1e-3});
    const double speed = p.value("speed_mm_s", 0.0) * 1e-3;
    const auto events =
        sample_polyline(pts, p.value("force_n", 1.0), p.value("step_mm", 0.5) * 1e-3, speed, p.value("start_s", 0.0));
    s.strokes.insert(s.strokes.end(), events.begin(), events.end());
    s.timed = s.timed || p.contains("speed_mm_s");
  }
  for (const auto& w : doc.value("weights", json::array())) {
    WeightStimulus ws;
    ws.target = {w.at("row").get<std::size_t>(), w.at("col").get<std::size_t>()};
    ws.mass = w.value("mass_kg", 0.5);
    ws.contact_area = w.value("contact_area_mm2", 100.0) * 1e-6;
    s.weights.push_back(ws);
  }
  return s;
}

namespace {

// Frame of the capture a timed event falls in, or -1 outside the capture.
long frame_slot(const StrokeEvent& e, const CaptureJob& job) {
  const double k = std::floor((e.timestamp - job.start_time) / job.config.readout.frame_period);
  return k >= 0.0 && k < job.config.readout.frames_per_capture ? static_cast<long>(k) : -1;
}

}  // namespace

AdcCapture capture_adc_frames(const CaptureJob& job) {
  const SessionConfig& c = job.config;
  c.validate();
  const double sigma = effective_diffusion_sigma(c.readout.mechanisms, c.diffusion_sigma);
  const PressureField bend = bend_stress_field(c.bend, c.geometry);
  const auto n = static_cast<std::uint64_t>(c.readout.frames_per_capture);
  AdcCapture out;
  out.frames.reserve(n);

  if (!job.stimulus.timed) {
    auto raster = rasterize_stimulus(job.stimulus.strokes, job.stimulus.weights, c.geometry, sigma);
    raster.field += bend;
    const auto volts = capture_frames(c.geometry, raster.field, c.model, c.readout, c.seed, job.capture_id * n);
    out.rejected_events = raster.rejected;
    for (const auto& f : volts) out.frames.push_back(adc_quantize(f, c.readout));
    return out;
  }

  std::vector<std::vector<StrokeEvent>> slots(n);
  for (const auto& e : job.stimulus.strokes) {
    const long k = frame_slot(e, job);
    if (k >= 0) slots[static_cast<std::size_t>(k)].push_back(e);
  }
  const std::size_t weight_rejections =
      rasterize_stimulus({}, job.stimulus.weights, c.geometry, sigma).rejected;
  out.rejected_events = weight_rejections;
  for (std::uint64_t k = 0; k < n; ++k) {
    auto raster = rasterize_stimulus(slots[k], job.stimulus.weights, c.geometry, sigma);
    raster.field += bend;
    out.rejected_events += raster.rejected - weight_rejections;
    const Frame volts = scan_frame(c.geometry, raster.field, c.model, c.readout, c.seed, job.capture_id * n + k);
    out.frames.push_back(adc_quantize(volts, c.readout));
  }
  return out;
}

CaptureResult run_capture(const CaptureJob& job) {
  const AdcCapture adc = capture_adc_frames(job);
  CaptureResult result;
  result.capture_id = job.capture_id;
  result.timestamp = job.start_time + job.config.capture_period();
  result.staged = run_pipeline(adc.frames, job.config.pipeline);
  result.rejected_events = adc.rejected_events;

  const Grid& raw = result.staged.raw.values;
  if (raw.rows() >= 2 && raw.cols() >= 2 && raw.max() > 0.0) {
    std::size_t peak = 0;
    for (std::size_t i = 1; i < raw.size(); ++i) {
      if (raw.values()[i] > raw.values()[peak]) peak = i;
    }
    result.crosstalk = crosstalk_frame(result.staged.raw, {peak / raw.cols(), peak % raw.cols()}).value;
  }
  return result;
}

PadSession::PadSession(SessionConfig config) : config_(std::move(config)) { config_.validate(); }

void PadSession::load(const Stimulus& stimulus) {
  stimulus_ = stimulus;
  if (stimulus_.timed) {
    for (auto& e : stimulus_.strokes) e.timestamp += clock_;
  }
}

void PadSession::add_strokes(std::span<const StrokeEvent> events) {
  if (!stimulus_.timed && !stimulus_.strokes.empty()) {
    throw std::logic_error("live strokes cannot be mixed with an untimed stimulus");
  }
  stimulus_.timed = true;
  for (auto e : events) {
    e.timestamp += clock_;
    stimulus_.strokes.push_back(e);
  }
}

void PadSession::add_weights(std::span<const WeightStimulus> weights) {
  stimulus_.weights.insert(stimulus_.weights.end(), weights.begin(), weights.end());
}

void PadSession::clear() { stimulus_ = {}; }

CaptureJob PadSession::prepare_capture() {
  CaptureJob job{config_, stimulus_, next_capture_id_++, clock_};
  clock_ += config_.capture_period();
  if (stimulus_.timed) {
    std::erase_if(stimulus_.strokes, [&](const StrokeEvent& e) { return e.timestamp < clock_; });
    std::erase_if(job.stimulus.strokes, [&](const StrokeEvent& e) { return frame_slot(e, job) < 0; });
  }
  return job;
}

namespace {

json error_message(const std::string& what) { return {{"type", "error"}, {"message", what}}; }

json report_message(const SessionConfig& config, std::optional<std::uint64_t> capture_id,
                    std::optional<double> crosstalk, std::size_t rejected) {
  json j{{"type", "report"}, {"config", config_to_json(config)}, {"rejected_events", rejected}};
  j["capture_id"] = capture_id ? json(*capture_id) : json(nullptr);
  j["crosstalk"] = crosstalk ? json(*crosstalk) : json(nullptr);
  return j;
}

}  // namespace

std::vector<json> handle_message(PadSession& session, std::string_view text) {
  json msg;
  try {
    msg = json::parse(text);
  } catch (const json::parse_error& e) {
    return {error_message(std::string("malformed message: ") + e.what())};
  }
  if (!msg.is_object() || !msg.contains("type") || !msg["type"].is_string()) {
    return {error_message("message needs a string 'type'")};
  }
  const auto type = msg["type"].get<std::string>();
  try {
    if (type == "stroke") {
      std::vector<StrokeEvent> events;
      for (const auto& e : msg.at("events")) {
        events.push_back({e.at("x").get<double>(), e.at("y").get<double>(), e.value("force", 1.0), e.value("t", 0.0)});
      }
      session.add_strokes(events);
      return {};
    }
    if (type == "clear") {
      session.clear();
      return {};
    }
    if (type == "config") {
      session.apply_config(msg.at("set"));
      return {report_message(session.config(), std::nullopt, std::nullopt, 0)};
    }
  } catch (const json::exception& e) {
    return {error_message(type + ": " + e.what())};
  } catch (const std::invalid_argument& e) {
    return {error_message(type + ": " + e.what())};
  }
  return {error_message("unknown message type '" + type + "'")};
}

json record_to_json(const FrameLogRecord& r) {
  return {{"capture_id", r.capture_id}, {"timestamp", r.timestamp}, {"stage", std::string(to_string(r.stage))},
          {"rows", r.values.rows()},    {"cols", r.values.cols()},    {"values", r.values.values()}};
}

FrameLogRecord record_from_json(const json& j) {
  FrameLogRecord r;
  r.capture_id = j.at("capture_id").get<std::uint64_t>();
  r.timestamp = j.at("timestamp").get<double>();
  const auto stage = parse_stage(j.at("stage").get<std::string>());
  if (!stage) throw std::invalid_argument("unknown stage");
  r.stage = *stage;
  r.values = Grid(j.at("rows").get<std::size_t>(), j.at("cols").get<std::size_t>(),
                  j.at("values").get<std::vector<double>>());
  return r;
}

std::vector<json> capture_messages(const CaptureResult& result, const SessionConfig& config) {
  std::vector<json> out;
  for (const auto& rec : staged_records(result.staged, result.capture_id, result.timestamp)) {
    out.push_back({{"type", "frame"},
                   {"capture_id", rec.capture_id},
                   {"stage", std::string(to_string(rec.stage))},
                   {"record", record_to_json(rec)}});
  }
  out.push_back(report_message(config, result.capture_id, result.crosstalk, result.rejected_events));
  return out;
}

}  // namespace velopad
