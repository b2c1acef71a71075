#pragma once

// A simulated writing-pad session: configuration, accumulated strokes, and
// captures through the reconstruction pipeline. The JSON helpers define the
// session message schema documented in docs/session-protocol.md.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "velopad/circuit.hpp"
#include "velopad/frame_log.hpp"
#include "velopad/geometry.hpp"
#include "velopad/pipeline.hpp"

namespace velopad {

struct SessionConfig {
  SensorGeometry geometry = writing_pad_geometry();
  VelostatModel model;
  ReadoutConfig readout;
  PipelineConfig pipeline;
  BendState bend;
  double diffusion_sigma = 1.0e-3;  // m
  std::uint64_t seed = 1;

  void set_frames_per_capture(int n);
  void validate() const;
  /// frame_period * frames_per_capture, seconds.
  double capture_period() const;
};

/// Parses "sheet_paths,finite_off,diffusion", "all" or "none".
Mechanisms parse_mechanisms(std::string_view list);
std::string format_mechanisms(const Mechanisms& m);

/// Flat key/value view using the CLI option names (pitch-mm, blur-sigma, ...).
nlohmann::json config_to_json(const SessionConfig& config);

/// Applies a partial update. Unknown keys or values that break an invariant
/// throw std::invalid_argument and leave `config` untouched.
void apply_config_delta(SessionConfig& config, const nlohmann::json& delta);

/// Samples a polyline every `step` metres (endpoints included) as stroke events.
/// With a positive `speed` (m/s) the pen leaves `start` and timestamps follow
/// the arc length; otherwise every event is stamped `start`.
std::vector<StrokeEvent> sample_polyline(std::span<const Point> points, double force, double step,
                                         double speed = 0.0, double start = 0.0);

struct Stimulus {
  std::vector<StrokeEvent> strokes;
  std::vector<WeightStimulus> weights;
  // Untimed strokes press for the whole capture, like ink. Timed strokes touch
  // the pad only during the frame their timestamp falls in, as a moving pen does.
  bool timed = false;
};

/// Stimulus file: {"strokes": [{x_mm, y_mm, force_n, t}], "paths": [{points_mm,
/// force_n, step_mm, speed_mm_s, start_s}], "weights": [{row, col, mass_kg,
/// contact_area_mm2}]}. A stroke with "t" or a path with "speed_mm_s" makes
/// the whole stimulus timed.
Stimulus parse_stimulus(const nlohmann::json& doc);

struct CaptureResult {
  std::uint64_t capture_id = 0;
  double timestamp = 0.0;
  StagedOutput staged;
  std::optional<double> crosstalk;  // metric of the raw stage at its peak pixel
  std::size_t rejected_events = 0;
};

struct CaptureJob {
  SessionConfig config;
  Stimulus stimulus;
  std::uint64_t capture_id = 0;
  double start_time = 0.0;  // s; frame k covers [start + k T, start + (k+1) T)
};

struct AdcCapture {
  std::vector<Frame> frames;  // adc_counts, one per raster cycle
  std::size_t rejected_events = 0;
};

/// The n quantized frames of one capture: rasterize + bend baseline, then
/// noisy scans keyed by frame index capture_id * n + k. Timed stimuli are
/// rasterized per frame.
AdcCapture capture_adc_frames(const CaptureJob& job);

/// Simulates one capture: rasterize + bend baseline, n noisy scans, ADC,
/// then the reconstruction stages. Deterministic in the job contents.
CaptureResult run_capture(const CaptureJob& job);

class PadSession {
 public:
  explicit PadSession(SessionConfig config);

  const SessionConfig& config() const { return config_; }
  const Stimulus& stimulus() const { return stimulus_; }
  std::uint64_t next_capture_id() const { return next_capture_id_; }

  /// Replaces the stimulus; timed events are taken relative to the session clock.
  void load(const Stimulus& stimulus);
  /// Live pen input: timed, stamped relative to the start of the next capture.
  void add_strokes(std::span<const StrokeEvent> events);
  void add_weights(std::span<const WeightStimulus> weights);
  void clear();
  /// Start of the next capture, seconds.
  double clock() const { return clock_; }
  void apply_config(const nlohmann::json& delta) { apply_config_delta(config_, delta); }

  /// Snapshots the state for the next capture and advances the capture id and
  /// clock. Timed events that the capture consumes are dropped.
  CaptureJob prepare_capture();
  CaptureResult capture() { return run_capture(prepare_capture()); }

 private:
  SessionConfig config_;
  Stimulus stimulus_;
  std::uint64_t next_capture_id_ = 0;
  double clock_ = 0.0;
};

/// Processes one client message (stroke, clear, config). Returns the replies
/// to send: an error object for malformed input, a report echoing the
/// configuration after a config change, nothing otherwise.
std::vector<nlohmann::json> handle_message(PadSession& session, std::string_view text);

/// Server-to-client messages for one capture: four frame messages
/// (sum, sn, blur, binary) followed by a report.
std::vector<nlohmann::json> capture_messages(const CaptureResult& result, const SessionConfig& config);

nlohmann::json record_to_json(const FrameLogRecord& record);
FrameLogRecord record_from_json(const nlohmann::json& j);

}  // namespace velopad
