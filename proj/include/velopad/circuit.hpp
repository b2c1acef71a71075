#pragma once

// Electrical model of the crossbar. Each crossover is a velostat pixel whose
// resistance falls with applied force. A pixel is read by driving its row
// electrode at v_dd and returning its column electrode to ground through the
// bias resistor; every other electrode floats unless the grounding
// mitigation is enabled. The reading is the voltage across the bias resistor.

#include <cstdint>
#include <limits>
#include <vector>

#include "velopad/frame.hpp"
#include "velopad/geometry.hpp"

namespace velopad {

inline constexpr double open_circuit = std::numeric_limits<double>::infinity();

struct VelostatModel {
  double r_off = 100e3;
  double r_on = 200.0;
  double p_half = 0.2;  // N
  double gamma = 1.5;
  double r_sheet = 50e3;  // lateral resistance at sheet_reference_pitch; +inf disables
  double sheet_reference_pitch = 3.0e-3;

  void validate() const;
};

/// Crosstalk mechanisms that can be switched off individually.
struct Mechanisms {
  bool sheet_paths = true;
  bool finite_off = true;
  bool diffusion = true;

  static Mechanisms all_off() { return {false, false, false}; }
  friend bool operator==(const Mechanisms&, const Mechanisms&) = default;
};

struct ReadoutConfig {
  double v_dd = 3.3;
  double r_bias = 1000.0;
  int adc_bits = 10;
  double frame_period = 0.1;  // s
  int frames_per_capture = 100;
  Mechanisms mechanisms;
  bool ground_unselected = false;  // mitigation: tie unselected lines to 0 V
  double noise_sigma = 0.0;        // V, additive per reading

  void validate() const;
  int adc_full_scale() const { return (1 << adc_bits) - 1; }
};

/// R(p) = r_on + (r_off - r_on) / (1 + (p / p_half)^gamma).
double velostat_resistance(double pressure, const VelostatModel& model);

/// Pixel resistance under the enabled mechanisms: with finite_off disabled an
/// unpressed pixel (p == 0) is an open circuit.
double pixel_resistance(double pressure, const VelostatModel& model, const Mechanisms& mechanisms);

struct PixelElement {
  PixelIndex at;
  double resistance = open_circuit;
};

struct LateralElement {
  std::size_t a = 0;  // junction node
  std::size_t b = 0;  // junction node
  double resistance = open_circuit;
};

/// Nodes: row electrodes [0, rows), column electrodes [rows, rows + cols),
/// and with sheet paths one junction node per crossover inside the film.
/// With junctions each pixel is split into two equal halves through its
/// junction: row -- R/2 -- junction -- R/2 -- column.
class ResistorNetwork {
 public:
  ResistorNetwork(std::size_t rows, std::size_t cols, bool with_junctions);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool has_junctions() const { return with_junctions_; }
  std::size_t node_count() const;

  std::size_t row_node(std::size_t r) const { return r; }
  std::size_t col_node(std::size_t c) const { return rows_ + c; }
  std::size_t junction_node(std::size_t r, std::size_t c) const;

  const std::vector<PixelElement>& pixels() const { return pixels_; }
  const std::vector<LateralElement>& laterals() const { return laterals_; }

  PixelElement& pixel(std::size_t r, std::size_t c) { return pixels_[r * cols_ + c]; }
  const PixelElement& pixel(std::size_t r, std::size_t c) const { return pixels_[r * cols_ + c]; }
  void add_lateral(LateralElement e) { laterals_.push_back(e); }

  /// Number of branches that conduct (finite resistance).
  std::size_t conducting_branch_count() const;

 private:
  std::size_t rows_;
  std::size_t cols_;
  bool with_junctions_;
  std::vector<PixelElement> pixels_;
  std::vector<LateralElement> laterals_;
};

ResistorNetwork build_network(const SensorGeometry& geometry, const PressureField& field,
                              const VelostatModel& model, const Mechanisms& mechanisms);

/// Voltage across the bias resistor when `selected` is addressed. Networks
/// with no current path from the driven row to the sensed column read 0 V.
double read_pixel(const ResistorNetwork& network, PixelIndex selected, const ReadoutConfig& config);

/// Raster scan in row-major order. Noise (config.noise_sigma) is drawn from a
/// stream keyed by (seed, frame_index, row, col), so the result does not
/// depend on evaluation order. Noisy readings are clamped to [0, v_dd].
Frame scan_frame(const SensorGeometry& geometry, const PressureField& field,
                 const VelostatModel& model, const ReadoutConfig& config, std::uint64_t seed,
                 std::uint64_t frame_index = 0);

/// frames_per_capture consecutive scans of a static field. Equivalent to
/// calling scan_frame for frame indices first_frame .. first_frame + n - 1.
std::vector<Frame> capture_frames(const SensorGeometry& geometry, const PressureField& field,
                                  const VelostatModel& model, const ReadoutConfig& config,
                                  std::uint64_t seed, std::uint64_t first_frame = 0);

/// counts = floor(clamp(v, 0, v_dd) / v_dd * (2^bits - 1) + 0.5)
Frame adc_quantize(const Frame& volts, const ReadoutConfig& config);

/// Diffusion length actually applied under the configured mechanisms.
inline double effective_diffusion_sigma(const Mechanisms& m, double diffusion_sigma) {
  return m.diffusion ? diffusion_sigma : 0.0;
}

}  // namespace velopad
