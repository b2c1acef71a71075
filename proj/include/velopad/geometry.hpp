#pragma once

// Sensor grid geometry, stimulus rasterization, and the mechanical side of
// the model (force diffusion through the film, bend-induced stress).
//
// Pad coordinates: origin at the corner of the first crossover, x runs along
// columns, y runs along rows. All lengths are metres. Pressure fields carry
// force per pixel in newtons.

#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include "velopad/frame.hpp"

namespace velopad {

inline constexpr double standard_gravity = 9.80665;

struct SensorGeometry {
  std::size_t rows = 16;
  std::size_t cols = 16;
  double pitch = 3.0e-3;
  double line_width = 0.254e-3;
  double velostat_thickness = 106e-6;
  double pcb_thickness = 180e-6;

  /// Throws std::invalid_argument when an invariant is violated.
  void validate() const;

  /// Sensing extent along x (columns).
  double extent_x() const { return static_cast<double>(cols - 1) * pitch + line_width; }
  /// Sensing extent along y (rows).
  double extent_y() const { return static_cast<double>(rows - 1) * pitch + line_width; }

  bool contains(PixelIndex p) const { return p.row < rows && p.col < cols; }
};

/// The 16x16 writing pad: 3 mm pitch, 0.254 mm copper lines.
SensorGeometry writing_pad_geometry();

struct Point {
  double x = 0.0;
  double y = 0.0;
};

struct StrokeEvent {
  double x = 0.0;
  double y = 0.0;
  double force = 0.0;  // N
  double timestamp = 0.0;
};

struct WeightStimulus {
  PixelIndex target;
  double mass = 0.5;             // kg
  double contact_area = 1.0e-4;  // m^2

  double force() const { return mass * standard_gravity; }
};

/// Per-pixel applied force (N). Entries are never negative.
struct PressureField {
  Grid values;

  PressureField() = default;
  explicit PressureField(const SensorGeometry& g) : values(g.rows, g.cols, 0.0) {}
  explicit PressureField(Grid g);

  double total() const { return values.sum(); }
  PressureField& operator+=(const PressureField& other);
};

enum class BendAxis { horizontal, vertical };

struct BendState {
  double bending_radius = std::numeric_limits<double>::infinity();
  BendAxis axis = BendAxis::horizontal;
  double stress_profile_scale = 0.02;  // N*m: peak baseline force is scale / radius

  bool flat() const { return bending_radius == std::numeric_limits<double>::infinity(); }
  void validate() const;
};

Point pixel_center(const SensorGeometry& geometry, std::size_t row, std::size_t col);

struct RasterizeResult {
  PressureField field;
  std::size_t rejected = 0;  // stimuli outside the sensing extent or with invalid force
};

/// Deposits each stimulus at its nearest pixel(s), then spreads it with a
/// normalized Gaussian of standard deviation `diffusion_sigma` (metres).
/// Stroke events are split bilinearly between the surrounding pixel centres.
/// Near the border the kernel is truncated to the grid and renormalized, so
/// the deposited force is conserved exactly.
RasterizeResult rasterize_stimulus(std::span<const StrokeEvent> strokes,
                                   std::span<const WeightStimulus> weights,
                                   const SensorGeometry& geometry, double diffusion_sigma);

/// Curvature of y = f(x) at `at`, from finite-difference estimates of y' and
/// y'' on the three samples nearest `at`.
double curvature(std::span<const Point> samples, double at);

/// R = 1/kappa; kappa = 0 yields +infinity (flat).
double bending_radius(double kappa);

/// Baseline force added by bending. Linear ramp along the bend axis (zero at
/// the first row/column, peak at the last) with peak = scale / radius.
PressureField bend_stress_field(const BendState& bend, const SensorGeometry& geometry);

}  // namespace velopad
