#pragma once

// Distance-weighted crosstalk metric:
//
//   C = sum_i d_i * p_i / (p_0 * sum_i d_i)
//
// p_0 is the reading at the stimulated pixel, p_i and d_i the readings and
// Euclidean distances (pixel units) of its neighbours. When every p_i <= p_0
// the value lies in [0, 1].

#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "velopad/circuit.hpp"
#include "velopad/frame.hpp"
#include "velopad/geometry.hpp"

namespace velopad {

/// The metric is undefined when the stimulated pixel reads nothing.
class UndefinedMetricError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

enum class NeighborhoodKind { corner, edge, center, other };

std::string_view to_string(NeighborhoodKind kind);

struct Neighbor {
  PixelIndex at;
  double distance = 1.0;
};

struct Neighborhood {
  PixelIndex stimulated;
  std::vector<Neighbor> members;
  NeighborhoodKind kind = NeighborhoodKind::other;
};

/// In-grid cells within Chebyshev distance 1 of `s`, excluding `s`.
Neighborhood neighborhood(PixelIndex s, std::size_t rows, std::size_t cols);

struct NeighborReading {
  double distance = 1.0;
  double reading = 0.0;
};

struct CrosstalkInput {
  double stimulated_reading = 0.0;
  std::vector<NeighborReading> neighbors;
};

struct CrosstalkValue {
  double value = 0.0;
  /// Set when some neighbour read more than the stimulated pixel; the value is
  /// then above 1 and returned as is.
  bool neighbor_exceeds_stimulus = false;
};

CrosstalkValue crosstalk(const CrosstalkInput& input);

/// Builds the input for an arbitrary neighbourhood from a frame.
CrosstalkInput crosstalk_input(const Frame& frame, const Neighborhood& hood);

/// Metric at `s` over its adjacent ring.
CrosstalkValue crosstalk_frame(const Frame& frame, PixelIndex s);

struct PixelCrosstalk {
  PixelIndex at;
  std::optional<double> value;  // empty when the metric is undefined
  bool neighbor_exceeds_stimulus = false;
};

struct SummaryStats {
  std::size_t count = 0;  // defined values only
  double mean = 0.0;
  double std = 0.0;  // population standard deviation
  double min = 0.0;
  double max = 0.0;
};

SummaryStats summarize(std::span<const PixelCrosstalk> values);

struct CrosstalkReport {
  double pitch = 0.0;  // m
  double mass = 0.0;   // kg
  Mechanisms mechanisms;
  std::vector<PixelCrosstalk> per_pixel;
  SummaryStats stats;
};

struct CharacterizationSetup {
  SensorGeometry geometry;  // pitch is overridden by each sweep point
  VelostatModel model;
  ReadoutConfig readout;
  double diffusion_sigma = 0.0;  // m, fixed across the sweep
  double contact_area = 1.0e-4;  // m^2
  std::uint64_t seed = 0;
};

/// For every (pitch, mass) pair: place the weight on the centre pixel (or on
/// each pixel in turn when `per_pixel`), scan once, and evaluate the metric at
/// the stimulated pixel. Reports are ordered by pitch, then mass.
std::vector<CrosstalkReport> characterize(const CharacterizationSetup& setup,
                                          std::span<const double> masses,
                                          std::span<const double> pitches, bool per_pixel);

}  // namespace velopad
