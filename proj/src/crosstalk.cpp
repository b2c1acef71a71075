#include "velopad/crosstalk.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace velopad {

std::string_view to_string(NeighborhoodKind kind) {
  switch (kind) {
    case NeighborhoodKind::corner:
      return "corner";
    case NeighborhoodKind::edge:
      return "edge";
    case NeighborhoodKind::center:
      return "center";
    case NeighborhoodKind::other:
      return "other";
  }
  return "other";
}

Neighborhood neighborhood(PixelIndex s, std::size_t rows, std::size_t cols) {
  if (rows < 2 || cols < 2) throw std::invalid_argument("neighbourhoods need a grid of at least 2x2");
  if (s.row >= rows || s.col >= cols) throw OutOfBoundsError("stimulated pixel outside the grid");

  Neighborhood hood;
  hood.stimulated = s;
  for (int dr = -1; dr <= 1; ++dr) {
    for (int dc = -1; dc <= 1; ++dc) {
      if (dr == 0 && dc == 0) continue;
      const long r = static_cast<long>(s.row) + dr;
      const long c = static_cast<long>(s.col) + dc;
      if (r < 0 || c < 0 || r >= static_cast<long>(rows) || c >= static_cast<long>(cols)) continue;
      const double d = (dr != 0 && dc != 0) ? std::numbers::sqrt2 : 1.0;
      hood.members.push_back({{static_cast<std::size_t>(r), static_cast<std::size_t>(c)}, d});
    }
  }
  switch (hood.members.size()) {
    case 3:
      hood.kind = NeighborhoodKind::corner;
      break;
    case 5:
      hood.kind = NeighborhoodKind::edge;
      break;
    case 8:
      hood.kind = NeighborhoodKind::center;
      break;
    default:
      hood.kind = NeighborhoodKind::other;
  }
  return hood;
}

CrosstalkValue crosstalk(const CrosstalkInput& input) {
  if (input.neighbors.empty()) throw std::invalid_argument("crosstalk needs at least one neighbour");
  if (!(input.stimulated_reading > 0.0)) {
    throw UndefinedMetricError("crosstalk is undefined when the stimulated pixel reads <= 0");
  }
  double weighted = 0.0;
  double distances = 0.0;
  bool exceeds = false;
  for (const auto& n : input.neighbors) {
    if (!(n.reading >= 0.0)) throw std::invalid_argument("neighbour readings must be nonnegative");
    if (!(n.distance > 0.0)) throw std::invalid_argument("neighbour distances must be positive");
    weighted += n.distance * n.reading;
    distances += n.distance;
    exceeds = exceeds || n.reading > input.stimulated_reading;
  }
  return {weighted / (input.stimulated_reading * distances), exceeds};
}

CrosstalkInput crosstalk_input(const Frame& frame, const Neighborhood& hood) {
  CrosstalkInput in;
  in.stimulated_reading = frame.values.at(hood.stimulated.row, hood.stimulated.col);
  in.neighbors.reserve(hood.members.size());
  for (const auto& m : hood.members) in.neighbors.push_back({m.distance, frame.values.at(m.at.row, m.at.col)});
  return in;
}

CrosstalkValue crosstalk_frame(const Frame& frame, PixelIndex s) {
  return crosstalk(crosstalk_input(frame, neighborhood(s, frame.rows(), frame.cols())));
}

SummaryStats summarize(std::span<const PixelCrosstalk> values) {
  SummaryStats s;
  double sum = 0.0;
  for (const auto& v : values) {
    if (!v.value) continue;
    if (s.count == 0) {
      s.min = s.max = *v.value;
    }
    s.min = std::min(s.min, *v.value);
    s.max = std::max(s.max, *v.value);
    sum += *v.value;
    ++s.count;
  }
  if (s.count == 0) return s;
  s.mean = sum / static_cast<double>(s.count);
  double sq = 0.0;
  for (const auto& v : values) {
    if (v.value) sq += (*v.value - s.mean) * (*v.value - s.mean);
  }
  s.std = std::sqrt(sq / static_cast<double>(s.count));
  return s;
}

std::vector<CrosstalkReport> characterize(const CharacterizationSetup& setup,
                                          std::span<const double> masses,
                                          std::span<const double> pitches, bool per_pixel) {
  if (masses.empty() || pitches.empty()) throw std::invalid_argument("characterize needs nonempty sweeps");

  std::vector<double> sorted_pitches(pitches.begin(), pitches.end());
  std::vector<double> sorted_masses(masses.begin(), masses.end());
  std::sort(sorted_pitches.begin(), sorted_pitches.end());
  std::sort(sorted_masses.begin(), sorted_masses.end());

  const double sigma = effective_diffusion_sigma(setup.readout.mechanisms, setup.diffusion_sigma);
  std::vector<CrosstalkReport> reports;
  for (double pitch : sorted_pitches) {
    SensorGeometry geometry = setup.geometry;
    geometry.pitch = pitch;
    geometry.validate();

    std::vector<PixelIndex> targets;
    if (per_pixel) {
      for (std::size_t r = 0; r < geometry.rows; ++r) {
        for (std::size_t c = 0; c < geometry.cols; ++c) targets.push_back({r, c});
      }
    } else {
      targets.push_back({geometry.rows / 2, geometry.cols / 2});
    }

    for (double mass : sorted_masses) {
      CrosstalkReport report;
      report.pitch = pitch;
      report.mass = mass;
      report.mechanisms = setup.readout.mechanisms;
      for (const auto& target : targets) {
        const WeightStimulus weight{target, mass, setup.contact_area};
        const auto raster = rasterize_stimulus({}, std::span(&weight, 1), geometry, sigma);
        if (raster.rejected != 0) throw std::invalid_argument("characterize: weight stimulus rejected");
        const Frame frame = scan_frame(geometry, raster.field, setup.model, setup.readout, setup.seed);

        PixelCrosstalk entry{target, std::nullopt, false};
        try {
          const auto c = crosstalk_frame(frame, target);
          entry.value = c.value;
          entry.neighbor_exceeds_stimulus = c.neighbor_exceeds_stimulus;
        } catch (const UndefinedMetricError&) {
          // left undefined; reported as such
        }
        report.per_pixel.push_back(entry);
      }
      report.stats = summarize(report.per_pixel);
      reports.push_back(std::move(report));
    }
  }
  return reports;
}

}  // namespace velopad
