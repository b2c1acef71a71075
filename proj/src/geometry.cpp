#include "velopad/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace velopad {

void SensorGeometry::validate() const {
  if (rows < 1 || cols < 1) throw std::invalid_argument("geometry needs at least one row and column");
  if (!(line_width > 0.0)) throw std::invalid_argument("line width must be positive");
  if (!(pitch > line_width)) throw std::invalid_argument("pitch must exceed line width");
  if (!(velostat_thickness > 0.0) || !(pcb_thickness > 0.0)) {
    throw std::invalid_argument("layer thicknesses must be positive");
  }
}

SensorGeometry writing_pad_geometry() { return SensorGeometry{}; }

PressureField::PressureField(Grid g) : values(std::move(g)) {
  for (double v : values.values()) {
    if (!(v >= 0.0)) throw std::invalid_argument("pressure field entries must be nonnegative");
  }
}

PressureField& PressureField::operator+=(const PressureField& other) {
  if (!values.same_shape(other.values)) throw std::invalid_argument("pressure field shape mismatch");
  for (std::size_t i = 0; i < values.size(); ++i) values.values()[i] += other.values.values()[i];
  return *this;
}

void BendState::validate() const {
  if (!(bending_radius > 0.0)) throw std::invalid_argument("bending radius must be positive or flat");
  if (!(stress_profile_scale >= 0.0)) throw std::invalid_argument("stress profile scale must be nonnegative");
}

Point pixel_center(const SensorGeometry& geometry, std::size_t row, std::size_t col) {
  if (row >= geometry.rows || col >= geometry.cols) {
    throw OutOfBoundsError("pixel (" + std::to_string(row) + ", " + std::to_string(col) +
                           ") outside the sensor grid");
  }
  const double half = geometry.line_width / 2.0;
  return {static_cast<double>(col) * geometry.pitch + half,
          static_cast<double>(row) * geometry.pitch + half};
}

namespace {

// Spreads `amount` deposited at (row, col) over the grid with a truncated,
// renormalized Gaussian. sigma_px is in pixel units.
void spread(Grid& out, std::size_t row, std::size_t col, double amount, double sigma_px) {
  if (amount == 0.0) return;
  if (sigma_px <= 0.0) {
    out(row, col) += amount;
    return;
  }
  const auto radius = static_cast<long>(std::ceil(4.0 * sigma_px));
  const long r0 = std::max(0L, static_cast<long>(row) - radius);
  const long r1 = std::min(static_cast<long>(out.rows()) - 1, static_cast<long>(row) + radius);
  const long c0 = std::max(0L, static_cast<long>(col) - radius);
  const long c1 = std::min(static_cast<long>(out.cols()) - 1, static_cast<long>(col) + radius);
  const double denom = 2.0 * sigma_px * sigma_px;

  double norm = 0.0;
  for (long r = r0; r <= r1; ++r) {
    for (long c = c0; c <= c1; ++c) {
      const double dr = static_cast<double>(r - static_cast<long>(row));
      const double dc = static_cast<double>(c - static_cast<long>(col));
      norm += std::exp(-(dr * dr + dc * dc) / denom);
    }
  }
  for (long r = r0; r <= r1; ++r) {
    for (long c = c0; c <= c1; ++c) {
      const double dr = static_cast<double>(r - static_cast<long>(row));
      const double dc = static_cast<double>(c - static_cast<long>(col));
      out(static_cast<std::size_t>(r), static_cast<std::size_t>(c)) +=
          amount * std::exp(-(dr * dr + dc * dc) / denom) / norm;
    }
  }
}

// Fractional grid coordinate of a pad position, clamped to [0, n-1].
double fractional_index(double position, double pitch, double half_width, std::size_t n) {
  const double u = (position - half_width) / pitch;
  return std::clamp(u, 0.0, static_cast<double>(n - 1));
}

}  // namespace

RasterizeResult rasterize_stimulus(std::span<const StrokeEvent> strokes,
                                   std::span<const WeightStimulus> weights,
                                   const SensorGeometry& geometry, double diffusion_sigma) {
  geometry.validate();
  if (!(diffusion_sigma >= 0.0)) throw std::invalid_argument("diffusion sigma must be nonnegative");

  // Point deposits first, then diffusion per deposited pixel.
  Grid deposits(geometry.rows, geometry.cols, 0.0);
  RasterizeResult result;
  const double half = geometry.line_width / 2.0;

  for (const auto& s : strokes) {
    const bool inside = s.x >= 0.0 && s.x <= geometry.extent_x() && s.y >= 0.0 &&
                        s.y <= geometry.extent_y();
    if (!inside || !(s.force >= 0.0) || !std::isfinite(s.force)) {
      ++result.rejected;
      continue;
    }
    const double u = fractional_index(s.x, geometry.pitch, half, geometry.cols);
    const double v = fractional_index(s.y, geometry.pitch, half, geometry.rows);
    const auto c0 = static_cast<std::size_t>(std::floor(u));
    const auto r0 = static_cast<std::size_t>(std::floor(v));
    const std::size_t c1 = std::min(c0 + 1, geometry.cols - 1);
    const std::size_t r1 = std::min(r0 + 1, geometry.rows - 1);
    const double fu = u - static_cast<double>(c0);
    const double fv = v - static_cast<double>(r0);
    deposits(r0, c0) += s.force * (1.0 - fu) * (1.0 - fv);
    deposits(r0, c1) += s.force * fu * (1.0 - fv);
    deposits(r1, c0) += s.force * (1.0 - fu) * fv;
    deposits(r1, c1) += s.force * fu * fv;
  }

  for (const auto& w : weights) {
    if (!geometry.contains(w.target) || !(w.mass > 0.0) || !(w.contact_area > 0.0)) {
      ++result.rejected;
      continue;
    }
    deposits[w.target] += w.force();
  }

  const double sigma_px = diffusion_sigma / geometry.pitch;
  Grid field(geometry.rows, geometry.cols, 0.0);
  for (std::size_t r = 0; r < geometry.rows; ++r) {
    for (std::size_t c = 0; c < geometry.cols; ++c) spread(field, r, c, deposits(r, c), sigma_px);
  }
  result.field.values = std::move(field);
  return result;
}

double curvature(std::span<const Point> samples, double at) {
  if (samples.size() < 5) throw std::invalid_argument("curvature needs at least 5 samples");
  for (std::size_t i = 1; i < samples.size(); ++i) {
    if (!(samples[i].x > samples[i - 1].x)) {
      throw std::invalid_argument("curvature samples must be strictly increasing in x");
    }
  }
  if (!(at >= samples.front().x && at <= samples.back().x)) {
    throw std::invalid_argument("curvature point is not bracketed by the samples");
  }

  // Centre the three-point stencil on the nearest interior sample.
  std::size_t k = 1;
  double best = std::abs(samples[1].x - at);
  for (std::size_t i = 2; i + 1 < samples.size(); ++i) {
    const double d = std::abs(samples[i].x - at);
    if (d < best) {
      best = d;
      k = i;
    }
  }
  const Point& a = samples[k - 1];
  const Point& b = samples[k];
  const Point& c = samples[k + 1];

  // Quadratic through (a, b, c); derivatives evaluated at `at`.
  const double h0 = b.x - a.x;
  const double h1 = c.x - b.x;
  const double second = 2.0 * (h0 * c.y - (h0 + h1) * b.y + h1 * a.y) / (h0 * h1 * (h0 + h1));
  const double slope_mid = (h0 * h0 * (c.y - b.y) + h1 * h1 * (b.y - a.y)) / (h0 * h1 * (h0 + h1));
  const double first = slope_mid + second * (at - b.x);

  return std::abs(second) / std::pow(1.0 + first * first, 1.5);
}

double bending_radius(double kappa) {
  if (!(kappa >= 0.0)) throw std::invalid_argument("curvature must be nonnegative");
  if (kappa == 0.0) return std::numeric_limits<double>::infinity();
  return 1.0 / kappa;
}

PressureField bend_stress_field(const BendState& bend, const SensorGeometry& geometry) {
  bend.validate();
  geometry.validate();
  PressureField field(geometry);
  if (bend.flat()) return field;

  const double amplitude = bend.stress_profile_scale / bend.bending_radius;
  const std::size_t span_len = bend.axis == BendAxis::horizontal ? geometry.rows : geometry.cols;
  for (std::size_t r = 0; r < geometry.rows; ++r) {
    for (std::size_t c = 0; c < geometry.cols; ++c) {
      const std::size_t along = bend.axis == BendAxis::horizontal ? r : c;
      const double ramp =
          span_len == 1 ? 1.0 : static_cast<double>(along) / static_cast<double>(span_len - 1);
      field.values(r, c) = amplitude * ramp;
    }
  }
  return field;
}

}  // namespace velopad
