#pragma once

// Helpers shared by the stroke-legibility checks.

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "velopad/session.hpp"

namespace test_support {

inline nlohmann::json load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("missing fixture " + path);
  return nlohmann::json::parse(in);
}

inline velopad::Stimulus load_stimulus(const std::string& path) { return velopad::parse_stimulus(load_json(path)); }

inline double segment_distance(velopad::Point p, velopad::Point a, velopad::Point b) {
  const double dx = b.x - a.x;
  const double dy = b.y - a.y;
  const double len2 = dx * dx + dy * dy;
  double t = len2 == 0.0 ? 0.0 : ((p.x - a.x) * dx + (p.y - a.y) * dy) / len2;
  t = std::fmax(0.0, std::fmin(1.0, t));
  return std::hypot(p.x - (a.x + t * dx), p.y - (a.y + t * dy));
}

/// Pixels whose centres lie on one of the fixture's paths.
inline velopad::Grid stroke_mask(const std::string& path, const velopad::SensorGeometry& g) {
  const auto doc = load_json(path);
  velopad::Grid mask(g.rows, g.cols, 0.0);
  for (const auto& p : doc.at("paths")) {
    std::vector<velopad::Point> pts;
    for (const auto& xy : p.at("points_mm")) pts.push_back({xy.at(0).get<double>() * 1e-3, xy.at(1).get<double>() * 1e-3});
    for (std::size_t r = 0; r < g.rows; ++r) {
      for (std::size_t c = 0; c < g.cols; ++c) {
        const auto centre = velopad::pixel_center(g, r, c);
        for (std::size_t i = 1; i < pts.size(); ++i) {
          if (segment_distance(centre, pts[i - 1], pts[i]) < 1e-6) mask(r, c) = 1.0;
        }
      }
    }
  }
  return mask;
}

inline std::size_t count(const velopad::Grid& g) {
  std::size_t n = 0;
  for (double v : g.values()) n += v != 0.0 ? 1 : 0;
  return n;
}

/// Fraction of mask pixels that are set in `binary`.
inline double overlap(const velopad::Frame& binary, const velopad::Grid& mask) {
  std::size_t hit = 0;
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (mask.values()[i] != 0.0 && binary.values.values()[i] != 0.0) ++hit;
  }
  return static_cast<double>(hit) / static_cast<double>(count(mask));
}

/// Fraction of set pixels in `binary` that touch the mask (8-neighbourhood).
inline double near_fraction(const velopad::Frame& binary, const velopad::Grid& mask) {
  std::size_t set = 0;
  std::size_t near = 0;
  const auto rows = static_cast<long>(mask.rows());
  const auto cols = static_cast<long>(mask.cols());
  for (long r = 0; r < rows; ++r) {
    for (long c = 0; c < cols; ++c) {
      if (binary.values(static_cast<std::size_t>(r), static_cast<std::size_t>(c)) == 0.0) continue;
      ++set;
      bool hit = false;
      for (long rr = std::max(0L, r - 1); rr <= std::min(rows - 1, r + 1); ++rr) {
        for (long cc = std::max(0L, c - 1); cc <= std::min(cols - 1, c + 1); ++cc) {
          hit = hit || mask(static_cast<std::size_t>(rr), static_cast<std::size_t>(cc)) != 0.0;
        }
      }
      near += hit ? 1 : 0;
    }
  }
  return set == 0 ? 0.0 : static_cast<double>(near) / static_cast<double>(set);
}

/// Number of 8-connected components of set pixels.
inline std::size_t components(const velopad::Frame& binary) {
  const auto rows = static_cast<long>(binary.rows());
  const auto cols = static_cast<long>(binary.cols());
  std::vector<char> seen(binary.values.size(), 0);
  std::size_t n = 0;
  for (long r0 = 0; r0 < rows; ++r0) {
    for (long c0 = 0; c0 < cols; ++c0) {
      const auto i0 = static_cast<std::size_t>(r0 * cols + c0);
      if (seen[i0] || binary.values.values()[i0] == 0.0) continue;
      ++n;
      std::vector<std::pair<long, long>> stack{{r0, c0}};
      seen[i0] = 1;
      while (!stack.empty()) {
        const auto [r, c] = stack.back();
        stack.pop_back();
        for (long dr = -1; dr <= 1; ++dr) {
          for (long dc = -1; dc <= 1; ++dc) {
            const long rr = r + dr;
            const long cc = c + dc;
            if (rr < 0 || cc < 0 || rr >= rows || cc >= cols) continue;
            const auto j = static_cast<std::size_t>(rr * cols + cc);
            if (seen[j] || binary.values.values()[j] == 0.0) continue;
            seen[j] = 1;
            stack.push_back({rr, cc});
          }
        }
      }
    }
  }
  return n;
}

}  // namespace test_support
