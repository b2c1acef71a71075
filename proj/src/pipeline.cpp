#include "velopad/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace velopad {

void PipelineConfig::validate() const {
  if (frames_per_capture < 1) throw std::invalid_argument("frames per capture must be at least 1");
  if (!(blur_sigma >= 0.0)) throw std::invalid_argument("blur sigma must be nonnegative");
  if (!(softmax_temperature > 0.0)) throw std::invalid_argument("softmax temperature must be positive");
}

int PipelineConfig::effective_kernel_radius() const {
  return kernel_radius >= 0 ? kernel_radius : static_cast<int>(std::ceil(3.0 * blur_sigma));
}

Frame accumulate(std::span<const Frame> frames, int n) {
  if (n < 1 || frames.size() != static_cast<std::size_t>(n)) {
    throw std::invalid_argument("accumulate expects exactly " + std::to_string(n) + " frames, got " +
                                std::to_string(frames.size()));
  }
  Frame sum = frames.front();
  for (std::size_t k = 1; k < frames.size(); ++k) {
    if (!frames[k].values.same_shape(sum.values) || frames[k].unit != sum.unit) {
      throw std::invalid_argument("accumulate: frame " + std::to_string(k) + " has a different shape or unit");
    }
    auto& acc = sum.values.values();
    const auto& add = frames[k].values.values();
    for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += add[i];
  }
  return sum;
}

Frame square_and_normalize(const Frame& frame) {
  Frame out(frame.values, Unit::normalized);
  double peak = 0.0;
  for (double& v : out.values.values()) {
    if (!(v >= 0.0)) throw std::invalid_argument("square_and_normalize: negative reading");
    v *= v;
    peak = std::max(peak, v);
  }
  if (peak == 0.0) return out;
  for (double& v : out.values.values()) v /= peak;
  return out;
}

Frame softmax_normalize(const Frame& frame, double temperature) {
  Frame out(frame.values, Unit::normalized);
  const double peak = frame.values.max();
  if (frame.values.min() < 0.0) throw std::invalid_argument("softmax_normalize: negative reading");
  if (peak == 0.0) return out;
  // exp((x/peak - 1)/T) is the softmax divided by its largest term.
  for (double& v : out.values.values()) v = std::exp((v / peak - 1.0) / temperature);
  return out;
}

std::vector<double> gaussian_kernel(double sigma, int radius) {
  if (radius < 0) throw std::invalid_argument("kernel radius must be nonnegative");
  std::vector<double> k(static_cast<std::size_t>(2 * radius + 1), 0.0);
  if (sigma <= 0.0) {
    k[static_cast<std::size_t>(radius)] = 1.0;
    return k;
  }
  double total = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    const double w = std::exp(-static_cast<double>(i * i) / (2.0 * sigma * sigma));
    k[static_cast<std::size_t>(i + radius)] = w;
    total += w;
  }
  for (double& w : k) w /= total;
  return k;
}

Frame gaussian_blur(const Frame& frame, double sigma, int kernel_radius) {
  if (!(sigma >= 0.0)) throw std::invalid_argument("blur sigma must be nonnegative");
  if (sigma == 0.0 || kernel_radius == 0) return frame;

  const auto kernel = gaussian_kernel(sigma, kernel_radius);
  const long rows = static_cast<long>(frame.rows());
  const long cols = static_cast<long>(frame.cols());
  auto clamp_to = [](long v, long n) { return std::clamp(v, 0L, n - 1); };

  Grid horizontal(frame.rows(), frame.cols(), 0.0);
  for (long r = 0; r < rows; ++r) {
    for (long c = 0; c < cols; ++c) {
      double acc = 0.0;
      for (long k = -kernel_radius; k <= kernel_radius; ++k) {
        acc += kernel[static_cast<std::size_t>(k + kernel_radius)] *
               frame.values(static_cast<std::size_t>(r), static_cast<std::size_t>(clamp_to(c + k, cols)));
      }
      horizontal(static_cast<std::size_t>(r), static_cast<std::size_t>(c)) = acc;
    }
  }
  // Each output is a convex combination of inputs; clamping only strips rounding.
  const double lo = frame.values.min();
  const double hi = frame.values.max();
  Frame out(Grid(frame.rows(), frame.cols(), 0.0), frame.unit);
  for (long r = 0; r < rows; ++r) {
    for (long c = 0; c < cols; ++c) {
      double acc = 0.0;
      for (long k = -kernel_radius; k <= kernel_radius; ++k) {
        acc += kernel[static_cast<std::size_t>(k + kernel_radius)] *
               horizontal(static_cast<std::size_t>(clamp_to(r + k, rows)), static_cast<std::size_t>(c));
      }
      out(static_cast<std::size_t>(r), static_cast<std::size_t>(c)) = std::clamp(acc, lo, hi);
    }
  }
  return out;
}

Frame adaptive_threshold(const Frame& frame) {
  const auto& v = frame.values.values();
  const double mean = v.empty() ? 0.0 : frame.values.sum() / static_cast<double>(v.size());
  Frame out(Grid(frame.rows(), frame.cols(), 0.0), Unit::normalized);
  // A constant frame has nothing above its mean; the rounded mean could say otherwise.
  if (frame.values.min() == frame.values.max()) return out;
  for (std::size_t i = 0; i < v.size(); ++i) out.values.values()[i] = v[i] > mean ? 1.0 : 0.0;
  return out;
}

StagedOutput run_pipeline(std::span<const Frame> frames, const PipelineConfig& config) {
  config.validate();
  StagedOutput out;
  out.raw = accumulate(frames, config.frames_per_capture);
  out.squared_normalized = config.normalization == Normalization::softmax
                               ? softmax_normalize(out.raw, config.softmax_temperature)
                               : square_and_normalize(out.raw);
  out.blurred = gaussian_blur(out.squared_normalized, config.blur_sigma, config.effective_kernel_radius());
  out.binary = adaptive_threshold(out.blurred);
  return out;
}

}  // namespace velopad
