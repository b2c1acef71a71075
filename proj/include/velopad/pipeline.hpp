#pragma once

// Reconstruction chain for the writing pad:
//   accumulate n frames -> square and normalize -> Gaussian blur -> threshold at the mean.

#include <span>
#include <vector>

#include "velopad/frame.hpp"

namespace velopad {

enum class Normalization {
  square_by_max,  // square each value, divide by the largest square
  softmax,        // softmax over max-scaled values, rescaled so the peak is 1
};

struct PipelineConfig {
  int frames_per_capture = 100;
  double blur_sigma = 0.6;  // pixels
  int kernel_radius = -1;   // pixels; negative means ceil(3 * sigma)
  Normalization normalization = Normalization::square_by_max;
  double softmax_temperature = 0.1;

  void validate() const;
  int effective_kernel_radius() const;
};

struct StagedOutput {
  Frame raw;
  Frame squared_normalized;
  Frame blurred;
  Frame binary;

  friend bool operator==(const StagedOutput&, const StagedOutput&) = default;
};

/// Elementwise sum of exactly `n` frames of equal shape and unit.
Frame accumulate(std::span<const Frame> frames, int n);

/// Squares each value and divides by the largest square. An all-zero frame
/// comes back unchanged. Negative readings are rejected.
Frame square_and_normalize(const Frame& frame);

/// Softmax over values scaled by the frame maximum, divided by its own peak.
Frame softmax_normalize(const Frame& frame, double temperature);

/// Sum-normalized, sampled 1-D Gaussian of half-width `radius`.
std::vector<double> gaussian_kernel(double sigma, int radius);

/// Separable Gaussian blur with replicate borders. sigma = 0 is the identity.
Frame gaussian_blur(const Frame& frame, double sigma, int kernel_radius);

/// 1 where the value strictly exceeds the frame mean, else 0.
Frame adaptive_threshold(const Frame& frame);

StagedOutput run_pipeline(std::span<const Frame> frames, const PipelineConfig& config);

}  // namespace velopad
