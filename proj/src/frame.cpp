#include "velopad/frame.hpp"

#include <algorithm>
#include <numeric>

namespace velopad {

Grid::Grid(std::size_t rows, std::size_t cols, std::vector<double> values)
    : rows_(rows), cols_(cols), values_(std::move(values)) {
  if (values_.size() != rows_ * cols_) {
    throw std::invalid_argument("grid value count does not match rows*cols");
  }
}

double Grid::at(std::size_t r, std::size_t c) const {
  if (r >= rows_ || c >= cols_) {
    throw OutOfBoundsError("grid index (" + std::to_string(r) + ", " + std::to_string(c) +
                           ") outside " + std::to_string(rows_) + "x" + std::to_string(cols_));
  }
  return (*this)(r, c);
}

double Grid::max() const {
  return values_.empty() ? 0.0 : *std::max_element(values_.begin(), values_.end());
}

double Grid::min() const {
  return values_.empty() ? 0.0 : *std::min_element(values_.begin(), values_.end());
}

double Grid::sum() const { return std::accumulate(values_.begin(), values_.end(), 0.0); }

std::string_view to_string(Unit unit) {
  switch (unit) {
    case Unit::volts:
      return "volts";
    case Unit::adc_counts:
      return "adc_counts";
    case Unit::normalized:
      return "normalized";
  }
  return "unknown";
}

}  // namespace velopad
