#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace velopad {

/// Raised when a row/column index falls outside the sensor grid.
class OutOfBoundsError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

struct PixelIndex {
  std::size_t row = 0;
  std::size_t col = 0;

  friend bool operator==(const PixelIndex&, const PixelIndex&) = default;
};

/// Dense row-major matrix of doubles, sized to the sensor grid.
class Grid {
 public:
  Grid() = default;
  Grid(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), values_(rows * cols, fill) {}
  Grid(std::size_t rows, std::size_t cols, std::vector<double> values);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return values_.size(); }

  double& operator()(std::size_t r, std::size_t c) { return values_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return values_[r * cols_ + c]; }
  double& operator[](PixelIndex p) { return (*this)(p.row, p.col); }
  double operator[](PixelIndex p) const { return (*this)(p.row, p.col); }

  /// Bounds-checked access.
  double at(std::size_t r, std::size_t c) const;

  std::vector<double>& values() { return values_; }
  const std::vector<double>& values() const { return values_; }

  bool same_shape(const Grid& other) const {
    return rows_ == other.rows_ && cols_ == other.cols_;
  }

  double max() const;
  double min() const;
  double sum() const;

  friend bool operator==(const Grid&, const Grid&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> values_;
};

enum class Unit { volts, adc_counts, normalized };

std::string_view to_string(Unit unit);

/// One complete matrix of readings from a single raster cycle, or a derived stage.
struct Frame {
  Grid values;
  Unit unit = Unit::volts;

  Frame() = default;
  Frame(Grid g, Unit u) : values(std::move(g)), unit(u) {}

  std::size_t rows() const { return values.rows(); }
  std::size_t cols() const { return values.cols(); }
  double operator()(std::size_t r, std::size_t c) const { return values(r, c); }
  double& operator()(std::size_t r, std::size_t c) { return values(r, c); }

  friend bool operator==(const Frame&, const Frame&) = default;
};

}  // namespace velopad
