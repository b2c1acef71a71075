#pragma once

// Crosstalk report serialization.
//
// Table form, one line per item:
//   summary,<pitch_mm>,<mass_kg>,<mechanisms>,<count>,<mean>,<std>,<min>,<max>
//   pixel,<pitch_mm>,<mass_kg>,<row>,<col>,<C | undefined>
// `std` is the population standard deviation of the defined per-pixel values.

#include <iosfwd>
#include <vector>

#include <json.hpp>

#include "velopad/crosstalk.hpp"

namespace velopad {

void write_report_table(std::ostream& out, const std::vector<CrosstalkReport>& reports);
nlohmann::json reports_to_json(const std::vector<CrosstalkReport>& reports);

}  // namespace velopad
