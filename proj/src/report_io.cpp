#include "velopad/report_io.hpp"

#include <algorithm>
#include <ostream>

#include "velopad/frame_log.hpp"
#include "velopad/session.hpp"

namespace velopad {

void write_report_table(std::ostream& out, const std::vector<CrosstalkReport>& reports) {
  out << "# summary,pitch_mm,mass_kg,mechanisms,count,mean,std,min,max\n"
      << "# pixel,pitch_mm,mass_kg,row,col,crosstalk\n"
      << "# std = population standard deviation over defined per-pixel values\n";
  for (const auto& r : reports) {
    const std::string pitch = format_number(r.pitch * 1e3);
    const std::string mass = format_number(r.mass);
    std::string mechanisms = format_mechanisms(r.mechanisms);
    std::replace(mechanisms.begin(), mechanisms.end(), ',', '+');
    out << "summary," << pitch << ',' << mass << ',' << mechanisms << ','
        << r.stats.count << ',' << format_number(r.stats.mean) << ',' << format_number(r.stats.std) << ','
        << format_number(r.stats.min) << ',' << format_number(r.stats.max) << '\n';
    for (const auto& p : r.per_pixel) {
      out << "pixel," << pitch << ',' << mass << ',' << p.at.row << ',' << p.at.col << ','
          << (p.value ? format_number(*p.value) : std::string("undefined")) << '\n';
    }
  }
}

nlohmann::json reports_to_json(const std::vector<CrosstalkReport>& reports) {
  auto arr = nlohmann::json::array();
  for (const auto& r : reports) {
    nlohmann::json pixels = nlohmann::json::array();
    for (const auto& p : r.per_pixel) {
      pixels.push_back({{"row", p.at.row},
                        {"col", p.at.col},
                        {"value", p.value ? nlohmann::json(*p.value) : nlohmann::json(nullptr)},
                        {"neighbor_exceeds_stimulus", p.neighbor_exceeds_stimulus}});
    }
    arr.push_back({{"pitch_mm", r.pitch * 1e3},
                   {"mass_kg", r.mass},
                   {"mechanisms", format_mechanisms(r.mechanisms)},
                   {"count", r.stats.count},
                   {"mean", r.stats.mean},
                   {"std", r.stats.std},
                   {"std_kind", "population"},
                   {"min", r.stats.min},
                   {"max", r.stats.max},
                   {"per_pixel", pixels}});
  }
  return arr;
}

}  // namespace velopad
