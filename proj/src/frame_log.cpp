#include "velopad/frame_log.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>
#include <stdexcept>

namespace velopad {

namespace {

constexpr std::array<std::string_view, 6> stage_names = {"raw_volts", "adc", "sum", "sn", "blur", "binary"};

template <typename T>
T parse_number(std::string_view field, const char* what) {
  T value{};
  const char* first = field.data();
  const char* last = field.data() + field.size();
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc{} || ptr != last || field.empty()) {
    throw std::invalid_argument(std::string("bad ") + what + " '" + std::string(field) + "'");
  }
  return value;
}

}  // namespace

std::string_view to_string(Stage stage) { return stage_names[static_cast<std::size_t>(stage)]; }

std::optional<Stage> parse_stage(std::string_view text) {
  for (std::size_t i = 0; i < stage_names.size(); ++i) {
    if (stage_names[i] == text) return static_cast<Stage>(i);
  }
  return std::nullopt;
}

Unit stage_unit(Stage stage) {
  switch (stage) {
    case Stage::raw_volts:
      return Unit::volts;
    case Stage::adc:
    case Stage::sum:
      return Unit::adc_counts;
    case Stage::sn:
    case Stage::blur:
    case Stage::binary:
      return Unit::normalized;
  }
  return Unit::volts;
}

std::string format_number(double v) {
  std::array<char, 32> buf{};
  const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  if (ec != std::errc{}) throw std::runtime_error("number formatting failed");
  return std::string(buf.data(), ptr);
}

std::string format_record(const FrameLogRecord& record) {
  std::string line = std::to_string(record.capture_id);
  line += ',';
  line += format_number(record.timestamp);
  line += ',';
  line += to_string(record.stage);
  line += ',';
  line += std::to_string(record.values.rows());
  line += ',';
  line += std::to_string(record.values.cols());
  for (double v : record.values.values()) {
    line += ',';
    line += format_number(v);
  }
  return line;
}

FrameLogRecord parse_record(std::string_view line) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    fields.push_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  if (fields.size() < 5) throw std::invalid_argument("expected at least 5 fields");

  FrameLogRecord rec;
  rec.capture_id = parse_number<std::uint64_t>(fields[0], "capture id");
  rec.timestamp = parse_number<double>(fields[1], "timestamp");
  const auto stage = parse_stage(fields[2]);
  if (!stage) throw std::invalid_argument("unknown stage '" + std::string(fields[2]) + "'");
  rec.stage = *stage;
  const auto rows = parse_number<std::size_t>(fields[3], "rows");
  const auto cols = parse_number<std::size_t>(fields[4], "cols");
  if (rows == 0 || cols == 0) throw std::invalid_argument("rows and cols must be positive");
  if (fields.size() - 5 != rows * cols) {
    throw std::invalid_argument("expected " + std::to_string(rows * cols) + " values, found " +
                                std::to_string(fields.size() - 5));
  }
  std::vector<double> values;
  values.reserve(rows * cols);
  for (std::size_t i = 5; i < fields.size(); ++i) {
    const double v = parse_number<double>(fields[i], "value");
    if (!std::isfinite(v)) throw std::invalid_argument("non-finite value");
    values.push_back(v);
  }
  rec.values = Grid(rows, cols, std::move(values));
  return rec;
}

void write_frame_log(std::ostream& out, const std::vector<FrameLogRecord>& records) {
  for (const auto& r : records) out << format_record(r) << '\n';
}

FrameLogContents read_frame_log(std::istream& in) {
  FrameLogContents contents;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (line.empty() || line == "\r" || line.front() == '#') continue;
    try {
      contents.records.push_back(parse_record(line));
    } catch (const std::invalid_argument& e) {
      contents.errors.push_back({number, e.what()});
    }
  }
  return contents;
}

std::vector<FrameLogRecord> staged_records(const StagedOutput& staged, std::uint64_t capture_id,
                                           double timestamp) {
  return {
      {capture_id, timestamp, Stage::sum, staged.raw.values},
      {capture_id, timestamp, Stage::sn, staged.squared_normalized.values},
      {capture_id, timestamp, Stage::blur, staged.blurred.values},
      {capture_id, timestamp, Stage::binary, staged.binary.values},
  };
}

IngestResult ingest_external(std::istream& in) {
  auto contents = read_frame_log(in);
  IngestResult result;
  result.errors = std::move(contents.errors);
  for (auto& rec : contents.records) {
    ExternalFrame f;
    f.capture_id = rec.capture_id;
    f.timestamp = rec.timestamp;
    f.stage = rec.stage;
    f.frame = Frame(std::move(rec.values), stage_unit(rec.stage));
    result.frames.push_back(std::move(f));
  }
  return result;
}

void export_frames(std::ostream& out, const std::vector<ExternalFrame>& frames) {
  for (const auto& f : frames) out << format_record({f.capture_id, f.timestamp, f.stage, f.frame.values}) << '\n';
}

}  // namespace velopad
