#pragma once

// Line-oriented frame log. One record per line:
//
//   capture_id,timestamp,stage,rows,cols,v0,v1,...,v(rows*cols-1)
//
// Values are row-major, '.' radix, written in shortest round-trip form and
// parsed without locale dependence. Blank lines and lines starting with '#'
// are ignored.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "velopad/frame.hpp"
#include "velopad/pipeline.hpp"

namespace velopad {

enum class Stage { raw_volts, adc, sum, sn, blur, binary };

std::string_view to_string(Stage stage);
std::optional<Stage> parse_stage(std::string_view text);

/// Unit a frame of the given stage carries.
Unit stage_unit(Stage stage);

struct FrameLogRecord {
  std::uint64_t capture_id = 0;
  double timestamp = 0.0;
  Stage stage = Stage::raw_volts;
  Grid values;

  friend bool operator==(const FrameLogRecord&, const FrameLogRecord&) = default;
};

struct LogLineError {
  std::size_t line = 0;  // 1-based
  std::string message;
};

struct FrameLogContents {
  std::vector<FrameLogRecord> records;
  std::vector<LogLineError> errors;
};

std::string format_record(const FrameLogRecord& record);

/// Parses one record line; throws std::invalid_argument on malformed input.
FrameLogRecord parse_record(std::string_view line);

void write_frame_log(std::ostream& out, const std::vector<FrameLogRecord>& records);
FrameLogContents read_frame_log(std::istream& in);

/// Shortest decimal that parses back to exactly `v`.
std::string format_number(double v);

/// The four reconstruction stages as sum/sn/blur/binary records.
std::vector<FrameLogRecord> staged_records(const StagedOutput& staged, std::uint64_t capture_id,
                                           double timestamp);

struct ExternalFrame {
  std::uint64_t capture_id = 0;
  double timestamp = 0.0;
  Stage stage = Stage::raw_volts;
  Frame frame;
  std::string provenance = "external";
};

struct IngestResult {
  std::vector<ExternalFrame> frames;
  std::vector<LogLineError> errors;
};

/// Reads externally recorded frames (e.g. hardware captures) from a frame log.
IngestResult ingest_external(std::istream& in);

/// Writes ingested frames back out as log records.
void export_frames(std::ostream& out, const std::vector<ExternalFrame>& frames);

}  // namespace velopad
