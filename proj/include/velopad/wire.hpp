#pragma once

// Device wire format. Every multi-byte field is little-endian.
//
//   offset  size       field
//   0       2          magic 0xA5 0x5A
//   2       1          version (0x01)
//   3       2          sequence number (wraps modulo 2^16)
//   5       1          rows
//   6       1          cols
//   7       2*rows*cols samples, row-major, unsigned ADC counts
//   7+2N    2          CRC-16/CCITT-FALSE over bytes [2, 7+2N)

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "velopad/frame.hpp"

namespace velopad::wire {

inline constexpr std::uint8_t magic0 = 0xA5;
inline constexpr std::uint8_t magic1 = 0x5A;
inline constexpr std::uint8_t version = 0x01;
inline constexpr std::size_t header_size = 7;
inline constexpr std::size_t crc_size = 2;

/// CRC-16/CCITT-FALSE: poly 0x1021, init 0xFFFF, no reflection, no final xor.
std::uint16_t crc16_ccitt_false(std::span<const std::uint8_t> bytes);

constexpr std::size_t encoded_size(std::size_t rows, std::size_t cols) {
  return header_size + 2 * rows * cols + crc_size;
}

struct WireFrame {
  std::uint16_t seq = 0;
  Frame frame;  // adc_counts

  friend bool operator==(const WireFrame&, const WireFrame&) = default;
};

/// Rejects non-ADC frames, dimensions outside [1, 255], and samples that are
/// not integers in [0, 65535].
std::vector<std::uint8_t> encode(const Frame& adc_frame, std::uint16_t seq);

struct Dimensions {
  std::size_t rows = 0;
  std::size_t cols = 0;
};

struct DecodeDiagnostics {
  std::size_t resyncs = 0;          // runs of discarded bytes before regaining sync
  std::size_t discarded_bytes = 0;
  std::size_t crc_failures = 0;
  std::size_t bad_headers = 0;      // wrong version, zero or unexpected dimensions
  std::size_t truncated_tails = 0;  // incomplete frame left when the stream ended

  std::size_t total() const { return resyncs + crc_failures + bad_headers + truncated_tails; }
};

/// Incremental decoder. Scans for the magic, validates header and CRC, and on
/// any failure drops one byte and rescans. Holds at most one maximal frame of
/// unconsumed input. Owned by a single consumer.
class StreamDecoder {
 public:
  explicit StreamDecoder(std::optional<Dimensions> expected = std::nullopt) : expected_(expected) {}

  /// Appends bytes and returns every frame completed by them.
  std::vector<WireFrame> feed(std::span<const std::uint8_t> bytes);

  /// Declares end of stream; leftover bytes are reported in the diagnostics.
  void finish();

  const DecodeDiagnostics& diagnostics() const { return diag_; }

 private:
  void discard(std::size_t n);

  std::optional<Dimensions> expected_;
  std::vector<std::uint8_t> buffer_;
  std::size_t pos_ = 0;
  bool resyncing_ = false;
  DecodeDiagnostics diag_;
};

struct DecodeResult {
  std::vector<WireFrame> frames;
  DecodeDiagnostics diagnostics;
};

DecodeResult decode_stream(std::span<const std::uint8_t> bytes,
                           std::optional<Dimensions> expected = std::nullopt);

}  // namespace velopad::wire
