#include "velopad/wire.hpp"

#include <array>
#include <cmath>
#include <stdexcept>

namespace velopad::wire {

namespace {

constexpr std::array<std::uint16_t, 256> make_crc_table() {
  std::array<std::uint16_t, 256> table{};
  for (unsigned i = 0; i < 256; ++i) {
    auto crc = static_cast<std::uint16_t>(i << 8);
    for (int bit = 0; bit < 8; ++bit) {
      crc = static_cast<std::uint16_t>((crc & 0x8000) ? (crc << 1) ^ 0x1021 : crc << 1);
    }
    table[i] = crc;
  }
  return table;
}

constexpr auto crc_table = make_crc_table();

void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v & 0xFF));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
}

std::uint16_t get_u16(const std::uint8_t* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

}  // namespace

std::uint16_t crc16_ccitt_false(std::span<const std::uint8_t> bytes) {
  std::uint16_t crc = 0xFFFF;
  for (std::uint8_t b : bytes) {
    crc = static_cast<std::uint16_t>((crc << 8) ^ crc_table[((crc >> 8) ^ b) & 0xFF]);
  }
  return crc;
}

std::vector<std::uint8_t> encode(const Frame& adc_frame, std::uint16_t seq) {
  if (adc_frame.unit != Unit::adc_counts) throw std::invalid_argument("wire encoding needs an ADC-count frame");
  const std::size_t rows = adc_frame.rows();
  const std::size_t cols = adc_frame.cols();
  if (rows < 1 || cols < 1 || rows > 255 || cols > 255) {
    throw std::invalid_argument("wire frames support 1..255 rows and columns");
  }

  std::vector<std::uint8_t> out;
  out.reserve(encoded_size(rows, cols));
  out.push_back(magic0);
  out.push_back(magic1);
  out.push_back(version);
  put_u16(out, seq);
  out.push_back(static_cast<std::uint8_t>(rows));
  out.push_back(static_cast<std::uint8_t>(cols));
  for (double v : adc_frame.values.values()) {
    if (!(v >= 0.0 && v <= 65535.0) || v != std::floor(v)) {
      throw std::invalid_argument("wire samples must be integers in [0, 65535]");
    }
    put_u16(out, static_cast<std::uint16_t>(v));
  }
  put_u16(out, crc16_ccitt_false(std::span(out).subspan(2)));
  return out;
}

void StreamDecoder::discard(std::size_t n) {
  if (!resyncing_) {
    resyncing_ = true;
    ++diag_.resyncs;
  }
  diag_.discarded_bytes += n;
  pos_ += n;
}

std::vector<WireFrame> StreamDecoder::feed(std::span<const std::uint8_t> bytes) {
  buffer_.insert(buffer_.end(), bytes.begin(), bytes.end());
  std::vector<WireFrame> frames;

  while (pos_ < buffer_.size()) {
    const std::size_t avail = buffer_.size() - pos_;
    const std::uint8_t* p = buffer_.data() + pos_;

    if (p[0] != magic0) {
      discard(1);
      continue;
    }
    if (avail < 2) break;
    if (p[1] != magic1) {
      discard(1);
      continue;
    }
    if (avail < header_size) break;

    const std::size_t rows = p[5];
    const std::size_t cols = p[6];
    const bool dims_ok = rows > 0 && cols > 0 &&
                         (!expected_ || (expected_->rows == rows && expected_->cols == cols));
    if (p[2] != version || !dims_ok) {
      ++diag_.bad_headers;
      discard(1);
      continue;
    }

    const std::size_t total = encoded_size(rows, cols);
    if (avail < total) break;

    const std::uint16_t stored = get_u16(p + total - crc_size);
    if (crc16_ccitt_false(std::span(p + 2, total - 2 - crc_size)) != stored) {
      ++diag_.crc_failures;
      discard(1);
      continue;
    }

    WireFrame wf;
    wf.seq = get_u16(p + 3);
    Grid g(rows, cols, 0.0);
    for (std::size_t i = 0; i < rows * cols; ++i) g.values()[i] = get_u16(p + header_size + 2 * i);
    wf.frame = Frame(std::move(g), Unit::adc_counts);
    frames.push_back(std::move(wf));
    pos_ += total;
    resyncing_ = false;
  }

  // Drop consumed input so memory stays bounded by one pending frame.
  buffer_.erase(buffer_.begin(), buffer_.begin() + static_cast<std::ptrdiff_t>(pos_));
  pos_ = 0;
  return frames;
}

void StreamDecoder::finish() {
  if (buffer_.empty()) return;
  if (buffer_[0] == magic0) {
    ++diag_.truncated_tails;
    diag_.discarded_bytes += buffer_.size();
  } else {
    discard(buffer_.size());
  }
  buffer_.clear();
  pos_ = 0;
}

DecodeResult decode_stream(std::span<const std::uint8_t> bytes, std::optional<Dimensions> expected) {
  StreamDecoder decoder(expected);
  DecodeResult result;
  result.frames = decoder.feed(bytes);
  decoder.finish();
  result.diagnostics = decoder.diagnostics();
  return result;
}

}  // namespace velopad::wire
