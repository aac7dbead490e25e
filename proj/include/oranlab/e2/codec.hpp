#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "oranlab/e2/messages.hpp"

namespace oranlab::e2 {

/// Largest accepted frame body, bytes.
inline constexpr std::size_t kMaxFrameBody = 16u * 1024u * 1024u;
inline constexpr std::size_t kLengthPrefix = 4;

class EncodeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Canonical text body for `msg` (no length prefix).
std::string encode_body(const E2Message& msg);

/// Length-prefixed frame: 4-byte big-endian body length followed by the body.
/// Throws EncodeError when the body exceeds kMaxFrameBody or the message
/// carries a non-finite KPM value or a negative PRB count.
std::vector<std::uint8_t> encode(const E2Message& msg);

enum class DecodeStatus { Ok, NeedMoreBytes, ProtocolError, UnknownMessage };

std::string_view to_string(DecodeStatus s);

struct DecodeResult {
  DecodeStatus status = DecodeStatus::NeedMoreBytes;
  std::optional<E2Message> message;
  /// Bytes occupied by the frame; 0 for NeedMoreBytes and for an invalid
  /// length prefix, since the stream cannot be resynchronized.
  std::size_t consumed = 0;
  /// Input bytes after the frame.
  std::size_t residual = 0;
  /// Offset of the first offending byte, relative to the start of the input.
  std::size_t error_offset = 0;
  std::string detail;

  bool ok() const { return status == DecodeStatus::Ok; }
};

/// Decodes the first frame of `bytes`. Only canonical bodies are accepted, so
/// encode(decode(b).message) reproduces b's frame byte for byte.
DecodeResult decode(std::span<const std::uint8_t> bytes);

/// Parses a body without its length prefix; offsets are body-relative.
DecodeResult decode_body(std::string_view body);

/// Reassembles frames from an arbitrarily fragmented byte stream.
class StreamDecoder {
 public:
  void feed(std::span<const std::uint8_t> bytes);
  /// Next complete frame, or nullopt when more bytes are needed. A
  /// ProtocolError on the length prefix poisons the stream: every subsequent
  /// call returns the same error until reset().
  std::optional<DecodeResult> next();
  void reset();
  std::size_t buffered() const { return buf_.size() - head_; }

 private:
  std::vector<std::uint8_t> buf_;
  std::size_t head_ = 0;
  std::optional<DecodeResult> poisoned_;
};

}  // namespace oranlab::e2
