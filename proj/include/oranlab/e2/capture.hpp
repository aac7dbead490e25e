#pragma once

#include <cstdint>
#include <fstream>
#include <span>
#include <string>
#include <vector>

#include "oranlab/e2/codec.hpp"

namespace oranlab::e2 {

/// Appends frames verbatim (length prefix included) so a capture file is a
/// valid E2-lite byte stream.
class CaptureWriter {
 public:
  explicit CaptureWriter(const std::string& path);
  void write(std::span<const std::uint8_t> frame);
  void flush() { out_.flush(); }
  std::uint64_t frames() const { return frames_; }

 private:
  std::ofstream out_;
  std::uint64_t frames_ = 0;
};

/// Decodes every frame of a capture file. Throws std::runtime_error on a
/// malformed or truncated capture.
std::vector<E2Message> read_capture(const std::string& path);

}  // namespace oranlab::e2
