#include "oranlab/e2/capture.hpp"

#include <iterator>
#include <stdexcept>

namespace oranlab::e2 {

CaptureWriter::CaptureWriter(const std::string& path) : out_(path, std::ios::binary | std::ios::trunc) {
  if (!out_) throw std::runtime_error("cannot open capture file " + path);
}

void CaptureWriter::write(std::span<const std::uint8_t> frame) {
  out_.write(reinterpret_cast<const char*>(frame.data()), static_cast<std::streamsize>(frame.size()));
  ++frames_;
}

std::vector<E2Message> read_capture(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open capture file " + path);
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  StreamDecoder dec;
  dec.feed(bytes);
  std::vector<E2Message> out;
  while (auto res = dec.next()) {
    if (!res->ok()) {
      throw std::runtime_error(path + ": " + std::string(to_string(res->status)) + " at frame " +
                               std::to_string(out.size()) + ": " + res->detail);
    }
    out.push_back(std::move(*res->message));
  }
  if (dec.buffered() != 0) {
    throw std::runtime_error(path + ": truncated final frame (" + std::to_string(dec.buffered()) + " bytes)");
  }
  return out;
}

}  // namespace oranlab::e2
