#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "oranlab/ml/net.hpp"

namespace oranlab::ml {

inline constexpr std::uint32_t kCheckpointVersion = 1;

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Array {
  std::int64_t rows = 0;
  std::int64_t cols = 0;
  std::vector<double> data;  // column-major
  bool operator==(const Array&) const = default;
};

/// Named arrays plus text metadata (global step, RNG states, configs).
///
/// File layout:
///   "ORANLAB-CKPT <version>\n"
///   "manifest <n>\n" + n bytes of text, one line per entry:
///       "meta <key> <value...>" or "array <name> <rows> <cols> <offset>"
///   "data <m>\n" + m bytes of little-endian IEEE-754 doubles
///   "fnv1a64 <16 hex digits>\n" over every preceding byte.
struct Checkpoint {
  std::uint32_t version = kCheckpointVersion;
  std::map<std::string, std::string> meta;
  std::map<std::string, Array> arrays;

  void put(const std::string& name, const MatrixXd& m);
  void put(const std::string& name, const VectorXd& v);
  MatrixXd matrix(const std::string& name) const;
  VectorXd vector(const std::string& name) const;
  const std::string& get_meta(const std::string& key) const;
  bool operator==(const Checkpoint&) const = default;
};

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
/// Throws CheckpointError naming the problem (missing file, bad magic,
/// version mismatch, truncation, checksum mismatch, malformed manifest).
Checkpoint load_checkpoint(const std::filesystem::path& path);

std::uint64_t fnv1a64(const void* data, std::size_t n);

// Helpers to store networks and optimizers under a prefix.
void put_net(Checkpoint& c, const std::string& prefix, const DenseNet& net);
/// Throws CheckpointError if the stored architecture differs from `net`'s.
void get_net(const Checkpoint& c, const std::string& prefix, DenseNet& net);
void put_adam(Checkpoint& c, const std::string& prefix, const Adam& opt);
void get_adam(const Checkpoint& c, const std::string& prefix, Adam& opt);
std::string rng_state(const std::mt19937_64& rng);
void set_rng_state(std::mt19937_64& rng, const std::string& state);

}  // namespace oranlab::ml
