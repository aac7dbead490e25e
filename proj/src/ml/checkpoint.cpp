#include "oranlab/ml/checkpoint.hpp"

#include <bit>
#include <charconv>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

namespace oranlab::ml {

namespace {

constexpr std::string_view kMagic = "ORANLAB-CKPT ";

void append_f64_le(std::string& out, double d) {
  std::uint64_t bits;
  std::memcpy(&bits, &d, sizeof(bits));
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xff));
}

double read_f64_le(const char* p) {
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(p[i])) << (8 * i);
  double d;
  std::memcpy(&d, &bits, sizeof(d));
  return d;
}

std::string hex16(std::uint64_t v) {
  char buf[17];
  for (int i = 15; i >= 0; --i) {
    buf[i] = "0123456789abcdef"[v & 0xf];
    v >>= 4;
  }
  buf[16] = '\0';
  return buf;
}

class Reader {
 public:
  Reader(const std::string& bytes, std::string path) : b_(bytes), path_(std::move(path)) {}

  [[noreturn]] void fail(const std::string& what) const {
    throw CheckpointError(path_ + ": " + what + " (at byte " + std::to_string(pos_) + ")");
  }

  std::string line() {
    auto nl = b_.find('\n', pos_);
    if (nl == std::string::npos) fail("truncated file: missing line terminator");
    std::string out = b_.substr(pos_, nl - pos_);
    pos_ = nl + 1;
    return out;
  }

  std::string take(std::size_t n) {
    if (b_.size() - pos_ < n) fail("truncated file: expected " + std::to_string(n) + " more bytes");
    std::string out = b_.substr(pos_, n);
    pos_ += n;
    return out;
  }

  std::size_t pos() const { return pos_; }
  bool at_end() const { return pos_ == b_.size(); }

  template <typename T>
  T number(std::string_view s, const char* what) const {
    T v{};
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || p != s.data() + s.size()) fail(std::string("malformed ") + what + ": '" + std::string(s) + "'");
    return v;
  }

 private:
  const std::string& b_;
  std::string path_;
  std::size_t pos_ = 0;
};

std::size_t sized_section(Reader& r, const std::string& expect) {
  const auto hdr = r.line();
  if (hdr.rfind(expect + " ", 0) != 0) r.fail("expected '" + expect + "' section");
  return r.number<std::size_t>(std::string_view(hdr).substr(expect.size() + 1), "section length");
}

}  // namespace

std::uint64_t fnv1a64(const void* data, std::size_t n) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

void Checkpoint::put(const std::string& name, const MatrixXd& m) {
  Array a{m.rows(), m.cols(), std::vector<double>(m.data(), m.data() + m.size())};
  arrays[name] = std::move(a);
}

void Checkpoint::put(const std::string& name, const VectorXd& v) {
  arrays[name] = Array{v.size(), 1, std::vector<double>(v.data(), v.data() + v.size())};
}

MatrixXd Checkpoint::matrix(const std::string& name) const {
  auto it = arrays.find(name);
  if (it == arrays.end()) throw CheckpointError("checkpoint lacks array '" + name + "'");
  const auto& a = it->second;
  return Eigen::Map<const MatrixXd>(a.data.data(), a.rows, a.cols);
}

VectorXd Checkpoint::vector(const std::string& name) const {
  auto it = arrays.find(name);
  if (it == arrays.end()) throw CheckpointError("checkpoint lacks array '" + name + "'");
  return Eigen::Map<const VectorXd>(it->second.data.data(), static_cast<Eigen::Index>(it->second.data.size()));
}

const std::string& Checkpoint::get_meta(const std::string& key) const {
  auto it = meta.find(key);
  if (it == meta.end()) throw CheckpointError("checkpoint lacks meta '" + key + "'");
  return it->second;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  std::string manifest;
  for (const auto& [k, v] : ckpt.meta) {
    if (k.empty() || k.find_first_of(" \n") != std::string::npos || v.find('\n') != std::string::npos) {
      throw CheckpointError("meta key/value not representable: '" + k + "'");
    }
    manifest += "meta " + k + " " + v + "\n";
  }
  std::string data;
  for (const auto& [name, a] : ckpt.arrays) {
    if (name.empty() || name.find_first_of(" \n") != std::string::npos) {
      throw CheckpointError("array name not representable: '" + name + "'");
    }
    if (static_cast<std::int64_t>(a.data.size()) != a.rows * a.cols) {
      throw CheckpointError("array '" + name + "' has inconsistent shape");
    }
    manifest += "array " + name + " " + std::to_string(a.rows) + " " + std::to_string(a.cols) + " " +
                std::to_string(data.size()) + "\n";
    for (double d : a.data) append_f64_le(data, d);
  }
  std::string out;
  out += std::string(kMagic) + std::to_string(ckpt.version) + "\n";
  out += "manifest " + std::to_string(manifest.size()) + "\n" + manifest;
  out += "data " + std::to_string(data.size()) + "\n" + data;
  out += "fnv1a64 " + hex16(fnv1a64(out.data(), out.size())) + "\n";

  // Write to a sibling temp file and rename, so a crash never leaves a
  // half-written checkpoint under the final name.
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw CheckpointError("cannot write " + tmp.string());
    f.write(out.data(), static_cast<std::streamsize>(out.size()));
    if (!f) throw CheckpointError("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw CheckpointError(path.string() + ": cannot open");
  const std::string bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  Reader r(bytes, path.string());

  const auto magic = r.line();
  if (magic.rfind(kMagic, 0) != 0) r.fail("not a checkpoint (bad magic)");
  Checkpoint c;
  c.version = r.number<std::uint32_t>(std::string_view(magic).substr(kMagic.size()), "version");
  if (c.version != kCheckpointVersion) {
    r.fail("version mismatch: file has " + std::to_string(c.version) + ", reader supports " +
           std::to_string(kCheckpointVersion));
  }
  const std::string manifest = r.take(sized_section(r, "manifest"));
  const std::string data = r.take(sized_section(r, "data"));
  const std::size_t body_end = r.pos();
  const auto trailer = r.line();
  if (trailer.rfind("fnv1a64 ", 0) != 0 || !r.at_end()) r.fail("missing or malformed checksum trailer");
  const auto expect = trailer.substr(8);
  const auto actual = hex16(fnv1a64(bytes.data(), body_end));
  if (expect != actual) r.fail("checksum mismatch: stored " + expect + ", computed " + actual);

  std::istringstream ms(manifest);
  std::string ln;
  while (std::getline(ms, ln)) {
    if (ln.rfind("meta ", 0) == 0) {
      const auto sp = ln.find(' ', 5);
      if (sp == std::string::npos) r.fail("malformed meta line: " + ln);
      c.meta[ln.substr(5, sp - 5)] = ln.substr(sp + 1);
    } else if (ln.rfind("array ", 0) == 0) {
      std::istringstream ls(ln.substr(6));
      std::string name;
      std::int64_t rows = -1, cols = -1;
      std::size_t offset = 0;
      if (!(ls >> name >> rows >> cols >> offset) || rows < 0 || cols < 0) r.fail("malformed array line: " + ln);
      const std::size_t n = static_cast<std::size_t>(rows * cols);
      if (offset > data.size() || (data.size() - offset) / 8 < n) r.fail("array '" + name + "' exceeds data section");
      Array a{rows, cols, std::vector<double>(n)};
      for (std::size_t i = 0; i < n; ++i) a.data[i] = read_f64_le(data.data() + offset + 8 * i);
      c.arrays[name] = std::move(a);
    } else {
      r.fail("unknown manifest line: " + ln);
    }
  }
  return c;
}

void put_net(Checkpoint& c, const std::string& prefix, const DenseNet& net) {
  std::string arch;
  for (std::size_t k = 0; k < net.layers.size(); ++k) {
    const auto& l = net.layers[k];
    c.put(prefix + ".W" + std::to_string(k), l.weights);
    c.put(prefix + ".b" + std::to_string(k), l.biases);
    if (k) arch += ',';
    arch += std::to_string(l.weights.cols()) + ">" + std::to_string(l.weights.rows()) + ":" +
            std::string(to_string(l.activation));
  }
  c.meta[prefix + ".arch"] = arch;
}

void get_net(const Checkpoint& c, const std::string& prefix, DenseNet& net) {
  Checkpoint probe;
  put_net(probe, prefix, net);
  const auto& stored = c.get_meta(prefix + ".arch");
  if (stored != probe.meta[prefix + ".arch"]) {
    throw CheckpointError("architecture mismatch for '" + prefix + "': stored " + stored + ", expected " +
                          probe.meta[prefix + ".arch"]);
  }
  DenseNet loaded = net;
  for (std::size_t k = 0; k < loaded.layers.size(); ++k) {
    loaded.layers[k].weights = c.matrix(prefix + ".W" + std::to_string(k));
    loaded.layers[k].biases = c.vector(prefix + ".b" + std::to_string(k));
  }
  net = std::move(loaded);
}

void put_adam(Checkpoint& c, const std::string& prefix, const Adam& opt) {
  c.put(prefix + ".m", opt.m());
  c.put(prefix + ".v", opt.v());
  c.meta[prefix + ".t"] = std::to_string(opt.t());
  c.meta[prefix + ".skipped"] = std::to_string(opt.skipped());
}

void get_adam(const Checkpoint& c, const std::string& prefix, Adam& opt) {
  auto m = c.vector(prefix + ".m");
  auto v = c.vector(prefix + ".v");
  if (m.size() != opt.m().size() || v.size() != opt.v().size()) {
    throw CheckpointError("optimizer state size mismatch for '" + prefix + "'");
  }
  opt.restore(std::move(m), std::move(v), std::stoull(c.get_meta(prefix + ".t")),
              std::stoull(c.get_meta(prefix + ".skipped")));
}

std::string rng_state(const std::mt19937_64& rng) {
  std::ostringstream os;
  os << rng;
  return os.str();
}

void set_rng_state(std::mt19937_64& rng, const std::string& state) {
  std::istringstream is(state);
  std::mt19937_64 tmp;
  is >> tmp;
  if (!is) throw CheckpointError("malformed RNG state");
  rng = tmp;
}

}  // namespace oranlab::ml
