#include "oranlab/data/dataset.hpp"

#include <charconv>
#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

namespace oranlab::data {

namespace {

void put_double(std::string& out, double v) {
  char buf[32];
  auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  out.append(buf, p);
}

template <typename T>
T get_number(std::string_view s, std::string_view column) {
  T v{};
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || p != s.data() + s.size()) {
    throw std::runtime_error("column " + std::string(column) + ": bad value '" + std::string(s) + "'");
  }
  return v;
}

constexpr std::array<std::string_view, 17> kColumns{
    "timestamp_ms", "bs_id",   "ue_id",      "slice",     "dl_mcs",       "dl_tx_symbols",
    "dl_buffer",    "dl_rate", "dl_phy_tbs", "dl_cqi",    "ul_buffer",    "ul_rate",
    "ul_errors",    "granted_prbs", "requested_prbs", "slicing", "scheduling"};

bool valid_record(const KpmRecord& r) {
  return std::isfinite(r.dl_mcs) && std::isfinite(r.dl_rate) && std::isfinite(r.dl_cqi) &&
         std::isfinite(r.ul_rate) && std::isfinite(r.granted_prbs) && std::isfinite(r.requested_prbs) &&
         index_of(r.slice) < kNumSlices;
}

}  // namespace

bool is_metric(std::string_view m) {
  for (auto n : kMetricNames) {
    if (n == m) return true;
  }
  return m == "granted_prbs" || m == "requested_prbs";
}

double metric_value(const KpmRecord& r, std::string_view m) {
  if (m == "dl_mcs") return r.dl_mcs;
  if (m == "dl_tx_symbols") return static_cast<double>(r.dl_tx_symbols);
  if (m == "dl_buffer") return static_cast<double>(r.dl_buffer);
  if (m == "dl_rate") return r.dl_rate;
  if (m == "dl_phy_tbs") return static_cast<double>(r.dl_phy_tbs);
  if (m == "dl_cqi") return r.dl_cqi;
  if (m == "ul_buffer") return static_cast<double>(r.ul_buffer);
  if (m == "ul_rate") return r.ul_rate;
  if (m == "ul_errors") return static_cast<double>(r.ul_errors);
  if (m == "granted_prbs") return r.granted_prbs;
  if (m == "requested_prbs") return r.requested_prbs;
  throw std::invalid_argument("unknown metric: " + std::string(m));
}

const std::string& csv_header() {
  static const std::string h = [] {
    std::string s;
    for (auto c : kColumns) {
      if (!s.empty()) s += ',';
      s += c;
    }
    return s;
  }();
  return h;
}

std::string to_csv_line(const Row& row) {
  const auto& k = row.kpm;
  std::string s;
  s.reserve(160);
  s += std::to_string(k.timestamp_ms) + ',' + std::to_string(k.bs_id) + ',' + std::to_string(k.ue_id) + ',';
  s += to_string(k.slice);
  s += ',';
  put_double(s, k.dl_mcs);
  s += ',' + std::to_string(k.dl_tx_symbols) + ',' + std::to_string(k.dl_buffer) + ',';
  put_double(s, k.dl_rate);
  s += ',' + std::to_string(k.dl_phy_tbs) + ',';
  put_double(s, k.dl_cqi);
  s += ',' + std::to_string(k.ul_buffer) + ',';
  put_double(s, k.ul_rate);
  s += ',' + std::to_string(k.ul_errors) + ',';
  put_double(s, k.granted_prbs);
  s += ',';
  put_double(s, k.requested_prbs);
  s += ',' + format_slicing(row.ctx.slicing) + ',' + format_scheduling(row.ctx.scheduling);
  return s;
}

Row parse_csv_line(std::string_view line) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  std::array<std::string_view, kColumns.size()> f;
  std::size_t n = 0, start = 0;
  for (std::size_t i = 0; i <= line.size(); ++i) {
    if (i == line.size() || line[i] == ',') {
      if (n == f.size()) throw std::runtime_error("too many columns");
      f[n++] = line.substr(start, i - start);
      start = i + 1;
    }
  }
  if (n != f.size()) throw std::runtime_error("expected " + std::to_string(f.size()) + " columns, got " + std::to_string(n));
  Row r;
  auto& k = r.kpm;
  k.timestamp_ms = get_number<std::int64_t>(f[0], kColumns[0]);
  k.bs_id = get_number<BsId>(f[1], kColumns[1]);
  k.ue_id = get_number<UeId>(f[2], kColumns[2]);
  auto slice = parse_slice(f[3]);
  if (!slice) throw std::runtime_error("column slice: bad value '" + std::string(f[3]) + "'");
  k.slice = *slice;
  k.dl_mcs = get_number<double>(f[4], kColumns[4]);
  k.dl_tx_symbols = get_number<std::uint64_t>(f[5], kColumns[5]);
  k.dl_buffer = get_number<std::uint64_t>(f[6], kColumns[6]);
  k.dl_rate = get_number<double>(f[7], kColumns[7]);
  k.dl_phy_tbs = get_number<std::uint64_t>(f[8], kColumns[8]);
  k.dl_cqi = get_number<double>(f[9], kColumns[9]);
  k.ul_buffer = get_number<std::uint64_t>(f[10], kColumns[10]);
  k.ul_rate = get_number<double>(f[11], kColumns[11]);
  k.ul_errors = get_number<std::uint64_t>(f[12], kColumns[12]);
  k.granted_prbs = get_number<double>(f[13], kColumns[13]);
  k.requested_prbs = get_number<double>(f[14], kColumns[14]);
  auto sl = parse_slicing(f[15]);
  auto sc = parse_scheduling(f[16]);
  if (!sl) throw std::runtime_error("column slicing: bad value '" + std::string(f[15]) + "'");
  if (!sc) throw std::runtime_error("column scheduling: bad value '" + std::string(f[16]) + "'");
  r.ctx = {*sl, *sc};
  return r;
}

void Dataset::append(std::span<const KpmRecord> records, const Context& ctx) {
  for (const auto& r : records) {
    if (!valid_record(r)) throw std::invalid_argument("append: record with non-finite value rejected");
  }
  for (int p : ctx.slicing.prbs) {
    if (p < 0) throw std::invalid_argument("append: negative PRB count in context");
  }
  for (const auto& r : records) append_row(Row{r, ctx});
}

void Dataset::append_row(const Row& row) {
  index_[IndexKey{row.kpm.bs_id, row.ctx, row.kpm.slice}].push_back(rows_.size());
  rows_.push_back(row);
}

std::vector<Context> Dataset::contexts() const {
  std::set<Context> s;
  for (const auto& [k, v] : index_) s.insert(k.ctx);
  return {s.begin(), s.end()};
}

std::vector<BsId> Dataset::base_stations() const {
  std::set<BsId> s;
  for (const auto& [k, v] : index_) s.insert(k.bs_id);
  return {s.begin(), s.end()};
}

void Dataset::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << csv_header() << '\n';
  for (const auto& r : rows_) out << to_csv_line(r) << '\n';
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

Dataset Dataset::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open dataset " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error(path.string() + ": empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != csv_header()) throw std::runtime_error(path.string() + ": unexpected header");
  Dataset ds;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      ds.append_row(parse_csv_line(line));
    } catch (const std::runtime_error& e) {
      throw std::runtime_error(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return ds;
}

DatasetWriter::DatasetWriter(const std::filesystem::path& path, std::size_t flush_every)
    : flush_every_(std::max<std::size_t>(1, flush_every)) {
  bool fresh = true;
  if (std::filesystem::exists(path) && std::filesystem::file_size(path) > 0) {
    std::ifstream in(path);
    std::string first;
    std::getline(in, first);
    if (first != csv_header()) throw std::runtime_error(path.string() + ": existing file has a different schema");
    fresh = false;
  }
  out_.open(path, std::ios::app);
  if (!out_) throw std::runtime_error("cannot write " + path.string());
  if (fresh) out_ << csv_header() << '\n';
}

void DatasetWriter::append(std::span<const KpmRecord> records, const Context& ctx) {
  for (const auto& r : records) {
    if (!valid_record(r)) throw std::invalid_argument("append: record with non-finite value rejected");
  }
  std::string block;
  for (const auto& r : records) block += to_csv_line(Row{r, ctx}) + '\n';
  out_ << block;
  rows_ += records.size();
  since_flush_ += records.size();
  if (since_flush_ >= flush_every_) flush();
}

void DatasetWriter::flush() {
  out_.flush();
  since_flush_ = 0;
}

bool Filter::matches(const Row& r) const {
  if (slice && r.kpm.slice != *slice) return false;
  if (slicing && r.ctx.slicing != *slicing) return false;
  if (scheduling && r.ctx.scheduling != *scheduling) return false;
  if (bs_id && r.kpm.bs_id != *bs_id) return false;
  return true;
}

}  // namespace oranlab::data
