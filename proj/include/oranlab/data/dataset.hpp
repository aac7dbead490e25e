#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "oranlab/sim/types.hpp"

namespace oranlab::data {

/// Profiles in force while a record's window was measured.
struct Context {
  SlicingProfile slicing;
  SchedulingProfile scheduling;
  friend bool operator==(const Context&, const Context&) = default;
  friend auto operator<=>(const Context&, const Context&) = default;
};

struct Row {
  KpmRecord kpm;
  Context ctx;
  friend bool operator==(const Row&, const Row&) = default;
};

/// The nine tracked downlink/uplink metrics, in column order.
inline constexpr std::array<std::string_view, 9> kMetricNames{
    "dl_mcs", "dl_tx_symbols", "dl_buffer", "dl_rate", "dl_phy_tbs", "dl_cqi", "ul_buffer", "ul_rate", "ul_errors"};

/// Value of a named metric; also accepts granted_prbs and requested_prbs.
/// Throws std::invalid_argument for an unknown name.
double metric_value(const KpmRecord& r, std::string_view metric);
bool is_metric(std::string_view metric);

/// CSV header line, without the newline.
const std::string& csv_header();
std::string to_csv_line(const Row& row);
/// Throws std::runtime_error naming the column at fault.
Row parse_csv_line(std::string_view line);

struct IndexKey {
  BsId bs_id = 0;
  Context ctx;
  Slice slice = Slice::eMBB;
  friend auto operator<=>(const IndexKey&, const IndexKey&) = default;
};

/// In-memory KPM dataset with an index by (bs, profiles, slice).
class Dataset {
 public:
  /// Rejects the whole batch (std::invalid_argument) if any record carries a
  /// non-finite value or the context is not a valid 3-slice profile.
  void append(std::span<const KpmRecord> records, const Context& ctx);
  void append_row(const Row& row);

  std::size_t size() const { return rows_.size(); }
  bool empty() const { return rows_.empty(); }
  const std::vector<Row>& rows() const { return rows_; }
  const Row& operator[](std::size_t i) const { return rows_[i]; }
  const std::map<IndexKey, std::vector<std::size_t>>& index() const { return index_; }
  std::vector<Context> contexts() const;
  std::vector<BsId> base_stations() const;

  void save(const std::filesystem::path& path) const;
  static Dataset load(const std::filesystem::path& path);

 private:
  std::vector<Row> rows_;
  std::map<IndexKey, std::vector<std::size_t>> index_;
};

/// Streams rows to a CSV file, flushing every `flush_every` rows.
class DatasetWriter {
 public:
  /// Appends to an existing file after checking its header; throws
  /// std::runtime_error on a header mismatch.
  explicit DatasetWriter(const std::filesystem::path& path, std::size_t flush_every = 1024);
  void append(std::span<const KpmRecord> records, const Context& ctx);
  void flush();
  std::size_t rows_written() const { return rows_; }

 private:
  std::ofstream out_;
  std::size_t flush_every_;
  std::size_t rows_ = 0;
  std::size_t since_flush_ = 0;
};

/// Rows matching all set fields.
struct Filter {
  std::optional<Slice> slice;
  std::optional<SlicingProfile> slicing;
  std::optional<SchedulingProfile> scheduling;
  std::optional<BsId> bs_id;

  bool matches(const Row& r) const;
};

}  // namespace oranlab::data
