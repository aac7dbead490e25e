#pragma once

#include <optional>
#include <string>
#include <vector>

#include "oranlab/data/dataset.hpp"

namespace oranlab::data {

/// Pearson coefficient over pairs where both values are finite. Empty when
/// fewer than two pairs remain or either series has zero variance. Throws
/// std::invalid_argument on a length mismatch.
std::optional<double> pearson(std::span<const double> x, std::span<const double> y);

struct CorrelationReport {
  std::vector<std::string> metrics;
  /// Empty entries are undefined (zero variance).
  std::vector<std::vector<std::optional<double>>> r;
  std::vector<std::vector<std::size_t>> n;

  std::optional<double> at(std::string_view a, std::string_view b) const;
  /// Matrix as CSV; undefined entries are written as "NA".
  std::string to_csv() const;
};

/// Throws std::invalid_argument for unknown metrics or when no rows match.
CorrelationReport correlation_matrix(const Dataset& ds, const std::vector<std::string>& metrics,
                                     const Filter& filter);

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
};

/// Least squares. Throws std::invalid_argument for fewer than two points or
/// constant x.
LinearFit linear_fit(std::span<const double> x, std::span<const double> y);

struct FeatureDecision {
  std::string metric;
  bool kept = false;
  /// Selected metric that caused the drop, and their correlation.
  std::string against;
  std::optional<double> r;
};

struct FeatureReport {
  std::vector<std::string> selected;
  std::vector<FeatureDecision> table;
  std::string to_text() const;
};

/// Greedy, in candidate order: drop a metric whose |r| against an already
/// selected metric exceeds rho. Undefined correlations never cause a drop.
FeatureReport feature_report(const Dataset& ds, const std::vector<std::string>& candidates, double rho,
                             const Filter& filter);

/// Column of `metric` over matching rows.
std::vector<double> column(const Dataset& ds, std::string_view metric, const Filter& filter);

}  // namespace oranlab::data
