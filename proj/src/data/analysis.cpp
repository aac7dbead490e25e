#include "oranlab/data/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace oranlab::data {

std::optional<double> pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw std::invalid_argument("pearson: series lengths differ");
  double sx = 0, sy = 0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!std::isfinite(x[i]) || !std::isfinite(y[i])) continue;
    sx += x[i];
    sy += y[i];
    ++n;
  }
  if (n < 2) return std::nullopt;
  const double mx = sx / static_cast<double>(n), my = sy / static_cast<double>(n);
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!std::isfinite(x[i]) || !std::isfinite(y[i])) continue;
    const double dx = x[i] - mx, dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx <= 0.0 || syy <= 0.0) return std::nullopt;
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

std::vector<double> column(const Dataset& ds, std::string_view metric, const Filter& filter) {
  if (!is_metric(metric)) throw std::invalid_argument("unknown metric: " + std::string(metric));
  std::vector<double> out;
  for (const auto& r : ds.rows()) {
    if (filter.matches(r)) out.push_back(metric_value(r.kpm, metric));
  }
  return out;
}

std::optional<double> CorrelationReport::at(std::string_view a, std::string_view b) const {
  std::size_t i = metrics.size(), j = metrics.size();
  for (std::size_t k = 0; k < metrics.size(); ++k) {
    if (metrics[k] == a) i = k;
    if (metrics[k] == b) j = k;
  }
  if (i == metrics.size() || j == metrics.size()) throw std::invalid_argument("metric not in report");
  return r[i][j];
}

std::string CorrelationReport::to_csv() const {
  std::ostringstream os;
  os.precision(17);
  os << "metric";
  for (const auto& m : metrics) os << ',' << m;
  os << '\n';
  for (std::size_t i = 0; i < metrics.size(); ++i) {
    os << metrics[i];
    for (std::size_t j = 0; j < metrics.size(); ++j) {
      os << ',';
      if (r[i][j]) {
        os << *r[i][j];
      } else {
        os << "NA";
      }
    }
    os << '\n';
  }
  return os.str();
}

CorrelationReport correlation_matrix(const Dataset& ds, const std::vector<std::string>& metrics,
                                     const Filter& filter) {
  std::vector<std::vector<double>> cols;
  for (const auto& m : metrics) cols.push_back(column(ds, m, filter));
  if (cols.empty() || cols.front().empty()) throw std::invalid_argument("correlation_matrix: no rows match the filter");
  CorrelationReport rep;
  rep.metrics = metrics;
  const auto k = metrics.size();
  rep.r.assign(k, std::vector<std::optional<double>>(k));
  rep.n.assign(k, std::vector<std::size_t>(k, cols.front().size()));
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = i; j < k; ++j) {
      // The diagonal is 1 by definition unless the metric is constant.
      auto v = pearson(cols[i], cols[j]);
      if (i == j && v) v = 1.0;
      rep.r[i][j] = rep.r[j][i] = v;
    }
  }
  return rep;
}

LinearFit linear_fit(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw std::invalid_argument("linear_fit: series lengths differ");
  if (x.size() < 2) throw std::invalid_argument("linear_fit: need at least two points");
  const double n = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  if (sxx == 0.0) throw std::invalid_argument("linear_fit: x is constant");
  const double slope = sxy / sxx;
  return {slope, my - slope * mx};
}

FeatureReport feature_report(const Dataset& ds, const std::vector<std::string>& candidates, double rho,
                             const Filter& filter) {
  const auto corr = correlation_matrix(ds, candidates, filter);
  FeatureReport rep;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    FeatureDecision d{candidates[i], true, "", std::nullopt};
    for (const auto& s : rep.selected) {
      const auto r = corr.at(candidates[i], s);
      if (r && std::abs(*r) > rho) {
        d = {candidates[i], false, s, r};
        break;
      }
    }
    if (d.kept) rep.selected.push_back(candidates[i]);
    rep.table.push_back(d);
  }
  return rep;
}

std::string FeatureReport::to_text() const {
  std::ostringstream os;
  os.precision(4);
  for (const auto& d : table) {
    os << d.metric << ": " << (d.kept ? "kept" : "dropped");
    if (!d.kept) os << " (|r|=" << std::abs(*d.r) << " against " << d.against << ")";
    os << '\n';
  }
  os << "selected:";
  for (const auto& s : selected) os << ' ' << s;
  os << '\n';
  return os.str();
}

}  // namespace oranlab::data
