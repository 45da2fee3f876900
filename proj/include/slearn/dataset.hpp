#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <charconv>
#include <cmath>
#include <string>
#include <string_view>
#include <system_error>

#include "slearn/errors.hpp"
#include "slearn/graph_io.hpp"

namespace slearn {

/// m x d observation matrix: one row per sample, one column per variable.
class Dataset {
 public:
  Dataset() = default;
  explicit Dataset(Eigen::MatrixXd values) : values_(std::move(values)) {}

  Eigen::Index samples() const noexcept { return values_.rows(); }
  Eigen::Index variables() const noexcept { return values_.cols(); }
  const Eigen::MatrixXd& values() const noexcept { return values_; }
  Eigen::MatrixXd& values() noexcept { return values_; }

  friend bool operator==(const Dataset& a, const Dataset& b) {
    return a.values_.rows() == b.values_.rows() && a.values_.cols() == b.values_.cols() &&
           a.values_ == b.values_;
  }

 private:
  Eigen::MatrixXd values_;
};

/// Rescales every column to sample mean 0 and sample standard deviation 1
/// (n - 1 denominator). Throws DegenerateColumnError on a constant column.
inline Dataset standardize(const Dataset& d) {
  const Eigen::Index m = d.samples();
  if (m < 2) throw std::invalid_argument("standardize needs at least two samples");
  Eigen::MatrixXd x = d.values();
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    const double mean = x.col(j).mean();
    x.col(j).array() -= mean;
    const double var = x.col(j).squaredNorm() / static_cast<double>(m - 1);
    if (!(var > 0.0) || !std::isfinite(var)) throw DegenerateColumnError(static_cast<std::size_t>(j));
    x.col(j) /= std::sqrt(var);
  }
  return Dataset(std::move(x));
}

/// Pearson correlation matrix of the columns.
inline Eigen::MatrixXd correlation_matrix(const Dataset& d) {
  Eigen::MatrixXd centered = d.values().rowwise() - d.values().colwise().mean();
  Eigen::MatrixXd cov = centered.transpose() * centered;
  Eigen::VectorXd sd = cov.diagonal().cwiseSqrt();
  for (Eigen::Index j = 0; j < sd.size(); ++j) {
    if (!(sd(j) > 0.0)) throw DegenerateColumnError(static_cast<std::size_t>(j));
  }
  Eigen::MatrixXd corr = cov.array() / (sd * sd.transpose()).array();
  for (Eigen::Index i = 0; i < corr.rows(); ++i) {
    corr(i, i) = 1.0;
    for (Eigen::Index j = i + 1; j < corr.cols(); ++j) {
      const double r = std::clamp(0.5 * (corr(i, j) + corr(j, i)), -1.0, 1.0);
      corr(i, j) = r;
      corr(j, i) = r;
    }
  }
  return corr;
}

/// Sample covariance (n - 1 denominator).
inline Eigen::MatrixXd covariance_matrix(const Dataset& d) {
  Eigen::MatrixXd centered = d.values().rowwise() - d.values().colwise().mean();
  return centered.transpose() * centered / static_cast<double>(d.samples() - 1);
}

// ---------------------------------------------------------------------------
// CSV: header `x0,x1,...`, one row per sample, shortest round-trip decimals.

inline std::string format_csv(const Dataset& d) {
  std::string out;
  for (Eigen::Index j = 0; j < d.variables(); ++j) {
    if (j) out += ',';
    out += 'x';
    out += std::to_string(j);
  }
  out += '\n';
  char buf[64];
  for (Eigen::Index i = 0; i < d.samples(); ++i) {
    for (Eigen::Index j = 0; j < d.variables(); ++j) {
      if (j) out += ',';
      auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, d.values()(i, j));
      out.append(buf, ptr);
    }
    out += '\n';
  }
  return out;
}

inline Dataset parse_csv(std::string_view text) {
  std::vector<double> cells;
  Eigen::Index cols = -1;
  Eigen::Index rows = 0;
  std::size_t line_no = 0;
  bool header = true;
  while (!text.empty()) {
    auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    Eigen::Index count = 1 + static_cast<Eigen::Index>(std::count(line.begin(), line.end(), ','));
    if (header) {
      cols = count;
      header = false;
      continue;
    }
    if (count != cols) {
      throw FormatError("line " + std::to_string(line_no) + ": expected " + std::to_string(cols) + " fields");
    }
    std::size_t start = 0;
    for (Eigen::Index j = 0; j < cols; ++j) {
      auto end = line.find(',', start);
      auto field = detail::trim(line.substr(start, end == std::string_view::npos ? line.size() - start : end - start));
      double v = 0.0;
      auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
      if (ec != std::errc{} || ptr != field.data() + field.size()) {
        throw FormatError("line " + std::to_string(line_no) + ": bad number '" + std::string(field) + "'");
      }
      cells.push_back(v);
      start = end + 1;
    }
    ++rows;
  }
  if (cols < 0) throw FormatError("empty CSV");
  Eigen::MatrixXd values(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) values(i, j) = cells[static_cast<std::size_t>(i * cols + j)];
  }
  return Dataset(std::move(values));
}

inline Dataset read_csv(const std::string& path) { return parse_csv(read_text_file(path)); }
inline void write_csv(const std::string& path, const Dataset& d) { write_text_file(path, format_csv(d)); }

}  // namespace slearn
