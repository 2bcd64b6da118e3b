#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace gmmb {

enum class BoundKind { unbounded, lower, doubly };

/// Support of a single variable: the whole real line, (lower, +inf) or
/// (lower, upper). Observations must lie strictly inside.
struct Bound {
  BoundKind kind = BoundKind::unbounded;
  double lower = 0.0;
  double upper = 0.0;

  static Bound none() { return {}; }
  static Bound lower_at(double l) { return {BoundKind::lower, l, 0.0}; }
  static Bound between(double l, double u) { return {BoundKind::doubly, l, u}; }

  bool contains(double x) const;
  bool operator==(const Bound&) const = default;
};

std::string to_string(const Bound& b);

/// Per-variable bounds. Bounds are always declared by the user.
class BoundsSpec {
 public:
  BoundsSpec() = default;
  explicit BoundsSpec(std::vector<Bound> bounds);
  /// Same bound for every one of `d` variables.
  static BoundsSpec uniform(std::size_t d, const Bound& b);

  std::size_t size() const { return bounds_.size(); }
  const Bound& operator[](std::size_t j) const { return bounds_[j]; }
  const std::vector<Bound>& bounds() const { return bounds_; }

 private:
  std::vector<Bound> bounds_;
};

/// n x d matrix of finite observations with column labels. Immutable.
class Dataset {
 public:
  Dataset(Eigen::MatrixXd values, std::vector<std::string> column_names = {});

  Eigen::Index n() const { return values_.rows(); }
  Eigen::Index d() const { return values_.cols(); }
  const Eigen::MatrixXd& values() const { return values_; }
  const std::vector<std::string>& column_names() const { return names_; }
  Eigen::Index column_index(const std::string& name) const;

 private:
  Eigen::MatrixXd values_;
  std::vector<std::string> names_;
};

struct Violation {
  Eigen::Index row;
  Eigen::Index col;
  double value;
};

struct ValidationReport {
  std::vector<Violation> violations;

  bool ok() const { return violations.empty(); }
  std::string describe(const Dataset& data, std::size_t max_listed = 20) const;
};

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t line, std::size_t column);
  std::size_t line() const { return line_; }
  std::size_t column() const { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

class ValidationError : public std::runtime_error {
 public:
  ValidationError(const std::string& what, ValidationReport report);
  const ValidationReport& report() const { return report_; }

 private:
  ValidationReport report_;
};

/// Checks strict interiority of every cell. Throws std::invalid_argument on
/// a dimension mismatch.
ValidationReport validate(const Dataset& data, const BoundsSpec& bounds);

enum class BoundaryPolicy { reject, nudge };

/// Relative distance used to move on-bound observations inward.
inline constexpr double kNudgeEpsilon = 1e-8;

/// Moves cells lying exactly on a bound inward by kNudgeEpsilon times the
/// support width (1 for half-open supports). Cells strictly outside the
/// support are left untouched. `moved` receives the number of cells changed.
Dataset nudge_boundary(const Dataset& data, const BoundsSpec& bounds, std::size_t* moved = nullptr);

struct CsvOptions {
  bool has_header = true;
  /// Column names (or 0-based indices when there is no header) to model.
  /// Empty means every column not listed in `categorical`.
  std::vector<std::string> columns;
  /// Columns kept verbatim as strings, e.g. external reference labels.
  std::vector<std::string> categorical;
  BoundaryPolicy boundary = BoundaryPolicy::reject;
};

struct LoadedData {
  Dataset data;
  std::map<std::string, std::vector<std::string>> categorical;
  std::vector<std::string> warnings;
};

/// Reads a comma-separated file with '.' decimals. Bounds refer to the
/// selected columns in order. Throws ParseError or ValidationError.
LoadedData load_csv(const std::filesystem::path& path, const CsvOptions& options,
                    const BoundsSpec& bounds);

/// Selection only, no bounds check.
LoadedData load_csv(const std::filesystem::path& path, const CsvOptions& options);

/// Applies the boundary policy to already loaded data, then validates.
/// Throws ValidationError.
void enforce_bounds(LoadedData& loaded, const BoundsSpec& bounds, BoundaryPolicy policy);

}  // namespace gmmb
