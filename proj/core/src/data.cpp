#include "gmmb/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace gmmb {

bool Bound::contains(double x) const {
  switch (kind) {
    case BoundKind::unbounded:
      return std::isfinite(x);
    case BoundKind::lower:
      return x > lower && std::isfinite(x);
    case BoundKind::doubly:
      return x > lower && x < upper;
  }
  return false;
}

std::string to_string(const Bound& b) {
  std::ostringstream os;
  os.precision(17);
  switch (b.kind) {
    case BoundKind::unbounded:
      os << "(-inf, +inf)";
      break;
    case BoundKind::lower:
      os << "(" << b.lower << ", +inf)";
      break;
    case BoundKind::doubly:
      os << "(" << b.lower << ", " << b.upper << ")";
      break;
  }
  return os.str();
}

BoundsSpec::BoundsSpec(std::vector<Bound> bounds) : bounds_(std::move(bounds)) {
  for (std::size_t j = 0; j < bounds_.size(); ++j) {
    const Bound& b = bounds_[j];
    if (b.kind == BoundKind::unbounded) continue;
    if (!std::isfinite(b.lower) || (b.kind == BoundKind::doubly && !std::isfinite(b.upper))) {
      throw std::invalid_argument("bounds for variable " + std::to_string(j + 1) + " must be finite");
    }
    if (b.kind == BoundKind::doubly && !(b.lower < b.upper)) {
      throw std::invalid_argument("lower bound must be below upper bound for variable " +
                                  std::to_string(j + 1));
    }
  }
}

BoundsSpec BoundsSpec::uniform(std::size_t d, const Bound& b) {
  return BoundsSpec(std::vector<Bound>(d, b));
}

Dataset::Dataset(Eigen::MatrixXd values, std::vector<std::string> column_names)
    : values_(std::move(values)), names_(std::move(column_names)) {
  if (values_.rows() < 1 || values_.cols() < 1) {
    throw std::invalid_argument("dataset needs at least one row and one column");
  }
  if (!values_.allFinite()) {
    throw std::invalid_argument("dataset contains non-finite values");
  }
  if (names_.empty()) {
    for (Eigen::Index j = 0; j < values_.cols(); ++j) names_.push_back("V" + std::to_string(j + 1));
  } else if (static_cast<Eigen::Index>(names_.size()) != values_.cols()) {
    throw std::invalid_argument("column name count does not match data width");
  }
}

Eigen::Index Dataset::column_index(const std::string& name) const {
  auto it = std::find(names_.begin(), names_.end(), name);
  if (it == names_.end()) throw std::out_of_range("no column named '" + name + "'");
  return it - names_.begin();
}

std::string ValidationReport::describe(const Dataset& data, std::size_t max_listed) const {
  std::ostringstream os;
  os.precision(17);
  os << violations.size() << " observation(s) outside the open support";
  std::size_t shown = 0;
  for (const auto& v : violations) {
    if (shown++ == max_listed) {
      os << "\n  ...";
      break;
    }
    os << "\n  row " << v.row + 1 << ", column '" << data.column_names()[v.col] << "': " << v.value;
  }
  return os.str();
}

ParseError::ParseError(const std::string& what, std::size_t line, std::size_t column)
    : std::runtime_error("line " + std::to_string(line) + ", column " + std::to_string(column) +
                         ": " + what),
      line_(line),
      column_(column) {}

ValidationError::ValidationError(const std::string& what, ValidationReport report)
    : std::runtime_error(what), report_(std::move(report)) {}

ValidationReport validate(const Dataset& data, const BoundsSpec& bounds) {
  if (static_cast<Eigen::Index>(bounds.size()) != data.d()) {
    throw std::invalid_argument("bounds declare " + std::to_string(bounds.size()) +
                                " variables but data has " + std::to_string(data.d()));
  }
  ValidationReport report;
  const auto& x = data.values();
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
      if (!bounds[j].contains(x(i, j))) report.violations.push_back({i, j, x(i, j)});
    }
  }
  return report;
}

Dataset nudge_boundary(const Dataset& data, const BoundsSpec& bounds, std::size_t* moved) {
  if (static_cast<Eigen::Index>(bounds.size()) != data.d()) {
    throw std::invalid_argument("bounds and data dimension differ");
  }
  Eigen::MatrixXd x = data.values();
  std::size_t count = 0;
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    const Bound& b = bounds[j];
    if (b.kind == BoundKind::unbounded) continue;
    const double width = b.kind == BoundKind::doubly ? b.upper - b.lower : 1.0;
    const double eps = kNudgeEpsilon * width;
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      if (x(i, j) == b.lower) {
        x(i, j) = b.lower + eps;
        ++count;
      } else if (b.kind == BoundKind::doubly && x(i, j) == b.upper) {
        x(i, j) = b.upper - eps;
        ++count;
      }
    }
  }
  if (moved) *moved = count;
  return Dataset(std::move(x), data.column_names());
}

namespace {

std::string trim(std::string_view s) {
  auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  auto last = s.find_last_not_of(" \t\r");
  s = s.substr(first, last - first + 1);
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') s = s.substr(1, s.size() - 2);
  return std::string(s);
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  bool quoted = false;
  for (char c : line) {
    if (c == '"') {
      quoted = !quoted;
      field += c;
    } else if (c == ',' && !quoted) {
      out.push_back(trim(field));
      field.clear();
    } else {
      field += c;
    }
  }
  out.push_back(trim(field));
  return out;
}

bool parse_real(const std::string& s, double& out) {
  if (s.empty()) return false;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  if (*first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last && std::isfinite(out);
}

std::size_t resolve_column(const std::string& key, const std::vector<std::string>& header,
                           bool has_header) {
  if (has_header) {
    auto it = std::find(header.begin(), header.end(), key);
    if (it != header.end()) return static_cast<std::size_t>(it - header.begin());
  }
  std::size_t idx = 0;
  auto [ptr, ec] = std::from_chars(key.data(), key.data() + key.size(), idx);
  if (ec == std::errc() && ptr == key.data() + key.size() && idx < header.size()) return idx;
  throw std::invalid_argument("unknown column '" + key + "'");
}

}  // namespace

LoadedData load_csv(const std::filesystem::path& path, const CsvOptions& options) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path.string() + "'");

  std::vector<std::vector<std::string>> rows;
  std::vector<std::size_t> line_numbers;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (lineno == 1 && line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
    if (trim(line).empty()) continue;
    rows.push_back(split_fields(line));
    line_numbers.push_back(lineno);
  }
  if (rows.empty()) throw ParseError("file is empty", lineno == 0 ? 1 : lineno, 1);

  std::vector<std::string> header;
  std::size_t first_data = 0;
  const std::size_t width = rows.front().size();
  if (options.has_header) {
    header = rows.front();
    first_data = 1;
  } else {
    for (std::size_t j = 0; j < width; ++j) header.push_back(std::to_string(j));
  }
  if (rows.size() <= first_data) throw ParseError("no data rows", line_numbers.front(), 1);

  std::vector<std::size_t> cat_idx;
  for (const auto& c : options.categorical) cat_idx.push_back(resolve_column(c, header, options.has_header));
  std::vector<std::size_t> num_idx;
  if (options.columns.empty()) {
    for (std::size_t j = 0; j < width; ++j) {
      if (std::find(cat_idx.begin(), cat_idx.end(), j) == cat_idx.end()) num_idx.push_back(j);
    }
  } else {
    for (const auto& c : options.columns) num_idx.push_back(resolve_column(c, header, options.has_header));
  }
  if (num_idx.empty()) throw std::invalid_argument("no numeric columns selected");

  const std::size_t n = rows.size() - first_data;
  Eigen::MatrixXd values(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(num_idx.size()));
  std::map<std::string, std::vector<std::string>> categorical;
  for (std::size_t r = first_data; r < rows.size(); ++r) {
    const auto& fields = rows[r];
    if (fields.size() != width) {
      throw ParseError("expected " + std::to_string(width) + " fields, found " +
                           std::to_string(fields.size()),
                       line_numbers[r], std::min(fields.size(), width) + 1);
    }
    const auto i = static_cast<Eigen::Index>(r - first_data);
    for (std::size_t k = 0; k < num_idx.size(); ++k) {
      const std::string& s = fields[num_idx[k]];
      double v = 0.0;
      if (s.empty() || s == "NA" || s == "NaN" || s == "nan") {
        throw ParseError("missing value in column '" + header[num_idx[k]] + "'", line_numbers[r],
                         num_idx[k] + 1);
      }
      if (!parse_real(s, v)) {
        throw ParseError("cannot parse '" + s + "' as a finite real", line_numbers[r], num_idx[k] + 1);
      }
      values(i, static_cast<Eigen::Index>(k)) = v;
    }
    for (std::size_t c = 0; c < cat_idx.size(); ++c) {
      categorical[header[cat_idx[c]]].push_back(fields[cat_idx[c]]);
    }
  }

  std::vector<std::string> names;
  for (auto j : num_idx) names.push_back(header[j]);
  return LoadedData{Dataset(std::move(values), std::move(names)), std::move(categorical), {}};
}

void enforce_bounds(LoadedData& loaded, const BoundsSpec& bounds, BoundaryPolicy policy) {
  if (policy == BoundaryPolicy::nudge) {
    std::size_t moved = 0;
    Dataset nudged = nudge_boundary(loaded.data, bounds, &moved);
    if (moved > 0) {
      loaded.warnings.push_back(std::to_string(moved) +
                                " observation(s) on a bound were moved inward");
      loaded.data = std::move(nudged);
    }
  }
  ValidationReport report = validate(loaded.data, bounds);
  if (!report.ok()) {
    std::string message = report.describe(loaded.data);
    throw ValidationError(message, std::move(report));
  }
}

LoadedData load_csv(const std::filesystem::path& path, const CsvOptions& options,
                    const BoundsSpec& bounds) {
  LoadedData loaded = load_csv(path, options);
  enforce_bounds(loaded, bounds, options.boundary);
  return loaded;
}

}  // namespace gmmb
