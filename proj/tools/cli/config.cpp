#include "config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

namespace gmmb::cli {

using nlohmann::json;

namespace {

std::string trim(std::string s) {
  const auto first = s.find_first_not_of(" \t");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, sep)) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

double to_double(const std::string& s, const std::string& what) {
  double v = 0.0;
  const char* first = s.data();
  if (!s.empty() && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) throw ConfigError("cannot parse " + what + " '" + s + "'");
  return v;
}

int to_int(const std::string& s, const std::string& what) {
  int v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) throw ConfigError("cannot parse " + what + " '" + s + "'");
  return v;
}

Bound bound_from_json(const json& j, const std::string& column) {
  if (j.is_string()) {
    if (j.get<std::string>() == "none") return Bound::none();
    throw ConfigError("bounds for '" + column + "' must be \"none\" or an object");
  }
  if (!j.is_object()) throw ConfigError("bounds for '" + column + "' must be an object");
  for (const auto& [key, value] : j.items()) {
    if (key != "lower" && key != "upper") {
      throw ConfigError("unknown key '" + key + "' in bounds for '" + column + "'");
    }
    if (!value.is_number()) throw ConfigError("bound '" + key + "' for '" + column + "' must be a number");
  }
  const bool has_lower = j.contains("lower");
  const bool has_upper = j.contains("upper");
  if (!has_lower && has_upper) throw ConfigError("upper bound without lower bound for '" + column + "'");
  if (!has_lower) return Bound::none();
  const double l = j.at("lower").get<double>();
  if (!has_upper) return Bound::lower_at(l);
  const double u = j.at("upper").get<double>();
  if (!(l < u)) throw ConfigError("lower bound must be below upper bound for '" + column + "'");
  return Bound::between(l, u);
}

template <typename T>
T get_as(const json& doc, const char* key) {
  try {
    return doc.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("invalid value for '") + key + "': " + e.what());
  }
}

std::vector<int> G_from_json(const json& j) {
  if (j.is_number_integer()) return {j.get<int>()};
  if (j.is_string()) return parse_G_range(j.get<std::string>());
  if (j.is_array()) {
    std::vector<int> out;
    for (const auto& v : j) {
      if (!v.is_number_integer()) throw ConfigError("'G' entries must be integers");
      out.push_back(v.get<int>());
    }
    return out;
  }
  throw ConfigError("'G' must be an integer, a range string or a list");
}

}  // namespace

std::map<std::string, Bound> parse_bounds_spec(const std::string& text) {
  std::map<std::string, Bound> out;
  for (const auto& decl : split(text, ';')) {
    const auto colon = decl.rfind(':');
    if (colon == std::string::npos) throw ConfigError("bounds declaration '" + decl + "' lacks ':'");
    const std::string column = trim(decl.substr(0, colon));
    const std::string body = trim(decl.substr(colon + 1));
    if (column.empty()) throw ConfigError("bounds declaration '" + decl + "' lacks a column");
    if (body == "none") {
      out[column] = Bound::none();
      continue;
    }
    std::optional<double> lower, upper;
    for (const auto& part : split(body, ',')) {
      const auto eq = part.find('=');
      if (eq == std::string::npos) throw ConfigError("expected key=value in '" + part + "'");
      const std::string key = trim(part.substr(0, eq));
      const double v = to_double(trim(part.substr(eq + 1)), "bound");
      if (key == "lower") {
        lower = v;
      } else if (key == "upper") {
        upper = v;
      } else {
        throw ConfigError("unknown bound key '" + key + "'");
      }
    }
    if (!lower) throw ConfigError("bounds for '" + column + "' need a lower value or 'none'");
    if (upper && !(*lower < *upper)) throw ConfigError("lower bound must be below upper bound for '" + column + "'");
    out[column] = upper ? Bound::between(*lower, *upper) : Bound::lower_at(*lower);
  }
  if (out.empty()) throw ConfigError("empty bounds specification");
  return out;
}

std::vector<int> parse_G_range(const std::string& raw) {
  const std::string text = trim(raw);
  std::vector<int> out;
  auto sep = text.find_first_of(":-");
  if (sep != std::string::npos && sep > 0) {
    const int lo = to_int(trim(text.substr(0, sep)), "G range");
    const int hi = to_int(trim(text.substr(sep + 1)), "G range");
    if (lo > hi) throw ConfigError("empty G range '" + text + "'");
    for (int g = lo; g <= hi; ++g) out.push_back(g);
  } else {
    for (const auto& item : split(text, ',')) out.push_back(to_int(item, "G"));
  }
  if (out.empty()) throw ConfigError("empty G specification");
  for (int g : out) {
    if (g < 1) throw ConfigError("G must be at least 1");
  }
  return out;
}

std::vector<Model> parse_model_list(const std::string& text) {
  std::vector<Model> out;
  for (const auto& item : split(text, ',')) {
    try {
      out.push_back(parse_model(item));
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
  }
  if (out.empty()) throw ConfigError("empty model list");
  return out;
}

RunConfig parse_config(const json& doc, const std::filesystem::path& base_dir) {
  if (!doc.is_object()) throw ConfigError("configuration must be a JSON object");
  static const std::set<std::string> known{
      "data",     "header", "columns", "categorical",   "bounds",         "fixed_lambda", "G",
      "models",   "tol",    "max_iter", "kmeans_starts", "seed",          "lambda_box",   "nudge_boundary",
      "out",      "reference", "threads", "description"};
  for (const auto& [key, value] : doc.items()) {
    if (!known.contains(key)) throw ConfigError("unknown configuration key '" + key + "'");
  }
  auto resolve = [&](const std::string& p) {
    std::filesystem::path path(p);
    return path.is_relative() && !base_dir.empty() ? base_dir / path : path;
  };

  RunConfig c;
  if (doc.contains("data")) c.data = resolve(get_as<std::string>(doc, "data"));
  if (doc.contains("header")) c.header = get_as<bool>(doc, "header");
  if (doc.contains("columns")) c.columns = get_as<std::vector<std::string>>(doc, "columns");
  if (doc.contains("categorical")) c.categorical = get_as<std::vector<std::string>>(doc, "categorical");
  if (doc.contains("bounds")) {
    const json& b = doc.at("bounds");
    if (!b.is_object()) throw ConfigError("'bounds' must map column names to bounds");
    for (const auto& [column, spec] : b.items()) c.bounds[column] = bound_from_json(spec, column);
  }
  if (doc.contains("fixed_lambda")) {
    const json& f = doc.at("fixed_lambda");
    if (!f.is_object()) throw ConfigError("'fixed_lambda' must map column names to numbers");
    for (const auto& [column, value] : f.items()) {
      if (!value.is_number()) throw ConfigError("fixed lambda for '" + column + "' must be a number");
      c.fixed_lambda[column] = value.get<double>();
    }
  }
  if (doc.contains("G")) c.G = G_from_json(doc.at("G"));
  if (doc.contains("models")) {
    const json& m = doc.at("models");
    if (m.is_string()) {
      c.models = parse_model_list(m.get<std::string>());
    } else {
      for (const auto& s : get_as<std::vector<std::string>>(doc, "models")) {
        const auto parsed = parse_model_list(s);
        c.models.insert(c.models.end(), parsed.begin(), parsed.end());
      }
    }
  }
  if (doc.contains("tol")) c.tol = get_as<double>(doc, "tol");
  if (doc.contains("max_iter")) c.max_iter = get_as<int>(doc, "max_iter");
  if (doc.contains("kmeans_starts")) c.kmeans_starts = get_as<int>(doc, "kmeans_starts");
  if (doc.contains("seed")) c.seed = get_as<std::uint64_t>(doc, "seed");
  if (doc.contains("lambda_box")) {
    const auto box = get_as<std::vector<double>>(doc, "lambda_box");
    if (box.size() != 2 || !(box[0] < box[1])) throw ConfigError("'lambda_box' must be [min, max] with min < max");
    c.lambda_box = {box[0], box[1]};
  }
  if (doc.contains("nudge_boundary")) c.nudge_boundary = get_as<bool>(doc, "nudge_boundary");
  if (doc.contains("out")) c.out = resolve(get_as<std::string>(doc, "out"));
  if (doc.contains("reference")) c.reference = get_as<std::string>(doc, "reference");
  if (doc.contains("threads")) c.threads = get_as<unsigned>(doc, "threads");

  if (!(c.tol > 0.0)) throw ConfigError("'tol' must be positive");
  if (c.max_iter < 1) throw ConfigError("'max_iter' must be at least 1");
  if (c.kmeans_starts < 1) throw ConfigError("'kmeans_starts' must be at least 1");
  for (int g : c.G) {
    if (g < 1) throw ConfigError("G must be at least 1");
  }
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open configuration '" + path.string() + "'");
  json doc;
  try {
    doc = json::parse(in, nullptr, true, true);
  } catch (const json::parse_error& e) {
    throw ConfigError("malformed configuration '" + path.string() + "': " + e.what());
  }
  return parse_config(doc, path.parent_path());
}

BoundsSpec resolve_bounds(const RunConfig& config, const std::vector<std::string>& columns) {
  for (const auto& [name, b] : config.bounds) {
    if (name != "*" && std::find(columns.begin(), columns.end(), name) == columns.end()) {
      throw ConfigError("bounds declared for unknown or unselected column '" + name + "'");
    }
  }
  std::vector<Bound> out;
  for (const auto& col : columns) {
    auto it = config.bounds.find(col);
    if (it == config.bounds.end()) it = config.bounds.find("*");
    if (it == config.bounds.end()) {
      throw ConfigError("no bounds declared for column '" + col + "' (use 'none' for unbounded data)");
    }
    out.push_back(it->second);
  }
  try {
    return BoundsSpec(std::move(out));
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

std::vector<Model> effective_models(const RunConfig& config, Eigen::Index d) {
  if (config.models.empty()) return {d == 1 ? Model::V : Model::VVV};
  for (Model m : config.models) {
    if (!valid_for_dimension(m, d)) {
      throw ConfigError("model " + std::string(name(m)) + " does not apply to " + std::to_string(d) +
                        "-dimensional data");
    }
  }
  return config.models;
}

FitConfig make_fit_config(const RunConfig& config, const std::vector<std::string>& columns, int G,
                          Model model) {
  FitConfig f;
  f.G = G;
  f.model = model;
  f.tol = config.tol;
  f.max_iter = config.max_iter;
  f.n_kmeans_starts = config.kmeans_starts;
  f.seed = config.seed;
  f.lambda_box = config.lambda_box;
  if (!config.fixed_lambda.empty()) {
    f.fixed_lambda.assign(columns.size(), std::nullopt);
    for (const auto& [name, value] : config.fixed_lambda) {
      auto it = std::find(columns.begin(), columns.end(), name);
      if (it == columns.end()) throw ConfigError("fixed lambda declared for unknown column '" + name + "'");
      f.fixed_lambda[static_cast<std::size_t>(it - columns.begin())] = value;
    }
  }
  return f;
}

LoadedData load_data(const RunConfig& config, BoundsSpec* bounds_out) {
  if (config.data.empty()) throw ConfigError("no data file given (set 'data' or pass --data)");
  CsvOptions opts;
  opts.has_header = config.header;
  opts.columns = config.columns;
  opts.categorical = config.categorical;
  if (config.reference &&
      std::find(opts.categorical.begin(), opts.categorical.end(), *config.reference) == opts.categorical.end()) {
    opts.categorical.push_back(*config.reference);
  }
  LoadedData loaded = [&] {
    try {
      return load_csv(config.data, opts);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
  }();
  const BoundsSpec bounds = resolve_bounds(config, loaded.data.column_names());
  enforce_bounds(loaded, bounds, config.nudge_boundary ? BoundaryPolicy::nudge : BoundaryPolicy::reject);
  if (bounds_out) *bounds_out = bounds;
  return loaded;
}

}  // namespace gmmb::cli
