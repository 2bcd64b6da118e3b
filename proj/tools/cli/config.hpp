#pragma once

#include <gmmb/data.hpp>
#include <gmmb/ecm.hpp>
#include <gmmb/mixture.hpp>

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace gmmb::cli {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Declarative description of a run. Loaded from JSON; command-line flags
/// override individual fields.
struct RunConfig {
  std::filesystem::path data;
  bool header = true;
  std::vector<std::string> columns;      ///< empty: all non-categorical columns
  std::vector<std::string> categorical;  ///< kept as labels, never modeled
  std::map<std::string, Bound> bounds;   ///< by column name; "*" applies to the rest
  std::map<std::string, double> fixed_lambda;
  std::vector<int> G{1};
  std::vector<Model> models;             ///< empty: V for d = 1, VVV otherwise
  double tol = 1e-8;
  int max_iter = 1000;
  int kmeans_starts = 10;
  std::uint64_t seed = 0;
  LambdaBox lambda_box{};
  bool nudge_boundary = false;
  std::filesystem::path out = "gmmb-out";
  std::optional<std::string> reference;  ///< categorical column scored by ARI
  unsigned threads = 1;
};

/// Parses a config document. Relative paths resolve against `base_dir`.
/// Unknown keys are rejected with ConfigError.
RunConfig parse_config(const nlohmann::json& doc, const std::filesystem::path& base_dir = {});
RunConfig load_config(const std::filesystem::path& path);

/// "col:lower=0", "col:lower=0,upper=1", "col:none"; several separated by ';'.
std::map<std::string, Bound> parse_bounds_spec(const std::string& text);
/// "2", "1:5", "1-5" or "1,2,4".
std::vector<int> parse_G_range(const std::string& text);
/// "V" or "E,V".
std::vector<Model> parse_model_list(const std::string& text);

/// Bounds for the selected columns in order. Throws ConfigError when a
/// column has no declaration and there is no "*" default.
BoundsSpec resolve_bounds(const RunConfig& config, const std::vector<std::string>& columns);

/// Fit settings for one (G, model) with fixed powers resolved by column.
FitConfig make_fit_config(const RunConfig& config, const std::vector<std::string>& columns, int G,
                          Model model);

std::vector<Model> effective_models(const RunConfig& config, Eigen::Index d);

/// Loads and validates the data described by `config`.
LoadedData load_data(const RunConfig& config, BoundsSpec* bounds_out = nullptr);

}  // namespace gmmb::cli
