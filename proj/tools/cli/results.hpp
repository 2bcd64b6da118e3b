#pragma once

#include <gmmb/ecm.hpp>
#include <gmmb/sweep.hpp>

#include <json.hpp>

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace gmmb::cli {

inline constexpr const char* kSummaryFormat = "gmmb-fit/1";

/// Writes through a sibling temporary file, then renames over `path`.
void write_atomic(const std::filesystem::path& path, const std::string& contents);

/// Shortest text that reads back to the same double; "NA" for non-finite.
std::string format_real(double v);

struct RunInfo {
  std::vector<std::string> columns;
  BoundsSpec bounds;
  Eigen::VectorXd data_means;
  Eigen::VectorXd data_min;
  Eigen::VectorXd data_max;
  std::uint64_t seed = 0;
  double tol = 0.0;
  std::optional<std::string> reference;
  std::optional<double> ari;
};

RunInfo describe_run(const Dataset& data, const BoundsSpec& bounds, const FitConfig& config);

nlohmann::json summary_json(const FitResult& fit, const RunInfo& info);
void write_summary(const std::filesystem::path& path, const FitResult& fit, const RunInfo& info);

/// row,label,uncertainty,entropy,z1..zG
std::string observations_csv(const FitResult& fit);

/// One row per (G, model) with criteria and the best-by-BIC/ICL markers.
std::string sweep_csv(const SweepResult& result);

/// A fit reloaded from a summary file.
struct SavedFit {
  MixtureParams params;
  TransformParams tparams;
  std::vector<std::string> columns;
  Eigen::VectorXd data_means;
  Eigen::VectorXd data_min;
  Eigen::VectorXd data_max;
  nlohmann::json raw;
};

/// Throws std::runtime_error for unreadable or malformed summaries.
SavedFit read_summary(const std::filesystem::path& path);
SavedFit saved_fit_from_json(const nlohmann::json& doc);

}  // namespace gmmb::cli
