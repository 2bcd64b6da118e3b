#pragma once

#include "config.hpp"
#include "results.hpp"

#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace gmmb::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitFailure = 1,     ///< IO and anything unexpected
  kExitConfig = 2,      ///< bad flags or configuration
  kExitInvalid = 3,     ///< unparsable data, values outside the support
  kExitDegenerate = 4,  ///< fit collapsed, or every fit in a sweep failed
};

/// Input that is well-formed but unusable, e.g. a grid point on a bound.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Runs `body`, reporting any exception on `err` and mapping it to an exit code.
int run_guarded(const std::function<int()>& body, std::ostream& err);

int cmd_fit(const RunConfig& config, std::ostream& out, std::ostream& err);
int cmd_sweep(const RunConfig& config, std::ostream& out, std::ostream& err);
int cmd_transform(const RunConfig& config, std::ostream& out, std::ostream& err);
/// `grid` is "from:to:n"; empty uses the fitted data range with 200 points.
int cmd_density(const std::filesystem::path& fit_file, const std::string& grid,
                const std::filesystem::path& out_file, std::ostream& out);
int cmd_profiles(const std::filesystem::path& fit_file, const std::filesystem::path& out_file,
                 std::ostream& out);
/// Applies a saved fit's MAP rule to the rows of `config.data`.
int cmd_classify(const std::filesystem::path& fit_file, const RunConfig& config,
                 const std::filesystem::path& out_file, std::ostream& out, std::ostream& err);

std::vector<double> parse_grid(const std::string& spec, double default_from, double default_to);

struct DensityTable {
  std::vector<double> x;
  std::vector<double> total;
  std::vector<std::vector<double>> components;  ///< [k][i], each scaled by its weight
};

/// Original-scale mixture density of a univariate fit. Throws InputError
/// for multivariate fits and grid points outside the open support.
DensityTable density_table(const SavedFit& fit, const std::vector<double>& xs);
std::string density_csv(const DensityTable& table);

struct ProfileCell {
  std::string variable;
  int cluster = 0;
  double transformed_mean = 0.0;
  double mean = 0.0;  ///< NaN when the inverse is undefined
  bool defined = true;
  double data_mean = 0.0;
};

/// Cluster means mapped back to the original scale.
std::vector<ProfileCell> profile_table(const SavedFit& fit);
std::string profiles_csv(const std::vector<ProfileCell>& cells);

/// row,label,uncertainty,entropy,z1..zG for any responsibility matrix.
std::string classification_csv(const Eigen::MatrixXd& z);

/// ARI of a 1-based MAP partition against string labels.
double ari_against(const std::vector<int>& labels, const std::vector<std::string>& reference);

}  // namespace gmmb::cli
