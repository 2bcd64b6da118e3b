#include "cli/commands.hpp"

#include <gmmb/version.hpp>

#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <sstream>

using namespace gmmb;
using namespace gmmb::cli;

namespace {

struct Overrides {
  std::string config;
  std::string data;
  std::string bounds;
  std::string models;
  std::string G;
  std::optional<std::uint64_t> seed;
  std::optional<double> tol;
  std::optional<int> max_iter;
  std::optional<int> starts;
  std::optional<unsigned> threads;
  std::string columns;
  std::string reference;
  bool nudge = false;
  bool no_header = false;
  std::string out;
};

void add_run_flags(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--config", o.config, "JSON run configuration");
  cmd->add_option("--data", o.data, "CSV data file");
  cmd->add_option("--bounds", o.bounds, "per-column bounds, e.g. \"x:lower=0;y:lower=0,upper=1;z:none\" (* = all)");
  cmd->add_option("--model", o.models, "covariance model code(s), e.g. V or E,V or VVE");
  cmd->add_option("--G", o.G, "number of components: 2, 1:5 or 1,2,4");
  cmd->add_option("--seed", o.seed, "random seed");
  cmd->add_option("--tol", o.tol, "relative log-likelihood tolerance");
  cmd->add_option("--max-iter", o.max_iter, "maximum ECM iterations");
  cmd->add_option("--kmeans-starts", o.starts, "k-means restarts used for initialization");
  cmd->add_option("--threads", o.threads, "concurrent fits in a sweep (0 = all cores)");
  cmd->add_option("--columns", o.columns, "comma-separated columns to model");
  cmd->add_option("--reference", o.reference, "categorical column scored by the adjusted Rand index");
  cmd->add_flag("--nudge-boundary", o.nudge, "move values lying exactly on a bound slightly inward");
  cmd->add_flag("--no-header", o.no_header, "the CSV has no header row");
  cmd->add_option("--out", o.out, "output directory");
}

std::vector<std::string> split_commas(const std::string& s) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

RunConfig build_config(const Overrides& o) {
  RunConfig c = o.config.empty() ? RunConfig{} : load_config(o.config);
  if (!o.data.empty()) c.data = o.data;
  if (!o.bounds.empty()) {
    for (auto& [col, b] : parse_bounds_spec(o.bounds)) c.bounds[col] = b;
  }
  if (!o.models.empty()) c.models = parse_model_list(o.models);
  if (!o.G.empty()) c.G = parse_G_range(o.G);
  if (o.seed) c.seed = *o.seed;
  if (o.tol) {
    if (!(*o.tol > 0.0)) throw ConfigError("--tol must be positive");
    c.tol = *o.tol;
  }
  if (o.max_iter) {
    if (*o.max_iter < 1) throw ConfigError("--max-iter must be at least 1");
    c.max_iter = *o.max_iter;
  }
  if (o.starts) {
    if (*o.starts < 1) throw ConfigError("--kmeans-starts must be at least 1");
    c.kmeans_starts = *o.starts;
  }
  if (o.threads) c.threads = *o.threads;
  if (!o.columns.empty()) c.columns = split_commas(o.columns);
  if (!o.reference.empty()) c.reference = o.reference;
  if (o.nudge) c.nudge_boundary = true;
  if (o.no_header) c.header = false;
  if (!o.out.empty()) c.out = o.out;
  return c;
}

std::filesystem::path output_file(const std::string& out_dir, const std::string& fit_file, const char* name) {
  if (!out_dir.empty()) return std::filesystem::path(out_dir) / name;
  return std::filesystem::path(fit_file).parent_path() / name;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Clustering of bounded data with range-power transformed Gaussian mixtures"};
  app.require_subcommand(1);
  app.footer(
      "Exit status: 0 success, 1 I/O or unexpected error, 2 configuration error,\n"
      "3 data parse or validation error, 4 degenerate fit or every sweep fit failed.");

  Overrides o;
  auto* fit_cmd = app.add_subcommand("fit", "fit one (G, model) and write summary.json and observations.csv");
  add_run_flags(fit_cmd, o);
  auto* sweep_cmd = app.add_subcommand("sweep", "fit a grid of G values and models; write sweep.csv");
  add_run_flags(sweep_cmd, o);
  auto* transform_cmd = app.add_subcommand("transform", "marginal lambda per column and the transformed data");
  add_run_flags(transform_cmd, o);

  std::string fit_file;
  std::string grid;
  std::string out_dir;
  auto* density_cmd = app.add_subcommand("density", "mixture density of a univariate fit on a grid");
  density_cmd->add_option("--fit", fit_file, "summary.json written by fit")->required();
  density_cmd->add_option("--grid", grid, "FROM:TO:N (default: data range, 200 points)");
  density_cmd->add_option("--out", out_dir, "output directory (default: next to the fit)");

  auto* profiles_cmd = app.add_subcommand("profiles", "cluster means on the original scale");
  profiles_cmd->add_option("--fit", fit_file, "summary.json written by fit")->required();
  profiles_cmd->add_option("--out", out_dir, "output directory (default: next to the fit)");

  auto* classify_cmd = app.add_subcommand("classify", "apply a saved fit's MAP rule to new rows");
  classify_cmd->add_option("--fit", fit_file, "summary.json written by fit")->required();
  classify_cmd->add_option("--data", o.data, "CSV data file")->required();
  classify_cmd->add_option("--columns", o.columns, "comma-separated columns (default: those of the fit)");
  classify_cmd->add_flag("--nudge-boundary", o.nudge, "move values lying exactly on a bound slightly inward");
  classify_cmd->add_flag("--no-header", o.no_header, "the CSV has no header row");
  classify_cmd->add_option("--out", out_dir, "output directory (default: next to the fit)");

  app.add_subcommand("version", "print the version");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  return run_guarded(
      [&]() -> int {
        if (app.got_subcommand("version")) {
          std::cout << "gmmb " << version() << '\n';
          return kExitOk;
        }
        if (app.got_subcommand(fit_cmd)) return cmd_fit(build_config(o), std::cout, std::cerr);
        if (app.got_subcommand(sweep_cmd)) return cmd_sweep(build_config(o), std::cout, std::cerr);
        if (app.got_subcommand(transform_cmd)) return cmd_transform(build_config(o), std::cout, std::cerr);
        if (app.got_subcommand(density_cmd)) {
          return cmd_density(fit_file, grid, output_file(out_dir, fit_file, "density.csv"), std::cout);
        }
        if (app.got_subcommand(profiles_cmd)) {
          return cmd_profiles(fit_file, output_file(out_dir, fit_file, "profiles.csv"), std::cout);
        }
        if (app.got_subcommand(classify_cmd)) {
          return cmd_classify(fit_file, build_config(o), output_file(out_dir, fit_file, "classification.csv"),
                              std::cout, std::cerr);
        }
        return kExitConfig;
      },
      std::cerr);
}
