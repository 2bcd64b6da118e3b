#include "commands.hpp"

#include <gmmb/diagnostics.hpp>
#include <gmmb/mstep.hpp>
#include <gmmb/sweep.hpp>

#include <cmath>
#include <cstdio>
#include <iomanip>
#include <map>
#include <ostream>
#include <sstream>

namespace gmmb::cli {

int run_guarded(const std::function<int()>& body, std::ostream& err) {
  try {
    return body();
  } catch (const ConfigError& e) {
    err << "configuration error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const ValidationError& e) {
    err << "validation error: " << e.what() << '\n'
        << "hint: check the declared bounds, or pass --nudge-boundary to move on-bound values inward\n";
    return kExitInvalid;
  } catch (const ParseError& e) {
    err << "parse error: " << e.what() << '\n';
    return kExitInvalid;
  } catch (const InputError& e) {
    err << "invalid input: " << e.what() << '\n';
    return kExitInvalid;
  } catch (const DegenerateFit& e) {
    err << "degenerate fit: " << e.what() << '\n';
    return kExitDegenerate;
  } catch (const AllFitsFailed& e) {
    err << "sweep failed: " << e.what() << '\n';
    return kExitDegenerate;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
}

namespace {

struct Prepared {
  LoadedData loaded;
  BoundsSpec bounds;
};

Prepared prepare(const RunConfig& config) {
  BoundsSpec bounds;
  LoadedData loaded = load_data(config, &bounds);
  return {std::move(loaded), std::move(bounds)};
}

FitConfig checked_fit_config(const RunConfig& config, const Dataset& data, int G, Model model) {
  FitConfig fc = make_fit_config(config, data.column_names(), G, model);
  try {
    fc.validate(data.d());
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  return fc;
}

void print_warnings(const LoadedData& loaded, std::ostream& err) {
  for (const auto& w : loaded.warnings) err << "warning: " << w << '\n';
}

std::optional<double> reference_ari(const RunConfig& config, const LoadedData& loaded, const FitResult& fit) {
  if (!config.reference || !fit.ok()) return std::nullopt;
  auto it = loaded.categorical.find(*config.reference);
  if (it == loaded.categorical.end()) {
    throw ConfigError("reference column '" + *config.reference + "' not found");
  }
  return ari_against(fit.classification, it->second);
}

std::string report_line(const FitResult& r) {
  std::ostringstream os;
  os << "model=" << name(r.model) << " G=" << r.G << " status=" << to_string(r.status);
  if (r.ok()) {
    os << std::setprecision(10) << " loglik=" << r.loglik << " df=" << r.df << " BIC=" << r.bic
       << " ICL=" << r.icl << " NEC=" << r.nec << " iterations=" << r.n_iter << " lambda=";
    for (Eigen::Index j = 0; j < r.tparams.lambda().size(); ++j) {
      os << (j ? "," : "") << std::setprecision(6) << r.tparams.lambda()[j];
    }
  } else {
    os << " reason=\"" << r.diagnostic << '"';
  }
  return os.str();
}

void write_fit_bundle(const std::filesystem::path& dir, const FitResult& fit, const RunInfo& info) {
  write_summary(dir / "summary.json", fit, info);
  if (fit.ok()) write_atomic(dir / "observations.csv", observations_csv(fit));
}

}  // namespace

double ari_against(const std::vector<int>& labels, const std::vector<std::string>& reference) {
  std::map<std::string, int> codes;
  std::vector<int> ref;
  ref.reserve(reference.size());
  for (const auto& s : reference) ref.push_back(codes.try_emplace(s, static_cast<int>(codes.size())).first->second);
  return adjusted_rand(labels, ref);
}

int cmd_fit(const RunConfig& config, std::ostream& out, std::ostream& err) {
  if (config.G.size() != 1) throw ConfigError("fit takes a single G; use sweep for a range");
  Prepared p = prepare(config);
  print_warnings(p.loaded, err);
  const Dataset& data = p.loaded.data;
  const auto models = effective_models(config, data.d());
  if (models.size() != 1) throw ConfigError("fit takes a single model; use sweep for several");
  const FitConfig fc = checked_fit_config(config, data, config.G.front(), models.front());

  const FitResult r = fit(data, p.bounds, fc);
  RunInfo info = describe_run(data, p.bounds, fc);
  info.reference = config.reference;
  info.ari = reference_ari(config, p.loaded, r);
  write_fit_bundle(config.out, r, info);

  out << report_line(r);
  if (info.ari) out << " ARI=" << std::setprecision(6) << *info.ari;
  out << '\n';
  if (r.lambda_warning) err << "warning: a lambda update could not be evaluated and kept its previous value\n";
  if (!r.ok()) {
    err << "degenerate fit: " << r.diagnostic << '\n';
    return kExitDegenerate;
  }
  if (!r.converged()) err << "warning: stopped at max_iter=" << config.max_iter << " before converging\n";
  return kExitOk;
}

int cmd_sweep(const RunConfig& config, std::ostream& out, std::ostream& err) {
  Prepared p = prepare(config);
  print_warnings(p.loaded, err);
  const Dataset& data = p.loaded.data;
  const auto models = effective_models(config, data.d());
  const FitConfig base = checked_fit_config(config, data, config.G.front(), models.front());
  for (int g : config.G) checked_fit_config(config, data, g, models.front());

  const SweepResult s = sweep(data, p.bounds, config.G, models, base, config.threads);
  write_atomic(config.out / "sweep.csv", sweep_csv(s));

  out << std::left << std::setw(4) << "G" << std::setw(6) << "model" << std::setw(15) << "status" << std::right
      << std::setw(14) << "loglik" << std::setw(5) << "df" << std::setw(14) << "BIC" << std::setw(14) << "ICL"
      << std::setw(9) << "NEC" << '\n';
  for (std::size_t e = 0; e < s.entries.size(); ++e) {
    const auto& entry = s.entries[e];
    const auto& r = entry.result;
    out << std::left << std::setw(4) << entry.G << std::setw(6) << name(entry.model) << std::setw(15)
        << to_string(r.status) << std::right << std::fixed;
    if (r.ok()) {
      out << std::setprecision(4) << std::setw(14) << r.loglik << std::setw(5) << r.df << std::setw(14) << r.bic
          << std::setw(14) << r.icl << std::setw(9) << r.nec;
    } else {
      out << std::setw(14) << "NA" << std::setw(5) << "NA" << std::setw(14) << "NA" << std::setw(14) << "NA"
          << std::setw(9) << "NA";
    }
    out << std::defaultfloat;
    if (s.best_by_bic == e) out << "  <- best BIC";
    if (s.best_by_icl == e) out << "  <- best ICL";
    out << '\n';
  }

  const auto& best = s.best_bic();
  FitConfig best_fc = base;
  best_fc.G = best.G;
  best_fc.model = best.model;
  RunInfo info = describe_run(data, p.bounds, best_fc);
  info.reference = config.reference;
  info.ari = reference_ari(config, p.loaded, best.result);
  write_fit_bundle(config.out / "best_bic", best.result, info);
  return kExitOk;
}

int cmd_transform(const RunConfig& config, std::ostream& out, std::ostream& err) {
  Prepared p = prepare(config);
  print_warnings(p.loaded, err);
  const Dataset& data = p.loaded.data;
  const auto& names = data.column_names();
  const FitConfig fc = checked_fit_config(config, data, 1, data.d() == 1 ? Model::V : Model::VVV);

  TransformParams tp(p.bounds, config.lambda_box);
  for (std::size_t j = 0; j < tp.d(); ++j) {
    if (p.bounds[j].kind == BoundKind::unbounded) continue;
    if (!fc.fixed_lambda.empty() && fc.fixed_lambda[j]) {
      tp.fix(j, *fc.fixed_lambda[j]);
    } else {
      tp.set_lambda(j, marginal_lambda(data.values().col(static_cast<Eigen::Index>(j)), p.bounds[j],
                                       config.lambda_box));
    }
  }
  const Eigen::MatrixXd y = transform(data.values(), tp);

  std::ostringstream t;
  for (std::size_t j = 0; j < names.size(); ++j) t << (j ? "," : "") << names[j];
  t << '\n';
  for (Eigen::Index i = 0; i < y.rows(); ++i) {
    for (Eigen::Index j = 0; j < y.cols(); ++j) t << (j ? "," : "") << format_real(y(i, j));
    t << '\n';
  }
  std::ostringstream l;
  l << "variable,lambda,fixed,support\n";
  for (std::size_t j = 0; j < names.size(); ++j) {
    l << names[j] << ',' << format_real(tp.lambda(j)) << ',' << (tp.fixed(j) ? 1 : 0) << ",\""
      << to_string(p.bounds[j]) << "\"\n";
  }
  write_atomic(config.out / "transformed.csv", t.str());
  write_atomic(config.out / "lambdas.csv", l.str());
  for (std::size_t j = 0; j < names.size(); ++j) {
    out << names[j] << ": lambda=" << std::setprecision(6) << tp.lambda(j) << (tp.fixed(j) ? " (fixed)" : "")
        << '\n';
  }
  return kExitOk;
}

std::vector<double> parse_grid(const std::string& spec, double default_from, double default_to) {
  double from = default_from;
  double to = default_to;
  long count = 200;
  if (!spec.empty()) {
    std::vector<std::string> parts;
    std::string item;
    std::istringstream in(spec);
    while (std::getline(in, item, ':')) parts.push_back(item);
    if (parts.size() != 3) throw ConfigError("grid must be FROM:TO:N, got '" + spec + "'");
    try {
      std::size_t pos = 0;
      if (!parts[0].empty()) from = std::stod(parts[0], &pos);
      if (!parts[1].empty()) to = std::stod(parts[1], &pos);
      count = std::stol(parts[2], &pos);
      if (pos != parts[2].size()) throw std::invalid_argument(parts[2]);
    } catch (const std::exception&) {
      throw ConfigError("cannot parse grid '" + spec + "'");
    }
  }
  if (count < 1) throw ConfigError("grid needs at least one point");
  if (!std::isfinite(from) || !std::isfinite(to) || (count > 1 && !(from < to))) {
    throw ConfigError("grid needs finite FROM < TO");
  }
  std::vector<double> xs(static_cast<std::size_t>(count));
  for (long i = 0; i < count; ++i) {
    xs[static_cast<std::size_t>(i)] =
        count == 1 ? from : from + (to - from) * static_cast<double>(i) / static_cast<double>(count - 1);
  }
  xs.back() = count == 1 ? from : to;
  return xs;
}

DensityTable density_table(const SavedFit& fit, const std::vector<double>& xs) {
  if (fit.params.d() != 1) throw InputError("density grids need a univariate fit");
  const Bound& b = fit.tparams.bounds()[0];
  const double lambda = fit.tparams.lambda(0);
  const auto G = fit.params.G();
  DensityTable t;
  t.x = xs;
  t.components.assign(static_cast<std::size_t>(G), {});
  for (double x : xs) {
    if (!b.contains(x)) {
      std::ostringstream os;
      os << std::setprecision(17) << "grid point " << x << " is outside the support " << to_string(b);
      throw InputError(os.str());
    }
    Eigen::VectorXd y(1);
    y[0] = forward(x, b, lambda, fit.tparams.box());
    const double log_jac = log_derivative(x, b, lambda, fit.tparams.box());
    double total = 0.0;
    for (Eigen::Index k = 0; k < G; ++k) {
      const double v = std::exp(std::log(fit.params.weights[k]) +
                                log_component_density(y, fit.params.means[static_cast<std::size_t>(k)],
                                                      fit.params.covariances[static_cast<std::size_t>(k)]) +
                                log_jac);
      t.components[static_cast<std::size_t>(k)].push_back(v);
      total += v;
    }
    t.total.push_back(total);
  }
  return t;
}

std::string density_csv(const DensityTable& t) {
  std::ostringstream os;
  os << "x,density";
  for (std::size_t k = 0; k < t.components.size(); ++k) os << ",component" << k + 1;
  os << '\n';
  for (std::size_t i = 0; i < t.x.size(); ++i) {
    os << format_real(t.x[i]) << ',' << format_real(t.total[i]);
    for (const auto& c : t.components) os << ',' << format_real(c[i]);
    os << '\n';
  }
  return os.str();
}

int cmd_density(const std::filesystem::path& fit_file, const std::string& grid,
                const std::filesystem::path& out_file, std::ostream& out) {
  const SavedFit f = read_summary(fit_file);
  if (f.params.d() != 1) throw InputError("density grids need a univariate fit");
  const auto xs = parse_grid(grid, f.data_min[0], f.data_max[0]);
  write_atomic(out_file, density_csv(density_table(f, xs)));
  out << "wrote " << xs.size() << " grid points to " << out_file.string() << '\n';
  return kExitOk;
}

std::vector<ProfileCell> profile_table(const SavedFit& fit) {
  std::vector<ProfileCell> cells;
  const auto d = static_cast<std::size_t>(fit.params.d());
  for (std::size_t j = 0; j < d; ++j) {
    const Bound& b = fit.tparams.bounds()[j];
    for (Eigen::Index k = 0; k < fit.params.G(); ++k) {
      ProfileCell c;
      c.variable = j < fit.columns.size() ? fit.columns[j] : "V" + std::to_string(j + 1);
      c.cluster = static_cast<int>(k) + 1;
      c.transformed_mean = fit.params.means[static_cast<std::size_t>(k)][static_cast<Eigen::Index>(j)];
      c.data_mean = fit.data_means.size() > static_cast<Eigen::Index>(j) ? fit.data_means[static_cast<Eigen::Index>(j)]
                                                                          : std::nan("");
      try {
        c.mean = inverse(c.transformed_mean, b, fit.tparams.lambda(j), fit.tparams.box());
      } catch (const std::domain_error&) {
        c.mean = std::nan("");
        c.defined = false;
      }
      cells.push_back(c);
    }
  }
  return cells;
}

std::string profiles_csv(const std::vector<ProfileCell>& cells) {
  std::ostringstream os;
  os << "variable,cluster,transformed_mean,mean,defined,data_mean\n";
  for (const auto& c : cells) {
    os << c.variable << ',' << c.cluster << ',' << format_real(c.transformed_mean) << ',' << format_real(c.mean)
       << ',' << (c.defined ? 1 : 0) << ',' << format_real(c.data_mean) << '\n';
  }
  return os.str();
}

int cmd_profiles(const std::filesystem::path& fit_file, const std::filesystem::path& out_file, std::ostream& out) {
  const SavedFit f = read_summary(fit_file);
  const auto cells = profile_table(f);
  write_atomic(out_file, profiles_csv(cells));
  std::size_t undefined = 0;
  for (const auto& c : cells) undefined += c.defined ? 0 : 1;
  out << "wrote " << cells.size() << " profile cells to " << out_file.string();
  if (undefined) out << " (" << undefined << " undefined on the original scale)";
  out << '\n';
  return kExitOk;
}

std::string classification_csv(const Eigen::MatrixXd& z) {
  const MapClassification map = map_classify(z);
  const EntropyMeasures ent = entropy_measures(z);
  std::ostringstream os;
  os << "row,label,uncertainty,entropy";
  for (Eigen::Index k = 1; k <= z.cols(); ++k) os << ",z" << k;
  os << '\n';
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    os << i + 1 << ',' << map.labels[static_cast<std::size_t>(i)] << ',' << format_real(map.uncertainty[i]) << ','
       << format_real(ent.per_row[i]);
    for (Eigen::Index k = 0; k < z.cols(); ++k) os << ',' << format_real(z(i, k));
    os << '\n';
  }
  return os.str();
}

int cmd_classify(const std::filesystem::path& fit_file, const RunConfig& config,
                 const std::filesystem::path& out_file, std::ostream& out, std::ostream& err) {
  const SavedFit f = read_summary(fit_file);
  if (config.data.empty()) throw ConfigError("classify needs --data or a config with 'data'");
  CsvOptions opts;
  opts.has_header = config.header;
  opts.columns = config.columns.empty() ? f.columns : config.columns;
  opts.categorical = config.categorical;
  LoadedData loaded = [&] {
    try {
      return load_csv(config.data, opts);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
  }();
  if (static_cast<std::size_t>(loaded.data.d()) != f.tparams.d()) {
    throw ConfigError("data has " + std::to_string(loaded.data.d()) + " columns but the fit expects " +
                      std::to_string(f.tparams.d()));
  }
  enforce_bounds(loaded, f.tparams.bounds(), config.nudge_boundary ? BoundaryPolicy::nudge : BoundaryPolicy::reject);
  print_warnings(loaded, err);
  const EStepResult e = e_step(loaded.data, f.params, f.tparams);
  write_atomic(out_file, classification_csv(e.z.z));
  const MapClassification map = map_classify(e.z.z);
  std::vector<long> sizes(static_cast<std::size_t>(f.params.G()), 0);
  for (int label : map.labels) ++sizes[static_cast<std::size_t>(label - 1)];
  out << "classified " << loaded.data.n() << " rows; cluster sizes";
  for (long s : sizes) out << ' ' << s;
  out << "; loglik=" << std::setprecision(10) << e.loglik << '\n';
  return kExitOk;
}

}  // namespace gmmb::cli
