#include "results.hpp"

#include <gmmb/diagnostics.hpp>

#include <charconv>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>
#include <system_error>

namespace gmmb::cli {

using nlohmann::json;

void write_atomic(const std::filesystem::path& path, const std::string& contents) {
  namespace fs = std::filesystem;
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::random_device rd;
  fs::path tmp = path;
  tmp += ".tmp" + std::to_string(rd());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write '" + tmp.string() + "'");
    out << contents;
    out.flush();
    if (!out) throw std::runtime_error("write failed for '" + tmp.string() + "'");
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp);
    throw std::runtime_error("cannot replace '" + path.string() + "': " + ec.message());
  }
}

std::string format_real(double v) {
  if (!std::isfinite(v)) return "NA";
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
  return std::string(buf, ptr);
}

namespace {

json real(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json vec(const Eigen::VectorXd& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(real(v[i]));
  return a;
}

json mat(const Eigen::MatrixXd& m) {
  json a = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) a.push_back(vec(m.row(i).transpose()));
  return a;
}

json bound_json(const Bound& b) {
  switch (b.kind) {
    case BoundKind::unbounded:
      return {{"kind", "none"}};
    case BoundKind::lower:
      return {{"kind", "lower"}, {"lower", b.lower}};
    case BoundKind::doubly:
      return {{"kind", "between"}, {"lower", b.lower}, {"upper", b.upper}};
  }
  return {};
}

Bound bound_from(const json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "none") return Bound::none();
  if (kind == "lower") return Bound::lower_at(j.at("lower").get<double>());
  if (kind == "between") return Bound::between(j.at("lower").get<double>(), j.at("upper").get<double>());
  throw std::runtime_error("unknown bound kind '" + kind + "'");
}

Eigen::VectorXd read_vec(const json& j) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    v[static_cast<Eigen::Index>(i)] = j[i].is_null() ? std::nan("") : j[i].get<double>();
  }
  return v;
}

Eigen::MatrixXd read_mat(const json& j) {
  if (j.empty()) return {};
  Eigen::MatrixXd m(static_cast<Eigen::Index>(j.size()), static_cast<Eigen::Index>(j[0].size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (j[i].size() != j[0].size()) throw std::runtime_error("ragged matrix in summary");
    m.row(static_cast<Eigen::Index>(i)) = read_vec(j[i]).transpose();
  }
  return m;
}

}  // namespace

RunInfo describe_run(const Dataset& data, const BoundsSpec& bounds, const FitConfig& config) {
  RunInfo info;
  info.columns = data.column_names();
  info.bounds = bounds;
  info.data_means = data.values().colwise().mean().transpose();
  info.data_min = data.values().colwise().minCoeff().transpose();
  info.data_max = data.values().colwise().maxCoeff().transpose();
  info.seed = config.seed;
  info.tol = config.tol;
  return info;
}

json summary_json(const FitResult& fit, const RunInfo& info) {
  json doc;
  doc["format"] = kSummaryFormat;
  doc["model"] = std::string(name(fit.model));
  doc["G"] = fit.G;
  doc["n"] = fit.n;
  doc["d"] = info.columns.size();
  doc["columns"] = info.columns;
  json bounds = json::array();
  for (const auto& b : info.bounds.bounds()) bounds.push_back(bound_json(b));
  doc["bounds"] = bounds;
  doc["status"] = std::string(to_string(fit.status));
  doc["converged"] = fit.converged();
  doc["diagnostic"] = fit.diagnostic;
  doc["n_iter"] = fit.n_iter;
  doc["lambda_warning"] = fit.lambda_warning;
  doc["seed"] = info.seed;
  doc["tol"] = info.tol;
  doc["data_means"] = vec(info.data_means);
  doc["data_min"] = vec(info.data_min);
  doc["data_max"] = vec(info.data_max);
  json trace = json::array();
  for (double v : fit.loglik_trace) trace.push_back(real(v));
  doc["loglik_trace"] = trace;
  if (!fit.ok()) return doc;

  const TransformParams& tp = fit.tparams;
  doc["lambda"] = vec(tp.lambda());
  json fixed = json::array();
  for (std::size_t j = 0; j < tp.d(); ++j) fixed.push_back(tp.fixed(j));
  doc["lambda_fixed"] = fixed;
  doc["lambda_box"] = {tp.box().min, tp.box().max};
  doc["weights"] = vec(fit.params.weights);
  json means = json::array();
  for (const auto& m : fit.params.means) means.push_back(vec(m));
  doc["means"] = means;
  json covs = json::array();
  for (const auto& c : fit.params.covariances) {
    covs.push_back({{"volume", real(c.volume)},
                    {"shape", vec(c.shape)},
                    {"orientation", mat(c.orientation)},
                    {"sigma", mat(c.matrix())}});
  }
  doc["covariances"] = covs;
  doc["loglik"] = real(fit.loglik);
  doc["df"] = fit.df;
  doc["bic"] = real(fit.bic);
  doc["icl"] = real(fit.icl);
  doc["nec"] = real(fit.nec);
  doc["entropy"] = real(fit.entropy_total);
  std::vector<long> sizes(static_cast<std::size_t>(fit.G), 0);
  for (int label : fit.classification) ++sizes[static_cast<std::size_t>(label - 1)];
  doc["cluster_sizes"] = sizes;
  if (info.reference && info.ari) {
    doc["ari"] = {{"reference", *info.reference}, {"value", real(*info.ari)}};
  }
  return doc;
}

void write_summary(const std::filesystem::path& path, const FitResult& fit, const RunInfo& info) {
  write_atomic(path, summary_json(fit, info).dump(2) + "\n");
}

std::string observations_csv(const FitResult& fit) {
  std::ostringstream os;
  os << "row,label,uncertainty,entropy";
  for (int k = 1; k <= fit.G; ++k) os << ",z" << k;
  os << '\n';
  for (Eigen::Index i = 0; i < fit.z.n(); ++i) {
    os << i + 1 << ',' << fit.classification[static_cast<std::size_t>(i)] << ','
       << format_real(fit.uncertainty[i]) << ',' << format_real(fit.entropy[i]);
    for (Eigen::Index k = 0; k < fit.z.G(); ++k) os << ',' << format_real(fit.z.z(i, k));
    os << '\n';
  }
  return os.str();
}

std::string sweep_csv(const SweepResult& result) {
  std::ostringstream os;
  os << "G,model,status,loglik,df,bic,icl,nec,best_bic,best_icl\n";
  for (std::size_t e = 0; e < result.entries.size(); ++e) {
    const SweepEntry& entry = result.entries[e];
    const FitResult& r = entry.result;
    os << entry.G << ',' << name(entry.model) << ',' << to_string(r.status) << ',';
    if (r.ok()) {
      os << format_real(r.loglik) << ',' << r.df << ',' << format_real(r.bic) << ',' << format_real(r.icl)
         << ',' << format_real(r.nec);
    } else {
      os << "NA,NA,NA,NA,NA";
    }
    os << ',' << (result.best_by_bic == e ? 1 : 0) << ',' << (result.best_by_icl == e ? 1 : 0) << '\n';
  }
  return os.str();
}

SavedFit saved_fit_from_json(const json& doc) {
  try {
    if (doc.value("format", "") != kSummaryFormat) throw std::runtime_error("not a gmmb fit summary");
    if (!doc.contains("weights")) {
      throw std::runtime_error("summary holds no parameters (status " + doc.value("status", "?") + ")");
    }
    SavedFit out;
    out.raw = doc;
    out.columns = doc.at("columns").get<std::vector<std::string>>();
    std::vector<Bound> bounds;
    for (const auto& b : doc.at("bounds")) bounds.push_back(bound_from(b));
    const auto box = doc.at("lambda_box").get<std::vector<double>>();
    if (box.size() != 2) throw std::runtime_error("lambda_box must have two entries");
    out.tparams = TransformParams(BoundsSpec(bounds), LambdaBox{box[0], box[1]});
    const Eigen::VectorXd lambda = read_vec(doc.at("lambda"));
    const auto fixed = doc.at("lambda_fixed").get<std::vector<bool>>();
    if (static_cast<std::size_t>(lambda.size()) != bounds.size() || fixed.size() != bounds.size()) {
      throw std::runtime_error("lambda does not match the number of variables");
    }
    for (std::size_t j = 0; j < bounds.size(); ++j) {
      const double l = lambda[static_cast<Eigen::Index>(j)];
      if (bounds[j].kind == BoundKind::unbounded) continue;
      if (fixed[j]) {
        out.tparams.fix(j, l);
      } else {
        out.tparams.set_lambda(j, l);
      }
    }
    MixtureParams& p = out.params;
    p.model = parse_model(doc.at("model").get<std::string>());
    p.weights = read_vec(doc.at("weights"));
    for (const auto& m : doc.at("means")) p.means.push_back(read_vec(m));
    for (const auto& c : doc.at("covariances")) {
      CovarianceFactors f;
      f.volume = c.at("volume").get<double>();
      f.shape = read_vec(c.at("shape"));
      f.orientation = read_mat(c.at("orientation"));
      p.covariances.push_back(std::move(f));
    }
    p.validate();
    if (static_cast<std::size_t>(p.d()) != bounds.size()) {
      throw std::runtime_error("means do not match the number of variables");
    }
    out.data_means = read_vec(doc.at("data_means"));
    out.data_min = read_vec(doc.at("data_min"));
    out.data_max = read_vec(doc.at("data_max"));
    return out;
  } catch (const json::exception& e) {
    throw std::runtime_error(std::string("malformed fit summary: ") + e.what());
  } catch (const std::logic_error& e) {
    throw std::runtime_error(std::string("malformed fit summary: ") + e.what());
  }
}

SavedFit read_summary(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open fit summary '" + path.string() + "'");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw std::runtime_error("malformed fit summary '" + path.string() + "': " + e.what());
  }
  return saved_fit_from_json(doc);
}

}  // namespace gmmb::cli
