#include "gmmb/sweep.hpp"

#include <atomic>
#include <exception>
#include <mutex>
#include <thread>

namespace gmmb {

SweepResult sweep(const Dataset& data, const BoundsSpec& bounds, const std::vector<int>& G_values,
                  const std::vector<Model>& models, const FitConfig& base, unsigned threads) {
  if (G_values.empty() || models.empty()) throw std::invalid_argument("empty sweep grid");
  ValidationReport report = validate(data, bounds);
  if (!report.ok()) throw ValidationError(report.describe(data), report);

  SweepResult out;
  for (int g : G_values) {
    for (Model m : models) out.entries.push_back({g, m, {}});
  }

  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (std::size_t i = next++; i < out.entries.size(); i = next++) {
      SweepEntry& e = out.entries[i];
      FitConfig cfg = base;
      cfg.G = e.G;
      cfg.model = e.model;
      try {
        e.result = fit(data, bounds, cfg);
      } catch (const std::invalid_argument& ex) {
        e.result.G = e.G;
        e.result.model = e.model;
        e.result.status = FitStatus::degenerate;
        e.result.diagnostic = ex.what();
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    }
  };

  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min<unsigned>(threads, static_cast<unsigned>(out.entries.size()));
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
  }
  if (error) std::rethrow_exception(error);

  for (std::size_t i = 0; i < out.entries.size(); ++i) {
    const FitResult& r = out.entries[i].result;
    if (!r.ok()) continue;
    if (!out.best_by_bic || r.bic > out.entries[*out.best_by_bic].result.bic) out.best_by_bic = i;
    if (!out.best_by_icl || r.icl > out.entries[*out.best_by_icl].result.icl) out.best_by_icl = i;
  }
  if (!out.best_by_bic) throw AllFitsFailed("every fit in the sweep failed");
  return out;
}

}  // namespace gmmb
