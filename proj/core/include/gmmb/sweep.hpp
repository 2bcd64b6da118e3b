#pragma once

#include "gmmb/ecm.hpp"

#include <optional>
#include <stdexcept>
#include <vector>

namespace gmmb {

struct SweepEntry {
  int G = 0;
  Model model = Model::V;
  FitResult result;  ///< status degenerate when the fit failed
};

struct SweepResult {
  std::vector<SweepEntry> entries;  ///< ordered by G, then by model as requested
  std::optional<std::size_t> best_by_bic;
  std::optional<std::size_t> best_by_icl;

  const SweepEntry& best_bic() const { return entries.at(best_by_bic.value()); }
  const SweepEntry& best_icl() const { return entries.at(best_by_icl.value()); }
};

class AllFitsFailed : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Fits every (G, model) pair independently. `base` supplies everything
/// except G and model. Up to `threads` fits run concurrently (0 picks the
/// hardware concurrency); results do not depend on the thread count.
/// Throws AllFitsFailed when no fit succeeds.
SweepResult sweep(const Dataset& data, const BoundsSpec& bounds, const std::vector<int>& G_values,
                  const std::vector<Model>& models, const FitConfig& base, unsigned threads = 1);

}  // namespace gmmb
