#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "spectrasep/feature_table.hpp"
#include "spectrasep/forest.hpp"

namespace spectrasep {

struct RfeRanking {
  // Feature indices in elimination order: first eliminated ... last survivor.
  std::vector<std::size_t> elimination_order;
  // Averaged importances at the step each feature was eliminated.
  std::vector<double> importance_at_elimination;

  // Most important first (reverse elimination order).
  std::vector<std::size_t> most_important_first() const;
  std::vector<std::size_t> top(std::size_t k) const;
};

// Cross-validated recursive feature elimination. At every step one forest
// is fit per inner fold on the surviving features, importances are averaged
// across folds and the least important feature (lowest index on ties) is
// removed. `inner_training_rows[f]` are the rows used to fit fold f; the
// forest seed for fold f is derive_seed(seed, f) at every step.
RfeRanking rfe_rank(const FeatureTable& features, std::span<const int> labels,
                    const std::vector<std::vector<std::size_t>>& inner_training_rows,
                    std::uint64_t seed, const ForestParams& params = {});

std::uint64_t rfe_fold_seed(std::uint64_t seed, std::size_t fold);

}  // namespace spectrasep
