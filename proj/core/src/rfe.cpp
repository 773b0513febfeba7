#include "spectrasep/rfe.hpp"

#include <numeric>

#include "spectrasep/error.hpp"
#include "spectrasep/parallel.hpp"
#include "spectrasep/rng.hpp"

namespace spectrasep {

std::vector<std::size_t> RfeRanking::most_important_first() const {
  return {elimination_order.rbegin(), elimination_order.rend()};
}

std::vector<std::size_t> RfeRanking::top(std::size_t k) const {
  auto order = most_important_first();
  if (k < order.size()) order.resize(k);
  return order;
}

std::uint64_t rfe_fold_seed(std::uint64_t seed, std::size_t fold) { return derive_seed(seed, fold); }

RfeRanking rfe_rank(const FeatureTable& features, std::span<const int> labels,
                    const std::vector<std::vector<std::size_t>>& inner_training_rows, std::uint64_t seed,
                    const ForestParams& params) {
  if (features.cols() == 0) throw ComputationError("rfe: no features");
  if (inner_training_rows.empty()) throw ComputationError("rfe: no inner folds");
  if (labels.size() != features.rows()) throw ComputationError("rfe: label count does not match rows");

  const std::size_t folds = inner_training_rows.size();
  std::vector<FeatureTable> fold_tables;
  std::vector<std::vector<int>> fold_labels(folds);
  for (std::size_t f = 0; f < folds; ++f) {
    fold_tables.push_back(features.select_rows(inner_training_rows[f]));
    for (auto r : inner_training_rows[f]) fold_labels[f].push_back(labels[r]);
  }

  ForestParams inner = params;
  inner.jobs = 1;
  std::vector<std::size_t> surviving(features.cols());
  std::iota(surviving.begin(), surviving.end(), std::size_t{0});
  RfeRanking ranking;
  std::vector<std::vector<double>> fold_importance(folds);

  while (surviving.size() > 1) {
    parallel_for(folds, params.jobs, [&](std::size_t f) {
      const FeatureTable table = fold_tables[f].select_columns(surviving);
      fold_importance[f] = RandomForest::fit(table, fold_labels[f], rfe_fold_seed(seed, f), inner).feature_importance();
    });
    std::vector<double> avg(surviving.size(), 0.0);
    for (std::size_t f = 0; f < folds; ++f) {
      for (std::size_t i = 0; i < surviving.size(); ++i) avg[i] += fold_importance[f][i];
    }
    for (double& v : avg) v /= static_cast<double>(folds);
    std::size_t worst = 0;
    for (std::size_t i = 1; i < avg.size(); ++i) {
      if (avg[i] < avg[worst]) worst = i;
    }
    ranking.elimination_order.push_back(surviving[worst]);
    ranking.importance_at_elimination.push_back(avg[worst]);
    surviving.erase(surviving.begin() + static_cast<std::ptrdiff_t>(worst));
  }
  ranking.elimination_order.push_back(surviving.front());
  ranking.importance_at_elimination.push_back(1.0);
  return ranking;
}

}  // namespace spectrasep
