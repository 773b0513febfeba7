#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "spectrasep/feature_table.hpp"

namespace spectrasep {

struct ForestParams {
  int n_trees = 100;
  bool balanced_class_weight = true;
  // 0 selects ceil(sqrt(n_features)).
  std::size_t max_features = 0;
  std::size_t min_samples_split = 2;
  bool bootstrap = true;
  int jobs = 1;
};

struct TreeNode {
  static constexpr std::int32_t kLeaf = -1;
  std::int32_t feature = kLeaf;
  double threshold = 0.0;  // go left when x <= threshold
  std::int32_t left = -1;
  std::int32_t right = -1;
  double impurity = 0.0;          // weighted Gini
  double weighted_samples = 0.0;  // class-weighted bootstrap mass

  bool is_leaf() const { return feature == kLeaf; }
  bool operator==(const TreeNode&) const = default;
};

struct DecisionTree {
  std::vector<TreeNode> nodes;
  // n_nodes x n_classes class probabilities (normalized weighted mass).
  std::vector<double> node_values;
  std::size_t n_classes = 2;

  std::size_t leaf_index(std::span<const double> x) const;
  std::span<const double> leaf_probabilities(std::span<const double> x) const {
    return {node_values.data() + leaf_index(x) * n_classes, n_classes};
  }
  std::size_t depth() const;
  bool operator==(const DecisionTree&) const = default;
};

// Gini impurity 1 - sum_k p_k^2 of a class-mass vector.
double weighted_gini(std::span<const double> class_mass);

struct SplitCandidate {
  bool found = false;
  std::size_t feature = 0;
  double threshold = 0.0;
  double parent_impurity = 0.0;
  double left_impurity = 0.0;
  double right_impurity = 0.0;
  double left_mass = 0.0;
  double right_mass = 0.0;
  // Weighted impurity decrease: M*g - M_l*g_l - M_r*g_r.
  double improvement = 0.0;
};

// Best threshold on one feature over `rows` with per-row weights. Exposed for
// tests of the split criterion; the forest uses the same routine.
SplitCandidate best_split_on_feature(const FeatureTable& table, std::span<const int> labels,
                                     std::size_t n_classes, std::span<const std::size_t> rows,
                                     std::span<const double> row_weights, std::size_t feature);

// w_k = n / (K * n_k); classes absent from `labels` get weight 0.
std::vector<double> balanced_class_weights(std::span<const int> labels, std::size_t n_classes);

class RandomForest {
 public:
  static constexpr int kFormatVersion = 1;

  // Throws ComputationError on an empty table, a single class, mismatched
  // sizes or non-finite features.
  static RandomForest fit(const FeatureTable& features, std::span<const int> labels,
                          std::uint64_t seed, const ForestParams& params = {});

  std::size_t n_features() const { return n_features_; }
  std::size_t n_classes() const { return n_classes_; }
  std::uint64_t seed() const { return seed_; }
  const std::vector<double>& class_weights() const { return class_weights_; }
  const std::vector<DecisionTree>& trees() const { return trees_; }

  // Mean of per-tree leaf probabilities. Throws on dimension mismatch.
  std::vector<double> predict_proba(std::span<const double> x) const;
  // rows x n_classes.
  std::vector<double> predict_proba(const FeatureTable& table) const;
  std::vector<int> predict(const FeatureTable& table) const;

  // Mean decrease in impurity, normalized per tree, averaged, normalized.
  std::vector<double> feature_importance() const;

  nlohmann::json to_json() const;
  static RandomForest from_json(const nlohmann::json& j);

  bool operator==(const RandomForest&) const = default;

 private:
  std::size_t n_features_ = 0;
  std::size_t n_classes_ = 0;
  std::uint64_t seed_ = 0;
  std::vector<double> class_weights_;
  std::vector<DecisionTree> trees_;
};

// Per-tree sub-seed.
std::uint64_t tree_seed(std::uint64_t forest_seed, std::size_t tree_index);

}  // namespace spectrasep
