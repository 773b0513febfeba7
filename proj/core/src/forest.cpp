#include "spectrasep/forest.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <utility>

#include "spectrasep/error.hpp"
#include "spectrasep/parallel.hpp"
#include "spectrasep/rng.hpp"

namespace spectrasep {

double weighted_gini(std::span<const double> class_mass) {
  double total = 0.0;
  for (double m : class_mass) total += m;
  if (total <= 0.0) return 0.0;
  double sq = 0.0;
  for (double m : class_mass) sq += (m / total) * (m / total);
  return 1.0 - sq;
}

std::vector<double> balanced_class_weights(std::span<const int> labels, std::size_t n_classes) {
  std::vector<double> counts(n_classes, 0.0);
  for (int y : labels) counts.at(static_cast<std::size_t>(y)) += 1.0;
  std::size_t present = 0;
  for (double c : counts) present += c > 0.0 ? 1 : 0;
  std::vector<double> w(n_classes, 0.0);
  const double n = static_cast<double>(labels.size());
  for (std::size_t k = 0; k < n_classes; ++k) {
    // sklearn's "balanced": n / (n_classes * n_k) over the classes present.
    if (counts[k] > 0.0) w[k] = n / (static_cast<double>(present) * counts[k]);
  }
  return w;
}

std::uint64_t tree_seed(std::uint64_t forest_seed, std::size_t tree_index) {
  return derive_seed(forest_seed, 0x7472656500000000ull + tree_index);
}

namespace {

double sum_of_squares_over_total(std::span<const double> mass, double total) {
  if (total <= 0.0) return 0.0;
  double s = 0.0;
  for (double m : mass) s += m * m;
  return s / total;
}

struct SplitScratch {
  std::vector<std::pair<double, std::size_t>> sorted;
  std::vector<double> left;
  std::vector<double> right;
};

SplitCandidate search_feature(const FeatureTable& table, std::span<const int> labels, std::size_t n_classes,
                              std::span<const std::size_t> rows, std::span<const double> row_weights,
                              std::size_t feature, SplitScratch& s) {
  SplitCandidate best;
  best.feature = feature;
  s.sorted.clear();
  for (auto r : rows) s.sorted.emplace_back(table.at(r, feature), r);
  std::sort(s.sorted.begin(), s.sorted.end());
  if (s.sorted.size() < 2 || s.sorted.front().first == s.sorted.back().first) return best;

  s.left.assign(n_classes, 0.0);
  s.right.assign(n_classes, 0.0);
  for (const auto& [x, r] : s.sorted) s.right[static_cast<std::size_t>(labels[r])] += row_weights[r];
  double total = 0.0;
  for (double m : s.right) total += m;
  const double parent_term = sum_of_squares_over_total(s.right, total);
  best.parent_impurity = total > 0.0 ? 1.0 - parent_term / total : 0.0;

  double left_total = 0.0;
  double best_proxy = -1.0;
  std::size_t best_pos = 0;
  for (std::size_t i = 0; i + 1 < s.sorted.size(); ++i) {
    const auto r = s.sorted[i].second;
    const auto k = static_cast<std::size_t>(labels[r]);
    const double w = row_weights[r];
    s.left[k] += w;
    s.right[k] -= w;
    left_total += w;
    if (!(s.sorted[i].first < s.sorted[i + 1].first)) continue;
    const double right_total = total - left_total;
    const double proxy = sum_of_squares_over_total(s.left, left_total) +
                         sum_of_squares_over_total(s.right, right_total);
    if (proxy > best_proxy) {
      best_proxy = proxy;
      best_pos = i;
    }
  }
  if (best_proxy < 0.0) return best;

  // Recompute the winning partition exactly.
  std::fill(s.left.begin(), s.left.end(), 0.0);
  std::fill(s.right.begin(), s.right.end(), 0.0);
  for (std::size_t i = 0; i < s.sorted.size(); ++i) {
    const auto r = s.sorted[i].second;
    (i <= best_pos ? s.left : s.right)[static_cast<std::size_t>(labels[r])] += row_weights[r];
  }
  const double a = s.sorted[best_pos].first;
  const double b = s.sorted[best_pos + 1].first;
  double threshold = a + (b - a) / 2.0;
  if (!(threshold < b) || !std::isfinite(threshold)) threshold = a;

  best.found = true;
  best.threshold = threshold;
  best.left_mass = std::accumulate(s.left.begin(), s.left.end(), 0.0);
  best.right_mass = std::accumulate(s.right.begin(), s.right.end(), 0.0);
  best.left_impurity = weighted_gini(s.left);
  best.right_impurity = weighted_gini(s.right);
  best.improvement = total * best.parent_impurity - best.left_mass * best.left_impurity -
                     best.right_mass * best.right_impurity;
  return best;
}

bool better(const SplitCandidate& a, const SplitCandidate& b) {
  if (!b.found) return a.found;
  if (!a.found) return false;
  if (a.improvement != b.improvement) return a.improvement > b.improvement;
  if (a.feature != b.feature) return a.feature < b.feature;
  return a.threshold < b.threshold;
}

std::size_t features_per_split(const ForestParams& params, std::size_t p) {
  if (params.max_features > 0) return std::min(params.max_features, p);
  std::size_t k = 1;
  while (k * k < p) ++k;
  return k;
}

struct BuildItem {
  std::int32_t node;
  std::size_t begin;
  std::size_t end;
};

DecisionTree grow_tree(const FeatureTable& table, std::span<const int> labels, std::size_t n_classes,
                       std::span<const double> class_weights, const ForestParams& params,
                       std::uint64_t seed) {
  const std::size_t n = table.rows();
  const std::size_t p = table.cols();
  Rng rng(seed);

  std::vector<double> counts(n, 0.0);
  if (params.bootstrap) {
    for (std::size_t i = 0; i < n; ++i) counts[rng.index(n)] += 1.0;
  } else {
    std::fill(counts.begin(), counts.end(), 1.0);
  }
  std::vector<double> weights(n, 0.0);
  std::vector<std::size_t> idx;
  for (std::size_t r = 0; r < n; ++r) {
    if (counts[r] > 0.0) {
      weights[r] = counts[r] * class_weights[static_cast<std::size_t>(labels[r])];
      idx.push_back(r);
    }
  }

  DecisionTree tree;
  tree.n_classes = n_classes;
  const std::size_t mtry = features_per_split(params, p);
  std::vector<std::size_t> feature_order(p);
  SplitScratch scratch;
  std::vector<double> mass(n_classes);

  auto new_node = [&] {
    tree.nodes.emplace_back();
    tree.node_values.resize(tree.node_values.size() + n_classes, 0.0);
    return static_cast<std::int32_t>(tree.nodes.size() - 1);
  };

  std::vector<BuildItem> stack{{new_node(), 0, idx.size()}};
  while (!stack.empty()) {
    const BuildItem item = stack.back();
    stack.pop_back();
    const std::span<const std::size_t> rows(idx.data() + item.begin, item.end - item.begin);

    std::fill(mass.begin(), mass.end(), 0.0);
    for (auto r : rows) mass[static_cast<std::size_t>(labels[r])] += weights[r];
    const double total = std::accumulate(mass.begin(), mass.end(), 0.0);
    {
      TreeNode& node = tree.nodes[static_cast<std::size_t>(item.node)];
      node.weighted_samples = total;
      node.impurity = weighted_gini(mass);
      double* value = tree.node_values.data() + static_cast<std::size_t>(item.node) * n_classes;
      for (std::size_t k = 0; k < n_classes; ++k) value[k] = total > 0.0 ? mass[k] / total : 0.0;
    }
    const std::size_t nonzero_classes =
        static_cast<std::size_t>(std::count_if(mass.begin(), mass.end(), [](double m) { return m > 0.0; }));
    if (rows.size() < params.min_samples_split || nonzero_classes <= 1) continue;

    // Draw features without replacement until mtry non-constant ones have
    // been searched (or all features are exhausted).
    std::iota(feature_order.begin(), feature_order.end(), std::size_t{0});
    SplitCandidate best;
    std::size_t searched = 0;
    for (std::size_t k = 0; k < p && searched < mtry; ++k) {
      std::swap(feature_order[k], feature_order[k + rng.index(p - k)]);
      const std::size_t f = feature_order[k];
      SplitCandidate cand = search_feature(table, labels, n_classes, rows, weights, f, scratch);
      if (!cand.found) continue;
      ++searched;
      if (better(cand, best)) best = cand;
    }
    if (!best.found) continue;

    auto mid_it = std::partition(idx.begin() + static_cast<std::ptrdiff_t>(item.begin),
                                 idx.begin() + static_cast<std::ptrdiff_t>(item.end),
                                 [&](std::size_t r) { return table.at(r, best.feature) <= best.threshold; });
    const auto mid = static_cast<std::size_t>(mid_it - idx.begin());
    // Keep child row order deterministic for the sort-based search.
    std::sort(idx.begin() + static_cast<std::ptrdiff_t>(item.begin), mid_it);
    std::sort(mid_it, idx.begin() + static_cast<std::ptrdiff_t>(item.end));

    const std::int32_t left = new_node();
    const std::int32_t right = new_node();
    TreeNode& node = tree.nodes[static_cast<std::size_t>(item.node)];
    node.feature = static_cast<std::int32_t>(best.feature);
    node.threshold = best.threshold;
    node.left = left;
    node.right = right;
    stack.push_back({right, mid, item.end});
    stack.push_back({left, item.begin, mid});
  }
  return tree;
}

}  // namespace

SplitCandidate best_split_on_feature(const FeatureTable& table, std::span<const int> labels,
                                     std::size_t n_classes, std::span<const std::size_t> rows,
                                     std::span<const double> row_weights, std::size_t feature) {
  SplitScratch scratch;
  return search_feature(table, labels, n_classes, rows, row_weights, feature, scratch);
}

std::size_t DecisionTree::leaf_index(std::span<const double> x) const {
  std::size_t i = 0;
  while (!nodes[i].is_leaf()) {
    const TreeNode& node = nodes[i];
    i = static_cast<std::size_t>(x[static_cast<std::size_t>(node.feature)] <= node.threshold ? node.left : node.right);
  }
  return i;
}

std::size_t DecisionTree::depth() const {
  std::vector<std::pair<std::size_t, std::size_t>> stack{{0, 0}};
  std::size_t max_depth = 0;
  while (!stack.empty()) {
    auto [i, d] = stack.back();
    stack.pop_back();
    max_depth = std::max(max_depth, d);
    if (!nodes[i].is_leaf()) {
      stack.emplace_back(static_cast<std::size_t>(nodes[i].left), d + 1);
      stack.emplace_back(static_cast<std::size_t>(nodes[i].right), d + 1);
    }
  }
  return max_depth;
}

RandomForest RandomForest::fit(const FeatureTable& features, std::span<const int> labels, std::uint64_t seed,
                               const ForestParams& params) {
  if (features.rows() == 0 || features.cols() == 0) throw ComputationError("random forest: empty feature table");
  if (labels.size() != features.rows()) {
    throw ComputationError("random forest: " + std::to_string(labels.size()) + " labels for " +
                           std::to_string(features.rows()) + " rows");
  }
  if (params.n_trees < 1) throw ComputationError("random forest: n_trees must be positive");
  int max_label = -1;
  for (int y : labels) {
    if (y < 0) throw ComputationError("random forest: labels must be nonnegative class indices");
    max_label = std::max(max_label, y);
  }
  const auto n_classes = static_cast<std::size_t>(max_label + 1);
  std::vector<bool> present(n_classes, false);
  for (int y : labels) present[static_cast<std::size_t>(y)] = true;
  if (std::count(present.begin(), present.end(), true) < 2) {
    throw ComputationError("random forest: training labels contain a single class");
  }
  for (double v : features.values()) {
    if (!std::isfinite(v)) throw ComputationError("random forest: non-finite feature value");
  }

  RandomForest forest;
  forest.n_features_ = features.cols();
  forest.n_classes_ = n_classes;
  forest.seed_ = seed;
  forest.class_weights_ = params.balanced_class_weight ? balanced_class_weights(labels, n_classes)
                                                        : std::vector<double>(n_classes, 1.0);
  forest.trees_.resize(static_cast<std::size_t>(params.n_trees));
  parallel_for(forest.trees_.size(), params.jobs, [&](std::size_t t) {
    forest.trees_[t] = grow_tree(features, labels, n_classes, forest.class_weights_, params, tree_seed(seed, t));
  });
  return forest;
}

std::vector<double> RandomForest::predict_proba(std::span<const double> x) const {
  if (x.size() != n_features_) {
    throw ComputationError("random forest: expected " + std::to_string(n_features_) + " features, got " +
                           std::to_string(x.size()));
  }
  std::vector<double> proba(n_classes_, 0.0);
  for (const auto& tree : trees_) {
    const auto leaf = tree.leaf_probabilities(x);
    for (std::size_t k = 0; k < n_classes_; ++k) proba[k] += leaf[k];
  }
  for (double& v : proba) v /= static_cast<double>(trees_.size());
  return proba;
}

std::vector<double> RandomForest::predict_proba(const FeatureTable& table) const {
  if (table.cols() != n_features_) {
    throw ComputationError("random forest: expected " + std::to_string(n_features_) + " features, got " +
                           std::to_string(table.cols()));
  }
  std::vector<double> out;
  out.reserve(table.rows() * n_classes_);
  for (std::size_t r = 0; r < table.rows(); ++r) {
    const auto p = predict_proba(table.row(r));
    out.insert(out.end(), p.begin(), p.end());
  }
  return out;
}

std::vector<int> RandomForest::predict(const FeatureTable& table) const {
  const auto proba = predict_proba(table);
  std::vector<int> out(table.rows());
  for (std::size_t r = 0; r < table.rows(); ++r) {
    const auto* row = proba.data() + r * n_classes_;
    out[r] = static_cast<int>(std::max_element(row, row + n_classes_) - row);
  }
  return out;
}

std::vector<double> RandomForest::feature_importance() const {
  std::vector<double> total(n_features_, 0.0);
  std::vector<double> tree_imp(n_features_);
  for (const auto& tree : trees_) {
    std::fill(tree_imp.begin(), tree_imp.end(), 0.0);
    for (const auto& node : tree.nodes) {
      if (node.is_leaf()) continue;
      const auto& l = tree.nodes[static_cast<std::size_t>(node.left)];
      const auto& r = tree.nodes[static_cast<std::size_t>(node.right)];
      const double decrease = node.weighted_samples * node.impurity - l.weighted_samples * l.impurity -
                              r.weighted_samples * r.impurity;
      tree_imp[static_cast<std::size_t>(node.feature)] += std::max(decrease, 0.0);
    }
    const double s = std::accumulate(tree_imp.begin(), tree_imp.end(), 0.0);
    if (s > 0.0) {
      for (std::size_t f = 0; f < n_features_; ++f) total[f] += tree_imp[f] / s;
    }
  }
  const double s = std::accumulate(total.begin(), total.end(), 0.0);
  if (s > 0.0) {
    for (double& v : total) v /= s;
  }
  return total;
}

nlohmann::json RandomForest::to_json() const {
  nlohmann::json trees = nlohmann::json::array();
  for (const auto& tree : trees_) {
    nlohmann::json nodes = nlohmann::json::array();
    for (std::size_t i = 0; i < tree.nodes.size(); ++i) {
      const auto& n = tree.nodes[i];
      std::vector<double> value(tree.node_values.begin() + static_cast<std::ptrdiff_t>(i * n_classes_),
                                tree.node_values.begin() + static_cast<std::ptrdiff_t>((i + 1) * n_classes_));
      nodes.push_back({{"feature", n.feature},
                       {"threshold", n.threshold},
                       {"left", n.left},
                       {"right", n.right},
                       {"impurity", n.impurity},
                       {"weighted_samples", n.weighted_samples},
                       {"value", value}});
    }
    trees.push_back({{"nodes", std::move(nodes)}});
  }
  return {{"format", "spectrasep.random_forest"},
          {"version", kFormatVersion},
          {"n_features", n_features_},
          {"n_classes", n_classes_},
          {"seed", seed_},
          {"class_weights", class_weights_},
          {"trees", std::move(trees)}};
}

RandomForest RandomForest::from_json(const nlohmann::json& j) {
  RandomForest forest;
  try {
    if (j.at("format") != "spectrasep.random_forest") throw ValidationError("model: unknown format");
    if (j.at("version").get<int>() != kFormatVersion) throw ValidationError("model: unsupported version");
    forest.n_features_ = j.at("n_features").get<std::size_t>();
    forest.n_classes_ = j.at("n_classes").get<std::size_t>();
    forest.seed_ = j.at("seed").get<std::uint64_t>();
    forest.class_weights_ = j.at("class_weights").get<std::vector<double>>();
    for (const auto& t : j.at("trees")) {
      DecisionTree tree;
      tree.n_classes = forest.n_classes_;
      for (const auto& n : t.at("nodes")) {
        TreeNode node;
        node.feature = n.at("feature").get<std::int32_t>();
        node.threshold = n.at("threshold").get<double>();
        node.left = n.at("left").get<std::int32_t>();
        node.right = n.at("right").get<std::int32_t>();
        node.impurity = n.at("impurity").get<double>();
        node.weighted_samples = n.at("weighted_samples").get<double>();
        const auto value = n.at("value").get<std::vector<double>>();
        if (value.size() != forest.n_classes_) throw ValidationError("model: node value arity mismatch");
        tree.nodes.push_back(node);
        tree.node_values.insert(tree.node_values.end(), value.begin(), value.end());
      }
      const auto count = static_cast<std::int32_t>(tree.nodes.size());
      for (const auto& node : tree.nodes) {
        if (node.is_leaf()) continue;
        if (node.feature < 0 || static_cast<std::size_t>(node.feature) >= forest.n_features_ ||
            node.left <= 0 || node.left >= count || node.right <= 0 || node.right >= count) {
          throw ValidationError("model: invalid node record");
        }
      }
      forest.trees_.push_back(std::move(tree));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("model: " + std::string(e.what()));
  }
  return forest;
}

}  // namespace spectrasep
