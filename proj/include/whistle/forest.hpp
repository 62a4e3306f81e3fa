#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "whistle/rng.hpp"

namespace whistle {

enum class Criterion { gini, entropy };  // entropy = entropy gain ratio

const char* to_string(Criterion c);
Criterion criterion_from_string(const std::string& s);

/// Per-class sample counts of a set D.
struct ClassCounts {
    std::vector<std::int64_t> counts;

    ClassCounts() = default;
    ClassCounts(std::initializer_list<std::int64_t> c) : counts(c) {}
    explicit ClassCounts(std::vector<std::int64_t> c) : counts(std::move(c)) {}

    std::int64_t total() const;
};

/// -sum_k p_k log2 p_k; 0 for an empty set.
double entropy(const ClassCounts& c);
/// sum_k p_k (1 - p_k); 0 for an empty set.
double gini(const ClassCounts& c);
/// Information gain over split information. Empty when fewer than two
/// children are non-empty (the split is degenerate).
std::optional<double> gain_ratio(const ClassCounts& parent, const std::vector<ClassCounts>& children);
double gini_gain(const ClassCounts& parent, const ClassCounts& d1, const ClassCounts& d2);

struct TreeNode {
    int feature = -1;  // -1 for leaves
    double threshold = 0.0;  // go left when x[feature] <= threshold
    int left = -1;
    int right = -1;
    std::array<std::int64_t, 2> counts{0, 0};
    int prediction = 0;

    bool is_leaf() const { return feature < 0; }
};

struct DecisionTree {
    std::vector<TreeNode> nodes;  // nodes[0] is the root
    Criterion criterion = Criterion::gini;

    int predict(const Eigen::Ref<const Eigen::VectorXd>& row) const;
    int depth() const;
};

struct TreeParams {
    Criterion criterion = Criterion::gini;
    int features_per_split = 0;  // 0 = all features
    int min_samples_leaf = 1;
    int max_depth = -1;            // -1 = unlimited
};

/// Greedy binary induction over the rows listed in `sample` (duplicates allowed).
/// Labels are 0/1. Zero-gain splits are taken while a node is impure so that
/// interaction patterns such as XOR remain learnable.
DecisionTree fit_tree(const Eigen::MatrixXd& x, const std::vector<int>& y, const std::vector<int>& sample,
                      const TreeParams& params, Rng& rng);
DecisionTree fit_tree(const Eigen::MatrixXd& x, const std::vector<int>& y, const TreeParams& params, Rng& rng);

struct ForestParams {
    int n_estimators = 100;
    Criterion criterion = Criterion::gini;
    std::uint64_t seed = 0;
    int features_per_split = 0;  // 0 = floor(sqrt(#features))
    int min_samples_leaf = 1;
    int max_depth = -1;
    int threads = 0;             // 0 = hardware concurrency
};

struct Prediction {
    int label = 0;
    double vote_fraction = 0.0;  // fraction of trees voting 1
};

struct RandomForestModel {
    std::vector<DecisionTree> trees;
    int n_estimators = 0;
    Criterion criterion = Criterion::gini;
    int features_per_split = 0;
    std::uint64_t seed = 0;
    std::vector<std::string> feature_names;       // model input columns, in order
    std::vector<std::string> excluded_features;

    /// Majority vote; ties go to class 0.
    Prediction predict(const Eigen::Ref<const Eigen::VectorXd>& row) const;
    std::vector<Prediction> predict_all(const Eigen::MatrixXd& x) const;
};

/// Bootstrap row indices of tree `tree_index` (same stream fit_forest uses).
std::vector<int> bootstrap_sample(std::uint64_t seed, int tree_index, int n_rows);

RandomForestModel fit_forest(const Eigen::MatrixXd& x, const std::vector<int>& y, const ForestParams& params);

/// Out-of-bag accuracy; rows that are in-bag for every tree are skipped.
std::optional<double> oob_accuracy(const RandomForestModel& model, const Eigen::MatrixXd& x, const std::vector<int>& y);

/// Exact fraction num / den.
struct Ratio {
    std::int64_t num = 0;
    std::int64_t den = 0;

    double value() const { return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den); }
    /// Rounded half-up to `digits` decimals using integer arithmetic.
    double rounded(int digits) const;
};

struct EvaluationReport {
    /// confusion[true][predicted]
    std::array<std::array<std::int64_t, 2>, 2> confusion{{{0, 0}, {0, 0}}};

    std::int64_t total() const;
    Ratio accuracy() const;
    Ratio false_positive_rate() const;
    Ratio false_negative_rate() const;
};

EvaluationReport report_from_confusion(std::array<std::array<std::int64_t, 2>, 2> confusion);
EvaluationReport evaluate(const std::vector<int>& truth, const std::vector<int>& predicted);
EvaluationReport evaluate(const RandomForestModel& model, const Eigen::MatrixXd& x, const std::vector<int>& y);

struct GridSpec {
    std::vector<int> n_estimators{10, 50, 100, 200};
    std::vector<Criterion> criteria{Criterion::gini, Criterion::entropy};
};

struct CvCell {
    int n_estimators = 0;
    Criterion criterion = Criterion::gini;
    std::vector<double> fold_accuracy;
    double mean_accuracy = 0.0;
};

struct GridSearchResult {
    int best_n_estimators = 0;
    Criterion best_criterion = Criterion::gini;
    double best_score = 0.0;
    std::vector<CvCell> table;  // grid order
};

/// Stratified fold assignment (fold index per row).
std::vector<int> stratified_folds(const std::vector<int>& y, int k, Rng& rng);

/// Stratified train/test split: returns (train rows, test rows).
std::pair<std::vector<int>, std::vector<int>> stratified_split(const std::vector<int>& y, double train_ratio,
                                                              std::uint64_t seed);

/// k-fold CV over the grid; best = highest mean accuracy, ties broken by fewer
/// estimators, then gini before entropy, then grid order.
GridSearchResult grid_search(const Eigen::MatrixXd& x, const std::vector<int>& y, const GridSpec& grid,
                             int k_folds, std::uint64_t seed, const ForestParams& base = {});

}  // namespace whistle
