#include "whistle/forest.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>
#include <thread>

#include "whistle/error.hpp"

namespace whistle {

const char* to_string(Criterion c) { return c == Criterion::gini ? "gini" : "entropy"; }

Criterion criterion_from_string(const std::string& s) {
    if (s == "gini") return Criterion::gini;
    if (s == "entropy" || s == "gain_ratio" || s == "entropy_gain_ratio") return Criterion::entropy;
    throw ConfigError("unknown split criterion '" + s + "' (expected gini or entropy)");
}

std::int64_t ClassCounts::total() const { return std::accumulate(counts.begin(), counts.end(), std::int64_t{0}); }

double entropy(const ClassCounts& c) {
    const auto n = static_cast<double>(c.total());
    if (n <= 0.0) return 0.0;
    double h = 0.0;
    for (auto k : c.counts) {
        if (k <= 0) continue;
        const double p = static_cast<double>(k) / n;
        h -= p * std::log2(p);
    }
    return h;
}

double gini(const ClassCounts& c) {
    const auto n = static_cast<double>(c.total());
    if (n <= 0.0) return 0.0;
    double g = 0.0;
    for (auto k : c.counts) {
        const double p = static_cast<double>(k) / n;
        g += p * (1.0 - p);
    }
    return g;
}

std::optional<double> gain_ratio(const ClassCounts& parent, const std::vector<ClassCounts>& children) {
    const auto n = static_cast<double>(parent.total());
    int non_empty = 0;
    double remainder = 0.0;
    double split_info = 0.0;
    for (const auto& ch : children) {
        const auto m = static_cast<double>(ch.total());
        if (m <= 0.0) continue;
        ++non_empty;
        const double w = m / n;
        remainder += w * entropy(ch);
        split_info -= w * std::log2(w);
    }
    if (non_empty < 2 || !(split_info > 0.0)) return std::nullopt;
    return (entropy(parent) - remainder) / split_info;
}

double gini_gain(const ClassCounts& parent, const ClassCounts& d1, const ClassCounts& d2) {
    const auto n = static_cast<double>(parent.total());
    if (n <= 0.0) return 0.0;
    return gini(parent) - static_cast<double>(d1.total()) / n * gini(d1) -
           static_cast<double>(d2.total()) / n * gini(d2);
}

namespace {

// Two-class fast paths used inside the split sweep.
double entropy2(double a, double b) {
    const double n = a + b;
    if (n <= 0.0) return 0.0;
    double h = 0.0;
    if (a > 0.0) h -= a / n * std::log2(a / n);
    if (b > 0.0) h -= b / n * std::log2(b / n);
    return h;
}

double gini2(double a, double b) {
    const double n = a + b;
    if (n <= 0.0) return 0.0;
    const double p = a / n;
    return 2.0 * p * (1.0 - p);
}

double split_score(Criterion crit, const std::array<double, 2>& parent, const std::array<double, 2>& left) {
    const std::array<double, 2> right{parent[0] - left[0], parent[1] - left[1]};
    const double n = parent[0] + parent[1];
    const double nl = left[0] + left[1];
    const double nr = right[0] + right[1];
    const double wl = nl / n;
    const double wr = nr / n;
    if (crit == Criterion::gini) {
        return gini2(parent[0], parent[1]) - wl * gini2(left[0], left[1]) - wr * gini2(right[0], right[1]);
    }
    const double gain = entropy2(parent[0], parent[1]) - wl * entropy2(left[0], left[1]) - wr * entropy2(right[0], right[1]);
    const double split_info = entropy2(nl, nr);
    return gain / split_info;
}

int majority(const std::array<std::int64_t, 2>& c) { return c[1] > c[0] ? 1 : 0; }

class TreeBuilder {
public:
    TreeBuilder(const Eigen::MatrixXd& x, const std::vector<int>& y, const TreeParams& params, Rng& rng)
        : x_(x), y_(y), params_(params), rng_(rng) {
        features_.resize(static_cast<std::size_t>(x.cols()));
        std::iota(features_.begin(), features_.end(), 0);
    }

    DecisionTree build(std::vector<int> sample) {
        tree_.criterion = params_.criterion;
        tree_.nodes.clear();
        grow(std::move(sample), 0);
        return std::move(tree_);
    }

private:
    int grow(std::vector<int> rows, int depth) {
        const int id = static_cast<int>(tree_.nodes.size());
        tree_.nodes.emplace_back();
        TreeNode node;
        for (int r : rows) ++node.counts[static_cast<std::size_t>(y_[static_cast<std::size_t>(r)])];
        node.prediction = majority(node.counts);

        const bool pure = node.counts[0] == 0 || node.counts[1] == 0;
        const bool depth_cap = params_.max_depth >= 0 && depth >= params_.max_depth;
        const bool too_small = static_cast<int>(rows.size()) < 2 * std::max(1, params_.min_samples_leaf);
        if (pure || depth_cap || too_small) {
            tree_.nodes[static_cast<std::size_t>(id)] = node;
            return id;
        }

        int best_feature = -1;
        double best_threshold = 0.0;
        double best_score = 0.0;
        const int quota = params_.features_per_split > 0 ? params_.features_per_split : static_cast<int>(x_.cols());
        shuffle(features_.begin(), features_.end(), rng_);
        const std::array<double, 2> parent{static_cast<double>(node.counts[0]), static_cast<double>(node.counts[1])};
        const int min_leaf = std::max(1, params_.min_samples_leaf);

        int evaluated = 0;
        std::vector<std::pair<double, int>> values(rows.size());
        for (int f : features_) {
            if (evaluated >= quota && best_feature >= 0) break;
            for (std::size_t i = 0; i < rows.size(); ++i) {
                values[i] = {x_(rows[i], f), y_[static_cast<std::size_t>(rows[i])]};
            }
            std::sort(values.begin(), values.end());
            if (values.front().first == values.back().first) continue;  // constant here
            ++evaluated;

            std::array<double, 2> left{0.0, 0.0};
            const auto n = static_cast<int>(values.size());
            for (int i = 0; i + 1 < n; ++i) {
                left[static_cast<std::size_t>(values[static_cast<std::size_t>(i)].second)] += 1.0;
                const double a = values[static_cast<std::size_t>(i)].first;
                const double b = values[static_cast<std::size_t>(i) + 1].first;
                if (a == b) continue;
                if (i + 1 < min_leaf || n - i - 1 < min_leaf) continue;
                const double score = split_score(params_.criterion, parent, left);
                if (best_feature < 0 || score > best_score) {
                    best_feature = f;
                    best_score = score;
                    double mid = a + (b - a) / 2.0;
                    if (!(mid < b)) mid = a;
                    best_threshold = mid;
                }
            }
        }

        if (best_feature < 0) {
            tree_.nodes[static_cast<std::size_t>(id)] = node;
            return id;
        }

        std::vector<int> left_rows, right_rows;
        for (int r : rows) (x_(r, best_feature) <= best_threshold ? left_rows : right_rows).push_back(r);
        rows.clear();
        rows.shrink_to_fit();

        node.feature = best_feature;
        node.threshold = best_threshold;
        tree_.nodes[static_cast<std::size_t>(id)] = node;
        const int l = grow(std::move(left_rows), depth + 1);
        const int r = grow(std::move(right_rows), depth + 1);
        tree_.nodes[static_cast<std::size_t>(id)].left = l;
        tree_.nodes[static_cast<std::size_t>(id)].right = r;
        return id;
    }

    const Eigen::MatrixXd& x_;
    const std::vector<int>& y_;
    const TreeParams& params_;
    Rng& rng_;
    std::vector<int> features_;
    DecisionTree tree_;
};

void check_labels(const Eigen::MatrixXd& x, const std::vector<int>& y) {
    if (x.rows() == 0) throw InputError("cannot fit on an empty dataset");
    if (static_cast<std::size_t>(x.rows()) != y.size()) throw InputError("feature/label row count mismatch");
    for (int v : y) {
        if (v != 0 && v != 1) throw InputError("labels must be 0 or 1");
    }
}

}  // namespace

int DecisionTree::predict(const Eigen::Ref<const Eigen::VectorXd>& row) const {
    int i = 0;
    while (!nodes[static_cast<std::size_t>(i)].is_leaf()) {
        const auto& n = nodes[static_cast<std::size_t>(i)];
        i = row(n.feature) <= n.threshold ? n.left : n.right;
    }
    return nodes[static_cast<std::size_t>(i)].prediction;
}

int DecisionTree::depth() const {
    if (nodes.empty()) return 0;
    std::vector<std::pair<int, int>> stack{{0, 0}};
    int best = 0;
    while (!stack.empty()) {
        const auto [i, d] = stack.back();
        stack.pop_back();
        best = std::max(best, d);
        const auto& n = nodes[static_cast<std::size_t>(i)];
        if (!n.is_leaf()) {
            stack.emplace_back(n.left, d + 1);
            stack.emplace_back(n.right, d + 1);
        }
    }
    return best;
}

DecisionTree fit_tree(const Eigen::MatrixXd& x, const std::vector<int>& y, const std::vector<int>& sample,
                      const TreeParams& params, Rng& rng) {
    check_labels(x, y);
    if (sample.empty()) throw InputError("cannot fit a tree on an empty sample");
    return TreeBuilder(x, y, params, rng).build(sample);
}

DecisionTree fit_tree(const Eigen::MatrixXd& x, const std::vector<int>& y, const TreeParams& params, Rng& rng) {
    std::vector<int> all(static_cast<std::size_t>(x.rows()));
    std::iota(all.begin(), all.end(), 0);
    return fit_tree(x, y, all, params, rng);
}

std::vector<int> bootstrap_sample(std::uint64_t seed, int tree_index, int n_rows) {
    Rng rng(mix_seed(seed, static_cast<std::uint64_t>(tree_index)));
    std::vector<int> sample(static_cast<std::size_t>(n_rows));
    for (auto& s : sample) s = static_cast<int>(uniform_below(rng, static_cast<std::uint64_t>(n_rows)));
    return sample;
}

RandomForestModel fit_forest(const Eigen::MatrixXd& x, const std::vector<int>& y, const ForestParams& params) {
    check_labels(x, y);
    if (params.n_estimators < 1) throw ConfigError("n_estimators must be at least 1");

    RandomForestModel model;
    model.n_estimators = params.n_estimators;
    model.criterion = params.criterion;
    model.seed = params.seed;
    model.features_per_split = params.features_per_split > 0
                                   ? params.features_per_split
                                   : std::max(1, static_cast<int>(std::floor(std::sqrt(static_cast<double>(x.cols())))));
    model.trees.resize(static_cast<std::size_t>(params.n_estimators));

    TreeParams tp;
    tp.criterion = params.criterion;
    tp.features_per_split = model.features_per_split;
    tp.min_samples_leaf = params.min_samples_leaf;
    tp.max_depth = params.max_depth;

    const int n_rows = static_cast<int>(x.rows());
    std::atomic<int> next{0};
    auto worker = [&] {
        for (int t = next++; t < params.n_estimators; t = next++) {
            // Bootstrap draws come first on the tree's stream, then feature sampling.
            Rng rng(mix_seed(params.seed, static_cast<std::uint64_t>(t)));
            std::vector<int> sample(static_cast<std::size_t>(n_rows));
            for (auto& s : sample) s = static_cast<int>(uniform_below(rng, static_cast<std::uint64_t>(n_rows)));
            model.trees[static_cast<std::size_t>(t)] = TreeBuilder(x, y, tp, rng).build(std::move(sample));
        }
    };
    const unsigned hw = params.threads > 0 ? static_cast<unsigned>(params.threads)
                                           : std::max(1u, std::thread::hardware_concurrency());
    const unsigned n_threads = std::min<unsigned>(hw, static_cast<unsigned>(params.n_estimators));
    if (n_threads <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (unsigned i = 0; i < n_threads; ++i) pool.emplace_back(worker);
    }
    return model;
}

Prediction RandomForestModel::predict(const Eigen::Ref<const Eigen::VectorXd>& row) const {
    if (trees.empty()) throw InputError("model has no trees");
    if (!feature_names.empty() && row.size() != static_cast<Eigen::Index>(feature_names.size())) {
        throw InputError("row has " + std::to_string(row.size()) + " features, model expects " +
                         std::to_string(feature_names.size()));
    }
    int ones = 0;
    for (const auto& t : trees) ones += t.predict(row);
    const int zeros = static_cast<int>(trees.size()) - ones;
    Prediction p;
    p.label = ones > zeros ? 1 : 0;
    p.vote_fraction = static_cast<double>(ones) / static_cast<double>(trees.size());
    return p;
}

std::vector<Prediction> RandomForestModel::predict_all(const Eigen::MatrixXd& x) const {
    std::vector<Prediction> out;
    out.reserve(static_cast<std::size_t>(x.rows()));
    for (Eigen::Index i = 0; i < x.rows(); ++i) out.push_back(predict(Eigen::VectorXd(x.row(i).transpose())));
    return out;
}

std::optional<double> oob_accuracy(const RandomForestModel& model, const Eigen::MatrixXd& x, const std::vector<int>& y) {
    const int n = static_cast<int>(x.rows());
    std::vector<int> ones(static_cast<std::size_t>(n), 0), votes(static_cast<std::size_t>(n), 0);
    for (int t = 0; t < static_cast<int>(model.trees.size()); ++t) {
        std::vector<char> in_bag(static_cast<std::size_t>(n), 0);
        for (int r : bootstrap_sample(model.seed, t, n)) in_bag[static_cast<std::size_t>(r)] = 1;
        for (int r = 0; r < n; ++r) {
            if (in_bag[static_cast<std::size_t>(r)]) continue;
            ++votes[static_cast<std::size_t>(r)];
            ones[static_cast<std::size_t>(r)] += model.trees[static_cast<std::size_t>(t)].predict(x.row(r).transpose());
        }
    }
    int scored = 0, correct = 0;
    for (int r = 0; r < n; ++r) {
        const auto i = static_cast<std::size_t>(r);
        if (votes[i] == 0) continue;
        ++scored;
        const int label = 2 * ones[i] > votes[i] ? 1 : 0;
        correct += label == y[i];
    }
    if (scored == 0) return std::nullopt;
    return static_cast<double>(correct) / scored;
}

double Ratio::rounded(int digits) const {
    if (den == 0) return 0.0;
    std::int64_t scale = 1;
    for (int i = 0; i < digits; ++i) scale *= 10;
    const bool negative = (num < 0) != (den < 0);
    const std::int64_t a = std::abs(num) * scale;
    const std::int64_t b = std::abs(den);
    const std::int64_t q = (2 * a + b) / (2 * b);
    return (negative ? -1.0 : 1.0) * static_cast<double>(q) / static_cast<double>(scale);
}

std::int64_t EvaluationReport::total() const {
    return confusion[0][0] + confusion[0][1] + confusion[1][0] + confusion[1][1];
}

Ratio EvaluationReport::accuracy() const { return {confusion[0][0] + confusion[1][1], total()}; }

Ratio EvaluationReport::false_positive_rate() const {
    return {confusion[0][1], confusion[0][0] + confusion[0][1]};
}

Ratio EvaluationReport::false_negative_rate() const {
    return {confusion[1][0], confusion[1][0] + confusion[1][1]};
}

EvaluationReport report_from_confusion(std::array<std::array<std::int64_t, 2>, 2> confusion) {
    EvaluationReport r;
    r.confusion = confusion;
    return r;
}

EvaluationReport evaluate(const std::vector<int>& truth, const std::vector<int>& predicted) {
    if (truth.empty()) throw InputError("cannot evaluate on an empty test set");
    if (truth.size() != predicted.size()) throw InputError("truth/prediction size mismatch");
    EvaluationReport r;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        ++r.confusion[static_cast<std::size_t>(truth[i])][static_cast<std::size_t>(predicted[i])];
    }
    return r;
}

EvaluationReport evaluate(const RandomForestModel& model, const Eigen::MatrixXd& x, const std::vector<int>& y) {
    std::vector<int> pred;
    for (const auto& p : model.predict_all(x)) pred.push_back(p.label);
    return evaluate(y, pred);
}

std::vector<int> stratified_folds(const std::vector<int>& y, int k, Rng& rng) {
    std::vector<int> fold(y.size(), 0);
    int cursor = 0;
    for (int cls : {0, 1}) {
        std::vector<int> idx;
        for (std::size_t i = 0; i < y.size(); ++i) {
            if (y[i] == cls) idx.push_back(static_cast<int>(i));
        }
        shuffle(idx.begin(), idx.end(), rng);
        for (int i : idx) fold[static_cast<std::size_t>(i)] = cursor++ % k;
    }
    return fold;
}

std::pair<std::vector<int>, std::vector<int>> stratified_split(const std::vector<int>& y, double train_ratio,
                                                              std::uint64_t seed) {
    if (!(train_ratio > 0.0 && train_ratio < 1.0)) throw ConfigError("split ratio must lie in (0, 1)");
    Rng rng(mix_seed(seed, 0x5711));
    std::vector<int> train, test;
    for (int cls : {0, 1}) {
        std::vector<int> idx;
        for (std::size_t i = 0; i < y.size(); ++i) {
            if (y[i] == cls) idx.push_back(static_cast<int>(i));
        }
        shuffle(idx.begin(), idx.end(), rng);
        auto n_train = static_cast<std::size_t>(std::llround(train_ratio * static_cast<double>(idx.size())));
        if (idx.size() >= 2) n_train = std::clamp<std::size_t>(n_train, 1, idx.size() - 1);
        train.insert(train.end(), idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_train));
        test.insert(test.end(), idx.begin() + static_cast<std::ptrdiff_t>(n_train), idx.end());
    }
    std::sort(train.begin(), train.end());
    std::sort(test.begin(), test.end());
    return {train, test};
}

GridSearchResult grid_search(const Eigen::MatrixXd& x, const std::vector<int>& y, const GridSpec& grid, int k_folds,
                             std::uint64_t seed, const ForestParams& base) {
    check_labels(x, y);
    if (k_folds < 2) throw ConfigError("k_folds must be at least 2");
    if (x.rows() < k_folds) throw InputError("fewer rows than folds");
    if (grid.n_estimators.empty() || grid.criteria.empty()) throw ConfigError("grid must not be empty");

    std::vector<int> fold;
    bool usable = false;
    for (int attempt = 0; attempt < 3 && !usable; ++attempt) {
        Rng rng(mix_seed(seed, 0xF01D + static_cast<std::uint64_t>(attempt)));
        fold = stratified_folds(y, k_folds, rng);
        usable = true;
        for (int f = 0; f < k_folds && usable; ++f) {
            std::array<int, 2> train_counts{0, 0};
            int test_rows = 0;
            for (std::size_t i = 0; i < y.size(); ++i) {
                if (fold[i] == f) {
                    ++test_rows;
                } else {
                    ++train_counts[static_cast<std::size_t>(y[i])];
                }
            }
            usable = test_rows > 0 && train_counts[0] > 0 && train_counts[1] > 0;
        }
    }
    if (!usable) throw InputError("cannot build cross-validation folds with both classes in every training part");

    GridSearchResult result;
    for (int n : grid.n_estimators) {
        for (Criterion c : grid.criteria) {
            CvCell cell;
            cell.n_estimators = n;
            cell.criterion = c;
            for (int f = 0; f < k_folds; ++f) {
                std::vector<int> tr, te;
                for (std::size_t i = 0; i < y.size(); ++i) (fold[i] == f ? te : tr).push_back(static_cast<int>(i));
                Eigen::MatrixXd xtr = x(tr, Eigen::all);
                Eigen::MatrixXd xte = x(te, Eigen::all);
                std::vector<int> ytr, yte;
                for (int i : tr) ytr.push_back(y[static_cast<std::size_t>(i)]);
                for (int i : te) yte.push_back(y[static_cast<std::size_t>(i)]);
                ForestParams p = base;
                p.n_estimators = n;
                p.criterion = c;
                p.seed = seed;
                const auto model = fit_forest(xtr, ytr, p);
                cell.fold_accuracy.push_back(evaluate(model, xte, yte).accuracy().value());
            }
            cell.mean_accuracy = std::accumulate(cell.fold_accuracy.begin(), cell.fold_accuracy.end(), 0.0) / k_folds;
            result.table.push_back(cell);
        }
    }

    constexpr double kTie = 1e-12;
    const CvCell* best = &result.table.front();
    for (const auto& cell : result.table) {
        const double diff = cell.mean_accuracy - best->mean_accuracy;
        const bool better = diff > kTie ||
                            (std::abs(diff) <= kTie &&
                             (cell.n_estimators < best->n_estimators ||
                              (cell.n_estimators == best->n_estimators && cell.criterion < best->criterion)));
        if (better) best = &cell;
    }
    result.best_n_estimators = best->n_estimators;
    result.best_criterion = best->criterion;
    result.best_score = best->mean_accuracy;
    return result;
}

}  // namespace whistle
