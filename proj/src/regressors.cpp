#include "silmpc/regressors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>

#include "silmpc/errors.hpp"
#include "silmpc/rng.hpp"

namespace silmpc {
namespace {

constexpr double kVarianceFloor = 1e-12;
constexpr int kRegressorFormatVersion = 1;

void check_training_data(const RowMatrix& x, const RowMatrix& y) {
    if (x.rows() == 0) throw std::invalid_argument("cannot fit on an empty dataset");
    if (x.rows() != y.rows()) throw DimensionError("feature and target row counts differ");
    if (x.cols() == 0 || y.cols() == 0) throw DimensionError("no features or no targets");
    if (!x.allFinite() || !y.allFinite()) throw std::invalid_argument("training data contains non-finite values");
}

std::vector<double> to_vector(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

Eigen::VectorXd from_vector(const std::vector<double>& v) {
    return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace

// ---------------------------------------------------------------- ridge ---

RidgeLinear::RidgeLinear(double lambda) : lambda_(lambda) {
    if (!(lambda >= 0.0)) throw ParameterError("ridge lambda must be >= 0");
}

void RidgeLinear::fit(const RowMatrix& x, const RowMatrix& y) {
    check_training_data(x, y);
    const Eigen::Index n = x.rows();
    const Eigen::Index p = x.cols();
    if (n < 2) throw std::invalid_argument("ridge needs at least two rows");

    const Eigen::RowVectorXd mean = x.colwise().mean();
    Eigen::MatrixXd z = x.rowwise() - mean;
    Eigen::VectorXd scale = Eigen::VectorXd::Ones(p);
    for (Eigen::Index j = 0; j < p; ++j) {
        const double var = z.col(j).squaredNorm() / static_cast<double>(n);
        if (var < kVarianceFloor) {
            z.col(j).setZero();
        } else {
            scale[j] = std::sqrt(var);
            z.col(j) /= scale[j];
        }
    }
    const Eigen::RowVectorXd y_mean = y.colwise().mean();
    const Eigen::MatrixXd yc = y.rowwise() - y_mean;

    Eigen::MatrixXd w;
    if (lambda_ > 0.0) {
        Eigen::MatrixXd gram = z.transpose() * z;
        gram.diagonal().array() += lambda_;
        w = gram.ldlt().solve(z.transpose() * yc);
    } else {
        w = z.completeOrthogonalDecomposition().solve(yc);
    }
    if (!w.allFinite()) throw NumericalError("ridge solve produced non-finite weights");

    coefficients_ = (w.array().colwise() / scale.array()).transpose();
    intercepts_ = y_mean.transpose() - coefficients_ * mean.transpose();
    fitted_ = true;
}

Eigen::VectorXd RidgeLinear::predict(const Eigen::VectorXd& features) const {
    if (!fitted_) throw NotFittedError("ridge regressor used before fit");
    if (features.size() != coefficients_.cols()) throw DimensionError("ridge: feature dimension mismatch");
    return intercepts_ + coefficients_ * features;
}

nlohmann::json RidgeLinear::to_json() const {
    nlohmann::json j;
    j["kind"] = kind();
    j["version"] = kRegressorFormatVersion;
    j["lambda"] = lambda_;
    j["fitted"] = fitted_;
    if (fitted_) {
        nlohmann::json rows = nlohmann::json::array();
        for (Eigen::Index t = 0; t < coefficients_.rows(); ++t) rows.push_back(to_vector(coefficients_.row(t).transpose()));
        j["coefficients"] = rows;
        j["intercepts"] = to_vector(intercepts_);
    }
    return j;
}

RidgeLinear RidgeLinear::from_json(const nlohmann::json& j) {
    RidgeLinear r(j.at("lambda").get<double>());
    if (j.value("fitted", false)) {
        const auto rows = j.at("coefficients").get<std::vector<std::vector<double>>>();
        const auto intercepts = j.at("intercepts").get<std::vector<double>>();
        if (rows.size() != intercepts.size() || rows.empty()) throw ParseError("ridge: inconsistent coefficients");
        r.coefficients_.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows[0].size()));
        for (std::size_t t = 0; t < rows.size(); ++t) {
            if (rows[t].size() != rows[0].size()) throw ParseError("ridge: ragged coefficient matrix");
            r.coefficients_.row(static_cast<Eigen::Index>(t)) = from_vector(rows[t]).transpose();
        }
        r.intercepts_ = from_vector(intercepts);
        r.fitted_ = true;
    }
    return r;
}

// ------------------------------------------------------------------ gbt ---

void GbtParams::validate() const {
    if (n_trees < 0 || max_depth < 1 || min_samples_leaf < 1 || max_bins < 2 || max_bins > 256)
        throw ParameterError("invalid gradient boosting structure parameters");
    if (!(learning_rate > 0.0 && learning_rate <= 1.0)) throw ParameterError("learning_rate must be in (0, 1]");
    if (!(subsample > 0.0 && subsample <= 1.0)) throw ParameterError("subsample must be in (0, 1]");
}

double GradientBoostedTrees::Tree::evaluate(const double* x) const {
    int i = 0;
    while (nodes[static_cast<std::size_t>(i)].feature >= 0) {
        const Node& nd = nodes[static_cast<std::size_t>(i)];
        i = x[nd.feature] <= nd.threshold ? nd.left : nd.right;
    }
    return nodes[static_cast<std::size_t>(i)].value;
}

namespace {

// Per-feature cut points; bin(v) = number of cuts strictly below v, so
// bin(v) <= b  <=>  v <= cuts[b].
struct Binning {
    std::vector<std::vector<double>> cuts;
    std::vector<std::vector<std::uint8_t>> bins;  // feature-major

    int num_bins(int f) const { return static_cast<int>(cuts[static_cast<std::size_t>(f)].size()) + 1; }
};

Binning make_bins(const RowMatrix& x, int max_bins) {
    const auto n = static_cast<std::size_t>(x.rows());
    const auto p = static_cast<std::size_t>(x.cols());
    Binning b;
    b.cuts.resize(p);
    b.bins.assign(p, std::vector<std::uint8_t>(n));
    std::vector<double> sorted(n);
    for (std::size_t f = 0; f < p; ++f) {
        for (std::size_t i = 0; i < n; ++i) sorted[i] = x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(f));
        std::sort(sorted.begin(), sorted.end());
        std::vector<double> uniq;
        uniq.reserve(n);
        for (double v : sorted)
            if (uniq.empty() || v != uniq.back()) uniq.push_back(v);
        auto& cuts = b.cuts[f];
        if (static_cast<int>(uniq.size()) <= max_bins) {
            for (std::size_t i = 0; i + 1 < uniq.size(); ++i) cuts.push_back(0.5 * (uniq[i] + uniq[i + 1]));
        } else {
            for (int q = 1; q < max_bins; ++q) {
                const std::size_t idx = (static_cast<std::size_t>(q) * n) / static_cast<std::size_t>(max_bins);
                const double v = sorted[std::min(idx, n - 1)];
                const auto next = std::upper_bound(uniq.begin(), uniq.end(), v);
                if (next == uniq.end()) break;
                const double cut = 0.5 * (v + *next);
                if (cuts.empty() || cut > cuts.back()) cuts.push_back(cut);
            }
        }
        for (std::size_t i = 0; i < n; ++i) {
            const double v = x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(f));
            b.bins[f][i] = static_cast<std::uint8_t>(std::lower_bound(cuts.begin(), cuts.end(), v) - cuts.begin());
        }
    }
    return b;
}

struct SplitCandidate {
    int feature = -1;
    int bin = -1;
    double gain = 0.0;
};

class TreeBuilder {
public:
    TreeBuilder(const Binning& binning, const GbtParams& params, const std::vector<double>& residual)
        : binning_(binning), params_(params), residual_(residual) {}

    // Grows a tree on `rows`; node values are left at zero.
    GradientBoostedTrees::Tree grow(std::vector<std::uint32_t> rows) {
        tree_.nodes.clear();
        split_bins_.clear();
        tree_.nodes.emplace_back();
        split_bins_.push_back(-1);
        grow_node(0, std::move(rows), 0);
        return tree_;
    }

    // Leaf index reached by row i of the training data.
    int route(std::size_t row) const {
        int i = 0;
        while (tree_.nodes[static_cast<std::size_t>(i)].feature >= 0) {
            const auto& nd = tree_.nodes[static_cast<std::size_t>(i)];
            const int b = binning_.bins[static_cast<std::size_t>(nd.feature)][row];
            i = b <= split_bins_[static_cast<std::size_t>(i)] ? nd.left : nd.right;
        }
        return i;
    }

private:
    SplitCandidate best_split(const std::vector<std::uint32_t>& rows) const {
        SplitCandidate best;
        const double n = static_cast<double>(rows.size());
        double total = 0.0;
        for (auto r : rows) total += residual_[r];
        const double parent = total * total / n;
        const int min_leaf = params_.min_samples_leaf;
        std::vector<double> sum;
        std::vector<int> count;
        for (std::size_t f = 0; f < binning_.cuts.size(); ++f) {
            const int nb = binning_.num_bins(static_cast<int>(f));
            if (nb < 2) continue;
            sum.assign(static_cast<std::size_t>(nb), 0.0);
            count.assign(static_cast<std::size_t>(nb), 0);
            const auto& col = binning_.bins[f];
            for (auto r : rows) {
                sum[col[r]] += residual_[r];
                ++count[col[r]];
            }
            double left_sum = 0.0;
            int left_n = 0;
            for (int b = 0; b + 1 < nb; ++b) {
                left_sum += sum[static_cast<std::size_t>(b)];
                left_n += count[static_cast<std::size_t>(b)];
                const int right_n = static_cast<int>(rows.size()) - left_n;
                if (left_n < min_leaf) continue;
                if (right_n < min_leaf) break;
                const double right_sum = total - left_sum;
                const double gain = left_sum * left_sum / left_n + right_sum * right_sum / right_n - parent;
                if (gain > best.gain) best = {static_cast<int>(f), b, gain};
            }
        }
        return best;
    }

    void grow_node(int node, std::vector<std::uint32_t> rows, int depth) {
        if (depth >= params_.max_depth || static_cast<int>(rows.size()) < 2 * params_.min_samples_leaf) return;
        const SplitCandidate s = best_split(rows);
        if (s.feature < 0 || s.gain <= 1e-14) return;
        std::vector<std::uint32_t> left, right;
        const auto& col = binning_.bins[static_cast<std::size_t>(s.feature)];
        for (auto r : rows) (col[r] <= s.bin ? left : right).push_back(r);
        rows.clear();
        rows.shrink_to_fit();

        const int l = static_cast<int>(tree_.nodes.size());
        tree_.nodes.emplace_back();
        tree_.nodes.emplace_back();
        split_bins_.push_back(-1);
        split_bins_.push_back(-1);
        auto& nd = tree_.nodes[static_cast<std::size_t>(node)];
        nd.feature = s.feature;
        nd.threshold = binning_.cuts[static_cast<std::size_t>(s.feature)][static_cast<std::size_t>(s.bin)];
        nd.left = l;
        nd.right = l + 1;
        split_bins_[static_cast<std::size_t>(node)] = s.bin;
        grow_node(l, std::move(left), depth + 1);
        grow_node(l + 1, std::move(right), depth + 1);
    }

    const Binning& binning_;
    const GbtParams& params_;
    const std::vector<double>& residual_;
    GradientBoostedTrees::Tree tree_;
    std::vector<int> split_bins_;
};

}  // namespace

GradientBoostedTrees::GradientBoostedTrees(GbtParams params) : params_(params) { params_.validate(); }

void GradientBoostedTrees::fit(const RowMatrix& x, const RowMatrix& y) {
    check_training_data(x, y);
    const auto n = static_cast<std::size_t>(x.rows());
    const Binning binning = make_bins(x, params_.max_bins);
    n_features_ = static_cast<int>(x.cols());
    ensembles_.assign(static_cast<std::size_t>(y.cols()), {});
    training_loss_.assign(static_cast<std::size_t>(y.cols()), {});

    std::vector<double> residual(n);
    std::vector<std::uint32_t> rows;
    rows.reserve(n);
    std::vector<int> leaf_of(n);
    for (Eigen::Index t = 0; t < y.cols(); ++t) {
        Ensemble& ens = ensembles_[static_cast<std::size_t>(t)];
        auto& loss = training_loss_[static_cast<std::size_t>(t)];
        ens.base = y.col(t).mean();
        double mse = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            residual[i] = y(static_cast<Eigen::Index>(i), t) - ens.base;
            mse += residual[i] * residual[i];
        }
        loss.push_back(mse / static_cast<double>(n));

        TreeBuilder builder(binning, params_, residual);
        for (int round = 0; round < params_.n_trees; ++round) {
            rows.clear();
            const std::uint64_t stream = (static_cast<std::uint64_t>(t) << 32) | static_cast<std::uint64_t>(round);
            for (std::size_t i = 0; i < n; ++i)
                if (params_.subsample >= 1.0 || hashed_uniform(params_.seed, stream, i) < params_.subsample)
                    rows.push_back(static_cast<std::uint32_t>(i));
            if (rows.empty()) rows.push_back(0);

            Tree tree = builder.grow(rows);
            std::vector<double> leaf_sum(tree.nodes.size(), 0.0);
            std::vector<int> leaf_n(tree.nodes.size(), 0);
            for (std::size_t i = 0; i < n; ++i) {
                leaf_of[i] = builder.route(i);
                leaf_sum[static_cast<std::size_t>(leaf_of[i])] += residual[i];
                ++leaf_n[static_cast<std::size_t>(leaf_of[i])];
            }
            for (std::size_t k = 0; k < tree.nodes.size(); ++k)
                if (tree.nodes[k].feature < 0 && leaf_n[k] > 0)
                    tree.nodes[k].value = params_.learning_rate * leaf_sum[k] / leaf_n[k];
            mse = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                residual[i] -= tree.nodes[static_cast<std::size_t>(leaf_of[i])].value;
                mse += residual[i] * residual[i];
            }
            loss.push_back(mse / static_cast<double>(n));
            ens.trees.push_back(std::move(tree));
        }
    }
    fitted_ = true;
}

Eigen::VectorXd GradientBoostedTrees::predict(const Eigen::VectorXd& features) const {
    if (!fitted_) throw NotFittedError("gradient boosting regressor used before fit");
    if (features.size() != n_features_) throw DimensionError("gbt: feature dimension mismatch");
    Eigen::VectorXd out(static_cast<Eigen::Index>(ensembles_.size()));
    for (std::size_t t = 0; t < ensembles_.size(); ++t) {
        double v = ensembles_[t].base;
        for (const Tree& tree : ensembles_[t].trees) v += tree.evaluate(features.data());
        out[static_cast<Eigen::Index>(t)] = v;
    }
    return out;
}

nlohmann::json GradientBoostedTrees::to_json() const {
    nlohmann::json j;
    j["kind"] = kind();
    j["version"] = kRegressorFormatVersion;
    j["params"] = {{"n_trees", params_.n_trees},     {"max_depth", params_.max_depth},
                   {"learning_rate", params_.learning_rate}, {"min_samples_leaf", params_.min_samples_leaf},
                   {"subsample", params_.subsample}, {"seed", params_.seed},
                   {"max_bins", params_.max_bins}};
    j["fitted"] = fitted_;
    if (!fitted_) return j;
    j["n_features"] = n_features_;
    nlohmann::json ens_json = nlohmann::json::array();
    for (const Ensemble& ens : ensembles_) {
        nlohmann::json trees = nlohmann::json::array();
        for (const Tree& tree : ens.trees) {
            std::vector<int> feature, left, right;
            std::vector<double> threshold, value;
            for (const Node& nd : tree.nodes) {
                feature.push_back(nd.feature);
                threshold.push_back(nd.threshold);
                left.push_back(nd.left);
                right.push_back(nd.right);
                value.push_back(nd.value);
            }
            trees.push_back({{"feature", feature}, {"threshold", threshold}, {"left", left}, {"right", right},
                             {"value", value}});
        }
        ens_json.push_back({{"base", ens.base}, {"trees", trees}});
    }
    j["ensembles"] = ens_json;
    return j;
}

GradientBoostedTrees GradientBoostedTrees::from_json(const nlohmann::json& j) {
    const auto& pj = j.at("params");
    GbtParams p;
    p.n_trees = pj.at("n_trees").get<int>();
    p.max_depth = pj.at("max_depth").get<int>();
    p.learning_rate = pj.at("learning_rate").get<double>();
    p.min_samples_leaf = pj.at("min_samples_leaf").get<int>();
    p.subsample = pj.at("subsample").get<double>();
    p.seed = pj.at("seed").get<std::uint64_t>();
    p.max_bins = pj.at("max_bins").get<int>();
    GradientBoostedTrees g(p);
    if (!j.value("fitted", false)) return g;
    g.n_features_ = j.at("n_features").get<int>();
    for (const auto& ej : j.at("ensembles")) {
        Ensemble ens;
        ens.base = ej.at("base").get<double>();
        for (const auto& tj : ej.at("trees")) {
            const auto feature = tj.at("feature").get<std::vector<int>>();
            const auto threshold = tj.at("threshold").get<std::vector<double>>();
            const auto left = tj.at("left").get<std::vector<int>>();
            const auto right = tj.at("right").get<std::vector<int>>();
            const auto value = tj.at("value").get<std::vector<double>>();
            const std::size_t m = feature.size();
            if (m == 0 || threshold.size() != m || left.size() != m || right.size() != m || value.size() != m)
                throw ParseError("gbt: inconsistent tree arrays");
            Tree tree;
            for (std::size_t k = 0; k < m; ++k) {
                const bool leaf = feature[k] < 0;
                const auto in_range = [m](int c) { return c > 0 && static_cast<std::size_t>(c) < m; };
                if (!leaf && (feature[k] >= g.n_features_ || !in_range(left[k]) || !in_range(right[k])))
                    throw ParseError("gbt: tree node out of range");
                tree.nodes.push_back({feature[k], threshold[k], left[k], right[k], value[k]});
            }
            ens.trees.push_back(std::move(tree));
        }
        g.ensembles_.push_back(std::move(ens));
    }
    g.fitted_ = true;
    return g;
}

std::unique_ptr<Regressor> regressor_from_json(const nlohmann::json& j) {
    const std::string kind = j.at("kind").get<std::string>();
    if (j.value("version", 0) != kRegressorFormatVersion) throw ParseError("unsupported regressor format version");
    if (kind == "ridge") return std::make_unique<RidgeLinear>(RidgeLinear::from_json(j));
    if (kind == "gbt") return std::make_unique<GradientBoostedTrees>(GradientBoostedTrees::from_json(j));
    throw ParseError("unknown regressor kind '" + kind + "'");
}

}  // namespace silmpc
