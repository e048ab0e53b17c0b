#pragma once

// Multi-output regressors: one independent model per target column.

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"

namespace silmpc {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstRowMatrixMap = Eigen::Map<const RowMatrix>;

class Regressor {
public:
    virtual ~Regressor() = default;

    // x: rows x features, y: rows x targets. Refits from scratch.
    virtual void fit(const RowMatrix& x, const RowMatrix& y) = 0;
    // Throws NotFittedError / DimensionError.
    virtual Eigen::VectorXd predict(const Eigen::VectorXd& features) const = 0;

    virtual bool fitted() const = 0;
    virtual int num_features() const = 0;
    virtual int num_targets() const = 0;
    virtual std::string kind() const = 0;
    virtual std::unique_ptr<Regressor> clone() const = 0;
    virtual nlohmann::json to_json() const = 0;
};

std::unique_ptr<Regressor> regressor_from_json(const nlohmann::json& j);

// Ridge regression on standardized features:
// minimizes ||y - Zw||^2 + lambda ||w||^2 per target, Z the standardized
// features; coefficients are reported in original feature units. Features
// with variance below 1e-12 are treated as constant and get weight zero.
class RidgeLinear final : public Regressor {
public:
    explicit RidgeLinear(double lambda = 1e-6);

    void fit(const RowMatrix& x, const RowMatrix& y) override;
    Eigen::VectorXd predict(const Eigen::VectorXd& features) const override;

    bool fitted() const override { return fitted_; }
    int num_features() const override { return static_cast<int>(coefficients_.cols()); }
    int num_targets() const override { return static_cast<int>(coefficients_.rows()); }
    std::string kind() const override { return "ridge"; }
    std::unique_ptr<Regressor> clone() const override { return std::make_unique<RidgeLinear>(*this); }
    nlohmann::json to_json() const override;
    static RidgeLinear from_json(const nlohmann::json& j);

    double lambda() const { return lambda_; }
    // targets x features
    const Eigen::MatrixXd& coefficients() const { return coefficients_; }
    const Eigen::VectorXd& intercepts() const { return intercepts_; }

private:
    double lambda_;
    bool fitted_ = false;
    Eigen::MatrixXd coefficients_;
    Eigen::VectorXd intercepts_;
};

struct GbtParams {
    int n_trees = 300;
    int max_depth = 4;
    double learning_rate = 0.1;
    int min_samples_leaf = 5;
    double subsample = 0.8;
    std::uint64_t seed = 1;
    int max_bins = 255;

    void validate() const;
};

// Squared-error gradient boosting with histogram split search. Tree
// structure is grown on a seeded row subsample; leaf values are the mean
// residual of all training rows reaching the leaf, which keeps the training
// MSE non-increasing from round to round.
class GradientBoostedTrees final : public Regressor {
public:
    struct Node {
        int feature = -1;  // -1 marks a leaf
        double threshold = 0.0;  // go left when x[feature] <= threshold
        int left = -1;
        int right = -1;
        double value = 0.0;  // shrunken leaf output
    };
    struct Tree {
        std::vector<Node> nodes;
        double evaluate(const double* x) const;
    };
    struct Ensemble {
        double base = 0.0;
        std::vector<Tree> trees;
    };

    explicit GradientBoostedTrees(GbtParams params = {});

    void fit(const RowMatrix& x, const RowMatrix& y) override;
    Eigen::VectorXd predict(const Eigen::VectorXd& features) const override;

    bool fitted() const override { return fitted_; }
    int num_features() const override { return n_features_; }
    int num_targets() const override { return static_cast<int>(ensembles_.size()); }
    std::string kind() const override { return "gbt"; }
    std::unique_ptr<Regressor> clone() const override { return std::make_unique<GradientBoostedTrees>(*this); }
    nlohmann::json to_json() const override;
    static GradientBoostedTrees from_json(const nlohmann::json& j);

    const GbtParams& params() const { return params_; }
    const std::vector<Ensemble>& ensembles() const { return ensembles_; }
    // Training MSE per target after 0..n_trees rounds.
    const std::vector<std::vector<double>>& training_loss() const { return training_loss_; }

private:
    GbtParams params_;
    bool fitted_ = false;
    int n_features_ = 0;
    std::vector<Ensemble> ensembles_;
    std::vector<std::vector<double>> training_loss_;
};

}  // namespace silmpc
