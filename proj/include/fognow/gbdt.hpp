#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <vector>

#include <json.hpp>

#include "fognow/features.hpp"

namespace fognow::gbdt {

struct GbdtConfig {
    int n_rounds = 200;
    double learning_rate = 0.1;
    int max_depth = 6;
    double min_child_weight = 1.0;
    double lambda = 1.0;  // leaf L2 regularization
    double gamma = 0.0;   // split gain threshold
    double base_score = std::numeric_limits<double>::quiet_NaN();  // NaN = train target mean
    int early_stopping_rounds = 25;
    std::uint64_t seed = 0;  // reserved for subsampling; fitting is deterministic without it

    void validate() const;
};

struct TreeNode {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0;
    bool default_left = true;  // direction for missing values; unused post-ingestion
    int left = -1;
    int right = -1;
    double weight = 0;

    bool is_leaf() const { return feature < 0; }
};

struct RegressionTree {
    std::vector<TreeNode> nodes;  // node 0 is the root

    double leaf_value(const Eigen::Ref<const Eigen::RowVectorXd>& row) const;
};

struct GbdtModel {
    double base_score = 0;
    Eigen::Index n_features = 0;
    std::vector<RegressionTree> trees;  // shrinkage applied at prediction
    GbdtConfig config;
    int best_round = 0;  // prediction uses trees [0, best_round)
    std::vector<double> train_rmse_per_round;
    std::vector<double> valid_rmse_per_round;
    bool constant_target = false;
};

struct EmptyTrainingSet : std::runtime_error {
    EmptyTrainingSet() : std::runtime_error("training set is empty") {}
};

struct DimensionMismatch : std::runtime_error {
    explicit DimensionMismatch(const std::string& what) : std::runtime_error(what) {}
};

/// Second-order boosting of the squared-error objective with exact greedy
/// splits. With an empty validation set, all rounds are kept.
GbdtModel fit_gbdt(const features::SupervisedSet& train, const features::SupervisedSet& valid,
                   const GbdtConfig& config);

/// Deterministic traversal; outputs clamped at >= 0 km.
Eigen::VectorXd predict_gbdt(const GbdtModel& model, const Eigen::MatrixXd& x_rows);

nlohmann::ordered_json config_to_json(const GbdtConfig& config);
GbdtConfig config_from_json(const nlohmann::json& j);

nlohmann::ordered_json model_to_json(const GbdtModel& model);
GbdtModel model_from_json(const nlohmann::json& j);
void save_model(const std::filesystem::path& path, const GbdtModel& model);
GbdtModel load_model(const std::filesystem::path& path);

}  // namespace fognow::gbdt
