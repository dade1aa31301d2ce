#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <utility>
#include <vector>

#include "fognow/features.hpp"
#include "fognow/mlp.hpp"

namespace fognow::cgan {

struct CganConfig {
    int noise_dim = 1;
    int gen_hidden_layers = 6;
    int gen_hidden_units = 15;
    int disc_hidden_layers = 4;
    int disc_hidden_units = 15;
    double lr_gen = 1e-4;
    double lr_disc = 1e-3;
    int batch_size = 100;
    int epochs = 500;
    int disc_steps_per_gen_step = 1;
    int prediction_samples = 50;  // K noise draws averaged into one point estimate
    int valid_samples = 10;       // cheaper K used for the per-epoch validation RMSE
    std::uint64_t seed = 1;

    void validate() const;
};

struct TrainingLogEntry {
    int epoch = 0;
    double disc_loss = 0;
    double gen_loss = 0;
    double valid_rmse_km = 0;
    int disc_steps = 0;
    int gen_steps = 0;
};

struct CganModel {
    nn::MlpParams generator;      // input = n_features + noise_dim, linear head
    nn::MlpParams discriminator;  // input = n_features + 1, sigmoid head
    features::NormStats norm;
    CganConfig config;
    std::vector<TrainingLogEntry> training_log;
    int best_epoch = -1;

    Eigen::Index feature_dim() const { return generator.input_dim() - config.noise_dim; }
};

struct EmptyBatch : std::runtime_error {
    EmptyBatch() : std::runtime_error("loss over an empty batch") {}
};

struct EmptyTrainingSet : std::runtime_error {
    explicit EmptyTrainingSet(const std::string& what) : std::runtime_error(what) {}
};

struct NonFiniteLoss : std::runtime_error {
    NonFiniteLoss(int epoch_number, const std::string& what);
    int epoch;
};

inline constexpr double kProbClamp = 1e-7;

/// Adversarial losses from discriminator probabilities, clamped away from
/// {0,1}: disc = -mean(log p_real + log(1-p_fake)), gen = -mean(log p_fake).
std::pair<double, double> cgan_losses(const Eigen::VectorXd& disc_real,
                                      const Eigen::VectorXd& disc_fake);

/// Discriminator objective value and parameter gradients for one batch of
/// real and generated (features, visibility) columns.
std::pair<double, nn::Gradients> discriminator_objective(const nn::MlpParams& disc,
                                                         const Eigen::MatrixXd& real_cols,
                                                         const Eigen::MatrixXd& fake_cols);

/// Non-saturating generator objective: loss and generator gradients for fixed
/// noise z, chaining through a frozen discriminator.
std::pair<double, nn::Gradients> generator_objective(const nn::MlpParams& gen,
                                                     const nn::MlpParams& disc,
                                                     const Eigen::MatrixXd& x_cols,
                                                     const Eigen::MatrixXd& z);

/// Alternating adversarial training; keeps the snapshot with the best
/// validation point-prediction RMSE. Fully determined by config.seed.
CganModel train_cgan(const features::SupervisedSet& train, const features::SupervisedSet& valid,
                     const CganConfig& config);

/// Mean over K noise draws per row, de-normalized to km and clamped at >= 0.
/// K < 0 uses config.prediction_samples.
Eigen::VectorXd predict_point(const CganModel& model, const Eigen::MatrixXd& x_rows, int k = -1);

struct SampleResult {
    Eigen::VectorXd samples;  // raw de-normalized generator outputs, unclamped
    double point = 0;         // clamped mean of the samples
};

SampleResult sample_predictions(const CganModel& model, const Eigen::VectorXd& x_row, int k);

nlohmann::ordered_json config_to_json(const CganConfig& config);
CganConfig config_from_json(const nlohmann::json& j);

nlohmann::ordered_json model_to_json(const CganModel& model);
CganModel model_from_json(const nlohmann::json& j);
void save_model(const std::filesystem::path& path, const CganModel& model);
CganModel load_model(const std::filesystem::path& path);

}  // namespace fognow::cgan
