#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace fognow::nn {

enum class Activation { Elu, Identity, Sigmoid };

std::string to_string(Activation a);
Activation activation_from_name(std::string_view name);

inline double elu(double v, double alpha = 1.0) {
    return v > 0 ? v : alpha * std::expm1(v);
}

inline double elu_derivative(double v, double alpha = 1.0) {
    return v > 0 ? 1.0 : alpha * std::exp(v);
}

struct Layer {
    Eigen::MatrixXd weights;  // out x in
    Eigen::VectorXd bias;     // out
    Activation activation = Activation::Identity;
};

struct MlpParams {
    std::vector<Layer> layers;

    Eigen::Index input_dim() const { return layers.front().weights.cols(); }
    Eigen::Index output_dim() const { return layers.back().weights.rows(); }
    Eigen::Index parameter_count() const;
};

/// Cached intermediates from one forward pass; columns are samples.
struct Tape {
    Eigen::MatrixXd input;
    std::vector<Eigen::MatrixXd> pre;   // affine outputs per layer
    std::vector<Eigen::MatrixXd> post;  // activated outputs per layer
};

struct LayerGrads {
    Eigen::MatrixXd weights;
    Eigen::VectorXd bias;
};

struct Gradients {
    std::vector<LayerGrads> layers;
    Eigen::MatrixXd input;  // gradient w.r.t. the forward input
};

struct DimensionMismatch : std::runtime_error {
    explicit DimensionMismatch(const std::string& what) : std::runtime_error(what) {}
};

struct ShapeMismatch : std::runtime_error {
    explicit ShapeMismatch(const std::string& what) : std::runtime_error(what) {}
};

struct EmptyArchitecture : std::runtime_error {
    EmptyArchitecture() : std::runtime_error("network needs at least one layer") {}
};

/// Affine-then-activation composition over a batch (columns are samples).
Eigen::MatrixXd forward(const MlpParams& params, const Eigen::MatrixXd& input,
                        Tape* tape = nullptr);
Eigen::VectorXd forward(const MlpParams& params, const Eigen::VectorXd& input,
                        Tape* tape = nullptr);

/// Reverse-mode gradients of sum_j <output_j, output_grad_j> over the batch.
Gradients backward(const MlpParams& params, const Tape& tape,
                   const Eigen::MatrixXd& output_grad);

struct AdamState {
    std::vector<LayerGrads> m;  // first moments
    std::vector<LayerGrads> v;  // second moments
    long long t = 0;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    double learning_rate = 1e-3;
};

AdamState make_adam_state(const MlpParams& params, double learning_rate);

/// One bias-corrected ADAM update, in place.
void adam_step(MlpParams& params, const Gradients& grads, AdamState& state);

/// He-scaled normal weights (variance 2/fan_in), zero biases, seeded.
MlpParams init_params(const std::vector<Eigen::Index>& layer_dims,
                      const std::vector<Activation>& activations, std::uint64_t seed);

nlohmann::ordered_json to_json(const MlpParams& params);
MlpParams mlp_from_json(const nlohmann::json& j);

}  // namespace fognow::nn
