#include "fognow/mlp.hpp"

#include <cmath>
#include <random>

namespace fognow::nn {

std::string to_string(Activation a) {
    switch (a) {
        case Activation::Elu: return "elu";
        case Activation::Identity: return "identity";
        case Activation::Sigmoid: return "sigmoid";
    }
    return "?";
}

Activation activation_from_name(std::string_view name) {
    if (name == "elu") return Activation::Elu;
    if (name == "identity") return Activation::Identity;
    if (name == "sigmoid") return Activation::Sigmoid;
    throw std::invalid_argument("unknown activation '" + std::string(name) + "'");
}

Eigen::Index MlpParams::parameter_count() const {
    Eigen::Index n = 0;
    for (const auto& l : layers) n += l.weights.size() + l.bias.size();
    return n;
}

namespace {

double sigmoid(double z) {
    if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

Eigen::MatrixXd activate(const Eigen::MatrixXd& z, Activation a) {
    switch (a) {
        case Activation::Elu: return z.unaryExpr([](double v) { return elu(v); });
        case Activation::Identity: return z;
        case Activation::Sigmoid: return z.unaryExpr([](double v) { return sigmoid(v); });
    }
    return z;
}

// derivative expressed from the pre-activation
Eigen::MatrixXd activation_grad(const Eigen::MatrixXd& z, Activation a) {
    switch (a) {
        case Activation::Elu:
            return z.unaryExpr([](double v) { return elu_derivative(v); });
        case Activation::Identity: return Eigen::MatrixXd::Ones(z.rows(), z.cols());
        case Activation::Sigmoid:
            return z.unaryExpr([](double v) {
                const double s = sigmoid(v);
                return s * (1.0 - s);
            });
    }
    return Eigen::MatrixXd::Ones(z.rows(), z.cols());
}

}  // namespace

Eigen::MatrixXd forward(const MlpParams& params, const Eigen::MatrixXd& input, Tape* tape) {
    if (params.layers.empty()) throw EmptyArchitecture();
    if (input.rows() != params.input_dim()) {
        throw DimensionMismatch("input has " + std::to_string(input.rows()) +
                                " rows, network expects " + std::to_string(params.input_dim()));
    }
    if (tape) {
        tape->input = input;
        tape->pre.clear();
        tape->post.clear();
        tape->pre.reserve(params.layers.size());
        tape->post.reserve(params.layers.size());
    }
    Eigen::MatrixXd a = input;
    for (const auto& layer : params.layers) {
        Eigen::MatrixXd z = (layer.weights * a).colwise() + layer.bias;
        a = activate(z, layer.activation);
        if (tape) {
            tape->pre.push_back(std::move(z));
            tape->post.push_back(a);
        }
    }
    return a;
}

Eigen::VectorXd forward(const MlpParams& params, const Eigen::VectorXd& input, Tape* tape) {
    return forward(params, Eigen::MatrixXd(input), tape).col(0);
}

Gradients backward(const MlpParams& params, const Tape& tape,
                   const Eigen::MatrixXd& output_grad) {
    const std::size_t n_layers = params.layers.size();
    if (tape.pre.size() != n_layers)
        throw DimensionMismatch("tape does not match network depth");
    if (output_grad.rows() != params.output_dim() || output_grad.cols() != tape.input.cols())
        throw DimensionMismatch("output_grad shape does not match forward pass");

    Gradients grads;
    grads.layers.resize(n_layers);
    Eigen::MatrixXd delta = output_grad;
    for (std::size_t li = n_layers; li-- > 0;) {
        const auto& layer = params.layers[li];
        const Eigen::MatrixXd dz =
            delta.cwiseProduct(activation_grad(tape.pre[li], layer.activation));
        const Eigen::MatrixXd& below = li == 0 ? tape.input : tape.post[li - 1];
        grads.layers[li].weights.noalias() = dz * below.transpose();
        grads.layers[li].bias = dz.rowwise().sum();
        delta.noalias() = layer.weights.transpose() * dz;
    }
    grads.input = std::move(delta);
    return grads;
}

AdamState make_adam_state(const MlpParams& params, double learning_rate) {
    AdamState state;
    state.learning_rate = learning_rate;
    state.m.resize(params.layers.size());
    state.v.resize(params.layers.size());
    for (std::size_t i = 0; i < params.layers.size(); ++i) {
        const auto& l = params.layers[i];
        state.m[i].weights = Eigen::MatrixXd::Zero(l.weights.rows(), l.weights.cols());
        state.m[i].bias = Eigen::VectorXd::Zero(l.bias.size());
        state.v[i] = state.m[i];
    }
    return state;
}

namespace {

template <typename T>
void adam_update(T& theta, T& m, T& v, const T& g, const AdamState& s, double bc1, double bc2) {
    m = s.beta1 * m + (1.0 - s.beta1) * g;
    v = (s.beta2 * v.array() + (1.0 - s.beta2) * g.array().square()).matrix();
    theta.array() -=
        s.learning_rate * (m.array() / bc1) / ((v.array() / bc2).sqrt() + s.epsilon);
}

}  // namespace

void adam_step(MlpParams& params, const Gradients& grads, AdamState& state) {
    if (grads.layers.size() != params.layers.size() || state.m.size() != params.layers.size())
        throw ShapeMismatch("gradient/state layer count does not match parameters");
    if (!(state.learning_rate > 0)) throw std::invalid_argument("learning rate must be positive");

    state.t += 1;
    const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.t));
    const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.t));

    for (std::size_t i = 0; i < params.layers.size(); ++i) {
        auto& layer = params.layers[i];
        const auto& g = grads.layers[i];
        if (g.weights.rows() != layer.weights.rows() || g.weights.cols() != layer.weights.cols() ||
            g.bias.size() != layer.bias.size())
            throw ShapeMismatch("gradient shape does not match layer " + std::to_string(i));

        adam_update(layer.weights, state.m[i].weights, state.v[i].weights, g.weights, state, bc1,
                    bc2);
        adam_update(layer.bias, state.m[i].bias, state.v[i].bias, g.bias, state, bc1, bc2);
    }
}

MlpParams init_params(const std::vector<Eigen::Index>& layer_dims,
                      const std::vector<Activation>& activations, std::uint64_t seed) {
    if (layer_dims.size() < 2) throw EmptyArchitecture();
    if (activations.size() != layer_dims.size() - 1)
        throw ShapeMismatch("need one activation per layer");

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);

    MlpParams params;
    params.layers.resize(layer_dims.size() - 1);
    for (std::size_t i = 0; i + 1 < layer_dims.size(); ++i) {
        const Eigen::Index fan_in = layer_dims[i];
        const Eigen::Index fan_out = layer_dims[i + 1];
        if (fan_in < 1 || fan_out < 1) throw ShapeMismatch("layer dimensions must be positive");
        const double scale = std::sqrt(2.0 / static_cast<double>(fan_in));
        auto& layer = params.layers[i];
        layer.weights.resize(fan_out, fan_in);
        for (Eigen::Index r = 0; r < fan_out; ++r) {
            for (Eigen::Index c = 0; c < fan_in; ++c) layer.weights(r, c) = scale * normal(rng);
        }
        layer.bias = Eigen::VectorXd::Zero(fan_out);
        layer.activation = activations[i];
    }
    return params;
}

nlohmann::ordered_json to_json(const MlpParams& params) {
    nlohmann::ordered_json j;
    j["format"] = "fognow-mlp";
    j["version"] = 1;
    auto& layers = j["layers"] = nlohmann::ordered_json::array();
    for (const auto& l : params.layers) {
        nlohmann::ordered_json lj;
        lj["activation"] = to_string(l.activation);
        lj["out"] = l.weights.rows();
        lj["in"] = l.weights.cols();
        auto& w = lj["weights"] = nlohmann::ordered_json::array();
        for (Eigen::Index r = 0; r < l.weights.rows(); ++r) {
            for (Eigen::Index c = 0; c < l.weights.cols(); ++c) w.push_back(l.weights(r, c));
        }
        auto& b = lj["bias"] = nlohmann::ordered_json::array();
        for (Eigen::Index i = 0; i < l.bias.size(); ++i) b.push_back(l.bias(i));
        layers.push_back(std::move(lj));
    }
    return j;
}

MlpParams mlp_from_json(const nlohmann::json& j) {
    if (j.at("format") != "fognow-mlp") throw std::runtime_error("not an mlp document");
    if (j.at("version") != 1) throw std::runtime_error("unsupported mlp version");
    MlpParams params;
    for (const auto& lj : j.at("layers")) {
        Layer l;
        l.activation = activation_from_name(lj.at("activation").get<std::string>());
        const Eigen::Index out = lj.at("out").get<Eigen::Index>();
        const Eigen::Index in = lj.at("in").get<Eigen::Index>();
        const auto& w = lj.at("weights");
        const auto& b = lj.at("bias");
        if (static_cast<Eigen::Index>(w.size()) != out * in ||
            static_cast<Eigen::Index>(b.size()) != out)
            throw std::runtime_error("mlp layer size mismatch");
        l.weights.resize(out, in);
        std::size_t k = 0;
        for (Eigen::Index r = 0; r < out; ++r) {
            for (Eigen::Index c = 0; c < in; ++c) l.weights(r, c) = w[k++].get<double>();
        }
        l.bias.resize(out);
        for (Eigen::Index i = 0; i < out; ++i) l.bias(i) = b[static_cast<std::size_t>(i)].get<double>();
        params.layers.push_back(std::move(l));
    }
    if (params.layers.empty()) throw EmptyArchitecture();
    return params;
}

}  // namespace fognow::nn
