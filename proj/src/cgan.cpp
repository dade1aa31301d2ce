#include "fognow/cgan.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>

namespace fognow::cgan {

namespace {

constexpr std::uint64_t kPredictSalt = 0x9e3779b97f4a7c15ULL;
constexpr std::uint64_t kValidSalt = 0xbf58476d1ce4e5b9ULL;

double clamp_prob(double p) { return std::clamp(p, kProbClamp, 1.0 - kProbClamp); }

Eigen::MatrixXd vstack(const Eigen::MatrixXd& top, const Eigen::MatrixXd& bottom) {
    Eigen::MatrixXd out(top.rows() + bottom.rows(), top.cols());
    out.topRows(top.rows()) = top;
    out.bottomRows(bottom.rows()) = bottom;
    return out;
}

}  // namespace

void CganConfig::validate() const {
    if (noise_dim < 1) throw std::invalid_argument("noise_dim must be >= 1");
    if (gen_hidden_layers < 1 || disc_hidden_layers < 1)
        throw std::invalid_argument("hidden layer counts must be >= 1");
    if (gen_hidden_units < 1 || disc_hidden_units < 1)
        throw std::invalid_argument("hidden unit counts must be >= 1");
    if (!(lr_gen > 0) || !(lr_disc > 0)) throw std::invalid_argument("learning rates must be > 0");
    if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
    if (epochs < 1) throw std::invalid_argument("epochs must be >= 1");
    if (disc_steps_per_gen_step < 1)
        throw std::invalid_argument("disc_steps_per_gen_step must be >= 1");
    if (prediction_samples < 1 || valid_samples < 1)
        throw std::invalid_argument("sample counts must be >= 1");
}

NonFiniteLoss::NonFiniteLoss(int epoch_number, const std::string& what)
    : std::runtime_error("non-finite loss at epoch " + std::to_string(epoch_number) + ": " + what),
      epoch(epoch_number) {}

std::pair<double, double> cgan_losses(const Eigen::VectorXd& disc_real,
                                      const Eigen::VectorXd& disc_fake) {
    if (disc_real.size() == 0 || disc_fake.size() == 0) throw EmptyBatch();
    if (disc_real.size() != disc_fake.size())
        throw nn::DimensionMismatch("real/fake batches differ in size");
    double disc_loss = 0, gen_loss = 0;
    for (Eigen::Index i = 0; i < disc_real.size(); ++i) {
        const double pr = clamp_prob(disc_real(i));
        const double pf = clamp_prob(disc_fake(i));
        disc_loss -= std::log(pr) + std::log(1.0 - pf);
        gen_loss -= std::log(pf);
    }
    const double n = static_cast<double>(disc_real.size());
    return {disc_loss / n, gen_loss / n};
}

std::pair<double, nn::Gradients> discriminator_objective(const nn::MlpParams& disc,
                                                          const Eigen::MatrixXd& real_cols,
                                                          const Eigen::MatrixXd& fake_cols) {
    if (real_cols.cols() == 0) throw EmptyBatch();
    if (real_cols.cols() != fake_cols.cols())
        throw nn::DimensionMismatch("real/fake batches differ in size");
    const double batch = static_cast<double>(real_cols.cols());

    nn::Tape tape_real, tape_fake;
    const Eigen::MatrixXd p_real = nn::forward(disc, real_cols, &tape_real);
    const Eigen::MatrixXd p_fake = nn::forward(disc, fake_cols, &tape_fake);

    const auto [disc_loss, gen_loss_unused] =
        cgan_losses(p_real.row(0).transpose(), p_fake.row(0).transpose());
    (void)gen_loss_unused;

    // clamped probabilities sit on a flat region of the loss: zero gradient
    Eigen::MatrixXd grad_real(1, real_cols.cols());
    Eigen::MatrixXd grad_fake(1, fake_cols.cols());
    for (Eigen::Index i = 0; i < real_cols.cols(); ++i) {
        const double pr = p_real(0, i);
        const double pf = p_fake(0, i);
        grad_real(0, i) = (pr > kProbClamp && pr < 1.0 - kProbClamp) ? -1.0 / (batch * pr) : 0.0;
        grad_fake(0, i) =
            (pf > kProbClamp && pf < 1.0 - kProbClamp) ? 1.0 / (batch * (1.0 - pf)) : 0.0;
    }

    nn::Gradients grads = nn::backward(disc, tape_real, grad_real);
    const nn::Gradients fake_grads = nn::backward(disc, tape_fake, grad_fake);
    for (std::size_t l = 0; l < grads.layers.size(); ++l) {
        grads.layers[l].weights += fake_grads.layers[l].weights;
        grads.layers[l].bias += fake_grads.layers[l].bias;
    }
    grads.input.resize(0, 0);  // two separate input batches; not meaningful combined
    return {disc_loss, std::move(grads)};
}

std::pair<double, nn::Gradients> generator_objective(const nn::MlpParams& gen,
                                                     const nn::MlpParams& disc,
                                                     const Eigen::MatrixXd& x_cols,
                                                     const Eigen::MatrixXd& z) {
    if (x_cols.cols() == 0) throw EmptyBatch();
    if (z.cols() != x_cols.cols()) throw nn::DimensionMismatch("noise batch size mismatch");
    const double batch = static_cast<double>(x_cols.cols());

    nn::Tape tape_gen, tape_disc;
    const Eigen::MatrixXd y_hat = nn::forward(gen, vstack(x_cols, z), &tape_gen);
    const Eigen::MatrixXd p_fake = nn::forward(disc, vstack(x_cols, y_hat), &tape_disc);

    double loss = 0;
    Eigen::MatrixXd grad_p(1, x_cols.cols());
    for (Eigen::Index i = 0; i < x_cols.cols(); ++i) {
        const double pf = clamp_prob(p_fake(0, i));
        loss -= std::log(pf);
        grad_p(0, i) = (p_fake(0, i) > kProbClamp && p_fake(0, i) < 1.0 - kProbClamp)
                           ? -1.0 / (batch * pf)
                           : 0.0;
    }
    loss /= batch;

    const nn::Gradients disc_grads = nn::backward(disc, tape_disc, grad_p);
    // only the generated-visibility slot of the discriminator input feeds back
    const Eigen::MatrixXd grad_y_hat = disc_grads.input.bottomRows(1);
    nn::Gradients gen_grads = nn::backward(gen, tape_gen, grad_y_hat);
    return {loss, std::move(gen_grads)};
}

namespace {

// Point estimates in normalized target units: mean over k noise draws per row.
// z consumption is row-major in (row, draw), independent of internal chunking.
Eigen::VectorXd point_estimates_norm(const nn::MlpParams& gen, const Eigen::MatrixXd& x_cols,
                                     int noise_dim, int k, std::uint64_t z_seed) {
    const Eigen::Index n = x_cols.cols();
    const Eigen::Index nf = x_cols.rows();
    std::mt19937_64 rng(z_seed);
    std::normal_distribution<double> normal(0.0, 1.0);

    Eigen::VectorXd out(n);
    const Eigen::Index chunk = std::max<Eigen::Index>(1, 4096 / k);
    for (Eigen::Index start = 0; start < n; start += chunk) {
        const Eigen::Index m = std::min(chunk, n - start);
        Eigen::MatrixXd input(nf + noise_dim, m * k);
        for (Eigen::Index i = 0; i < m; ++i) {
            for (Eigen::Index s = 0; s < k; ++s) {
                const Eigen::Index col = i * k + s;
                input.col(col).head(nf) = x_cols.col(start + i);
                for (int d = 0; d < noise_dim; ++d) input(nf + d, col) = normal(rng);
            }
        }
        const Eigen::MatrixXd y_hat = nn::forward(gen, input);
        for (Eigen::Index i = 0; i < m; ++i)
            out(start + i) = y_hat.row(0).segment(i * k, k).mean();
    }
    return out;
}

double validation_rmse_km(const nn::MlpParams& gen, const Eigen::MatrixXd& x_valid_cols,
                          const Eigen::VectorXd& y_valid_km, const features::NormStats& norm,
                          int noise_dim, int k, std::uint64_t z_seed) {
    const Eigen::VectorXd est =
        point_estimates_norm(gen, x_valid_cols, noise_dim, k, z_seed);
    const Eigen::VectorXd km =
        features::invert_norm_target(est, norm).cwiseMax(0.0);
    return std::sqrt((km - y_valid_km).squaredNorm() / static_cast<double>(km.size()));
}

}  // namespace

CganModel train_cgan(const features::SupervisedSet& train, const features::SupervisedSet& valid,
                     const CganConfig& config) {
    config.validate();
    if (train.rows() == 0) throw EmptyTrainingSet("training set is empty");
    if (valid.rows() == 0) throw EmptyTrainingSet("validation set is empty");
    if (train.cols() != valid.cols())
        throw nn::DimensionMismatch("train/valid feature dimensions differ");

    const Eigen::Index nf = train.cols();
    const Eigen::Index n = train.rows();

    CganModel model;
    model.config = config;
    model.norm = features::fit_norm(train.x, train.y);

    const Eigen::MatrixXd x_train = features::apply_norm(train.x, model.norm).transpose();
    const Eigen::VectorXd y_train = features::normalize_target(train.y, model.norm);
    const Eigen::MatrixXd x_valid = features::apply_norm(valid.x, model.norm).transpose();

    std::mt19937_64 master(config.seed);
    const std::uint64_t gen_seed = master();
    const std::uint64_t disc_seed = master();

    std::vector<Eigen::Index> gen_dims{nf + config.noise_dim};
    std::vector<nn::Activation> gen_acts;
    for (int i = 0; i < config.gen_hidden_layers; ++i) {
        gen_dims.push_back(config.gen_hidden_units);
        gen_acts.push_back(nn::Activation::Elu);
    }
    gen_dims.push_back(1);
    gen_acts.push_back(nn::Activation::Identity);

    std::vector<Eigen::Index> disc_dims{nf + 1};
    std::vector<nn::Activation> disc_acts;
    for (int i = 0; i < config.disc_hidden_layers; ++i) {
        disc_dims.push_back(config.disc_hidden_units);
        disc_acts.push_back(nn::Activation::Elu);
    }
    disc_dims.push_back(1);
    disc_acts.push_back(nn::Activation::Sigmoid);

    model.generator = nn::init_params(gen_dims, gen_acts, gen_seed);
    model.discriminator = nn::init_params(disc_dims, disc_acts, disc_seed);

    nn::AdamState gen_state = nn::make_adam_state(model.generator, config.lr_gen);
    nn::AdamState disc_state = nn::make_adam_state(model.discriminator, config.lr_disc);

    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);

    nn::MlpParams best_gen = model.generator;
    nn::MlpParams best_disc = model.discriminator;
    double best_rmse = std::numeric_limits<double>::infinity();

    const Eigen::Index batch_size = std::min<Eigen::Index>(config.batch_size, n);
    const Eigen::Index n_batches = (n + batch_size - 1) / batch_size;

    for (int epoch = 1; epoch <= config.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), master);

        double epoch_disc_loss = 0, epoch_gen_loss = 0;
        int disc_steps = 0, gen_steps = 0;

        for (Eigen::Index b = 0; b < n_batches; ++b) {
            const Eigen::Index lo = b * batch_size;
            const Eigen::Index sz = std::min(batch_size, n - lo);

            Eigen::MatrixXd xb(nf, sz);
            Eigen::MatrixXd yb(1, sz);
            for (Eigen::Index i = 0; i < sz; ++i) {
                const Eigen::Index r = order[static_cast<std::size_t>(lo + i)];
                xb.col(i) = x_train.col(r);
                yb(0, i) = y_train(r);
            }

            double batch_disc_loss = 0;
            for (int s = 0; s < config.disc_steps_per_gen_step; ++s) {
                Eigen::MatrixXd z(config.noise_dim, sz);
                for (Eigen::Index c = 0; c < sz; ++c)
                    for (int d = 0; d < config.noise_dim; ++d) z(d, c) = normal(master);
                const Eigen::MatrixXd y_hat = nn::forward(model.generator, vstack(xb, z));
                auto [dl, dgrads] = discriminator_objective(model.discriminator, vstack(xb, yb),
                                                            vstack(xb, y_hat));
                nn::adam_step(model.discriminator, dgrads, disc_state);
                batch_disc_loss = dl;
                ++disc_steps;
            }

            Eigen::MatrixXd z(config.noise_dim, sz);
            for (Eigen::Index c = 0; c < sz; ++c)
                for (int d = 0; d < config.noise_dim; ++d) z(d, c) = normal(master);
            auto [gl, ggrads] =
                generator_objective(model.generator, model.discriminator, xb, z);
            nn::adam_step(model.generator, ggrads, gen_state);
            ++gen_steps;

            if (!std::isfinite(batch_disc_loss) || !std::isfinite(gl)) {
                throw NonFiniteLoss(epoch, "disc_loss=" + std::to_string(batch_disc_loss) +
                                               " gen_loss=" + std::to_string(gl) + " at batch " +
                                               std::to_string(b));
            }
            epoch_disc_loss += batch_disc_loss;
            epoch_gen_loss += gl;
        }

        const double valid_rmse = validation_rmse_km(
            model.generator, x_valid, valid.y, model.norm, config.noise_dim, config.valid_samples,
            config.seed ^ (kValidSalt * static_cast<std::uint64_t>(epoch)));
        if (!std::isfinite(valid_rmse)) throw NonFiniteLoss(epoch, "validation RMSE not finite");

        model.training_log.push_back({epoch, epoch_disc_loss / static_cast<double>(n_batches),
                                      epoch_gen_loss / static_cast<double>(n_batches), valid_rmse,
                                      disc_steps, gen_steps});

        if (valid_rmse < best_rmse) {
            best_rmse = valid_rmse;
            best_gen = model.generator;
            best_disc = model.discriminator;
            model.best_epoch = epoch;
        }
    }

    model.generator = std::move(best_gen);
    model.discriminator = std::move(best_disc);
    return model;
}

Eigen::VectorXd predict_point(const CganModel& model, const Eigen::MatrixXd& x_rows, int k) {
    if (x_rows.cols() != model.feature_dim())
        throw nn::DimensionMismatch("feature dimension does not match trained model");
    if (k < 0) k = model.config.prediction_samples;
    if (k < 1) throw std::invalid_argument("prediction sample count must be >= 1");

    const Eigen::MatrixXd x_cols = features::apply_norm(x_rows, model.norm).transpose();
    const Eigen::VectorXd est = point_estimates_norm(
        model.generator, x_cols, model.config.noise_dim, k, model.config.seed ^ kPredictSalt);
    return features::invert_norm_target(est, model.norm).cwiseMax(0.0);
}

SampleResult sample_predictions(const CganModel& model, const Eigen::VectorXd& x_row, int k) {
    if (x_row.size() != model.feature_dim())
        throw nn::DimensionMismatch("feature dimension does not match trained model");
    if (k < 1) throw std::invalid_argument("sample count must be >= 1");

    const Eigen::MatrixXd x_cols =
        features::apply_norm(x_row.transpose(), model.norm).transpose();
    std::mt19937_64 rng(model.config.seed ^ kPredictSalt);
    std::normal_distribution<double> normal(0.0, 1.0);

    Eigen::MatrixXd input(x_cols.rows() + model.config.noise_dim, k);
    for (int s = 0; s < k; ++s) {
        input.col(s).head(x_cols.rows()) = x_cols.col(0);
        for (int d = 0; d < model.config.noise_dim; ++d)
            input(x_cols.rows() + d, s) = normal(rng);
    }
    const Eigen::MatrixXd y_hat = nn::forward(model.generator, input);

    SampleResult result;
    result.samples = features::invert_norm_target(y_hat.row(0).transpose(), model.norm);
    result.point = std::max(0.0, result.samples.mean());
    return result;
}

nlohmann::ordered_json config_to_json(const CganConfig& c) {
    nlohmann::ordered_json j;
    j["noise_dim"] = c.noise_dim;
    j["gen_hidden_layers"] = c.gen_hidden_layers;
    j["gen_hidden_units"] = c.gen_hidden_units;
    j["disc_hidden_layers"] = c.disc_hidden_layers;
    j["disc_hidden_units"] = c.disc_hidden_units;
    j["lr_gen"] = c.lr_gen;
    j["lr_disc"] = c.lr_disc;
    j["batch_size"] = c.batch_size;
    j["epochs"] = c.epochs;
    j["disc_steps_per_gen_step"] = c.disc_steps_per_gen_step;
    j["prediction_samples"] = c.prediction_samples;
    j["valid_samples"] = c.valid_samples;
    j["seed"] = c.seed;
    return j;
}

CganConfig config_from_json(const nlohmann::json& j) {
    CganConfig c;
    c.noise_dim = j.value("noise_dim", c.noise_dim);
    c.gen_hidden_layers = j.value("gen_hidden_layers", c.gen_hidden_layers);
    c.gen_hidden_units = j.value("gen_hidden_units", c.gen_hidden_units);
    c.disc_hidden_layers = j.value("disc_hidden_layers", c.disc_hidden_layers);
    c.disc_hidden_units = j.value("disc_hidden_units", c.disc_hidden_units);
    c.lr_gen = j.value("lr_gen", c.lr_gen);
    c.lr_disc = j.value("lr_disc", c.lr_disc);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.epochs = j.value("epochs", c.epochs);
    c.disc_steps_per_gen_step = j.value("disc_steps_per_gen_step", c.disc_steps_per_gen_step);
    c.prediction_samples = j.value("prediction_samples", c.prediction_samples);
    c.valid_samples = j.value("valid_samples", c.valid_samples);
    c.seed = j.value("seed", c.seed);
    return c;
}

namespace {

nlohmann::ordered_json norm_to_json(const features::NormStats& n) {
    nlohmann::ordered_json j;
    j["x_mean"] = std::vector<double>(n.x_mean.data(), n.x_mean.data() + n.x_mean.size());
    j["x_std"] = std::vector<double>(n.x_std.data(), n.x_std.data() + n.x_std.size());
    j["y_mean"] = n.y_mean;
    j["y_std"] = n.y_std;
    return j;
}

features::NormStats norm_from_json(const nlohmann::json& j) {
    features::NormStats n;
    const auto xm = j.at("x_mean").get<std::vector<double>>();
    const auto xs = j.at("x_std").get<std::vector<double>>();
    n.x_mean = Eigen::Map<const Eigen::VectorXd>(xm.data(), static_cast<Eigen::Index>(xm.size()));
    n.x_std = Eigen::Map<const Eigen::VectorXd>(xs.data(), static_cast<Eigen::Index>(xs.size()));
    n.y_mean = j.at("y_mean").get<double>();
    n.y_std = j.at("y_std").get<double>();
    return n;
}

}  // namespace

nlohmann::ordered_json model_to_json(const CganModel& model) {
    nlohmann::ordered_json j;
    j["format"] = "fognow-cgan";
    j["version"] = 1;
    j["generator"] = nn::to_json(model.generator);
    j["discriminator"] = nn::to_json(model.discriminator);
    j["norm"] = norm_to_json(model.norm);
    j["config"] = config_to_json(model.config);
    j["best_epoch"] = model.best_epoch;
    auto& log = j["training_log"] = nlohmann::ordered_json::array();
    for (const auto& e : model.training_log) {
        nlohmann::ordered_json ej;
        ej["epoch"] = e.epoch;
        ej["disc_loss"] = e.disc_loss;
        ej["gen_loss"] = e.gen_loss;
        ej["valid_rmse_km"] = e.valid_rmse_km;
        ej["disc_steps"] = e.disc_steps;
        ej["gen_steps"] = e.gen_steps;
        log.push_back(std::move(ej));
    }
    return j;
}

CganModel model_from_json(const nlohmann::json& j) {
    if (j.at("format") != "fognow-cgan") throw std::runtime_error("not a cgan model document");
    if (j.at("version") != 1) throw std::runtime_error("unsupported cgan model version");
    CganModel model;
    model.generator = nn::mlp_from_json(j.at("generator"));
    model.discriminator = nn::mlp_from_json(j.at("discriminator"));
    model.norm = norm_from_json(j.at("norm"));
    model.config = config_from_json(j.at("config"));
    model.best_epoch = j.at("best_epoch").get<int>();
    for (const auto& ej : j.at("training_log")) {
        TrainingLogEntry e;
        e.epoch = ej.at("epoch").get<int>();
        e.disc_loss = ej.at("disc_loss").get<double>();
        e.gen_loss = ej.at("gen_loss").get<double>();
        e.valid_rmse_km = ej.at("valid_rmse_km").get<double>();
        e.disc_steps = ej.at("disc_steps").get<int>();
        e.gen_steps = ej.at("gen_steps").get<int>();
        model.training_log.push_back(e);
    }
    return model;
}

void save_model(const std::filesystem::path& path, const CganModel& model) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << model_to_json(model).dump(2) << '\n';
}

CganModel load_model(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    return model_from_json(nlohmann::json::parse(in));
}

}  // namespace fognow::cgan
