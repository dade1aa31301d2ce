#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <random>

#include "fognow/cgan.hpp"

using namespace fognow;
using cgan::CganConfig;
using cgan::CganModel;
using features::SupervisedSet;

namespace {

SupervisedSet make_set(const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
    SupervisedSet set;
    set.x = x;
    set.y = y;
    set.t_target.resize(static_cast<std::size_t>(y.size()));
    for (std::size_t i = 0; i < set.t_target.size(); ++i)
        set.t_target[i] = static_cast<timeutil::Minute>(i);
    set.spec.variables = {"vis"};
    set.spec.lag_minutes = static_cast<int>(x.cols());
    set.spec.lead_minutes = 1;
    return set;
}

// random features, target y = w.x (+ optional noise), chronological halves
std::pair<SupervisedSet, SupervisedSet> linear_task(int n, int n_features, std::uint64_t seed,
                                                    double noise = 0.0) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0, 1);
    Eigen::MatrixXd x(n, n_features);
    Eigen::VectorXd w(n_features);
    for (int i = 0; i < n_features; ++i) w(i) = normal(rng);
    w /= w.norm();
    Eigen::VectorXd y(n);
    for (int r = 0; r < n; ++r) {
        for (int c = 0; c < n_features; ++c) x(r, c) = normal(rng);
        y(r) = x.row(r) * w + noise * normal(rng);
    }
    const int n_train = (n * 5) / 6;
    return {make_set(x.topRows(n_train), y.head(n_train)),
            make_set(x.bottomRows(n - n_train), y.tail(n - n_train))};
}

CganModel zero_generator_model(int n_features) {
    CganModel model;
    model.config = CganConfig{};
    nn::Layer l;
    l.weights = Eigen::MatrixXd::Zero(1, n_features + 1);
    l.bias = Eigen::VectorXd::Zero(1);
    l.activation = nn::Activation::Identity;
    model.generator.layers.push_back(l);
    model.norm.x_mean = Eigen::VectorXd::Zero(n_features);
    model.norm.x_std = Eigen::VectorXd::Ones(n_features);
    model.norm.y_mean = 5.0;
    model.norm.y_std = 2.0;
    return model;
}

}  // namespace

TEST_CASE("cgan_losses analytic values") {
    Eigen::VectorXd half(1);
    half << 0.5;
    const auto [disc_loss, gen_loss] = cgan::cgan_losses(half, half);
    CHECK(disc_loss == doctest::Approx(2.0 * std::log(2.0)).epsilon(1e-12));
    CHECK(gen_loss == doctest::Approx(std::log(2.0)).epsilon(1e-12));
    CHECK(disc_loss == doctest::Approx(1.38629).epsilon(1e-5));
    CHECK(gen_loss == doctest::Approx(0.69315).epsilon(1e-5));
}

TEST_CASE("cgan_losses: perfect discriminator limit after clamping") {
    Eigen::VectorXd ones(2), zeros(2);
    ones << 1.0, 1.0;
    zeros << 0.0, 0.0;
    const auto [disc_loss, gen_loss] = cgan::cgan_losses(ones, zeros);
    CHECK(disc_loss == doctest::Approx(0.0).epsilon(1e-6));
    CHECK(std::isfinite(gen_loss));
    CHECK(gen_loss > 10.0);  // -log(clamp) = -log(1e-7)
}

TEST_CASE("cgan_losses: batch of two equals the scalar-by-scalar mean") {
    Eigen::VectorXd pr(2), pf(2);
    pr << 0.8, 0.6;
    pf << 0.3, 0.45;
    const auto [disc_loss, gen_loss] = cgan::cgan_losses(pr, pf);
    const double d0 = -(std::log(0.8) + std::log(1 - 0.3));
    const double d1 = -(std::log(0.6) + std::log(1 - 0.45));
    const double g0 = -std::log(0.3), g1 = -std::log(0.45);
    CHECK(disc_loss == doctest::Approx(0.5 * (d0 + d1)).epsilon(1e-12));
    CHECK(gen_loss == doctest::Approx(0.5 * (g0 + g1)).epsilon(1e-12));

    CHECK_THROWS_AS(cgan::cgan_losses(Eigen::VectorXd(), Eigen::VectorXd()), cgan::EmptyBatch);
}

TEST_CASE("discriminator outputs stay in the unit interval") {
    std::mt19937_64 rng(40);
    std::normal_distribution<double> normal(0, 1);
    const auto disc = nn::init_params({5, 15, 15, 1},
                                      {nn::Activation::Elu, nn::Activation::Elu,
                                       nn::Activation::Sigmoid},
                                      7);
    for (int trial = 0; trial < 50; ++trial) {
        Eigen::VectorXd in(5);
        for (int i = 0; i < 5; ++i) in(i) = normal(rng) * std::pow(10.0, trial % 6);
        const double p = nn::forward(disc, in)(0);
        CHECK(p >= 0.0);
        CHECK(p <= 1.0);
    }
}

TEST_CASE("training is deterministic by seed") {
    auto [train, valid] = linear_task(160, 4, 909, 0.1);
    CganConfig cfg;
    cfg.epochs = 4;
    cfg.batch_size = 32;
    cfg.seed = 31415;
    const auto a = cgan::train_cgan(train, valid, cfg);
    const auto b = cgan::train_cgan(train, valid, cfg);

    REQUIRE(a.training_log.size() == b.training_log.size());
    for (std::size_t i = 0; i < a.training_log.size(); ++i) {
        CHECK(a.training_log[i].disc_loss == b.training_log[i].disc_loss);
        CHECK(a.training_log[i].gen_loss == b.training_log[i].gen_loss);
        CHECK(a.training_log[i].valid_rmse_km == b.training_log[i].valid_rmse_km);
    }
    CHECK(a.best_epoch == b.best_epoch);
    for (std::size_t l = 0; l < a.generator.layers.size(); ++l) {
        CHECK((a.generator.layers[l].weights.array() == b.generator.layers[l].weights.array())
                  .all());
        CHECK((a.generator.layers[l].bias.array() == b.generator.layers[l].bias.array()).all());
    }
    // a different seed must change the outcome
    cfg.seed = 31416;
    const auto c = cgan::train_cgan(train, valid, cfg);
    CHECK(a.training_log.back().gen_loss != c.training_log.back().gen_loss);
}

TEST_CASE("one epoch performs ceil(n/batch) discriminator and generator steps") {
    auto [train, valid] = linear_task(300, 3, 5150, 0.1);
    REQUIRE(train.rows() == 250);
    CganConfig cfg;
    cfg.epochs = 2;
    cfg.batch_size = 100;
    cfg.seed = 1;
    const auto model = cgan::train_cgan(train, valid, cfg);
    REQUIRE(model.training_log.size() == 2);
    for (const auto& entry : model.training_log) {
        CHECK(entry.disc_steps == 3);  // ceil(250/100)
        CHECK(entry.gen_steps == 3);
    }

    cfg.disc_steps_per_gen_step = 2;
    const auto model2 = cgan::train_cgan(train, valid, cfg);
    CHECK(model2.training_log[0].disc_steps == 6);
    CHECK(model2.training_log[0].gen_steps == 3);
}

TEST_CASE("empty sets are rejected") {
    auto [train, valid] = linear_task(60, 3, 2, 0.1);
    SupervisedSet empty;
    empty.x.resize(0, 3);
    empty.y.resize(0);
    CganConfig cfg;
    cfg.epochs = 1;
    CHECK_THROWS_AS(cgan::train_cgan(empty, valid, cfg), cgan::EmptyTrainingSet);
    CHECK_THROWS_AS(cgan::train_cgan(train, empty, cfg), cgan::EmptyTrainingSet);
}

TEST_CASE("config validation rejects out-of-range values") {
    auto check_bad = [](auto mutate) {
        CganConfig cfg;
        mutate(cfg);
        CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    };
    check_bad([](CganConfig& c) { c.noise_dim = 0; });
    check_bad([](CganConfig& c) { c.batch_size = 0; });
    check_bad([](CganConfig& c) { c.lr_gen = 0.0; });
    check_bad([](CganConfig& c) { c.lr_disc = -1.0; });
    check_bad([](CganConfig& c) { c.prediction_samples = 0; });
    check_bad([](CganConfig& c) { c.epochs = 0; });
    CHECK_NOTHROW(CganConfig{}.validate());
}

TEST_CASE("non-finite loss error carries the epoch") {
    const cgan::NonFiniteLoss err(17, "disc_loss=nan");
    CHECK(err.epoch == 17);
    CHECK(std::string(err.what()).find("17") != std::string::npos);
}

TEST_CASE("constant target: prediction collapses to the constant") {
    std::mt19937_64 rng(70);
    std::normal_distribution<double> normal(0, 1);
    const int n = 1000, nf = 10;
    Eigen::MatrixXd x(n, nf);
    for (int r = 0; r < n; ++r)
        for (int c = 0; c < nf; ++c) x(r, c) = normal(rng);
    const double c = 3.0;
    const Eigen::VectorXd y = Eigen::VectorXd::Constant(n, c);
    const auto train = make_set(x.topRows(750), y.head(750));
    const auto valid = make_set(x.bottomRows(250), y.tail(250));

    CganConfig cfg;
    cfg.epochs = 200;
    cfg.batch_size = 10;
    cfg.seed = 99;
    const auto model = cgan::train_cgan(train, valid, cfg);
    const Eigen::VectorXd pred = cgan::predict_point(model, valid.x);
    const double tol = 0.05 * std::abs(c) + 0.05;
    for (Eigen::Index i = 0; i < pred.size(); ++i) {
        CHECK(std::abs(pred(i) - c) <= tol);
    }
}

TEST_CASE("seeded convergence on a linear task") {
    auto [train, valid] = linear_task(2000, 10, 1234, 0.05);
    CganConfig cfg;
    cfg.epochs = 150;
    cfg.batch_size = 25;
    cfg.seed = 7;
    const auto model = cgan::train_cgan(train, valid, cfg);

    const Eigen::VectorXd pred = cgan::predict_point(model, valid.x);
    // targets may be negative; clamp the reference the same way predictions are
    const Eigen::VectorXd truth = valid.y.cwiseMax(0.0);
    Eigen::VectorXd pred_raw(pred.size());
    for (Eigen::Index i = 0; i < valid.rows(); ++i) {
        pred_raw(i) =
            cgan::sample_predictions(model, Eigen::VectorXd(valid.x.row(i)), 32).samples.mean();
    }
    const double rmse =
        std::sqrt((pred_raw - valid.y).squaredNorm() / static_cast<double>(valid.y.size()));
    const double y_sd = std::sqrt((valid.y.array() - valid.y.mean()).square().sum() /
                                  static_cast<double>(valid.y.size()));
    CHECK(rmse < 0.5 * y_sd);
    for (const auto& e : model.training_log) {
        CHECK(std::isfinite(e.disc_loss));
        CHECK(std::isfinite(e.gen_loss));
    }
}

TEST_CASE("a single generator step at tiny learning rate decreases the loss") {
    std::mt19937_64 rng(808);
    std::normal_distribution<double> normal(0, 1);
    const int nf = 6, batch = 16;
    auto gen = nn::init_params({nf + 1, 15, 15, 1},
                               {nn::Activation::Elu, nn::Activation::Elu,
                                nn::Activation::Identity},
                               21);
    const auto disc = nn::init_params({nf + 1, 15, 1},
                                      {nn::Activation::Elu, nn::Activation::Sigmoid}, 22);
    Eigen::MatrixXd x(nf, batch);
    Eigen::MatrixXd z(1, batch);
    for (int c = 0; c < batch; ++c) {
        for (int r = 0; r < nf; ++r) x(r, c) = normal(rng);
        z(0, c) = normal(rng);
    }
    const auto [loss_before, grads] = cgan::generator_objective(gen, disc, x, z);
    auto state = nn::make_adam_state(gen, 1e-6);
    nn::adam_step(gen, grads, state);
    const auto [loss_after, grads_after] = cgan::generator_objective(gen, disc, x, z);
    CHECK(loss_after < loss_before);
}

TEST_CASE("predict_point: zero generator returns the de-normalized origin") {
    const auto model = zero_generator_model(4);
    Eigen::MatrixXd x(3, 4);
    x << 1, 2, 3, 4, -1, -2, -3, -4, 10, 20, 30, 40;
    for (const int k : {1, 5, 50}) {
        const Eigen::VectorXd pred = cgan::predict_point(model, x, k);
        CHECK((pred.array() == 5.0).all());  // y_mean
    }
    CHECK_THROWS_AS(cgan::predict_point(model, Eigen::MatrixXd::Zero(2, 7)),
                    nn::DimensionMismatch);
}

TEST_CASE("predict_point with the same k is reproducible call to call") {
    auto [train, valid] = linear_task(200, 5, 4242, 0.1);
    CganConfig cfg;
    cfg.epochs = 3;
    cfg.seed = 5;
    const auto model = cgan::train_cgan(train, valid, cfg);
    const Eigen::VectorXd a = cgan::predict_point(model, valid.x, 1);
    const Eigen::VectorXd b = cgan::predict_point(model, valid.x, 1);
    CHECK((a.array() == b.array()).all());
    const Eigen::VectorXd c = cgan::predict_point(model, valid.x, 7);
    const Eigen::VectorXd d = cgan::predict_point(model, valid.x, 7);
    CHECK((c.array() == d.array()).all());
}

TEST_CASE("monte-carlo mean over noise matches the closed form for a linear generator") {
    // generator output in normalized units: a*z + b
    const double a = 0.8, b = 0.3;
    auto model = zero_generator_model(4);
    model.generator.layers[0].weights(0, 4) = a;
    model.generator.layers[0].bias(0) = b;

    Eigen::MatrixXd x(1, 4);
    x << 0.5, -0.5, 1.0, 2.0;
    const int k = 10000;
    const Eigen::VectorXd pred = cgan::predict_point(model, x, k);
    const double expected = model.norm.y_mean + model.norm.y_std * b;
    const double se = std::abs(a) * model.norm.y_std / std::sqrt(static_cast<double>(k));
    CHECK(std::abs(pred(0) - expected) < 3.0 * se);
}

TEST_CASE("sample_predictions: spread, consistency with predict_point, degenerate z") {
    const double a = 0.8, b = 0.3;
    auto model = zero_generator_model(4);
    model.generator.layers[0].weights(0, 4) = a;
    model.generator.layers[0].bias(0) = b;

    Eigen::VectorXd row(4);
    row << 0.1, 0.2, 0.3, 0.4;

    const int k = 100000;
    const auto result = cgan::sample_predictions(model, row, k);
    REQUIRE(result.samples.size() == k);
    const double mean = result.samples.mean();
    const double sd = std::sqrt((result.samples.array() - mean).square().sum() /
                                static_cast<double>(k - 1));
    const double expected_sd = std::abs(a) * model.norm.y_std;
    CHECK(sd > 0.95 * expected_sd);
    CHECK(sd < 1.05 * expected_sd);
    CHECK(result.point == doctest::Approx(std::max(0.0, mean)).epsilon(1e-15));

    // k = 1 equals the k = 1 point prediction before clamping
    const auto one = cgan::sample_predictions(model, row, 1);
    const Eigen::VectorXd point = cgan::predict_point(model, row.transpose(), 1);
    CHECK(one.samples(0) == doctest::Approx(point(0)).epsilon(1e-15));

    // zero weight on z: all samples identical
    model.generator.layers[0].weights(0, 4) = 0.0;
    const auto flat = cgan::sample_predictions(model, row, 32);
    CHECK((flat.samples.array() == flat.samples(0)).all());
}

TEST_CASE("generator input dimension under the default lag spec is 481") {
    features::LagSpec spec;  // 4 variables x 120 lags
    CganConfig cfg;
    CHECK(spec.feature_count() + cfg.noise_dim == 481);
}

TEST_CASE("model file round-trip reproduces predictions exactly") {
    auto [train, valid] = linear_task(180, 4, 31, 0.1);
    CganConfig cfg;
    cfg.epochs = 5;
    cfg.seed = 123;
    const auto model = cgan::train_cgan(train, valid, cfg);

    const auto path = std::filesystem::temp_directory_path() / "fognow_cgan_roundtrip.json";
    cgan::save_model(path, model);
    const auto loaded = cgan::load_model(path);
    std::filesystem::remove(path);

    const Eigen::VectorXd a = cgan::predict_point(model, valid.x);
    const Eigen::VectorXd b = cgan::predict_point(loaded, valid.x);
    CHECK((a.array() == b.array()).all());
    CHECK(loaded.best_epoch == model.best_epoch);
    REQUIRE(loaded.training_log.size() == model.training_log.size());
    CHECK(loaded.training_log.back().valid_rmse_km == model.training_log.back().valid_rmse_km);
}
