#include "fognow/gbdt.hpp"

#include <algorithm>
#include <fstream>
#include <limits>
#include <numeric>

namespace fognow::gbdt {

void GbdtConfig::validate() const {
    if (n_rounds < 1) throw std::invalid_argument("n_rounds must be >= 1");
    if (!(learning_rate > 0.0 && learning_rate <= 1.0))
        throw std::invalid_argument("learning_rate must be in (0, 1]");
    if (max_depth < 1) throw std::invalid_argument("max_depth must be >= 1");
    if (!(lambda >= 0)) throw std::invalid_argument("lambda must be >= 0");
    if (!(gamma >= 0)) throw std::invalid_argument("gamma must be >= 0");
    if (!(min_child_weight >= 0)) throw std::invalid_argument("min_child_weight must be >= 0");
    if (early_stopping_rounds < 1)
        throw std::invalid_argument("early_stopping_rounds must be >= 1");
}

double RegressionTree::leaf_value(const Eigen::Ref<const Eigen::RowVectorXd>& row) const {
    int node = 0;
    while (!nodes[static_cast<std::size_t>(node)].is_leaf()) {
        const TreeNode& n = nodes[static_cast<std::size_t>(node)];
        node = row(n.feature) < n.threshold ? n.left : n.right;
    }
    return nodes[static_cast<std::size_t>(node)].weight;
}

namespace {

double rmse_of(const Eigen::VectorXd& pred, const Eigen::VectorXd& truth) {
    return std::sqrt((pred - truth).squaredNorm() / static_cast<double>(truth.size()));
}

struct NodeStats {
    int node = -1;
    double grad_sum = 0;
    double hess_sum = 0;
    // chosen split
    double best_gain = -std::numeric_limits<double>::infinity();
    int best_feature = -1;
    double best_threshold = 0;
    double best_grad_left = 0;
    double best_hess_left = 0;
    // running scan state for the current feature
    double scan_grad = 0;
    double scan_hess = 0;
    double scan_last = 0;
    bool scan_has_last = false;
};

double split_gain(double gl, double hl, double gr, double hr, double lambda) {
    const double g = gl + gr;
    const double h = hl + hr;
    return 0.5 * (gl * gl / (hl + lambda) + gr * gr / (hr + lambda) - g * g / (h + lambda));
}

RegressionTree build_tree(const Eigen::MatrixXd& x, const Eigen::VectorXd& grad,
                          const std::vector<std::vector<std::int32_t>>& sorted_idx,
                          const GbdtConfig& cfg) {
    const Eigen::Index n = x.rows();
    const Eigen::Index n_features = x.cols();

    RegressionTree tree;
    tree.nodes.emplace_back();

    std::vector<int> node_of_row(static_cast<std::size_t>(n), 0);
    std::vector<NodeStats> active(1);
    active[0].node = 0;
    active[0].grad_sum = grad.sum();
    active[0].hess_sum = static_cast<double>(n);

    std::vector<int> slot_of_node{0};  // node index -> slot in `active`, -1 if closed

    for (int depth = 0; depth < cfg.max_depth && !active.empty(); ++depth) {
        for (Eigen::Index f = 0; f < n_features; ++f) {
            for (auto& a : active) {
                a.scan_grad = 0;
                a.scan_hess = 0;
                a.scan_has_last = false;
            }
            for (const std::int32_t r : sorted_idx[static_cast<std::size_t>(f)]) {
                const int slot = slot_of_node[static_cast<std::size_t>(node_of_row[static_cast<std::size_t>(r)])];
                if (slot < 0) continue;
                NodeStats& a = active[static_cast<std::size_t>(slot)];
                const double v = x(r, f);
                if (a.scan_has_last && v != a.scan_last) {
                    const double hr = a.hess_sum - a.scan_hess;
                    if (a.scan_hess >= cfg.min_child_weight && hr >= cfg.min_child_weight) {
                        const double gain = split_gain(a.scan_grad, a.scan_hess,
                                                       a.grad_sum - a.scan_grad, hr, cfg.lambda);
                        // strict > keeps the lowest feature index / lowest
                        // threshold on exact gain ties
                        if (gain > a.best_gain) {
                            a.best_gain = gain;
                            a.best_feature = static_cast<int>(f);
                            a.best_threshold = 0.5 * (a.scan_last + v);
                            a.best_grad_left = a.scan_grad;
                            a.best_hess_left = a.scan_hess;
                        }
                    }
                }
                a.scan_grad += grad(r);
                a.scan_hess += 1.0;
                a.scan_last = v;
                a.scan_has_last = true;
            }
        }

        std::vector<NodeStats> next_active;
        for (const auto& a : active) {
            slot_of_node[static_cast<std::size_t>(a.node)] = -1;
            if (a.best_feature >= 0 && a.best_gain > cfg.gamma) {
                const int left_index = static_cast<int>(tree.nodes.size());
                tree.nodes.emplace_back();
                tree.nodes.emplace_back();
                auto& node = tree.nodes[static_cast<std::size_t>(a.node)];
                node.feature = a.best_feature;
                node.threshold = a.best_threshold;
                node.left = left_index;
                node.right = left_index + 1;
                slot_of_node.push_back(static_cast<int>(next_active.size()));
                NodeStats left;
                left.node = node.left;
                left.grad_sum = a.best_grad_left;
                left.hess_sum = a.best_hess_left;
                next_active.push_back(left);
                slot_of_node.push_back(static_cast<int>(next_active.size()));
                NodeStats right;
                right.node = node.right;
                right.grad_sum = a.grad_sum - a.best_grad_left;
                right.hess_sum = a.hess_sum - a.best_hess_left;
                next_active.push_back(right);
            } else {
                tree.nodes[static_cast<std::size_t>(a.node)].weight =
                    -a.grad_sum / (a.hess_sum + cfg.lambda);
            }
        }

        if (!next_active.empty()) {
            for (Eigen::Index r = 0; r < n; ++r) {
                const auto& node = tree.nodes[static_cast<std::size_t>(node_of_row[static_cast<std::size_t>(r)])];
                if (node.is_leaf()) continue;
                node_of_row[static_cast<std::size_t>(r)] =
                    x(r, node.feature) < node.threshold ? node.left : node.right;
            }
        }
        active = std::move(next_active);
    }

    // depth limit reached: finalize whatever is still open
    for (const auto& a : active) {
        tree.nodes[static_cast<std::size_t>(a.node)].weight =
            -a.grad_sum / (a.hess_sum + cfg.lambda);
    }
    return tree;
}

}  // namespace

GbdtModel fit_gbdt(const features::SupervisedSet& train, const features::SupervisedSet& valid,
                   const GbdtConfig& config) {
    config.validate();
    const Eigen::Index n = train.rows();
    if (n == 0) throw EmptyTrainingSet();
    if (!train.x.allFinite() || !train.y.allFinite())
        throw std::invalid_argument("training data contains non-finite values");
    if (valid.rows() > 0 && valid.cols() != train.cols())
        throw DimensionMismatch("train/valid feature dimensions differ");

    GbdtModel model;
    model.config = config;
    model.n_features = train.cols();
    model.base_score =
        std::isnan(config.base_score) ? train.y.mean() : config.base_score;

    if (train.y.maxCoeff() == train.y.minCoeff()) {
        model.constant_target = true;
        model.best_round = 0;
        return model;
    }

    std::vector<std::vector<std::int32_t>> sorted_idx(static_cast<std::size_t>(train.cols()));
    for (Eigen::Index f = 0; f < train.cols(); ++f) {
        auto& idx = sorted_idx[static_cast<std::size_t>(f)];
        idx.resize(static_cast<std::size_t>(n));
        std::iota(idx.begin(), idx.end(), 0);
        std::sort(idx.begin(), idx.end(), [&](std::int32_t a, std::int32_t b) {
            const double va = train.x(a, f), vb = train.x(b, f);
            return va < vb || (va == vb && a < b);
        });
    }

    Eigen::VectorXd pred = Eigen::VectorXd::Constant(n, model.base_score);
    Eigen::VectorXd pred_valid = Eigen::VectorXd::Constant(valid.rows(), model.base_score);

    const bool have_valid = valid.rows() > 0;
    double best_valid = std::numeric_limits<double>::infinity();
    int best_round = 0;

    for (int round = 1; round <= config.n_rounds; ++round) {
        const Eigen::VectorXd grad = pred - train.y;
        RegressionTree tree = build_tree(train.x, grad, sorted_idx, config);

        for (Eigen::Index r = 0; r < n; ++r)
            pred(r) += config.learning_rate * tree.leaf_value(train.x.row(r));
        for (Eigen::Index r = 0; r < valid.rows(); ++r)
            pred_valid(r) += config.learning_rate * tree.leaf_value(valid.x.row(r));

        model.trees.push_back(std::move(tree));
        model.train_rmse_per_round.push_back(rmse_of(pred, train.y));

        if (have_valid) {
            const double vr = rmse_of(pred_valid, valid.y);
            model.valid_rmse_per_round.push_back(vr);
            if (vr < best_valid) {
                best_valid = vr;
                best_round = round;
            } else if (round - best_round >= config.early_stopping_rounds) {
                break;
            }
        }
    }

    model.best_round = have_valid ? best_round : static_cast<int>(model.trees.size());
    return model;
}

Eigen::VectorXd predict_gbdt(const GbdtModel& model, const Eigen::MatrixXd& x_rows) {
    if (x_rows.cols() != model.n_features)
        throw DimensionMismatch("feature count " + std::to_string(x_rows.cols()) +
                                " does not match trained model (" +
                                std::to_string(model.n_features) + ")");
    Eigen::VectorXd out = Eigen::VectorXd::Constant(x_rows.rows(), model.base_score);
    const int used = std::min<int>(model.best_round, static_cast<int>(model.trees.size()));
    for (int t = 0; t < used; ++t) {
        const auto& tree = model.trees[static_cast<std::size_t>(t)];
        for (Eigen::Index r = 0; r < x_rows.rows(); ++r)
            out(r) += model.config.learning_rate * tree.leaf_value(x_rows.row(r));
    }
    return out.cwiseMax(0.0);
}

nlohmann::ordered_json config_to_json(const GbdtConfig& config) {
    nlohmann::ordered_json cj;
    cj["n_rounds"] = config.n_rounds;
    cj["learning_rate"] = config.learning_rate;
    cj["max_depth"] = config.max_depth;
    cj["min_child_weight"] = config.min_child_weight;
    cj["lambda"] = config.lambda;
    cj["gamma"] = config.gamma;
    cj["base_score"] = std::isnan(config.base_score)
                           ? nlohmann::ordered_json(nullptr)
                           : nlohmann::ordered_json(config.base_score);
    cj["early_stopping_rounds"] = config.early_stopping_rounds;
    cj["seed"] = config.seed;
    return cj;
}

GbdtConfig config_from_json(const nlohmann::json& cj) {
    GbdtConfig config;
    config.n_rounds = cj.value("n_rounds", config.n_rounds);
    config.learning_rate = cj.value("learning_rate", config.learning_rate);
    config.max_depth = cj.value("max_depth", config.max_depth);
    config.min_child_weight = cj.value("min_child_weight", config.min_child_weight);
    config.lambda = cj.value("lambda", config.lambda);
    config.gamma = cj.value("gamma", config.gamma);
    if (cj.contains("base_score") && !cj.at("base_score").is_null())
        config.base_score = cj.at("base_score").get<double>();
    config.early_stopping_rounds = cj.value("early_stopping_rounds", config.early_stopping_rounds);
    config.seed = cj.value("seed", config.seed);
    return config;
}

nlohmann::ordered_json model_to_json(const GbdtModel& model) {
    nlohmann::ordered_json j;
    j["format"] = "fognow-gbdt";
    j["version"] = 1;
    j["base_score"] = model.base_score;
    j["n_features"] = model.n_features;
    j["best_round"] = model.best_round;
    j["constant_target"] = model.constant_target;
    j["config"] = config_to_json(model.config);

    auto& trees = j["trees"] = nlohmann::ordered_json::array();
    for (const auto& tree : model.trees) {
        auto tj = nlohmann::ordered_json::array();
        for (const auto& node : tree.nodes) {
            nlohmann::ordered_json nj;
            nj["feature"] = node.feature;
            nj["threshold"] = node.threshold;
            nj["default_left"] = node.default_left;
            nj["left"] = node.left;
            nj["right"] = node.right;
            nj["weight"] = node.weight;
            tj.push_back(std::move(nj));
        }
        trees.push_back(std::move(tj));
    }
    j["train_rmse_per_round"] = model.train_rmse_per_round;
    j["valid_rmse_per_round"] = model.valid_rmse_per_round;
    return j;
}

GbdtModel model_from_json(const nlohmann::json& j) {
    if (j.at("format") != "fognow-gbdt") throw std::runtime_error("not a gbdt model document");
    if (j.at("version") != 1) throw std::runtime_error("unsupported gbdt model version");
    GbdtModel model;
    model.base_score = j.at("base_score").get<double>();
    model.n_features = j.at("n_features").get<Eigen::Index>();
    model.best_round = j.at("best_round").get<int>();
    model.constant_target = j.at("constant_target").get<bool>();

    model.config = config_from_json(j.at("config"));

    for (const auto& tj : j.at("trees")) {
        RegressionTree tree;
        for (const auto& nj : tj) {
            TreeNode node;
            node.feature = nj.at("feature").get<int>();
            node.threshold = nj.at("threshold").get<double>();
            node.default_left = nj.at("default_left").get<bool>();
            node.left = nj.at("left").get<int>();
            node.right = nj.at("right").get<int>();
            node.weight = nj.at("weight").get<double>();
            tree.nodes.push_back(node);
        }
        model.trees.push_back(std::move(tree));
    }
    model.train_rmse_per_round = j.at("train_rmse_per_round").get<std::vector<double>>();
    model.valid_rmse_per_round = j.at("valid_rmse_per_round").get<std::vector<double>>();
    return model;
}

void save_model(const std::filesystem::path& path, const GbdtModel& model) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << model_to_json(model).dump(2) << '\n';
}

GbdtModel load_model(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    return model_from_json(nlohmann::json::parse(in));
}

}  // namespace fognow::gbdt
