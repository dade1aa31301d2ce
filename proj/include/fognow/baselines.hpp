#pragma once

#include <Eigen/Dense>
#include <stdexcept>

#include "fognow/features.hpp"

namespace fognow::baselines {

enum class Method { Per, PerW };

struct BaselineForecast {
    Method method = Method::Per;
    int lead_minutes = 0;
    Eigen::VectorXd predictions;  // aligned to the supervised rows, km
};

struct VisNotInFeatures : std::runtime_error {
    VisNotInFeatures() : std::runtime_error("vis is not among the lagged variables") {}
};

/// Vis(t+h) = Vis(t): reads the newest lag position of the vis block, so the
/// baseline shares the learned models' data alignment exactly.
BaselineForecast persistence(const features::SupervisedSet& set);

/// Mean of the vis lag window of each row.
BaselineForecast persistence_window(const features::SupervisedSet& set);

}  // namespace fognow::baselines
