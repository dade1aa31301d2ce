#include "fognow/baselines.hpp"

namespace fognow::baselines {

namespace {

Eigen::Index vis_block_start(const features::SupervisedSet& set) {
    for (std::size_t i = 0; i < set.spec.variables.size(); ++i) {
        if (set.spec.variables[i] == "vis")
            return static_cast<Eigen::Index>(i) * set.spec.lag_minutes;
    }
    throw VisNotInFeatures();
}

}  // namespace

BaselineForecast persistence(const features::SupervisedSet& set) {
    const Eigen::Index start = vis_block_start(set);
    BaselineForecast out;
    out.method = Method::Per;
    out.lead_minutes = set.spec.lead_minutes;
    out.predictions = set.x.col(start + set.spec.lag_minutes - 1);
    return out;
}

BaselineForecast persistence_window(const features::SupervisedSet& set) {
    const Eigen::Index start = vis_block_start(set);
    BaselineForecast out;
    out.method = Method::PerW;
    out.lead_minutes = set.spec.lead_minutes;
    // sequential oldest-to-newest accumulation; the test oracles assume this order
    out.predictions.resize(set.rows());
    for (Eigen::Index r = 0; r < set.rows(); ++r) {
        double acc = 0;
        for (Eigen::Index j = 0; j < set.spec.lag_minutes; ++j) acc += set.x(r, start + j);
        out.predictions(r) = acc / set.spec.lag_minutes;
    }
    return out;
}

}  // namespace fognow::baselines
