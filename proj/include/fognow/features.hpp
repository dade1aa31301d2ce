#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "fognow/observations.hpp"

namespace fognow::features {

enum class Var { Vis, Wind, Rhw, Dpd, Pr };

std::string to_string(Var v);
std::optional<Var> var_from_name(std::string_view name);
double field(const dataio::ObservationRecord& rec, Var v);

/// Lookback/lead geometry of one supervised dataset. The lag window is the
/// lag_minutes samples at t-lag+1 .. t inclusive; the target sits at t+lead.
struct LagSpec {
    int lag_minutes = 120;
    int lead_minutes = 30;
    std::vector<std::string> variables = {"vis", "wind", "rhw", "dpd"};

    void validate() const;  // throws std::invalid_argument
    Eigen::Index feature_count() const;
};

/// Lagged feature matrix plus aligned targets. Row layout is variable-major:
/// for each variable in spec order, lag_minutes columns, oldest lag first and
/// the anchor minute last.
struct SupervisedSet {
    Eigen::MatrixXd x;
    Eigen::VectorXd y;  // Vis at t + lead, km
    std::vector<timeutil::Minute> t_target;
    LagSpec spec;

    Eigen::Index rows() const { return x.rows(); }
    Eigen::Index cols() const { return x.cols(); }
};

struct NormStats {
    Eigen::VectorXd x_mean;
    Eigen::VectorXd x_std;
    double y_mean = 0.0;
    double y_std = 1.0;
};

enum class RowSplit : std::uint8_t { Train, Purged, Test };

struct SplitLabels {
    std::vector<RowSplit> labels;

    std::vector<Eigen::Index> indices_of(RowSplit which) const;
};

struct LengthMismatch : std::runtime_error {
    LengthMismatch(Eigen::Index a, Eigen::Index b);
};

struct ConstantInput : std::runtime_error {
    ConstantInput() : std::runtime_error("correlation undefined for constant input") {}
};

struct InsufficientData : std::runtime_error {
    explicit InsufficientData(const std::string& what) : std::runtime_error(what) {}
};

struct ConstantColumn : std::runtime_error {
    explicit ConstantColumn(Eigen::Index col);
    Eigen::Index column;
};

struct DegenerateSplit : std::runtime_error {
    explicit DegenerateSplit(const std::string& what) : std::runtime_error(what) {}
};

/// Sample Pearson correlation; symmetric, in [-1, 1].
double pearson_corr(const Eigen::VectorXd& a, const Eigen::VectorXd& b);

/// Candidates whose |corr(candidate(t), vis(t+lead))| >= min_abs_corr, ordered
/// by decreasing |r|. Pairs are aligned within contiguous segments only.
std::vector<std::string> select_features(const dataio::ObservationSeries& series,
                                         const std::vector<std::string>& candidates,
                                         int lead_minutes, double min_abs_corr = 0.3);

/// Emits one row per anchor minute with a full lag window and an in-segment
/// target. Per-segment row count is max(0, n - lag - lead + 1).
SupervisedSet build_lagged(const std::vector<dataio::Segment>& segments,
                           const dataio::ObservationSeries& series, const LagSpec& spec);

/// Column stats over the given rows. Feature columns with zero spread are an
/// error; a constant target keeps unit scale so de-normalization recovers it.
NormStats fit_norm(const Eigen::MatrixXd& x, const Eigen::VectorXd& y);

Eigen::MatrixXd apply_norm(const Eigen::MatrixXd& rows, const NormStats& stats);
Eigen::VectorXd normalize_target(const Eigen::VectorXd& y, const NormStats& stats);
Eigen::VectorXd invert_norm_target(const Eigen::VectorXd& values, const NormStats& stats);

/// Chronological split with a purge band of lag+lead minutes after the last
/// train target so no test lag window touches a train minute.
SplitLabels chrono_split(const SupervisedSet& set, double train_frac = 0.7);

SupervisedSet subset(const SupervisedSet& set, const std::vector<Eigen::Index>& rows);

/// Version-tagged binary cache; round-trips bit-exactly.
void save_set(const std::filesystem::path& path, const SupervisedSet& set);
SupervisedSet load_set(const std::filesystem::path& path);

}  // namespace fognow::features
