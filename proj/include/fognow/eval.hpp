#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "fognow/timeutil.hpp"

namespace fognow::eval {

inline constexpr double kDenseFogThresholdKm = 0.4;

struct LengthMismatch : std::runtime_error {
    LengthMismatch(Eigen::Index a, Eigen::Index b);
};

struct Empty : std::runtime_error {
    Empty() : std::runtime_error("empty input") {}
};

struct ZeroBaseline : std::runtime_error {
    ZeroBaseline() : std::runtime_error("baseline RMSE must be > 0") {}
};

struct InconsistentTestSets : std::runtime_error {
    explicit InconsistentTestSets(const std::string& what) : std::runtime_error(what) {}
};

double rmse(const Eigen::VectorXd& pred, const Eigen::VectorXd& truth);

/// Strata are defined on TRUE visibility: le covers truth <= threshold
/// (inclusive), gt the remainder. An empty stratum is absent, not zero.
struct StratifiedRmse {
    double all = 0;
    std::optional<double> le;
    std::optional<double> gt;
    Eigen::Index n = 0;
    Eigen::Index n_le = 0;
    Eigen::Index n_gt = 0;
};

StratifiedRmse rmse_stratified(const Eigen::VectorXd& pred, const Eigen::VectorXd& truth,
                               double dense_threshold = kDenseFogThresholdKm);

/// 100 * (base - model) / base; positive means the model beats the baseline.
double skill_vs_baseline(double rmse_model, double rmse_base);

double fog_fraction(const Eigen::VectorXd& truth, double threshold = kDenseFogThresholdKm);

struct MethodRow {
    std::string name;
    double rmse_all = 0;
    std::optional<double> rmse_le;
    std::optional<double> rmse_gt;
};

struct SkillEntry {
    std::string method;
    std::string baseline;
    double percent = 0;
};

struct EvalReport {
    std::string visibility_level;  // "sub1km" or "sub10km"
    int lead_minutes = 0;
    Eigen::Index n_test = 0;
    double fog_fraction_le400 = 0;
    std::vector<MethodRow> methods;
    std::vector<SkillEntry> skill;
    nlohmann::ordered_json provenance = nlohmann::ordered_json::object();
};

struct MethodPredictions {
    std::string name;
    Eigen::VectorXd pred;
};

/// Evaluates every method on the identical truth vector and assembles the
/// stratified table plus skill-vs-baseline entries for Per and PerW.
EvalReport build_report(const std::string& visibility_level, int lead_minutes,
                        const Eigen::VectorXd& truth,
                        const std::vector<MethodPredictions>& methods,
                        nlohmann::ordered_json provenance);

/// Assembles a report from already-computed rows (fixture and display path);
/// skill entries are derived from the rows' overall RMSEs.
EvalReport assemble_report(const std::string& visibility_level, int lead_minutes,
                           Eigen::Index n_test, double fog_fraction_le400,
                           const std::vector<MethodRow>& methods,
                           nlohmann::ordered_json provenance);

enum class Stratum { All, Le400, Gt400 };

/// Name of the minimum-RMSE method in the given column, restricted to
/// `among` (all methods when empty). Methods missing the stratum are skipped.
std::string best_method(const EvalReport& report, Stratum stratum,
                        const std::vector<std::string>& among = {});

nlohmann::ordered_json report_to_json(const EvalReport& report);
EvalReport report_from_json(const nlohmann::ordered_json& j);
void write_report(const std::filesystem::path& path, const EvalReport& report);
EvalReport read_report(const std::filesystem::path& path);

/// Plot-ready long-format CSV: t_target,truth_km,pred_km,method.
void write_predictions_csv(std::ostream& out, const std::vector<timeutil::Minute>& t_target,
                           const Eigen::VectorXd& truth, const Eigen::VectorXd& pred,
                           const std::string& method);

/// Fixed-width text rendering of the stratified table, best column values
/// marked with '*'.
std::string render_table(const EvalReport& report);

}  // namespace fognow::eval
