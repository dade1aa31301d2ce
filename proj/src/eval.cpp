#include "fognow/eval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <ostream>
#include <sstream>

#include "fognow/util.hpp"

namespace fognow::eval {

LengthMismatch::LengthMismatch(Eigen::Index a, Eigen::Index b)
    : std::runtime_error("length mismatch: " + std::to_string(a) + " vs " + std::to_string(b)) {}

double rmse(const Eigen::VectorXd& pred, const Eigen::VectorXd& truth) {
    if (pred.size() != truth.size()) throw LengthMismatch(pred.size(), truth.size());
    if (pred.size() == 0) throw Empty();
    return std::sqrt((pred - truth).squaredNorm() / static_cast<double>(pred.size()));
}

StratifiedRmse rmse_stratified(const Eigen::VectorXd& pred, const Eigen::VectorXd& truth,
                               double dense_threshold) {
    if (pred.size() != truth.size()) throw LengthMismatch(pred.size(), truth.size());
    if (pred.size() == 0) throw Empty();

    StratifiedRmse out;
    out.n = pred.size();
    double sq_all = 0, sq_le = 0, sq_gt = 0;
    for (Eigen::Index i = 0; i < pred.size(); ++i) {
        const double d = pred(i) - truth(i);
        sq_all += d * d;
        if (truth(i) <= dense_threshold) {
            sq_le += d * d;
            ++out.n_le;
        } else {
            sq_gt += d * d;
            ++out.n_gt;
        }
    }
    out.all = std::sqrt(sq_all / static_cast<double>(out.n));
    if (out.n_le > 0) out.le = std::sqrt(sq_le / static_cast<double>(out.n_le));
    if (out.n_gt > 0) out.gt = std::sqrt(sq_gt / static_cast<double>(out.n_gt));
    return out;
}

double skill_vs_baseline(double rmse_model, double rmse_base) {
    if (!(rmse_base > 0)) throw ZeroBaseline();
    return 100.0 * (rmse_base - rmse_model) / rmse_base;
}

double fog_fraction(const Eigen::VectorXd& truth, double threshold) {
    if (truth.size() == 0) throw Empty();
    const auto count = (truth.array() <= threshold).count();
    return static_cast<double>(count) / static_cast<double>(truth.size());
}

namespace {

std::vector<SkillEntry> derive_skill(const std::vector<MethodRow>& rows) {
    std::vector<SkillEntry> out;
    for (const auto& row : rows) {
        for (const char* baseline : {"Per", "PerW"}) {
            if (row.name == baseline) continue;
            for (const auto& base_row : rows) {
                if (base_row.name != baseline) continue;
                out.push_back({row.name, baseline,
                               skill_vs_baseline(row.rmse_all, base_row.rmse_all)});
            }
        }
    }
    return out;
}

}  // namespace

EvalReport assemble_report(const std::string& visibility_level, int lead_minutes,
                           Eigen::Index n_test, double fog_fraction_le400,
                           const std::vector<MethodRow>& methods,
                           nlohmann::ordered_json provenance) {
    if (methods.empty()) throw Empty();
    EvalReport report;
    report.visibility_level = visibility_level;
    report.lead_minutes = lead_minutes;
    report.n_test = n_test;
    report.fog_fraction_le400 = fog_fraction_le400;
    report.methods = methods;
    report.skill = derive_skill(methods);
    report.provenance = std::move(provenance);
    return report;
}

EvalReport build_report(const std::string& visibility_level, int lead_minutes,
                        const Eigen::VectorXd& truth,
                        const std::vector<MethodPredictions>& methods,
                        nlohmann::ordered_json provenance) {
    if (methods.empty()) throw Empty();
    if (truth.size() == 0) throw Empty();
    std::vector<MethodRow> rows;
    for (const auto& m : methods) {
        if (m.pred.size() != truth.size()) {
            throw InconsistentTestSets("method '" + m.name + "' evaluated on " +
                                       std::to_string(m.pred.size()) + " rows, truth has " +
                                       std::to_string(truth.size()));
        }
        const StratifiedRmse s = rmse_stratified(m.pred, truth);
        rows.push_back({m.name, s.all, s.le, s.gt});
    }
    return assemble_report(visibility_level, lead_minutes, truth.size(), fog_fraction(truth),
                           rows, std::move(provenance));
}

std::string best_method(const EvalReport& report, Stratum stratum,
                        const std::vector<std::string>& among) {
    const auto value_of = [&](const MethodRow& row) -> std::optional<double> {
        switch (stratum) {
            case Stratum::All: return row.rmse_all;
            case Stratum::Le400: return row.rmse_le;
            case Stratum::Gt400: return row.rmse_gt;
        }
        return std::nullopt;
    };
    std::string best;
    double best_rmse = std::numeric_limits<double>::infinity();
    for (const auto& row : report.methods) {
        if (!among.empty() &&
            std::find(among.begin(), among.end(), row.name) == among.end())
            continue;
        const auto v = value_of(row);
        if (v && *v < best_rmse) {
            best_rmse = *v;
            best = row.name;
        }
    }
    if (best.empty()) throw Empty();
    return best;
}

namespace {

nlohmann::ordered_json opt_to_json(const std::optional<double>& v) {
    return v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(nullptr);
}

std::optional<double> opt_from_json(const nlohmann::ordered_json& j) {
    if (j.is_null()) return std::nullopt;
    return j.get<double>();
}

}  // namespace

nlohmann::ordered_json report_to_json(const EvalReport& report) {
    nlohmann::ordered_json j;
    j["visibility_level"] = report.visibility_level;
    j["lead_minutes"] = report.lead_minutes;
    j["n_test"] = report.n_test;
    j["fog_fraction_le400"] = report.fog_fraction_le400;
    auto& methods = j["methods"] = nlohmann::ordered_json::array();
    for (const auto& m : report.methods) {
        nlohmann::ordered_json mj;
        mj["name"] = m.name;
        mj["rmse_all_km"] = m.rmse_all;
        mj["rmse_le400_km"] = opt_to_json(m.rmse_le);
        mj["rmse_gt400_km"] = opt_to_json(m.rmse_gt);
        methods.push_back(std::move(mj));
    }
    auto& skill = j["skill"] = nlohmann::ordered_json::array();
    for (const auto& s : report.skill) {
        nlohmann::ordered_json sj;
        sj["method"] = s.method;
        sj["baseline"] = s.baseline;
        sj["percent"] = s.percent;
        skill.push_back(std::move(sj));
    }
    j["provenance"] = report.provenance;
    return j;
}

EvalReport report_from_json(const nlohmann::ordered_json& j) {
    EvalReport report;
    report.visibility_level = j.at("visibility_level").get<std::string>();
    report.lead_minutes = j.at("lead_minutes").get<int>();
    report.n_test = j.at("n_test").get<Eigen::Index>();
    report.fog_fraction_le400 = j.at("fog_fraction_le400").get<double>();
    for (const auto& mj : j.at("methods")) {
        MethodRow m;
        m.name = mj.at("name").get<std::string>();
        m.rmse_all = mj.at("rmse_all_km").get<double>();
        m.rmse_le = opt_from_json(mj.at("rmse_le400_km"));
        m.rmse_gt = opt_from_json(mj.at("rmse_gt400_km"));
        report.methods.push_back(std::move(m));
    }
    for (const auto& sj : j.at("skill")) {
        SkillEntry s;
        s.method = sj.at("method").get<std::string>();
        s.baseline = sj.at("baseline").get<std::string>();
        s.percent = sj.at("percent").get<double>();
        report.skill.push_back(std::move(s));
    }
    report.provenance = j.at("provenance");
    return report;
}

void write_report(const std::filesystem::path& path, const EvalReport& report) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << report_to_json(report).dump(2) << '\n';
}

EvalReport read_report(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    return report_from_json(nlohmann::ordered_json::parse(in));
}

void write_predictions_csv(std::ostream& out, const std::vector<timeutil::Minute>& t_target,
                           const Eigen::VectorXd& truth, const Eigen::VectorXd& pred,
                           const std::string& method) {
    if (truth.size() != pred.size()) throw LengthMismatch(truth.size(), pred.size());
    if (static_cast<Eigen::Index>(t_target.size()) != truth.size())
        throw LengthMismatch(static_cast<Eigen::Index>(t_target.size()), truth.size());
    out << "t_target,truth_km,pred_km,method\n";
    for (Eigen::Index i = 0; i < truth.size(); ++i) {
        out << timeutil::format_iso_minute(t_target[static_cast<std::size_t>(i)]) << ','
            << util::format_double(truth(i)) << ',' << util::format_double(pred(i)) << ','
            << method << '\n';
    }
}

std::string render_table(const EvalReport& report) {
    std::ostringstream os;
    os << "visibility level: " << report.visibility_level
       << "   lead: " << report.lead_minutes << " min   n_test: " << report.n_test
       << "   fog fraction (<=400 m): " << std::fixed << std::setprecision(3)
       << report.fog_fraction_le400 << "\n\n";
    os << std::left << std::setw(10) << "method" << std::right << std::setw(12) << "all"
       << std::setw(12) << "<=400 m" << std::setw(12) << ">400 m" << "\n";

    const auto best_of = [&](Stratum s) -> std::string {
        try {
            return best_method(report, s);
        } catch (const Empty&) {
            return {};
        }
    };
    const std::string best_all = best_of(Stratum::All);
    const std::string best_le = best_of(Stratum::Le400);
    const std::string best_gt = best_of(Stratum::Gt400);

    const auto cell = [](const std::optional<double>& v, bool star) {
        if (!v) return std::string("-");
        std::ostringstream c;
        c << std::fixed << std::setprecision(3) << *v;
        if (star) c << '*';
        return c.str();
    };
    for (const auto& m : report.methods) {
        os << std::left << std::setw(10) << m.name << std::right << std::setw(12)
           << cell(m.rmse_all, m.name == best_all) << std::setw(12)
           << cell(m.rmse_le, m.name == best_le) << std::setw(12)
           << cell(m.rmse_gt, m.name == best_gt) << "\n";
    }
    if (!report.skill.empty()) {
        os << "\nskill vs baselines (% RMSE reduction):\n";
        for (const auto& s : report.skill) {
            os << "  " << std::left << std::setw(10) << s.method << " vs " << std::setw(6)
               << s.baseline << std::right << std::setw(8) << std::fixed << std::setprecision(1)
               << s.percent << "%\n";
        }
    }
    return os.str();
}

}  // namespace fognow::eval
