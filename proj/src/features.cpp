#include "fognow/features.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <set>

namespace fognow::features {

std::string to_string(Var v) {
    switch (v) {
        case Var::Vis: return "vis";
        case Var::Wind: return "wind";
        case Var::Rhw: return "rhw";
        case Var::Dpd: return "dpd";
        case Var::Pr: return "pr";
    }
    return "?";
}

std::optional<Var> var_from_name(std::string_view name) {
    if (name == "vis") return Var::Vis;
    if (name == "wind") return Var::Wind;
    if (name == "rhw") return Var::Rhw;
    if (name == "dpd") return Var::Dpd;
    if (name == "pr") return Var::Pr;
    return std::nullopt;
}

double field(const dataio::ObservationRecord& rec, Var v) {
    switch (v) {
        case Var::Vis: return rec.vis;
        case Var::Wind: return rec.wind;
        case Var::Rhw: return rec.rhw;
        case Var::Dpd: return rec.dpd;
        case Var::Pr: return rec.pr;
    }
    return 0;
}

void LagSpec::validate() const {
    if (lag_minutes < 1) throw std::invalid_argument("lag_minutes must be >= 1");
    if (lead_minutes < 1) throw std::invalid_argument("lead_minutes must be >= 1");
    if (variables.empty()) throw std::invalid_argument("variables must be non-empty");
    std::set<std::string> seen;
    for (const auto& name : variables) {
        if (!var_from_name(name)) throw std::invalid_argument("unknown variable '" + name + "'");
        if (!seen.insert(name).second)
            throw std::invalid_argument("duplicate variable '" + name + "'");
    }
}

Eigen::Index LagSpec::feature_count() const {
    return static_cast<Eigen::Index>(variables.size()) * lag_minutes;
}

std::vector<Eigen::Index> SplitLabels::indices_of(RowSplit which) const {
    std::vector<Eigen::Index> out;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] == which) out.push_back(static_cast<Eigen::Index>(i));
    }
    return out;
}

LengthMismatch::LengthMismatch(Eigen::Index a, Eigen::Index b)
    : std::runtime_error("length mismatch: " + std::to_string(a) + " vs " + std::to_string(b)) {}

ConstantColumn::ConstantColumn(Eigen::Index col)
    : std::runtime_error("constant feature column " + std::to_string(col)), column(col) {}

double pearson_corr(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    if (a.size() != b.size()) throw LengthMismatch(a.size(), b.size());
    if (a.size() < 2) throw InsufficientData("correlation needs at least 2 samples");
    const Eigen::ArrayXd da = a.array() - a.mean();
    const Eigen::ArrayXd db = b.array() - b.mean();
    const double va = (da * da).sum();
    const double vb = (db * db).sum();
    if (va == 0.0 || vb == 0.0) throw ConstantInput();
    const double r = (da * db).sum() / std::sqrt(va * vb);
    return std::clamp(r, -1.0, 1.0);
}

std::vector<std::string> select_features(const dataio::ObservationSeries& series,
                                         const std::vector<std::string>& candidates,
                                         int lead_minutes, double min_abs_corr) {
    if (lead_minutes < 1) throw std::invalid_argument("lead_minutes must be >= 1");
    const auto segments = dataio::segment_contiguous(series);
    const std::size_t lead = static_cast<std::size_t>(lead_minutes);

    std::size_t pairs = 0;
    for (const auto& seg : segments) {
        if (seg.size() > lead) pairs += seg.size() - lead;
    }
    if (pairs < 2) throw InsufficientData("need at least 2 aligned (t, t+lead) pairs");

    struct Scored {
        std::string name;
        double abs_r;
    };
    std::vector<Scored> kept;
    for (const auto& name : candidates) {
        const auto var = var_from_name(name);
        if (!var) throw std::invalid_argument("unknown variable '" + name + "'");
        Eigen::VectorXd a(static_cast<Eigen::Index>(pairs));
        Eigen::VectorXd b(static_cast<Eigen::Index>(pairs));
        Eigen::Index k = 0;
        for (const auto& seg : segments) {
            if (seg.size() <= lead) continue;
            for (std::size_t i = seg.begin; i + lead < seg.end; ++i) {
                a(k) = field(series.records[i], *var);
                b(k) = series.records[i + lead].vis;
                ++k;
            }
        }
        const double r = pearson_corr(a, b);
        if (std::abs(r) >= min_abs_corr) kept.push_back({name, std::abs(r)});
    }
    std::stable_sort(kept.begin(), kept.end(),
                     [](const Scored& a, const Scored& b) { return a.abs_r > b.abs_r; });
    std::vector<std::string> out;
    out.reserve(kept.size());
    for (auto& s : kept) out.push_back(std::move(s.name));
    return out;
}

SupervisedSet build_lagged(const std::vector<dataio::Segment>& segments,
                           const dataio::ObservationSeries& series, const LagSpec& spec) {
    spec.validate();
    const std::size_t lag = static_cast<std::size_t>(spec.lag_minutes);
    const std::size_t lead = static_cast<std::size_t>(spec.lead_minutes);

    std::vector<Var> vars;
    vars.reserve(spec.variables.size());
    for (const auto& name : spec.variables) vars.push_back(*var_from_name(name));

    std::size_t n_rows = 0;
    for (const auto& seg : segments) {
        if (seg.size() >= lag + lead) n_rows += seg.size() - lag - lead + 1;
    }

    SupervisedSet set;
    set.spec = spec;
    set.x.resize(static_cast<Eigen::Index>(n_rows), spec.feature_count());
    set.y.resize(static_cast<Eigen::Index>(n_rows));
    set.t_target.resize(n_rows);

    Eigen::Index row = 0;
    for (const auto& seg : segments) {
        if (seg.size() < lag + lead) continue;
        // anchor = newest minute of the lag window; target sits lead minutes on
        for (std::size_t anchor = seg.begin + lag - 1; anchor + lead < seg.end; ++anchor) {
            for (std::size_t v = 0; v < vars.size(); ++v) {
                const Eigen::Index base = static_cast<Eigen::Index>(v * lag);
                for (std::size_t j = 0; j < lag; ++j) {
                    set.x(row, base + static_cast<Eigen::Index>(j)) =
                        field(series.records[anchor - (lag - 1) + j], vars[v]);
                }
            }
            const auto& target = series.records[anchor + lead];
            set.y(row) = target.vis;
            set.t_target[static_cast<std::size_t>(row)] = target.timestamp;
            ++row;
        }
    }
    return set;
}

NormStats fit_norm(const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
    if (x.rows() != y.size()) throw LengthMismatch(x.rows(), y.size());
    if (x.rows() == 0) throw InsufficientData("cannot fit normalization on an empty set");
    const double n = static_cast<double>(x.rows());

    NormStats stats;
    stats.x_mean = x.colwise().mean();
    stats.x_std.resize(x.cols());
    for (Eigen::Index c = 0; c < x.cols(); ++c) {
        const double var = (x.col(c).array() - stats.x_mean(c)).square().sum() / n;
        stats.x_std(c) = std::sqrt(var);
        const double scale = std::max(1.0, std::abs(stats.x_mean(c)));
        if (stats.x_std(c) <= 1e-12 * scale) throw ConstantColumn(c);
    }
    stats.y_mean = y.mean();
    const double y_var = (y.array() - stats.y_mean).square().sum() / n;
    stats.y_std = std::sqrt(y_var);
    if (stats.y_std <= 1e-12 * std::max(1.0, std::abs(stats.y_mean))) stats.y_std = 1.0;
    return stats;
}

Eigen::MatrixXd apply_norm(const Eigen::MatrixXd& rows, const NormStats& stats) {
    if (rows.cols() != stats.x_mean.size()) throw LengthMismatch(rows.cols(), stats.x_mean.size());
    return (rows.rowwise() - stats.x_mean.transpose()).array().rowwise() /
           stats.x_std.transpose().array();
}

Eigen::VectorXd normalize_target(const Eigen::VectorXd& y, const NormStats& stats) {
    return (y.array() - stats.y_mean) / stats.y_std;
}

Eigen::VectorXd invert_norm_target(const Eigen::VectorXd& values, const NormStats& stats) {
    return values.array() * stats.y_std + stats.y_mean;
}

SplitLabels chrono_split(const SupervisedSet& set, double train_frac) {
    if (!(train_frac > 0.0 && train_frac < 1.0))
        throw std::invalid_argument("train_frac must be in (0, 1)");
    const std::size_t n = set.t_target.size();
    if (!std::is_sorted(set.t_target.begin(), set.t_target.end()))
        throw std::invalid_argument("rows must be ordered by target timestamp");

    const std::size_t n_train = static_cast<std::size_t>(train_frac * static_cast<double>(n));
    if (n_train == 0 || n_train >= n) throw DegenerateSplit("split leaves an empty side");

    const timeutil::Minute last_train = set.t_target[n_train - 1];
    const timeutil::Minute gap = set.spec.lag_minutes + set.spec.lead_minutes;

    SplitLabels out;
    out.labels.assign(n, RowSplit::Train);
    std::size_t n_test = 0;
    for (std::size_t i = n_train; i < n; ++i) {
        if (set.t_target[i] - last_train < gap) {
            out.labels[i] = RowSplit::Purged;
        } else {
            out.labels[i] = RowSplit::Test;
            ++n_test;
        }
    }
    if (n_test == 0) throw DegenerateSplit("purge band swallowed the whole test period");
    return out;
}

SupervisedSet subset(const SupervisedSet& set, const std::vector<Eigen::Index>& rows) {
    SupervisedSet out;
    out.spec = set.spec;
    out.x.resize(static_cast<Eigen::Index>(rows.size()), set.x.cols());
    out.y.resize(static_cast<Eigen::Index>(rows.size()));
    out.t_target.resize(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        out.x.row(static_cast<Eigen::Index>(i)) = set.x.row(rows[i]);
        out.y(static_cast<Eigen::Index>(i)) = set.y(rows[i]);
        out.t_target[i] = set.t_target[static_cast<std::size_t>(rows[i])];
    }
    return out;
}

namespace {

constexpr char kMagic[8] = {'F', 'N', 'O', 'W', 'S', 'S', 'E', 'T'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void put(std::ostream& out, const T& v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& in) {
    T v{};
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!in) throw std::runtime_error("truncated supervised-set file");
    return v;
}

}  // namespace

void save_set(const std::filesystem::path& path, const SupervisedSet& set) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out.write(kMagic, sizeof(kMagic));
    put(out, kVersion);
    put(out, static_cast<std::int32_t>(set.spec.lag_minutes));
    put(out, static_cast<std::int32_t>(set.spec.lead_minutes));
    put(out, static_cast<std::uint32_t>(set.spec.variables.size()));
    for (const auto& name : set.spec.variables) {
        put(out, static_cast<std::uint32_t>(name.size()));
        out.write(name.data(), static_cast<std::streamsize>(name.size()));
    }
    put(out, static_cast<std::uint64_t>(set.x.rows()));
    put(out, static_cast<std::uint64_t>(set.x.cols()));
    for (Eigen::Index i = 0; i < set.y.size(); ++i) put(out, set.y(i));
    for (const auto t : set.t_target) put(out, static_cast<std::int64_t>(t));
    for (Eigen::Index r = 0; r < set.x.rows(); ++r) {
        for (Eigen::Index c = 0; c < set.x.cols(); ++c) put(out, set.x(r, c));
    }
    if (!out) throw std::runtime_error("write failed for " + path.string());
}

SupervisedSet load_set(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    char magic[8];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
        throw std::runtime_error(path.string() + " is not a supervised-set file");
    if (get<std::uint32_t>(in) != kVersion)
        throw std::runtime_error("unsupported supervised-set version in " + path.string());

    SupervisedSet set;
    set.spec.lag_minutes = get<std::int32_t>(in);
    set.spec.lead_minutes = get<std::int32_t>(in);
    const auto n_vars = get<std::uint32_t>(in);
    set.spec.variables.clear();
    for (std::uint32_t i = 0; i < n_vars; ++i) {
        const auto len = get<std::uint32_t>(in);
        std::string name(len, '\0');
        in.read(name.data(), len);
        if (!in) throw std::runtime_error("truncated supervised-set file");
        set.spec.variables.push_back(std::move(name));
    }
    const auto rows = static_cast<Eigen::Index>(get<std::uint64_t>(in));
    const auto cols = static_cast<Eigen::Index>(get<std::uint64_t>(in));
    set.y.resize(rows);
    for (Eigen::Index i = 0; i < rows; ++i) set.y(i) = get<double>(in);
    set.t_target.resize(static_cast<std::size_t>(rows));
    for (auto& t : set.t_target) t = get<std::int64_t>(in);
    set.x.resize(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
        for (Eigen::Index c = 0; c < cols; ++c) set.x(r, c) = get<double>(in);
    }
    return set;
}

}  // namespace fognow::features
