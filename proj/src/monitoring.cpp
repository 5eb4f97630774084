#include "constancy/monitoring.hpp"

#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>

namespace constancy {

std::string to_string(PathKind kind) {
    switch (kind) {
        case PathKind::canonical: return "canonical";
        case PathKind::robust: return "robust";
        case PathKind::plugin: return "plugin";
        case PathKind::weighted: return "weighted";
    }
    throw_internal("unknown path kind");
}

PathKind path_kind_from_string(const std::string& s) {
    if (s == "canonical") return PathKind::canonical;
    if (s == "robust") return PathKind::robust;
    if (s == "plugin") return PathKind::plugin;
    if (s == "weighted") return PathKind::weighted;
    throw_data("unknown path kind '" + s + "'");
}

double MonitoringPath::max_abs_component(int j) const {
    double m = 0.0;
    for (int k = 0; k <= n; ++k) m = std::max(m, std::fabs(at(k, j)));
    return m;
}

namespace {

std::string format_g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

} // namespace

void MonitoringPath::write_csv(std::ostream& out, const std::vector<std::string>& comments) const {
    for (const auto& c : comments) out << "# " << c << "\n";
    out << "t";
    for (int j = 1; j <= p; ++j) out << ",component_" << j;
    out << ",kind,n\n";
    for (int k = 0; k <= n; ++k) {
        out << format_g17(static_cast<double>(k) / n);
        for (int j = 0; j < p; ++j) out << "," << format_g17(this->at(k, j));
        out << "," << to_string(kind) << "," << n << "\n";
    }
}

MonitoringPath read_csv_impl(std::istream& in) {
    MonitoringPath path;
    std::string line;
    bool header_seen = false;
    int p = 0;
    std::vector<double> values;
    std::string kind;
    long n_field = -1;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (!header_seen) {
            if (cells.size() < 4 || cells.front() != "t" || cells.back() != "n")
                throw_data("path file: malformed header");
            p = static_cast<int>(cells.size()) - 3;
            header_seen = true;
            continue;
        }
        if (static_cast<int>(cells.size()) != p + 3) throw_data("path file: malformed row");
        for (int j = 0; j < p; ++j) values.push_back(std::stod(cells[1 + j]));
        kind = cells[p + 1];
        n_field = std::stol(cells[p + 2]);
    }
    if (!header_seen || n_field < 0) throw_data("path file: empty");
    path.p = p;
    path.n = static_cast<int>(n_field);
    if (values.size() != static_cast<size_t>(path.n + 1) * p)
        throw_data("path file: row count does not match n");
    path.values = std::move(values);
    path.kind = path_kind_from_string(kind);
    return path;
}

MonitoringPath MonitoringPath::read_csv(std::istream& in) { return read_csv_impl(in); }

// ---------------------------------------------------------------------------
// WeightSpec
// ---------------------------------------------------------------------------

WeightSpec WeightSpec::constant(int n, int p) {
    WeightSpec w;
    w.n = n;
    w.p = p;
    w.tag = "constant";
    w.values.assign(static_cast<size_t>(n) * p, 1.0);
    return w;
}

WeightSpec WeightSpec::trend(int n, int p) {
    WeightSpec w;
    w.n = n;
    w.p = p;
    w.tag = "trend";
    w.values.resize(static_cast<size_t>(n) * p);
    for (int i = 1; i <= n; ++i) {
        const double k = static_cast<double>(i) / n - 0.5;
        for (int j = 0; j < p; ++j) w.values[static_cast<size_t>(i - 1) * p + j] = k;
    }
    return w;
}

WeightSpec WeightSpec::jump(double a, int n, int p) {
    if (!(a > 0.0 && a < 1.0)) throw_usage("jump weight requires a in (0,1)");
    WeightSpec w;
    w.n = n;
    w.p = p;
    char buf[32];
    std::snprintf(buf, sizeof(buf), "jump(%g)", a);
    w.tag = buf;
    w.values.resize(static_cast<size_t>(n) * p);
    for (int i = 1; i <= n; ++i) {
        const double s = static_cast<double>(i) / n;
        const double k = (s >= a ? 1.0 : 0.0) - (1.0 - a);
        for (int j = 0; j < p; ++j) w.values[static_cast<size_t>(i - 1) * p + j] = k;
    }
    return w;
}

WeightSpec WeightSpec::custom(int n, int p, std::vector<double> values) {
    WeightSpec w;
    w.n = n;
    w.p = p;
    w.tag = "custom";
    w.values = std::move(values);
    if (w.values.size() != static_cast<size_t>(n) * p)
        throw_usage("custom weight table has the wrong shape");
    w.validate();
    return w;
}

void WeightSpec::validate() const {
    for (int j = 0; j < p; ++j) {
        bool nonzero = false;
        for (int i = 1; i <= n; ++i) {
            const double v = at(i, j);
            if (!std::isfinite(v)) throw_degenerate_weight("weight value is not finite");
            if (v != 0.0) nonzero = true;
        }
        if (!nonzero)
            throw_degenerate_weight("weight component " + std::to_string(j + 1) +
                                    " is identically zero");
    }
}

// ---------------------------------------------------------------------------
// Path construction
// ---------------------------------------------------------------------------

namespace {

MonitoringPath build_standardized(const std::vector<Observation>& data, const Family& family,
                                  const FitResult& fit, const SymMatrix& std_matrix,
                                  PathKind kind, const std::string& standardizer) {
    const int n = static_cast<int>(data.size());
    const int p = family.param_dim();
    const SymMatrix root = inv_sqrt(std_matrix);
    MonitoringPath path;
    path.n = n;
    path.p = p;
    path.kind = kind;
    path.standardizer = standardizer;
    path.values.assign(static_cast<size_t>(n + 1) * p, 0.0);
    const double scale = 1.0 / std::sqrt(static_cast<double>(n));
    std::vector<double> cum(p, 0.0);
    for (int i = 1; i <= n; ++i) {
        const std::vector<double> u = family.score(data[i - 1], fit.theta_hat);
        for (int j = 0; j < p; ++j) cum[j] += root.row_dot(j, u);
        for (int j = 0; j < p; ++j) path.at(i, j) = scale * cum[j];
    }
    return path;
}

} // namespace

MonitoringPath canonical_process(const std::vector<Observation>& data, const Family& family,
                                 const FitResult& fit, InfoChoice info) {
    const bool expected = info == InfoChoice::expected;
    return build_standardized(data, family, fit,
                              expected ? fit.expected_info : fit.observed_info,
                              PathKind::canonical,
                              expected ? "expected;eigen-root" : "observed;eigen-root");
}

MonitoringPath robust_process(const std::vector<Observation>& data, const Family& family,
                              const FitResult& fit) {
    return build_standardized(data, family, fit, fit.score_variance, PathKind::robust,
                              "robust;eigen-root");
}

MonitoringPath regression_process(const std::vector<Observation>& data, const Family& family,
                                  const FitResult& fit, InfoChoice info) {
    if (!family.needs_covariates())
        throw_usage("regression_process requires a regression family");
    return canonical_process(data, family, fit, info);
}

MonitoringPath weighted_process(const MonitoringPath& path, const WeightSpec& w) {
    if (w.n != path.n || w.p != path.p) throw_usage("weight grid does not match the path grid");
    w.validate();
    MonitoringPath out;
    out.n = path.n;
    out.p = path.p;
    out.kind = PathKind::weighted;
    out.standardizer = path.standardizer;
    out.values.assign(static_cast<size_t>(path.n + 1) * path.p, 0.0);
    for (int i = 1; i <= path.n; ++i)
        for (int j = 0; j < path.p; ++j)
            out.at(i, j) = out.at(i - 1, j) + w.at(i, j) * path.increment(i, j);
    return out;
}

std::vector<double> weighted_covariance(const WeightSpec& w, double t1, double t2) {
    if (!(t1 >= 0.0 && t1 <= 1.0 && t2 >= 0.0 && t2 <= 1.0))
        throw_usage("weighted_covariance requires times in [0,1]");
    const int n = w.n;
    const int k1 = static_cast<int>(std::floor(t1 * n + 1e-9));
    const int k2 = static_cast<int>(std::floor(t2 * n + 1e-9));
    const int kmin = std::min(k1, k2);
    std::vector<double> out(w.p, 0.0);
    for (int j = 0; j < w.p; ++j) {
        double sq = 0.0, a1 = 0.0, a2 = 0.0;
        for (int i = 1; i <= kmin; ++i) sq += w.at(i, j) * w.at(i, j);
        for (int i = 1; i <= k1; ++i) a1 += w.at(i, j);
        for (int i = 1; i <= k2; ++i) a2 += w.at(i, j);
        out[j] = sq / n - (a1 / n) * (a2 / n);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Plug-in estimators
// ---------------------------------------------------------------------------

double MeanEstimator::estimate(const std::vector<Observation>& data, int prefix) const {
    double s = 0.0;
    for (int i = 0; i < prefix; ++i) s += data[i].y[0];
    return s / prefix;
}

std::vector<double> MeanEstimator::influence(const std::vector<Observation>& data) const {
    const double m = estimate(data, static_cast<int>(data.size()));
    std::vector<double> inf(data.size());
    for (size_t i = 0; i < data.size(); ++i) inf[i] = data[i].y[0] - m;
    return inf;
}

namespace {

struct PairMoments {
    double mx = 0.0, my = 0.0, vx = 0.0, vy = 0.0, cxy = 0.0;
};

PairMoments pair_moments(const std::vector<Observation>& data, int prefix) {
    PairMoments m;
    for (int i = 0; i < prefix; ++i) {
        m.mx += data[i].y[0];
        m.my += data[i].y[1];
    }
    m.mx /= prefix;
    m.my /= prefix;
    for (int i = 0; i < prefix; ++i) {
        const double dx = data[i].y[0] - m.mx;
        const double dy = data[i].y[1] - m.my;
        m.vx += dx * dx;
        m.vy += dy * dy;
        m.cxy += dx * dy;
    }
    m.vx /= prefix;
    m.vy /= prefix;
    m.cxy /= prefix;
    return m;
}

} // namespace

double CorrelationEstimator::estimate(const std::vector<Observation>& data, int prefix) const {
    const PairMoments m = pair_moments(data, prefix);
    const double denom = std::sqrt(m.vx * m.vy);
    if (!(denom > 0.0)) throw_degenerate_fit("correlation: zero variance prefix");
    return m.cxy / denom;
}

std::vector<double> CorrelationEstimator::influence(const std::vector<Observation>& data) const {
    const int n = static_cast<int>(data.size());
    const PairMoments m = pair_moments(data, n);
    if (!(m.vx > 0.0 && m.vy > 0.0)) throw_degenerate_fit("correlation: zero variance data");
    const double rho = m.cxy / std::sqrt(m.vx * m.vy);
    std::vector<double> inf(data.size());
    for (int i = 0; i < n; ++i) {
        const double z1 = (data[i].y[0] - m.mx) / std::sqrt(m.vx);
        const double z2 = (data[i].y[1] - m.my) / std::sqrt(m.vy);
        inf[i] = z1 * z2 - 0.5 * rho * (z1 * z1 + z2 * z2);
    }
    return inf;
}

MonitoringPath plugin_process(const std::vector<Observation>& data, const PluginEstimator& est) {
    const int n = static_cast<int>(data.size());
    if (n < est.min_prefix())
        throw_data("plugin: fewer observations than the estimator's minimum prefix");
    const std::vector<double> inf = est.influence(data);
    double mean_inf = 0.0;
    for (double v : inf) mean_inf += v / n;
    double tau2 = 0.0;
    for (double v : inf) tau2 += (v - mean_inf) * (v - mean_inf) / n;
    if (!(tau2 > 0.0)) throw_degenerate_fit("plugin: influence values have zero variance");
    const double tau = std::sqrt(tau2);

    const double alpha_n = est.estimate(data, n);
    MonitoringPath path;
    path.n = n;
    path.p = 1;
    path.kind = PathKind::plugin;
    path.standardizer = "influence-tau;" + est.name();
    path.values.assign(static_cast<size_t>(n + 1), 0.0);
    const double scale = 1.0 / std::sqrt(static_cast<double>(n));
    for (int k = est.min_prefix(); k <= n; ++k) {
        const double alpha_k = est.estimate(data, k);
        path.at(k, 0) = scale * k * (alpha_k - alpha_n) / tau;
    }
    return path;
}

} // namespace constancy
