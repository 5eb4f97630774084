#include "constancy/power.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

namespace constancy {

// ---------------------------------------------------------------------------
// Shapes and departure grids
// ---------------------------------------------------------------------------

Shape Shape::jump(double a, double b) {
    if (!(a > 0.0 && a < 1.0)) throw_usage("jump shape requires a in (0,1)");
    Shape s;
    s.kind = Kind::jump;
    s.a = a;
    s.b = b;
    return s;
}

Shape Shape::trend(double c) {
    Shape s;
    s.kind = Kind::trend;
    s.c = c;
    return s;
}

Shape Shape::custom(std::vector<double> table) {
    if (table.empty()) throw_usage("custom shape table is empty");
    Shape s;
    s.kind = Kind::custom;
    s.table = std::move(table);
    return s;
}

double Shape::value(double s) const {
    switch (kind) {
        case Kind::jump:
            return s >= a ? b : 0.0;
        case Kind::trend:
            return c * s;
        case Kind::custom: {
            const int m = static_cast<int>(table.size());
            int idx = static_cast<int>(std::ceil(s * m - 1e-9));
            idx = std::min(std::max(idx, 1), m);
            return table[idx - 1];
        }
    }
    throw_internal("unknown shape kind");
}

std::string Shape::to_string() const {
    char buf[64];
    switch (kind) {
        case Kind::jump:
            std::snprintf(buf, sizeof(buf), "jump(%g,%g)", a, b);
            return buf;
        case Kind::trend:
            std::snprintf(buf, sizeof(buf), "trend(%g)", c);
            return buf;
        case Kind::custom:
            return "custom";
    }
    throw_internal("unknown shape kind");
}

DepartureSpec DepartureSpec::uniform(std::vector<double> delta, const Shape& shape) {
    DepartureSpec spec;
    spec.h.assign(delta.size(), shape);
    spec.delta = std::move(delta);
    return spec;
}

DepartureGrid evaluate_on_grid(const DepartureSpec& spec, int n) {
    if (spec.delta.size() != spec.h.size())
        throw_usage("departure delta and shape lists differ in length");
    if (n < 2) throw_usage("departure grid needs n >= 2");
    const int p = spec.dim();
    DepartureGrid grid;
    grid.n = n;
    grid.p = p;
    grid.h.resize(static_cast<size_t>(n) * p);
    grid.hbar.assign(p, 0.0);
    for (int j = 0; j < p; ++j) {
        if (spec.h[j].kind == Shape::Kind::custom &&
            static_cast<int>(spec.h[j].table.size()) != n)
            throw_usage("custom shape table length must equal the grid size");
        for (int i = 1; i <= n; ++i) {
            const double v = spec.h[j].value(static_cast<double>(i) / n);
            grid.h[static_cast<size_t>(i - 1) * p + j] = v;
            grid.hbar[j] += v / n;
        }
    }
    return grid;
}

// ---------------------------------------------------------------------------
// Drift and optimal weight
// ---------------------------------------------------------------------------

std::vector<double> departure_direction(const DepartureSpec& spec, const SymMatrix& j_info,
                                        int grid_n) {
    const int p = spec.dim();
    if (j_info.dim() != p) throw_usage("information matrix dimension does not match departure");
    const DepartureGrid grid = evaluate_on_grid(spec, grid_n);
    const SymMatrix root = sqrt_sym(j_info);
    std::vector<double> direction(static_cast<size_t>(grid_n) * p, 0.0);
    std::vector<double> centered(p);
    for (int i = 1; i <= grid_n; ++i) {
        for (int j = 0; j < p; ++j) centered[j] = spec.delta[j] * grid.centered(i, j);
        for (int j = 0; j < p; ++j)
            direction[static_cast<size_t>(i - 1) * p + j] = root.row_dot(j, centered);
    }
    return direction;
}

DriftCurve drift_curve(const DepartureSpec& spec, const SymMatrix& j_info, int grid_n) {
    const int p = spec.dim();
    const std::vector<double> direction = departure_direction(spec, j_info, grid_n);
    DriftCurve curve;
    curve.n = grid_n;
    curve.p = p;
    curve.values.assign(static_cast<size_t>(grid_n + 1) * p, 0.0);
    for (int i = 1; i <= grid_n; ++i)
        for (int j = 0; j < p; ++j)
            curve.values[static_cast<size_t>(i) * p + j] =
                curve.values[static_cast<size_t>(i - 1) * p + j] +
                direction[static_cast<size_t>(i - 1) * p + j] / grid_n;
    return curve;
}

OptimalWeight optimal_weight(const DepartureSpec& spec, const SymMatrix& j_info, int grid_n) {
    const int p = spec.dim();
    const std::vector<double> direction = departure_direction(spec, j_info, grid_n);

    std::vector<int> active;
    for (int j = 0; j < p; ++j) {
        for (int i = 0; i < grid_n; ++i) {
            if (direction[static_cast<size_t>(i) * p + j] != 0.0) {
                active.push_back(j);
                break;
            }
        }
    }
    if (active.empty())
        throw_degenerate_weight("optimal weight is identically zero (no departure)");

    OptimalWeight out;
    out.components = active;
    out.weight.n = grid_n;
    out.weight.p = static_cast<int>(active.size());
    out.weight.tag = "optimal";
    out.weight.values.resize(static_cast<size_t>(grid_n) * active.size());
    for (int i = 0; i < grid_n; ++i)
        for (size_t j = 0; j < active.size(); ++j)
            out.weight.values[static_cast<size_t>(i) * active.size() + j] =
                direction[static_cast<size_t>(i) * p + active[j]];
    out.weight.validate();
    return out;
}

// ---------------------------------------------------------------------------
// Noncentrality
// ---------------------------------------------------------------------------

Noncentrality noncentrality(const WeightSpec& w, const DepartureSpec& spec,
                            const SymMatrix& j_info, const WindowPartition& part,
                            const std::vector<int>& components) {
    w.validate();
    part.validate(w.n);
    const int m = part.windows();
    const int n = w.n;
    const std::vector<double> direction = departure_direction(spec, j_info, n);
    const int p_spec = spec.dim();

    std::vector<int> map(w.p);
    if (components.empty()) {
        if (w.p != p_spec) throw_usage("weight and departure dimensions differ");
        for (int j = 0; j < w.p; ++j) map[j] = j;
    } else {
        if (static_cast<int>(components.size()) != w.p)
            throw_usage("component map length must equal the weight dimension");
        map = components;
    }

    Noncentrality out;
    out.per_component.resize(w.p, 0.0);
    for (int j = 0; j < w.p; ++j) {
        const int jc = map[j];
        std::vector<double> a(m, 0.0), c(m, 0.0), d(m, 0.0);
        for (int i = 1; i <= n; ++i) {
            const int k = part.window_of(i, n);
            const double kij = w.at(i, j);
            const double hij = direction[static_cast<size_t>(i - 1) * p_spec + jc];
            a[k] += kij * hij / n;
            c[k] += kij / n;
            d[k] += kij * kij / n;
        }
        double lambda;
        if (w.is_constant()) {
            // constant weight: lambda = sum_k (int_{I_k} H)^2 / |I_k|, with
            // the weight scale cancelling out of the quadratic form
            const double scale = w.at(1, j);
            lambda = 0.0;
            for (int k = 0; k < m; ++k) {
                const double ih = a[k] / scale;
                lambda += ih * ih / part.length(k);
            }
        } else {
            double sum_sq = 0.0, ratio = 0.0, mixed = 0.0;
            for (int k = 0; k < m; ++k) {
                if (!(d[k] > 1e-300))
                    throw_degenerate_weight("weight vanishes on window " + std::to_string(k + 1));
                sum_sq += a[k] * a[k] / d[k];
                ratio += c[k] * c[k] / d[k];
                mixed += c[k] * a[k] / d[k];
            }
            const double denom = 1.0 - ratio;
            if (denom <= 1e-10)
                throw_degenerate_weight("weight is window-wise constant");
            lambda = sum_sq + mixed * mixed / denom;
        }
        out.per_component[j] = lambda;
        out.combined += lambda;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Power simulation
// ---------------------------------------------------------------------------

std::string TestSelector::name() const {
    switch (kind) {
        case Kind::chi2_window:
            return "a2";
        case Kind::weighted_chi2:
            return weight == Weight::trend    ? "q-trend"
                   : weight == Weight::jump   ? "q-jump"
                                              : "q-optimal";
        case Kind::max_component:
            return "max-m";
        case Kind::max_weighted:
            return weight == Weight::trend    ? "max-v-trend"
                   : weight == Weight::jump   ? "max-v-jump"
                                              : "max-v-optimal";
    }
    throw_internal("unknown test selector");
}

namespace {

double quantile_type7(std::vector<double> sample, double prob) {
    std::sort(sample.begin(), sample.end());
    const double h = (static_cast<double>(sample.size()) - 1.0) * prob;
    const size_t lo = static_cast<size_t>(std::floor(h));
    if (lo + 1 >= sample.size()) return sample.back();
    return sample[lo] + (h - std::floor(h)) * (sample[lo + 1] - sample[lo]);
}

} // namespace

PowerResult empirical_power(const Family& family, const std::vector<double>& theta0,
                            const DepartureSpec& spec, const TestSelector& selector, int n,
                            long replications, std::uint64_t seed, double level, int threads) {
    const int p = family.param_dim();
    if (spec.dim() != p) throw_usage("departure dimension does not match the family");
    if (!family.in_region(theta0))
        throw Error(ErrorCategory::numerical, "parameter-region", "theta0 outside the region");
    if (!(level > 0.0 && level < 1.0)) throw_usage("level must be in (0,1)");

    // per-index parameters under the alternative; fail before simulating if
    // any of them leaves the region
    const DepartureGrid grid = evaluate_on_grid(spec, n);
    const double root_n = std::sqrt(static_cast<double>(n));
    std::vector<std::vector<double>> alt_thetas(n, theta0);
    for (int i = 1; i <= n; ++i) {
        for (int j = 0; j < p; ++j) alt_thetas[i - 1][j] += spec.delta[j] * grid.at(i, j) / root_n;
        if (!family.in_region(alt_thetas[i - 1]))
            throw_out_of_range_alternative("theta_" + std::to_string(i) +
                                           " leaves the parameter region");
    }

    // J at theta0 for the weight and the predicted power; covariate families
    // use a pilot sample for the design average
    SymMatrix j0(p);
    if (family.needs_covariates() || family.is_markov()) {
        RngStream pilot_rng(seed, 0xB1107ULL);
        const std::vector<Observation> pilot = family.simulate(theta0, n, pilot_rng);
        j0 = family.expected_info(theta0, &pilot);
    } else {
        j0 = family.expected_info(theta0, nullptr);
    }

    const WindowPartition part = WindowPartition::equal(selector.windows);

    // weight machinery for the weighted selectors
    WeightSpec weight;
    std::vector<int> components; // path columns the statistic uses
    const bool weighted = selector.kind == TestSelector::Kind::weighted_chi2 ||
                          selector.kind == TestSelector::Kind::max_weighted;
    if (weighted) {
        if (selector.weight == TestSelector::Weight::optimal) {
            OptimalWeight opt = optimal_weight(spec, j0, n);
            weight = std::move(opt.weight);
            components = std::move(opt.components);
        } else {
            weight = selector.weight == TestSelector::Weight::trend
                         ? WeightSpec::trend(n, 1)
                         : WeightSpec::jump(selector.jump_a, n, 1);
            components = {selector.component - 1};
        }
        if (selector.kind == TestSelector::Kind::max_weighted) {
            // one component only
            if (weight.p != 1) {
                const int want = selector.component - 1;
                const auto it = std::find(components.begin(), components.end(), want);
                if (it == components.end())
                    throw_degenerate_weight("selected component has no departure weight");
                const int col = static_cast<int>(it - components.begin());
                WeightSpec one;
                one.n = n;
                one.p = 1;
                one.tag = weight.tag;
                one.values.resize(n);
                for (int i = 1; i <= n; ++i) one.values[i - 1] = weight.at(i, col);
                weight = std::move(one);
                components = {want};
            }
        }
    }

    auto select_columns = [](const MonitoringPath& path, const std::vector<int>& cols) {
        MonitoringPath out;
        out.n = path.n;
        out.p = static_cast<int>(cols.size());
        out.kind = path.kind;
        out.standardizer = path.standardizer;
        out.values.resize(static_cast<size_t>(path.n + 1) * cols.size());
        for (int k = 0; k <= path.n; ++k)
            for (size_t j = 0; j < cols.size(); ++j)
                out.values[static_cast<size_t>(k) * cols.size() + j] = path.at(k, cols[j]);
        return out;
    };

    auto evaluate = [&](const std::vector<Observation>& data) {
        const FitResult fit = family.fit(data);
        const MonitoringPath path = canonical_process(data, family, fit);
        switch (selector.kind) {
            case TestSelector::Kind::chi2_window:
                return chi2_window_test(path, part).value;
            case TestSelector::Kind::weighted_chi2: {
                const MonitoringPath sub = select_columns(path, components);
                const MonitoringPath vpath = weighted_process(sub, weight);
                return weighted_chi2_test(vpath, weight, part).value;
            }
            case TestSelector::Kind::max_component:
                return path.max_abs_component(selector.component - 1);
            case TestSelector::Kind::max_weighted: {
                const MonitoringPath sub = select_columns(path, components);
                const MonitoringPath vpath = weighted_process(sub, weight);
                return vpath.max_abs_component(0);
            }
        }
        throw_internal("unknown test selector");
    };

    std::vector<double> null_stats(replications), alt_stats(replications);
    parallel_for(
        replications,
        [&](long r) {
            RngStream null_rng(seed, 2 * static_cast<std::uint64_t>(r));
            null_stats[r] = evaluate(family.simulate(theta0, n, null_rng));
            RngStream alt_rng(seed, 2 * static_cast<std::uint64_t>(r) + 1);
            alt_stats[r] = evaluate(family.simulate(alt_thetas, alt_rng));
        },
        threads);

    PowerResult result;
    result.critical_value = quantile_type7(null_stats, 1.0 - level);
    long rejections = 0;
    for (double s : alt_stats)
        if (s > result.critical_value) ++rejections;
    result.empirical_power = static_cast<double>(rejections) / static_cast<double>(replications);
    result.mc_se = std::sqrt(result.empirical_power * (1.0 - result.empirical_power) /
                             static_cast<double>(replications));

    // asymptotic noncentral chi-square prediction for the windowed tests
    if (selector.kind == TestSelector::Kind::chi2_window) {
        const Noncentrality nc =
            noncentrality(WeightSpec::constant(n, p), spec, j0, part);
        const int df = p * (selector.windows - 1);
        result.predicted_power =
            1.0 - noncentral_chi2_cdf(chi2_quantile(1.0 - level, df), df, nc.combined);
    } else if (selector.kind == TestSelector::Kind::weighted_chi2) {
        const Noncentrality nc = noncentrality(weight, spec, j0, part, components);
        const int df = selector.windows * weight.p;
        result.predicted_power =
            1.0 - noncentral_chi2_cdf(chi2_quantile(1.0 - level, df), df, nc.combined);
    } else {
        result.predicted_power = std::numeric_limits<double>::quiet_NaN();
    }
    return result;
}

} // namespace constancy
