#include "constancy/stats.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>

namespace constancy {

// ---------------------------------------------------------------------------
// WindowPartition
// ---------------------------------------------------------------------------

WindowPartition WindowPartition::equal(int m) {
    if (m < 2) throw_usage("window partition needs at least 2 windows");
    WindowPartition part;
    part.boundaries.resize(m + 1);
    for (int k = 0; k <= m; ++k) part.boundaries[k] = static_cast<double>(k) / m;
    return part;
}

int WindowPartition::window_of(int i, int n) const {
    const double t = static_cast<double>(i) / n;
    const int m = windows();
    for (int k = 0; k < m; ++k) {
        if (t <= boundaries[k + 1] + 1e-12) return k;
    }
    return m - 1;
}

void WindowPartition::validate(int n) const {
    const int m = windows();
    if (m < 1) throw_usage("window partition is empty");
    if (boundaries.front() != 0.0 || boundaries.back() != 1.0)
        throw_usage("window boundaries must start at 0 and end at 1");
    for (int k = 0; k < m; ++k)
        if (!(boundaries[k] < boundaries[k + 1]))
            throw_usage("window boundaries must be strictly increasing");
    std::vector<int> hits(m, 0);
    for (int i = 1; i <= n; ++i) ++hits[window_of(i, n)];
    for (int k = 0; k < m; ++k)
        if (hits[k] == 0)
            throw Error(ErrorCategory::usage, "empty-window",
                        "window " + std::to_string(k + 1) + " contains no grid increment");
}

// ---------------------------------------------------------------------------
// TestReport serialization
// ---------------------------------------------------------------------------

namespace {

std::string format_g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void write_reference(std::ostream& out, const Reference& ref) {
    if (const auto* chi2 = std::get_if<ChiSquareRef>(&ref)) {
        out << "ref=chi2 df=" << chi2->df;
    } else if (const auto* nc = std::get_if<NoncentralChiSquareRef>(&ref)) {
        out << "ref=noncentral-chi2 df=" << nc->df << " lambda=" << format_g17(nc->lambda);
    } else if (const auto* sim = std::get_if<SimulatedRef>(&ref)) {
        out << "ref=simulated table=" << sim->table_key;
    }
}

void require_unweighted(const MonitoringPath& path, const char* test) {
    if (path.kind == PathKind::weighted)
        throw_usage(std::string(test) + " expects an unweighted monitoring path");
}

} // namespace

void TestReport::write(std::ostream& out) const {
    out << "test=" << name << " value=" << format_g17(value) << " ";
    write_reference(out, reference);
    out << " p_value=" << format_g17(p_value) << "\n";
    for (const auto& c : per_component) {
        out << "  component=" << c.index << " value=" << format_g17(c.value)
            << " p_value=" << format_g17(c.p_value) << "\n";
    }
}

// ---------------------------------------------------------------------------
// Test 1: windowed chi-square on the canonical path
// ---------------------------------------------------------------------------

namespace {

// window increment sums, (m x p)
std::vector<double> window_increments(const MonitoringPath& path, const WindowPartition& part) {
    const int m = part.windows();
    std::vector<double> delta(static_cast<size_t>(m) * path.p, 0.0);
    for (int i = 1; i <= path.n; ++i) {
        const int k = part.window_of(i, path.n);
        for (int j = 0; j < path.p; ++j)
            delta[static_cast<size_t>(k) * path.p + j] += path.increment(i, j);
    }
    return delta;
}

TestReport window_chi2_impl(const MonitoringPath& path, const WindowPartition& part,
                            const char* name) {
    part.validate(path.n);
    const int m = part.windows();
    const int p = path.p;
    const std::vector<double> delta = window_increments(path, part);

    TestReport report;
    report.name = name;
    report.reference = ChiSquareRef{p * (m - 1)};
    double total = 0.0;
    for (int j = 0; j < p; ++j) {
        double a2 = 0.0;
        for (int k = 0; k < m; ++k) {
            const double d = delta[static_cast<size_t>(k) * p + j];
            a2 += d * d / part.length(k);
        }
        total += a2;
        report.per_component.push_back({j + 1, a2, chi2_sf(a2, m - 1)});
    }
    report.value = total;
    report.p_value = chi2_sf(total, p * (m - 1.0));
    return report;
}

} // namespace

TestReport chi2_window_test(const MonitoringPath& path, const WindowPartition& part) {
    require_unweighted(path, "chi2_window_test");
    return window_chi2_impl(path, part, "a2");
}

// ---------------------------------------------------------------------------
// Test 2: Kolmogorov-Smirnov type maxima
// ---------------------------------------------------------------------------

TestReport ks_norm_test(const MonitoringPath& path, const NullTable& table) {
    require_unweighted(path, "ks_norm_test");
    double max_sq = 0.0;
    for (int k = 0; k <= path.n; ++k) {
        double s = 0.0;
        for (int j = 0; j < path.p; ++j) s += path.at(k, j) * path.at(k, j);
        max_sq = std::max(max_sq, s);
    }
    TestReport report;
    report.name = "ks-norm";
    report.value = max_sq;
    report.reference = SimulatedRef{table.cache_key()};
    report.p_value = table.p_value(max_sq);
    return report;
}

TestReport ks_sum_test(const MonitoringPath& path, const NullTable& sum_table,
                       const NullTable& component_table) {
    require_unweighted(path, "ks_sum_test");
    TestReport report;
    report.name = "ks-sum";
    double total = 0.0;
    for (int j = 0; j < path.p; ++j) {
        const double mj = path.max_abs_component(j);
        total += mj;
        report.per_component.push_back({j + 1, mj, component_table.p_value(mj)});
    }
    report.value = total;
    report.reference = SimulatedRef{sum_table.cache_key()};
    report.p_value = sum_table.p_value(total);
    return report;
}

std::vector<TestReport> ks_weighted_sd_test(const MonitoringPath& path, double epsilon,
                                            const NullTable& table) {
    require_unweighted(path, "ks_weighted_sd_test");
    if (!(epsilon > 0.0 && epsilon < 0.5))
        throw_usage("ks_weighted_sd_test requires epsilon in (0, 1/2)");
    const int n = path.n;
    std::vector<TestReport> reports;
    bool any_point = false;
    std::vector<double> maxima(path.p, 0.0);
    for (int k = 1; k < n; ++k) {
        const double t = static_cast<double>(k) / n;
        if (t < epsilon || t > 1.0 - epsilon) continue;
        any_point = true;
        const double sd = std::sqrt(t * (1.0 - t));
        for (int j = 0; j < path.p; ++j) {
            // right-hand value at k/n and left-hand limit (the pre-jump value)
            const double v = std::max(std::fabs(path.at(k, j)), std::fabs(path.at(k - 1, j)));
            maxima[j] = std::max(maxima[j], v / sd);
        }
    }
    if (!any_point)
        throw Error(ErrorCategory::usage, "empty-window",
                    "no grid point inside [eps, 1-eps]");
    for (int j = 0; j < path.p; ++j) {
        TestReport report;
        report.name = "t-sd";
        report.value = maxima[j];
        report.reference = SimulatedRef{table.cache_key()};
        report.p_value = table.p_value(maxima[j]);
        report.per_component.push_back({j + 1, maxima[j], report.p_value});
        reports.push_back(std::move(report));
    }
    return reports;
}

// ---------------------------------------------------------------------------
// Test 3: Cramer-von Mises
// ---------------------------------------------------------------------------

TestReport cvm_test(const MonitoringPath& path, const NullTable& table) {
    require_unweighted(path, "cvm_test");
    double sum = 0.0;
    for (int k = 1; k < path.n; ++k)
        for (int j = 0; j < path.p; ++j) sum += path.at(k, j) * path.at(k, j);
    const double value = sum / path.n;
    TestReport report;
    report.name = "cvm";
    report.value = value;
    report.reference = SimulatedRef{table.cache_key()};
    report.p_value = table.p_value(value);
    return report;
}

// ---------------------------------------------------------------------------
// Weighted chi-square
// ---------------------------------------------------------------------------

TestReport weighted_chi2_test(const MonitoringPath& vpath, const WeightSpec& w,
                              const WindowPartition& part) {
    if (vpath.kind != PathKind::weighted)
        throw_usage("weighted_chi2_test expects a weighted path");
    if (w.n != vpath.n || w.p != vpath.p)
        throw_usage("weight grid does not match the path grid");
    part.validate(vpath.n);

    if (w.is_constant()) {
        // the correction term vanishes and the statistic is Test 1 again
        return window_chi2_impl(vpath, part, "q");
    }

    const int m = part.windows();
    const int p = vpath.p;
    const int n = vpath.n;
    const std::vector<double> delta = window_increments(vpath, part);

    TestReport report;
    report.name = "q";
    report.reference = ChiSquareRef{m * p};
    double total = 0.0;
    for (int j = 0; j < p; ++j) {
        std::vector<double> c(m, 0.0), d(m, 0.0);
        for (int i = 1; i <= n; ++i) {
            const int k = part.window_of(i, n);
            const double kij = w.at(i, j);
            c[k] += kij / n;
            d[k] += kij * kij / n;
        }
        double q = 0.0, ratio = 0.0, mixed = 0.0;
        for (int k = 0; k < m; ++k) {
            if (!(d[k] > 1e-300))
                throw_degenerate_weight("weight component " + std::to_string(j + 1) +
                                        " vanishes on window " + std::to_string(k + 1));
            const double dv = delta[static_cast<size_t>(k) * p + j];
            q += dv * dv / d[k];
            ratio += c[k] * c[k] / d[k];
            mixed += c[k] * dv / d[k];
        }
        const double denom = 1.0 - ratio;
        if (denom <= 1e-10)
            throw_degenerate_weight("weight component " + std::to_string(j + 1) +
                                    " is window-wise constant; use the unweighted test");
        q += mixed * mixed / denom;
        total += q;
        report.per_component.push_back({j + 1, q, chi2_sf(q, m)});
    }
    report.value = total;
    report.p_value = chi2_sf(total, m * p);
    return report;
}

} // namespace constancy
