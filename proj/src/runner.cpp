#include "constancy/runner.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>

namespace constancy {

StandardizerChoice standardizer_from_string(const std::string& s) {
    if (s == "expected") return StandardizerChoice::expected;
    if (s == "observed") return StandardizerChoice::observed;
    if (s == "robust") return StandardizerChoice::robust;
    throw_usage("unknown standardizer '" + s + "' (expected | observed | robust)");
}

namespace {

std::string format_g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

MonitoringPath select_columns(const MonitoringPath& path, const std::vector<int>& cols) {
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
}

WeightSpec read_weight_file(const std::string& file, int n, int p) {
    std::ifstream in(file);
    if (!in) throw_data("cannot open weight file '" + file + "'");
    std::string line;
    if (!std::getline(in, line)) throw_data(file + ": empty weight file");
    std::vector<double> values;
    long rows = 0;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string cell;
        std::vector<double> row;
        while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
        if (static_cast<int>(row.size()) != p + 1)
            throw_data(file + ": weight rows need t plus " + std::to_string(p) + " columns");
        ++rows;
        for (int j = 0; j < p; ++j) values.push_back(row[j + 1]);
    }
    if (rows != n)
        throw Error(ErrorCategory::usage, "grid-mismatch",
                    file + ": " + std::to_string(rows) + " weight rows for a grid of " +
                        std::to_string(n));
    return WeightSpec::custom(n, p, std::move(values));
}

} // namespace

RunOutput run(const RunConfig& config, const Dataset& data, const Family& family) {
    if (config.tests.empty()) throw_usage("no tests requested");
    for (const auto& t : config.tests) {
        if (t != "a2" && t != "ks-norm" && t != "ks-sum" && t != "t-sd" && t != "cvm" && t != "q")
            throw_usage("unknown test '" + t + "'");
    }
    const bool wants_q = std::count(config.tests.begin(), config.tests.end(), "q") > 0;
    if (wants_q && config.weight == RunConfig::WeightChoice::none)
        throw_usage("the q test needs a weight (--weight trend | jump:<a> | optimal | custom:<file>)");

    RunOutput out;
    out.fit = family.fit(data.rows);

    switch (config.standardizer) {
        case StandardizerChoice::expected:
            out.path = canonical_process(data.rows, family, out.fit, InfoChoice::expected);
            break;
        case StandardizerChoice::observed:
            out.path = canonical_process(data.rows, family, out.fit, InfoChoice::observed);
            break;
        case StandardizerChoice::robust:
            out.path = robust_process(data.rows, family, out.fit);
            break;
    }

    const int n = out.path.n;
    const int p = out.path.p;
    NullTableCache cache(config.no_cache ? "" : config.cache_dir);
    auto table = [&](const FunctionalSpec& spec) {
        return cache.get_or_build(spec, config.grid, config.reps, config.seed, config.threads);
    };
    const WindowPartition part = WindowPartition::equal(config.windows);

    // weighted machinery, shared by the q test and diagnosis output
    WeightSpec weight;
    if (wants_q) {
        switch (config.weight) {
            case RunConfig::WeightChoice::trend:
                weight = WeightSpec::trend(n, p);
                for (int j = 0; j < p; ++j) out.weighted_components.push_back(j);
                break;
            case RunConfig::WeightChoice::jump:
                weight = WeightSpec::jump(config.jump_a, n, p);
                for (int j = 0; j < p; ++j) out.weighted_components.push_back(j);
                break;
            case RunConfig::WeightChoice::optimal: {
                if (!config.departure.has_value())
                    throw_usage("--weight optimal needs a departure (--shape and --delta)");
                OptimalWeight opt = optimal_weight(*config.departure, out.fit.expected_info, n);
                weight = std::move(opt.weight);
                out.weighted_components = std::move(opt.components);
                break;
            }
            case RunConfig::WeightChoice::custom:
                weight = read_weight_file(config.custom_weight_file, n, p);
                for (int j = 0; j < p; ++j) out.weighted_components.push_back(j);
                break;
            case RunConfig::WeightChoice::none:
                break;
        }
        const MonitoringPath base = out.weighted_components.size() == static_cast<size_t>(p)
                                        ? out.path
                                        : select_columns(out.path, out.weighted_components);
        out.weighted_path = weighted_process(base, weight);
    }

    for (const auto& t : config.tests) {
        if (t == "a2") {
            out.reports.push_back(chi2_window_test(out.path, part));
        } else if (t == "ks-norm") {
            out.reports.push_back(ks_norm_test(out.path, table(FunctionalSpec::max_sq_norm(p))));
        } else if (t == "ks-sum") {
            const NullTable component_table = table(FunctionalSpec::max_abs_bridge());
            const NullTable sum_table =
                p == 1 ? component_table : table(FunctionalSpec::sum_max_abs(p));
            out.reports.push_back(ks_sum_test(out.path, sum_table, component_table));
        } else if (t == "t-sd") {
            auto reports = ks_weighted_sd_test(
                out.path, config.epsilon, table(FunctionalSpec::max_abs_sd_weighted(config.epsilon)));
            for (auto& r : reports) out.reports.push_back(std::move(r));
        } else if (t == "cvm") {
            out.reports.push_back(cvm_test(out.path, table(FunctionalSpec::cvm(p))));
        } else if (t == "q") {
            out.reports.push_back(weighted_chi2_test(*out.weighted_path, weight, part));
        }
    }

    if (config.with_diagnosis) out.diagnoses = diagnose(out.path);
    return out;
}

// ---------------------------------------------------------------------------
// Text records
// ---------------------------------------------------------------------------

void write_fit(std::ostream& out, const Family& family, const FitResult& fit, int n) {
    out << "fit family=" << family.id() << " n=" << n
        << " loglik=" << format_g17(fit.log_likelihood) << " iterations=" << fit.iterations
        << "\n";
    const auto names = family.param_names();
    for (size_t j = 0; j < names.size(); ++j)
        out << "param " << names[j] << "=" << format_g17(fit.theta_hat[j]) << "\n";
    const int p = family.param_dim();
    auto write_matrix = [&](const char* label, const SymMatrix& m) {
        out << label << " dim=" << p << "\n";
        for (int i = 0; i < p; ++i) {
            for (int j = 0; j < p; ++j) out << (j ? "," : "") << format_g17(m(i, j));
            out << "\n";
        }
    };
    write_matrix("expected_info", fit.expected_info);
    write_matrix("observed_info", fit.observed_info);
    write_matrix("score_variance", fit.score_variance);
}

void write_report_file(std::ostream& out, const Family& family, const RunOutput& output, int n) {
    write_fit(out, family, output.fit, n);
    for (const auto& r : output.reports) r.write(out);
    for (const auto& d : output.diagnoses) d.write(out);
}

std::vector<std::string> path_file_comments(const RunOutput& output) {
    return {
        "band=" + format_g17(kBridgeBand95),
        "standardizer=" + output.path.standardizer,
    };
}

// ---------------------------------------------------------------------------
// Illustrations
// ---------------------------------------------------------------------------

Illustration simulate_illustration(int which, std::uint64_t seed, const RunConfig& base) {
    RunConfig config = base;
    Illustration ill;
    RngStream rng(seed, 0);

    if (which == 1) {
        // gamma scale break: equal means, sd ratio 1.25 after the midpoint
        const int n = 200;
        const double ratio_sq = 1.25 * 1.25;
        const std::vector<double> theta1 = {0.5, 0.5};
        const std::vector<double> theta2 = {theta1[0] / ratio_sq, theta1[1] / ratio_sq};
        const auto family = make_family("gamma");
        std::vector<std::vector<double>> thetas(n, theta1);
        for (int i = n / 2; i < n; ++i) thetas[i] = theta2;
        Dataset ds;
        ds.family_id = "gamma";
        ds.rows = family->simulate(thetas, rng);
        ds.response_columns = {"y"};
        ds.source = "illustration1";
        config.family_id = "gamma";
        if (config.tests.empty()) config.tests = {"ks-sum", "ks-norm"};
        config.with_diagnosis = true;
        ill.output = run(config, ds, *family);
        ill.data = std::move(ds);
        return ill;
    }
    if (which == 2) {
        // regression with a slowly inflating error standard deviation
        const int n = 200;
        const auto family = make_family("normreg", 2);
        std::vector<std::vector<double>> thetas(n);
        for (int i = 1; i <= n; ++i)
            thetas[i - 1] = {1.11, 2.22, 1.0 + 0.5 * static_cast<double>(i) / n};
        Dataset ds;
        ds.family_id = "normreg";
        ds.rows = family->simulate(thetas, rng);
        ds.response_columns = {"y"};
        ds.covariate_columns = {"x"};
        ds.intercept = true;
        ds.source = "illustration2";
        config.family_id = "normreg";
        if (config.tests.empty()) config.tests = {"ks-sum", "ks-norm"};
        config.with_diagnosis = true;
        ill.output = run(config, ds, *family);
        ill.data = std::move(ds);
        return ill;
    }
    throw_usage("illustration must be 1 or 2");
}

} // namespace constancy
