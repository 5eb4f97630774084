#ifndef CONSTANCY_RUNNER_HPP
#define CONSTANCY_RUNNER_HPP

#include <optional>
#include <string>
#include <vector>

#include "constancy/changepoint.hpp"
#include "constancy/dataset.hpp"
#include "constancy/nulldist.hpp"
#include "constancy/power.hpp"
#include "constancy/stats.hpp"

namespace constancy {

enum class StandardizerChoice { expected, observed, robust };

StandardizerChoice standardizer_from_string(const std::string& s);

struct RunConfig {
    std::string family_id;
    StandardizerChoice standardizer = StandardizerChoice::expected;
    std::vector<std::string> tests; // "a2", "ks-norm", "ks-sum", "t-sd", "cvm", "q"
    int windows = 5;
    double epsilon = 0.05;

    enum class WeightChoice { none, trend, jump, optimal, custom };
    WeightChoice weight = WeightChoice::none;
    double jump_a = 0.5;
    std::string custom_weight_file;
    std::optional<DepartureSpec> departure; // optimal weight needs one

    int grid = 1000;
    long reps = 100000;
    std::uint64_t seed = 1;
    std::string cache_dir;
    bool no_cache = false;
    int threads = 0;

    bool with_diagnosis = false;
};

struct RunOutput {
    FitResult fit;
    MonitoringPath path;
    std::optional<MonitoringPath> weighted_path;
    std::vector<int> weighted_components; // 0-based path components behind weighted_path
    std::vector<TestReport> reports;
    std::vector<ShapeDiagnosis> diagnoses;
};

// Fit, monitor, test, diagnose. Deterministic given the config seed.
RunOutput run(const RunConfig& config, const Dataset& data, const Family& family);

void write_fit(std::ostream& out, const Family& family, const FitResult& fit, int n);
void write_report_file(std::ostream& out, const Family& family, const RunOutput& output, int n);

// The 0.95 band for a single bridge component, recorded in path file headers.
inline constexpr double kBridgeBand95 = 1.358;

std::vector<std::string> path_file_comments(const RunOutput& output);

// Seeded end-to-end reconstructions of the two built-in synthetic
// experiments: (1) a gamma scale break at the midpoint with standard
// deviation ratio 1.25 at equal means, n = 200; (2) normal regression around
// 1.11 + 2.22 x with error standard deviation rising linearly from 1 to 1.5,
// n = 200.
struct Illustration {
    Dataset data;
    RunOutput output;
};

Illustration simulate_illustration(int which, std::uint64_t seed, const RunConfig& base);

} // namespace constancy

#endif
