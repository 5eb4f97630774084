#ifndef CONSTANCY_STATS_HPP
#define CONSTANCY_STATS_HPP

#include <iosfwd>
#include <string>
#include <variant>
#include <vector>

#include "constancy/monitoring.hpp"
#include "constancy/nulldist.hpp"

namespace constancy {

// Windows I_1..I_m partitioning (0,1]; increment i belongs to window k when
// b_{k-1} < i/n <= b_k.
struct WindowPartition {
    std::vector<double> boundaries; // 0 = b_0 < ... < b_m = 1

    static WindowPartition equal(int m);
    int windows() const { return static_cast<int>(boundaries.size()) - 1; }
    double length(int k) const { return boundaries[k + 1] - boundaries[k]; }
    int window_of(int i, int n) const; // 0-based window of increment i
    void validate(int n) const;        // every window catches at least one increment
};

struct ChiSquareRef {
    int df = 0;
};
struct NoncentralChiSquareRef {
    int df = 0;
    double lambda = 0.0;
};
struct SimulatedRef {
    std::string table_key;
};
using Reference = std::variant<ChiSquareRef, NoncentralChiSquareRef, SimulatedRef>;

struct ComponentResult {
    int index = 0; // 1-based
    double value = 0.0;
    double p_value = 1.0;
};

struct TestReport {
    std::string name;
    double value = 0.0;
    Reference reference;
    double p_value = 1.0;
    std::vector<ComponentResult> per_component;

    void write(std::ostream& out) const;
};

// Test 1: windowed chi-square. Per-component statistics against
// chi2(m - 1), combined against chi2(p (m - 1)).
TestReport chi2_window_test(const MonitoringPath& path, const WindowPartition& part);

// Test 2, squared-norm form: max_t ||M_n(t)||^2 with a simulated reference.
TestReport ks_norm_test(const MonitoringPath& path, const NullTable& table);

// Test 2, sum form: sum_j max_t |M_{n,j}(t)|. Per-component maxima are
// reported against the single-bridge table, the sum against sum_table (for
// p = 1 the two coincide).
TestReport ks_sum_test(const MonitoringPath& path, const NullTable& sum_table,
                       const NullTable& component_table);

// Inverse-standard-deviation weighted maxima, one report per component.
// Maxima run over both one-sided limits at grid points with
// eps <= k/n <= 1 - eps. With eps = 0.05 the asymptotic 0.90/0.95 points
// are about 2.89 and 3.15.
std::vector<TestReport> ks_weighted_sd_test(const MonitoringPath& path, double epsilon,
                                            const NullTable& table);

// Test 3: discrete Cramer-von Mises statistic with a simulated reference.
TestReport cvm_test(const MonitoringPath& path, const NullTable& table);

// Windowed chi-square for a weighted path: per-component statistics against
// chi2(m), combined against chi2(m p). A constant weight short-circuits to
// the Test 1 statistic with chi2(m - 1) references.
TestReport weighted_chi2_test(const MonitoringPath& vpath, const WeightSpec& w,
                              const WindowPartition& part);

} // namespace constancy

#endif
