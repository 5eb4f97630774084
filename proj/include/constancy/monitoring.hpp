#ifndef CONSTANCY_MONITORING_HPP
#define CONSTANCY_MONITORING_HPP

#include <iosfwd>
#include <string>
#include <vector>

#include "constancy/models.hpp"

namespace constancy {

enum class PathKind { canonical, robust, plugin, weighted };

std::string to_string(PathKind kind);
PathKind path_kind_from_string(const std::string& s);

// Which matrix standardizes the cumulative score.
enum class InfoChoice { expected, observed };

// A p-component step function on the grid {k/n}: the value on
// [k/n, (k+1)/n) is values row k, with row 0 identically zero. Canonical and
// robust paths also end at (numerical) zero because the score sums to zero
// at the maximum likelihood estimate.
struct MonitoringPath {
    int n = 0;
    int p = 0;
    std::vector<double> values; // (n+1) x p, row-major
    PathKind kind = PathKind::canonical;
    std::string standardizer; // e.g. "expected;eigen-root"

    double at(int k, int j) const { return values[static_cast<size_t>(k) * p + j]; }
    double& at(int k, int j) { return values[static_cast<size_t>(k) * p + j]; }
    double increment(int i, int j) const { return at(i, j) - at(i - 1, j); } // i = 1..n
    double max_abs_component(int j) const;

    // Columnar text format: optional '#' comment lines, then the header
    // t,component_1..component_p,kind,n and one row per grid point, decimals
    // rendered with 17 significant digits.
    void write_csv(std::ostream& out, const std::vector<std::string>& comments = {}) const;
    static MonitoringPath read_csv(std::istream& in);
};

// Per-component weight values on the grid {i/n}, i = 1..n; K_j(i/n)
// multiplies the i-th increment of the path it is applied to.
struct WeightSpec {
    int n = 0;
    int p = 0;
    std::vector<double> values; // n x p, row-major
    std::string tag;            // "constant" | "trend" | "jump(a)" | "custom" | "optimal"

    double at(int i, int j) const { return values[static_cast<size_t>(i - 1) * p + j]; } // i = 1..n
    bool is_constant() const { return tag == "constant"; }

    static WeightSpec constant(int n, int p);
    static WeightSpec trend(int n, int p);       // K(s) = s - 1/2
    static WeightSpec jump(double a, int n, int p); // K(s) = 1{s >= a} - (1 - a)
    static WeightSpec custom(int n, int p, std::vector<double> values);

    void validate() const; // finite, at least one nonzero entry per component
};

// M_n: standardized cumulative estimated scores. The standardizer is the
// expected information at theta-hat by default; InfoChoice::observed selects
// the observed information instead.
MonitoringPath canonical_process(const std::vector<Observation>& data, const Family& family,
                                 const FitResult& fit, InfoChoice info = InfoChoice::expected);

// M*_n: same but standardized by the empirical score covariance K-hat.
MonitoringPath robust_process(const std::vector<Observation>& data, const Family& family,
                              const FitResult& fit);

// Regression form of the canonical process; requires a covariate family.
MonitoringPath regression_process(const std::vector<Observation>& data, const Family& family,
                                  const FitResult& fit, InfoChoice info = InfoChoice::expected);

// V_n: weights applied to the increments of an existing path.
MonitoringPath weighted_process(const MonitoringPath& path, const WeightSpec& w);

// cov{V_j(t1), V_j(t2)} per component, evaluated by grid Riemann sums of
// the weight values.
std::vector<double> weighted_covariance(const WeightSpec& w, double t1, double t2);

// ---------------------------------------------------------------------------
// Plug-in monitoring of a general scalar statistical functional via prefix
// estimates and an influence-function scale.
// ---------------------------------------------------------------------------

class PluginEstimator {
public:
    virtual ~PluginEstimator() = default;
    virtual std::string name() const = 0;
    virtual int min_prefix() const = 0;
    // alpha-hat from the first `prefix` observations
    virtual double estimate(const std::vector<Observation>& data, int prefix) const = 0;
    // empirical influence values at the full-sample estimate
    virtual std::vector<double> influence(const std::vector<Observation>& data) const = 0;
};

// Sample mean of a scalar response.
class MeanEstimator final : public PluginEstimator {
public:
    std::string name() const override { return "mean"; }
    int min_prefix() const override { return 1; }
    double estimate(const std::vector<Observation>& data, int prefix) const override;
    std::vector<double> influence(const std::vector<Observation>& data) const override;
};

// Sample correlation of paired responses; prefixes shorter than 10 are
// pinned to zero in the path.
class CorrelationEstimator final : public PluginEstimator {
public:
    std::string name() const override { return "correlation"; }
    int min_prefix() const override { return 10; }
    double estimate(const std::vector<Observation>& data, int prefix) const override;
    std::vector<double> influence(const std::vector<Observation>& data) const override;
};

// One-component path n^{-1/2} [nt] (alpha_[nt] - alpha_n) / tau-hat, zero
// below the estimator's minimum prefix.
MonitoringPath plugin_process(const std::vector<Observation>& data, const PluginEstimator& est);

} // namespace constancy

#endif
