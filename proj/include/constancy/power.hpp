#ifndef CONSTANCY_POWER_HPP
#define CONSTANCY_POWER_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "constancy/models.hpp"
#include "constancy/monitoring.hpp"
#include "constancy/stats.hpp"

namespace constancy {

// Departure shape h on [0,1] for one parameter component.
struct Shape {
    enum class Kind { jump, trend, custom };
    Kind kind = Kind::jump;
    double a = 0.5; // jump: zero on [0,a), then b
    double b = 1.0;
    double c = 1.0; // trend: h(s) = c s
    std::vector<double> table; // custom: values on {i/n}

    static Shape jump(double a, double b);
    static Shape trend(double c);
    static Shape custom(std::vector<double> table);

    double value(double s) const;
    std::string to_string() const;
};

// theta_i = theta0 + delta o h(i/n) / sqrt(n): magnitudes delta and
// per-component shapes h.
struct DepartureSpec {
    std::vector<double> delta;
    std::vector<Shape> h; // one per component

    // single shape applied to every component
    static DepartureSpec uniform(std::vector<double> delta, const Shape& shape);
    int dim() const { return static_cast<int>(delta.size()); }
};

// h evaluated on {i/n} with the per-component grid means h-bar.
struct DepartureGrid {
    int n = 0;
    int p = 0;
    std::vector<double> h;    // n x p
    std::vector<double> hbar; // p, grid means

    double at(int i, int j) const { return h[static_cast<size_t>(i - 1) * p + j]; } // i = 1..n
    double centered(int i, int j) const { return at(i, j) - hbar[j]; }
};

DepartureGrid evaluate_on_grid(const DepartureSpec& spec, int n);

// Mean curve of the monitoring path under the departure: the grid Riemann
// integral of J^{1/2} (delta o (h - hbar)), zero at both endpoints.
struct DriftCurve {
    int n = 0;
    int p = 0;
    std::vector<double> values; // (n+1) x p
    double at(int k, int j) const { return values[static_cast<size_t>(k) * p + j]; }
};

DriftCurve drift_curve(const DepartureSpec& spec, const SymMatrix& j_info, int grid_n);

// H_j(s) = (J^{1/2})_(j) {delta o (h(s) - hbar)} on the grid.
std::vector<double> departure_direction(const DepartureSpec& spec, const SymMatrix& j_info,
                                        int grid_n); // n x p, row-major

// The power-optimal weight K_j = H_j. Components whose direction vanishes
// identically carry no departure information and are dropped; `components`
// lists the surviving 0-based indices. All components vanishing (delta = 0)
// is a degenerate-weight error.
struct OptimalWeight {
    WeightSpec weight;
    std::vector<int> components;
};

OptimalWeight optimal_weight(const DepartureSpec& spec, const SymMatrix& j_info, int grid_n);

// Noncentrality of the windowed chi-square under the departure, per weight
// component and summed. `components` maps weight columns onto departure
// components (empty = identity). A constant weight uses the (m-1)-df form
// sum_k (int_{I_k} H)^2 / |I_k|.
struct Noncentrality {
    std::vector<double> per_component;
    double combined = 0.0;
};

Noncentrality noncentrality(const WeightSpec& w, const DepartureSpec& spec,
                            const SymMatrix& j_info, const WindowPartition& part,
                            const std::vector<int>& components = {});

// Which statistic a power study drives.
struct TestSelector {
    enum class Kind {
        chi2_window,   // A2 with constant weight
        weighted_chi2, // Q with the weight below
        max_component, // max_t |M_{n,j}| for one component
        max_weighted,  // max_t |V_{n,j}| for one component
    };
    enum class Weight { trend, jump, optimal };

    Kind kind = Kind::chi2_window;
    int windows = 5;
    Weight weight = Weight::optimal;
    double jump_a = 0.5;
    int component = 1; // 1-based, max tests

    std::string name() const;
};

struct PowerResult {
    double empirical_power = 0.0;
    double predicted_power = 0.0; // NaN for the supremum tests
    double mc_se = 0.0;
    double critical_value = 0.0;
};

// Level-matched power: the critical value is the Monte Carlo (1 - level)
// quantile of the same statistic under the null at the same n, so the
// comparison between tests is free of finite-n level error. Replication r
// uses streams 2r (null) and 2r + 1 (alternative).
PowerResult empirical_power(const Family& family, const std::vector<double>& theta0,
                            const DepartureSpec& spec, const TestSelector& selector, int n,
                            long replications, std::uint64_t seed, double level,
                            int threads = 0);

} // namespace constancy

#endif
