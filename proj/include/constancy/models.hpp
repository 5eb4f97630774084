#ifndef CONSTANCY_MODELS_HPP
#define CONSTANCY_MODELS_HPP

#include <memory>
#include <string>
#include <vector>

#include "constancy/numerics.hpp"

namespace constancy {

// One data point. The response layout is family-specific: 1 value for the
// scalar families, an (x, y) pair for binormal, a 6-entry incidence row for
// multinomial6. Regression families carry covariates; the two-state Markov
// family carries the previous state (-1 on the first, conditioned-on row).
struct Observation {
    std::vector<double> y;
    std::vector<double> x;
    int prev_state = -1;
};

struct ParamVector {
    std::string family_id;
    std::vector<double> values;
};

struct FitResult {
    std::vector<double> theta_hat;
    SymMatrix expected_info;   // J-hat at theta_hat
    SymMatrix observed_info;   // -n^{-1} sum of per-observation Hessians
    SymMatrix score_variance;  // K-hat: empirical covariance (divisor n) of scores
    double log_likelihood = 0.0;
    int iterations = 0;
};

// A parametric family: log-density, score, per-observation Hessian, expected
// information, maximum likelihood fit, and seeded simulation. Families are
// immutable descriptors; every method is const and reentrant.
//
// Convention used throughout: variance-type quantities use divisor n, never
// n - 1, matching the maximum likelihood estimators.
class Family {
public:
    virtual ~Family() = default;

    virtual std::string id() const = 0;
    virtual int param_dim() const = 0;
    virtual int response_dim() const { return 1; }
    virtual bool needs_covariates() const { return false; }
    virtual bool is_markov() const { return false; }
    virtual int min_sample_size() const = 0;
    virtual std::vector<std::string> param_names() const = 0;
    virtual bool in_region(const std::vector<double>& theta) const = 0;

    virtual double log_density(const Observation& obs, const std::vector<double>& theta) const = 0;
    virtual std::vector<double> score(const Observation& obs, const std::vector<double>& theta) const = 0;

    // Hessian of log f at one observation. Default is a central finite
    // difference of the analytic score; families with simple closed forms
    // override it.
    virtual SymMatrix hessian(const Observation& obs, const std::vector<double>& theta) const;

    // Expected information J. Regression families average V(x_i, theta) over
    // the supplied rows; the Markov family weights the conditional
    // information by the empirical occupation of each state.
    virtual SymMatrix expected_info(const std::vector<double>& theta,
                                    const std::vector<Observation>* data = nullptr) const = 0;

    virtual FitResult fit(const std::vector<Observation>& data) const = 0;

    // Generates a sequence with per-index parameters (all equal under the
    // null; varying under local alternatives). Regression families draw
    // their own covariates, the Markov family runs its chain.
    virtual std::vector<Observation> simulate(const std::vector<std::vector<double>>& thetas,
                                              RngStream& rng) const = 0;
    std::vector<Observation> simulate(const std::vector<double>& theta, int n, RngStream& rng) const;

protected:
    void require_region(const std::vector<double>& theta) const;
    void require_schema(const Observation& obs) const;
    FitResult finish_fit(const std::vector<Observation>& data, std::vector<double> theta_hat,
                         int iterations) const;
};

// Empirical covariance (divisor n) of the per-observation scores at
// theta_hat; throws singular-information when rank-deficient.
SymMatrix robust_score_variance(const Family& family, const std::vector<Observation>& data,
                                const std::vector<double>& theta_hat);

// Family identifiers: "normal", "gamma", "poisson", "multinomial6",
// "binormal", "normreg", "poisreg", "markov2". Regression families take the
// covariate count (excluding the intercept handled by the caller).
std::shared_ptr<const Family> make_family(const std::string& id, int covariate_dim = 0);
std::vector<std::string> family_ids();

} // namespace constancy

#endif
