#include "constancy/models.hpp"

#include <algorithm>
#include <cmath>

namespace constancy {

namespace {

constexpr double kTwoPiLog = 1.8378770664093454835606594728112; // log(2*pi)

[[noreturn]] void throw_region(const std::string& family) {
    throw Error(ErrorCategory::numerical, "parameter-region",
                family + ": parameter outside the open parameter region");
}

} // namespace

// ---------------------------------------------------------------------------
// Family base helpers
// ---------------------------------------------------------------------------

std::vector<Observation> Family::simulate(const std::vector<double>& theta, int n,
                                          RngStream& rng) const {
    std::vector<std::vector<double>> thetas(static_cast<size_t>(n), theta);
    return simulate(thetas, rng);
}

void Family::require_region(const std::vector<double>& theta) const {
    if (static_cast<int>(theta.size()) != param_dim() || !in_region(theta)) throw_region(id());
}

void Family::require_schema(const Observation& obs) const {
    if (static_cast<int>(obs.y.size()) != response_dim())
        throw_domain(id() + ": observation response has wrong shape");
    if (needs_covariates() && obs.x.empty())
        throw_domain(id() + ": observation is missing covariates");
}

SymMatrix Family::hessian(const Observation& obs, const std::vector<double>& theta) const {
    // central difference of the analytic score
    const int p = param_dim();
    const double cbrt_eps = 6.055454452393343e-06;
    Matrix h(p, p);
    for (int j = 0; j < p; ++j) {
        double step = cbrt_eps * std::max(1.0, std::fabs(theta[j]));
        std::vector<double> tp = theta, tm = theta;
        tp[j] += step;
        tm[j] -= step;
        while (!in_region(tp) || !in_region(tm)) {
            step *= 0.5;
            tp[j] = theta[j] + step;
            tm[j] = theta[j] - step;
            if (step < 1e-14) throw_region(id());
        }
        const std::vector<double> sp = score(obs, tp);
        const std::vector<double> sm = score(obs, tm);
        for (int i = 0; i < p; ++i) h(i, j) = (sp[i] - sm[i]) / (2.0 * step);
    }
    SymMatrix out(p);
    for (int i = 0; i < p; ++i)
        for (int j = i; j < p; ++j) out.set(i, j, 0.5 * (h(i, j) + h(j, i)));
    return out;
}

FitResult Family::finish_fit(const std::vector<Observation>& data, std::vector<double> theta_hat,
                             int iterations) const {
    const int p = param_dim();
    const double n = static_cast<double>(data.size());
    FitResult r;
    r.theta_hat = std::move(theta_hat);
    r.iterations = iterations;
    r.expected_info = expected_info(r.theta_hat, &data);

    SymMatrix obs_info(p);
    std::vector<double> mean_score(p, 0.0);
    std::vector<std::vector<double>> scores;
    scores.reserve(data.size());
    double loglik = 0.0;
    for (const Observation& obs : data) {
        loglik += log_density(obs, r.theta_hat);
        SymMatrix h = hessian(obs, r.theta_hat);
        for (int i = 0; i < p; ++i)
            for (int j = i; j < p; ++j) obs_info.add(i, j, -h(i, j) / n);
        scores.push_back(score(obs, r.theta_hat));
        for (int i = 0; i < p; ++i) mean_score[i] += scores.back()[i] / n;
    }
    r.log_likelihood = loglik;
    r.observed_info = obs_info;

    SymMatrix k_hat(p);
    for (const auto& s : scores)
        for (int i = 0; i < p; ++i)
            for (int j = i; j < p; ++j)
                k_hat.add(i, j, (s[i] - mean_score[i]) * (s[j] - mean_score[j]) / n);
    r.score_variance = k_hat;
    return r;
}

SymMatrix robust_score_variance(const Family& family, const std::vector<Observation>& data,
                                const std::vector<double>& theta_hat) {
    const int p = family.param_dim();
    const double n = static_cast<double>(data.size());
    std::vector<double> mean_score(p, 0.0);
    std::vector<std::vector<double>> scores;
    scores.reserve(data.size());
    for (const Observation& obs : data) {
        scores.push_back(family.score(obs, theta_hat));
        for (int i = 0; i < p; ++i) mean_score[i] += scores.back()[i] / n;
    }
    SymMatrix k_hat(p);
    for (const auto& s : scores)
        for (int i = 0; i < p; ++i)
            for (int j = i; j < p; ++j)
                k_hat.add(i, j, (s[i] - mean_score[i]) * (s[j] - mean_score[j]) / n);
    EigenResult e = sym_eigen(k_hat);
    if (e.values.back() < 1e-12)
        throw_singular_information(family.id() + ": empirical score covariance is rank-deficient");
    return k_hat;
}

// ---------------------------------------------------------------------------
// Normal(mu, sigma)
// ---------------------------------------------------------------------------

class NormalFamily final : public Family {
public:
    std::string id() const override { return "normal"; }
    int param_dim() const override { return 2; }
    int min_sample_size() const override { return 2; }
    std::vector<std::string> param_names() const override { return {"mu", "sigma"}; }
    bool in_region(const std::vector<double>& t) const override {
        return t.size() == 2 && t[1] > 0.0;
    }

    double log_density(const Observation& obs, const std::vector<double>& t) const override {
        require_schema(obs);
        const double z = (obs.y[0] - t[0]) / t[1];
        return -std::log(t[1]) - 0.5 * kTwoPiLog - 0.5 * z * z;
    }

    std::vector<double> score(const Observation& obs, const std::vector<double>& t) const override {
        require_schema(obs);
        const double z = (obs.y[0] - t[0]) / t[1];
        return {z / t[1], (z * z - 1.0) / t[1]};
    }

    SymMatrix hessian(const Observation& obs, const std::vector<double>& t) const override {
        const double s2 = t[1] * t[1];
        const double z = (obs.y[0] - t[0]) / t[1];
        SymMatrix h(2);
        h.set(0, 0, -1.0 / s2);
        h.set(0, 1, -2.0 * z / s2);
        h.set(1, 1, (1.0 - 3.0 * z * z) / s2);
        return h;
    }

    SymMatrix expected_info(const std::vector<double>& t,
                            const std::vector<Observation>*) const override {
        require_region(t);
        return SymMatrix::diagonal({1.0 / (t[1] * t[1]), 2.0 / (t[1] * t[1])});
    }

    FitResult fit(const std::vector<Observation>& data) const override {
        if (static_cast<int>(data.size()) < min_sample_size())
            throw_data("normal: need at least 2 observations");
        double m = 0.0;
        for (const auto& o : data) m += o.y[0];
        m /= static_cast<double>(data.size());
        double v = 0.0;
        for (const auto& o : data) v += (o.y[0] - m) * (o.y[0] - m);
        v /= static_cast<double>(data.size());
        if (!(v > 0.0)) throw_degenerate_fit("normal: zero variance data");
        return finish_fit(data, {m, std::sqrt(v)}, 0);
    }

    std::vector<Observation> simulate(const std::vector<std::vector<double>>& thetas,
                                      RngStream& rng) const override {
        std::vector<Observation> out(thetas.size());
        for (size_t i = 0; i < thetas.size(); ++i) {
            require_region(thetas[i]);
            out[i].y = {thetas[i][0] + thetas[i][1] * rng.next_normal()};
        }
        return out;
    }
};

// ---------------------------------------------------------------------------
// Gamma(a, b), density b^a / Gamma(a) * y^{a-1} exp(-b y)
// ---------------------------------------------------------------------------

class GammaFamily final : public Family {
public:
    std::string id() const override { return "gamma"; }
    int param_dim() const override { return 2; }
    int min_sample_size() const override { return 2; }
    std::vector<std::string> param_names() const override { return {"a", "b"}; }
    bool in_region(const std::vector<double>& t) const override {
        return t.size() == 2 && t[0] > 0.0 && t[1] > 0.0;
    }

    double log_density(const Observation& obs, const std::vector<double>& t) const override {
        require_schema(obs);
        const double y = obs.y[0];
        if (!(y > 0.0)) throw_domain("gamma: observation outside support (0, inf)");
        return t[0] * std::log(t[1]) - log_gamma(t[0]) + (t[0] - 1.0) * std::log(y) - t[1] * y;
    }

    std::vector<double> score(const Observation& obs, const std::vector<double>& t) const override {
        require_schema(obs);
        const double y = obs.y[0];
        if (!(y > 0.0)) throw_domain("gamma: observation outside support (0, inf)");
        return {std::log(y) - digamma(t[0]) + std::log(t[1]), t[0] / t[1] - y};
    }

    SymMatrix hessian(const Observation&, const std::vector<double>& t) const override {
        SymMatrix h(2);
        h.set(0, 0, -trigamma(t[0]));
        h.set(0, 1, 1.0 / t[1]);
        h.set(1, 1, -t[0] / (t[1] * t[1]));
        return h;
    }

    SymMatrix expected_info(const std::vector<double>& t,
                            const std::vector<Observation>*) const override {
        require_region(t);
        SymMatrix j(2);
        j.set(0, 0, trigamma(t[0]));
        j.set(0, 1, -1.0 / t[1]);
        j.set(1, 1, t[0] / (t[1] * t[1]));
        return j;
    }

    FitResult fit(const std::vector<Observation>& data) const override {
        if (static_cast<int>(data.size()) < min_sample_size())
            throw_data("gamma: need at least 2 observations");
        double mean_y = 0.0, mean_log = 0.0;
        for (const auto& o : data) {
            if (!(o.y[0] > 0.0)) throw_domain("gamma: observation outside support (0, inf)");
            mean_y += o.y[0];
            mean_log += std::log(o.y[0]);
        }
        mean_y /= static_cast<double>(data.size());
        mean_log /= static_cast<double>(data.size());
        const double s = std::log(mean_y) - mean_log; // > 0 unless constant data
        if (!(s > 0.0)) throw_degenerate_fit("gamma: constant data");

        // Solve psi(a) - log a = -s by safeguarded Newton in log a; the
        // left side is increasing in a with range (-inf, 0).
        double a = (3.0 - s + std::sqrt((s - 3.0) * (s - 3.0) + 24.0 * s)) / (12.0 * s);
        if (!(a > 0.0) || !std::isfinite(a)) a = 0.5 / s;
        double u = std::log(a);
        int iter = 0;
        for (; iter < 100; ++iter) {
            a = std::exp(u);
            const double f = digamma(a) - std::log(a) + s;
            const double fprime = a * trigamma(a) - 1.0; // d f / d u
            const double step = f / fprime;
            u -= step;
            if (std::fabs(step) < 1e-12) break;
        }
        if (iter >= 100) throw_degenerate_fit("gamma: shape solver did not converge");
        a = std::exp(u);
        return finish_fit(data, {a, a / mean_y}, iter + 1);
    }

    std::vector<Observation> simulate(const std::vector<std::vector<double>>& thetas,
                                      RngStream& rng) const override {
        std::vector<Observation> out(thetas.size());
        for (size_t i = 0; i < thetas.size(); ++i) {
            require_region(thetas[i]);
            out[i].y = {rng.next_gamma(thetas[i][0]) / thetas[i][1]};
        }
        return out;
    }
};

// ---------------------------------------------------------------------------
// Poisson(mu)
// ---------------------------------------------------------------------------

class PoissonFamily final : public Family {
public:
    std::string id() const override { return "poisson"; }
    int param_dim() const override { return 1; }
    int min_sample_size() const override { return 2; }
    std::vector<std::string> param_names() const override { return {"mu"}; }
    bool in_region(const std::vector<double>& t) const override {
        return t.size() == 1 && t[0] > 0.0;
    }

    static double check_count(double y, const char* family) {
        if (!(y >= 0.0) || std::fabs(y - std::nearbyint(y)) > 1e-9)
            throw_domain(std::string(family) + ": observation is not a non-negative count");
        return std::nearbyint(y);
    }

    double log_density(const Observation& obs, const std::vector<double>& t) const override {
        require_schema(obs);
        const double y = check_count(obs.y[0], "poisson");
        return y * std::log(t[0]) - t[0] - log_gamma(y + 1.0);
    }

    std::vector<double> score(const Observation& obs, const std::vector<double>& t) const override {
        require_schema(obs);
        const double y = check_count(obs.y[0], "poisson");
        return {(y - t[0]) / t[0]};
    }

    SymMatrix hessian(const Observation& obs, const std::vector<double>& t) const override {
        SymMatrix h(1);
        h.set(0, 0, -obs.y[0] / (t[0] * t[0]));
        return h;
    }

    SymMatrix expected_info(const std::vector<double>& t,
                            const std::vector<Observation>*) const override {
        require_region(t);
        return SymMatrix::diagonal({1.0 / t[0]});
    }

    FitResult fit(const std::vector<Observation>& data) const override {
        if (static_cast<int>(data.size()) < min_sample_size())
            throw_data("poisson: need at least 2 observations");
        double m = 0.0;
        for (const auto& o : data) m += check_count(o.y[0], "poisson");
        m /= static_cast<double>(data.size());
        if (!(m > 0.0)) throw_degenerate_fit("poisson: all counts are zero");
        return finish_fit(data, {m}, 0);
    }

    std::vector<Observation> simulate(const std::vector<std::vector<double>>& thetas,
                                      RngStream& rng) const override {
        std::vector<Observation> out(thetas.size());
        for (size_t i = 0; i < thetas.size(); ++i) {
            require_region(thetas[i]);
            out[i].y = {static_cast<double>(rng.next_poisson(thetas[i][0]))};
        }
        return out;
    }
};

// ---------------------------------------------------------------------------
// Multinomial with six categories; the sixth probability is 1 - sum of the
// first five, and observations are 0/1 incidence rows of length 6.
// ---------------------------------------------------------------------------

class Multinomial6Family final : public Family {
public:
    std::string id() const override { return "multinomial6"; }
    int param_dim() const override { return 5; }
    int response_dim() const override { return 6; }
    int min_sample_size() const override { return 6; }
    std::vector<std::string> param_names() const override {
        return {"p1", "p2", "p3", "p4", "p5"};
    }
    bool in_region(const std::vector<double>& t) const override {
        if (t.size() != 5) return false;
        double sum = 0.0;
        for (double p : t) {
            if (!(p > 0.0 && p < 1.0)) return false;
            sum += p;
        }
        return sum < 1.0;
    }

    static int incidence_category(const Observation& obs) {
        int hit = -1;
        for (int j = 0; j < 6; ++j) {
            const double v = obs.y[j];
            if (v == 0.0) continue;
            if (v != 1.0 || hit >= 0)
                throw_domain("multinomial6: response is not a one-hot incidence row");
            hit = j;
        }
        if (hit < 0) throw_domain("multinomial6: response is not a one-hot incidence row");
        return hit;
    }

    double log_density(const Observation& obs, const std::vector<double>& t) const override {
        require_schema(obs);
        const int j = incidence_category(obs);
        const double p6 = 1.0 - t[0] - t[1] - t[2] - t[3] - t[4];
        return std::log(j == 5 ? p6 : t[j]);
    }

    std::vector<double> score(const Observation& obs, const std::vector<double>& t) const override {
        require_schema(obs);
        const int cat = incidence_category(obs);
        const double p6 = 1.0 - t[0] - t[1] - t[2] - t[3] - t[4];
        std::vector<double> u(5, 0.0);
        if (cat == 5) {
            for (int j = 0; j < 5; ++j) u[j] = -1.0 / p6;
        } else {
            u[cat] = 1.0 / t[cat];
        }
        return u;
    }

    SymMatrix hessian(const Observation& obs, const std::vector<double>& t) const override {
        const int cat = incidence_category(obs);
        const double p6 = 1.0 - t[0] - t[1] - t[2] - t[3] - t[4];
        SymMatrix h(5);
        if (cat == 5) {
            for (int i = 0; i < 5; ++i)
                for (int j = i; j < 5; ++j) h.set(i, j, -1.0 / (p6 * p6));
        } else {
            h.set(cat, cat, -1.0 / (t[cat] * t[cat]));
        }
        return h;
    }

    SymMatrix expected_info(const std::vector<double>& t,
                            const std::vector<Observation>*) const override {
        require_region(t);
        const double p6 = 1.0 - t[0] - t[1] - t[2] - t[3] - t[4];
        SymMatrix j(5);
        for (int a = 0; a < 5; ++a)
            for (int b = a; b < 5; ++b) j.set(a, b, (a == b ? 1.0 / t[a] : 0.0) + 1.0 / p6);
        return j;
    }

    FitResult fit(const std::vector<Observation>& data) const override {
        if (static_cast<int>(data.size()) < min_sample_size())
            throw_data("multinomial6: need at least 6 observations");
        double counts[6] = {0, 0, 0, 0, 0, 0};
        for (const auto& o : data) {
            require_schema(o);
            counts[incidence_category(o)] += 1.0;
        }
        for (double c : counts)
            if (c == 0.0) throw_degenerate_fit("multinomial6: empty category in the fit");
        const double n = static_cast<double>(data.size());
        return finish_fit(data,
                          {counts[0] / n, counts[1] / n, counts[2] / n, counts[3] / n,
                           counts[4] / n},
                          0);
    }

    std::vector<Observation> simulate(const std::vector<std::vector<double>>& thetas,
                                      RngStream& rng) const override {
        std::vector<Observation> out(thetas.size());
        for (size_t i = 0; i < thetas.size(); ++i) {
            require_region(thetas[i]);
            std::vector<double> probs = thetas[i];
            probs.push_back(1.0 - probs[0] - probs[1] - probs[2] - probs[3] - probs[4]);
            const int cat = rng.next_category(probs);
            out[i].y.assign(6, 0.0);
            out[i].y[cat] = 1.0;
        }
        return out;
    }
};

// ---------------------------------------------------------------------------
// Binormal(mu1, sigma1, mu2, sigma2, rho) for paired responses.
// ---------------------------------------------------------------------------

class BinormalFamily final : public Family {
public:
    std::string id() const override { return "binormal"; }
    int param_dim() const override { return 5; }
    int response_dim() const override { return 2; }
    int min_sample_size() const override { return 3; }
    std::vector<std::string> param_names() const override {
        return {"mu1", "sigma1", "mu2", "sigma2", "rho"};
    }
    bool in_region(const std::vector<double>& t) const override {
        return t.size() == 5 && t[1] > 0.0 && t[3] > 0.0 && std::fabs(t[4]) < 1.0;
    }

    double log_density(const Observation& obs, const std::vector<double>& t) const override {
        require_schema(obs);
        const double z1 = (obs.y[0] - t[0]) / t[1];
        const double z2 = (obs.y[1] - t[2]) / t[3];
        const double rho = t[4];
        const double om = 1.0 - rho * rho;
        const double q = (z1 * z1 - 2.0 * rho * z1 * z2 + z2 * z2) / om;
        return -kTwoPiLog - std::log(t[1]) - std::log(t[3]) - 0.5 * std::log(om) - 0.5 * q;
    }

    std::vector<double> score(const Observation& obs, const std::vector<double>& t) const override {
        require_schema(obs);
        const double z1 = (obs.y[0] - t[0]) / t[1];
        const double z2 = (obs.y[1] - t[2]) / t[3];
        const double rho = t[4];
        const double c = 1.0 / (1.0 - rho * rho);
        return {
            c * (z1 - rho * z2) / t[1],
            (c * (z1 * z1 - rho * z1 * z2) - 1.0) / t[1],
            c * (z2 - rho * z1) / t[3],
            (c * (z2 * z2 - rho * z1 * z2) - 1.0) / t[3],
            rho * c + c * c * ((1.0 + rho * rho) * z1 * z2 - rho * (z1 * z1 + z2 * z2)),
        };
    }

    SymMatrix expected_info(const std::vector<double>& t,
                            const std::vector<Observation>*) const override {
        require_region(t);
        const double s1 = t[1], s2 = t[3], rho = t[4];
        const double c = 1.0 / (1.0 - rho * rho);
        SymMatrix j(5);
        j.set(0, 0, c / (s1 * s1));
        j.set(0, 2, -rho * c / (s1 * s2));
        j.set(2, 2, c / (s2 * s2));
        j.set(1, 1, (2.0 - rho * rho) * c / (s1 * s1));
        j.set(3, 3, (2.0 - rho * rho) * c / (s2 * s2));
        j.set(1, 3, -rho * rho * c / (s1 * s2));
        j.set(1, 4, -rho * c / s1);
        j.set(3, 4, -rho * c / s2);
        j.set(4, 4, (1.0 + rho * rho) * c * c);
        return j;
    }

    FitResult fit(const std::vector<Observation>& data) const override {
        const double n = static_cast<double>(data.size());
        if (static_cast<int>(data.size()) < min_sample_size())
            throw_data("binormal: need at least 3 observations");
        double m1 = 0.0, m2 = 0.0;
        for (const auto& o : data) {
            require_schema(o);
            m1 += o.y[0] / n;
            m2 += o.y[1] / n;
        }
        double v1 = 0.0, v2 = 0.0, cv = 0.0;
        for (const auto& o : data) {
            v1 += (o.y[0] - m1) * (o.y[0] - m1) / n;
            v2 += (o.y[1] - m2) * (o.y[1] - m2) / n;
            cv += (o.y[0] - m1) * (o.y[1] - m2) / n;
        }
        if (!(v1 > 0.0) || !(v2 > 0.0)) throw_degenerate_fit("binormal: zero variance data");
        const double rho = cv / std::sqrt(v1 * v2);
        if (!(std::fabs(rho) < 1.0 - 1e-12))
            throw_degenerate_fit("binormal: perfectly correlated data");
        return finish_fit(data, {m1, std::sqrt(v1), m2, std::sqrt(v2), rho}, 0);
    }

    std::vector<Observation> simulate(const std::vector<std::vector<double>>& thetas,
                                      RngStream& rng) const override {
        std::vector<Observation> out(thetas.size());
        for (size_t i = 0; i < thetas.size(); ++i) {
            const auto& t = thetas[i];
            require_region(t);
            const double z1 = rng.next_normal();
            const double z2 = t[4] * z1 + std::sqrt(1.0 - t[4] * t[4]) * rng.next_normal();
            out[i].y = {t[0] + t[1] * z1, t[2] + t[3] * z2};
        }
        return out;
    }
};

// ---------------------------------------------------------------------------
// Normal linear regression: y | x ~ N(x'beta, sigma^2). Covariate rows are
// taken as given (the ingest layer decides about an intercept column);
// simulate() emits an intercept plus uniform covariates.
// ---------------------------------------------------------------------------

class NormRegFamily final : public Family {
public:
    explicit NormRegFamily(int x_dim) : x_dim_(x_dim) {
        if (x_dim < 1) throw_usage("normreg: needs at least one covariate column");
    }

    std::string id() const override { return "normreg"; }
    int param_dim() const override { return x_dim_ + 1; }
    bool needs_covariates() const override { return true; }
    int min_sample_size() const override { return x_dim_ + 2; }
    std::vector<std::string> param_names() const override {
        std::vector<std::string> names;
        for (int j = 0; j < x_dim_; ++j) names.push_back("beta" + std::to_string(j));
        names.push_back("sigma");
        return names;
    }
    bool in_region(const std::vector<double>& t) const override {
        return static_cast<int>(t.size()) == x_dim_ + 1 && t.back() > 0.0;
    }

    double residual(const Observation& obs, const std::vector<double>& t) const {
        double mean = 0.0;
        for (int j = 0; j < x_dim_; ++j) mean += obs.x[j] * t[j];
        return (obs.y[0] - mean) / t.back();
    }

    double log_density(const Observation& obs, const std::vector<double>& t) const override {
        require_schema(obs);
        const double z = residual(obs, t);
        return -std::log(t.back()) - 0.5 * kTwoPiLog - 0.5 * z * z;
    }

    std::vector<double> score(const Observation& obs, const std::vector<double>& t) const override {
        require_schema(obs);
        const double sigma = t.back();
        const double z = residual(obs, t);
        std::vector<double> u(x_dim_ + 1);
        for (int j = 0; j < x_dim_; ++j) u[j] = z * obs.x[j] / sigma;
        u[x_dim_] = (z * z - 1.0) / sigma;
        return u;
    }

    SymMatrix hessian(const Observation& obs, const std::vector<double>& t) const override {
        const double sigma = t.back();
        const double s2 = sigma * sigma;
        const double z = residual(obs, t);
        SymMatrix h(x_dim_ + 1);
        for (int i = 0; i < x_dim_; ++i) {
            for (int j = i; j < x_dim_; ++j) h.set(i, j, -obs.x[i] * obs.x[j] / s2);
            h.set(i, x_dim_, -2.0 * z * obs.x[i] / s2);
        }
        h.set(x_dim_, x_dim_, (1.0 - 3.0 * z * z) / s2);
        return h;
    }

    SymMatrix expected_info(const std::vector<double>& t,
                            const std::vector<Observation>* data) const override {
        require_region(t);
        if (data == nullptr) throw_usage("normreg: expected information needs covariate rows");
        const double s2 = t.back() * t.back();
        const double n = static_cast<double>(data->size());
        SymMatrix j(x_dim_ + 1);
        for (const auto& o : *data)
            for (int a = 0; a < x_dim_; ++a)
                for (int b = a; b < x_dim_; ++b) j.add(a, b, o.x[a] * o.x[b] / (n * s2));
        j.set(x_dim_, x_dim_, 2.0 / s2);
        check_design_rank(j);
        return j;
    }

    FitResult fit(const std::vector<Observation>& data) const override {
        if (static_cast<int>(data.size()) < min_sample_size())
            throw_data("normreg: too few observations for the design");
        const double n = static_cast<double>(data.size());
        SymMatrix xtx(x_dim_);
        std::vector<double> xty(x_dim_, 0.0);
        for (const auto& o : data) {
            require_schema(o);
            for (int a = 0; a < x_dim_; ++a) {
                for (int b = a; b < x_dim_; ++b) xtx.add(a, b, o.x[a] * o.x[b]);
                xty[a] += o.x[a] * o.y[0];
            }
        }
        std::vector<double> beta;
        try {
            beta = solve_sym(xtx, xty, 1e-12 * n);
        } catch (const Error&) {
            throw_singular_information("normreg: singular design");
        }
        double rss = 0.0;
        for (const auto& o : data) {
            double mean = 0.0;
            for (int j = 0; j < x_dim_; ++j) mean += o.x[j] * beta[j];
            rss += (o.y[0] - mean) * (o.y[0] - mean);
        }
        const double v = rss / n;
        if (!(v > 0.0)) throw_degenerate_fit("normreg: zero residual variance");
        beta.push_back(std::sqrt(v));
        return finish_fit(data, std::move(beta), 0);
    }

    std::vector<Observation> simulate(const std::vector<std::vector<double>>& thetas,
                                      RngStream& rng) const override {
        std::vector<Observation> out(thetas.size());
        for (size_t i = 0; i < thetas.size(); ++i) {
            const auto& t = thetas[i];
            require_region(t);
            Observation o;
            o.x.resize(x_dim_);
            o.x[0] = 1.0;
            for (int j = 1; j < x_dim_; ++j) o.x[j] = rng.next_uniform();
            double mean = 0.0;
            for (int j = 0; j < x_dim_; ++j) mean += o.x[j] * t[j];
            o.y = {mean + t.back() * rng.next_normal()};
            out[i] = std::move(o);
        }
        return out;
    }

private:
    void check_design_rank(const SymMatrix& j) const {
        EigenResult e = sym_eigen(j);
        if (e.values.back() < 1e-12)
            throw_singular_information("normreg: design matrix has deficient rank");
    }

    int x_dim_;
};

// ---------------------------------------------------------------------------
// Poisson regression: y | x ~ Poisson(exp(x'beta)).
// ---------------------------------------------------------------------------

class PoisRegFamily final : public Family {
public:
    explicit PoisRegFamily(int x_dim) : x_dim_(x_dim) {
        if (x_dim < 1) throw_usage("poisreg: needs at least one covariate column");
    }

    std::string id() const override { return "poisreg"; }
    int param_dim() const override { return x_dim_; }
    bool needs_covariates() const override { return true; }
    int min_sample_size() const override { return x_dim_ + 1; }
    std::vector<std::string> param_names() const override {
        std::vector<std::string> names;
        for (int j = 0; j < x_dim_; ++j) names.push_back("beta" + std::to_string(j));
        return names;
    }
    bool in_region(const std::vector<double>& t) const override {
        return static_cast<int>(t.size()) == x_dim_;
    }

    double linear(const Observation& obs, const std::vector<double>& t) const {
        double eta = 0.0;
        for (int j = 0; j < x_dim_; ++j) eta += obs.x[j] * t[j];
        return eta;
    }

    double log_density(const Observation& obs, const std::vector<double>& t) const override {
        require_schema(obs);
        const double y = PoissonFamily::check_count(obs.y[0], "poisreg");
        const double eta = linear(obs, t);
        return y * eta - std::exp(eta) - log_gamma(y + 1.0);
    }

    std::vector<double> score(const Observation& obs, const std::vector<double>& t) const override {
        require_schema(obs);
        const double y = PoissonFamily::check_count(obs.y[0], "poisreg");
        const double r = y - std::exp(linear(obs, t));
        std::vector<double> u(x_dim_);
        for (int j = 0; j < x_dim_; ++j) u[j] = r * obs.x[j];
        return u;
    }

    SymMatrix hessian(const Observation& obs, const std::vector<double>& t) const override {
        const double w = std::exp(linear(obs, t));
        SymMatrix h(x_dim_);
        for (int a = 0; a < x_dim_; ++a)
            for (int b = a; b < x_dim_; ++b) h.set(a, b, -w * obs.x[a] * obs.x[b]);
        return h;
    }

    SymMatrix expected_info(const std::vector<double>& t,
                            const std::vector<Observation>* data) const override {
        require_region(t);
        if (data == nullptr) throw_usage("poisreg: expected information needs covariate rows");
        const double n = static_cast<double>(data->size());
        SymMatrix j(x_dim_);
        for (const auto& o : *data) {
            const double w = std::exp(linear(o, t));
            for (int a = 0; a < x_dim_; ++a)
                for (int b = a; b < x_dim_; ++b) j.add(a, b, w * o.x[a] * o.x[b] / n);
        }
        EigenResult e = sym_eigen(j);
        if (e.values.back() < 1e-12)
            throw_singular_information("poisreg: design matrix has deficient rank");
        return j;
    }

    FitResult fit(const std::vector<Observation>& data) const override {
        if (static_cast<int>(data.size()) < min_sample_size())
            throw_data("poisreg: too few observations for the design");
        double ybar = 0.0;
        bool intercept_column = true;
        for (const auto& o : data) {
            require_schema(o);
            ybar += PoissonFamily::check_count(o.y[0], "poisreg") / static_cast<double>(data.size());
            if (o.x[0] != 1.0) intercept_column = false;
        }

        std::vector<double> beta(x_dim_, 0.0);
        if (intercept_column) beta[0] = std::log(ybar + 0.5);

        auto total_score = [&](const std::vector<double>& b) {
            std::vector<double> g(x_dim_, 0.0);
            for (const auto& o : data) {
                const double eta = linear(o, b);
                if (eta > 500.0) throw_degenerate_fit("poisreg: diverging linear predictor");
                const double r = o.y[0] - std::exp(eta);
                for (int j = 0; j < x_dim_; ++j) g[j] += r * o.x[j];
            }
            return g;
        };
        auto loglik = [&](const std::vector<double>& b) {
            double ll = 0.0;
            for (const auto& o : data) {
                const double eta = linear(o, b);
                ll += o.y[0] * eta - std::exp(eta);
            }
            return ll;
        };

        std::vector<double> g = total_score(beta);
        double sup0 = 0.0;
        for (double v : g) sup0 = std::max(sup0, std::fabs(v));
        const double tol = 1e-10 * std::max(1.0, sup0);

        double ll = loglik(beta);
        int iter = 0;
        for (; iter < 100; ++iter) {
            double sup = 0.0;
            for (double v : g) sup = std::max(sup, std::fabs(v));
            if (sup <= tol) break;

            SymMatrix info(x_dim_);
            for (const auto& o : data) {
                const double w = std::exp(linear(o, beta));
                for (int a = 0; a < x_dim_; ++a)
                    for (int b = a; b < x_dim_; ++b) info.add(a, b, w * o.x[a] * o.x[b]);
            }
            std::vector<double> step;
            try {
                step = solve_sym(info, g, 1e-12);
            } catch (const Error&) {
                throw_singular_information("poisreg: singular design");
            }

            double scale = 1.0;
            bool moved = false;
            for (int half = 0; half < 30; ++half) {
                std::vector<double> cand(beta);
                for (int j = 0; j < x_dim_; ++j) cand[j] += scale * step[j];
                const double cand_ll = loglik(cand);
                if (cand_ll >= ll - 1e-12 * std::fabs(ll)) {
                    beta = std::move(cand);
                    ll = cand_ll;
                    moved = true;
                    break;
                }
                scale *= 0.5;
            }
            if (!moved) throw_degenerate_fit("poisreg: step halving failed (separation?)");
            g = total_score(beta);
        }
        if (iter >= 100) throw_degenerate_fit("poisreg: Newton iteration did not converge");
        return finish_fit(data, std::move(beta), iter);
    }

    std::vector<Observation> simulate(const std::vector<std::vector<double>>& thetas,
                                      RngStream& rng) const override {
        std::vector<Observation> out(thetas.size());
        for (size_t i = 0; i < thetas.size(); ++i) {
            const auto& t = thetas[i];
            require_region(t);
            Observation o;
            o.x.resize(x_dim_);
            o.x[0] = 1.0;
            for (int j = 1; j < x_dim_; ++j) o.x[j] = rng.next_uniform();
            o.y = {static_cast<double>(rng.next_poisson(std::exp(linear(o, t))))};
            out[i] = std::move(o);
        }
        return out;
    }

private:
    int x_dim_;
};

// ---------------------------------------------------------------------------
// Two-state Markov chain with transition probabilities p01 and p10. The
// first observation is fixed and given: it carries prev_state = -1 and
// contributes nothing to likelihood or score.
// ---------------------------------------------------------------------------

class Markov2Family final : public Family {
public:
    std::string id() const override { return "markov2"; }
    int param_dim() const override { return 2; }
    bool is_markov() const override { return true; }
    int min_sample_size() const override { return 3; }
    std::vector<std::string> param_names() const override { return {"p01", "p10"}; }
    bool in_region(const std::vector<double>& t) const override {
        return t.size() == 2 && t[0] > 0.0 && t[0] < 1.0 && t[1] > 0.0 && t[1] < 1.0;
    }

    static int check_state(double y) {
        if (y != 0.0 && y != 1.0) throw_domain("markov2: state must be 0 or 1");
        return static_cast<int>(y);
    }

    double log_density(const Observation& obs, const std::vector<double>& t) const override {
        require_schema(obs);
        if (obs.prev_state < 0) return 0.0;
        const int y = check_state(obs.y[0]);
        if (obs.prev_state == 0) return std::log(y == 1 ? t[0] : 1.0 - t[0]);
        return std::log(y == 0 ? t[1] : 1.0 - t[1]);
    }

    std::vector<double> score(const Observation& obs, const std::vector<double>& t) const override {
        require_schema(obs);
        if (obs.prev_state < 0) return {0.0, 0.0};
        const int y = check_state(obs.y[0]);
        if (obs.prev_state == 0)
            return {(y == 1 ? 1.0 / t[0] : -1.0 / (1.0 - t[0])), 0.0};
        return {0.0, (y == 0 ? 1.0 / t[1] : -1.0 / (1.0 - t[1]))};
    }

    SymMatrix hessian(const Observation& obs, const std::vector<double>& t) const override {
        SymMatrix h(2);
        if (obs.prev_state < 0) return h;
        const int y = check_state(obs.y[0]);
        if (obs.prev_state == 0) {
            const double p = t[0];
            h.set(0, 0, -(y == 1 ? 1.0 / (p * p) : 1.0 / ((1.0 - p) * (1.0 - p))));
        } else {
            const double p = t[1];
            h.set(1, 1, -(y == 0 ? 1.0 / (p * p) : 1.0 / ((1.0 - p) * (1.0 - p))));
        }
        return h;
    }

    // Conditional information per transition, weighted by the occupation of
    // each origin state: empirical when data are supplied, stationary
    // otherwise.
    SymMatrix expected_info(const std::vector<double>& t,
                            const std::vector<Observation>* data) const override {
        require_region(t);
        double w0, w1;
        if (data != nullptr && data->size() > 1) {
            double n0 = 0.0, n1 = 0.0;
            for (const auto& o : *data) {
                if (o.prev_state == 0) n0 += 1.0;
                if (o.prev_state == 1) n1 += 1.0;
            }
            const double total = n0 + n1;
            if (total == 0.0) throw_data("markov2: no transitions in the data");
            w0 = n0 / total;
            w1 = n1 / total;
        } else {
            w0 = t[1] / (t[0] + t[1]);
            w1 = t[0] / (t[0] + t[1]);
        }
        return SymMatrix::diagonal(
            {w0 / (t[0] * (1.0 - t[0])), w1 / (t[1] * (1.0 - t[1]))});
    }

    FitResult fit(const std::vector<Observation>& data) const override {
        if (static_cast<int>(data.size()) < min_sample_size())
            throw_data("markov2: need at least 3 observations");
        double n0 = 0.0, n01 = 0.0, n1 = 0.0, n10 = 0.0;
        for (const auto& o : data) {
            require_schema(o);
            const int y = check_state(o.y[0]);
            if (o.prev_state == 0) {
                n0 += 1.0;
                if (y == 1) n01 += 1.0;
            } else if (o.prev_state == 1) {
                n1 += 1.0;
                if (y == 0) n10 += 1.0;
            }
        }
        if (n0 == 0.0 || n1 == 0.0)
            throw_degenerate_fit("markov2: a state is never left from");
        const double p01 = n01 / n0;
        const double p10 = n10 / n1;
        if (!(p01 > 0.0 && p01 < 1.0 && p10 > 0.0 && p10 < 1.0))
            throw_degenerate_fit("markov2: boundary transition frequency");
        return finish_fit(data, {p01, p10}, 0);
    }

    std::vector<Observation> simulate(const std::vector<std::vector<double>>& thetas,
                                      RngStream& rng) const override {
        std::vector<Observation> out(thetas.size());
        if (thetas.empty()) return out;
        require_region(thetas[0]);
        const double pi1 = thetas[0][0] / (thetas[0][0] + thetas[0][1]);
        int state = rng.next_uniform() < pi1 ? 1 : 0;
        out[0].y = {static_cast<double>(state)};
        out[0].prev_state = -1;
        for (size_t i = 1; i < thetas.size(); ++i) {
            const auto& t = thetas[i];
            require_region(t);
            const double u = rng.next_uniform();
            const int next = state == 0 ? (u < t[0] ? 1 : 0) : (u < t[1] ? 0 : 1);
            out[i].y = {static_cast<double>(next)};
            out[i].prev_state = state;
            state = next;
        }
        return out;
    }
};

// ---------------------------------------------------------------------------
// Catalog
// ---------------------------------------------------------------------------

std::shared_ptr<const Family> make_family(const std::string& id, int covariate_dim) {
    if (id == "normal") return std::make_shared<NormalFamily>();
    if (id == "gamma") return std::make_shared<GammaFamily>();
    if (id == "poisson") return std::make_shared<PoissonFamily>();
    if (id == "multinomial6") return std::make_shared<Multinomial6Family>();
    if (id == "binormal") return std::make_shared<BinormalFamily>();
    if (id == "normreg") return std::make_shared<NormRegFamily>(covariate_dim);
    if (id == "poisreg") return std::make_shared<PoisRegFamily>(covariate_dim);
    if (id == "markov2") return std::make_shared<Markov2Family>();
    throw_usage("unknown family '" + id + "'");
}

std::vector<std::string> family_ids() {
    return {"normal", "gamma",  "poisson", "multinomial6",
            "binormal", "normreg", "poisreg", "markov2"};
}

} // namespace constancy
