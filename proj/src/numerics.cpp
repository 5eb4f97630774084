#include "constancy/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <mutex>
#include <numeric>
#include <thread>

namespace constancy {

// ---------------------------------------------------------------------------
// Matrix
// ---------------------------------------------------------------------------

Matrix Matrix::identity(int n) {
    Matrix m(n, n);
    for (int i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

Matrix Matrix::transposed() const {
    Matrix t(cols_, rows_);
    for (int i = 0; i < rows_; ++i)
        for (int j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
    return t;
}

Matrix Matrix::operator*(const Matrix& rhs) const {
    if (cols_ != rhs.rows_) throw_internal("matrix product shape mismatch");
    Matrix out(rows_, rhs.cols_);
    for (int i = 0; i < rows_; ++i)
        for (int k = 0; k < cols_; ++k) {
            const double v = (*this)(i, k);
            if (v == 0.0) continue;
            for (int j = 0; j < rhs.cols_; ++j) out(i, j) += v * rhs(k, j);
        }
    return out;
}

std::vector<double> Matrix::operator*(const std::vector<double>& v) const {
    if (static_cast<int>(v.size()) != cols_) throw_internal("matrix-vector shape mismatch");
    std::vector<double> out(rows_, 0.0);
    for (int i = 0; i < rows_; ++i) {
        double s = 0.0;
        for (int j = 0; j < cols_; ++j) s += (*this)(i, j) * v[j];
        out[i] = s;
    }
    return out;
}

// ---------------------------------------------------------------------------
// SymMatrix
// ---------------------------------------------------------------------------

SymMatrix SymMatrix::identity(int dim) {
    SymMatrix m(dim);
    for (int i = 0; i < dim; ++i) m.set(i, i, 1.0);
    return m;
}

SymMatrix SymMatrix::diagonal(const std::vector<double>& d) {
    SymMatrix m(static_cast<int>(d.size()));
    for (int i = 0; i < m.dim(); ++i) m.set(i, i, d[i]);
    return m;
}

std::vector<double> SymMatrix::operator*(const std::vector<double>& v) const {
    if (static_cast<int>(v.size()) != dim_) throw_internal("symmetric matrix-vector shape mismatch");
    std::vector<double> out(dim_, 0.0);
    for (int i = 0; i < dim_; ++i) out[i] = row_dot(i, v);
    return out;
}

double SymMatrix::row_dot(int i, const std::vector<double>& v) const {
    double s = 0.0;
    for (int j = 0; j < dim_; ++j) s += (*this)(i, j) * v[j];
    return s;
}

double SymMatrix::quad_form(const std::vector<double>& v) const {
    double s = 0.0;
    for (int i = 0; i < dim_; ++i) s += v[i] * row_dot(i, v);
    return s;
}

double SymMatrix::trace() const {
    double s = 0.0;
    for (int i = 0; i < dim_; ++i) s += (*this)(i, i);
    return s;
}

double SymMatrix::frobenius_norm() const {
    double s = 0.0;
    for (int i = 0; i < dim_; ++i)
        for (int j = 0; j < dim_; ++j) s += (*this)(i, j) * (*this)(i, j);
    return std::sqrt(s);
}

Matrix SymMatrix::as_matrix() const {
    Matrix m(dim_, dim_);
    for (int i = 0; i < dim_; ++i)
        for (int j = 0; j < dim_; ++j) m(i, j) = (*this)(i, j);
    return m;
}

// ---------------------------------------------------------------------------
// Jacobi eigenvalues
// ---------------------------------------------------------------------------

EigenResult sym_eigen(const SymMatrix& m) {
    const int p = m.dim();
    Matrix a = m.as_matrix();
    Matrix v = Matrix::identity(p);
    const double tol = 1e-14 * std::max(m.frobenius_norm(), 1e-300);
    const int max_sweeps = 100;

    auto off_diag = [&]() {
        double s = 0.0;
        for (int i = 0; i < p; ++i)
            for (int j = i + 1; j < p; ++j) s += a(i, j) * a(i, j);
        return std::sqrt(2.0 * s);
    };

    int sweep = 0;
    while (off_diag() > tol) {
        if (++sweep > max_sweeps) throw_internal("Jacobi eigen solver failed to converge");
        for (int q = 1; q < p; ++q) {
            for (int r = 0; r < q; ++r) {
                const double apq = a(r, q);
                if (std::fabs(apq) <= 1e-300) continue;
                const double theta = (a(q, q) - a(r, r)) / (2.0 * apq);
                const double t = (theta >= 0 ? 1.0 : -1.0) /
                                 (std::fabs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                const double tau = s / (1.0 + c);
                const double arr = a(r, r), aqq = a(q, q);
                a(r, r) = arr - t * apq;
                a(q, q) = aqq + t * apq;
                a(r, q) = 0.0;
                a(q, r) = 0.0;
                for (int k = 0; k < p; ++k) {
                    if (k != r && k != q) {
                        const double akr = a(k, r), akq = a(k, q);
                        a(k, r) = akr - s * (akq + tau * akr);
                        a(r, k) = a(k, r);
                        a(k, q) = akq + s * (akr - tau * akq);
                        a(q, k) = a(k, q);
                    }
                    const double vkr = v(k, r), vkq = v(k, q);
                    v(k, r) = vkr - s * (vkq + tau * vkr);
                    v(k, q) = vkq + s * (vkr - tau * vkq);
                }
            }
        }
    }

    // columns of v are eigenvectors of a; sort descending and emit rows
    std::vector<int> order(p);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int i, int j) { return a(i, i) > a(j, j); });

    EigenResult out;
    out.values.resize(p);
    out.vectors = Matrix(p, p);
    for (int i = 0; i < p; ++i) {
        out.values[i] = a(order[i], order[i]);
        for (int k = 0; k < p; ++k) out.vectors(i, k) = v(k, order[i]);
    }
    return out;
}

namespace {

SymMatrix eigen_transform(const SymMatrix& m, double eigen_floor, const char* what,
                          const std::function<double(double)>& f) {
    EigenResult e = sym_eigen(m);
    const int p = m.dim();
    for (double lam : e.values) {
        if (lam < eigen_floor) {
            throw_singular_information(std::string(what) +
                                       ": eigenvalue " + std::to_string(lam) +
                                       " below floor " + std::to_string(eigen_floor));
        }
    }
    SymMatrix out(p);
    for (int i = 0; i < p; ++i) {
        for (int j = i; j < p; ++j) {
            double s = 0.0;
            for (int k = 0; k < p; ++k) s += e.vectors(k, i) * f(e.values[k]) * e.vectors(k, j);
            out.set(i, j, s);
        }
    }
    return out;
}

} // namespace

SymMatrix inv_sqrt(const SymMatrix& m, double eigen_floor) {
    return eigen_transform(m, eigen_floor, "inv_sqrt", [](double l) { return 1.0 / std::sqrt(l); });
}

SymMatrix sqrt_sym(const SymMatrix& m, double eigen_floor) {
    return eigen_transform(m, eigen_floor, "sqrt_sym", [](double l) { return std::sqrt(l); });
}

SymMatrix inv_sym(const SymMatrix& m, double eigen_floor) {
    return eigen_transform(m, eigen_floor, "inv_sym", [](double l) { return 1.0 / l; });
}

std::vector<double> solve_sym(const SymMatrix& m, const std::vector<double>& rhs, double eigen_floor) {
    return inv_sym(m, eigen_floor) * rhs;
}

// ---------------------------------------------------------------------------
// digamma / trigamma / log_gamma
// ---------------------------------------------------------------------------

namespace {

void check_positive(double x, const char* fn) {
    if (!(x > 0.0)) throw_domain(std::string(fn) + " requires x > 0");
}

// Kahan-compensated accumulation for the recurrence prefixes; the shifted
// part can dwarf the asymptotic tail for small x.
struct CompensatedSum {
    double s = 0.0, c = 0.0;
    void add(double v) {
        const double y = v - c;
        const double t = s + y;
        c = (t - s) - y;
        s = t;
    }
};

} // namespace

double digamma(double x) {
    check_positive(x, "digamma");
    CompensatedSum shift;
    while (x < 10.0) {
        shift.add(-1.0 / x);
        x += 1.0;
    }
    // psi(x) ~ ln x - 1/(2x) - sum B_{2n} / (2n x^{2n})
    const double z = 1.0 / (x * x);
    double series = z * (1.0 / 12.0 +
                    z * (-1.0 / 120.0 +
                    z * (1.0 / 252.0 +
                    z * (-1.0 / 240.0 +
                    z * (1.0 / 132.0 +
                    z * (-691.0 / 32760.0 +
                    z * (1.0 / 12.0)))))));
    shift.add(std::log(x) - 0.5 / x - series);
    return shift.s;
}

double trigamma(double x) {
    check_positive(x, "trigamma");
    CompensatedSum shift;
    while (x < 10.0) {
        shift.add(1.0 / (x * x));
        x += 1.0;
    }
    // psi'(x) ~ 1/x + 1/(2x^2) + sum B_{2n} / x^{2n+1}
    const double z = 1.0 / (x * x);
    double series = 1.0 / 6.0 +
                    z * (-1.0 / 30.0 +
                    z * (1.0 / 42.0 +
                    z * (-1.0 / 30.0 +
                    z * (5.0 / 66.0 +
                    z * (-691.0 / 2730.0 +
                    z * (7.0 / 6.0))))));
    shift.add(1.0 / x + 0.5 * z + series * z / x);
    return shift.s;
}

double log_gamma(double x) {
    check_positive(x, "log_gamma");
    CompensatedSum shift;
    while (x < 10.0) {
        shift.add(-std::log(x));
        x += 1.0;
    }
    const double z = 1.0 / (x * x);
    double series = 1.0 / 12.0 +
                    z * (-1.0 / 360.0 +
                    z * (1.0 / 1260.0 +
                    z * (-1.0 / 1680.0 +
                    z * (1.0 / 1188.0))));
    const double half_log_2pi = 0.91893853320467274178032973640562;
    shift.add((x - 0.5) * std::log(x) - x + half_log_2pi + series / x);
    return shift.s;
}

// ---------------------------------------------------------------------------
// Incomplete gamma and chi-square
// ---------------------------------------------------------------------------

namespace {

// Series expansion of P(a, x), valid for x < a + 1.
double lower_gamma_series(double a, double x) {
    double term = 1.0 / a;
    double sum = term;
    double ap = a;
    for (int n = 0; n < 500; ++n) {
        ap += 1.0;
        term *= x / ap;
        sum += term;
        if (std::fabs(term) < std::fabs(sum) * 1e-16) break;
    }
    return sum * std::exp(-x + a * std::log(x) - log_gamma(a));
}

// Lentz continued fraction for Q(a, x), valid for x >= a + 1.
double upper_gamma_cf(double a, double x) {
    const double tiny = 1e-300;
    double b = x + 1.0 - a;
    double c = 1.0 / tiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i <= 500; ++i) {
        const double an = -i * (i - a);
        b += 2.0;
        d = an * d + b;
        if (std::fabs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double delta = d * c;
        h *= delta;
        if (std::fabs(delta - 1.0) < 1e-16) break;
    }
    return h * std::exp(-x + a * std::log(x) - log_gamma(a));
}

} // namespace

double reg_lower_gamma(double a, double x) {
    if (!(a > 0.0)) throw_domain("reg_lower_gamma requires a > 0");
    if (x <= 0.0) return 0.0;
    if (x < a + 1.0) return lower_gamma_series(a, x);
    return 1.0 - upper_gamma_cf(a, x);
}

double reg_upper_gamma(double a, double x) {
    if (!(a > 0.0)) throw_domain("reg_upper_gamma requires a > 0");
    if (x <= 0.0) return 1.0;
    if (x < a + 1.0) return 1.0 - lower_gamma_series(a, x);
    return upper_gamma_cf(a, x);
}

double chi2_cdf(double x, double df) {
    if (x <= 0.0) return 0.0;
    return reg_lower_gamma(0.5 * df, 0.5 * x);
}

double chi2_sf(double x, double df) {
    if (x <= 0.0) return 1.0;
    return reg_upper_gamma(0.5 * df, 0.5 * x);
}

double chi2_quantile(double p, double df) {
    if (!(p >= 0.0 && p < 1.0)) throw_domain("chi2_quantile requires p in [0,1)");
    if (p == 0.0) return 0.0;
    double lo = 0.0;
    double hi = df + 10.0;
    while (chi2_cdf(hi, df) < p) hi *= 2.0;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (chi2_cdf(mid, df) < p)
            lo = mid;
        else
            hi = mid;
        if (hi - lo < 1e-12 * (1.0 + hi)) break;
    }
    return 0.5 * (lo + hi);
}

double noncentral_chi2_cdf(double x, int df, double lambda) {
    if (df < 1) throw_domain("noncentral_chi2_cdf requires df >= 1");
    if (lambda < 0.0) throw_domain("noncentral_chi2_cdf requires lambda >= 0");
    if (x <= 0.0) return 0.0;
    if (lambda == 0.0) return chi2_cdf(x, df);

    // Poisson mixture over central chi-square CDFs. T_j = P(df/2 + j, x/2)
    // steps down by the density term, so both sequences are generated by
    // recurrences from j = 0 upward.
    const double half_lambda = 0.5 * lambda;
    const double half_x = 0.5 * x;
    double weight = std::exp(-half_lambda); // Poisson(half_lambda) mass at 0
    double t = reg_lower_gamma(0.5 * df, half_x);
    // density term d_j = (x/2)^{df/2 + j} e^{-x/2} / Gamma(df/2 + j + 1)
    double log_d = (0.5 * df) * std::log(half_x) - half_x - log_gamma(0.5 * df + 1.0);
    double d = std::exp(log_d);
    double sum = weight * t;
    double weight_tail = 1.0 - weight;
    for (int j = 1; j <= 100000; ++j) {
        t -= d;
        if (t < 0.0) t = 0.0;
        d *= half_x / (0.5 * df + j);
        weight *= half_lambda / j;
        weight_tail -= weight;
        sum += weight * t;
        // remaining mass can only multiply CDF values <= t
        if (weight_tail * t < 1e-14 && j > half_lambda) break;
    }
    return std::min(1.0, std::max(0.0, sum));
}

// ---------------------------------------------------------------------------
// RngStream
// ---------------------------------------------------------------------------

namespace {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

inline std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

} // namespace

RngStream::RngStream(std::uint64_t seed, std::uint64_t stream_id)
    : seed_(seed), stream_id_(stream_id) {
    key_ = mix64(mix64(seed) ^ (kGolden * (stream_id + 1)));
}

std::uint64_t RngStream::next_u64() {
    ++counter_;
    return mix64(key_ + kGolden * counter_);
}

double RngStream::next_uniform() {
    // (0,1): 53 random bits plus a half-ulp offset keeps both endpoints out
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
}

double RngStream::next_normal() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    const double u1 = next_uniform();
    const double u2 = next_uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
}

double RngStream::next_gamma(double shape) {
    if (!(shape > 0.0)) throw_domain("next_gamma requires shape > 0");
    if (shape < 1.0) {
        const double u = next_uniform();
        return next_gamma(shape + 1.0) * std::pow(u, 1.0 / shape);
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
        double x, v;
        do {
            x = next_normal();
            v = 1.0 + c * x;
        } while (v <= 0.0);
        v = v * v * v;
        const double u = next_uniform();
        if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
        if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
    }
}

long RngStream::next_poisson(double mean) {
    if (!(mean >= 0.0)) throw_domain("next_poisson requires mean >= 0");
    if (mean == 0.0) return 0;
    // Poisson additivity keeps the Knuth product in a safe exponent range.
    long total = 0;
    while (mean > 60.0) {
        total += next_poisson(60.0);
        mean -= 60.0;
    }
    const double limit = std::exp(-mean);
    double prod = next_uniform();
    long k = 0;
    while (prod > limit) {
        prod *= next_uniform();
        ++k;
    }
    return total + k;
}

int RngStream::next_category(const std::vector<double>& probs) {
    const double u = next_uniform();
    double cum = 0.0;
    for (size_t j = 0; j < probs.size(); ++j) {
        cum += probs[j];
        if (u <= cum) return static_cast<int>(j);
    }
    return static_cast<int>(probs.size()) - 1;
}

// ---------------------------------------------------------------------------
// parallel_for
// ---------------------------------------------------------------------------

void parallel_for(long count, const std::function<void(long)>& body, int threads) {
    if (count <= 0) return;
    int n_threads = threads > 0 ? threads : static_cast<int>(std::thread::hardware_concurrency());
    if (n_threads < 1) n_threads = 1;
    if (static_cast<long>(n_threads) > count) n_threads = static_cast<int>(count);

    if (n_threads == 1) {
        for (long i = 0; i < count; ++i) body(i);
        return;
    }

    std::mutex error_mutex;
    std::exception_ptr first_error;
    std::vector<std::thread> pool;
    pool.reserve(n_threads);
    const long chunk = (count + n_threads - 1) / n_threads;
    for (int t = 0; t < n_threads; ++t) {
        const long lo = t * chunk;
        const long hi = std::min(count, lo + chunk);
        pool.emplace_back([&, lo, hi]() {
            try {
                for (long i = lo; i < hi; ++i) body(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
            }
        });
    }
    for (auto& th : pool) th.join();
    if (first_error) std::rethrow_exception(first_error);
}

} // namespace constancy
