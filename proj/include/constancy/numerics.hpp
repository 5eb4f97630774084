#ifndef CONSTANCY_NUMERICS_HPP
#define CONSTANCY_NUMERICS_HPP

#include <cstdint>
#include <functional>
#include <vector>

#include "constancy/common.hpp"

namespace constancy {

// ---------------------------------------------------------------------------
// Small dense matrices. Parameter dimensions in this library never exceed
// single digits, so everything below is plain O(p^3) with no blocking.
// ---------------------------------------------------------------------------

class Matrix {
public:
    Matrix() = default;
    Matrix(int rows, int cols) : rows_(rows), cols_(cols), a_(static_cast<size_t>(rows) * cols, 0.0) {}

    int rows() const { return rows_; }
    int cols() const { return cols_; }

    double& operator()(int i, int j) { return a_[static_cast<size_t>(i) * cols_ + j]; }
    double operator()(int i, int j) const { return a_[static_cast<size_t>(i) * cols_ + j]; }

    static Matrix identity(int n);
    Matrix transposed() const;
    Matrix operator*(const Matrix& rhs) const;
    std::vector<double> operator*(const std::vector<double>& v) const;

private:
    int rows_ = 0;
    int cols_ = 0;
    std::vector<double> a_;
};

// Symmetric p x p matrix; set() writes both (i,j) and (j,i) so the stored
// entries are mirror-equal exactly.
class SymMatrix {
public:
    SymMatrix() = default;
    explicit SymMatrix(int dim) : dim_(dim), a_(static_cast<size_t>(dim) * dim, 0.0) {
        if (dim < 1) throw_internal("SymMatrix dimension must be >= 1");
    }

    static SymMatrix identity(int dim);
    static SymMatrix diagonal(const std::vector<double>& d);

    int dim() const { return dim_; }
    double operator()(int i, int j) const { return a_[static_cast<size_t>(i) * dim_ + j]; }
    void set(int i, int j, double v) {
        a_[static_cast<size_t>(i) * dim_ + j] = v;
        a_[static_cast<size_t>(j) * dim_ + i] = v;
    }
    void add(int i, int j, double v) { set(i, j, (*this)(i, j) + v); }

    std::vector<double> operator*(const std::vector<double>& v) const;
    // row i times vector
    double row_dot(int i, const std::vector<double>& v) const;
    double quad_form(const std::vector<double>& v) const; // v' M v
    double trace() const;
    double frobenius_norm() const;
    Matrix as_matrix() const;

private:
    int dim_ = 0;
    std::vector<double> a_;
};

struct EigenResult {
    std::vector<double> values; // descending
    // Rows are eigenvectors: vectors * m * vectors' = diag(values),
    // equivalently m = vectors' * diag(values) * vectors.
    Matrix vectors;
};

// Cyclic Jacobi rotations; 100-sweep cap, off-diagonal tolerance
// 1e-14 * Frobenius norm.
EigenResult sym_eigen(const SymMatrix& m);

// m^{-1/2} via the eigen-root P' D^{-1/2} P. Throws singular-information if
// any eigenvalue falls below eigen_floor.
SymMatrix inv_sqrt(const SymMatrix& m, double eigen_floor = 1e-12);
// m^{1/2}, same eigen route and floor.
SymMatrix sqrt_sym(const SymMatrix& m, double eigen_floor = 1e-12);
// m^{-1}, eigen route (used for Newton steps and normal equations).
SymMatrix inv_sym(const SymMatrix& m, double eigen_floor = 1e-12);
std::vector<double> solve_sym(const SymMatrix& m, const std::vector<double>& rhs,
                              double eigen_floor = 1e-12);

// ---------------------------------------------------------------------------
// Special functions. Recurrence shift to x >= 10 followed by the asymptotic
// Bernoulli series; relative accuracy ~1e-14 over the range used here.
// Arguments must be positive.
// ---------------------------------------------------------------------------

double digamma(double x);
double trigamma(double x);
double log_gamma(double x);

// Regularized incomplete gamma P(a, x) and Q(a, x) = 1 - P(a, x).
double reg_lower_gamma(double a, double x);
double reg_upper_gamma(double a, double x);

double chi2_cdf(double x, double df);
double chi2_sf(double x, double df);
double chi2_quantile(double p, double df);

// CDF of the noncentral chi-square with df degrees of freedom and
// noncentrality lambda; lambda = 0 gives the central distribution.
double noncentral_chi2_cdf(double x, int df, double lambda);

// ---------------------------------------------------------------------------
// Seeded random numbers. The generator is a SplitMix64 counter: the stream
// key is key = mix(mix(seed) ^ (GOLDEN * (stream_id + 1))) and draw c is
// mix(key + GOLDEN * (c + 1)), with mix the standard SplitMix64 finalizer.
// Identical (seed, stream_id) therefore reproduces the identical sequence
// in any process, which is what makes seeds portable promises. Parallel
// code derives one stream per replication and never shares streams.
// ---------------------------------------------------------------------------

class RngStream {
public:
    RngStream(std::uint64_t seed, std::uint64_t stream_id);

    std::uint64_t seed() const { return seed_; }
    std::uint64_t stream_id() const { return stream_id_; }

    std::uint64_t next_u64();
    double next_uniform();                 // (0,1), 53-bit mantissa
    double next_normal();                  // Box-Muller, caches the spare
    double next_gamma(double shape);       // Marsaglia-Tsang, unit rate
    long next_poisson(double mean);
    int next_category(const std::vector<double>& probs); // probs sum to 1

private:
    std::uint64_t seed_;
    std::uint64_t stream_id_;
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

// Static block partition of [0, count) over worker threads. Results must be
// written to per-index slots; the partitioning never affects them.
void parallel_for(long count, const std::function<void(long)>& body, int threads = 0);

} // namespace constancy

#endif
