// Test-only oracles, kept independent of the library's computational paths.

#ifndef CONSTANCY_TESTS_ORACLES_HPP
#define CONSTANCY_TESTS_ORACLES_HPP

#include <cmath>
#include <vector>

#include "constancy/numerics.hpp"

namespace oracles {

// Determinant by cofactor expansion, p <= 4.
inline double cofactor_det(const constancy::SymMatrix& m) {
    const int p = m.dim();
    if (p == 1) return m(0, 0);
    if (p == 2) return m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0);
    double det = 0.0;
    for (int j = 0; j < p; ++j) {
        constancy::SymMatrix minor(p - 1);
        // build the (0, j) minor; symmetry of the minor is irrelevant for the
        // recursion, so fill it as a dense matrix through set()
        std::vector<std::vector<double>> cells(p - 1, std::vector<double>(p - 1));
        for (int r = 1; r < p; ++r) {
            int cc = 0;
            for (int c = 0; c < p; ++c) {
                if (c == j) continue;
                cells[r - 1][cc++] = m(r, c);
            }
        }
        // cofactor recursion on a plain array
        double sub;
        if (p - 1 == 2) {
            sub = cells[0][0] * cells[1][1] - cells[0][1] * cells[1][0];
        } else { // p - 1 == 3
            sub = cells[0][0] * (cells[1][1] * cells[2][2] - cells[1][2] * cells[2][1]) -
                  cells[0][1] * (cells[1][0] * cells[2][2] - cells[1][2] * cells[2][0]) +
                  cells[0][2] * (cells[1][0] * cells[2][1] - cells[1][1] * cells[2][0]);
        }
        det += (j % 2 == 0 ? 1.0 : -1.0) * m(0, j) * sub;
    }
    return det;
}

// Gauss-Jordan inverse with partial pivoting; general square input.
inline std::vector<std::vector<double>> gauss_inverse(std::vector<std::vector<double>> a) {
    const int n = static_cast<int>(a.size());
    std::vector<std::vector<double>> inv(n, std::vector<double>(n, 0.0));
    for (int i = 0; i < n; ++i) inv[i][i] = 1.0;
    for (int col = 0; col < n; ++col) {
        int pivot = col;
        for (int r = col + 1; r < n; ++r)
            if (std::fabs(a[r][col]) > std::fabs(a[pivot][col])) pivot = r;
        std::swap(a[col], a[pivot]);
        std::swap(inv[col], inv[pivot]);
        const double diag = a[col][col];
        for (int c = 0; c < n; ++c) {
            a[col][c] /= diag;
            inv[col][c] /= diag;
        }
        for (int r = 0; r < n; ++r) {
            if (r == col) continue;
            const double f = a[r][col];
            if (f == 0.0) continue;
            for (int c = 0; c < n; ++c) {
                a[r][c] -= f * a[col][c];
                inv[r][c] -= f * inv[col][c];
            }
        }
    }
    return inv;
}

// Random symmetric positive definite matrix with eigenvalues bounded away
// from zero.
inline constancy::SymMatrix random_spd(int p, constancy::RngStream& rng, double ridge = 0.5) {
    constancy::Matrix b(p, p);
    for (int i = 0; i < p; ++i)
        for (int j = 0; j < p; ++j) b(i, j) = rng.next_normal();
    constancy::SymMatrix m(p);
    for (int i = 0; i < p; ++i)
        for (int j = i; j < p; ++j) {
            double s = 0.0;
            for (int k = 0; k < p; ++k) s += b(k, i) * b(k, j) / p;
            m.set(i, j, s + (i == j ? ridge : 0.0));
        }
    return m;
}

struct MeanVar {
    double mean = 0.0;
    double var = 0.0;
    double se = 0.0;
};

inline MeanVar mean_var(const std::vector<double>& v) {
    MeanVar out;
    const double n = static_cast<double>(v.size());
    for (double x : v) out.mean += x / n;
    for (double x : v) out.var += (x - out.mean) * (x - out.mean) / n;
    out.se = std::sqrt(out.var / n);
    return out;
}

} // namespace oracles

#endif
