#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <numbers>
#include <sstream>

#include "constancy/numerics.hpp"
#include "oracles.hpp"

using namespace constancy;

TEST_CASE("sym_eigen on small hand cases") {
    SUBCASE("diagonal") {
        const auto e = sym_eigen(SymMatrix::diagonal({1.0, 2.0}));
        CHECK(e.values[0] == doctest::Approx(2.0).epsilon(1e-12));
        CHECK(e.values[1] == doctest::Approx(1.0).epsilon(1e-12));
        // axis-aligned eigenvectors
        CHECK(std::fabs(e.vectors(0, 1)) == doctest::Approx(1.0).epsilon(1e-10));
        CHECK(std::fabs(e.vectors(1, 0)) == doctest::Approx(1.0).epsilon(1e-10));
    }
    SUBCASE("identity") {
        const auto e = sym_eigen(SymMatrix::identity(3));
        for (double v : e.values) CHECK(v == doctest::Approx(1.0).epsilon(1e-12));
    }
    SUBCASE("2x2 with off-diagonal") {
        SymMatrix m(2);
        m.set(0, 0, 2.0);
        m.set(1, 1, 2.0);
        m.set(0, 1, 1.0);
        const auto e = sym_eigen(m);
        CHECK(e.values[0] == doctest::Approx(3.0).epsilon(1e-12));
        CHECK(e.values[1] == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("sym_eigen reconstruction, orthonormality, trace and determinant") {
    RngStream rng(2024, 0);
    for (int trial = 0; trial < 200; ++trial) {
        const int p = 1 + static_cast<int>(rng.next_u64() % 6);
        SymMatrix m(p);
        for (int i = 0; i < p; ++i)
            for (int j = i; j < p; ++j) m.set(i, j, 2.0 * rng.next_normal());
        const auto e = sym_eigen(m);

        const double scale = std::max(1e-12, m.frobenius_norm());
        // rows of e.vectors are eigenvectors: m = P' D P
        for (int i = 0; i < p; ++i) {
            for (int j = 0; j < p; ++j) {
                double rec = 0.0, dot = 0.0;
                for (int k = 0; k < p; ++k) {
                    rec += e.vectors(k, i) * e.values[k] * e.vectors(k, j);
                    dot += e.vectors(i, k) * e.vectors(j, k);
                }
                CHECK(std::fabs(rec - m(i, j)) <= 1e-10 * scale);
                CHECK(std::fabs(dot - (i == j ? 1.0 : 0.0)) <= 1e-10);
            }
        }

        double val_sum = 0.0, val_prod = 1.0;
        for (double v : e.values) {
            val_sum += v;
            val_prod *= v;
        }
        CHECK(std::fabs(val_sum - m.trace()) <= 1e-10 * std::max(1.0, std::fabs(m.trace())));
        if (p <= 4) {
            const double det = oracles::cofactor_det(m);
            CHECK(std::fabs(val_prod - det) <= 1e-8 * std::max(1.0, std::fabs(det)));
        }
        // descending order
        for (int k = 1; k < p; ++k) CHECK(e.values[k - 1] >= e.values[k] - 1e-12);
    }
}

TEST_CASE("inv_sqrt hand cases and the R m R = I property") {
    SUBCASE("diagonal") {
        const SymMatrix r = inv_sqrt(SymMatrix::diagonal({1.0, 2.0}));
        CHECK(r(0, 0) == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(r(1, 1) == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-12));
        CHECK(std::fabs(r(0, 1)) < 1e-14);
    }
    SUBCASE("identity") {
        const SymMatrix r = inv_sqrt(SymMatrix::identity(4));
        for (int i = 0; i < 4; ++i)
            for (int j = 0; j < 4; ++j)
                CHECK(r(i, j) == doctest::Approx(i == j ? 1.0 : 0.0).epsilon(1e-12));
    }
    SUBCASE("2x2 with off-diagonal, verified by multiplication") {
        SymMatrix m(2);
        m.set(0, 0, 2.0);
        m.set(1, 1, 2.0);
        m.set(0, 1, 1.0);
        const SymMatrix r = inv_sqrt(m);
        const Matrix prod = r.as_matrix() * m.as_matrix() * r.as_matrix();
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j)
                CHECK(std::fabs(prod(i, j) - (i == j ? 1.0 : 0.0)) < 1e-10);
    }
    SUBCASE("1000 random matrices") {
        RngStream rng(7, 1);
        for (int trial = 0; trial < 1000; ++trial) {
            const int p = 1 + static_cast<int>(rng.next_u64() % 6);
            const SymMatrix m = oracles::random_spd(p, rng, 0.3);
            const SymMatrix r = inv_sqrt(m);
            const Matrix prod = r.as_matrix() * m.as_matrix() * r.as_matrix();
            for (int i = 0; i < p; ++i)
                for (int j = 0; j < p; ++j)
                    CHECK(std::fabs(prod(i, j) - (i == j ? 1.0 : 0.0)) <= 1e-8);
        }
    }
    SUBCASE("eigenvalue below the floor") {
        SymMatrix m(2);
        m.set(0, 0, 1.0);
        m.set(1, 1, 0.0);
        CHECK_THROWS_WITH_AS(inv_sqrt(m), doctest::Contains("eigenvalue"), Error);
        try {
            inv_sqrt(m);
        } catch (const Error& e) {
            CHECK(e.code() == "singular-information");
        }
    }
}

TEST_CASE("digamma, trigamma, log_gamma values") {
    const double euler = std::numbers::egamma_v<double>;
    CHECK(digamma(1.0) == doctest::Approx(-euler).epsilon(1e-13));
    CHECK(digamma(2.0) == doctest::Approx(1.0 - euler).epsilon(1e-13));
    CHECK(digamma(0.5) == doctest::Approx(-euler - 2.0 * std::log(2.0)).epsilon(1e-13));
    CHECK(trigamma(1.0) ==
          doctest::Approx(std::numbers::pi_v<double> * std::numbers::pi_v<double> / 6.0)
              .epsilon(1e-13));
    CHECK(trigamma(0.5) ==
          doctest::Approx(std::numbers::pi_v<double> * std::numbers::pi_v<double> / 2.0)
              .epsilon(1e-13));
    CHECK(log_gamma(0.5) == doctest::Approx(0.5 * std::log(std::numbers::pi_v<double>))
                                .epsilon(1e-13));
    CHECK(std::fabs(log_gamma(1.0)) < 1e-12);
    CHECK(log_gamma(5.0) == doctest::Approx(std::log(24.0)).epsilon(1e-13));
    // agreement with the platform lgamma as an extra oracle
    for (double x : {0.01, 0.1, 0.7, 1.3, 3.7, 12.5, 40.0}) {
        CHECK(log_gamma(x) == doctest::Approx(std::lgamma(x)).epsilon(1e-12));
    }
    CHECK_THROWS_AS(digamma(0.0), Error);
    CHECK_THROWS_AS(trigamma(-1.0), Error);
    CHECK_THROWS_AS(log_gamma(0.0), Error);
}

TEST_CASE("digamma and trigamma recurrences on a grid") {
    for (int i = 0; i <= 300; ++i) {
        const double x = 0.01 * std::pow(5000.0, i / 300.0); // log-spaced in [0.01, 50]
        CHECK(std::fabs((digamma(x + 1.0) - digamma(x)) - 1.0 / x) <= 1e-12 * std::max(1.0, 1.0 / x));
        CHECK(std::fabs((trigamma(x) - trigamma(x + 1.0)) - 1.0 / (x * x)) <=
              1e-12 * std::max(1.0, 1.0 / (x * x)));
        // digamma is the derivative of log_gamma
        const double h = 1e-6 * std::max(1.0, x);
        if (x > 2.0 * h) {
            const double fd = (log_gamma(x + h) - log_gamma(x - h)) / (2.0 * h);
            CHECK(digamma(x) == doctest::Approx(fd).epsilon(1e-6));
        }
    }
}

TEST_CASE("chi-square distribution helpers") {
    // df = 1 against the error-function identity
    for (double x : {0.1, 0.5, 1.0, 2.0, 3.841458820694124, 9.0}) {
        CHECK(chi2_cdf(x, 1.0) == doctest::Approx(std::erf(std::sqrt(0.5 * x))).epsilon(1e-12));
    }
    // df = 2 is exponential
    for (double x : {0.3, 1.0, 4.0}) {
        CHECK(chi2_cdf(x, 2.0) == doctest::Approx(1.0 - std::exp(-0.5 * x)).epsilon(1e-12));
    }
    CHECK(chi2_sf(3.0, 4.0) == doctest::Approx(1.0 - chi2_cdf(3.0, 4.0)).epsilon(1e-12));
    for (double p : {0.05, 0.5, 0.9, 0.95, 0.99}) {
        for (double df : {1.0, 4.0, 20.0}) {
            CHECK(chi2_cdf(chi2_quantile(p, df), df) == doctest::Approx(p).epsilon(1e-9));
        }
    }
}

TEST_CASE("noncentral chi-square CDF") {
    SUBCASE("x = 0") {
        CHECK(noncentral_chi2_cdf(0.0, 3, 2.0) == 0.0);
    }
    SUBCASE("central chi2_1 at its 0.95 point") {
        CHECK(noncentral_chi2_cdf(3.841458820694124, 1, 0.0) == doctest::Approx(0.95).epsilon(1e-4));
    }
    SUBCASE("df = 2, lambda = 0 is exponential") {
        for (double x : {0.5, 1.0, 2.5, 7.0}) {
            CHECK(noncentral_chi2_cdf(x, 2, 0.0) ==
                  doctest::Approx(1.0 - std::exp(-0.5 * x)).epsilon(1e-10));
        }
    }
    SUBCASE("lambda = 0 reduces to the central CDF") {
        for (double x : {0.2, 1.0, 5.0, 15.0}) {
            for (int df : {1, 3, 8}) {
                CHECK(std::fabs(noncentral_chi2_cdf(x, df, 0.0) - chi2_cdf(x, df)) <= 1e-10);
            }
        }
    }
    SUBCASE("df = 1: (Z + sqrt(lambda))^2 representation") {
        auto phi = [](double z) { return 0.5 * (1.0 + std::erf(z / std::sqrt(2.0))); };
        for (double lambda : {0.5, 2.0, 10.0}) {
            for (double x : {0.5, 2.0, 8.0, 20.0}) {
                const double expect =
                    phi(std::sqrt(x) - std::sqrt(lambda)) - phi(-std::sqrt(x) - std::sqrt(lambda));
                CHECK(noncentral_chi2_cdf(x, 1, lambda) == doctest::Approx(expect).epsilon(1e-9));
            }
        }
    }
    SUBCASE("monotone in x") {
        double prev = -1.0;
        for (double x = 0.0; x <= 40.0; x += 0.5) {
            const double v = noncentral_chi2_cdf(x, 4, 6.0);
            CHECK(v >= prev - 1e-14);
            prev = v;
        }
    }
}

TEST_CASE("RngStream determinism and basic quality") {
    SUBCASE("same seed and stream reproduce in process") {
        RngStream a(123, 7), b(123, 7);
        for (int i = 0; i < 1000; ++i) CHECK(a.next_u64() == b.next_u64());
    }
    SUBCASE("different streams differ") {
        RngStream a(123, 7), b(123, 8);
        int same = 0;
        for (int i = 0; i < 100; ++i)
            if (a.next_u64() == b.next_u64()) ++same;
        CHECK(same == 0);
    }
    SUBCASE("uniforms in (0,1), normals with the right moments") {
        RngStream rng(99, 0);
        const int n = 200000;
        double sum = 0.0, sum_sq = 0.0;
        for (int i = 0; i < n; ++i) {
            const double u = rng.next_uniform();
            CHECK(u > 0.0);
            CHECK(u < 1.0);
            const double z = rng.next_normal();
            sum += z;
            sum_sq += z * z;
        }
        CHECK(std::fabs(sum / n) < 0.01);
        CHECK(std::fabs(sum_sq / n - 1.0) < 0.02);
    }
    SUBCASE("gamma and poisson sample means") {
        RngStream rng(42, 3);
        const int n = 100000;
        double gsum = 0.0;
        double psum = 0.0;
        for (int i = 0; i < n; ++i) {
            gsum += rng.next_gamma(2.0) / 3.0;
            psum += static_cast<double>(rng.next_poisson(4.5));
        }
        CHECK(gsum / n == doctest::Approx(2.0 / 3.0).epsilon(0.02));
        CHECK(psum / n == doctest::Approx(4.5).epsilon(0.02));
    }
}

TEST_CASE("RngStream byte-identical across process invocations") {
    const std::string out1 = std::string(std::getenv("TMPDIR") ? std::getenv("TMPDIR") : "/tmp") +
                             "/constancy_rng_1.txt";
    const std::string out2 = std::string(std::getenv("TMPDIR") ? std::getenv("TMPDIR") : "/tmp") +
                             "/constancy_rng_2.txt";
    const std::string cmd1 = std::string(RNG_DUMP_PATH) + " 987654321 11 5000 > " + out1;
    const std::string cmd2 = std::string(RNG_DUMP_PATH) + " 987654321 11 5000 > " + out2;
    REQUIRE(std::system(cmd1.c_str()) == 0);
    REQUIRE(std::system(cmd2.c_str()) == 0);
    std::ifstream f1(out1), f2(out2);
    std::stringstream s1, s2;
    s1 << f1.rdbuf();
    s2 << f2.rdbuf();
    REQUIRE(s1.str().size() > 0);
    CHECK(s1.str() == s2.str());
}

TEST_CASE("parallel_for covers every index exactly once and propagates errors") {
    std::vector<int> hits(10000, 0);
    parallel_for(10000, [&](long i) { hits[i] += 1; }, 4);
    for (int h : hits) CHECK(h == 1);
    CHECK_THROWS_AS(parallel_for(100, [](long i) { if (i == 57) throw_internal("boom"); }, 4),
                    Error);
}
