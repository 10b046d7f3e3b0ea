#include <doctest.h>

#include <cmath>
#include <vector>

#include "mdlab/inequalities.hpp"
#include "mdlab/rng.hpp"

using namespace mdlab;

TEST_CASE("maximal inequality constants from the exact radicals") {
    const MaximalConstants c = maximalConstants();
    const long double r2 = std::sqrt(2.0L);
    CHECK(std::abs(c.D - static_cast<double>((40.0L * r2 + 27.0L) / 7.0L)) <= 1e-15 * c.D);
    CHECK(std::abs(c.Dprime - static_cast<double>((24.0L * r2 + 12.0L) / 7.0L)) <=
          1e-15 * c.Dprime);
    CHECK(c.C == c.D);
    CHECK(c.D == doctest::Approx(11.9378).epsilon(1e-5));
    CHECK(c.Dprime == doctest::Approx(6.5627).epsilon(1e-4));
}

TEST_CASE("tail bound closed form") {
    // hand evaluation: exponent = 1600 / (4 * 100 * 1) = 4
    CHECK(hoeffdingTailBound(100, 40.0, 1.0, 0.0) ==
          doctest::Approx(2.0 * std::sqrt(std::exp(1.0)) * std::exp(-4.0)).epsilon(1e-14));
    CHECK(hoeffdingTailBound(100, 40.0, 1.0, 0.0) == doctest::Approx(0.06039477).epsilon(1e-6));
    // vacuous limit as x -> 0+
    CHECK(hoeffdingTailBound(5, 1e-12, 1.0, 0.0) ==
          doctest::Approx(2.0 * std::sqrt(std::exp(1.0))).epsilon(1e-9));
    CHECK_THROWS_AS((void)hoeffdingTailBound(5, 1.0, -1.0, 0.0), PreconditionError);

    // doubling B + C Delta quarters the exponent
    const long n = 50;
    const double x = 7.0;
    const double b1 = hoeffdingTailBound(n, x, 1.0, 0.0);
    const double b2 = hoeffdingTailBound(n, x, 2.0, 0.0);
    const double logRatio = std::log(b2) - std::log(b1);
    CHECK(logRatio == doctest::Approx(x * x / (4.0 * n) * (1.0 - 0.25)).epsilon(1e-10));

    // monotone: nonincreasing in x, nondecreasing in delta
    double prev = 10.0;
    for (double xx = 0.5; xx <= 20.0; xx += 0.5) {
        const double b = hoeffdingTailBound(n, xx, 1.0, 0.3);
        CHECK(b <= prev + 1e-15);
        prev = b;
    }
    CHECK(hoeffdingTailBound(n, x, 1.0, 0.5) >= hoeffdingTailBound(n, x, 1.0, 0.1));
}

TEST_CASE("phi-mixing tail bound") {
    // series = 0 reduces bit-for-bit to the dependence-free bound
    for (long n : {1L, 16L, 400L})
        for (double x : {0.5, 3.0, 11.0})
            CHECK(phiMixingTailBound(n, x, 1.5, 0.0) == hoeffdingTailBound(n, x, 1.5, 0.0));

    // oracle: partial sums of sum_j j^{-1/2} (1/2)^j with a geometric tail cap
    long double series = 0.0;
    for (int j = 1; j <= 300; ++j)
        series += std::pow(0.5L, j) / std::sqrt(static_cast<long double>(j));
    CHECK(static_cast<double>(series) == doctest::Approx(0.8061).epsilon(2e-4));
    const double s = static_cast<double>(series);
    const double C = maximalConstants().C;
    const double expected =
        2.0 * std::sqrt(std::exp(1.0)) *
        std::exp(-25.0 / (4.0 * 64.0 * (1.0 + 6.0 * C * s) * (1.0 + 6.0 * C * s)));
    CHECK(phiMixingTailBound(64, 5.0, 1.0, s) == doctest::Approx(expected).epsilon(1e-12));

    // monotone increasing in the series value
    CHECK(phiMixingTailBound(64, 5.0, 1.0, 0.9) > phiMixingTailBound(64, 5.0, 1.0, 0.1));
    CHECK_THROWS_AS(
        (void)phiMixingTailBound(64, 5.0, 1.0, std::numeric_limits<double>::infinity()),
        PreconditionError);
}

TEST_CASE("martingale moment bound") {
    CHECK(martMomentBound(4, 1.0, 1.0) == doctest::Approx(16.0));
    CHECK(martMomentBound(1, 2.0, 1.0) == doctest::Approx(16.0));
    CHECK_THROWS_AS((void)martMomentBound(4, 0.5, 1.0), PreconditionError);

    // oracle: exhaustive Rademacher walks, E max_{i<=n} S_i^2 <= 4 n
    for (int n = 1; n <= 12; ++n) {
        double acc = 0.0;
        const long total = 1L << n;
        for (long mask = 0; mask < total; ++mask) {
            int s = 0, best = 0;
            for (int b = 0; b < n; ++b) {
                s += (mask >> b) & 1 ? 1 : -1;
                best = std::max(best, std::abs(s));
            }
            acc += static_cast<double>(best) * static_cast<double>(best);
        }
        acc /= static_cast<double>(total);
        CHECK(acc <= martMomentBound(n, 1.0, 1.0));
    }
}

TEST_CASE("adapted and non-adapted maximal moment bounds") {
    const long n = 11;
    const int q = dyadicIndex(n);
    CHECK(q == 4);  // 8 <= 11 < 16
    // martingale-difference degenerate case reduces to the base bound
    CHECK(adaptedMaxMomentBound(n, 1.0, 1.0, 0.0, q) ==
          doctest::Approx(std::pow(martMomentBound(n, 1.0, 1.0), 0.5)).epsilon(1e-12));
    // the dyadic-sum factors are 5/sqrt2 and 2/sqrt2
    const double pref = std::pow(std::pow(2.0, 2.0) * std::tgamma(2.0), 0.5) * std::sqrt(11.0);
    CHECK(adaptedMaxMomentBound(n, 1.0, 0.0, 1.0, q) ==
          doctest::Approx(pref * 5.0 / std::sqrt(2.0)).epsilon(1e-12));
    CHECK(nonadaptedMaxMomentBound(n, 1.0, 0.0, 1.0, q) ==
          doctest::Approx(pref * std::sqrt(2.0)).epsilon(1e-12));
    CHECK_THROWS_AS((void)adaptedMaxMomentBound(n, 1.0, 1.0, 0.0, q + 1), PreconditionError);
}

TEST_CASE("dyadic conditional second-moment bound") {
    CHECK(dyadicCondSecondMomentBound(1, 2.0, 0.0, 0.0) == doctest::Approx(4.0));
    CHECK_THROWS_AS((void)dyadicCondSecondMomentBound(6, 1.0, 0.0, 0.0), PreconditionError);
    // monotone in the dyadic sums
    CHECK(dyadicCondSecondMomentBound(8, 1.0, 0.5, 0.2) >
          dyadicCondSecondMomentBound(8, 1.0, 0.1, 0.2));
    CHECK(dyadicCondSecondMomentBound(8, 1.0, 0.5, 0.4) >
          dyadicCondSecondMomentBound(8, 1.0, 0.5, 0.2));
}

TEST_CASE("subadditive dyadic inequality") {
    SUBCASE("worked example U_k = k, p = 2, n = 8") {
        const std::vector<double> U{0, 1, 2, 3, 4, 5, 6, 7, 8};
        const DyadicCheck chk = subadditiveDyadicCheck(U, 1.0, 1.0, 2.0, 8);
        CHECK(chk.lhs == doctest::Approx(4.0));
        // oracle: (8/3) * H_7 with H_7 = 363/140
        CHECK(chk.rhs == doctest::Approx(8.0 / 3.0 * 363.0 / 140.0).epsilon(1e-12));
        CHECK(chk.rhs == doctest::Approx(6.914285714285714).epsilon(1e-12));
        CHECK(chk.ok);
    }
    SUBCASE("zero sequence") {
        const std::vector<double> U(10, 0.0);
        const DyadicCheck chk = subadditiveDyadicCheck(U, 1.5, 2.0, 1.0, 8);
        CHECK(chk.lhs == 0.0);
        CHECK(chk.rhs == 0.0);
        CHECK(chk.ok);
    }
    SUBCASE("subadditivity violations are rejected as a precondition") {
        const std::vector<double> U{0, 1, 10, 1};  // U_2 > U_1 + U_1
        CHECK_THROWS_AS((void)subadditiveDyadicCheck(U, 1.0, 1.0, 2.0, 3), PreconditionError);
    }
    SUBCASE("randomized constructive generator never violates the inequality") {
        Rng rng(77, 0);
        for (int t = 0; t < 500; ++t) {
            const double C1 = 1.0 + 3.0 * rng.uniform01();
            const double C2 = 1.0 + 3.0 * rng.uniform01();
            const long n = 2 + static_cast<long>(rng.uniformIndex(100));
            std::vector<double> U(static_cast<std::size_t>(n + 1), 0.0);
            for (long k = 1; k <= n; ++k) {
                double w = 0.05 + 5.0 * rng.uniform01();
                for (long i = 1; i < k; ++i)
                    w = std::min(w, C1 * U[static_cast<std::size_t>(i)] +
                                        C2 * U[static_cast<std::size_t>(k - i)]);
                U[static_cast<std::size_t>(k)] = w;
            }
            const double p = 1.0 + 2.5 * rng.uniform01();
            const DyadicCheck chk = subadditiveDyadicCheck(U, C1, C2, p, n);
            CHECK(chk.ok);
        }
    }
}

TEST_CASE("kronecker-type tail decay") {
    SUBCASE("U_k = sqrt(k), p = 2 scales as zeta(3/2) / sqrt(m)") {
        SeqFamily U;
        U.kind = SeqFamily::Kind::Power;
        U.a = 1.0;
        U.s = 0.5;
        const std::vector<long> grid{1, 4, 16, 64, 256};
        const auto table = kroneckerTailCheck(U, 2.0, grid);
        long double zeta32 = 0.0;
        for (long j = 1; j <= 2000000; ++j) zeta32 += std::pow(static_cast<long double>(j), -1.5L);
        for (const auto& [m, v] : table)
            CHECK(v * std::sqrt(static_cast<double>(m)) ==
                  doctest::Approx(static_cast<double>(zeta32)).epsilon(1e-3));
        for (std::size_t i = 1; i < table.size(); ++i) CHECK(table[i].second < table[i - 1].second);
    }
    SUBCASE("zero sequence stays at zero") {
        SeqFamily U;  // Zero
        const std::vector<long> grid{1, 10};
        for (const auto& [m, v] : kroneckerTailCheck(U, 2.0, grid)) CHECK(v == 0.0);
    }
    SUBCASE("divergent input is rejected at the precondition") {
        SeqFamily U;
        U.kind = SeqFamily::Kind::Power;
        U.a = 1.0;
        U.s = 1.0;  // sum k^{-2} * k diverges
        const std::vector<long> grid{1};
        CHECK_THROWS_AS((void)kroneckerTailCheck(U, 2.0, grid), PreconditionError);
    }
    SUBCASE("geometric families vanish fast") {
        SeqFamily U;
        U.kind = SeqFamily::Kind::Geometric;
        U.a = 1.0;
        U.g = 0.5;
        const std::vector<long> grid{1, 2, 4, 8};
        const auto table = kroneckerTailCheck(U, 2.0, grid);
        for (std::size_t i = 1; i < table.size(); ++i) CHECK(table[i].second < table[i - 1].second);
        CHECK(table.back().second < 1e-2);
    }
}

TEST_CASE("stationary maximal moment bound dominates the martingale case") {
    CHECK(stationaryMaxMomentBound(16, 1.0, 1.0, 0.0, 0.0) ==
          doctest::Approx(martMomentBound(16, 1.0, 1.0)));
    CHECK(stationaryMaxMomentBound(16, 1.0, 1.0, 0.5, 0.2) >
          stationaryMaxMomentBound(16, 1.0, 1.0, 0.0, 0.0));
}
