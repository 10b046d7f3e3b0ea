#include <doctest.h>

#include <cmath>
#include <vector>

#include "mdlab/rng.hpp"

using namespace mdlab;

TEST_CASE("rng reproducibility and stream independence") {
    Rng a(42, 0), b(42, 0), c(42, 1);
    bool allEqual = true, anyDiffer = false;
    for (int i = 0; i < 1000; ++i) {
        const auto va = a.nextU64(), vb = b.nextU64(), vc = c.nextU64();
        allEqual = allEqual && (va == vb);
        anyDiffer = anyDiffer || (va != vc);
    }
    CHECK(allEqual);
    CHECK(anyDiffer);
}

TEST_CASE("uniform01 range and moments") {
    Rng rng(7, 0);
    double sum = 0.0, sumSq = 0.0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
        const double u = rng.uniform01();
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
        sum += u;
        sumSq += u * u;
    }
    CHECK(sum / n == doctest::Approx(0.5).epsilon(0.01));
    CHECK(sumSq / n == doctest::Approx(1.0 / 3.0).epsilon(0.01));
}

TEST_CASE("rademacher is centered") {
    Rng rng(9, 0);
    long s = 0;
    for (int i = 0; i < 100000; ++i) s += rng.rademacher() > 0 ? 1 : -1;
    CHECK(std::abs(s) < 4 * std::sqrt(100000.0));
}

TEST_CASE("categorical follows the given row") {
    Rng rng(5, 0);
    const std::vector<double> probs{0.2, 0.5, 0.3};
    std::vector<long> counts(3, 0);
    const int n = 100000;
    for (int i = 0; i < n; ++i) ++counts[rng.categorical(probs)];
    for (int k = 0; k < 3; ++k)
        CHECK(static_cast<double>(counts[static_cast<std::size_t>(k)]) / n ==
              doctest::Approx(probs[static_cast<std::size_t>(k)]).epsilon(0.05));
}

TEST_CASE("derived seeds differ across streams") {
    CHECK(deriveSeed(1, 0) != deriveSeed(1, 1));
    CHECK(deriveSeed(1, 0) != deriveSeed(2, 0));
    CHECK(deriveSeed(1, 5) == deriveSeed(1, 5));
}
