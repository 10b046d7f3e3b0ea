#include "mdlab/inequalities.hpp"

#include <cmath>
#include <limits>

namespace mdlab {

MaximalConstants maximalConstants() {
    const double r2 = std::sqrt(2.0);
    MaximalConstants c;
    c.D = (40.0 * r2 + 27.0) / 7.0;
    c.Dprime = (24.0 * r2 + 12.0) / 7.0;
    c.C = std::max(c.D, c.Dprime);
    return c;
}

double hoeffdingTailBound(long n, double x, double B, double delta) {
    require(n >= 1, "hoeffdingTailBound: n must be >= 1");
    require(x > 0.0, "hoeffdingTailBound: x must be positive");
    require(B > 0.0, "hoeffdingTailBound: B must be positive");
    require(delta >= 0.0, "hoeffdingTailBound: delta must be nonnegative");
    const double scale = B + maximalConstants().C * delta;
    return 2.0 * std::sqrt(std::exp(1.0)) *
           std::exp(-x * x / (4.0 * static_cast<double>(n) * scale * scale));
}

double phiMixingTailBound(long n, double x, double B, double phi1Series) {
    require(std::isfinite(phi1Series) && phi1Series >= 0.0,
            "phiMixingTailBound: series must be finite and nonnegative");
    require(n >= 1 && x > 0.0 && B > 0.0, "phiMixingTailBound: bad arguments");
    const double scale = B * (1.0 + 6.0 * maximalConstants().C * phi1Series);
    return 2.0 * std::sqrt(std::exp(1.0)) *
           std::exp(-x * x / (4.0 * static_cast<double>(n) * scale * scale));
}

double martMomentBound(long n, double p, double Bd) {
    require(p >= 1.0, "martMomentBound: p must be >= 1");
    require(n >= 1 && Bd > 0.0, "martMomentBound: bad arguments");
    return std::pow(2.0, p + 1.0) * std::tgamma(p + 1.0) * std::pow(static_cast<double>(n), p) *
           std::pow(Bd, 2.0 * p);
}

int dyadicIndex(long n) {
    require(n >= 1, "dyadicIndex: n must be >= 1");
    int q = 1;
    while ((1L << q) <= n) ++q;
    return q;  // 2^{q-1} <= n < 2^q
}

namespace {
double maxMomentPrefactor(long n, double p) {
    return std::pow(std::pow(2.0, p + 1.0) * std::tgamma(p + 1.0), 1.0 / (2.0 * p)) *
           std::sqrt(static_cast<double>(n));
}
}  // namespace

double adaptedMaxMomentBound(long n, double p, double martPartNorm, double deltaQ, int q) {
    require(p >= 1.0, "adaptedMaxMomentBound: p must be >= 1");
    require(q == dyadicIndex(n), "adaptedMaxMomentBound: q inconsistent with n");
    require(martPartNorm >= 0.0 && deltaQ >= 0.0, "adaptedMaxMomentBound: bad arguments");
    return maxMomentPrefactor(n, p) * (martPartNorm + 5.0 / std::sqrt(2.0) * deltaQ);
}

double nonadaptedMaxMomentBound(long n, double p, double condNorm, double deltaPrimeQ, int q) {
    require(p >= 1.0, "nonadaptedMaxMomentBound: p must be >= 1");
    require(q == dyadicIndex(n), "nonadaptedMaxMomentBound: q inconsistent with n");
    require(condNorm >= 0.0 && deltaPrimeQ >= 0.0, "nonadaptedMaxMomentBound: bad arguments");
    return maxMomentPrefactor(n, p) * (condNorm + 2.0 / std::sqrt(2.0) * deltaPrimeQ);
}

double stationaryMaxMomentBound(long n, double p, double B, double dFwd, double dBwd) {
    require(n >= 1 && p >= 1.0 && B > 0.0 && dFwd >= 0.0 && dBwd >= 0.0,
            "stationaryMaxMomentBound: bad arguments");
    const MaximalConstants c = maximalConstants();
    const double scale = B + c.D * dFwd + c.Dprime * dBwd;
    return std::pow(2.0, p + 1.0) * std::tgamma(p + 1.0) * std::pow(static_cast<double>(n), p) *
           std::pow(scale, 2.0 * p);
}

double dyadicCondSecondMomentBound(long n, double x1SqNorm, double deltaQ, double deltaPrimeQ) {
    require(n >= 1 && (n & (n - 1)) == 0, "dyadicCondSecondMomentBound: n must be a power of two");
    require(x1SqNorm >= 0.0 && deltaQ >= 0.0 && deltaPrimeQ >= 0.0,
            "dyadicCondSecondMomentBound: bad arguments");
    const double s = x1SqNorm + 0.5 * deltaQ + 0.5 * deltaPrimeQ;
    return static_cast<double>(n) * s * s;
}

DyadicCheck subadditiveDyadicCheck(std::span<const double> U, double C1, double C2, double p,
                                   long n) {
    require(p >= 1.0, "subadditiveDyadicCheck: p must be >= 1");
    require(C1 >= 1.0 && C2 >= 1.0, "subadditiveDyadicCheck: constants must be >= 1");
    require(n >= 1, "subadditiveDyadicCheck: n must be >= 1");
    require(static_cast<long>(U.size()) > n, "subadditiveDyadicCheck: U must cover 0..n");
    require(U[0] == 0.0, "subadditiveDyadicCheck: U_0 must be 0");
    for (std::size_t k = 1; k < U.size(); ++k)
        require(U[k] >= 0.0 && std::isfinite(U[k]), "subadditiveDyadicCheck: U must be nonnegative");
    // precondition: C1/C2-subadditivity over all index splits we can see
    for (long i = 1; i < static_cast<long>(U.size()); ++i)
        for (long j = 1; i + j < static_cast<long>(U.size()); ++j)
            if (U[static_cast<std::size_t>(i + j)] >
                C1 * U[static_cast<std::size_t>(i)] + C2 * U[static_cast<std::size_t>(j)] + 1e-12)
                throw PreconditionError("subadditiveDyadicCheck: input violates subadditivity at (" +
                                        std::to_string(i) + "," + std::to_string(j) + ")");
    const int r = dyadicIndex(n);
    DyadicCheck out{0.0, 0.0, false};
    for (int j = 0; j <= r - 1; ++j)
        out.lhs += U[static_cast<std::size_t>(1L << j)] /
                   std::pow(2.0, static_cast<double>(j) * (p - 1.0));
    double tail = 0.0;
    for (long k = 1; k <= n - 1; ++k)
        tail += U[static_cast<std::size_t>(k)] / std::pow(static_cast<double>(k), p);
    out.rhs = (C1 + C2) / (1.0 - std::pow(2.0, -p)) * tail;
    out.ok = out.lhs <= out.rhs * (1.0 + 1e-12) + 1e-300;
    return out;
}

double SeqFamily::eval(long k) const {
    switch (kind) {
        case Kind::Zero: return 0.0;
        case Kind::Power: return a * std::pow(static_cast<double>(k), s);
        case Kind::Geometric: return a * std::pow(g, static_cast<double>(k));
    }
    return 0.0;
}

bool SeqFamily::summable(double p) const {
    switch (kind) {
        case Kind::Zero: return true;
        case Kind::Power: return p - s > 1.0;
        case Kind::Geometric: return g < 1.0;
    }
    return false;
}

std::vector<std::pair<long, double>> kroneckerTailCheck(const SeqFamily& U, double p,
                                                        std::span<const long> mGrid) {
    require(p > 1.0, "kroneckerTailCheck: p must exceed 1");
    if (!U.summable(p))
        throw PreconditionError("kroneckerTailCheck: sum_k k^{-p} U_k diverges for this family");
    std::vector<std::pair<long, double>> table;
    table.reserve(mGrid.size());
    const long J = 20000;
    for (long m : mGrid) {
        require(m >= 1, "kroneckerTailCheck: grid entries must be >= 1");
        double acc = 0.0;
        long j = 1;
        for (; j <= J; ++j) {
            const double term = U.eval(j * m) / std::pow(static_cast<double>(j), p);
            acc += term;
            if (j >= 8 && term <= 1e-15 * (std::abs(acc) + 1e-300)) break;
        }
        if (j > J && U.kind == SeqFamily::Kind::Power) {
            // integral tail estimate: sum_{j>J} a m^s j^{s-p} <= a m^s J^{s-p+1}/(p-s-1)
            acc += U.a * std::pow(static_cast<double>(m), U.s) *
                   std::pow(static_cast<double>(J), U.s - p + 1.0) / (p - U.s - 1.0);
        }
        table.emplace_back(m, acc / std::pow(static_cast<double>(m), p - 1.0));
    }
    return table;
}

}  // namespace mdlab
