#pragma once

#include <span>
#include <vector>

#include "mdlab/common.hpp"

namespace mdlab {

/// The explicit constants of the maximal inequality: 7D = 40*sqrt(2) + 27,
/// 7D' = 24*sqrt(2) + 12, C = max(D, D'). Computed from the radicals, never
/// from decimal literals.
struct MaximalConstants {
    double D;
    double Dprime;
    double C;
};
MaximalConstants maximalConstants();

/// Hoeffding-type tail bound for max_{1<=i<=n} ||S_i||:
/// 2 sqrt(e) exp(-x^2 / (4 n (B + C Delta)^2)).
double hoeffdingTailBound(long n, double x, double B, double delta);

/// phi-mixing variant: 2 sqrt(e) exp(-x^2 / (4 n B^2 (1 + 6 C series)^2))
/// with series = sum_{j>=1} j^{-1/2} phi_1(j).
double phiMixingTailBound(long n, double x, double B, double phi1Series);

/// Martingale-difference maximal moment bound:
/// E max_{i<=n} ||Z_1+..+Z_i||^{2p} <= 2^{p+1} Gamma(p+1) n^p Bd^{2p}.
double martMomentBound(long n, double p, double Bd);

/// Adapted sequences: L^{2p} bound on max partial sums,
/// (2^{p+1} Gamma(p+1))^{1/2p} sqrt(n) (martPartNorm + (5/sqrt 2) Delta_q).
/// q must be the unique integer with 2^{q-1} <= n < 2^q.
double adaptedMaxMomentBound(long n, double p, double martPartNorm, double deltaQ, int q);

/// Non-adapted counterpart with factor 2/sqrt(2) on Delta'_q.
double nonadaptedMaxMomentBound(long n, double p, double condNorm, double deltaPrimeQ, int q);

/// Combined stationary-sequence bound:
/// E max_{i<=n} ||S_i||^{2p} <= 2^{p+1} Gamma(p+1) n^p (B + D dFwd + D' dBwd)^{2p}
/// with dFwd = sum_{j<=n} j^{-3/2} ||E(S_j|F_0)||_inf and dBwd the backward
/// analogue.
double stationaryMaxMomentBound(long n, double p, double B, double dFwd, double dBwd);

/// Conditional second-moment bound at dyadic n = 2^q:
/// ||E(||S_n||^2 | F_0)||_inf <= n (x1SqNorm + Delta_q/2 + Delta'_q/2)^2.
double dyadicCondSecondMomentBound(long n, double x1SqNorm, double deltaQ, double deltaPrimeQ);

/// Dyadic subadditivity inequality: for U_0 = 0, U positive with
/// U_{i+j} <= C1 U_i + C2 U_j, p >= 1 and 2^{r-1} <= n < 2^r,
///   sum_{j=0}^{r-1} 2^{-j(p-1)} U_{2^j} <= C/(1-2^{-p}) sum_{k=1}^{n-1} k^{-p} U_k
/// with C = C1 + C2. Subadditivity over the supplied indices is a checked
/// precondition; a violated inequality on valid input is an implementation bug.
struct DyadicCheck {
    double lhs;
    double rhs;
    bool ok;
};
DyadicCheck subadditiveDyadicCheck(std::span<const double> U, double C1, double C2, double p,
                                   long n);

/// Summable sequence family for the Kronecker-type tail: U_k = a * k^s
/// (power) or U_k = a * g^k (geometric, g < 1), or identically zero.
struct SeqFamily {
    enum class Kind { Zero, Power, Geometric };
    Kind kind = Kind::Zero;
    double a = 0.0;
    double s = 0.0;  // power exponent
    double g = 0.5;  // geometric ratio
    double eval(long k) const;
    /// Whether sum_k k^{-p} U_k < infinity.
    bool summable(double p) const;
};

/// Tabulates m -> m^{-(p-1)} sum_{j>=1} j^{-p} U_{jm} over the grid; the
/// series is summed to convergence with a monotone tail estimate. Errors if
/// the family is not certified summable at exponent p.
std::vector<std::pair<long, double>> kroneckerTailCheck(const SeqFamily& U, double p,
                                                        std::span<const long> mGrid);

/// The dyadic index q with 2^{q-1} <= n < 2^q.
int dyadicIndex(long n);

}  // namespace mdlab
