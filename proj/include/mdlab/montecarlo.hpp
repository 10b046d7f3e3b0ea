#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "mdlab/dependence.hpp"
#include "mdlab/hilbert.hpp"
#include "mdlab/processes.hpp"
#include "mdlab/rate.hpp"

namespace mdlab {

enum class CiKind { NormalApprox, ClopperPearson };

struct BinomCi {
    double lo = 0.0;
    double hi = 1.0;
};

/// Binomial confidence interval for k successes out of n. NormalApprox takes
/// a z-multiplier (e.g. 3 for the 3-sigma band), ClopperPearson a level
/// alpha (e.g. 0.05 for 95%).
BinomCi binomialCi(long k, long n, CiKind kind, double param);

/// Speed sequence a_n = n^{-beta}; the constructor enforces a_n -> 0 and
/// n a_n -> infinity (0 < beta < 1).
class SpeedRule {
public:
    explicit SpeedRule(double beta);
    double beta() const { return beta_; }
    double eval(long n) const;

private:
    double beta_;
};

struct Region {
    enum class Kind { HalfSpace, BallComplement };
    Kind kind = Kind::BallComplement;
    HVec u;  // half-space direction
    double r = 1.0;

    static Region halfSpace(HVec u, double r);
    static Region ballComplement(double r);
};

// --------------------------------------------------------- tail verification

struct TailEstimate {
    std::vector<double> xGrid;
    std::vector<long> counts;
    long reps = 0;
    bool exact = false;  // exhaustive enumeration instead of sampling
    double delta = 0.0;  // dependence ingredient used by the bound
    double boundB = 0.0;
    std::vector<double> pHat, ciLow, ciHigh, boundValues;
    std::vector<char> violated;  // ciLow > bound

    bool anyViolation() const;
};

/// Estimates P(max_{1<=i<=n} ||S_i|| >= x) over the grid against the tail
/// bound with the model's certified Delta. Scalar i.i.d. Rademacher models
/// with n <= 20 are enumerated exhaustively (exact probabilities).
TailEstimate verifyHoeffding(const Process& model, int n, std::span<const double> xGrid,
                             long reps, std::uint64_t seed, int threads = 1,
                             CiKind ci = CiKind::NormalApprox, double ciParam = 3.0);

/// Exact enumeration of all 2^n Rademacher walks.
struct RademacherEnum {
    int n = 0;
    std::vector<double> pMaxGe;  // P(max_i |S_i| >= x), x = 1..n
    double eMaxSq = 0.0;         // E max_{i<=n} S_i^2
};
RademacherEnum enumerateRademacher(int n);

// ------------------------------------------------------------ MDP log tails

struct MdpRow {
    long n = 0;
    double an = 0.0;
    long count = 0;
    long reps = 0;
    double pHat = 0.0;
    double anLogP = 0.0;  // one-sided rule-of-three bound when count == 0
    double anLogCiLo = 0.0;
    double anLogCiHi = 0.0;
    bool zeroCount = false;
    double negInfRate = 0.0;  // -inf{Lambda*(x) : x in region}
};

/// Estimates a_n log P(sqrt(a_n/n) S_n in region) over the n grid, with the
/// rate-function reference. Asymptotic agreement is a diagnostic, never
/// asserted.
std::vector<MdpRow> mdpLogTail(const Process& model, const TraceClassOperator& Q,
                               std::span<const long> nGrid, const SpeedRule& speed,
                               const Region& region, long reps, std::uint64_t seed,
                               int threads = 1, CiKind ci = CiKind::ClopperPearson,
                               double ciParam = 0.05);

// --------------------------------------------------- block martingale approx

struct BlockRow {
    long n = 0;
    int m = 0;
    long kn = 0;
    double residualMedian = 0.0;  // sqrt(a_n/n) * sup_t ||S_[nt] - M_[kn t]||
    double residualQ90 = 0.0;
    double bracketValue = 0.0;  // max_s (1/m) E(||D_{1,m}||^2 | Y_0 = s)
    double bracketDev = 0.0;    // max_s |(1/m) E(||D||^2|Y_0=s) - Tr Q|
};

struct BlockReport {
    std::vector<BlockRow> rows;
    double trQ = 0.0;
    double alpha = 0.0;
};

/// Block-martingale decomposition residual with m_n = max(1, floor(n^alpha)).
/// Exact conditional block means for finite chains and i.i.d. models; other
/// models are out of the exact mode's scope and rejected.
BlockReport blockResidual(const Process& model, std::span<const long> nList, double alpha,
                          const SpeedRule& speed, long reps, std::uint64_t seed, int threads = 1);

// ------------------------------------------------------------- LIL statistic

struct LilRow {
    long n = 0;
    double betaN = 0.0;  // sqrt(2 n log log n)
    double q50 = 0.0;
    double q90 = 0.0;
    double maxStat = 0.0;  // max over replicates of sup_t ||S~_n(t)|| / beta(n)
};

double lilNormalizer(long n);

/// Per-n empirical distribution of sup_t ||S~_n(t)|| / beta(n), evaluated
/// along one long path per replicate at every n in nList.
std::vector<LilRow> lilStatistic(const Process& model, std::span<const long> nList, long reps,
                                 std::uint64_t seed, int threads = 1);

/// Kantorovich variant for empirical-CDF models:
/// ||n (F_n - F)||_{L1(mu)} / beta(n), with the per-replicate running max
/// across the n list (compared downstream against sigma(Z)).
struct LilL1Row {
    long n = 0;
    double betaN = 0.0;
    double q50 = 0.0;
    double maxStat = 0.0;
};
std::vector<LilL1Row> lilL1Statistic(const EmpiricalIndicator& model, std::span<const long> nList,
                                     long reps, std::uint64_t seed, int threads = 1);

}  // namespace mdlab
