#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "mdlab/hilbert.hpp"
#include "mdlab/processes.hpp"

namespace mdlab {

enum class EstimateMode { Exact, AnalyticBound, McLower };

const char* modeName(EstimateMode m);

struct NormEstimate {
    double value = 0.0;
    double se = 0.0;
    EstimateMode mode = EstimateMode::Exact;
};

/// Tabulated dependence ingredients. fwd[j-1] bounds/estimates
/// ||E(S_j|F_0)||_inf, bwd[j-1] bounds/estimates ||S_j - E(S_j|F_j)||_inf.
/// The certified entries (exact or analytic) feed the tail bounds; MC lower
/// estimates, when present, are reported alongside and checked against them.
struct DependenceProfile {
    std::vector<NormEstimate> fwd, bwd;
    std::vector<NormEstimate> fwdMc, bwdMc;  // optional, sparse (value<0 = absent)
    int J() const { return static_cast<int>(fwd.size()); }
};

/// Monte-Carlo lower estimate of ||E(S_j|F_0)||_inf: max over outerM sampled
/// time-0 states of the norm of the inner-MC conditional mean.
NormEstimate estimateFwdNorm(const Process& model, int j, int outerM, int innerN,
                             std::uint64_t seed, int threads = 1);

/// Batched version sharing inner paths across all j = 1..J.
std::vector<NormEstimate> estimateFwdNorms(const Process& model, int J, int outerM, int innerN,
                                           std::uint64_t seed, int threads = 1);

/// ||S_j - E(S_j|F_j)||_inf. Exact 0 for adapted models (no sampling); MC
/// estimate via future-innovation resampling for two-sided linear processes.
NormEstimate estimateBwdNorm(const Process& model, int j, int outerM, int innerN,
                             std::uint64_t seed, int threads = 1);

/// Delta = sum_{j=1}^n j^{-3/2} (fwd_j + bwd_j) from the certified entries.
double deltaSum(const DependenceProfile& profile, int n);

// --- exact finite-chain coefficients ---

/// phi_1(n) = phi(F_0, sigma(X_n)), exact via matrix powers; events are
/// generated by the observable (states with equal observables are grouped).
double phi1Exact(const FiniteStateChain& chain, int n);
std::vector<double> phi1ExactUpTo(const FiniteStateChain& chain, int nMax);

/// phi_2(n) = sup_{i>j>=n} phi(F_0, sigma(X_i, X_j)); the sup is truncated
/// at j <= n + horizon, i - j <= horizon.
double phi2Exact(const FiniteStateChain& chain, int n, int horizon);

/// Dedecker-Prieur coefficient phi-tilde_k(n) for k = 2 (real state values
/// as thresholds), truncated at the same horizon.
double phiTilde2Exact(const FiniteStateChain& chain, int n, int horizon);
double phiTilde1Exact(const FiniteStateChain& chain, int n, int horizon);

/// sum_{j>=1} j^{-1/2} phi_1(j), computed to J terms plus a certified
/// geometric tail bound (included in value, reported separately).
struct Phi1Series {
    double value = 0.0;
    double tailBound = 0.0;
    bool truncated = false;
};
Phi1Series phi1SeriesValue(const FiniteStateChain& chain, int J);

// --- analytic bounds for functions of linear processes ---

/// w_f(delta(eps) * sum_{k>=n} ||c_k||), a bound on ||E(X_n|F_0)||_inf.
double linearPerXFwdBound(const LinearProcess& lp, int n);
/// w_f(delta(eps) * sum_{k<=-max(n,1)} ||c_k||), a bound on
/// ||X_{-n} - E(X_{-n}|F_0)||_inf.
double linearPerXBwdBound(const LinearProcess& lp, int n);
/// S_j-level bounds by summing the per-X bounds (triangle inequality).
std::vector<double> linearFwdBounds(const LinearProcess& lp, int J);
std::vector<double> linearBwdBounds(const LinearProcess& lp, int J);

// --- analytic bound for contractive Markov chains ---

/// 2 * stateBound * C * rho^k * lipF, bound on ||E(X_k|F_0)||_inf.
double markovFwdBound(double stateBound, double C, double rho, double lipF, int k);
std::vector<double> markovFwdNorms(const StableMarkov& mk, int J);

// --- certified profiles and the Hoeffding Delta ---

/// Exact (chains, i.i.d.) or analytic (linear, Markov) profile; throws
/// PreconditionError for models with no certified ingredients.
DependenceProfile certifiedProfile(const Process& model, int J);

/// Delta of the tail bound at horizon n, from the certified profile.
double certifiedDelta(const Process& model, int n);

/// Adds MC estimates at the given j values and asserts they do not exceed
/// certified entries beyond 3 standard errors.
void addMcEstimates(DependenceProfile& profile, const Process& model, std::span<const int> js,
                    int outerM, int innerN, std::uint64_t seed, int threads = 1);

// --- numerical evidence for the MDP conditions ---

struct MdpConditionRow {
    long n = 0;
    double condCov = 0.0;     // max_{k,l} ||(1/n) E(<S_n,e_k><S_n,e_l>|F_0) - Q_kl||
    double condTrace = 0.0;   // ||(1/n) E(||S_n||^2|F_0) - Tr Q||
    double corrCov = 0.0;     // max_{k,l} ||E(<X_i,e_k><X_j,e_l>|F_{-n}) - E(.)||
    double corrInner = 0.0;   // ||E(<X_i,X_j>|F_{-n}) - E<X_i,X_j>||
    bool exact = false;
};

struct MdpConditionsReport {
    std::vector<MdpConditionRow> rows;
    double fwdSeriesPartial = 0.0;  // sum j^{-3/2} fwd_j over the profile horizon
    double bwdSeriesPartial = 0.0;
    bool fwdSeriesCauchy = false;   // last dyadic block small relative to total
    bool bwdSeriesCauchy = false;
};

/// MC (or exact for finite chains) evaluation of the condition quantities
/// over n in nGrid, at the pair (i, j) for the Corollary-style conditions.
/// Numerical evidence only, not proof.
MdpConditionsReport checkMdpConditions(const Process& model, const TraceClassOperator& Qhat,
                                       std::span<const long> nGrid, int pairI, int pairJ,
                                       int outerM, int innerN, std::uint64_t seed,
                                       int threads = 1);

}  // namespace mdlab
