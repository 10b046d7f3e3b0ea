#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <limits>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mdlab/hilbert.hpp"
#include "mdlab/rng.hpp"

namespace mdlab {

/// Bounded i.i.d. sampler on R^d used as innovations everywhere. All kinds
/// are centered and symmetric, so analytic centering of downstream maps that
/// are odd needs no Monte-Carlo pre-pass.
class Innovation {
public:
    enum class Kind { RademacherScalar, UniformBox };

    static Innovation rademacher();
    static Innovation uniformBox(int dim, double halfWidth);

    Kind kind() const { return kind_; }
    int dim() const { return dim_; }
    double halfWidth() const { return halfWidth_; }

    /// esssup ||eps||.
    double normBound() const;
    /// esssup |eps_i| per coordinate.
    double coordBound() const;
    /// Essential diameter delta(eps_0) = 2 inf_x esssup ||eps_0 - x||.
    double diameter() const;
    /// Per-coordinate variance (for closed-form oracles).
    double coordVariance() const;

    void sample(Rng& rng, Eigen::Ref<Eigen::VectorXd> out) const;

private:
    Innovation(Kind k, int d, double hw) : kind_(k), dim_(d), halfWidth_(hw) {}
    Kind kind_;
    int dim_;
    double halfWidth_;
};

/// Certified modulus of continuity w_f. Lipschitz: w(h) = lip*h. LogPower:
/// w(h) = D * |log min(h, 1/e)|^{-gamma} (nondecreasing continuation past
/// h = 1/e). Both optionally clipped at an amplitude cap.
struct Modulus {
    enum class Kind { Lipschitz, LogPower };
    Kind kind = Kind::Lipschitz;
    double lip = 1.0;
    double logD = 1.0;
    double logGamma = 1.0;
    double ampCap = std::numeric_limits<double>::infinity();

    static Modulus lipschitz(double l);
    static Modulus logPower(double D, double gamma);

    double eval(double h) const;
};

/// Executable map f: H -> H with a certified modulus.
class MapF {
public:
    enum class Kind { Identity, TanhCoordwise };

    static MapF identity();
    static MapF tanhCoordwise(double scale);

    Kind kind() const { return kind_; }
    bool isIdentity() const { return kind_ == Kind::Identity; }
    double lip() const;

    void apply(Eigen::Ref<Eigen::VectorXd> x) const;  // in place
    Modulus modulus(int dim) const;

private:
    MapF(Kind k, double s) : kind_(k), scale_(s) {}
    Kind kind_;
    double scale_;
};

/// Frozen past of a generator: everything F_0-measurable that the future of
/// the sequence depends on. Plain value; safe to copy between workers.
struct Snapshot {
    std::string kind;
    std::vector<double> data;
};

/// A bounded stationary H-valued sequence generator. Instances are immutable
/// after construction; all sampling state lives in the caller's Rng, so a
/// const instance can be shared across workers.
class Process {
public:
    virtual ~Process() = default;

    virtual const std::string& kind() const = 0;
    virtual int dim() const = 0;
    /// Certified essential bound on ||X_0||.
    virtual double boundB() const = 0;
    /// X_0 measurable w.r.t. F_0? Non-adapted models activate the backward
    /// term of the dependence profile.
    virtual bool adapted() const = 0;

    /// Draw the time-0 state from the stationary law (burn-in where needed).
    virtual Snapshot drawOrigin(Rng& rng) const = 0;

    /// Emit X_1..X_n conditionally on F_0 = snapshot into out (dim x n,
    /// column k-1 is X_k). Deterministic given the rng state; out is resized.
    virtual void pathGiven(const Snapshot& past, int n, Rng& rng, Eigen::MatrixXd& out) const = 0;

    /// Unconditional stationary draw of (X_1,...,X_n); asserts the bound.
    std::vector<HVec> samplePath(int n, Rng& rng) const;

    /// Normalized polygonal path Z_n: knots k/n, value S_k / sqrt(n).
    PathCH partialSumPath(int n, Rng& rng) const;

    void checkSnapshot(const Snapshot& s) const;
};

/// i.i.d. bounded centered sequence; the snapshot is empty.
class IidProcess final : public Process {
public:
    explicit IidProcess(Innovation innov);

    const std::string& kind() const override;
    int dim() const override { return innov_.dim(); }
    double boundB() const override { return innov_.normBound(); }
    bool adapted() const override { return true; }
    Snapshot drawOrigin(Rng& rng) const override;
    void pathGiven(const Snapshot& past, int n, Rng& rng, Eigen::MatrixXd& out) const override;

    const Innovation& innovation() const { return innov_; }

private:
    Innovation innov_;
};

/// X_k = f(sum_{|i|<=L} c_i eps_{k-i}) - E f(...). Filtration F_j is the one
/// generated by innovations up to time j; the model is adapted iff all c_i
/// with i < 0 vanish.
class LinearProcess final : public Process {
public:
    LinearProcess(std::vector<std::pair<int, Eigen::MatrixXd>> coeffs, Innovation innov, MapF f,
                  long centerPrepassN = 200000, std::uint64_t centerSeed = 40913);

    /// c_i = rho^|i| * I on 0..L (one-sided) or -L..L (two-sided).
    static LinearProcess geometric(double rho, int L, bool twoSided, Innovation innov, MapF f);

    const std::string& kind() const override;
    int dim() const override { return innov_.dim(); }
    double boundB() const override { return boundB_; }
    bool adapted() const override { return adapted_; }
    Snapshot drawOrigin(Rng& rng) const override;
    void pathGiven(const Snapshot& past, int n, Rng& rng, Eigen::MatrixXd& out) const override;

    int lag() const { return L_; }
    const Innovation& innovation() const { return innov_; }
    const MapF& mapF() const { return f_; }
    Modulus modulus() const { return f_.modulus(dim()); }
    double delta() const { return innov_.diameter(); }
    const HVec& center() const { return center_; }
    double centerSe() const { return centerSe_; }

    double opNorm(int i) const;      // ||c_i||, 0 outside [-L, L]
    double opNormSum() const;        // sum_i ||c_i||
    double tailPos(int n) const;     // sum_{k >= n} ||c_k||
    double tailNeg(int n) const;     // sum_{k <= -n} ||c_k||

    // Innovation-window machinery for conditioning on F_j. A window for
    // S_j holds innovations for times (1-L)..(j+L); entry w(t) = column
    // t - (1 - L) of the matrix.
    void drawWindow(int j, Rng& rng, Eigen::MatrixXd& eps) const;
    /// Resample the innovations with time index > j (the non-F_j part).
    void resampleFuture(int j, Rng& rng, Eigen::MatrixXd& eps) const;
    /// X_k evaluated from the window (1 <= k <= j).
    void xFromWindow(const Eigen::MatrixXd& eps, int k, Eigen::Ref<Eigen::VectorXd> out) const;
    /// S_j from the window.
    HVec sumFromWindow(const Eigen::MatrixXd& eps, int j) const;

private:
    void emitFromBuffer(const Eigen::MatrixXd& eps, int firstTime, int k,
                        Eigen::Ref<Eigen::VectorXd> out) const;

    std::vector<Eigen::MatrixXd> coeffs_;  // offset i stored at i + L
    std::vector<double> coeffScalars_;     // fast path when dim == 1
    std::vector<double> opNorms_;
    int L_;
    bool adapted_;
    Innovation innov_;
    MapF f_;
    HVec center_;
    double centerSe_ = 0.0;
    double boundB_ = 0.0;
    double reachRadius_ = 0.0;
};

/// Y_n = F(Y_{n-1}, xi_n) with an L1-contractive kernel (Cor. of the stable
/// Markov chain conditions with C = 1), X_k = f(Y_k) - E f(Y_k).
class StableMarkov final : public Process {
public:
    enum class MapKind { Affine, TanhContraction };

    StableMarkov(MapKind mapKind, double rho, Innovation innov, MapF obs);

    const std::string& kind() const override;
    int dim() const override { return innov_.dim(); }
    double boundB() const override { return boundB_; }
    bool adapted() const override { return true; }
    Snapshot drawOrigin(Rng& rng) const override;
    void pathGiven(const Snapshot& past, int n, Rng& rng, Eigen::MatrixXd& out) const override;

    double rho() const { return rho_; }
    double stateBound() const { return stateBound_; }
    double lipObs() const { return obs_.lip(); }
    double kernelC() const { return 1.0; }
    int burnin() const { return burnin_; }
    const Innovation& innovation() const { return innov_; }

    /// E(X_k | F_0) in closed form; available for the affine map with the
    /// identity observable (conditional mean is rho^k * Y_0).
    bool exactCondMeanAvailable() const;
    HVec exactCondMean(const Snapshot& past, int k) const;

    /// Sampled certificate max over test pairs of E||F(x,xi)-F(y,xi)|| /
    /// ||x-y||; must not exceed rho.
    double contractionCertificate(int pairs, int draws, std::uint64_t seed) const;

    void step(Eigen::Ref<Eigen::VectorXd> y, Rng& rng) const;
    void stepWith(Eigen::Ref<Eigen::VectorXd> y, const Eigen::VectorXd& xi) const;

private:
    MapKind mapKind_;
    double rho_;
    Innovation innov_;
    MapF obs_;
    double stateBound_;
    double boundB_;
    int burnin_;
};

/// Irreducible finite-state chain with real state values and an H-valued
/// observable (default: the state value itself, dim 1). Everything the
/// theorems need is computable exactly here via transition-matrix powers.
class FiniteStateChain final : public Process {
public:
    FiniteStateChain(Eigen::MatrixXd transition, std::vector<double> values,
                     std::optional<Eigen::MatrixXd> obsVectors = std::nullopt);

    const std::string& kind() const override;
    int dim() const override { return static_cast<int>(obs_.cols()); }
    double boundB() const override { return boundB_; }
    bool adapted() const override { return true; }
    Snapshot drawOrigin(Rng& rng) const override;
    void pathGiven(const Snapshot& past, int n, Rng& rng, Eigen::MatrixXd& out) const override;

    int numStates() const { return static_cast<int>(transition_.rows()); }
    const Eigen::MatrixXd& transition() const { return transition_; }
    std::span<const double> transitionRow(int s) const;
    const Eigen::VectorXd& stationary() const { return stationary_; }
    const std::vector<double>& stateValues() const { return values_; }
    /// Centered observable matrix (row s = x(s)).
    const Eigen::MatrixXd& centeredObs() const { return obs_; }

    const Eigen::MatrixXd& power(int k) const;  // P^k, cached

    // --- exact machinery ---
    /// V_j = max_s ||E(S_j | Y_0 = s)|| for j = 1..J.
    std::vector<double> exactFwdNorms(int J) const;
    /// ||E(||X_1||^2 | F_0)||_inf.
    double exactCondSecondMomentSup() const;
    /// Long-run covariance operator, exact (fundamental-matrix closed form).
    TraceClassOperator exactQ() const;
    /// E(S_m | Y_0 = s).
    HVec blockCondMean(int state, int m) const;
    /// E(||S_m||^2 | Y_0 = s) via the pairwise-moment formula.
    double blockCondSecondMoment(int state, int m) const;
    /// Stationary F(t) = P(Y <= t).
    double marginalCdf(double t) const;
    /// P(Y_0 <= t, Y_k <= s) under stationarity (k >= 1).
    double jointCdfLagK(double t, double s, int k) const;

    int stateFromSnapshot(const Snapshot& past) const;

private:
    struct PowerCache {
        std::mutex mutex;
        // unique_ptr elements keep returned references valid across growth
        std::vector<std::unique_ptr<Eigen::MatrixXd>> powers;
    };

    Eigen::MatrixXd transition_;
    std::vector<double> rowsFlat_;  // row-major transition, for sampling
    Eigen::VectorXd stationary_;
    std::vector<double> values_;
    Eigen::MatrixXd obs_;  // centered
    double boundB_;
    // copies share the cache; it depends only on the immutable transition
    std::shared_ptr<PowerCache> cache_;
};

/// Empirical-CDF indicator process in a discretized L^2(mu): coordinate k of
/// X_i is (1{Y_i <= t_k} - F(t_k)) * sqrt(mu_k) for a real-valued stationary
/// base sequence Y.
class EmpiricalIndicator final : public Process {
public:
    struct Base {
        enum class Kind { IidUniform01, Ar1, Chain };
        Kind kind = Kind::IidUniform01;
        double rho = 0.5;        // Ar1
        double halfWidth = 1.0;  // Ar1 innovation half-width
        std::shared_ptr<const FiniteStateChain> chain;  // Chain
    };

    EmpiricalIndicator(Base base, Eigen::VectorXd grid, Eigen::VectorXd weights,
                       long cdfPrepassN = 200000, std::uint64_t cdfSeed = 71001);

    const std::string& kind() const override;
    int dim() const override { return static_cast<int>(grid_.size()); }
    double boundB() const override { return boundB_; }
    bool adapted() const override { return true; }
    Snapshot drawOrigin(Rng& rng) const override;
    void pathGiven(const Snapshot& past, int n, Rng& rng, Eigen::MatrixXd& out) const override;

    const Eigen::VectorXd& grid() const { return grid_; }
    const Eigen::VectorXd& weights() const { return weights_; }
    const Eigen::VectorXd& cdfAtGrid() const { return cdf_; }
    double cdfSe() const { return cdfSe_; }
    const Base& base() const { return base_; }
    const FiniteStateChain* chainBase() const { return base_.chain.get(); }

    /// Base path Y_1..Y_n given F_0.
    void basePathGiven(const Snapshot& past, int n, Rng& rng, std::vector<double>& out) const;

    /// ||n (F_n - F)||_{L^1(mu)} on the grid, from a base path.
    double l1Stat(std::span<const double> ys) const;

    /// For a finite-chain base: the same process expressed as a
    /// FiniteStateChain with the indicator observable (exact machinery).
    FiniteStateChain asChain() const;

private:
    void xFromBase(double y, Eigen::Ref<Eigen::VectorXd> out) const;
    int ar1Burnin() const;

    Base base_;
    Eigen::VectorXd grid_, weights_, cdf_, sqrtW_;
    double cdfSe_ = 0.0;
    double boundB_ = 0.0;
};

}  // namespace mdlab
