#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "mdlab/hilbert.hpp"
#include "mdlab/processes.hpp"

namespace mdlab {

/// Long-run covariance estimate from replicated stationary paths:
/// Q[k][l] = gamma_0(k,l) + sum_{p=1}^{P} (gamma_p(k,l) + gamma_p(l,k)),
/// symmetrized, with negative eigenvalues clamped to zero.
struct QEstimate {
    TraceClassOperator Q;
    double clampMagnitude = 0.0;  // |most negative eigenvalue clamped|
    double relSe = 0.0;           // Frobenius SE across replicates / ||Q||_F
    int lagCutoff = 0;
    int reps = 0;
    long pathLen = 0;
};

QEstimate estimateQ(const Process& model, int lagCutoff, int reps, long pathLen,
                    std::uint64_t seed, int threads = 1, double relSeCap = 0.5);

/// Default lag cutoff: the smallest P with decayRate^P below 1e-6 (certified
/// geometric covariance decay), capped at maxLag.
int defaultLagCutoff(double decayRate, int maxLag = 256);

/// Model-derived default lag cutoff: exact dependence range for finite
/// linear families (2L), geometric-decay based otherwise.
int defaultLagForModel(const Process& model, int maxLag = 256);

/// Eigen decomposition of a trace-class operator plus the rate functions
/// derived from it. Eigenvalues are sorted descending and clamped at zero;
/// reconstruction is verified to 1e-8 relative.
class SpectralRate {
public:
    explicit SpectralRate(const TraceClassOperator& Q, double rangeTol = 1e-8);

    const Eigen::VectorXd& eigenvalues() const { return eigenvalues_; }
    const Eigen::MatrixXd& eigenvectors() const { return eigenvectors_; }
    Eigen::Index dim() const { return eigenvalues_.size(); }
    double trace() const { return eigenvalues_.sum(); }
    double rangeTol() const { return rangeTol_; }

    /// Legendre transform of y -> <y,Qy>/2 at x: 1/2 sum_{lambda_i>0}
    /// <x,f_i>^2/lambda_i if x lies in the range of Q (within rangeTol on
    /// the energy in null directions), +infinity otherwise.
    double lambdaStar(const HVec& x) const;

    /// I(phi) = int_0^1 lambdaStar(phi'(t)) dt; exact for piecewise-linear
    /// paths (constant slope per segment). +infinity unless phi(0) = 0.
    double functionalRate(const PathCH& phi) const;

    /// Membership in the LIL cluster set K = { 2 I(phi) <= 1 }.
    bool clusterSetContains(const PathCH& phi) const;

    /// <y, Q y> reconstructed from the spectrum.
    double quadForm(const HVec& y) const;

private:
    Eigen::VectorXd eigenvalues_;
    Eigen::MatrixXd eigenvectors_;
    double rangeTol_;
    double zeroTol_;
};

/// inf of lambdaStar over the half-space {x : <u,x> >= r}; closed form
/// r^2 / (2 <u,Qu>) for r > 0, 0 for r <= 0.
double halfspaceInfRate(const TraceClassOperator& Q, const HVec& u, double r);

/// inf of lambdaStar over {||x|| >= r} = r^2 / (2 lambda_1).
double ballComplementInfRate(const SpectralRate& rate, double r);

/// Discretized Cramer-von-Mises covariance kernel on a mu-weighted grid.
/// kernel(i,j) = C(t_i,t_j) sqrt(w_i w_j) with the lag series symmetrized
/// and truncated at lagCutoff; PSD-clamped after truncation.
struct CvmKernel {
    Eigen::VectorXd grid, weights;
    Eigen::MatrixXd kernel;  // sqrt(mu)-scaled, PSD after clamping
    Eigen::MatrixXd rawC;    // C(t_i, t_j) itself
    int lagCutoff = 0;
    double truncationTail = 0.0;  // certified bound on the neglected series tail
    double clampMagnitude = 0.0;

    double topEigenvalue() const;
    TraceClassOperator toOperator() const;
};

/// Exact kernels: i.i.d. base (series vanishes; C = F(min) - F F) and
/// finite-chain base (joint CDFs by matrix powers).
CvmKernel cvmKernelExactIidUniform(const Eigen::VectorXd& grid, const Eigen::VectorXd& weights);
CvmKernel cvmKernelExactChain(const FiniteStateChain& chain, const Eigen::VectorXd& grid,
                              const Eigen::VectorXd& weights, int lagCutoff);

/// MC kernel for any real-valued base of an EmpiricalIndicator model.
CvmKernel cvmKernelMc(const EmpiricalIndicator& model, int lagCutoff, int reps, long pathLen,
                      std::uint64_t seed, int threads = 1);

/// CvM rate I'(y) = y^2 / (2 nu), nu the top kernel eigenvalue.
double cvmRate(const CvmKernel& kernel, double y);

/// sigma(Z)^2 = max over g in {-1,+1}^G of sum g_s g_t C(s,t) mu_s mu_t;
/// exhaustive Gray-code search for G <= exhaustiveMaxG, multi-start steepest
/// ascent above.
struct SigmaSqResult {
    double sigmaSq = 0.0;
    std::vector<int> signs;
    bool exhaustive = false;
};
SigmaSqResult kantorovichSigmaSq(const CvmKernel& kernel, int exhaustiveMaxG = 20,
                                 int multistarts = 64, std::uint64_t seed = 1);

/// Kantorovich rate J(y) = y^2 / (2 sigma^2).
double kantorovichRate(double sigmaSq, double y);

}  // namespace mdlab
