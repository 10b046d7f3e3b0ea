#include "mdlab/dependence.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "mdlab/parallel.hpp"

namespace mdlab {

const char* modeName(EstimateMode m) {
    switch (m) {
        case EstimateMode::Exact: return "exact";
        case EstimateMode::AnalyticBound: return "analytic-bound";
        case EstimateMode::McLower: return "mc-lower-estimate";
    }
    return "?";
}

// ------------------------------------------------------------- MC estimates

std::vector<NormEstimate> estimateFwdNorms(const Process& model, int J, int outerM, int innerN,
                                           std::uint64_t seed, int threads) {
    require(J >= 1 && outerM >= 1 && innerN >= 1, "estimateFwdNorms: bad budgets");
    const int d = model.dim();
    std::vector<std::vector<double>> vals(static_cast<std::size_t>(outerM));
    std::vector<std::vector<double>> ses(static_cast<std::size_t>(outerM));
    parallelFor(outerM, threads, [&](long o) {
        Rng rng(seed, static_cast<std::uint64_t>(o));
        const Snapshot snap = model.drawOrigin(rng);
        Eigen::MatrixXd xs;
        Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(d, J);
        Eigen::VectorXd accSq = Eigen::VectorXd::Zero(J);
        HVec s(d);
        for (int t = 0; t < innerN; ++t) {
            model.pathGiven(snap, J, rng, xs);
            s.setZero();
            for (int j = 0; j < J; ++j) {
                s += xs.col(j);
                acc.col(j) += s;
                accSq(j) += s.squaredNorm();
            }
        }
        auto& v = vals[static_cast<std::size_t>(o)];
        auto& e = ses[static_cast<std::size_t>(o)];
        v.resize(static_cast<std::size_t>(J));
        e.resize(static_cast<std::size_t>(J));
        for (int j = 0; j < J; ++j) {
            const HVec mean = acc.col(j) / static_cast<double>(innerN);
            if (!mean.allFinite()) throw PreconditionError("estimateFwdNorms: non-finite accumulation");
            const double var =
                std::max(0.0, accSq(j) / static_cast<double>(innerN) - mean.squaredNorm());
            v[static_cast<std::size_t>(j)] = mean.norm();
            e[static_cast<std::size_t>(j)] = std::sqrt(var / static_cast<double>(innerN));
        }
    });
    std::vector<NormEstimate> out(static_cast<std::size_t>(J));
    for (int j = 0; j < J; ++j) {
        int best = 0;
        for (int o = 1; o < outerM; ++o)
            if (vals[static_cast<std::size_t>(o)][static_cast<std::size_t>(j)] >
                vals[static_cast<std::size_t>(best)][static_cast<std::size_t>(j)])
                best = o;
        out[static_cast<std::size_t>(j)] = {vals[static_cast<std::size_t>(best)][static_cast<std::size_t>(j)],
                                            ses[static_cast<std::size_t>(best)][static_cast<std::size_t>(j)],
                                            EstimateMode::McLower};
    }
    return out;
}

NormEstimate estimateFwdNorm(const Process& model, int j, int outerM, int innerN,
                             std::uint64_t seed, int threads) {
    require(j >= 1, "estimateFwdNorm: j must be >= 1");
    return estimateFwdNorms(model, j, outerM, innerN, seed, threads).back();
}

NormEstimate estimateBwdNorm(const Process& model, int j, int outerM, int innerN,
                             std::uint64_t seed, int threads) {
    require(j >= 1 && outerM >= 1 && innerN >= 1, "estimateBwdNorm: bad arguments");
    if (model.adapted()) return {0.0, 0.0, EstimateMode::Exact};
    const auto* lp = dynamic_cast<const LinearProcess*>(&model);
    require(lp != nullptr,
            "estimateBwdNorm: non-adapted MC estimation is implemented for two-sided linear "
            "processes");
    const int d = model.dim();
    const int L = lp->lag();
    std::vector<double> vals(static_cast<std::size_t>(outerM));
    std::vector<double> ses(static_cast<std::size_t>(outerM));
    parallelFor(outerM, threads, [&](long o) {
        Rng rng(seed, static_cast<std::uint64_t>(o));
        Eigen::MatrixXd eps;
        lp->drawWindow(j, rng, eps);
        const HVec sj = lp->sumFromWindow(eps, j);
        const int kmin = std::max(1, j - L + 1);
        HVec base = HVec::Zero(d), x(d), s(d);
        for (int k = 1; k <= j - L; ++k) {
            lp->xFromWindow(eps, k, x);
            base += x;
        }
        HVec acc = HVec::Zero(d);
        double accSq = 0.0;
        for (int t = 0; t < innerN; ++t) {
            lp->resampleFuture(j, rng, eps);
            s = base;
            for (int k = kmin; k <= j; ++k) {
                lp->xFromWindow(eps, k, x);
                s += x;
            }
            acc += s;
            accSq += s.squaredNorm();
        }
        const HVec condMean = acc / static_cast<double>(innerN);
        if (!condMean.allFinite()) throw PreconditionError("estimateBwdNorm: non-finite accumulation");
        const double var =
            std::max(0.0, accSq / static_cast<double>(innerN) - condMean.squaredNorm());
        vals[static_cast<std::size_t>(o)] = (sj - condMean).norm();
        ses[static_cast<std::size_t>(o)] = std::sqrt(var / static_cast<double>(innerN));
    });
    int best = 0;
    for (int o = 1; o < outerM; ++o)
        if (vals[static_cast<std::size_t>(o)] > vals[static_cast<std::size_t>(best)]) best = o;
    return {vals[static_cast<std::size_t>(best)], ses[static_cast<std::size_t>(best)],
            EstimateMode::McLower};
}

double deltaSum(const DependenceProfile& profile, int n) {
    require(n >= 1, "deltaSum: n must be >= 1");
    require(profile.J() >= n && static_cast<int>(profile.bwd.size()) >= n,
            "deltaSum: profile does not cover j = 1.." + std::to_string(n));
    double acc = 0.0;
    for (int j = 1; j <= n; ++j) {
        const auto& f = profile.fwd[static_cast<std::size_t>(j - 1)];
        const auto& b = profile.bwd[static_cast<std::size_t>(j - 1)];
        acc += (f.value + b.value) / std::pow(static_cast<double>(j), 1.5);
    }
    return acc;
}

// ---------------------------------------------------- exact chain coefficients

namespace {

// States with identical observables generate the same events; group them.
std::vector<int> obsClasses(const FiniteStateChain& chain) {
    const int S = chain.numStates();
    std::vector<int> cls(static_cast<std::size_t>(S), -1);
    int next = 0;
    for (int a = 0; a < S; ++a) {
        if (cls[static_cast<std::size_t>(a)] >= 0) continue;
        cls[static_cast<std::size_t>(a)] = next;
        for (int b = a + 1; b < S; ++b)
            if (cls[static_cast<std::size_t>(b)] < 0 &&
                chain.centeredObs().row(a) == chain.centeredObs().row(b))
                cls[static_cast<std::size_t>(b)] = next;
        ++next;
    }
    return cls;
}

double positivePartSum(const std::map<std::pair<int, int>, double>& cells) {
    double acc = 0.0;
    for (const auto& [k, v] : cells) acc += std::max(0.0, v);
    return acc;
}

std::vector<double> uniqueThresholds(const FiniteStateChain& chain) {
    std::vector<double> t = chain.stateValues();
    std::sort(t.begin(), t.end());
    t.erase(std::unique(t.begin(), t.end()), t.end());
    return t;
}

}  // namespace

double phi1Exact(const FiniteStateChain& chain, int n) {
    require(n >= 1, "phi1Exact: n must be >= 1");
    const int S = chain.numStates();
    const auto cls = obsClasses(chain);
    const Eigen::MatrixXd& pn = chain.power(n);
    double worst = 0.0;
    for (int s = 0; s < S; ++s) {
        std::map<std::pair<int, int>, double> group;
        for (int a = 0; a < S; ++a)
            group[{cls[static_cast<std::size_t>(a)], 0}] += pn(s, a) - chain.stationary()(a);
        worst = std::max(worst, positivePartSum(group));
    }
    return worst;
}

std::vector<double> phi1ExactUpTo(const FiniteStateChain& chain, int nMax) {
    std::vector<double> out(static_cast<std::size_t>(nMax));
    for (int n = 1; n <= nMax; ++n) out[static_cast<std::size_t>(n - 1)] = phi1Exact(chain, n);
    return out;
}

double phi2Exact(const FiniteStateChain& chain, int n, int horizon) {
    require(n >= 1 && horizon >= 1, "phi2Exact: bad arguments");
    require(chain.numStates() <= 12,
            "phi2Exact: state space too large for exhaustive event enumeration; use MC mode");
    const int S = chain.numStates();
    const auto cls = obsClasses(chain);
    double worst = 0.0;
    for (int j = n; j <= n + horizon; ++j) {
        const Eigen::MatrixXd& pj = chain.power(j);
        for (int d = 1; d <= horizon; ++d) {
            const Eigen::MatrixXd& pd = chain.power(d);
            for (int s = 0; s < S; ++s) {
                std::map<std::pair<int, int>, double> group;
                for (int a = 0; a < S; ++a)
                    for (int b = 0; b < S; ++b)
                        group[{cls[static_cast<std::size_t>(a)], cls[static_cast<std::size_t>(b)]}] +=
                            (pj(s, a) - chain.stationary()(a)) * pd(a, b);
                worst = std::max(worst, positivePartSum(group));
            }
        }
    }
    return worst;
}

namespace {

// b(F_0, Y_i) = max_s sup_t |P(Y_i <= t | Y_0=s) - F(t)|
double bCoeff1(const FiniteStateChain& chain, int i) {
    const int S = chain.numStates();
    const Eigen::MatrixXd& pi = chain.power(i);
    const auto thresholds = uniqueThresholds(chain);
    double worst = 0.0;
    for (int s = 0; s < S; ++s) {
        for (double t : thresholds) {
            double cond = 0.0;
            for (int a = 0; a < S; ++a)
                if (chain.stateValues()[static_cast<std::size_t>(a)] <= t) cond += pi(s, a);
            worst = std::max(worst, std::abs(cond - chain.marginalCdf(t)));
        }
    }
    return worst;
}

// b(F_0, Y_{i1}, Y_{i2}) with the product of centered indicator functions
double bCoeff2(const FiniteStateChain& chain, int i1, int i2) {
    const int S = chain.numStates();
    const Eigen::MatrixXd& p1 = chain.power(i1);
    const Eigen::MatrixXd& pd = chain.power(i2 - i1);
    const auto thresholds = uniqueThresholds(chain);
    const auto& val = chain.stateValues();
    double worst = 0.0;
    for (double t1 : thresholds) {
        const double f1 = chain.marginalCdf(t1);
        for (double t2 : thresholds) {
            const double f2 = chain.marginalCdf(t2);
            double unc = 0.0;
            for (int a = 0; a < S; ++a) {
                const double g1 = (val[static_cast<std::size_t>(a)] <= t1 ? 1.0 : 0.0) - f1;
                double inner = 0.0;
                for (int b = 0; b < S; ++b)
                    inner += pd(a, b) * ((val[static_cast<std::size_t>(b)] <= t2 ? 1.0 : 0.0) - f2);
                unc += chain.stationary()(a) * g1 * inner;
            }
            for (int s = 0; s < S; ++s) {
                double cond = 0.0;
                for (int a = 0; a < S; ++a) {
                    const double g1 = (val[static_cast<std::size_t>(a)] <= t1 ? 1.0 : 0.0) - f1;
                    double inner = 0.0;
                    for (int b = 0; b < S; ++b)
                        inner += pd(a, b) * ((val[static_cast<std::size_t>(b)] <= t2 ? 1.0 : 0.0) - f2);
                    cond += p1(s, a) * g1 * inner;
                }
                worst = std::max(worst, std::abs(cond - unc));
            }
        }
    }
    return worst;
}

}  // namespace

double phiTilde1Exact(const FiniteStateChain& chain, int n, int horizon) {
    require(n >= 1 && horizon >= 0, "phiTilde1Exact: bad arguments");
    require(chain.numStates() <= 12, "phiTilde1Exact: state space too large");
    double worst = 0.0;
    for (int i = n; i <= n + horizon; ++i) worst = std::max(worst, bCoeff1(chain, i));
    return worst;
}

double phiTilde2Exact(const FiniteStateChain& chain, int n, int horizon) {
    require(n >= 1 && horizon >= 1, "phiTilde2Exact: bad arguments");
    require(chain.numStates() <= 12, "phiTilde2Exact: state space too large");
    double worst = phiTilde1Exact(chain, n, horizon);
    for (int i1 = n; i1 <= n + horizon; ++i1)
        for (int d = 1; d <= horizon; ++d) worst = std::max(worst, bCoeff2(chain, i1, i1 + d));
    return worst;
}

Phi1Series phi1SeriesValue(const FiniteStateChain& chain, int J) {
    require(J >= 4, "phi1SeriesValue: need at least 4 terms");
    Phi1Series out;
    const auto phis = phi1ExactUpTo(chain, J);
    for (int j = 1; j <= J; ++j)
        out.value += phis[static_cast<std::size_t>(j - 1)] / std::sqrt(static_cast<double>(j));
    const double last = phis[static_cast<std::size_t>(J - 1)];
    if (last <= 1e-300) return out;
    double ratio = 0.0;
    for (int j = J - 3; j < J; ++j) {
        const double prev = phis[static_cast<std::size_t>(j - 1)];
        if (prev <= 1e-300) continue;
        ratio = std::max(ratio, phis[static_cast<std::size_t>(j)] / prev);
    }
    if (ratio >= 1.0 - 1e-9)
        throw PreconditionError("phi1SeriesValue: no geometric decay observed; cannot certify tail");
    out.truncated = true;
    out.tailBound = last * ratio / (1.0 - ratio) / std::sqrt(static_cast<double>(J));
    out.value += out.tailBound;
    return out;
}

// ----------------------------------------------------- analytic linear bounds

double linearPerXFwdBound(const LinearProcess& lp, int n) {
    require(n >= 1, "linearPerXFwdBound: n must be >= 1");
    return lp.modulus().eval(lp.delta() * lp.tailPos(n));
}

double linearPerXBwdBound(const LinearProcess& lp, int n) {
    require(n >= 0, "linearPerXBwdBound: n must be >= 0");
    return lp.modulus().eval(lp.delta() * lp.tailNeg(std::max(n, 1)));
}

std::vector<double> linearFwdBounds(const LinearProcess& lp, int J) {
    std::vector<double> out(static_cast<std::size_t>(J));
    double acc = 0.0;
    for (int j = 1; j <= J; ++j) {
        acc += linearPerXFwdBound(lp, j);
        out[static_cast<std::size_t>(j - 1)] = acc;
    }
    return out;
}

std::vector<double> linearBwdBounds(const LinearProcess& lp, int J) {
    std::vector<double> out(static_cast<std::size_t>(J));
    double acc = 0.0;
    for (int j = 1; j <= J; ++j) {
        acc += linearPerXBwdBound(lp, j - 1);
        out[static_cast<std::size_t>(j - 1)] = acc;
    }
    return out;
}

double markovFwdBound(double stateBound, double C, double rho, double lipF, int k) {
    require(rho < 1.0, "markovFwdBound: rho must be < 1");
    require(rho > 0.0 && stateBound >= 0.0 && C > 0.0 && lipF >= 0.0 && k >= 0,
            "markovFwdBound: bad arguments");
    return 2.0 * stateBound * C * std::pow(rho, k) * lipF;
}

std::vector<double> markovFwdNorms(const StableMarkov& mk, int J) {
    std::vector<double> out(static_cast<std::size_t>(J));
    double acc = 0.0;
    for (int j = 1; j <= J; ++j) {
        acc += markovFwdBound(mk.stateBound(), mk.kernelC(), mk.rho(), mk.lipObs(), j);
        out[static_cast<std::size_t>(j - 1)] = acc;
    }
    return out;
}

// --------------------------------------------------------- certified profiles

DependenceProfile certifiedProfile(const Process& model, int J) {
    require(J >= 1, "certifiedProfile: J must be >= 1");
    DependenceProfile p;
    p.fwd.assign(static_cast<std::size_t>(J), {0.0, 0.0, EstimateMode::Exact});
    p.bwd.assign(static_cast<std::size_t>(J), {0.0, 0.0, EstimateMode::Exact});
    if (dynamic_cast<const IidProcess*>(&model)) return p;
    if (const auto* chain = dynamic_cast<const FiniteStateChain*>(&model)) {
        const auto v = chain->exactFwdNorms(J);
        for (int j = 0; j < J; ++j)
            p.fwd[static_cast<std::size_t>(j)] = {v[static_cast<std::size_t>(j)], 0.0,
                                                  EstimateMode::Exact};
        return p;
    }
    if (const auto* lp = dynamic_cast<const LinearProcess*>(&model)) {
        const auto f = linearFwdBounds(*lp, J);
        for (int j = 0; j < J; ++j)
            p.fwd[static_cast<std::size_t>(j)] = {f[static_cast<std::size_t>(j)], 0.0,
                                                  EstimateMode::AnalyticBound};
        if (!lp->adapted()) {
            const auto b = linearBwdBounds(*lp, J);
            for (int j = 0; j < J; ++j)
                p.bwd[static_cast<std::size_t>(j)] = {b[static_cast<std::size_t>(j)], 0.0,
                                                      EstimateMode::AnalyticBound};
        }
        return p;
    }
    if (const auto* mk = dynamic_cast<const StableMarkov*>(&model)) {
        const auto v = markovFwdNorms(*mk, J);
        for (int j = 0; j < J; ++j)
            p.fwd[static_cast<std::size_t>(j)] = {v[static_cast<std::size_t>(j)], 0.0,
                                                  EstimateMode::AnalyticBound};
        return p;
    }
    if (const auto* ei = dynamic_cast<const EmpiricalIndicator*>(&model)) {
        if (ei->base().kind == EmpiricalIndicator::Base::Kind::IidUniform01) return p;
        if (ei->base().kind == EmpiricalIndicator::Base::Kind::Chain) {
            const FiniteStateChain chain = ei->asChain();
            const auto v = chain.exactFwdNorms(J);
            for (int j = 0; j < J; ++j)
                p.fwd[static_cast<std::size_t>(j)] = {v[static_cast<std::size_t>(j)], 0.0,
                                                      EstimateMode::Exact};
            return p;
        }
        throw PreconditionError(
            "certifiedProfile: AR(1)-based empirical indicator has no certified profile (MC "
            "estimates only)");
    }
    throw PreconditionError("certifiedProfile: unsupported model kind " + model.kind());
}

double certifiedDelta(const Process& model, int n) {
    return deltaSum(certifiedProfile(model, n), n);
}

void addMcEstimates(DependenceProfile& profile, const Process& model, std::span<const int> js,
                    int outerM, int innerN, std::uint64_t seed, int threads) {
    require(!js.empty(), "addMcEstimates: no j values given");
    const int J = profile.J();
    int maxJ = 0;
    for (int j : js) {
        require(j >= 1 && j <= J, "addMcEstimates: j outside profile range");
        maxJ = std::max(maxJ, j);
    }
    profile.fwdMc.assign(static_cast<std::size_t>(J), {-1.0, 0.0, EstimateMode::McLower});
    profile.bwdMc.assign(static_cast<std::size_t>(J), {-1.0, 0.0, EstimateMode::McLower});
    const auto fwd = estimateFwdNorms(model, maxJ, outerM, innerN, seed, threads);
    for (int j : js) {
        const auto& est = fwd[static_cast<std::size_t>(j - 1)];
        profile.fwdMc[static_cast<std::size_t>(j - 1)] = est;
        const auto& cert = profile.fwd[static_cast<std::size_t>(j - 1)];
        if (est.value > cert.value + 3.0 * est.se + 1e-12)
            throw InvariantViolation("MC forward estimate at j=" + std::to_string(j) +
                                     " exceeds certified value beyond 3 standard errors");
        const auto best = estimateBwdNorm(model, j, outerM, innerN, deriveSeed(seed, 0x6277ULL + j),
                                          threads);
        profile.bwdMc[static_cast<std::size_t>(j - 1)] = best;
        const auto& certB = profile.bwd[static_cast<std::size_t>(j - 1)];
        if (best.value > certB.value + 3.0 * best.se + 1e-12)
            throw InvariantViolation("MC backward estimate at j=" + std::to_string(j) +
                                     " exceeds certified value beyond 3 standard errors");
    }
}

// ------------------------------------------------------------ MDP conditions

namespace {

// E(S_n S_n^T | Y_0 = s) for every state, via pairwise conditional moments.
std::vector<Eigen::MatrixXd> chainCondSecondMomentMatrices(const FiniteStateChain& chain, long n) {
    const int S = chain.numStates();
    const int d = chain.dim();
    const Eigen::MatrixXd& obs = chain.centeredObs();
    // K_d(a) = x(a) (P^d x)(a)^T
    std::vector<Eigen::MatrixXd> bracket(static_cast<std::size_t>(S),
                                         Eigen::MatrixXd::Zero(d, d));
    for (int a = 0; a < S; ++a)
        bracket[static_cast<std::size_t>(a)] = obs.row(a).transpose() * obs.row(a);
    std::vector<Eigen::MatrixXd> M(static_cast<std::size_t>(S), Eigen::MatrixXd::Zero(d, d));
    for (long j = n; j >= 1; --j) {
        const Eigen::MatrixXd& pj = chain.power(static_cast<int>(j));
        for (int s = 0; s < S; ++s)
            for (int a = 0; a < S; ++a) M[static_cast<std::size_t>(s)] += pj(s, a) * bracket[static_cast<std::size_t>(a)];
        if (j >= 2) {
            const Eigen::MatrixXd G = chain.power(static_cast<int>(n - j + 1)) * obs;
            for (int a = 0; a < S; ++a) {
                const Eigen::MatrixXd K = obs.row(a).transpose() * G.row(a);
                bracket[static_cast<std::size_t>(a)] += K + K.transpose();
            }
        }
    }
    return M;
}

}  // namespace

MdpConditionsReport checkMdpConditions(const Process& model, const TraceClassOperator& Qhat,
                                       std::span<const long> nGrid, int pairI, int pairJ,
                                       int outerM, int innerN, std::uint64_t seed, int threads) {
    require(!nGrid.empty(), "checkMdpConditions: empty n grid");
    require(pairI >= 1 && pairJ >= pairI, "checkMdpConditions: need 1 <= i <= j");
    require(Qhat.dim() == model.dim(), "checkMdpConditions: Q dimension mismatch");
    const int d = model.dim();
    const double trQ = Qhat.trace();
    MdpConditionsReport report;

    const FiniteStateChain* chain = dynamic_cast<const FiniteStateChain*>(&model);
    std::optional<FiniteStateChain> chainStorage;
    if (const auto* ei = dynamic_cast<const EmpiricalIndicator*>(&model)) {
        if (ei->base().kind == EmpiricalIndicator::Base::Kind::Chain) {
            chainStorage.emplace(ei->asChain());
            chain = &*chainStorage;
        }
    }

    for (long n : nGrid) {
        require(n >= 1, "checkMdpConditions: n must be >= 1");
        MdpConditionRow row;
        row.n = n;
        if (chain != nullptr) {
            row.exact = true;
            const auto M = chainCondSecondMomentMatrices(*chain, n);
            for (const auto& Ms : M) {
                row.condCov = std::max(
                    row.condCov,
                    (Ms / static_cast<double>(n) - Qhat.matrix()).cwiseAbs().maxCoeff());
                row.condTrace =
                    std::max(row.condTrace, std::abs(Ms.trace() / static_cast<double>(n) - trQ));
            }
            // Corollary-style conditions: condition at F_{-n} is, by
            // stationarity, conditioning X_{i+n}, X_{j+n} on Y_0.
            const Eigen::MatrixXd& obs = chain->centeredObs();
            const Eigen::MatrixXd Gd = chain->power(pairJ - pairI) * obs;
            Eigen::MatrixXd unc = Eigen::MatrixXd::Zero(d, d);
            for (int a = 0; a < chain->numStates(); ++a)
                unc += chain->stationary()(a) * (obs.row(a).transpose() * Gd.row(a));
            const Eigen::MatrixXd& pin = chain->power(static_cast<int>(pairI + n));
            for (int s = 0; s < chain->numStates(); ++s) {
                Eigen::MatrixXd cond = Eigen::MatrixXd::Zero(d, d);
                for (int a = 0; a < chain->numStates(); ++a)
                    cond += pin(s, a) * (obs.row(a).transpose() * Gd.row(a));
                row.corrCov = std::max(row.corrCov, (cond - unc).cwiseAbs().maxCoeff());
                row.corrInner = std::max(row.corrInner, std::abs(cond.trace() - unc.trace()));
            }
        } else {
            // MC mode: max over sampled time-0 states of inner conditional means
            const int pathLen = static_cast<int>(n);
            const int corrLen = static_cast<int>(n) + pairJ;
            std::vector<Eigen::MatrixXd> covDev(static_cast<std::size_t>(outerM));
            std::vector<double> traceDev(static_cast<std::size_t>(outerM));
            std::vector<Eigen::MatrixXd> corrCond(static_cast<std::size_t>(outerM));
            parallelFor(outerM, threads, [&](long o) {
                Rng rng(deriveSeed(seed, static_cast<std::uint64_t>(n)), static_cast<std::uint64_t>(o));
                const Snapshot snap = model.drawOrigin(rng);
                Eigen::MatrixXd xs;
                Eigen::MatrixXd accSS = Eigen::MatrixXd::Zero(d, d);
                double accNorm = 0.0;
                Eigen::MatrixXd accCorr = Eigen::MatrixXd::Zero(d, d);
                HVec s(d);
                for (int t = 0; t < innerN; ++t) {
                    model.pathGiven(snap, corrLen, rng, xs);
                    s.setZero();
                    for (int k = 0; k < pathLen; ++k) s += xs.col(k);
                    accSS += s * s.transpose();
                    accNorm += s.squaredNorm();
                    accCorr += xs.col(static_cast<int>(pairI + n) - 1) *
                               xs.col(static_cast<int>(pairJ + n) - 1).transpose();
                }
                const double nn = static_cast<double>(n) * static_cast<double>(innerN);
                covDev[static_cast<std::size_t>(o)] =
                    accSS / nn - Qhat.matrix();
                traceDev[static_cast<std::size_t>(o)] = accNorm / nn - trQ;
                corrCond[static_cast<std::size_t>(o)] = accCorr / static_cast<double>(innerN);
            });
            Eigen::MatrixXd uncPooled = Eigen::MatrixXd::Zero(d, d);
            for (const auto& m : corrCond) uncPooled += m;
            uncPooled /= static_cast<double>(outerM);
            for (int o = 0; o < outerM; ++o) {
                row.condCov = std::max(row.condCov,
                                       covDev[static_cast<std::size_t>(o)].cwiseAbs().maxCoeff());
                row.condTrace = std::max(row.condTrace, std::abs(traceDev[static_cast<std::size_t>(o)]));
                const Eigen::MatrixXd dev = corrCond[static_cast<std::size_t>(o)] - uncPooled;
                row.corrCov = std::max(row.corrCov, dev.cwiseAbs().maxCoeff());
                row.corrInner = std::max(row.corrInner, std::abs(dev.trace()));
            }
        }
        report.rows.push_back(row);
    }

    // Series convergence evidence from the certified profile.
    try {
        const int J = 64;
        const DependenceProfile prof = certifiedProfile(model, J);
        double fwdTotal = 0.0, bwdTotal = 0.0, fwdTail = 0.0, bwdTail = 0.0;
        for (int j = 1; j <= J; ++j) {
            const double w = std::pow(static_cast<double>(j), -1.5);
            const double fv = prof.fwd[static_cast<std::size_t>(j - 1)].value * w;
            const double bv = prof.bwd[static_cast<std::size_t>(j - 1)].value * w;
            fwdTotal += fv;
            bwdTotal += bv;
            if (j > J / 2) {
                fwdTail += fv;
                bwdTail += bv;
            }
        }
        report.fwdSeriesPartial = fwdTotal;
        report.bwdSeriesPartial = bwdTotal;
        report.fwdSeriesCauchy = fwdTail <= 0.05 * fwdTotal + 1e-12;
        report.bwdSeriesCauchy = bwdTail <= 0.05 * bwdTotal + 1e-12;
    } catch (const PreconditionError&) {
        report.fwdSeriesPartial = std::numeric_limits<double>::quiet_NaN();
        report.bwdSeriesPartial = std::numeric_limits<double>::quiet_NaN();
    }
    return report;
}

}  // namespace mdlab
