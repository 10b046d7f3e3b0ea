#include "mdlab/rate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <mutex>

#include "mdlab/parallel.hpp"

namespace mdlab {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();

Eigen::MatrixXd clampPsd(const Eigen::MatrixXd& sym, double* clampMagnitude) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym);
    if (es.info() != Eigen::Success) throw PreconditionError("eigensolver did not converge");
    Eigen::VectorXd ev = es.eigenvalues();
    double worst = 0.0;
    for (Eigen::Index i = 0; i < ev.size(); ++i) {
        if (ev(i) < 0.0) {
            worst = std::max(worst, -ev(i));
            ev(i) = 0.0;
        }
    }
    if (clampMagnitude) *clampMagnitude = worst;
    return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}
}  // namespace

int defaultLagCutoff(double decayRate, int maxLag) {
    require(decayRate > 0.0 && decayRate < 1.0, "defaultLagCutoff: decay rate must be in (0,1)");
    const int p = static_cast<int>(std::ceil(std::log(1e-6) / std::log(decayRate)));
    return std::clamp(p, 1, maxLag);
}

namespace {
double chainSecondEigenvalueModulus(const FiniteStateChain& ch) {
    Eigen::VectorXcd ev = Eigen::EigenSolver<Eigen::MatrixXd>(ch.transition()).eigenvalues();
    double second = 0.0;
    for (Eigen::Index i = 0; i < ev.size(); ++i) {
        const double m = std::abs(ev(i));
        if (m < 1.0 - 1e-9) second = std::max(second, m);
    }
    return std::clamp(second, 1e-9, 0.999);
}
}  // namespace

int defaultLagForModel(const Process& model, int maxLag) {
    if (dynamic_cast<const IidProcess*>(&model)) return 0;
    if (const auto* lp = dynamic_cast<const LinearProcess*>(&model))
        return std::min(2 * lp->lag(), maxLag);  // finite family: exactly 2L-dependent
    if (const auto* mk = dynamic_cast<const StableMarkov*>(&model))
        return defaultLagCutoff(mk->rho(), maxLag);
    if (const auto* ch = dynamic_cast<const FiniteStateChain*>(&model))
        return defaultLagCutoff(chainSecondEigenvalueModulus(*ch), maxLag);
    if (const auto* ei = dynamic_cast<const EmpiricalIndicator*>(&model)) {
        switch (ei->base().kind) {
            case EmpiricalIndicator::Base::Kind::IidUniform01: return 0;
            case EmpiricalIndicator::Base::Kind::Ar1:
                return defaultLagCutoff(ei->base().rho, maxLag);
            case EmpiricalIndicator::Base::Kind::Chain:
                return defaultLagCutoff(chainSecondEigenvalueModulus(*ei->chainBase()), maxLag);
        }
    }
    throw PreconditionError("defaultLagForModel: unsupported model kind " + model.kind());
}

QEstimate estimateQ(const Process& model, int lagCutoff, int reps, long pathLen,
                    std::uint64_t seed, int threads, double relSeCap) {
    require(lagCutoff >= 0, "estimateQ: lag cutoff must be >= 0");
    require(reps >= 2, "estimateQ: need at least 2 replicates for a standard error");
    require(pathLen > 4 * static_cast<long>(lagCutoff) + 8, "estimateQ: path too short for the lag cutoff");
    const int d = model.dim();
    std::vector<Eigen::MatrixXd> perRep(static_cast<std::size_t>(reps));
    parallelFor(reps, threads, [&](long r) {
        Rng rng(seed, static_cast<std::uint64_t>(r));
        const Snapshot origin = model.drawOrigin(rng);
        Eigen::MatrixXd xs;
        model.pathGiven(origin, static_cast<int>(pathLen), rng, xs);
        const long N = pathLen;
        Eigen::MatrixXd q = xs * xs.transpose() / static_cast<double>(N);
        for (int p = 1; p <= lagCutoff; ++p) {
            const long M = N - p;
            const Eigen::MatrixXd g =
                xs.leftCols(M) * xs.rightCols(M).transpose() / static_cast<double>(M);
            q += g + g.transpose();
        }
        perRep[static_cast<std::size_t>(r)] = q;
    });
    Eigen::MatrixXd mean = Eigen::MatrixXd::Zero(d, d);
    for (const auto& q : perRep) mean += q;
    mean /= static_cast<double>(reps);
    Eigen::MatrixXd var = Eigen::MatrixXd::Zero(d, d);
    for (const auto& q : perRep) var += (q - mean).cwiseAbs2();
    var /= static_cast<double>(reps - 1);
    const double seFrob = std::sqrt(var.sum() / static_cast<double>(reps));
    const double relSe = seFrob / std::max(mean.norm(), 1e-300);
    if (relSe > relSeCap)
        throw PreconditionError("estimateQ: relative standard error " + std::to_string(relSe) +
                                " exceeds cap " + std::to_string(relSeCap) +
                                "; increase reps or path length");
    mean = 0.5 * (mean + mean.transpose()).eval();
    QEstimate out{TraceClassOperator(Eigen::MatrixXd::Identity(d, d)), 0.0, relSe, lagCutoff,
                  reps, pathLen};
    const Eigen::MatrixXd psd = clampPsd(mean, &out.clampMagnitude);
    out.Q = TraceClassOperator(psd, 1e-9 * std::max(1.0, psd.cwiseAbs().maxCoeff()));
    return out;
}

// ---------------------------------------------------------------- SpectralRate

SpectralRate::SpectralRate(const TraceClassOperator& Q, double rangeTol) : rangeTol_(rangeTol) {
    require(rangeTol_ >= 0.0, "SpectralRate: rangeTol must be nonnegative");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Q.matrix());
    if (es.info() != Eigen::Success)
        throw PreconditionError("SpectralRate: eigensolver did not converge");
    const Eigen::Index d = Q.dim();
    eigenvalues_.resize(d);
    eigenvectors_.resize(d, d);
    for (Eigen::Index i = 0; i < d; ++i) {  // descending order
        eigenvalues_(i) = std::max(0.0, es.eigenvalues()(d - 1 - i));
        eigenvectors_.col(i) = es.eigenvectors().col(d - 1 - i);
    }
    const Eigen::MatrixXd rec =
        eigenvectors_ * eigenvalues_.asDiagonal() * eigenvectors_.transpose();
    const double err = (rec - Q.matrix()).norm();
    if (err > 1e-8 * std::max(Q.matrix().norm(), 1e-300))
        throw PreconditionError("SpectralRate: reconstruction error too large");
    zeroTol_ = 1e-12 * std::max(eigenvalues_(0), 0.0);
}

double SpectralRate::lambdaStar(const HVec& x) const {
    require(x.size() == dim(), "lambdaStar: dimension mismatch");
    const Eigen::VectorXd c = eigenvectors_.transpose() * x;
    const double xsq = x.squaredNorm();
    double nullEnergy = 0.0;
    double value = 0.0;
    for (Eigen::Index i = 0; i < dim(); ++i) {
        if (eigenvalues_(i) > zeroTol_) {
            value += c(i) * c(i) / eigenvalues_(i);
        } else {
            nullEnergy += c(i) * c(i);
        }
    }
    if (nullEnergy > rangeTol_ * xsq) return kInf;
    return 0.5 * value;
}

double SpectralRate::functionalRate(const PathCH& phi) const {
    require(phi.dim() == dim(), "functionalRate: dimension mismatch");
    if (phi.values().front().norm() > 0.0) return kInf;  // AC_0 requires phi(0) = 0
    double acc = 0.0;
    const auto& knots = phi.knots();
    const auto& vals = phi.values();
    for (std::size_t k = 0; k + 1 < knots.size(); ++k) {
        const double dt = knots[k + 1] - knots[k];
        const HVec slope = (vals[k + 1] - vals[k]) / dt;
        const double l = lambdaStar(slope);
        if (l == kInf) return kInf;
        acc += dt * l;
    }
    return acc;
}

bool SpectralRate::clusterSetContains(const PathCH& phi) const {
    return 2.0 * functionalRate(phi) <= 1.0;
}

double SpectralRate::quadForm(const HVec& y) const {
    require(y.size() == dim(), "quadForm: dimension mismatch");
    const Eigen::VectorXd c = eigenvectors_.transpose() * y;
    return c.cwiseAbs2().dot(eigenvalues_);
}

double halfspaceInfRate(const TraceClassOperator& Q, const HVec& u, double r) {
    require(u.size() == Q.dim(), "halfspaceInfRate: dimension mismatch");
    require(u.norm() > 0.0, "halfspaceInfRate: direction must be nonzero");
    if (r <= 0.0) return 0.0;  // 0 lies in the half-space
    const double uqu = Q.quadForm(u);
    if (uqu <= 0.0) return kInf;
    return r * r / (2.0 * uqu);
}

double ballComplementInfRate(const SpectralRate& rate, double r) {
    if (r <= 0.0) return 0.0;
    const double top = rate.eigenvalues()(0);
    if (top <= 0.0) return kInf;
    return r * r / (2.0 * top);
}

// ------------------------------------------------------------------ CvM kernel

double CvmKernel::topEigenvalue() const {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(kernel, Eigen::EigenvaluesOnly);
    return std::max(0.0, es.eigenvalues().maxCoeff());
}

TraceClassOperator CvmKernel::toOperator() const {
    return TraceClassOperator(kernel, 1e-9 * std::max(1.0, kernel.cwiseAbs().maxCoeff()));
}

namespace {

CvmKernel finishKernel(Eigen::VectorXd grid, Eigen::VectorXd weights, Eigen::MatrixXd rawC,
                       int lagCutoff, double truncationTail) {
    const Eigen::Index G = grid.size();
    rawC = (0.5 * (rawC + rawC.transpose())).eval();
    Eigen::MatrixXd scaled(G, G);
    for (Eigen::Index i = 0; i < G; ++i)
        for (Eigen::Index j = 0; j < G; ++j)
            scaled(i, j) = rawC(i, j) * std::sqrt(weights(i) * weights(j));
    CvmKernel k;
    k.grid = std::move(grid);
    k.weights = std::move(weights);
    k.rawC = std::move(rawC);
    k.lagCutoff = lagCutoff;
    k.truncationTail = truncationTail;
    k.kernel = clampPsd(scaled, &k.clampMagnitude);
    return k;
}

void checkGridWeights(const Eigen::VectorXd& grid, const Eigen::VectorXd& weights) {
    require(grid.size() >= 1 && grid.size() == weights.size(), "cvmKernel: grid/weights mismatch");
    for (Eigen::Index i = 0; i < grid.size(); ++i) {
        require(weights(i) > 0.0, "cvmKernel: weights must be positive");
        if (i > 0) require(grid(i) > grid(i - 1), "cvmKernel: grid must be increasing");
    }
}

}  // namespace

CvmKernel cvmKernelExactIidUniform(const Eigen::VectorXd& grid, const Eigen::VectorXd& weights) {
    checkGridWeights(grid, weights);
    const Eigen::Index G = grid.size();
    Eigen::MatrixXd C(G, G);
    auto F = [](double t) { return std::clamp(t, 0.0, 1.0); };
    for (Eigen::Index i = 0; i < G; ++i)
        for (Eigen::Index j = 0; j < G; ++j)
            C(i, j) = F(std::min(grid(i), grid(j))) - F(grid(i)) * F(grid(j));
    return finishKernel(grid, weights, std::move(C), 0, 0.0);
}

CvmKernel cvmKernelExactChain(const FiniteStateChain& chain, const Eigen::VectorXd& grid,
                              const Eigen::VectorXd& weights, int lagCutoff) {
    checkGridWeights(grid, weights);
    require(lagCutoff >= 1, "cvmKernelExactChain: lag cutoff must be >= 1");
    const Eigen::Index G = grid.size();
    Eigen::MatrixXd C(G, G);
    Eigen::VectorXd F(G);
    for (Eigen::Index i = 0; i < G; ++i) F(i) = chain.marginalCdf(grid(i));
    for (Eigen::Index i = 0; i < G; ++i)
        for (Eigen::Index j = 0; j < G; ++j)
            C(i, j) = chain.marginalCdf(std::min(grid(i), grid(j))) - F(i) * F(j);
    double lastTermMax = 0.0, prevTermMax = 0.0;
    for (int k = 1; k <= lagCutoff; ++k) {
        double termMax = 0.0;
        for (Eigen::Index i = 0; i < G; ++i)
            for (Eigen::Index j = 0; j < G; ++j) {
                const double t1 = chain.jointCdfLagK(grid(i), grid(j), k) - F(i) * F(j);
                const double t2 = chain.jointCdfLagK(grid(j), grid(i), k) - F(j) * F(i);
                C(i, j) += t1 + t2;
                termMax = std::max(termMax, std::abs(t1) + std::abs(t2));
            }
        prevTermMax = lastTermMax;
        lastTermMax = termMax;
    }
    // geometric extrapolation of the neglected tail
    double tail = 0.0;
    if (lastTermMax > 1e-300 && prevTermMax > lastTermMax) {
        const double r = lastTermMax / prevTermMax;
        tail = lastTermMax * r / (1.0 - r);
    }
    return finishKernel(grid, weights, std::move(C), lagCutoff, tail);
}

CvmKernel cvmKernelMc(const EmpiricalIndicator& model, int lagCutoff, int reps, long pathLen,
                      std::uint64_t seed, int threads) {
    require(lagCutoff >= 0, "cvmKernelMc: lag cutoff must be >= 0");
    require(reps >= 1 && pathLen > 4 * static_cast<long>(lagCutoff) + 8, "cvmKernelMc: bad budget");
    const Eigen::Index G = model.grid().size();
    const Eigen::VectorXd& grid = model.grid();
    const Eigen::VectorXd& F = model.cdfAtGrid();
    // 2D histograms of (cell(y_t), cell(y_{t+k})) per lag; cell(y) = first
    // grid index >= y (G when beyond the grid).
    const Eigen::Index cells = G + 1;
    const std::size_t histSize = static_cast<std::size_t>((lagCutoff + 1) * cells * cells);
    // integer-valued counts: float addition is exact, so the pooled sums are
    // independent of accumulation order (and hence of the thread count)
    std::vector<double> pooledHist(histSize, 0.0);
    std::mutex poolMutex;
    std::vector<long> counts(static_cast<std::size_t>(reps), 0);
    parallelFor(reps, threads, [&](long r) {
        Rng rng(seed, static_cast<std::uint64_t>(r));
        const Snapshot origin = model.drawOrigin(rng);
        std::vector<double> ys;
        model.basePathGiven(origin, static_cast<int>(pathLen), rng, ys);
        std::vector<int> cell(ys.size());
        for (std::size_t t = 0; t < ys.size(); ++t) {
            const double* lo = std::lower_bound(grid.data(), grid.data() + G, ys[t]);
            cell[t] = static_cast<int>(lo - grid.data());
        }
        std::vector<double> h(histSize, 0.0);
        for (long t = 0; t + lagCutoff < static_cast<long>(ys.size()); ++t) {
            for (int k = 0; k <= lagCutoff; ++k) {
                const std::size_t idx =
                    (static_cast<std::size_t>(k) * cells + static_cast<std::size_t>(cell[static_cast<std::size_t>(t)])) * cells +
                    static_cast<std::size_t>(cell[static_cast<std::size_t>(t + k)]);
                h[idx] += 1.0;
            }
        }
        counts[static_cast<std::size_t>(r)] = static_cast<long>(ys.size()) - lagCutoff;
        std::lock_guard<std::mutex> lock(poolMutex);
        for (std::size_t i = 0; i < histSize; ++i) pooledHist[i] += h[i];
    });
    // pooled joint CDFs via 2D cumulative sums
    Eigen::MatrixXd C = Eigen::MatrixXd::Zero(G, G);
    double total = 0.0;
    for (long c : counts) total += static_cast<double>(c);
    std::vector<double> pooled(static_cast<std::size_t>(cells * cells));
    for (int k = 0; k <= lagCutoff; ++k) {
        for (Eigen::Index a = 0; a < cells; ++a)
            for (Eigen::Index b = 0; b < cells; ++b)
                pooled[static_cast<std::size_t>(a * cells + b)] =
                    pooledHist[(static_cast<std::size_t>(k) * cells + static_cast<std::size_t>(a)) * cells +
                               static_cast<std::size_t>(b)];
        // cumulative over both indices
        for (Eigen::Index a = 0; a < cells; ++a)
            for (Eigen::Index b = 1; b < cells; ++b)
                pooled[static_cast<std::size_t>(a * cells + b)] +=
                    pooled[static_cast<std::size_t>(a * cells + b - 1)];
        for (Eigen::Index a = 1; a < cells; ++a)
            for (Eigen::Index b = 0; b < cells; ++b)
                pooled[static_cast<std::size_t>(a * cells + b)] +=
                    pooled[static_cast<std::size_t>((a - 1) * cells + b)];
        for (Eigen::Index i = 0; i < G; ++i)
            for (Eigen::Index j = 0; j < G; ++j) {
                const double joint = pooled[static_cast<std::size_t>(i * cells + j)] / total;
                const double dev = joint - F(i) * F(j);
                if (k == 0) {
                    C(i, j) += joint - F(i) * F(j);  // F(min) - F F on the grid
                } else {
                    C(i, j) += dev;
                    C(j, i) += dev;
                }
            }
    }
    return finishKernel(grid, model.weights(), std::move(C), lagCutoff, 0.0);
}

double cvmRate(const CvmKernel& kernel, double y) {
    require(y >= 0.0, "cvmRate: y must be nonnegative");
    if (y == 0.0) return 0.0;
    const double nu = kernel.topEigenvalue();
    if (nu <= 0.0) return kInf;
    return y * y / (2.0 * nu);
}

// ------------------------------------------------------- Kantorovich sigma^2

namespace {

double steepestAscent(const Eigen::MatrixXd& B, std::vector<int>& g) {
    const Eigen::Index G = B.rows();
    Eigen::VectorXd gv(G);
    for (Eigen::Index i = 0; i < G; ++i) gv(i) = g[static_cast<std::size_t>(i)];
    Eigen::VectorXd h = B * gv;
    double v = gv.dot(h);
    for (;;) {
        double bestGain = 0.0;
        Eigen::Index bestI = -1;
        for (Eigen::Index i = 0; i < G; ++i) {
            const double gain = -4.0 * gv(i) * h(i) + 4.0 * B(i, i);
            if (gain > bestGain + 1e-15) {
                bestGain = gain;
                bestI = i;
            }
        }
        if (bestI < 0) break;
        h -= 2.0 * gv(bestI) * B.col(bestI);
        gv(bestI) = -gv(bestI);
        v += bestGain;
    }
    for (Eigen::Index i = 0; i < G; ++i) g[static_cast<std::size_t>(i)] = gv(i) > 0 ? 1 : -1;
    return gv.dot(B * gv);  // recomputed to drop incremental rounding drift
}

}  // namespace

SigmaSqResult kantorovichSigmaSq(const CvmKernel& kernel, int exhaustiveMaxG, int multistarts,
                                 std::uint64_t seed) {
    const Eigen::Index G = kernel.grid.size();
    Eigen::MatrixXd B(G, G);
    for (Eigen::Index i = 0; i < G; ++i)
        for (Eigen::Index j = 0; j < G; ++j)
            B(i, j) = kernel.rawC(i, j) * kernel.weights(i) * kernel.weights(j);
    SigmaSqResult out;
    out.signs.assign(static_cast<std::size_t>(G), 1);
    if (G <= exhaustiveMaxG) {
        // Gray-code walk over all sign vectors with g_0 = +1 (global sign symmetry)
        out.exhaustive = true;
        Eigen::VectorXd g = Eigen::VectorXd::Ones(G);
        Eigen::VectorXd h = B * g;
        double v = g.dot(h);
        double best = v;
        Eigen::VectorXd bestG = g;
        const std::uint64_t steps = G > 1 ? (1ULL << (G - 1)) : 1ULL;
        for (std::uint64_t c = 1; c < steps; ++c) {
            const int flip = __builtin_ctzll(c) + 1;  // flip indices 1..G-1
            v += -4.0 * g(flip) * h(flip) + 4.0 * B(flip, flip);
            h -= 2.0 * g(flip) * B.col(flip);
            g(flip) = -g(flip);
            if (v > best) {
                best = v;
                bestG = g;
            }
        }
        out.sigmaSq = bestG.dot(B * bestG);  // exact value at the winning vertex
        for (Eigen::Index i = 0; i < G; ++i) out.signs[static_cast<std::size_t>(i)] = bestG(i) > 0 ? 1 : -1;
        return out;
    }
    // multi-start steepest ascent: all-ones, top eigenvector sign patterns,
    // then seeded random starts
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(B);
    double best = -kInf;
    std::vector<int> bestSigns;
    std::vector<int> g(static_cast<std::size_t>(G), 1);
    auto tryStart = [&](std::vector<int> start) {
        const double v = steepestAscent(B, start);
        if (v > best) {
            best = v;
            bestSigns = start;
        }
    };
    tryStart(g);
    for (int e = 0; e < std::min<Eigen::Index>(4, G); ++e) {
        std::vector<int> s(static_cast<std::size_t>(G));
        for (Eigen::Index i = 0; i < G; ++i)
            s[static_cast<std::size_t>(i)] = es.eigenvectors()(i, G - 1 - e) >= 0 ? 1 : -1;
        tryStart(std::move(s));
    }
    Rng rng(seed, 0);
    for (int r = 0; r < multistarts; ++r) {
        std::vector<int> s(static_cast<std::size_t>(G));
        for (Eigen::Index i = 0; i < G; ++i)
            s[static_cast<std::size_t>(i)] = rng.rademacher() > 0 ? 1 : -1;
        tryStart(std::move(s));
    }
    out.sigmaSq = best;
    out.signs = bestSigns;
    return out;
}

double kantorovichRate(double sigmaSq, double y) {
    require(y >= 0.0, "kantorovichRate: y must be nonnegative");
    if (y == 0.0) return 0.0;
    if (sigmaSq <= 0.0) return kInf;
    return y * y / (2.0 * sigmaSq);
}

}  // namespace mdlab
