#include "mdlab/montecarlo.hpp"

#include <algorithm>
#include <boost/math/distributions/beta.hpp>
#include <cmath>
#include <limits>

#include "mdlab/inequalities.hpp"
#include "mdlab/parallel.hpp"

namespace mdlab {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();

double sortedQuantile(std::vector<double> v, double q) {
    std::sort(v.begin(), v.end());
    const std::size_t idx = static_cast<std::size_t>(
        std::floor(q * static_cast<double>(v.size() - 1)));
    return v[idx];
}
}  // namespace

BinomCi binomialCi(long k, long n, CiKind kind, double param) {
    require(n >= 1 && k >= 0 && k <= n, "binomialCi: bad counts");
    BinomCi ci;
    const double p = static_cast<double>(k) / static_cast<double>(n);
    if (kind == CiKind::NormalApprox) {
        require(param > 0.0, "binomialCi: z must be positive");
        const double se = std::sqrt(std::max(p * (1.0 - p), 0.0) / static_cast<double>(n));
        ci.lo = std::max(0.0, p - param * se);
        ci.hi = std::min(1.0, p + param * se);
        return ci;
    }
    require(param > 0.0 && param < 1.0, "binomialCi: alpha must be in (0,1)");
    const double a = param;
    if (k == 0) {
        ci.lo = 0.0;
    } else {
        boost::math::beta_distribution<double> lo(static_cast<double>(k),
                                                  static_cast<double>(n - k + 1));
        ci.lo = boost::math::quantile(lo, a / 2.0);
    }
    if (k == n) {
        ci.hi = 1.0;
    } else {
        boost::math::beta_distribution<double> hi(static_cast<double>(k + 1),
                                                  static_cast<double>(n - k));
        ci.hi = boost::math::quantile(hi, 1.0 - a / 2.0);
    }
    return ci;
}

SpeedRule::SpeedRule(double beta) : beta_(beta) {
    requireConfig(beta > 0.0 && beta < 1.0,
                  "speed rule a_n = n^-beta needs 0 < beta < 1 (a_n -> 0 and n a_n -> infinity)");
}

double SpeedRule::eval(long n) const {
    require(n >= 1, "SpeedRule: n must be >= 1");
    return std::pow(static_cast<double>(n), -beta_);
}

Region Region::halfSpace(HVec u, double r) {
    require(u.norm() > 0.0, "Region: half-space direction must be nonzero");
    Region reg;
    reg.kind = Kind::HalfSpace;
    reg.u = std::move(u);
    reg.r = r;
    return reg;
}

Region Region::ballComplement(double r) {
    Region reg;
    reg.kind = Kind::BallComplement;
    reg.r = r;
    return reg;
}

// --------------------------------------------------------- tail verification

bool TailEstimate::anyViolation() const {
    return std::any_of(violated.begin(), violated.end(), [](char v) { return v != 0; });
}

RademacherEnum enumerateRademacher(int n) {
    require(n >= 1 && n <= 24, "enumerateRademacher: n out of range");
    RademacherEnum out;
    out.n = n;
    std::vector<std::uint64_t> histMaxAbs(static_cast<std::size_t>(n + 1), 0);
    const std::uint64_t total = 1ULL << n;
    for (std::uint64_t mask = 0; mask < total; ++mask) {
        int s = 0, best = 0;
        for (int b = 0; b < n; ++b) {
            s += (mask >> b) & 1ULL ? 1 : -1;
            best = std::max(best, std::abs(s));
        }
        ++histMaxAbs[static_cast<std::size_t>(best)];
    }
    out.pMaxGe.assign(static_cast<std::size_t>(n), 0.0);
    double cum = 0.0;
    for (int x = n; x >= 1; --x) {
        cum += static_cast<double>(histMaxAbs[static_cast<std::size_t>(x)]);
        out.pMaxGe[static_cast<std::size_t>(x - 1)] = cum / static_cast<double>(total);
    }
    for (int v = 0; v <= n; ++v)
        out.eMaxSq += static_cast<double>(histMaxAbs[static_cast<std::size_t>(v)]) *
                      static_cast<double>(v) * static_cast<double>(v);
    out.eMaxSq /= static_cast<double>(total);
    return out;
}

namespace {
bool isScalarRademacherIid(const Process& model) {
    const auto* iid = dynamic_cast<const IidProcess*>(&model);
    return iid != nullptr && iid->innovation().kind() == Innovation::Kind::RademacherScalar;
}
}  // namespace

TailEstimate verifyHoeffding(const Process& model, int n, std::span<const double> xGrid,
                             long reps, std::uint64_t seed, int threads, CiKind ci,
                             double ciParam) {
    require(n >= 1, "verifyHoeffding: n must be >= 1");
    require(!xGrid.empty(), "verifyHoeffding: empty x grid");
    TailEstimate est;
    est.xGrid.assign(xGrid.begin(), xGrid.end());
    est.delta = certifiedDelta(model, n);  // throws when no certified Delta exists
    est.boundB = model.boundB();

    if (isScalarRademacherIid(model) && n <= 20) {
        const RademacherEnum en = enumerateRademacher(n);
        est.exact = true;
        est.reps = 1L << n;
        for (double x : est.xGrid) {
            require(x > 0.0, "verifyHoeffding: grid must be positive");
            // P(max |S_i| >= x) = P(max >= ceil(x)) for the integer walk
            const int xi = static_cast<int>(std::ceil(x - 1e-12));
            const double p = xi > n ? 0.0 : en.pMaxGe[static_cast<std::size_t>(std::max(xi, 1) - 1)];
            est.pHat.push_back(p);
            est.counts.push_back(static_cast<long>(std::llround(p * static_cast<double>(est.reps))));
            est.ciLow.push_back(p);
            est.ciHigh.push_back(p);
        }
    } else {
        require(reps >= 1, "verifyHoeffding: reps must be >= 1");
        est.reps = reps;
        std::vector<double> maxNorm(static_cast<std::size_t>(reps));
        parallelFor(reps, threads, [&](long r) {
            Rng rng(seed, static_cast<std::uint64_t>(r));
            const Snapshot origin = model.drawOrigin(rng);
            Eigen::MatrixXd xs;
            model.pathGiven(origin, n, rng, xs);
            HVec s = HVec::Zero(model.dim());
            double best = 0.0;
            for (int k = 0; k < n; ++k) {
                s += xs.col(k);
                best = std::max(best, s.squaredNorm());
            }
            maxNorm[static_cast<std::size_t>(r)] = std::sqrt(best);
        });
        std::sort(maxNorm.begin(), maxNorm.end());
        for (double x : est.xGrid) {
            require(x > 0.0, "verifyHoeffding: grid must be positive");
            const auto it = std::lower_bound(maxNorm.begin(), maxNorm.end(), x);
            const long k = static_cast<long>(maxNorm.end() - it);
            est.counts.push_back(k);
            est.pHat.push_back(static_cast<double>(k) / static_cast<double>(reps));
            const BinomCi bci = binomialCi(k, reps, ci, ciParam);
            est.ciLow.push_back(bci.lo);
            est.ciHigh.push_back(bci.hi);
        }
    }
    for (std::size_t i = 0; i < est.xGrid.size(); ++i) {
        est.boundValues.push_back(hoeffdingTailBound(n, est.xGrid[i], est.boundB, est.delta));
        est.violated.push_back(est.ciLow[i] > est.boundValues[i] ? 1 : 0);
    }
    return est;
}

// ------------------------------------------------------------ MDP log tails

std::vector<MdpRow> mdpLogTail(const Process& model, const TraceClassOperator& Q,
                               std::span<const long> nGrid, const SpeedRule& speed,
                               const Region& region, long reps, std::uint64_t seed, int threads,
                               CiKind ci, double ciParam) {
    require(!nGrid.empty() && reps >= 1, "mdpLogTail: bad arguments");
    require(Q.dim() == model.dim(), "mdpLogTail: Q dimension mismatch");
    double negInf;
    if (region.kind == Region::Kind::HalfSpace) {
        require(region.u.size() == model.dim(), "mdpLogTail: direction dimension mismatch");
        negInf = -halfspaceInfRate(Q, region.u, region.r);
    } else {
        negInf = -ballComplementInfRate(SpectralRate(Q), region.r);
    }
    std::vector<MdpRow> rows;
    for (long n : nGrid) {
        const double an = speed.eval(n);
        const double scale = std::sqrt(an / static_cast<double>(n));
        std::vector<char> hit(static_cast<std::size_t>(reps));
        parallelFor(reps, threads, [&](long r) {
            Rng rng(deriveSeed(seed, static_cast<std::uint64_t>(n)), static_cast<std::uint64_t>(r));
            const Snapshot origin = model.drawOrigin(rng);
            Eigen::MatrixXd xs;
            model.pathGiven(origin, static_cast<int>(n), rng, xs);
            const HVec s = xs.rowwise().sum();
            bool inRegion;
            if (region.kind == Region::Kind::HalfSpace) {
                inRegion = scale * region.u.dot(s) >= region.r;
            } else {
                inRegion = scale * s.norm() >= region.r;
            }
            hit[static_cast<std::size_t>(r)] = inRegion ? 1 : 0;
        });
        MdpRow row;
        row.n = n;
        row.an = an;
        row.reps = reps;
        row.count = std::count(hit.begin(), hit.end(), 1);
        row.pHat = static_cast<double>(row.count) / static_cast<double>(reps);
        row.negInfRate = negInf;
        if (row.count == 0) {
            row.zeroCount = true;
            // rule of three keeps the table finite: an upper bound, not a point estimate
            row.anLogP = an * std::log(3.0 / static_cast<double>(reps));
            row.anLogCiLo = std::numeric_limits<double>::quiet_NaN();
            row.anLogCiHi = row.anLogP;
        } else {
            const BinomCi bci = binomialCi(row.count, reps, ci, ciParam);
            row.anLogP = an * std::log(row.pHat);
            row.anLogCiLo = an * std::log(std::max(bci.lo, 1e-300));
            row.anLogCiHi = an * std::log(std::min(bci.hi, 1.0));
        }
        rows.push_back(row);
    }
    return rows;
}

// --------------------------------------------------- block martingale approx

namespace {

// Exact conditional block means are available for finite chains (matrix
// powers) and i.i.d. models (zero). Both are adapted, so
// D_i = B_i - E(B_i | state at block start).
struct BlockOracle {
    const FiniteStateChain* chain = nullptr;  // null for i.i.d.
    Eigen::MatrixXd condMeans;                // numStates x dim, E(S_m | Y_0 = s)
    int m = 1;

    HVec condMean(int state) const {
        if (chain == nullptr) return HVec::Zero(condMeans.cols());
        return condMeans.row(state);
    }
};

}  // namespace

BlockReport blockResidual(const Process& model, std::span<const long> nList, double alpha,
                          const SpeedRule& speed, long reps, std::uint64_t seed, int threads) {
    require(!nList.empty() && reps >= 1, "blockResidual: bad arguments");
    require(alpha > 0.0 && alpha < 0.5, "blockResidual: need 0 < alpha < 1/2");
    requireConfig(alpha < (1.0 - speed.beta()) / 2.0,
                  "blockResidual: m_n = n^alpha must be o(sqrt(n a_n)); need alpha < (1-beta)/2");
    const auto* chain = dynamic_cast<const FiniteStateChain*>(&model);
    const auto* iid = dynamic_cast<const IidProcess*>(&model);
    require(chain != nullptr || iid != nullptr,
            "blockResidual: exact conditional block means need a finite chain or an i.i.d. model");

    BlockReport report;
    report.alpha = alpha;
    if (chain != nullptr) {
        report.trQ = chain->exactQ().trace();
    } else {
        // i.i.d.: Q is the coordinate covariance; Tr(Q) = E ||X_0||^2
        const auto& innov = iid->innovation();
        report.trQ = innov.coordVariance() * static_cast<double>(innov.dim());
    }

    const int d = model.dim();
    for (long n : nList) {
        const int m = std::max(1, static_cast<int>(std::floor(std::pow(static_cast<double>(n), alpha))));
        const long kn = n / m;
        require(kn >= 1, "blockResidual: n too small for the block rule");
        const double an = speed.eval(n);
        const double scale = std::sqrt(an / static_cast<double>(n));

        BlockOracle oracle;
        oracle.m = m;
        oracle.chain = chain;
        if (chain != nullptr) {
            oracle.condMeans.resize(chain->numStates(), d);
            for (int s = 0; s < chain->numStates(); ++s)
                oracle.condMeans.row(s) = chain->blockCondMean(s, m);
        } else {
            oracle.condMeans = Eigen::MatrixXd::Zero(1, d);
        }

        std::vector<double> residuals(static_cast<std::size_t>(reps));
        parallelFor(reps, threads, [&](long r) {
            Rng rng(deriveSeed(seed, static_cast<std::uint64_t>(n)), static_cast<std::uint64_t>(r));
            // simulate states explicitly so block-start states are visible
            Eigen::MatrixXd prefix(d, n + 1);  // S_0..S_n
            prefix.col(0).setZero();
            std::vector<int> blockStartState(static_cast<std::size_t>(kn));
            if (chain != nullptr) {
                Snapshot snap = chain->drawOrigin(rng);
                int s = chain->stateFromSnapshot(snap);
                for (long k = 0; k < n; ++k) {
                    if (k % m == 0 && k / m < kn) blockStartState[static_cast<std::size_t>(k / m)] = s;
                    s = static_cast<int>(rng.categorical(chain->transitionRow(s)));
                    prefix.col(k + 1) = prefix.col(k) + chain->centeredObs().row(s).transpose();
                }
            } else {
                const Snapshot snap = model.drawOrigin(rng);
                Eigen::MatrixXd xs;
                model.pathGiven(snap, static_cast<int>(n), rng, xs);
                for (long k = 0; k < n; ++k) prefix.col(k + 1) = prefix.col(k) + xs.col(k);
            }
            // martingale partial sums M_0..M_kn
            Eigen::MatrixXd mart(d, kn + 1);
            mart.col(0).setZero();
            for (long i = 1; i <= kn; ++i) {
                const HVec blockSum = prefix.col(i * m) - prefix.col((i - 1) * m);
                const HVec dMean =
                    chain != nullptr ? oracle.condMean(blockStartState[static_cast<std::size_t>(i - 1)])
                                     : HVec::Zero(d);
                mart.col(i) = mart.col(i - 1) + blockSum - dMean;
            }
            // sup over t of ||S_[nt] - M_[kn t]||: both index processes are
            // step functions, so walk the merged jump sequence (jumps of
            // [nt] at k/n, of [kn t] at i/kn; compare k*kn vs i*n exactly)
            double sup = 0.0;
            long k = 0, i = 0;
            while (k < n || i < kn) {
                if (k == n) {
                    ++i;
                } else if (i == kn) {
                    ++k;
                } else {
                    const long tK = (k + 1) * kn, tI = (i + 1) * n;
                    if (tK <= tI) ++k;
                    if (tK >= tI) ++i;
                }
                sup = std::max(sup, (prefix.col(k) - mart.col(i)).norm());
            }
            residuals[static_cast<std::size_t>(r)] = scale * sup;
        });

        BlockRow row;
        row.n = n;
        row.m = m;
        row.kn = kn;
        row.residualMedian = sortedQuantile(residuals, 0.5);
        row.residualQ90 = sortedQuantile(residuals, 0.9);
        if (chain != nullptr) {
            double worstDev = 0.0, worstVal = 0.0;
            for (int s = 0; s < chain->numStates(); ++s) {
                const double second = chain->blockCondSecondMoment(s, m);
                const double meanSq = oracle.condMean(s).squaredNorm();
                const double bracket = (second - meanSq) / static_cast<double>(m);
                worstVal = std::max(worstVal, bracket);
                worstDev = std::max(worstDev, std::abs(bracket - report.trQ));
            }
            row.bracketValue = worstVal;
            row.bracketDev = worstDev;
        } else {
            row.bracketValue = report.trQ;  // D_i = B_i, E||B||^2 = m Tr Q exactly
            row.bracketDev = 0.0;
        }
        report.rows.push_back(row);
    }
    return report;
}

// ------------------------------------------------------------- LIL statistic

double lilNormalizer(long n) {
    require(n >= 3, "lilNormalizer: n must be >= 3 (log log n)");
    return std::sqrt(2.0 * static_cast<double>(n) * std::log(std::log(static_cast<double>(n))));
}

std::vector<LilRow> lilStatistic(const Process& model, std::span<const long> nList, long reps,
                                 std::uint64_t seed, int threads) {
    require(!nList.empty() && reps >= 1, "lilStatistic: bad arguments");
    std::vector<long> ns(nList.begin(), nList.end());
    std::sort(ns.begin(), ns.end());
    require(ns.front() >= 3, "lilStatistic: n must be >= 3");
    const long maxN = ns.back();
    const int d = model.dim();
    std::vector<std::vector<double>> stats(ns.size(),
                                           std::vector<double>(static_cast<std::size_t>(reps)));
    parallelFor(reps, threads, [&](long r) {
        Rng rng(seed, static_cast<std::uint64_t>(r));
        const Snapshot origin = model.drawOrigin(rng);
        Eigen::MatrixXd xs;
        model.pathGiven(origin, static_cast<int>(maxN), rng, xs);
        HVec s = HVec::Zero(d);
        double runningMax = 0.0;
        std::size_t which = 0;
        for (long k = 1; k <= maxN && which < ns.size(); ++k) {
            s += xs.col(static_cast<int>(k - 1));
            runningMax = std::max(runningMax, s.norm());
            if (k == ns[which]) {
                stats[which][static_cast<std::size_t>(r)] = runningMax / lilNormalizer(k);
                ++which;
            }
        }
    });
    std::vector<LilRow> rows;
    for (std::size_t i = 0; i < ns.size(); ++i) {
        LilRow row;
        row.n = ns[i];
        row.betaN = lilNormalizer(ns[i]);
        row.q50 = sortedQuantile(stats[i], 0.5);
        row.q90 = sortedQuantile(stats[i], 0.9);
        row.maxStat = *std::max_element(stats[i].begin(), stats[i].end());
        rows.push_back(row);
    }
    return rows;
}

std::vector<LilL1Row> lilL1Statistic(const EmpiricalIndicator& model, std::span<const long> nList,
                                     long reps, std::uint64_t seed, int threads) {
    require(!nList.empty() && reps >= 1, "lilL1Statistic: bad arguments");
    std::vector<long> ns(nList.begin(), nList.end());
    std::sort(ns.begin(), ns.end());
    require(ns.front() >= 3, "lilL1Statistic: n must be >= 3");
    const long maxN = ns.back();
    std::vector<std::vector<double>> stats(ns.size(),
                                           std::vector<double>(static_cast<std::size_t>(reps)));
    parallelFor(reps, threads, [&](long r) {
        Rng rng(seed, static_cast<std::uint64_t>(r));
        const Snapshot origin = model.drawOrigin(rng);
        std::vector<double> ys;
        model.basePathGiven(origin, static_cast<int>(maxN), rng, ys);
        for (std::size_t i = 0; i < ns.size(); ++i) {
            const std::span<const double> prefix(ys.data(), static_cast<std::size_t>(ns[i]));
            stats[i][static_cast<std::size_t>(r)] = model.l1Stat(prefix) / lilNormalizer(ns[i]);
        }
    });
    std::vector<LilL1Row> rows;
    for (std::size_t i = 0; i < ns.size(); ++i) {
        LilL1Row row;
        row.n = ns[i];
        row.betaN = lilNormalizer(ns[i]);
        row.q50 = sortedQuantile(stats[i], 0.5);
        row.maxStat = *std::max_element(stats[i].begin(), stats[i].end());
        rows.push_back(row);
    }
    return rows;
}

}  // namespace mdlab
