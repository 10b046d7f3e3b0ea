#include <doctest.h>

#include <cmath>
#include <vector>

#include "mdlab/dependence.hpp"

using namespace mdlab;

namespace {

FiniteStateChain symmetricTwoState(double a) {
    return FiniteStateChain((Eigen::MatrixXd(2, 2) << 1 - a, a, a, 1 - a).finished(),
                            {-1.0, 1.0});
}

// oracle: E(S_j | Y_0 = s) by exhaustive path enumeration
HVec enumCondMean(const FiniteStateChain& chain, int s0, int j) {
    const int S = chain.numStates();
    HVec acc = HVec::Zero(chain.dim());
    std::vector<int> path(static_cast<std::size_t>(j), 0);
    for (;;) {
        double prob = 1.0;
        HVec sum = HVec::Zero(chain.dim());
        int prev = s0;
        for (int t = 0; t < j; ++t) {
            const int st = path[static_cast<std::size_t>(t)];
            prob *= chain.transition()(prev, st);
            sum += chain.centeredObs().row(st);
            prev = st;
        }
        acc += prob * sum;
        int pos = j - 1;
        while (pos >= 0 && path[static_cast<std::size_t>(pos)] == S - 1) {
            path[static_cast<std::size_t>(pos)] = 0;
            --pos;
        }
        if (pos < 0) break;
        ++path[static_cast<std::size_t>(pos)];
    }
    return acc;
}

}  // namespace

TEST_CASE("iid forward norms vanish within Monte-Carlo error") {
    const IidProcess model(Innovation::uniformBox(2, 1.0));
    const NormEstimate est = estimateFwdNorm(model, 4, 16, 4000, 19);
    CHECK(est.mode == EstimateMode::McLower);
    CHECK(est.value <= 2.0 * est.se + 0.05);
}

TEST_CASE("chain forward norms match the enumeration oracle") {
    const FiniteStateChain chain = symmetricTwoState(0.3);
    const auto v = chain.exactFwdNorms(8);
    for (int j = 1; j <= 8; ++j) {
        double worst = 0.0;
        for (int s = 0; s < 2; ++s) worst = std::max(worst, enumCondMean(chain, s, j).norm());
        CHECK(v[static_cast<std::size_t>(j - 1)] == doctest::Approx(worst).epsilon(1e-12));
    }
}

TEST_CASE("AR(1) Monte-Carlo forward estimates stay below the analytic forms") {
    const StableMarkov ar(StableMarkov::MapKind::Affine, 0.5, Innovation::uniformBox(1, 1.0),
                          MapF::identity());
    const double stateBound = ar.stateBound();
    CHECK(stateBound == doctest::Approx(2.0));
    const auto mc = estimateFwdNorms(ar, 6, 32, 3000, 23);
    const auto coarse = markovFwdNorms(ar, 6);
    for (int j = 1; j <= 6; ++j) {
        // closed form: ||E(S_j|F_0)||_inf = stateBound * rho (1 - rho^j) / (1 - rho)
        const double exact = stateBound * 0.5 * (1.0 - std::pow(0.5, j)) / 0.5;
        const auto& e = mc[static_cast<std::size_t>(j - 1)];
        CHECK(e.value <= exact + 3.0 * e.se + 1e-9);
        CHECK(exact <= coarse[static_cast<std::size_t>(j - 1)] + 1e-12);
    }
}

TEST_CASE("backward norms: adapted models are exactly zero") {
    const IidProcess iid(Innovation::rademacher());
    const NormEstimate est = estimateBwdNorm(iid, 3, 8, 8, 1);
    CHECK(est.value == 0.0);
    CHECK(est.mode == EstimateMode::Exact);
    const LinearProcess oneSided = LinearProcess::geometric(0.5, 10, false,
                                                            Innovation::uniformBox(1, 1.0),
                                                            MapF::identity());
    CHECK(estimateBwdNorm(oneSided, 3, 8, 8, 1).value == 0.0);
}

TEST_CASE("single negative coefficient: backward norm matches the direct formula") {
    // X_k = c_{-1} eps_{k+1}; S_j - E(S_j|F_j) = c_{-1} eps_{j+1}
    std::vector<std::pair<int, Eigen::MatrixXd>> cs;
    cs.emplace_back(-1, Eigen::MatrixXd::Identity(1, 1));
    const LinearProcess lp(std::move(cs), Innovation::uniformBox(1, 1.0), MapF::identity());
    CHECK_FALSE(lp.adapted());
    const int j = 5;
    const NormEstimate est = estimateBwdNorm(lp, j, 64, 4000, 29);
    // essential sup is 1 (|eps| <= 1); the max over 64 draws sits just below
    CHECK(est.value <= 1.0 + 3.0 * est.se + 1e-6);
    CHECK(est.value >= 0.8);
    const auto bounds = linearBwdBounds(lp, j);
    CHECK(est.value <= bounds[static_cast<std::size_t>(j - 1)] + 3.0 * est.se);
}

TEST_CASE("two-sided linear process: MC backward estimate below the analytic bound") {
    const LinearProcess lp = LinearProcess::geometric(0.5, 8, true,
                                                      Innovation::uniformBox(1, 1.0),
                                                      MapF::identity());
    DependenceProfile prof = certifiedProfile(lp, 8);
    const std::vector<int> js{1, 4};
    addMcEstimates(prof, lp, js, 16, 1000, 31);  // throws on a bound violation
    CHECK(prof.fwdMc[0].value >= 0.0);
    CHECK(prof.bwdMc[3].value >= 0.0);
}

TEST_CASE("delta sum") {
    SUBCASE("iid profile gives zero") {
        const IidProcess iid(Innovation::rademacher());
        CHECK(certifiedDelta(iid, 64) == 0.0);
    }
    SUBCASE("single term is fwd + bwd") {
        DependenceProfile p;
        p.fwd = {{0.7, 0, EstimateMode::Exact}};
        p.bwd = {{0.2, 0, EstimateMode::Exact}};
        CHECK(deltaSum(p, 1) == doctest::Approx(0.9));
    }
    SUBCASE("constant forward entries approach c * zeta(3/2)") {
        const double c = 1.7;
        const int n = 20000;
        DependenceProfile p;
        p.fwd.assign(n, {c, 0, EstimateMode::Exact});
        p.bwd.assign(n, {0.0, 0, EstimateMode::Exact});
        // oracle: independent partial sum of j^{-3/2}
        long double zeta = 0.0;
        for (int j = 1; j <= n; ++j) zeta += std::pow(static_cast<long double>(j), -1.5L);
        CHECK(deltaSum(p, n) == doctest::Approx(c * static_cast<double>(zeta)).epsilon(1e-12));
        CHECK(static_cast<double>(zeta) == doctest::Approx(2.612).epsilon(2e-3));
        CHECK(deltaSum(p, n) >= deltaSum(p, n / 2));  // monotone in n
    }
    SUBCASE("missing entries error") {
        DependenceProfile p;
        p.fwd = {{1.0, 0, EstimateMode::Exact}};
        p.bwd = {{0.0, 0, EstimateMode::Exact}};
        CHECK_THROWS_AS((void)deltaSum(p, 2), PreconditionError);
    }
}

TEST_CASE("phi1 exact: independent rows give zero") {
    const FiniteStateChain iidChain((Eigen::MatrixXd(2, 2) << 0.4, 0.6, 0.4, 0.6).finished(),
                                    {0.0, 1.0});
    for (int n = 1; n <= 5; ++n) CHECK(phi1Exact(iidChain, n) <= 1e-14);
}

TEST_CASE("phi1 exact matches brute force over all events and initial states") {
    const FiniteStateChain chain((Eigen::MatrixXd(2, 2) << 0.8, 0.2, 0.4, 0.6).finished(),
                                 {-1.0, 1.0});
    for (int n = 1; n <= 6; ++n) {
        double brute = 0.0;
        const Eigen::MatrixXd& pn = chain.power(n);
        for (int s = 0; s < 2; ++s)
            for (int mask = 0; mask < 4; ++mask) {
                double diff = 0.0;
                for (int a = 0; a < 2; ++a)
                    if (mask & (1 << a)) diff += pn(s, a) - chain.stationary()(a);
                brute = std::max(brute, std::abs(diff));
            }
        CHECK(phi1Exact(chain, n) == doctest::Approx(brute).epsilon(1e-12));
    }
    // monotone nonincreasing
    const auto phis = phi1ExactUpTo(chain, 12);
    for (std::size_t i = 1; i < phis.size(); ++i) CHECK(phis[i] <= phis[i - 1] + 1e-14);
}

TEST_CASE("m-dependent construction mixes exactly after the cutoff") {
    // two-step chain: the second step erases the start, so phi_1(n >= 2) = 0
    Eigen::MatrixXd P(4, 4);
    P << 0.0, 0.0, 0.9, 0.1,  //
        0.0, 0.0, 0.1, 0.9,   //
        0.25, 0.25, 0.25, 0.25,  //
        0.25, 0.25, 0.25, 0.25;
    const FiniteStateChain chain(P, {0.0, 1.0, 2.0, 3.0});
    CHECK(phi1Exact(chain, 1) > 0.1);
    CHECK(phi1Exact(chain, 2) <= 1e-13);
    CHECK(phi1Exact(chain, 3) <= 1e-13);
}

TEST_CASE("phi2 equals joint total variation and dominates nothing spurious") {
    const FiniteStateChain chain = symmetricTwoState(0.3);
    // for a Markov chain the joint (X_j, X_i) conditional TV collapses to phi1(j)
    for (int n = 1; n <= 4; ++n)
        CHECK(phi2Exact(chain, n, 8) == doctest::Approx(phi1Exact(chain, n)).epsilon(1e-10));
}

TEST_CASE("phi tilde: iid chain vanishes and monotone in k") {
    const FiniteStateChain iidChain((Eigen::MatrixXd(3, 3) << 0.2, 0.5, 0.3, 0.2, 0.5, 0.3, 0.2,
                                     0.5, 0.3)
                                        .finished(),
                                    {0.0, 0.5, 1.0});
    CHECK(phiTilde2Exact(iidChain, 1, 4) <= 1e-14);
    const FiniteStateChain chain((Eigen::MatrixXd(3, 3) << 0.6, 0.3, 0.1, 0.2, 0.5, 0.3, 0.1, 0.3,
                                  0.6)
                                     .finished(),
                                 {0.0, 0.5, 1.0});
    for (int n = 1; n <= 3; ++n) {
        const double t1 = phiTilde1Exact(chain, n, 6);
        const double t2 = phiTilde2Exact(chain, n, 6);
        CHECK(t1 <= t2 + 1e-14);
        CHECK(t2 >= 0.0);
        CHECK(t2 <= 1.0);
    }
}

TEST_CASE("phi tilde 2 matches exhaustive path enumeration on a 3-state chain") {
    const FiniteStateChain chain((Eigen::MatrixXd(3, 3) << 0.6, 0.3, 0.1, 0.2, 0.5, 0.3, 0.1, 0.3,
                                  0.6)
                                     .finished(),
                                 {0.0, 0.5, 1.0});
    const int n = 1, horizon = 3;
    // oracle: enumerate all state paths up to length i2, thresholds on a grid
    const auto& val = chain.stateValues();
    std::vector<double> thresholds{-0.5, 0.0, 0.25, 0.5, 0.75, 1.0, 1.5};
    auto bruteB2 = [&](int i1, int i2) {
        double worst = 0.0;
        for (double t1 : thresholds)
            for (double t2 : thresholds) {
                const double f1 = chain.marginalCdf(t1), f2 = chain.marginalCdf(t2);
                double unc = 0.0;
                std::vector<double> cond(3, 0.0);
                std::vector<int> path(static_cast<std::size_t>(i2), 0);
                for (;;) {
                    const int a = path[static_cast<std::size_t>(i1 - 1)];
                    const int b = path[static_cast<std::size_t>(i2 - 1)];
                    const double g =
                        ((val[static_cast<std::size_t>(a)] <= t1 ? 1.0 : 0.0) - f1) *
                        ((val[static_cast<std::size_t>(b)] <= t2 ? 1.0 : 0.0) - f2);
                    for (int s0 = 0; s0 < 3; ++s0) {
                        double prob = 1.0;
                        int prev = s0;
                        for (int t = 0; t < i2; ++t) {
                            prob *= chain.transition()(prev, path[static_cast<std::size_t>(t)]);
                            prev = path[static_cast<std::size_t>(t)];
                        }
                        cond[static_cast<std::size_t>(s0)] += prob * g;
                        unc += chain.stationary()(s0) * prob * g;
                    }
                    int pos = i2 - 1;
                    while (pos >= 0 && path[static_cast<std::size_t>(pos)] == 2) {
                        path[static_cast<std::size_t>(pos)] = 0;
                        --pos;
                    }
                    if (pos < 0) break;
                    ++path[static_cast<std::size_t>(pos)];
                }
                for (int s0 = 0; s0 < 3; ++s0)
                    worst = std::max(worst, std::abs(cond[static_cast<std::size_t>(s0)] - unc));
            }
        return worst;
    };
    double brute = 0.0;
    for (int i1 = n; i1 <= n + horizon; ++i1)
        for (int d = 1; d <= horizon; ++d) brute = std::max(brute, bruteB2(i1, i1 + d));
    // single-index part of the max
    const double t1max = phiTilde1Exact(chain, n, horizon);
    brute = std::max(brute, t1max);
    CHECK(phiTilde2Exact(chain, n, horizon) == doctest::Approx(brute).epsilon(1e-10));
}

TEST_CASE("phi1 series value with certified tail") {
    const FiniteStateChain chain = symmetricTwoState(0.3);
    const Phi1Series series = phi1SeriesValue(chain, 32);
    // oracle: phi1(j) = lambda^j / 2 with lambda = 0.4 for this chain
    long double direct = 0.0;
    for (int j = 1; j <= 200; ++j)
        direct += std::pow(0.4L, j) / 2.0L / std::sqrt(static_cast<long double>(j));
    CHECK(series.value >= static_cast<double>(direct) - 1e-12);  // tail bound keeps it an upper bound
    CHECK(series.value <= static_cast<double>(direct) + 1e-6);
}

TEST_CASE("linear process analytic bounds") {
    const double rho = 0.5;
    const LinearProcess lp = LinearProcess::geometric(rho, 60, false,
                                                      Innovation::uniformBox(1, 1.0),
                                                      MapF::identity());
    SUBCASE("geometric closed form delta rho^n/(1-rho)") {
        for (int n = 1; n <= 20; ++n) {
            const double expected = 2.0 * std::pow(rho, n) / (1.0 - rho);
            CHECK(linearPerXFwdBound(lp, n) == doctest::Approx(expected).epsilon(1e-9));
        }
    }
    SUBCASE("one-sided process has zero backward bounds") {
        CHECK(lp.adapted());
        for (int n = 0; n <= 5; ++n) CHECK(linearPerXBwdBound(lp, n) == 0.0);
    }
    SUBCASE("single c0 is 0-dependent") {
        std::vector<std::pair<int, Eigen::MatrixXd>> cs;
        cs.emplace_back(0, Eigen::MatrixXd::Identity(1, 1));
        const LinearProcess only0(std::move(cs), Innovation::uniformBox(1, 1.0), MapF::identity());
        for (int n = 1; n <= 4; ++n) CHECK(linearPerXFwdBound(only0, n) == 0.0);
    }
}

TEST_CASE("markov forward bound") {
    CHECK(markovFwdBound(1.0, 1.0, 0.5, 1.0, 0) == doctest::Approx(2.0));
    CHECK(markovFwdBound(1.0, 1.0, 0.5, 1.0, 3) == doctest::Approx(0.25));
    CHECK_THROWS_AS((void)markovFwdBound(1.0, 1.0, 1.0, 1.0, 1), PreconditionError);
    // sum_k k^{-1/2} bound(k) converges for any rho < 1
    double partial = 0.0, prev = -1.0;
    for (int k = 1; k <= 400; ++k) {
        prev = partial;
        partial += markovFwdBound(1.0, 1.0, 0.9, 1.0, k) / std::sqrt(static_cast<double>(k));
    }
    CHECK(partial - prev <= 1e-12);  // Cauchy at the horizon
}

TEST_CASE("subadditivity of certified profile entries") {
    const FiniteStateChain chain = symmetricTwoState(0.25);
    const auto v = chain.exactFwdNorms(16);
    for (int i = 1; i + 1 <= 16; ++i)
        for (int j = 1; i + j <= 16; ++j)
            CHECK(v[static_cast<std::size_t>(i + j - 1)] <=
                  v[static_cast<std::size_t>(i - 1)] + v[static_cast<std::size_t>(j - 1)] + 1e-12);
    const LinearProcess lp = LinearProcess::geometric(0.6, 12, true,
                                                      Innovation::uniformBox(1, 1.0),
                                                      MapF::identity());
    const auto b = linearBwdBounds(lp, 16);
    for (int i = 1; i + 1 <= 16; ++i)
        for (int j = 1; i + j <= 16; ++j)
            CHECK(b[static_cast<std::size_t>(i + j - 1)] <=
                  2.0 * b[static_cast<std::size_t>(i - 1)] + b[static_cast<std::size_t>(j - 1)] +
                      1e-12);
}

TEST_CASE("mdp condition quantities") {
    SUBCASE("iid: the trace condition vanishes when Q is the true covariance") {
        const IidProcess iid(Innovation::rademacher());
        const TraceClassOperator Q(Eigen::MatrixXd::Identity(1, 1));
        const std::vector<long> grid{8, 64};
        const auto rep = checkMdpConditions(iid, Q, grid, 1, 2, 8, 4096, 3);
        for (const auto& row : rep.rows) CHECK(row.condTrace <= 0.2);
        CHECK(rep.fwdSeriesPartial == 0.0);
    }
    SUBCASE("chain: exact quantities decay geometrically") {
        const FiniteStateChain chain = symmetricTwoState(0.3);
        const TraceClassOperator Q = chain.exactQ();
        const std::vector<long> grid{1, 8, 64, 256};
        const auto rep = checkMdpConditions(chain, Q, grid, 1, 2, 1, 1, 3);
        REQUIRE(rep.rows.size() == 4);
        for (const auto& row : rep.rows) CHECK(row.exact);
        CHECK(rep.rows[1].condTrace < rep.rows[0].condTrace);
        CHECK(rep.rows[2].condTrace < rep.rows[1].condTrace);
        CHECK(rep.rows[2].corrCov < 1e-6);  // rho^{n} decay of the corollary quantity
        CHECK(rep.rows[3].condTrace < 0.05);
    }
    SUBCASE("geometric linear process: forward series is Cauchy") {
        const LinearProcess lp = LinearProcess::geometric(0.5, 30, false,
                                                          Innovation::uniformBox(1, 1.0),
                                                          MapF::identity());
        const TraceClassOperator Q(
            (Eigen::MatrixXd(1, 1) << (1.0 / 3.0) / 0.25).finished());
        const std::vector<long> grid{4};
        const auto rep = checkMdpConditions(lp, Q, grid, 1, 2, 4, 512, 5);
        CHECK(rep.fwdSeriesCauchy);
        CHECK(rep.bwdSeriesCauchy);
    }
}
