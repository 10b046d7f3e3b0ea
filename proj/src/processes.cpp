#include "mdlab/processes.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace mdlab {

// ---------------------------------------------------------------- Innovation

Innovation Innovation::rademacher() {
    return Innovation(Kind::RademacherScalar, 1, 1.0);
}

Innovation Innovation::uniformBox(int dim, double halfWidth) {
    require(dim >= 1, "Innovation: dim must be >= 1");
    require(halfWidth > 0.0 && std::isfinite(halfWidth), "Innovation: halfWidth must be positive");
    return Innovation(Kind::UniformBox, dim, halfWidth);
}

double Innovation::normBound() const {
    switch (kind_) {
        case Kind::RademacherScalar: return 1.0;
        case Kind::UniformBox: return halfWidth_ * std::sqrt(static_cast<double>(dim_));
    }
    return 0.0;
}

double Innovation::coordBound() const {
    return kind_ == Kind::RademacherScalar ? 1.0 : halfWidth_;
}

double Innovation::diameter() const {
    // Both kinds are centered in a symmetric set; the optimal shift is 0.
    return 2.0 * normBound();
}

double Innovation::coordVariance() const {
    return kind_ == Kind::RademacherScalar ? 1.0 : halfWidth_ * halfWidth_ / 3.0;
}

void Innovation::sample(Rng& rng, Eigen::Ref<Eigen::VectorXd> out) const {
    if (kind_ == Kind::RademacherScalar) {
        out(0) = rng.rademacher();
        return;
    }
    for (int i = 0; i < dim_; ++i) out(i) = rng.uniformSym(halfWidth_);
}

// ------------------------------------------------------------------- Modulus

Modulus Modulus::lipschitz(double l) {
    Modulus m;
    m.kind = Kind::Lipschitz;
    m.lip = l;
    return m;
}

Modulus Modulus::logPower(double D, double gamma) {
    Modulus m;
    m.kind = Kind::LogPower;
    m.logD = D;
    m.logGamma = gamma;
    return m;
}

double Modulus::eval(double h) const {
    require(h >= 0.0, "Modulus: argument must be nonnegative");
    if (h == 0.0) return 0.0;
    double w = 0.0;
    switch (kind) {
        case Kind::Lipschitz:
            w = lip * h;
            break;
        case Kind::LogPower: {
            const double hh = std::min(h, std::exp(-1.0));
            w = logD * std::pow(-std::log(hh), -logGamma);
            break;
        }
    }
    return std::min(w, ampCap);
}

// ---------------------------------------------------------------------- MapF

MapF MapF::identity() {
    return MapF(Kind::Identity, 1.0);
}

MapF MapF::tanhCoordwise(double scale) {
    require(scale > 0.0, "MapF: tanh scale must be positive");
    return MapF(Kind::TanhCoordwise, scale);
}

double MapF::lip() const {
    return kind_ == Kind::Identity ? 1.0 : scale_;
}

void MapF::apply(Eigen::Ref<Eigen::VectorXd> x) const {
    if (kind_ == Kind::Identity) return;
    for (Eigen::Index i = 0; i < x.size(); ++i) x(i) = std::tanh(scale_ * x(i));
}

Modulus MapF::modulus(int dim) const {
    Modulus m = Modulus::lipschitz(lip());
    if (kind_ == Kind::TanhCoordwise) m.ampCap = 2.0 * std::sqrt(static_cast<double>(dim));
    return m;
}

// ------------------------------------------------------------------- Process

std::vector<HVec> Process::samplePath(int n, Rng& rng) const {
    require(n >= 1, "samplePath: n must be >= 1");
    Snapshot origin = drawOrigin(rng);
    Eigen::MatrixXd xs;
    pathGiven(origin, n, rng, xs);
    if (!xs.allFinite()) throw InvariantViolation(kind() + ": non-finite sample emitted");
    const double b2 = boundB() * boundB() * (1.0 + 1e-9) + 1e-300;
    std::vector<HVec> out(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k) {
        if (xs.col(k).squaredNorm() > b2)
            throw InvariantViolation(kind() + ": emitted sample exceeds certified bound");
        out[static_cast<std::size_t>(k)] = xs.col(k);
    }
    return out;
}

PathCH Process::partialSumPath(int n, Rng& rng) const {
    std::vector<HVec> xs = samplePath(n, rng);
    return PathCH::fromIncrements(xs, 1.0 / std::sqrt(static_cast<double>(n)));
}

void Process::checkSnapshot(const Snapshot& s) const {
    require(s.kind == kind(), "snapshot/model kind mismatch: got '" + s.kind + "', expected '" +
                                  kind() + "'");
}

// ---------------------------------------------------------------- IidProcess

namespace {
const std::string kIidKind = "iid";
const std::string kLinearKind = "linear_process";
const std::string kMarkovKind = "stable_markov";
const std::string kChainKind = "finite_chain";
const std::string kEmpiricalKind = "empirical_indicator";
}  // namespace

IidProcess::IidProcess(Innovation innov) : innov_(innov) {}

const std::string& IidProcess::kind() const {
    return kIidKind;
}

Snapshot IidProcess::drawOrigin(Rng&) const {
    return Snapshot{kIidKind, {}};
}

void IidProcess::pathGiven(const Snapshot& past, int n, Rng& rng, Eigen::MatrixXd& out) const {
    checkSnapshot(past);
    require(n >= 1, "pathGiven: n must be >= 1");
    out.resize(dim(), n);
    for (int k = 0; k < n; ++k) innov_.sample(rng, out.col(k));
}

// ------------------------------------------------------------- LinearProcess

LinearProcess::LinearProcess(std::vector<std::pair<int, Eigen::MatrixXd>> coeffs, Innovation innov,
                             MapF f, long centerPrepassN, std::uint64_t centerSeed)
    : innov_(innov), f_(f) {
    require(!coeffs.empty(), "LinearProcess: need at least one coefficient");
    const int d = innov_.dim();
    L_ = 0;
    for (const auto& [i, m] : coeffs) L_ = std::max(L_, std::abs(i));
    coeffs_.assign(static_cast<std::size_t>(2 * L_ + 1), Eigen::MatrixXd::Zero(d, d));
    for (const auto& [i, m] : coeffs) {
        require(m.rows() == d && m.cols() == d, "LinearProcess: coefficient must be dim x dim");
        coeffs_[static_cast<std::size_t>(i + L_)] += m;
    }
    opNorms_.resize(coeffs_.size());
    for (std::size_t j = 0; j < coeffs_.size(); ++j) {
        // spectral norm via singular values; exact for the scalar fast path
        opNorms_[j] = coeffs_[j].isZero(0.0)
                          ? 0.0
                          : Eigen::JacobiSVD<Eigen::MatrixXd>(coeffs_[j]).singularValues()(0);
    }
    adapted_ = true;
    for (int i = -L_; i < 0; ++i)
        if (opNorm(i) > 0.0) adapted_ = false;
    if (d == 1) {
        coeffScalars_.resize(coeffs_.size());
        for (std::size_t j = 0; j < coeffs_.size(); ++j) coeffScalars_[j] = coeffs_[j](0, 0);
    }
    reachRadius_ = opNormSum() * innov_.normBound();

    if (f_.isIdentity()) {
        center_ = HVec::Zero(d);  // E eps = 0, f linear
        centerSe_ = 0.0;
    } else {
        require(centerPrepassN >= 1000, "LinearProcess: centering pre-pass too small");
        Rng rng(centerSeed, 0);
        HVec mean = HVec::Zero(d), m2 = HVec::Zero(d);
        Eigen::MatrixXd eps(d, 2 * L_ + 1);
        HVec u(d);
        for (long t = 0; t < centerPrepassN; ++t) {
            for (int j = 0; j <= 2 * L_; ++j) innov_.sample(rng, eps.col(j));
            u.setZero();
            for (int j = 0; j <= 2 * L_; ++j) u += coeffs_[static_cast<std::size_t>(j)] * eps.col(j);
            f_.apply(u);
            const HVec delta = u - mean;
            mean += delta / static_cast<double>(t + 1);
            m2 += delta.cwiseProduct(u - mean);
        }
        center_ = mean;
        centerSe_ = std::sqrt(m2.sum() / static_cast<double>(centerPrepassN - 1) /
                              static_cast<double>(centerPrepassN));
    }

    if (f_.isIdentity()) {
        boundB_ = reachRadius_;
    } else {
        double amp = 0.0;  // coordinates of tanh stay in [-1,1]
        for (Eigen::Index i = 0; i < center_.size(); ++i)
            amp += (1.0 + std::abs(center_(i))) * (1.0 + std::abs(center_(i)));
        boundB_ = std::min(std::sqrt(amp), f_.lip() * reachRadius_ + center_.norm());
    }
}

LinearProcess LinearProcess::geometric(double rho, int L, bool twoSided, Innovation innov, MapF f) {
    require(rho > 0.0 && rho < 1.0, "geometric linear process: rho must be in (0,1)");
    require(L >= 0, "geometric linear process: L must be >= 0");
    const int d = innov.dim();
    std::vector<std::pair<int, Eigen::MatrixXd>> cs;
    for (int i = twoSided ? -L : 0; i <= L; ++i)
        cs.emplace_back(i, std::pow(rho, std::abs(i)) * Eigen::MatrixXd::Identity(d, d));
    return LinearProcess(std::move(cs), innov, f);
}

const std::string& LinearProcess::kind() const {
    return kLinearKind;
}

double LinearProcess::opNorm(int i) const {
    if (i < -L_ || i > L_) return 0.0;
    return opNorms_[static_cast<std::size_t>(i + L_)];
}

double LinearProcess::opNormSum() const {
    double s = 0.0;
    for (double v : opNorms_) s += v;
    return s;
}

double LinearProcess::tailPos(int n) const {
    double s = 0.0;
    for (int k = std::max(n, -L_); k <= L_; ++k) s += opNorm(k);
    return s;
}

double LinearProcess::tailNeg(int n) const {
    double s = 0.0;
    for (int k = -L_; k <= std::min(-n, L_); ++k) s += opNorm(k);
    return s;
}

Snapshot LinearProcess::drawOrigin(Rng& rng) const {
    // innovations for times (1-L)..0
    Snapshot s{kLinearKind, {}};
    const int d = innov_.dim();
    s.data.resize(static_cast<std::size_t>(L_) * static_cast<std::size_t>(d));
    HVec e(d);
    for (int t = 0; t < L_; ++t) {
        innov_.sample(rng, e);
        for (int i = 0; i < d; ++i) s.data[static_cast<std::size_t>(t * d + i)] = e(i);
    }
    return s;
}

void LinearProcess::emitFromBuffer(const Eigen::MatrixXd& eps, int firstTime, int k,
                                   Eigen::Ref<Eigen::VectorXd> out) const {
    // X_k uses innovation times k-L..k+L; buffer column for time t is t-firstTime.
    const int base = k - L_ - firstTime;
    if (!coeffScalars_.empty()) {
        double u = 0.0;
        const double* buf = eps.data();
        for (int j = 0; j <= 2 * L_; ++j) u += coeffScalars_[static_cast<std::size_t>(2 * L_ - j)] * buf[base + j];
        out(0) = u;
    } else {
        out.setZero();
        for (int j = 0; j <= 2 * L_; ++j)
            out += coeffs_[static_cast<std::size_t>(2 * L_ - j)] * eps.col(base + j);
    }
    f_.apply(out);
    out -= center_;
}

void LinearProcess::pathGiven(const Snapshot& past, int n, Rng& rng, Eigen::MatrixXd& out) const {
    checkSnapshot(past);
    require(n >= 1, "pathGiven: n must be >= 1");
    const int d = innov_.dim();
    require(past.data.size() == static_cast<std::size_t>(L_) * static_cast<std::size_t>(d),
            "LinearProcess: snapshot has wrong size");
    Eigen::MatrixXd eps(d, n + 2 * L_);  // times (1-L)..(n+L)
    for (int t = 0; t < L_; ++t)
        for (int i = 0; i < d; ++i) eps(i, t) = past.data[static_cast<std::size_t>(t * d + i)];
    for (int c = L_; c < n + 2 * L_; ++c) innov_.sample(rng, eps.col(c));
    out.resize(d, n);
    for (int k = 1; k <= n; ++k) emitFromBuffer(eps, 1 - L_, k, out.col(k - 1));
}

void LinearProcess::drawWindow(int j, Rng& rng, Eigen::MatrixXd& eps) const {
    require(j >= 1, "drawWindow: j must be >= 1");
    eps.resize(innov_.dim(), j + 2 * L_);
    for (int c = 0; c < eps.cols(); ++c) innov_.sample(rng, eps.col(c));
}

void LinearProcess::resampleFuture(int j, Rng& rng, Eigen::MatrixXd& eps) const {
    // window covers times (1-L)..(j+L); times > j are the last L columns
    for (int c = j + L_ - 1 + 1; c < j + 2 * L_; ++c) innov_.sample(rng, eps.col(c));
}

void LinearProcess::xFromWindow(const Eigen::MatrixXd& eps, int k,
                                Eigen::Ref<Eigen::VectorXd> out) const {
    emitFromBuffer(eps, 1 - L_, k, out);
}

HVec LinearProcess::sumFromWindow(const Eigen::MatrixXd& eps, int j) const {
    HVec acc = HVec::Zero(innov_.dim());
    HVec x(innov_.dim());
    for (int k = 1; k <= j; ++k) {
        xFromWindow(eps, k, x);
        acc += x;
    }
    return acc;
}

// -------------------------------------------------------------- StableMarkov

StableMarkov::StableMarkov(MapKind mapKind, double rho, Innovation innov, MapF obs)
    : mapKind_(mapKind), rho_(rho), innov_(innov), obs_(obs) {
    require(rho_ > 0.0 && rho_ < 1.0, "StableMarkov: rho must be in (0,1)");
    const int d = innov_.dim();
    if (mapKind_ == MapKind::Affine) {
        stateBound_ = innov_.normBound() / (1.0 - rho_);
    } else {
        stateBound_ = std::sqrt(static_cast<double>(d)) * (rho_ + innov_.coordBound());
    }
    // observables of symmetric stationary laws through odd maps are centered
    if (obs_.isIdentity()) {
        boundB_ = stateBound_;
    } else {
        boundB_ = std::min(std::sqrt(static_cast<double>(d)), obs_.lip() * stateBound_);
    }
    burnin_ = static_cast<int>(std::ceil(std::log(1e-12) / std::log(rho_)));
}

const std::string& StableMarkov::kind() const {
    return kMarkovKind;
}

void StableMarkov::step(Eigen::Ref<Eigen::VectorXd> y, Rng& rng) const {
    const int d = innov_.dim();
    if (mapKind_ == MapKind::Affine) {
        y *= rho_;
    } else {
        for (int i = 0; i < d; ++i) y(i) = rho_ * std::tanh(y(i));
    }
    for (int i = 0; i < d; ++i)
        y(i) += innov_.kind() == Innovation::Kind::RademacherScalar
                    ? rng.rademacher()
                    : rng.uniformSym(innov_.halfWidth());
}

void StableMarkov::stepWith(Eigen::Ref<Eigen::VectorXd> y, const Eigen::VectorXd& xi) const {
    const int d = innov_.dim();
    if (mapKind_ == MapKind::Affine) {
        y *= rho_;
    } else {
        for (int i = 0; i < d; ++i) y(i) = rho_ * std::tanh(y(i));
    }
    y += xi;
}

Snapshot StableMarkov::drawOrigin(Rng& rng) const {
    HVec y = HVec::Zero(innov_.dim());
    for (int t = 0; t < burnin_; ++t) step(y, rng);
    Snapshot s{kMarkovKind, {}};
    s.data.assign(y.data(), y.data() + y.size());
    return s;
}

void StableMarkov::pathGiven(const Snapshot& past, int n, Rng& rng, Eigen::MatrixXd& out) const {
    checkSnapshot(past);
    require(n >= 1, "pathGiven: n must be >= 1");
    const int d = innov_.dim();
    require(past.data.size() == static_cast<std::size_t>(d), "StableMarkov: bad snapshot size");
    HVec y(d);
    for (int i = 0; i < d; ++i) y(i) = past.data[static_cast<std::size_t>(i)];
    out.resize(d, n);
    for (int k = 0; k < n; ++k) {
        step(y, rng);
        out.col(k) = y;
        obs_.apply(out.col(k));
    }
}

bool StableMarkov::exactCondMeanAvailable() const {
    return mapKind_ == MapKind::Affine && obs_.isIdentity();
}

HVec StableMarkov::exactCondMean(const Snapshot& past, int k) const {
    require(exactCondMeanAvailable(), "exactCondMean: only for the affine map with identity observable");
    checkSnapshot(past);
    HVec y(innov_.dim());
    for (int i = 0; i < innov_.dim(); ++i) y(i) = past.data[static_cast<std::size_t>(i)];
    return std::pow(rho_, k) * y;
}

double StableMarkov::contractionCertificate(int pairs, int draws, std::uint64_t seed) const {
    const int d = innov_.dim();
    Rng rng(seed, 0);
    double worst = 0.0;
    HVec x(d), y(d), fx(d), fy(d), xi(d);
    for (int p = 0; p < pairs; ++p) {
        for (int i = 0; i < d; ++i) {
            x(i) = rng.uniformSym(stateBound_ / std::sqrt(static_cast<double>(d)));
            y(i) = rng.uniformSym(stateBound_ / std::sqrt(static_cast<double>(d)));
        }
        const double dist = (x - y).norm();
        if (dist < 1e-12) continue;
        double acc = 0.0;
        for (int t = 0; t < draws; ++t) {
            innov_.sample(rng, xi);
            fx = x;
            fy = y;
            stepWith(fx, xi);
            stepWith(fy, xi);
            acc += (fx - fy).norm();
        }
        worst = std::max(worst, acc / static_cast<double>(draws) / dist);
    }
    return worst;
}

// ----------------------------------------------------------- FiniteStateChain

FiniteStateChain::FiniteStateChain(Eigen::MatrixXd transition, std::vector<double> values,
                                   std::optional<Eigen::MatrixXd> obsVectors)
    : transition_(std::move(transition)), values_(std::move(values)) {
    const int S = static_cast<int>(transition_.rows());
    require(S >= 1 && transition_.cols() == S, "FiniteStateChain: transition must be square");
    require(static_cast<int>(values_.size()) == S, "FiniteStateChain: one value per state");
    for (int s = 0; s < S; ++s) {
        double rowSum = 0.0;
        for (int t = 0; t < S; ++t) {
            require(transition_(s, t) >= -1e-15, "FiniteStateChain: negative transition entry");
            rowSum += transition_(s, t);
        }
        require(std::abs(rowSum - 1.0) <= 1e-10, "FiniteStateChain: row " + std::to_string(s) +
                                                     " does not sum to 1");
    }

    // stationary law: solve pi^T (P - I) = 0 with sum(pi) = 1
    Eigen::MatrixXd A = transition_.transpose() - Eigen::MatrixXd::Identity(S, S);
    A.row(S - 1).setOnes();
    Eigen::VectorXd b = Eigen::VectorXd::Zero(S);
    b(S - 1) = 1.0;
    stationary_ = A.fullPivLu().solve(b);
    const double residual = (transition_.transpose() * stationary_ - stationary_).cwiseAbs().maxCoeff();
    if (residual > 1e-10 || stationary_.minCoeff() < -1e-12)
        throw PreconditionError("FiniteStateChain: stationary distribution solve failed (chain "
                                "not irreducible?)");
    stationary_ = stationary_.cwiseMax(0.0);
    stationary_ /= stationary_.sum();

    Eigen::MatrixXd rawObs;
    if (obsVectors) {
        rawObs = *obsVectors;
        require(rawObs.rows() == S, "FiniteStateChain: observable needs one row per state");
    } else {
        rawObs = Eigen::Map<const Eigen::VectorXd>(values_.data(), S);
    }
    const Eigen::RowVectorXd mean = stationary_.transpose() * rawObs;
    obs_ = rawObs.rowwise() - mean;
    boundB_ = obs_.rowwise().norm().maxCoeff();
    rowsFlat_.resize(static_cast<std::size_t>(S) * static_cast<std::size_t>(S));
    for (int s = 0; s < S; ++s)
        for (int t = 0; t < S; ++t) rowsFlat_[static_cast<std::size_t>(s * S + t)] = transition_(s, t);
    cache_ = std::make_shared<PowerCache>();
    cache_->powers.push_back(std::make_unique<Eigen::MatrixXd>(Eigen::MatrixXd::Identity(S, S)));
    cache_->powers.push_back(std::make_unique<Eigen::MatrixXd>(transition_));
}

std::span<const double> FiniteStateChain::transitionRow(int s) const {
    const int S = numStates();
    return {rowsFlat_.data() + static_cast<std::size_t>(s) * static_cast<std::size_t>(S),
            static_cast<std::size_t>(S)};
}

const std::string& FiniteStateChain::kind() const {
    return kChainKind;
}

const Eigen::MatrixXd& FiniteStateChain::power(int k) const {
    require(k >= 0, "power: k must be >= 0");
    std::lock_guard<std::mutex> lock(cache_->mutex);
    auto& powers = cache_->powers;
    while (static_cast<int>(powers.size()) <= k)
        powers.push_back(std::make_unique<Eigen::MatrixXd>(*powers.back() * transition_));
    return *powers[static_cast<std::size_t>(k)];
}

Snapshot FiniteStateChain::drawOrigin(Rng& rng) const {
    const std::size_t s =
        rng.categorical(std::span<const double>(stationary_.data(), static_cast<std::size_t>(stationary_.size())));
    return Snapshot{kChainKind, {static_cast<double>(s)}};
}

int FiniteStateChain::stateFromSnapshot(const Snapshot& past) const {
    checkSnapshot(past);
    require(past.data.size() == 1, "FiniteStateChain: bad snapshot");
    const int s = static_cast<int>(std::lround(past.data[0]));
    require(s >= 0 && s < numStates(), "FiniteStateChain: snapshot state out of range");
    return s;
}

void FiniteStateChain::pathGiven(const Snapshot& past, int n, Rng& rng, Eigen::MatrixXd& out) const {
    require(n >= 1, "pathGiven: n must be >= 1");
    int s = stateFromSnapshot(past);
    out.resize(dim(), n);
    for (int k = 0; k < n; ++k) {
        s = static_cast<int>(rng.categorical(transitionRow(s)));
        out.col(k) = obs_.row(s);
    }
}

std::vector<double> FiniteStateChain::exactFwdNorms(int J) const {
    require(J >= 1, "exactFwdNorms: J must be >= 1");
    std::vector<double> v(static_cast<std::size_t>(J));
    Eigen::MatrixXd pk = transition_;
    Eigen::MatrixXd cum = Eigen::MatrixXd::Zero(numStates(), dim());
    for (int j = 1; j <= J; ++j) {
        cum += pk * obs_;
        v[static_cast<std::size_t>(j - 1)] = cum.rowwise().norm().maxCoeff();
        pk = pk * transition_;
    }
    return v;
}

double FiniteStateChain::exactCondSecondMomentSup() const {
    const Eigen::VectorXd sq = obs_.rowwise().squaredNorm();
    return (transition_ * sq).maxCoeff();
}

TraceClassOperator FiniteStateChain::exactQ() const {
    const int S = numStates();
    const Eigen::MatrixXd Pi = Eigen::VectorXd::Ones(S) * stationary_.transpose();
    const Eigen::MatrixXd M =
        (Eigen::MatrixXd::Identity(S, S) - transition_ + Pi).fullPivLu().solve(transition_ - Pi);
    const Eigen::MatrixXd D = stationary_.asDiagonal();
    const Eigen::MatrixXd gamma0 = obs_.transpose() * D * obs_;
    const Eigen::MatrixXd tailSum = obs_.transpose() * D * (M * obs_);
    Eigen::MatrixXd Q = gamma0 + tailSum + tailSum.transpose();
    Q = 0.5 * (Q + Q.transpose());
    return TraceClassOperator(std::move(Q), 1e-9 * std::max(1.0, gamma0.cwiseAbs().maxCoeff()));
}

HVec FiniteStateChain::blockCondMean(int state, int m) const {
    require(state >= 0 && state < numStates(), "blockCondMean: state out of range");
    require(m >= 1, "blockCondMean: m must be >= 1");
    HVec acc = HVec::Zero(dim());
    for (int j = 1; j <= m; ++j) acc += (power(j) * obs_).row(state);
    return acc;
}

double FiniteStateChain::blockCondSecondMoment(int state, int m) const {
    require(state >= 0 && state < numStates(), "blockCondSecondMoment: state out of range");
    require(m >= 1, "blockCondSecondMoment: m must be >= 1");
    const int S = numStates();
    // H_d(a) = <x(a), (P^d x)(a)>; E(||S_m||^2 | Y_0=s) =
    //   sum_{j=1..m} (P^j [H_0 + 2 sum_{d=1..m-j} H_d])(s)
    std::vector<Eigen::VectorXd> H(static_cast<std::size_t>(m));
    for (int d = 0; d < m; ++d) {
        const Eigen::MatrixXd G = power(d) * obs_;
        Eigen::VectorXd h(S);
        for (int a = 0; a < S; ++a) h(a) = obs_.row(a).dot(G.row(a));
        H[static_cast<std::size_t>(d)] = h;
    }
    double total = 0.0;
    for (int j = 1; j <= m; ++j) {
        Eigen::VectorXd combo = H[0];
        for (int d = 1; d <= m - j; ++d) combo += 2.0 * H[static_cast<std::size_t>(d)];
        total += (power(j) * combo)(state);
    }
    return total;
}

double FiniteStateChain::marginalCdf(double t) const {
    double acc = 0.0;
    for (int s = 0; s < numStates(); ++s)
        if (values_[static_cast<std::size_t>(s)] <= t) acc += stationary_(s);
    return acc;
}

double FiniteStateChain::jointCdfLagK(double t, double s, int k) const {
    require(k >= 1, "jointCdfLagK: k must be >= 1");
    const Eigen::MatrixXd& pk = power(k);
    double acc = 0.0;
    for (int a = 0; a < numStates(); ++a) {
        if (values_[static_cast<std::size_t>(a)] > t) continue;
        double inner = 0.0;
        for (int b = 0; b < numStates(); ++b)
            if (values_[static_cast<std::size_t>(b)] <= s) inner += pk(a, b);
        acc += stationary_(a) * inner;
    }
    return acc;
}

// --------------------------------------------------------- EmpiricalIndicator

EmpiricalIndicator::EmpiricalIndicator(Base base, Eigen::VectorXd grid, Eigen::VectorXd weights,
                                       long cdfPrepassN, std::uint64_t cdfSeed)
    : base_(std::move(base)), grid_(std::move(grid)), weights_(std::move(weights)) {
    const int G = static_cast<int>(grid_.size());
    require(G >= 1 && weights_.size() == G, "EmpiricalIndicator: grid/weights size mismatch");
    for (int k = 0; k < G; ++k) {
        require(weights_(k) > 0.0, "EmpiricalIndicator: weights must be positive");
        if (k > 0) require(grid_(k) > grid_(k - 1), "EmpiricalIndicator: grid must be increasing");
    }
    if (base_.kind == Base::Kind::Chain) require(base_.chain != nullptr, "EmpiricalIndicator: missing chain");
    if (base_.kind == Base::Kind::Ar1)
        require(base_.rho > 0.0 && base_.rho < 1.0, "EmpiricalIndicator: AR(1) rho must be in (0,1)");

    cdf_.resize(G);
    switch (base_.kind) {
        case Base::Kind::IidUniform01:
            for (int k = 0; k < G; ++k) cdf_(k) = std::clamp(grid_(k), 0.0, 1.0);
            break;
        case Base::Kind::Chain:
            for (int k = 0; k < G; ++k) cdf_(k) = base_.chain->marginalCdf(grid_(k));
            break;
        case Base::Kind::Ar1: {
            // pre-estimated marginal CDF; standard error reported for tolerances
            require(cdfPrepassN >= 1000, "EmpiricalIndicator: CDF pre-pass too small");
            Rng rng(cdfSeed, 0);
            double y = 0.0;
            for (int t = 0; t < ar1Burnin(); ++t) y = base_.rho * y + rng.uniformSym(base_.halfWidth);
            Eigen::VectorXd counts = Eigen::VectorXd::Zero(G);
            for (long t = 0; t < cdfPrepassN; ++t) {
                y = base_.rho * y + rng.uniformSym(base_.halfWidth);
                for (int k = 0; k < G; ++k)
                    if (y <= grid_(k)) counts(k) += 1.0;
            }
            cdf_ = counts / static_cast<double>(cdfPrepassN);
            // inflate the i.i.d. binomial SE by the AR(1) correlation factor
            const double corrFactor = std::sqrt((1.0 + base_.rho) / (1.0 - base_.rho));
            double worst = 0.0;
            for (int k = 0; k < G; ++k)
                worst = std::max(worst, cdf_(k) * (1.0 - cdf_(k)));
            cdfSe_ = corrFactor * std::sqrt(worst / static_cast<double>(cdfPrepassN));
            break;
        }
    }
    sqrtW_ = weights_.cwiseSqrt();
    double b2 = 0.0;
    for (int k = 0; k < G; ++k) {
        const double m = std::max(cdf_(k), 1.0 - cdf_(k));
        b2 += weights_(k) * m * m;
    }
    boundB_ = std::sqrt(b2);
}

const std::string& EmpiricalIndicator::kind() const {
    return kEmpiricalKind;
}

int EmpiricalIndicator::ar1Burnin() const {
    return static_cast<int>(std::ceil(std::log(1e-12) / std::log(base_.rho)));
}

Snapshot EmpiricalIndicator::drawOrigin(Rng& rng) const {
    Snapshot s{kEmpiricalKind, {}};
    switch (base_.kind) {
        case Base::Kind::IidUniform01:
            break;
        case Base::Kind::Ar1: {
            double y = 0.0;
            for (int t = 0; t < ar1Burnin(); ++t) y = base_.rho * y + rng.uniformSym(base_.halfWidth);
            s.data.push_back(y);
            break;
        }
        case Base::Kind::Chain: {
            Snapshot cs = base_.chain->drawOrigin(rng);
            s.data = cs.data;
            break;
        }
    }
    return s;
}

void EmpiricalIndicator::basePathGiven(const Snapshot& past, int n, Rng& rng,
                                       std::vector<double>& out) const {
    checkSnapshot(past);
    require(n >= 1, "basePathGiven: n must be >= 1");
    out.resize(static_cast<std::size_t>(n));
    switch (base_.kind) {
        case Base::Kind::IidUniform01:
            for (int k = 0; k < n; ++k) out[static_cast<std::size_t>(k)] = rng.uniform01();
            break;
        case Base::Kind::Ar1: {
            require(past.data.size() == 1, "EmpiricalIndicator: bad AR(1) snapshot");
            double y = past.data[0];
            for (int k = 0; k < n; ++k) {
                y = base_.rho * y + rng.uniformSym(base_.halfWidth);
                out[static_cast<std::size_t>(k)] = y;
            }
            break;
        }
        case Base::Kind::Chain: {
            Snapshot cs{base_.chain->kind(), past.data};
            int s = base_.chain->stateFromSnapshot(cs);
            for (int k = 0; k < n; ++k) {
                s = static_cast<int>(rng.categorical(base_.chain->transitionRow(s)));
                out[static_cast<std::size_t>(k)] = base_.chain->stateValues()[static_cast<std::size_t>(s)];
            }
            break;
        }
    }
}

void EmpiricalIndicator::xFromBase(double y, Eigen::Ref<Eigen::VectorXd> out) const {
    for (int k = 0; k < dim(); ++k)
        out(k) = ((y <= grid_(k) ? 1.0 : 0.0) - cdf_(k)) * sqrtW_(k);
}

void EmpiricalIndicator::pathGiven(const Snapshot& past, int n, Rng& rng,
                                   Eigen::MatrixXd& out) const {
    std::vector<double> ys;
    basePathGiven(past, n, rng, ys);
    out.resize(dim(), n);
    for (int k = 0; k < n; ++k) xFromBase(ys[static_cast<std::size_t>(k)], out.col(k));
}

double EmpiricalIndicator::l1Stat(std::span<const double> ys) const {
    std::vector<double> sorted(ys.begin(), ys.end());
    std::sort(sorted.begin(), sorted.end());
    const double n = static_cast<double>(ys.size());
    double acc = 0.0;
    std::size_t idx = 0;
    for (int k = 0; k < dim(); ++k) {
        while (idx < sorted.size() && sorted[idx] <= grid_(k)) ++idx;
        acc += weights_(k) * std::abs(static_cast<double>(idx) - n * cdf_(k));
    }
    return acc;
}

FiniteStateChain EmpiricalIndicator::asChain() const {
    require(base_.kind == Base::Kind::Chain, "asChain: only for finite-chain bases");
    const FiniteStateChain& c = *base_.chain;
    Eigen::MatrixXd obs(c.numStates(), dim());
    for (int s = 0; s < c.numStates(); ++s)
        for (int k = 0; k < dim(); ++k)
            obs(s, k) =
                (c.stateValues()[static_cast<std::size_t>(s)] <= grid_(k) ? 1.0 : 0.0) * sqrtW_(k);
    // centering by the stationary mean reproduces the F(t_k) subtraction
    return FiniteStateChain(c.transition(), c.stateValues(), obs);
}

}  // namespace mdlab
