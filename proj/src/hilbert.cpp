#include "mdlab/hilbert.hpp"

#include <algorithm>
#include <cmath>

namespace mdlab {

double inner(const HVec& x, const HVec& y) {
    require(x.size() == y.size(), "inner: dimension mismatch");
    return x.dot(y);
}

double norm(const HVec& x) {
    return x.norm();
}

HVec project(const HVec& x, Eigen::Index m) {
    require(m >= 1 && m <= x.size(), "project: m out of range");
    return x.head(m);
}

TraceClassOperator::TraceClassOperator(Eigen::MatrixXd m, double symTol) : matrix_(std::move(m)) {
    require(matrix_.rows() == matrix_.cols() && matrix_.rows() >= 1,
            "TraceClassOperator: matrix must be square and nonempty");
    require(matrix_.allFinite(), "TraceClassOperator: entries must be finite");
    const double maxAbs = matrix_.cwiseAbs().maxCoeff();
    symTol_ = symTol >= 0.0 ? symTol : 1e-10 * maxAbs;
    const double asym = (matrix_ - matrix_.transpose()).cwiseAbs().maxCoeff();
    if (asym > symTol_)
        throw InvariantViolation("TraceClassOperator: asymmetry " + std::to_string(asym) +
                                 " exceeds tolerance " + std::to_string(symTol_));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(matrix_, Eigen::EigenvaluesOnly);
    const double minEig = es.eigenvalues().minCoeff();
    if (minEig < -symTol_)
        throw InvariantViolation("TraceClassOperator: smallest eigenvalue " +
                                 std::to_string(minEig) + " below -tolerance");
    if (trace() < 0.0) throw InvariantViolation("TraceClassOperator: negative trace");
}

double TraceClassOperator::quadForm(const HVec& y) const {
    require(y.size() == dim(), "quadForm: dimension mismatch");
    return y.dot(matrix_ * y);
}

HVec TraceClassOperator::apply(const HVec& y) const {
    require(y.size() == dim(), "apply: dimension mismatch");
    return matrix_ * y;
}

PathCH::PathCH(std::vector<double> knots, std::vector<HVec> values)
    : knots_(std::move(knots)), values_(std::move(values)) {
    require(knots_.size() >= 2 && knots_.size() == values_.size(),
            "PathCH: need matching knots/values with at least two knots");
    require(knots_.front() == 0.0 && knots_.back() == 1.0, "PathCH: knots must span [0,1]");
    for (std::size_t k = 1; k < knots_.size(); ++k)
        require(knots_[k] > knots_[k - 1], "PathCH: knots must be strictly increasing");
    const Eigen::Index d = values_.front().size();
    for (const auto& v : values_) {
        require(v.size() == d, "PathCH: values must share a dimension");
        require(v.allFinite(), "PathCH: values must be finite");
    }
}

HVec PathCH::eval(double t) const {
    require(t >= 0.0 && t <= 1.0, "PathCH::eval: t outside [0,1]");
    auto it = std::upper_bound(knots_.begin(), knots_.end(), t);
    if (it == knots_.end()) return values_.back();
    std::size_t hi = static_cast<std::size_t>(it - knots_.begin());
    if (hi == 0) return values_.front();
    std::size_t lo = hi - 1;
    if (t == knots_[lo]) return values_[lo];
    const double w = (t - knots_[lo]) / (knots_[hi] - knots_[lo]);
    return (1.0 - w) * values_[lo] + w * values_[hi];
}

double PathCH::supNorm() const {
    double best = 0.0;
    for (const auto& v : values_) best = std::max(best, v.norm());
    return best;
}

PathCH PathCH::fromIncrements(std::span<const HVec> increments, double scale) {
    require(!increments.empty(), "fromIncrements: need at least one increment");
    const std::size_t n = increments.size();
    const Eigen::Index d = increments.front().size();
    std::vector<double> knots(n + 1);
    std::vector<HVec> values(n + 1);
    knots[0] = 0.0;
    values[0] = HVec::Zero(d);
    HVec acc = HVec::Zero(d);
    for (std::size_t k = 0; k < n; ++k) {
        acc += increments[k];
        knots[k + 1] = static_cast<double>(k + 1) / static_cast<double>(n);
        values[k + 1] = scale * acc;
    }
    knots[n] = 1.0;
    return PathCH(std::move(knots), std::move(values));
}

}  // namespace mdlab
