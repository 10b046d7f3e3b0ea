#pragma once

#include <Eigen/Dense>
#include <span>
#include <vector>

#include "mdlab/common.hpp"

namespace mdlab {

/// Element of the truncated Hilbert space: coordinates against a fixed
/// orthonormal basis e_1..e_m. The truncation dimension m is an experiment
/// parameter; all operators and rate functions live in the same truncation.
using HVec = Eigen::VectorXd;

/// <x,y>; throws on dimension mismatch.
double inner(const HVec& x, const HVec& y);

double norm(const HVec& x);

/// Projection on the first m basis components; 1 <= m <= x.size().
HVec project(const HVec& x, Eigen::Index m);

/// Symmetric positive-semidefinite matrix with finite trace. Symmetry is
/// checked entrywise against symTol (default 1e-10 * max|entry|); the
/// smallest eigenvalue must be >= -symTol.
class TraceClassOperator {
public:
    explicit TraceClassOperator(Eigen::MatrixXd m, double symTol = -1.0);

    Eigen::Index dim() const { return matrix_.rows(); }
    const Eigen::MatrixXd& matrix() const { return matrix_; }
    double trace() const { return matrix_.trace(); }
    double symTol() const { return symTol_; }

    double quadForm(const HVec& y) const;  // <y, Q y>
    HVec apply(const HVec& y) const;       // Q y

private:
    Eigen::MatrixXd matrix_;
    double symTol_;
};

/// Continuous piecewise-linear path [0,1] -> H, stored as strictly
/// increasing knots t_0=0 < ... < t_K=1 with one vector per knot.
class PathCH {
public:
    PathCH(std::vector<double> knots, std::vector<HVec> values);

    /// Linear interpolation; exact at knots; t must lie in [0,1].
    HVec eval(double t) const;

    const std::vector<double>& knots() const { return knots_; }
    const std::vector<HVec>& values() const { return values_; }
    Eigen::Index dim() const { return values_.front().size(); }

    /// sup_{t in [0,1]} ||path(t)||. The norm is convex along each linear
    /// segment, so the sup is attained at a knot.
    double supNorm() const;

    /// Polygonal path through the scaled partial sums of the increments:
    /// knots k/n, value at k/n equal to scale * (x_1 + ... + x_k).
    static PathCH fromIncrements(std::span<const HVec> increments, double scale);

private:
    std::vector<double> knots_;
    std::vector<HVec> values_;
};

}  // namespace mdlab
