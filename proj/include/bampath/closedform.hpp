#pragma once

#include <bampath/linalg.hpp>

#include <optional>
#include <string>
#include <vector>

namespace bampath {

/// delta_k * beta_OLS with delta_k = 1 - (1 - nu)^k. Throws rank_error when X
/// lacks full column rank.
Vector linear_boost_path(const Matrix& x, const Vector& y, double nu, int k);

/// 1 - (1 - nu)^k without cancellation for small nu.
double shrinkage_factor(double nu, int k);

/// Joint boosting iterate k for the base learner (X'X + lambda P)^{-1} X'.
///
/// With A = X'X + lambda P positive definite, the generalized eigenpairs
/// X'X v = s A v (V' A V = I) diagonalise the update, and the geometric sum
/// sum_{m<k} nu (I - nu S)^m collapses to V diag((1 - (1 - nu s)^k) / s) V' A.
/// lambda = 0 with rank-deficient X reduces to delta_k X^+ y.
Vector penalized_boost_path(const Matrix& x, const Vector& y, const Matrix& penalty,
                            double lambda, double nu, int k);

/// Limit of every boosting path above: X^+ y. The penalty arguments are
/// accepted for symmetry and deliberately ignored.
Vector boost_limit(const Matrix& x, const Vector& y, double lambda = 0.0,
                   const Matrix& penalty = {});

/// (X'X + lambda P)^{-1} X'y
Vector penalized_least_squares(const Matrix& x, const Vector& y, const Matrix& penalty,
                               double lambda);

struct ImplicitPenalty
{
    Matrix gamma;
    int k = 0;
    double nu = 0.0;
    double lambda = 0.0;
    Matrix s_lambda;          // (X'X + lambda P)^{-1} X'X
    Vector beta_gamma;        // (X'X + gamma)^{-1} X'y
    bool ill_conditioned = false;
    std::string warning;
};

/// Penalty matrix whose ridge-type solve reproduces boosting iterate k.
/// Requires full column rank X and k >= 1.
ImplicitPenalty implicit_penalty(const Matrix& x, const Vector& y, const Matrix& penalty,
                                 double lambda, double nu, int k);

/// Same matrix through explicit powers of (I - nu S)^{-1}; only for k <= 64.
Matrix implicit_penalty_direct(const Matrix& x, const Matrix& penalty, double lambda, double nu,
                               int k);

/// lambda~(k) = sigma2 (1-nu)^k / (1 - (1-nu)^k). With a ridge base-learner
/// penalty, the effective rate becomes nu sigma2 / (sigma2 + lambda).
double ridge_equivalent_lambda(double sigma2, double nu, int k,
                               std::optional<double> base_lambda = std::nullopt);

/// Ridge regression on a precomputed spectral decomposition of X'X.
class RidgePath
{
public:
    RidgePath(const Matrix& x, const Vector& y);

    Vector solve(double lambda) const;

    /// Distance from beta to the closest ridge solution on the grid, refined
    /// by a bracketed 1-D minimisation around the best grid point.
    struct Nearest
    {
        double distance = 0.0;
        double lambda = 0.0;
        double grid_distance = 0.0;
    };
    Nearest nearest(const Vector& beta, const std::vector<double>& grid, bool refine = true) const;

private:
    Matrix q_;
    Vector eval_;
    Vector qtxy_;
};

/// n points log-spaced on [lo, hi].
std::vector<double> log_grid(double lo, double hi, int n);

} // namespace bampath
