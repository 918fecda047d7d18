#pragma once

#include <Eigen/Dense>

namespace bampath {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

namespace linalg {

/// Ascending eigenvalues of a symmetric matrix (only the lower triangle is read).
Vector sym_eigenvalues(const Matrix& q);

double lambda_max(const Matrix& q);

/// Singular-value cutoff max(n, p) * eps * sigma_max.
double pinv_threshold(Index rows, Index cols, double sigma_max);

/// Moore-Penrose pseudo-inverse via SVD with the cutoff above.
Matrix pseudo_inverse(const Matrix& x);

/// Numerical rank under the same cutoff.
Index numerical_rank(const Matrix& x);

bool has_full_column_rank(const Matrix& x);

/// X^+ y, the minimum-norm least-squares solution.
Vector min_norm_solve(const Matrix& x, const Vector& y);

inline Matrix gram(const Matrix& x) { return x.transpose() * x; }

/// max |A - A^T| <= tol * (1 + max |A|)
bool is_symmetric(const Matrix& a, double tol = 1e-9);

/// Symmetric square root of the pseudo-inverse of a PSD matrix, restricted to
/// eigenvalues above `rel_tol * lambda_max`. Sets `rank_deficient` when any
/// eigenvalue was dropped.
Matrix pinv_sqrt_psd(const Matrix& g, double rel_tol, bool* rank_deficient = nullptr);

/// Relative distance ||a - b|| / max(||b||, floor).
double rel_diff(const Vector& a, const Vector& b, double floor = 1e-300);

} // namespace linalg
} // namespace bampath
