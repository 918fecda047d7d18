#include <bampath/closedform.hpp>
#include <bampath/error.hpp>

#include <boost/math/tools/minima.hpp>

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>

namespace bampath {

namespace {

void check_nu_k(double nu, int k)
{
    if (!(nu > 0.0 && nu <= 1.0)) throw domain_error("nu must lie in (0, 1]");
    if (k < 0) throw domain_error("iteration count must be nonnegative");
}

Matrix penalized_system(const Matrix& x, const Matrix& penalty, double lambda)
{
    Matrix a = linalg::gram(x);
    if (lambda > 0.0) {
        if (penalty.rows() != x.cols() || penalty.cols() != x.cols()) {
            throw domain_error("penalty dimension does not match design columns");
        }
        a += lambda * penalty;
    }
    return a;
}

// Generalized eigenpairs of (X'X, X'X + lambda P), normalised to V' A V = I.
struct GenEig
{
    Vector s;
    Matrix v;
    Matrix a;
};

GenEig generalized_eig(const Matrix& x, const Matrix& penalty, double lambda)
{
    GenEig out;
    out.a = penalized_system(x, penalty, lambda);
    Eigen::LLT<Matrix> llt(out.a);
    const Vector ev = linalg::sym_eigenvalues(out.a);
    const double tol = static_cast<double>(std::max(x.rows(), x.cols()))
                       * std::numeric_limits<double>::epsilon() * ev.maxCoeff();
    if (llt.info() != Eigen::Success || !(ev.minCoeff() > tol)) {
        throw linalg_error("X'X + lambda P is singular");
    }
    Eigen::GeneralizedSelfAdjointEigenSolver<Matrix> ges(linalg::gram(x), out.a,
                                                         Eigen::ComputeEigenvectors | Eigen::Ax_lBx);
    if (ges.info() != Eigen::Success) throw linalg_error("generalized eigensolver failed");
    out.s = ges.eigenvalues();
    out.v = ges.eigenvectors();
    return out;
}

} // namespace

double shrinkage_factor(double nu, int k)
{
    if (k == 0) return 0.0;
    if (nu >= 1.0) return 1.0;
    return -std::expm1(static_cast<double>(k) * std::log1p(-nu));
}

Vector linear_boost_path(const Matrix& x, const Vector& y, double nu, int k)
{
    check_nu_k(nu, k);
    if (!linalg::has_full_column_rank(x)) {
        throw rank_error("linear_boost_path requires full column rank; use penalized_boost_path "
                         "or boost_limit");
    }
    return shrinkage_factor(nu, k) * linalg::min_norm_solve(x, y);
}

Vector penalized_boost_path(const Matrix& x, const Vector& y, const Matrix& penalty,
                            double lambda, double nu, int k)
{
    check_nu_k(nu, k);
    if (!(lambda >= 0.0)) throw domain_error("lambda must be nonnegative");
    if (lambda == 0.0) return shrinkage_factor(nu, k) * linalg::min_norm_solve(x, y);

    const GenEig ge = generalized_eig(x, penalty, lambda);
    Vector g(ge.s.size());
    for (Index i = 0; i < g.size(); ++i) {
        const double s = ge.s(i);
        g(i) = s == 0.0 ? nu * k : shrinkage_factor(nu * s, k) / s;
    }
    return ge.v * (g.asDiagonal() * (ge.v.transpose() * (x.transpose() * y)));
}

Vector boost_limit(const Matrix& x, const Vector& y, double, const Matrix&)
{
    return linalg::min_norm_solve(x, y);
}

Vector penalized_least_squares(const Matrix& x, const Vector& y, const Matrix& penalty,
                               double lambda)
{
    const Matrix a = penalized_system(x, penalty, lambda);
    Eigen::CompleteOrthogonalDecomposition<Matrix> cod(a);
    if (cod.rank() < a.rows()) throw linalg_error("X'X + lambda P is singular");
    return cod.solve(x.transpose() * y);
}

ImplicitPenalty implicit_penalty(const Matrix& x, const Vector& y, const Matrix& penalty,
                                 double lambda, double nu, int k)
{
    check_nu_k(nu, k);
    if (k < 1) throw domain_error("implicit_penalty requires k >= 1");
    if (!linalg::has_full_column_rank(x)) {
        throw rank_error("implicit_penalty requires full column rank");
    }
    const Matrix pen = penalty.size() ? penalty : Matrix::Zero(x.cols(), x.cols());
    const GenEig ge = generalized_eig(x, pen, lambda);

    ImplicitPenalty out;
    out.k = k;
    out.nu = nu;
    out.lambda = lambda;
    const Matrix xtx = linalg::gram(x);
    out.s_lambda = Eigen::CompleteOrthogonalDecomposition<Matrix>(ge.a).solve(xtx);

    // s_i d_i with d_i = q^k / (1 - q^k), q = 1 - nu s_i; never forms q^{-k}.
    Vector sd(ge.s.size());
    double largest_d = 0.0;
    for (Index i = 0; i < sd.size(); ++i) {
        const double s = ge.s(i);
        const double qk = std::pow(std::max(0.0, 1.0 - nu * s), k);
        const double d = qk / shrinkage_factor(nu * s, k);
        largest_d = std::max(largest_d, d);
        sd(i) = s * d;
    }
    const Matrix av = ge.a * ge.v;
    out.gamma = av * sd.asDiagonal() * av.transpose();
    out.gamma = (0.5 * (out.gamma + out.gamma.transpose())).eval();

    if (largest_d < std::numeric_limits<double>::epsilon()) {
        out.ill_conditioned = true;
        out.warning = "implicit penalty is below machine precision relative to X'X; "
                      "(I - nu S)^{-k} - I is numerically unbounded";
    }
    out.beta_gamma = Eigen::CompleteOrthogonalDecomposition<Matrix>(xtx + out.gamma)
                         .solve(x.transpose() * y);
    return out;
}

Matrix implicit_penalty_direct(const Matrix& x, const Matrix& penalty, double lambda, double nu,
                               int k)
{
    check_nu_k(nu, k);
    if (k < 1 || k > 64) throw domain_error("direct implicit penalty supports 1 <= k <= 64");
    const Matrix pen = penalty.size() ? penalty : Matrix::Zero(x.cols(), x.cols());
    const Matrix a = penalized_system(x, pen, lambda);
    const Matrix xtx = linalg::gram(x);
    const Index p = x.cols();

    const Matrix s = a.partialPivLu().solve(xtx);
    const Matrix t = Matrix::Identity(p, p) - nu * s;
    Eigen::FullPivLU<Matrix> t_lu(t);
    if (!t_lu.isInvertible()) throw linalg_error("I - nu S is singular");
    const Matrix t_inv = t_lu.inverse();
    Matrix mk = Matrix::Identity(p, p);
    for (int i = 0; i < k; ++i) mk = (mk * t_inv).eval();
    mk -= Matrix::Identity(p, p);
    // X'X S^{-1} = A
    return a * mk.fullPivLu().solve(s);
}

double ridge_equivalent_lambda(double sigma2, double nu, int k, std::optional<double> base_lambda)
{
    if (!(sigma2 > 0.0)) throw domain_error("sigma2 must be positive");
    if (k == 0) throw domain_error("ridge_equivalent_lambda: k = 0 divides by zero");
    check_nu_k(nu, k);
    double rate = nu;
    if (base_lambda) {
        if (!(*base_lambda >= 0.0)) throw domain_error("base lambda must be nonnegative");
        rate = nu * sigma2 / (sigma2 + *base_lambda);
    }
    const double qk = std::pow(1.0 - rate, k);
    return sigma2 * qk / shrinkage_factor(rate, k);
}

RidgePath::RidgePath(const Matrix& x, const Vector& y)
{
    Eigen::SelfAdjointEigenSolver<Matrix> es(linalg::gram(x));
    q_ = es.eigenvectors();
    eval_ = es.eigenvalues();
    qtxy_ = q_.transpose() * (x.transpose() * y);
}

Vector RidgePath::solve(double lambda) const
{
    return q_ * (qtxy_.array() / (eval_.array() + lambda)).matrix();
}

RidgePath::Nearest RidgePath::nearest(const Vector& beta, const std::vector<double>& grid,
                                      bool refine) const
{
    if (grid.empty()) throw domain_error("ridge grid is empty");
    Nearest out;
    out.grid_distance = std::numeric_limits<double>::infinity();
    std::size_t best = 0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double d = (solve(grid[i]) - beta).norm();
        if (d < out.grid_distance) {
            out.grid_distance = d;
            best = i;
        }
    }
    out.distance = out.grid_distance;
    out.lambda = grid[best];
    if (!refine || grid.size() < 2) return out;

    const double lo = std::log(grid[best == 0 ? 0 : best - 1]);
    const double hi = std::log(grid[std::min(best + 1, grid.size() - 1)]);
    auto dist = [&](double log_lambda) { return (solve(std::exp(log_lambda)) - beta).norm(); };
    const auto [arg, val] = boost::math::tools::brent_find_minima(dist, lo, hi, 52);
    if (val < out.distance) {
        out.distance = val;
        out.lambda = std::exp(arg);
    }
    return out;
}

std::vector<double> log_grid(double lo, double hi, int n)
{
    if (!(lo > 0.0 && hi > lo) || n < 2) throw domain_error("log_grid: need 0 < lo < hi, n >= 2");
    std::vector<double> g(static_cast<std::size_t>(n));
    const double a = std::log(lo);
    const double b = std::log(hi);
    for (int i = 0; i < n; ++i) g[static_cast<std::size_t>(i)] = std::exp(a + (b - a) * i / (n - 1));
    g.front() = lo;
    g.back() = hi;
    return g;
}

} // namespace bampath
