#include <bampath/linalg.hpp>

#include <algorithm>
#include <limits>

namespace bampath::linalg {

Vector sym_eigenvalues(const Matrix& q)
{
    Eigen::SelfAdjointEigenSolver<Matrix> es(q, Eigen::EigenvaluesOnly);
    return es.eigenvalues();
}

double lambda_max(const Matrix& q)
{
    if (q.size() == 0) return 0.0;
    return sym_eigenvalues(q).maxCoeff();
}

double pinv_threshold(Index rows, Index cols, double sigma_max)
{
    return static_cast<double>(std::max(rows, cols)) * std::numeric_limits<double>::epsilon()
           * sigma_max;
}

Matrix pseudo_inverse(const Matrix& x)
{
    Eigen::BDCSVD<Matrix> svd(x, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Vector& s = svd.singularValues();
    const double cut = pinv_threshold(x.rows(), x.cols(), s.size() ? s(0) : 0.0);
    Vector s_inv = Vector::Zero(s.size());
    for (Index i = 0; i < s.size(); ++i) {
        if (s(i) > cut) s_inv(i) = 1.0 / s(i);
    }
    return svd.matrixV() * s_inv.asDiagonal() * svd.matrixU().transpose();
}

Index numerical_rank(const Matrix& x)
{
    if (x.size() == 0) return 0;
    Eigen::BDCSVD<Matrix> svd(x);
    const Vector& s = svd.singularValues();
    const double cut = pinv_threshold(x.rows(), x.cols(), s(0));
    return (s.array() > cut).count();
}

bool has_full_column_rank(const Matrix& x)
{
    return numerical_rank(x) == x.cols();
}

Vector min_norm_solve(const Matrix& x, const Vector& y)
{
    return pseudo_inverse(x) * y;
}

bool is_symmetric(const Matrix& a, double tol)
{
    if (a.rows() != a.cols()) return false;
    if (a.size() == 0) return true;
    const double scale = 1.0 + a.cwiseAbs().maxCoeff();
    return (a - a.transpose()).cwiseAbs().maxCoeff() <= tol * scale;
}

Matrix pinv_sqrt_psd(const Matrix& g, double rel_tol, bool* rank_deficient)
{
    Eigen::SelfAdjointEigenSolver<Matrix> es(g);
    const Vector& ev = es.eigenvalues();
    const double cut = rel_tol * std::max(ev.maxCoeff(), 0.0);
    Vector d = Vector::Zero(ev.size());
    bool dropped = false;
    for (Index i = 0; i < ev.size(); ++i) {
        if (ev(i) > cut && ev(i) > 0.0) {
            d(i) = 1.0 / std::sqrt(ev(i));
        } else {
            dropped = true;
        }
    }
    if (rank_deficient) *rank_deficient = dropped;
    return es.eigenvectors() * d.asDiagonal() * es.eigenvectors().transpose();
}

double rel_diff(const Vector& a, const Vector& b, double floor)
{
    return (a - b).norm() / std::max(b.norm(), floor);
}

} // namespace bampath::linalg
