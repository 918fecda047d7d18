#pragma once

#include <bampath/boost.hpp>

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace bampath {

/// Gaussian location-scale regression: mean x' beta, log standard deviation z' xi.
struct GaussianLSModel
{
    Matrix x;
    Matrix z;
    Vector beta;
    Vector xi;
};

struct LSEval
{
    double nll = 0.0;
    Vector grad_beta;
    Vector grad_xi;
};

/// nll = n/2 log(2 pi) + sum [z'xi + r^2 / (2 sigma^2)]. Throws numeric_error
/// (with the observation index) when 2 |z'xi| exceeds the exponent limit.
LSEval gauss_ls_eval(const GaussianLSModel& model, const Vector& y);

struct LSHessian
{
    Matrix bb;   // sum x x' / sigma^2
    Matrix bx;   // 2 sum (r / sigma^2) x z'
    Matrix xb;
    Matrix xx;   // 2 sum (r^2 / sigma^2) z z'

    Matrix full() const;
};

LSHessian gauss_ls_hessian(const GaussianLSModel& model, const Vector& y);

struct BiconvexityReport
{
    int trials = 0;
    double min_eig_bb = 0.0;
    double min_eig_xx = 0.0;
    bool biconvex = true;

    // lambda_max(H_xixi) along xi = t xi0 with z' xi0 < 0, for growing t
    std::vector<double> ray_t;
    std::vector<double> ray_lambda_max;
    bool ray_unbounded = false;

    // n = 1, x = z = beta = xi = 1, y = 2
    Vector counterexample_eigs;
    bool counterexample_indefinite = false;
};

/// Diagonal-block PSD check over random Gaussian instances plus the
/// non-smoothness ray and the indefinite counterexample.
BiconvexityReport biconvexity_check(int trials, std::uint64_t seed = 1, double eps = 1e-9);

struct LSBoostConfig
{
    double nu = 0.1;
    int max_iter = 100;
    bool update_scale = true;
    int window = 20;
};

struct LSBoostResult
{
    BoostPath mean;            // betas are beta, losses the nll after each mean step
    BoostPath scale;           // betas are xi, losses the nll after each scale step
    Verdict mean_verdict = Verdict::converging;
    Verdict scale_verdict = Verdict::converging;
    std::string error;
};

/// Cyclic boosting: one joint step for the mean model (working response
/// r / sigma^2), then one for the scale model (r^2 / sigma^2 - 1, the negative
/// gradient in z'xi). Numeric blow-ups stop the run and are recorded.
LSBoostResult cyclic_boost_ls(const Matrix& x, const Matrix& z, const Vector& y,
                              const LSBoostConfig& config);

/// Columns k, model, loss, coef_1..coef_m (m = max coefficient count).
void write_paired_csv(const std::filesystem::path& path, const LSBoostResult& result);

} // namespace bampath
