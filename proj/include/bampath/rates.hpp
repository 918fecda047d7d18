#pragma once

#include <bampath/boost.hpp>

#include <filesystem>
#include <optional>
#include <vector>

namespace bampath {

/// Eigenvalues at or below tau * lambda_max count as zero.
inline constexpr double pl_threshold = 1e-10;

/// Smallest non-zero eigenvalue of a symmetric PSD matrix. Throws
/// invalid_constant_error when every eigenvalue is below the threshold.
double pl_constant(const Matrix& q, double tau = pl_threshold);

/// 1 - nu (2 - nu) / |B| * lambda_pmin(Q) / lambda_max(Q)
double rate_quadratic(const Matrix& q, std::size_t blocks, double nu);

/// 1 - nu mu / (L_B |B|)
double rate_general(double mu, double l_b, std::size_t blocks, double nu);

/// max_b lambda_max(X_b' X_b)
double block_lipschitz(const BlockPartition& partition);

struct RateRow
{
    int k = 0;
    double gap = 0.0;
    double bound = 0.0;
    bool compliant = true;
};

struct RateReport
{
    double mu = 0.0;
    double l = 0.0;
    double l_b = 0.0;
    std::size_t blocks = 0;
    double nu = 0.0;
    double gamma = 0.0;
    bool already_optimal = false;
    std::vector<RateRow> rows;

    bool all_compliant() const;
    std::optional<int> first_violation() const;
};

/// gap_k <= gamma^k gap_0 + 1e-9 gap_0 at every recorded iterate.
RateReport check_bound(const BoostPath& path, double gamma, double l_star);

/// Columns k, gap, bound, compliant.
void write_rate_csv(const std::filesystem::path& path, const RateReport& report);

/// Optimal L2 loss 1/2 ||y - X X^+ y||^2.
double l2_optimal_loss(const Matrix& x, const Vector& y);

/// Optimum of a canonical-link loss in beta by damped Newton iterations with
/// backtracking; f = X beta (no offset).
struct NewtonResult
{
    Vector beta;
    double loss = 0.0;
    double grad_norm = 0.0;
    int iterations = 0;
};
NewtonResult newton_optimum(const LossSpec& loss, const Matrix& x, const Vector& y,
                            int max_iter = 200, double grad_tol = 1e-11);

/// Smallest loss of a long boosting reference run (10 x max_iter).
double reference_optimum(const BlockPartition& partition, const LossSpec& loss, const Vector& y,
                         BoostConfig config);

struct HessianCheck
{
    bool violated = false;
    int k = -1;                 // first violating iterate
    int block = -1;
    double worst = 0.0;         // largest nu * lambda_max ratio seen
    bool rank_warning = false;  // some X_b'X_b was singular
    std::vector<double> per_iterate;  // max over blocks of nu * lambda_max at each k
};

/// Along the path, checks lambda_max(G^{-1/2} X_b' W X_b G^{-1/2}) <= 1/nu with
/// G = X_b' X_b, i.e. that (1/nu) G bounds the block Hessian. A singular G
/// falls back to its pseudo-inverse square root on the range and sets the
/// warning flag.
HessianCheck hessian_ub_check(const LossSpec& loss, const BlockPartition& partition, double nu,
                              const BoostPath& path);

} // namespace bampath
