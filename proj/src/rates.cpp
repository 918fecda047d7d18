#include <bampath/rates.hpp>
#include <bampath/csv.hpp>
#include <bampath/error.hpp>

#include <algorithm>
#include <cmath>
#include <limits>

namespace bampath {

double pl_constant(const Matrix& q, double tau)
{
    if (q.rows() != q.cols() || q.size() == 0) {
        throw invalid_constant_error("pl_constant: matrix must be square and nonempty");
    }
    const Vector ev = linalg::sym_eigenvalues(q);
    const double top = ev.maxCoeff();
    if (!(top > 0.0)) throw invalid_constant_error("pl_constant: no positive eigenvalue");
    for (Index i = 0; i < ev.size(); ++i) {
        if (ev(i) > tau * top) return ev(i);
    }
    throw invalid_constant_error("pl_constant: no positive eigenvalue");
}

double rate_quadratic(const Matrix& q, std::size_t blocks, double nu)
{
    if (blocks == 0) throw invalid_constant_error("rate_quadratic: no blocks");
    if (!(nu > 0.0 && nu <= 1.0)) throw invalid_constant_error("nu must lie in (0, 1]");
    const double mu = pl_constant(q);
    const double top = linalg::lambda_max(q);
    return 1.0 - nu * (2.0 - nu) / static_cast<double>(blocks) * (mu / top);
}

double rate_general(double mu, double l_b, std::size_t blocks, double nu)
{
    if (!(mu > 0.0)) throw invalid_constant_error("rate_general: mu must be positive");
    if (!(l_b >= mu)) throw invalid_constant_error("rate_general: L_B must be at least mu");
    if (blocks == 0) throw invalid_constant_error("rate_general: no blocks");
    if (!(nu > 0.0 && nu <= 1.0)) throw invalid_constant_error("nu must lie in (0, 1]");
    return 1.0 - nu * mu / (l_b * static_cast<double>(blocks));
}

double block_lipschitz(const BlockPartition& partition)
{
    double l = 0.0;
    for (const auto& b : partition.blocks) l = std::max(l, linalg::lambda_max(linalg::gram(b.x)));
    return l;
}

bool RateReport::all_compliant() const
{
    return std::all_of(rows.begin(), rows.end(), [](const RateRow& r) { return r.compliant; });
}

std::optional<int> RateReport::first_violation() const
{
    for (const auto& r : rows) {
        if (!r.compliant) return r.k;
    }
    return std::nullopt;
}

RateReport check_bound(const BoostPath& path, double gamma, double l_star)
{
    RateReport rep;
    rep.gamma = gamma;
    if (path.losses.empty()) return rep;
    const double gap0 = path.losses.front() - l_star;
    if (!(gap0 > 0.0)) {
        rep.already_optimal = true;
        return rep;
    }
    const double slack = 1e-9 * gap0;
    for (std::size_t k = 0; k < path.losses.size(); ++k) {
        RateRow row;
        row.k = static_cast<int>(k);
        row.gap = path.losses[k] - l_star;
        row.bound = std::pow(gamma, static_cast<double>(k)) * gap0;
        row.compliant = row.gap <= row.bound + slack;
        rep.rows.push_back(row);
    }
    return rep;
}

void write_rate_csv(const std::filesystem::path& file, const RateReport& report)
{
    csv::Writer w(file, {"k", "gap", "bound", "compliant"});
    for (const auto& r : report.rows) {
        w.cell(r.k).cell(r.gap).cell(r.bound).cell(r.compliant ? 1 : 0);
        w.end_row();
    }
}

double l2_optimal_loss(const Matrix& x, const Vector& y)
{
    const Vector beta = linalg::min_norm_solve(x, y);
    return 0.5 * (y - x * beta).squaredNorm();
}

NewtonResult newton_optimum(const LossSpec& loss, const Matrix& x, const Vector& y, int max_iter,
                            double grad_tol)
{
    loss.validate(y);
    NewtonResult out;
    out.beta = Vector::Zero(x.cols());
    GradientEval ev = evaluate(loss, y, x * out.beta);
    const double grad0 = std::max((x.transpose() * ev.y_tilde).norm(), 1.0);
    for (int it = 0; it < max_iter; ++it) {
        const Vector grad = -(x.transpose() * ev.y_tilde);
        out.grad_norm = grad.norm();
        out.iterations = it;
        if (out.grad_norm <= grad_tol * grad0) break;
        const Matrix h = weighted_gram(x, ev.w);
        const Vector step = Eigen::CompleteOrthogonalDecomposition<Matrix>(h).solve(-grad);
        double t = 1.0;
        bool accepted = false;
        for (int ls = 0; ls < 60; ++ls, t *= 0.5) {
            const Vector cand = out.beta + t * step;
            try {
                GradientEval cev = evaluate(loss, y, x * cand);
                if (cev.value <= ev.value + 1e-4 * t * grad.dot(step)) {
                    out.beta = cand;
                    ev = std::move(cev);
                    accepted = true;
                    break;
                }
            } catch (const numeric_error&) {
                // overflow at the trial point: shrink the step
            }
        }
        if (!accepted) break;
    }
    out.loss = ev.value;
    out.grad_norm = (x.transpose() * ev.y_tilde).norm();
    return out;
}

double reference_optimum(const BlockPartition& partition, const LossSpec& loss, const Vector& y,
                         BoostConfig config)
{
    config.max_iter *= 10;
    config.stop_tol = 0.0;
    const BoostPath ref = run_boost(partition, loss, y, config);
    return *std::min_element(ref.losses.begin(), ref.losses.end());
}

HessianCheck hessian_ub_check(const LossSpec& loss, const BlockPartition& partition, double nu,
                              const BoostPath& path)
{
    if (!(nu > 0.0 && nu <= 1.0)) throw config_error("nu must lie in (0, 1]");
    HessianCheck out;
    std::vector<Matrix> roots;
    for (const auto& b : partition.blocks) {
        bool rd = false;
        roots.push_back(linalg::pinv_sqrt_psd(linalg::gram(b.x), 1e-12, &rd));
        out.rank_warning = out.rank_warning || rd;
    }
    // Roundoff allowance: for L2 the ratio is exactly 1 = 1/nu at nu = 1.
    const double limit = (1.0 / nu) * (1.0 + 1e-9);
    for (std::size_t k = 0; k < path.betas.size(); ++k) {
        Vector f = partition.x * path.betas[k];
        f.array() += path.offset;
        const HessianWeights w = hessian_weights(loss, f);
        double worst_here = 0.0;
        for (std::size_t b = 0; b < partition.size(); ++b) {
            const Matrix m = weighted_gram(partition.blocks[b].x, w);
            const double ratio = linalg::lambda_max(roots[b] * m * roots[b]);
            worst_here = std::max(worst_here, nu * ratio);
            if (!out.violated && ratio > limit) {
                out.violated = true;
                out.k = static_cast<int>(k);
                out.block = static_cast<int>(b);
            }
        }
        out.per_iterate.push_back(worst_here);
        out.worst = std::max(out.worst, worst_here);
    }
    return out;
}

} // namespace bampath
