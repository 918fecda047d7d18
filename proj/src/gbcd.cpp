#include <bampath/gbcd.hpp>
#include <bampath/error.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace bampath {

void GbcdConfig::validate() const
{
    if (!(nu > 0.0 && nu <= 1.0)) throw config_error("nu must lie in (0, 1]");
    if (max_iter < 0) throw config_error("max_iter must be nonnegative");
}

double partition_penalty(const BlockPartition& partition, const Vector& beta)
{
    double s = 0.0;
    for (std::size_t b = 0; b < partition.size(); ++b) {
        const auto& blk = partition.blocks[b];
        if (blk.lambda == 0.0) continue;
        const Vector bb = partition.gather(beta, b);
        s += 0.5 * blk.lambda * bb.dot(blk.penalty * bb);
    }
    return s;
}

namespace {

struct BlockMetric
{
    Eigen::LDLT<Matrix> ldlt;
    double scalar = 0.0;     // > 0 for the lipschitz_scalar choice

    Vector apply_inverse(const Vector& g) const
    {
        return scalar > 0.0 ? Vector(g / scalar) : Vector(ldlt.solve(g));
    }
};

BlockMetric make_metric(const DesignBlock& blk, const GbcdConfig& config)
{
    BlockMetric m;
    const Matrix gram = linalg::gram(blk.x);
    const Matrix pen_gram = blk.penalized_gram();
    switch (config.h_choice) {
    case HChoice::lipschitz_scalar:
        m.scalar = linalg::lambda_max(config.gradient_of == GradientOf::penalized ? pen_gram : gram);
        if (!(m.scalar > 0.0)) {
            throw linalg_error("block " + std::to_string(blk.id) + ": zero Lipschitz constant");
        }
        return m;
    case HChoice::block_gram: m.ldlt.compute(gram); break;
    case HChoice::penalized_gram: m.ldlt.compute(pen_gram); break;
    }
    const Vector d = m.ldlt.vectorD();
    const double tol = static_cast<double>(d.size()) * std::numeric_limits<double>::epsilon()
                       * std::max(d.cwiseAbs().maxCoeff(), 0.0);
    if (m.ldlt.info() != Eigen::Success || !(d.minCoeff() > tol)) {
        throw linalg_error("block " + std::to_string(blk.id) + ": H_b is not positive definite");
    }
    return m;
}

} // namespace

BoostPath gbcd_gsq(const BlockPartition& partition, const LossSpec& loss, const Vector& y,
                   const GbcdConfig& config)
{
    config.validate();
    loss.validate(y);
    if (loss.size(y) != partition.n) {
        throw domain_error("gbcd_gsq: outcome length does not match design rows");
    }
    std::vector<BlockMetric> metrics;
    for (const auto& blk : partition.blocks) metrics.push_back(make_metric(blk, config));

    const bool penalized = config.gradient_of == GradientOf::penalized;
    const Matrix& x = partition.x;
    const Matrix joint_pen = penalized ? partition.joint_penalty() : Matrix();

    Vector beta = Vector::Zero(partition.p);
    BoostPath path;
    Vector grad;
    auto record = [&](int selected) {
        const Vector f = x * beta;
        grad = -(x.transpose() * neg_functional_gradient(loss, y, f));
        double value = loss_value(loss, y, f);
        if (penalized) {
            grad += joint_pen * beta;
            value += partition_penalty(partition, beta);
        }
        path.betas.push_back(beta);
        path.losses.push_back(value);
        path.selected.push_back(selected);
        path.grad_norms.push_back(grad.norm());
    };
    record(-1);

    for (int k = 1; k <= config.max_iter; ++k) {
        std::size_t best = 0;
        double best_score = -1.0;
        Vector best_step;
        for (std::size_t b = 0; b < partition.size(); ++b) {
            const Vector gb = partition.gather(grad, b);
            Vector step = metrics[b].apply_inverse(gb);
            const double score = gb.dot(step);
            if (score > best_score) {
                best_score = score;
                best = b;
                best_step = std::move(step);
            }
        }
        partition.scatter_add(beta, best, best_step, -config.nu);
        record(static_cast<int>(best));
    }
    path.terminated_by = Termination::max_iter;
    return path;
}

std::string EquivalenceReport::summary() const
{
    if (identical) {
        return stationary_from < 0 ? "identical"
                                   : "identical until stationary at k=" + std::to_string(stationary_from);
    }
    return "differ at k=" + std::to_string(first_difference) + (detail.empty() ? "" : ": " + detail);
}

EquivalenceReport compare_paths(const BoostPath& a, const BoostPath& b, double tol,
                                double stationary_rel)
{
    EquivalenceReport rep;
    const std::size_t n = std::min(a.betas.size(), b.betas.size());
    for (std::size_t k = 0; k < n; ++k) {
        if (stationary_rel > 0.0 && k < a.grad_norms.size() && k < b.grad_norms.size()
            && a.grad_norms[k] <= stationary_rel * a.grad_norms.front()
            && b.grad_norms[k] <= stationary_rel * b.grad_norms.front()) {
            rep.stationary_from = static_cast<int>(k);
            return rep;
        }
        if (a.selected[k] != b.selected[k]) {
            rep.identical = false;
            rep.first_difference = static_cast<int>(k);
            rep.detail = "selected block " + std::to_string(a.selected[k]) + " vs "
                         + std::to_string(b.selected[k]);
            return rep;
        }
        const double scale = std::max(1.0, b.betas[k].cwiseAbs().maxCoeff());
        const double diff = (a.betas[k] - b.betas[k]).cwiseAbs().maxCoeff();
        if (diff > tol * scale) {
            rep.identical = false;
            rep.first_difference = static_cast<int>(k);
            std::ostringstream os;
            os << "max coefficient difference " << diff;
            rep.detail = os.str();
            return rep;
        }
    }
    if (a.betas.size() != b.betas.size()) {
        rep.identical = false;
        rep.first_difference = static_cast<int>(n);
        rep.detail = "path lengths differ";
    }
    return rep;
}

EquivalenceReport equivalence_check(const BlockPartition& partition, const Vector& y, int k,
                                    double nu, HChoice h_choice, GradientOf gradient_of,
                                    double tol, double stationary_rel)
{
    if (k <= 0) return {};
    BoostConfig bc;
    bc.nu = nu;
    bc.max_iter = k;
    bc.mode = BoostMode::greedy;
    bc.selection = h_choice == HChoice::penalized_gram ? SelectionCriterion::penalized_sse
                                                       : SelectionCriterion::sse;
    const BoostPath boosted = run_boost(partition, LossSpec::l2(), y, bc);

    GbcdConfig gc;
    gc.nu = nu;
    gc.max_iter = k;
    gc.h_choice = h_choice;
    gc.gradient_of = gradient_of;
    const BoostPath descended = gbcd_gsq(partition, LossSpec::l2(), y, gc);
    return compare_paths(boosted, descended, tol, stationary_rel);
}

} // namespace bampath
