#include <bampath/boost.hpp>
#include <bampath/csv.hpp>
#include <bampath/error.hpp>
#include <bampath/rng.hpp>

#include <algorithm>
#include <cmath>
#include <limits>

namespace bampath {

std::string_view to_string(BoostMode mode)
{
    switch (mode) {
    case BoostMode::joint: return "joint";
    case BoostMode::greedy: return "greedy";
    case BoostMode::cyclic: return "cyclic";
    }
    return "unknown";
}

std::string_view to_string(Termination t)
{
    switch (t) {
    case Termination::max_iter: return "max_iter";
    case Termination::tol: return "tol";
    case Termination::divergence: return "divergence";
    }
    return "unknown";
}

std::string_view to_string(Verdict v)
{
    switch (v) {
    case Verdict::converging: return "converging";
    case Verdict::oscillating: return "oscillating";
    case Verdict::diverging: return "diverging";
    }
    return "unknown";
}

void BoostConfig::validate() const
{
    if (!(nu > 0.0 && nu <= 1.0)) throw config_error("nu must lie in (0, 1]");
    if (max_iter < 1) throw config_error("max_iter must be at least 1");
    if (!(stop_tol >= 0.0)) throw config_error("stop_tol must be nonnegative");
    if (!(divergence_factor > 1.0)) throw config_error("divergence_factor must exceed 1");
}

BlockSolver::BlockSolver(const DesignBlock& block) : block_(&block)
{
    const Matrix a = block.penalized_gram();
    cod_.setThreshold(std::max<double>(1.0, static_cast<double>(a.rows()))
                      * std::numeric_limits<double>::epsilon());
    cod_.compute(a);
    rank_deficient_ = cod_.rank() < a.rows();
    if (rank_deficient_ && block.lambda > 0.0) {
        throw linalg_error("block " + std::to_string(block.id)
                           + ": penalized system X'X + lambda P is singular");
    }
}

Vector BlockSolver::solve(const Vector& rhs) const
{
    return cod_.solve(rhs);
}

BlockFit BlockSolver::fit(const Vector& y_tilde) const
{
    if (y_tilde.size() != block_->rows()) {
        throw domain_error("fit_block: working response length does not match block rows");
    }
    BlockFit out;
    const Vector xty = block_->x.transpose() * y_tilde;
    out.beta = solve(xty);
    out.reduction = xty.dot(out.beta);
    out.sse = (y_tilde - block_->x * out.beta).squaredNorm();
    if (block_->lambda > 0.0) {
        out.penalty = block_->lambda * out.beta.dot(block_->penalty * out.beta);
    }
    return out;
}

BlockFit fit_block(const DesignBlock& block, const Vector& y_tilde)
{
    return BlockSolver(block).fit(y_tilde);
}

std::size_t select_block(const std::vector<BlockSolver>& solvers, const Vector& y_tilde,
                         SelectionCriterion criterion, BlockFit* winner)
{
    if (solvers.empty()) throw partition_error("select_block: empty partition");
    std::size_t best = 0;
    BlockFit best_fit = solvers[0].fit(y_tilde);
    for (std::size_t b = 1; b < solvers.size(); ++b) {
        BlockFit f = solvers[b].fit(y_tilde);
        if (f.score(criterion) < best_fit.score(criterion)) {
            best = b;
            best_fit = std::move(f);
        }
    }
    if (winner) *winner = std::move(best_fit);
    return best;
}

std::size_t select_block(const BlockPartition& partition, const Vector& y_tilde,
                         SelectionCriterion criterion)
{
    std::vector<BlockSolver> solvers;
    solvers.reserve(partition.size());
    for (const auto& b : partition.blocks) solvers.emplace_back(b);
    return select_block(solvers, y_tilde, criterion);
}

BoostPath run_boost(const BlockPartition& partition, const LossSpec& loss, const Vector& y,
                    const BoostConfig& config)
{
    config.validate();
    loss.validate(y);
    if (loss.size(y) != partition.n) {
        throw domain_error("run_boost: outcome length does not match design rows");
    }

    // Joint mode works on a single all-columns block; keep it alive for its solver.
    const DesignBlock joint = config.mode == BoostMode::joint ? partition.joint_block() : DesignBlock{};
    std::vector<BlockSolver> solvers;
    if (config.mode == BoostMode::joint) {
        solvers.emplace_back(joint);
    } else {
        for (const auto& b : partition.blocks) solvers.emplace_back(b);
    }

    BoostPath path;
    path.offset = config.init == InitMode::offset ? canonical_offset(loss, y) : 0.0;
    const Matrix& x = partition.x;
    Vector beta = Vector::Zero(partition.p);
    Vector f = Vector::Constant(partition.n, path.offset);

    Vector y_tilde = neg_functional_gradient(loss, y, f);
    path.betas.push_back(beta);
    path.losses.push_back(loss_value(loss, y, f));
    path.selected.push_back(-1);
    path.grad_norms.push_back((x.transpose() * y_tilde).norm());
    const double loss0 = path.losses.front();
    const double blowup = (config.divergence_factor - 1.0)
                          * std::max(std::abs(loss0), std::numeric_limits<double>::min());

    for (int k = 1; k <= config.max_iter; ++k) {
        int chosen = -1;
        BlockFit fit;
        if (config.mode == BoostMode::joint) {
            fit = solvers[0].fit(y_tilde);
            beta += config.nu * fit.beta;
        } else {
            std::size_t b = 0;
            if (config.mode == BoostMode::greedy) {
                b = select_block(solvers, y_tilde, config.selection, &fit);
            } else {
                b = static_cast<std::size_t>(k - 1) % solvers.size();
                fit = solvers[b].fit(y_tilde);
            }
            partition.scatter_add(beta, b, fit.beta, config.nu);
            chosen = static_cast<int>(b);
        }
        f.noalias() = x * beta;
        f.array() += path.offset;

        double value = 0.0;
        try {
            value = loss_value(loss, y, f);
            y_tilde = neg_functional_gradient(loss, y, f);
        } catch (const numeric_error& e) {
            if (!config.divergence_guard) throw;
            path.terminated_by = Termination::divergence;
            path.error = e.what();
            return path;
        }
        path.betas.push_back(beta);
        path.losses.push_back(value);
        path.selected.push_back(chosen);
        path.grad_norms.push_back((x.transpose() * y_tilde).norm());

        if (config.divergence_guard && (!std::isfinite(value) || value - loss0 > blowup)) {
            path.terminated_by = Termination::divergence;
            return path;
        }
        const double decrease = path.losses[path.losses.size() - 2] - value;
        if (config.stop_tol > 0.0 && decrease < config.stop_tol) {
            path.terminated_by = Termination::tol;
            return path;
        }
    }
    path.terminated_by = Termination::max_iter;
    return path;
}

void write_path_csv(const std::filesystem::path& file, const BoostPath& bp)
{
    const Index p = bp.betas.empty() ? 0 : bp.betas.front().size();
    std::vector<std::string> header{"k", "loss", "selected_block", "grad_norm"};
    for (const auto& l : csv::numbered_labels("beta", p)) header.push_back(l);
    csv::Writer w(file, header);
    for (std::size_t k = 0; k < bp.betas.size(); ++k) {
        w.cell(k).cell(bp.losses[k]).cell(bp.selected[k]).cell(bp.grad_norms[k]).cells(bp.betas[k]);
        w.end_row();
    }
}

namespace {

// Sign-alternating coordinate updates whose size neither decays nor explodes.
bool coordinate_oscillates(const std::vector<double>& steps, double floor)
{
    if (steps.size() < 2) return false;
    for (std::size_t i = 1; i < steps.size(); ++i) {
        if (!(steps[i] * steps[i - 1] < 0.0)) return false;
        const double ratio = std::abs(steps[i]) / std::abs(steps[i - 1]);
        if (ratio < 0.5 || ratio > 2.0) return false;
    }
    for (double s : steps) {
        if (std::abs(s) <= floor) return false;
    }
    return std::abs(steps.back()) >= 0.5 * std::abs(steps.front());
}

} // namespace

Verdict divergence_detector(const BoostPath& path, int window)
{
    if (window < 2) throw config_error("divergence_detector: window must be at least 2");
    if (path.terminated_by == Termination::divergence || !path.error.empty()) {
        return Verdict::diverging;
    }
    const auto& losses = path.losses;
    if (losses.empty()) return Verdict::converging;
    for (double l : losses) {
        if (!std::isfinite(l)) return Verdict::diverging;
    }

    const std::size_t last = losses.size() - 1;
    const std::size_t first = last > static_cast<std::size_t>(window) ? last - window : 0;
    const double start = losses[first];
    const double scale = std::max(std::abs(start), std::numeric_limits<double>::min());
    if (losses[last] - start > 9.0 * scale) return Verdict::diverging;

    const Index p = path.betas.back().size();
    const double floor = 1e-10 * (1.0 + path.betas.back().cwiseAbs().maxCoeff());
    for (Index j = 0; j < p; ++j) {
        std::vector<double> steps;
        for (std::size_t k = first + 1; k <= last; ++k) {
            const double d = path.betas[k](j) - path.betas[k - 1](j);
            if (d != 0.0) steps.push_back(d);
        }
        if (coordinate_oscillates(steps, floor)) return Verdict::oscillating;
    }
    // A convergent descent run never raises its loss; a rise inside the window
    // means the iterates bounce without strictly alternating signs.
    for (std::size_t k = first + 1; k <= last; ++k) {
        const double rise = losses[k] - losses[k - 1];
        if (rise > 1e-10 * std::max(1.0, std::abs(losses[k - 1]))) return Verdict::oscillating;
    }
    return Verdict::converging;
}

void validate_smoother(const Matrix& s)
{
    if (s.rows() != s.cols()) throw invalid_smoother_error("smoother must be square");
    if (!linalg::is_symmetric(s)) throw invalid_smoother_error("smoother must be symmetric");
    const Vector ev = linalg::sym_eigenvalues(s);
    if (!(ev.minCoeff() > 0.0) || ev.maxCoeff() > 1.0 + 1e-12) {
        throw invalid_smoother_error("smoother eigenvalues must lie in (0, 1]");
    }
}

double smoother_contraction(const std::vector<Matrix>& smoothers, double nu)
{
    double c = 0.0;
    for (const auto& s : smoothers) {
        const Index n = s.rows();
        c = std::max(c, linalg::lambda_max(Matrix::Identity(n, n) - nu * s));
    }
    return c;
}

SmootherPath smoother_boost(const std::vector<Matrix>& smoothers, const Vector& y,
                            const SmootherConfig& config)
{
    if (smoothers.empty()) throw invalid_smoother_error("no smoothers given");
    if (!(config.nu > 0.0 && config.nu <= 1.0)) throw config_error("nu must lie in (0, 1]");
    if (config.max_iter < 1) throw config_error("max_iter must be at least 1");
    for (const auto& s : smoothers) {
        validate_smoother(s);
        if (s.rows() != y.size()) throw invalid_smoother_error("smoother size does not match y");
    }

    SmootherPath path;
    path.contraction = smoother_contraction(smoothers, config.nu);
    Rng rng(config.seed);
    Vector f = Vector::Zero(y.size());
    path.fits.push_back(f);
    path.selected.push_back(-1);
    path.residual_norms.push_back(y.norm());

    for (int k = 1; k <= config.max_iter; ++k) {
        const Vector r = y - f;
        std::size_t m = 0;
        switch (config.selection) {
        case SmootherSelection::greedy: {
            double best = std::numeric_limits<double>::infinity();
            for (std::size_t i = 0; i < smoothers.size(); ++i) {
                const double sse = (r - config.nu * smoothers[i] * r).squaredNorm();
                if (sse < best) {
                    best = sse;
                    m = i;
                }
            }
            break;
        }
        case SmootherSelection::cyclic: m = static_cast<std::size_t>(k - 1) % smoothers.size(); break;
        case SmootherSelection::random: m = rng.index(smoothers.size()); break;
        }
        f += config.nu * smoothers[m] * r;
        path.fits.push_back(f);
        path.selected.push_back(static_cast<int>(m));
        path.residual_norms.push_back((y - f).norm());
    }
    return path;
}

} // namespace bampath
