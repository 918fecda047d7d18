#pragma once

#include <bampath/design.hpp>
#include <bampath/losses.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace bampath {

enum class BoostMode { joint, greedy, cyclic };
enum class InitMode { zero, offset };
enum class Termination { max_iter, tol, divergence };

/// Greedy selection score: plain SSE against y_tilde, or SSE plus the fitted
/// block's penalty lambda b' P b (the form under which penalized learners
/// select by the GSQ rule).
enum class SelectionCriterion { sse, penalized_sse };

std::string_view to_string(BoostMode mode);
std::string_view to_string(Termination t);

struct BoostConfig
{
    double nu = 0.1;
    int max_iter = 100;
    BoostMode mode = BoostMode::greedy;
    SelectionCriterion selection = SelectionCriterion::sse;
    InitMode init = InitMode::zero;
    double stop_tol = 0.0;          // 0 runs to max_iter
    bool divergence_guard = false;
    double divergence_factor = 10.0;

    /// Throws config_error.
    void validate() const;
};

struct BoostPath
{
    std::vector<Vector> betas;
    std::vector<double> losses;
    std::vector<int> selected;      // -1 at k = 0 and in joint mode
    std::vector<double> grad_norms; // ||X' y_tilde||
    Termination terminated_by = Termination::max_iter;
    double offset = 0.0;
    std::string error;              // numeric error that stopped a guarded run

    int iterations() const { return static_cast<int>(betas.size()) - 1; }
    const Vector& last() const { return betas.back(); }
};

struct BlockFit
{
    Vector beta;
    double sse = 0.0;
    double penalty = 0.0;     // lambda b' P b
    double reduction = 0.0;   // y~' X b

    /// Ranks like sse (or sse + penalty) up to the shared constant |y~|^2,
    /// using the identity sse = |y~|^2 - y~'Xb - lambda b'Pb. Dropping the
    /// constant keeps small reductions resolvable once |y~|^2 dominates.
    double score(SelectionCriterion c) const
    {
        return c == SelectionCriterion::sse ? -(reduction + penalty) : -reduction;
    }
};

/// Cached rank-revealing factorisation of X_b'X_b + lambda_b P_b.
class BlockSolver
{
public:
    explicit BlockSolver(const DesignBlock& block);

    /// (X'X + lambda P)^{-1} X' y_tilde, or the min-norm solution when the
    /// unpenalized system is rank deficient.
    BlockFit fit(const Vector& y_tilde) const;

    /// (X'X + lambda P)^{-1} rhs under the same conventions.
    Vector solve(const Vector& rhs) const;

    const DesignBlock& block() const { return *block_; }
    bool rank_deficient() const { return rank_deficient_; }

private:
    const DesignBlock* block_;
    Eigen::CompleteOrthogonalDecomposition<Matrix> cod_;
    bool rank_deficient_ = false;
};

BlockFit fit_block(const DesignBlock& block, const Vector& y_tilde);

/// Block with the smallest SSE (or penalized SSE) against y_tilde; ties go to
/// the lowest id.
std::size_t select_block(const BlockPartition& partition, const Vector& y_tilde,
                         SelectionCriterion criterion = SelectionCriterion::sse);
std::size_t select_block(const std::vector<BlockSolver>& solvers, const Vector& y_tilde,
                         SelectionCriterion criterion = SelectionCriterion::sse,
                         BlockFit* winner = nullptr);

BoostPath run_boost(const BlockPartition& partition, const LossSpec& loss, const Vector& y,
                    const BoostConfig& config);

/// Columns k, loss, selected_block, grad_norm, beta_1..beta_p.
void write_path_csv(const std::filesystem::path& path, const BoostPath& bp);

enum class Verdict { converging, oscillating, diverging };
std::string_view to_string(Verdict v);

/// Classifies the last `window` iterations of a path. Oscillating covers
/// sign-alternating coordinate updates and any loss increase in the window.
Verdict divergence_detector(const BoostPath& path, int window);

enum class SmootherSelection { greedy, cyclic, random };

struct SmootherConfig
{
    double nu = 1.0;
    int max_iter = 100;
    SmootherSelection selection = SmootherSelection::greedy;
    std::uint64_t seed = 1;
};

struct SmootherPath
{
    std::vector<Vector> fits;
    std::vector<int> selected;
    std::vector<double> residual_norms;
    double contraction = 0.0;       // largest eigenvalue over all I - nu S_m
};

/// Throws invalid_smoother_error unless S is symmetric with spectrum in (0, 1].
void validate_smoother(const Matrix& s);

/// Largest eigenvalue over the I - nu S_m.
double smoother_contraction(const std::vector<Matrix>& smoothers, double nu = 1.0);

/// f <- f + nu S_m (y - f), starting from f = 0.
SmootherPath smoother_boost(const std::vector<Matrix>& smoothers, const Vector& y,
                            const SmootherConfig& config);

} // namespace bampath
