#pragma once

#include <bampath/boost.hpp>

#include <string>

namespace bampath {

enum class HChoice { block_gram, penalized_gram, lipschitz_scalar };
enum class GradientOf { unpenalized, penalized };

struct GbcdConfig
{
    double nu = 0.1;
    int max_iter = 100;
    HChoice h_choice = HChoice::block_gram;
    GradientOf gradient_of = GradientOf::unpenalized;

    void validate() const;
};

/// Greedy block coordinate descent with the Gauss-Southwell-quadratic rule:
/// pick argmax_b ||grad_b||_{H_b^{-1}}, then beta_b -= nu H_b^{-1} grad_b.
///
/// H_b is X_b'X_b, X_b'X_b + lambda_b P_b, or lambda_max of the latter times I
/// (Gauss-Southwell-Lipschitz for singleton blocks). With gradient_of =
/// penalized the objective is loss + 1/2 sum_b lambda_b beta_b' P_b beta_b and
/// the recorded losses are that penalized objective.
BoostPath gbcd_gsq(const BlockPartition& partition, const LossSpec& loss, const Vector& y,
                   const GbcdConfig& config);

/// 1/2 sum_b lambda_b beta_b' P_b beta_b
double partition_penalty(const BlockPartition& partition, const Vector& beta);

struct EquivalenceReport
{
    bool identical = true;
    int first_difference = -1;   // iteration index, -1 when identical
    int stationary_from = -1;    // comparison stopped here, -1 when never
    std::string detail;

    std::string summary() const;
};

/// Index-by-index comparison of selections and iterates; iterates agree when
/// max |a - b| <= tol * max(1, max |b|). With stationary_rel > 0 the
/// comparison ends at the first k where both gradient norms are at most
/// stationary_rel times their starting value: past that point the selection
/// scores are rounding noise and either choice is a tie.
EquivalenceReport compare_paths(const BoostPath& a, const BoostPath& b, double tol = 1e-12,
                                double stationary_rel = 0.0);

/// Greedy L2 boosting against GBCD-GSQ on the same problem for K iterations.
/// The boosting side selects by penalized SSE when h_choice is penalized_gram.
EquivalenceReport equivalence_check(const BlockPartition& partition, const Vector& y, int k,
                                    double nu, HChoice h_choice = HChoice::block_gram,
                                    GradientOf gradient_of = GradientOf::unpenalized,
                                    double tol = 1e-12, double stationary_rel = 1e-8);

} // namespace bampath
