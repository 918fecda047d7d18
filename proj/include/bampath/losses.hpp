#pragma once

#include <bampath/linalg.hpp>

#include <optional>
#include <string_view>
#include <variant>

namespace bampath {

enum class LossFamily { l2, binomial, poisson, cox };

std::string_view to_string(LossFamily family);

/// Loss family with canonical link. For the Cox model, `times` and `events`
/// replace the outcome vector y, which is then ignored.
struct LossSpec
{
    LossFamily family = LossFamily::l2;
    Vector times;
    Vector events;

    static LossSpec l2() { return {}; }
    static LossSpec binomial() { return {LossFamily::binomial, {}, {}}; }
    static LossSpec poisson() { return {LossFamily::poisson, {}, {}}; }
    static LossSpec cox(Vector times, Vector events);

    /// Observation count implied by the spec (Cox) or by y.
    Index size(const Vector& y) const;

    /// Throws domain_error for outcomes outside the family's support.
    void validate(const Vector& y) const;
};

/// Diagonal weights, or the dense Hessian in f for Cox.
using HessianWeights = std::variant<Vector, Matrix>;

struct GradientEval
{
    double value = 0.0;
    Vector y_tilde;
    HessianWeights w;
};

/// Negative log-likelihood; L2 uses 1/2 ||y - f||^2.
double loss_value(const LossSpec& spec, const Vector& y, const Vector& f);

/// -d loss / d f, the working response boosting fits against.
Vector neg_functional_gradient(const LossSpec& spec, const Vector& y, const Vector& f);

HessianWeights hessian_weights(const LossSpec& spec, const Vector& f);

GradientEval evaluate(const LossSpec& spec, const Vector& y, const Vector& f);

/// X' W X for either weight representation.
Matrix weighted_gram(const Matrix& x, const HessianWeights& w);

/// Global L with Hessian <= L I in beta, where one exists.
std::optional<double> smoothness_constant(const LossSpec& spec, const Matrix& x);

/// Link-transformed outcome mean, used as a constant offset. Zero for Cox,
/// where a constant shift cancels from the partial likelihood.
double canonical_offset(const LossSpec& spec, const Vector& y);

/// Predictors beyond this magnitude are treated as overflow.
inline constexpr double predictor_limit = 700.0;

} // namespace bampath
