#include <bampath/losses.hpp>
#include <bampath/error.hpp>

#include <cmath>
#include <numeric>
#include <string>

namespace bampath {

std::string_view to_string(LossFamily family)
{
    switch (family) {
    case LossFamily::l2: return "l2";
    case LossFamily::binomial: return "binomial";
    case LossFamily::poisson: return "poisson";
    case LossFamily::cox: return "cox";
    }
    return "unknown";
}

LossSpec LossSpec::cox(Vector times, Vector events)
{
    LossSpec spec{LossFamily::cox, std::move(times), std::move(events)};
    spec.validate(Vector());
    return spec;
}

Index LossSpec::size(const Vector& y) const
{
    return family == LossFamily::cox ? times.size() : y.size();
}

void LossSpec::validate(const Vector& y) const
{
    switch (family) {
    case LossFamily::l2:
        for (Index i = 0; i < y.size(); ++i) {
            if (!std::isfinite(y(i))) {
                throw domain_error("l2: non-finite outcome at " + std::to_string(i));
            }
        }
        return;
    case LossFamily::binomial:
        for (Index i = 0; i < y.size(); ++i) {
            if (y(i) != 0.0 && y(i) != 1.0) {
                throw domain_error("binomial: outcome must be 0 or 1 at " + std::to_string(i));
            }
        }
        return;
    case LossFamily::poisson:
        for (Index i = 0; i < y.size(); ++i) {
            if (!(y(i) >= 0.0) || y(i) != std::floor(y(i)) || !std::isfinite(y(i))) {
                throw domain_error("poisson: outcome must be a nonnegative integer at "
                                   + std::to_string(i));
            }
        }
        return;
    case LossFamily::cox:
        if (times.size() != events.size() || times.size() == 0) {
            throw domain_error("cox: times and events must be nonempty and of equal length");
        }
        for (Index i = 0; i < times.size(); ++i) {
            if (!(times(i) > 0.0) || !std::isfinite(times(i))) {
                throw domain_error("cox: times must be positive at " + std::to_string(i));
            }
            if (events(i) != 0.0 && events(i) != 1.0) {
                throw domain_error("cox: event indicator must be 0 or 1 at " + std::to_string(i));
            }
        }
        return;
    }
}

namespace {

void check_predictor(const LossSpec& spec, const Vector& f)
{
    for (Index i = 0; i < f.size(); ++i) {
        if (!std::isfinite(f(i))) {
            throw numeric_error("non-finite predictor", static_cast<std::size_t>(i));
        }
        if (spec.family != LossFamily::l2 && std::abs(f(i)) > predictor_limit) {
            throw numeric_error(std::string(to_string(spec.family)) + ": predictor overflow",
                                static_cast<std::size_t>(i));
        }
    }
}

void check_sizes(const LossSpec& spec, const Vector& y, const Vector& f)
{
    if (spec.size(y) != f.size()) {
        throw domain_error("outcome and predictor lengths differ");
    }
}

double sigmoid(double f)
{
    return f >= 0.0 ? 1.0 / (1.0 + std::exp(-f)) : std::exp(f) / (1.0 + std::exp(f));
}

double log1p_exp(double f)
{
    return f > 0.0 ? f + std::log1p(std::exp(-f)) : std::log1p(std::exp(f));
}

// Breslow risk-set quantities: for each event i, softmax weights over
// R(t_i) = { j : t_j >= t_i }.
struct CoxTerms
{
    double value = 0.0;
    Vector y_tilde;
    Matrix hessian;
};

CoxTerms cox_terms(const LossSpec& spec, const Vector& f, bool want_hessian)
{
    const Index n = f.size();
    const double shift = f.maxCoeff();
    const Vector e = (f.array() - shift).exp().matrix();

    CoxTerms out;
    out.y_tilde = spec.events;
    if (want_hessian) out.hessian = Matrix::Zero(n, n);
    Vector omega(n);
    for (Index i = 0; i < n; ++i) {
        if (spec.events(i) == 0.0) continue;
        const double ti = spec.times(i);
        double denom = 0.0;
        for (Index j = 0; j < n; ++j) {
            if (spec.times(j) >= ti) denom += e(j);
        }
        out.value += -f(i) + shift + std::log(denom);
        for (Index j = 0; j < n; ++j) omega(j) = spec.times(j) >= ti ? e(j) / denom : 0.0;
        out.y_tilde -= omega;
        if (want_hessian) {
            out.hessian.diagonal() += omega;
            out.hessian.noalias() -= omega * omega.transpose();
        }
    }
    return out;
}

} // namespace

double loss_value(const LossSpec& spec, const Vector& y, const Vector& f)
{
    check_sizes(spec, y, f);
    check_predictor(spec, f);
    switch (spec.family) {
    case LossFamily::l2: return 0.5 * (y - f).squaredNorm();
    case LossFamily::binomial: {
        double s = 0.0;
        for (Index i = 0; i < f.size(); ++i) s += log1p_exp(f(i)) - y(i) * f(i);
        return s;
    }
    case LossFamily::poisson: {
        double s = 0.0;
        for (Index i = 0; i < f.size(); ++i) {
            s += std::exp(f(i)) - y(i) * f(i) + std::lgamma(y(i) + 1.0);
        }
        return s;
    }
    case LossFamily::cox: return cox_terms(spec, f, false).value;
    }
    return 0.0;
}

Vector neg_functional_gradient(const LossSpec& spec, const Vector& y, const Vector& f)
{
    check_sizes(spec, y, f);
    check_predictor(spec, f);
    switch (spec.family) {
    case LossFamily::l2: return y - f;
    case LossFamily::binomial: return y - f.unaryExpr(&sigmoid);
    case LossFamily::poisson: return y - f.array().exp().matrix();
    case LossFamily::cox: return cox_terms(spec, f, false).y_tilde;
    }
    return {};
}

HessianWeights hessian_weights(const LossSpec& spec, const Vector& f)
{
    check_predictor(spec, f);
    switch (spec.family) {
    case LossFamily::l2: return Vector(Vector::Ones(f.size()));
    case LossFamily::binomial:
        return Vector(f.unaryExpr([](double v) {
            const double s = sigmoid(v);
            return s * (1.0 - s);
        }));
    case LossFamily::poisson: return Vector(f.array().exp().matrix());
    case LossFamily::cox:
        if (spec.times.size() != f.size()) {
            throw domain_error("cox: predictor length differs from survival data");
        }
        return cox_terms(spec, f, true).hessian;
    }
    return Vector();
}

GradientEval evaluate(const LossSpec& spec, const Vector& y, const Vector& f)
{
    if (spec.family == LossFamily::cox) {
        check_sizes(spec, y, f);
        check_predictor(spec, f);
        CoxTerms t = cox_terms(spec, f, true);
        return {t.value, std::move(t.y_tilde), std::move(t.hessian)};
    }
    return {loss_value(spec, y, f), neg_functional_gradient(spec, y, f), hessian_weights(spec, f)};
}

Matrix weighted_gram(const Matrix& x, const HessianWeights& w)
{
    if (const auto* d = std::get_if<Vector>(&w)) {
        return x.transpose() * d->asDiagonal() * x;
    }
    return x.transpose() * std::get<Matrix>(w) * x;
}

std::optional<double> smoothness_constant(const LossSpec& spec, const Matrix& x)
{
    switch (spec.family) {
    case LossFamily::l2: return linalg::lambda_max(linalg::gram(x));
    case LossFamily::binomial: return 0.25 * linalg::lambda_max(linalg::gram(x));
    case LossFamily::poisson:
    case LossFamily::cox: return std::nullopt;
    }
    return std::nullopt;
}

double canonical_offset(const LossSpec& spec, const Vector& y)
{
    switch (spec.family) {
    case LossFamily::l2: return y.mean();
    case LossFamily::binomial: {
        const double m = y.mean();
        if (m <= 0.0 || m >= 1.0) throw domain_error("binomial offset: outcomes are constant");
        return std::log(m / (1.0 - m));
    }
    case LossFamily::poisson: {
        const double m = y.mean();
        if (m <= 0.0) throw domain_error("poisson offset: all counts are zero");
        return std::log(m);
    }
    case LossFamily::cox: return 0.0;
    }
    return 0.0;
}

} // namespace bampath
