#include <bampath/distreg.hpp>
#include <bampath/error.hpp>

#include "test_util.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace bampath;

namespace {

GaussianLSModel random_model(Rng& rng, Index n)
{
    GaussianLSModel m;
    m.x = test::gaussian_matrix(n, 2, rng);
    m.z = test::gaussian_matrix(n, 2, rng);
    m.x.col(0).setOnes();
    m.z.col(0).setOnes();
    m.beta = test::gaussian_vector(2, rng);
    m.xi = 0.3 * test::gaussian_vector(2, rng);
    return m;
}

Vector stack(const Vector& a, const Vector& b)
{
    Vector v(a.size() + b.size());
    v << a, b;
    return v;
}

} // namespace

TEST_CASE("location-scale likelihood against a direct formula")
{
    Rng rng(61);
    const GaussianLSModel m = random_model(rng, 7);
    const Vector y = test::gaussian_vector(7, rng);
    double nll = 0.0;
    for (Index i = 0; i < 7; ++i) {
        const double mu = m.x.row(i).dot(m.beta);
        const double sd = std::exp(m.z.row(i).dot(m.xi));
        nll -= -0.5 * std::log(2 * std::numbers::pi) - std::log(sd)
               - (y(i) - mu) * (y(i) - mu) / (2 * sd * sd);
    }
    CHECK(gauss_ls_eval(m, y).nll == doctest::Approx(nll).epsilon(1e-12));
}

TEST_CASE("location-scale gradient and Hessian match finite differences")
{
    Rng rng(62);
    double worst_g = 0.0, worst_h = 0.0;
    for (int trial = 0; trial < 50; ++trial) {
        GaussianLSModel m = random_model(rng, 10 + trial % 7);
        const Vector y = test::gaussian_vector(m.x.rows(), rng);
        const Vector theta = stack(m.beta, m.xi);
        auto set = [&](const Vector& t) {
            GaussianLSModel c = m;
            c.beta = t.head(2);
            c.xi = t.tail(2);
            return c;
        };
        const auto value = [&](const Vector& t) { return gauss_ls_eval(set(t), y).nll; };
        const auto grad = [&](const Vector& t) {
            const LSEval e = gauss_ls_eval(set(t), y);
            return stack(e.grad_beta, e.grad_xi);
        };
        const LSEval e = gauss_ls_eval(m, y);
        worst_g = std::max(worst_g, test::rel_err(stack(e.grad_beta, e.grad_xi), test::fd_gradient(value, theta)));
        worst_h = std::max(worst_h, test::rel_err(gauss_ls_hessian(m, y).full(), test::fd_jacobian(grad, theta)));
    }
    CHECK(worst_g < 1e-5);
    CHECK(worst_h < 1e-5);
}

TEST_CASE("the n = 1 counterexample has an indefinite Hessian")
{
    GaussianLSModel m;
    m.x = Matrix::Ones(1, 1);
    m.z = Matrix::Ones(1, 1);
    m.beta = Vector::Ones(1);
    m.xi = Vector::Ones(1);
    const Vector y = Vector::Constant(1, 2.0);
    const Matrix h = gauss_ls_hessian(m, y).full();
    // r = 1, sigma^2 = e^2: H = e^-2 [[1, 2], [2, 2]]
    const double s = std::exp(-2.0);
    CHECK(h(0, 0) == doctest::Approx(s));
    CHECK(h(0, 1) == doctest::Approx(2 * s));
    CHECK(h(1, 1) == doctest::Approx(2 * s));
    const Vector ev = linalg::sym_eigenvalues(h);
    CHECK(ev(0) == doctest::Approx(s * (3 - std::sqrt(17.0)) / 2));
    CHECK(ev(1) == doctest::Approx(s * (3 + std::sqrt(17.0)) / 2));

    const BiconvexityReport rep = biconvexity_check(100, 3);
    CHECK(rep.biconvex);
    CHECK(rep.counterexample_indefinite);
    CHECK(rep.ray_unbounded);
    CHECK(rep.min_eig_bb >= 0.0);
    CHECK(rep.min_eig_xx >= 0.0);
    CHECK(rep.counterexample_eigs(0) == doctest::Approx(ev(0)));
}

TEST_CASE("scale predictor overflow raises with the observation index")
{
    GaussianLSModel m;
    m.x = Matrix::Ones(3, 1);
    m.z = Matrix::Ones(3, 1);
    m.z(2, 0) = 1000.0;
    m.beta = Vector::Zero(1);
    m.xi = Vector::Ones(1);
    try {
        gauss_ls_eval(m, Vector::Zero(3));
        FAIL("expected numeric_error");
    } catch (const numeric_error& e) {
        CHECK(e.index() == std::optional<Index>(2));
    }
}

TEST_CASE("cyclic location-scale boosting: small steps descend, large steps blow up")
{
    Rng rng(63);
    const Index n = 100;
    Matrix x(n, 2);
    Vector y(n);
    for (Index i = 0; i < n; ++i) {
        const double v = rng.normal();
        x(i, 0) = 1.0;
        x(i, 1) = v;
        y(i) = 1.0 + 2.0 * v + std::exp(0.2 + 0.8 * v) * rng.normal();
    }
    LSBoostConfig c;
    c.nu = 0.01;
    c.max_iter = 300;
    const LSBoostResult small = cyclic_boost_ls(x, x, y, c);
    CHECK(small.error.empty());
    CHECK(small.mean_verdict == Verdict::converging);
    CHECK(small.scale_verdict == Verdict::converging);
    for (std::size_t k = 1; k < small.scale.losses.size(); ++k) {
        CHECK(small.mean.losses[k] <= small.scale.losses[k - 1] + 1e-10);
        CHECK(small.scale.losses[k] <= small.mean.losses[k] + 1e-10);
    }
    c.nu = 1.0;
    const LSBoostResult big = cyclic_boost_ls(x, x, y, c);
    CHECK((big.mean_verdict == Verdict::diverging || big.scale_verdict == Verdict::diverging));

    c.nu = 0.5;
    c.update_scale = false;
    const LSBoostResult mean_only = cyclic_boost_ls(x, x, y, c);
    CHECK(mean_only.scale.last().isZero());
}
