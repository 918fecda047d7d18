#include <bampath/csv.hpp>
#include <bampath/error.hpp>
#include <bampath/rates.hpp>

#include "test_util.hpp"

#include <doctest.h>

#include <filesystem>

using namespace bampath;

TEST_CASE("PL constant ignores the null space")
{
    Matrix q = Matrix::Zero(3, 3);
    q.diagonal() << 0.0, 2.0, 5.0;
    CHECK(pl_constant(q) == doctest::Approx(2.0));
    q(0, 0) = 1e-13;
    CHECK(pl_constant(q) == doctest::Approx(2.0));
    CHECK_THROWS_AS(pl_constant(Matrix::Zero(2, 2)), invalid_constant_error);
}

TEST_CASE("rate formulas")
{
    Matrix q = Matrix::Zero(2, 2);
    q.diagonal() << 1.0, 4.0;
    CHECK(rate_quadratic(q, 2, 0.5) == doctest::Approx(1.0 - 0.5 * 1.5 / 2.0 * 0.25));
    CHECK(rate_quadratic(q, 1, 1.0) == doctest::Approx(0.75));
    CHECK(rate_general(1.0, 4.0, 2, 0.5) == doctest::Approx(1.0 - 0.5 / 8.0));
    CHECK_THROWS_AS(rate_general(0.0, 4.0, 2, 0.5), invalid_constant_error);
    CHECK_THROWS_AS(rate_general(5.0, 4.0, 2, 0.5), invalid_constant_error);

    Rng rng(51);
    const Matrix x = test::gaussian_matrix(30, 4, rng);
    BlockSpec a, b;
    a.columns = {0, 3};
    b.columns = {1, 2};
    const BlockPartition part = make_partition(x, {a, b});
    const double la = linalg::lambda_max(part.blocks[0].x.transpose() * part.blocks[0].x);
    const double lb = linalg::lambda_max(part.blocks[1].x.transpose() * part.blocks[1].x);
    CHECK(block_lipschitz(part) == doctest::Approx(std::max(la, lb)));
}

TEST_CASE("optimal L2 loss is the residual of the projection")
{
    Rng rng(52);
    Matrix x = test::gaussian_matrix(25, 4, rng);
    x.col(3) = x.col(0) + x.col(2);   // rank deficiency is fine
    const Vector y = test::gaussian_vector(25, rng);
    const Vector fit = x * linalg::pseudo_inverse(x) * y;
    CHECK(l2_optimal_loss(x, y) == doctest::Approx(0.5 * (y - fit).squaredNorm()));
}

TEST_CASE("greedy boosting obeys the quadratic rate bound; a halved rate is caught")
{
    Rng rng(53);
    int caught = 0;
    for (int trial = 0; trial < 12; ++trial) {
        const Matrix x = test::gaussian_matrix(40, 6, rng);
        const Vector y = test::gaussian_vector(40, rng);
        BlockSpec a, b, c;
        a.columns = {0, 1};
        b.columns = {2, 3};
        c.columns = {4, 5};
        const BlockPartition part = make_partition(x, {a, b, c});
        BoostConfig cfg;
        cfg.nu = trial % 2 ? 0.1 : 0.5;
        cfg.max_iter = 200;
        const BoostPath p = run_boost(part, LossSpec::l2(), y, cfg);
        const double gamma = rate_quadratic(x.transpose() * x, 3, cfg.nu);
        const double l_star = l2_optimal_loss(x, y);
        const RateReport rep = check_bound(p, gamma, l_star);
        CHECK(rep.all_compliant());
        CHECK(rep.rows.size() == p.losses.size());
        CHECK_FALSE(rep.first_violation().has_value());
        const RateReport ctl = check_bound(p, gamma / 2.0, l_star);
        if (!ctl.all_compliant()) {
            ++caught;
            CHECK(*ctl.first_violation() >= 1);
        }
    }
    CHECK(caught > 0);
}

TEST_CASE("rate CSV")
{
    Rng rng(54);
    const Matrix x = test::gaussian_matrix(20, 3, rng);
    const Vector y = test::gaussian_vector(20, rng);
    BoostConfig cfg;
    cfg.max_iter = 30;
    const BoostPath p = run_boost(componentwise_partition(x), LossSpec::l2(), y, cfg);
    const RateReport rep = check_bound(p, rate_quadratic(x.transpose() * x, 3, cfg.nu), l2_optimal_loss(x, y));
    const auto file = std::filesystem::temp_directory_path() / "bampath_test_rates.csv";
    write_rate_csv(file, rep);
    CHECK(csv::count_rows(file) == 31);
    std::filesystem::remove(file);
}

TEST_CASE("Newton optimum is stationary and below every boosting iterate")
{
    Rng rng(55);
    const Matrix x = test::gaussian_matrix(80, 3, rng);
    Vector y(80);
    const Vector eta = x * Vector::Constant(3, 0.4);
    for (Index i = 0; i < 80; ++i) y(i) = static_cast<double>(rng.poisson(std::exp(eta(i))));
    const NewtonResult opt = newton_optimum(LossSpec::poisson(), x, y);
    const Vector grad = -(x.transpose() * neg_functional_gradient(LossSpec::poisson(), y, x * opt.beta));
    CHECK(grad.norm() < 1e-9);
    CHECK(opt.loss == doctest::Approx(loss_value(LossSpec::poisson(), y, x * opt.beta)));
    BoostConfig cfg;
    cfg.nu = 0.05;
    cfg.max_iter = 300;
    const BoostPath p = run_boost(componentwise_partition(x), LossSpec::poisson(), y, cfg);
    for (double l : p.losses) CHECK(l >= opt.loss - 1e-9);
    CHECK(reference_optimum(componentwise_partition(x), LossSpec::poisson(), y, cfg) >= opt.loss - 1e-9);
}

TEST_CASE("Hessian upper-bound check")
{
    Rng rng(56);
    const Matrix x = test::gaussian_matrix(50, 2, rng);
    const Vector y = test::gaussian_vector(50, rng);
    const BlockPartition part = componentwise_partition(x);
    BoostConfig cfg;
    cfg.nu = 1.0;
    cfg.max_iter = 20;
    const BoostPath p = run_boost(part, LossSpec::l2(), y, cfg);
    const HessianCheck l2 = hessian_ub_check(LossSpec::l2(), part, 1.0, p);
    CHECK_FALSE(l2.violated);
    CHECK(l2.worst == doctest::Approx(1.0));
    CHECK(l2.per_iterate.size() == p.betas.size());

    Vector yb(50);
    for (Index i = 0; i < 50; ++i) yb(i) = rng.bernoulli(0.5) ? 1.0 : 0.0;
    const BoostPath pb = run_boost(part, LossSpec::binomial(), yb, cfg);
    const HessianCheck bin = hessian_ub_check(LossSpec::binomial(), part, 1.0, pb);
    CHECK_FALSE(bin.violated);
    CHECK(bin.worst <= 0.25 + 1e-12);

    // Poisson weights exp(f) grow without bound; a large predictor violates the check
    BoostPath big;
    big.betas = {Vector::Zero(2), Vector::Constant(2, 3.0)};
    big.losses = {0.0, 0.0};
    big.selected = {-1, 0};
    big.grad_norms = {0.0, 0.0};
    const HessianCheck pois = hessian_ub_check(LossSpec::poisson(), part, 0.5, big);
    CHECK(pois.violated);
    CHECK(pois.k >= 0);
}
