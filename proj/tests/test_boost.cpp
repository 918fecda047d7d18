#include <bampath/boost.hpp>
#include <bampath/csv.hpp>
#include <bampath/error.hpp>

#include "test_util.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>

using namespace bampath;

namespace {

// Componentwise L2 boosting spelled out column by column.
std::vector<Vector> naive_componentwise(const Matrix& x, const Vector& y, double nu, int k_max,
                                        std::vector<int>& picks)
{
    Vector beta = Vector::Zero(x.cols());
    std::vector<Vector> out{beta};
    for (int k = 0; k < k_max; ++k) {
        const Vector r = y - x * beta;
        int best = 0;
        double best_sse = 0.0, best_coef = 0.0;
        for (Index j = 0; j < x.cols(); ++j) {
            const double c = x.col(j).dot(r) / x.col(j).squaredNorm();
            const double sse = (r - c * x.col(j)).squaredNorm();
            if (j == 0 || sse < best_sse) {
                best = static_cast<int>(j);
                best_sse = sse;
                best_coef = c;
            }
        }
        beta(best) += nu * best_coef;
        picks.push_back(best);
        out.push_back(beta);
    }
    return out;
}

BoostPath synthetic_path(const std::vector<double>& losses, const std::vector<double>& coord)
{
    BoostPath p;
    for (std::size_t k = 0; k < losses.size(); ++k) {
        p.losses.push_back(losses[k]);
        p.betas.push_back(Vector::Constant(1, coord[k]));
        p.selected.push_back(k == 0 ? -1 : 0);
        p.grad_norms.push_back(0.0);
    }
    return p;
}

Matrix random_smoother(Index n, Rng& rng)
{
    const Matrix q = Eigen::HouseholderQR<Matrix>(test::gaussian_matrix(n, n, rng)).householderQ();
    Vector ev(n);
    for (Index i = 0; i < n; ++i) ev(i) = 0.1 + 0.9 * rng.uniform();
    ev(0) = 1.0;
    return q * ev.asDiagonal() * q.transpose();
}

} // namespace

TEST_CASE("config validation")
{
    BoostConfig c;
    c.nu = 0.0;
    CHECK_THROWS_AS(c.validate(), config_error);
    c.nu = 1.5;
    CHECK_THROWS_AS(c.validate(), config_error);
    c.nu = 1.0;
    CHECK_NOTHROW(c.validate());
    c.max_iter = 0;
    CHECK_THROWS_AS(c.validate(), config_error);
}

TEST_CASE("greedy componentwise boosting matches a direct implementation")
{
    Rng rng(21);
    for (int trial = 0; trial < 10; ++trial) {
        const Matrix x = test::gaussian_matrix(40, 6, rng);
        const Vector y = test::gaussian_vector(40, rng);
        BoostConfig c;
        c.nu = 0.3;
        c.max_iter = 60;
        const BoostPath path = run_boost(componentwise_partition(x), LossSpec::l2(), y, c);
        std::vector<int> picks;
        const auto ref = naive_componentwise(x, y, c.nu, c.max_iter, picks);
        for (int k = 1; k <= c.max_iter; ++k) {
            CHECK(path.selected[static_cast<std::size_t>(k)] == picks[static_cast<std::size_t>(k - 1)]);
            CHECK((path.betas[static_cast<std::size_t>(k)] - ref[static_cast<std::size_t>(k)]).norm() < 1e-12);
        }
    }
}

TEST_CASE("L2 boosting never increases the loss")
{
    Rng rng(22);
    for (BoostMode mode : {BoostMode::joint, BoostMode::greedy, BoostMode::cyclic}) {
        const Matrix x = test::gaussian_matrix(30, 5, rng);
        const Vector y = test::gaussian_vector(30, rng);
        BoostConfig c;
        c.nu = 1.0;
        c.mode = mode;
        c.max_iter = 50;
        const BoostPath p = run_boost(componentwise_partition(x), LossSpec::l2(), y, c);
        for (std::size_t k = 1; k < p.losses.size(); ++k) CHECK(p.losses[k] <= p.losses[k - 1] + 1e-12);
    }
}

TEST_CASE("cyclic mode visits blocks in order; joint mode records no selection")
{
    Rng rng(23);
    const Matrix x = test::gaussian_matrix(20, 3, rng);
    const Vector y = test::gaussian_vector(20, rng);
    BoostConfig c;
    c.mode = BoostMode::cyclic;
    c.max_iter = 7;
    const BoostPath p = run_boost(componentwise_partition(x), LossSpec::l2(), y, c);
    const std::vector<int> expect{-1, 0, 1, 2, 0, 1, 2, 0};
    CHECK(p.selected == expect);
    c.mode = BoostMode::joint;
    const BoostPath j = run_boost(componentwise_partition(x), LossSpec::l2(), y, c);
    for (int s : j.selected) CHECK(s == -1);
}

TEST_CASE("selection ties go to the lowest block id")
{
    Rng rng(24);
    Matrix x(15, 3);
    x.col(0) = test::gaussian_vector(15, rng);
    x.col(1) = test::gaussian_vector(15, rng);
    x.col(2) = x.col(1);
    const Vector y = x.col(1) + 0.01 * test::gaussian_vector(15, rng);
    const BlockPartition part = componentwise_partition(x);
    CHECK(select_block(part, y) == 1);
}

TEST_CASE("rank-deficient blocks use the minimum-norm fit; singular penalized blocks throw")
{
    Rng rng(25);
    Matrix x(12, 3);
    x.col(0) = test::gaussian_vector(12, rng);
    x.col(1) = test::gaussian_vector(12, rng);
    x.col(2) = x.col(0) + x.col(1);
    const Vector y = test::gaussian_vector(12, rng);
    const DesignBlock b = make_block(0, x, BlockKind::linear);
    const BlockFit fit = fit_block(b, y);
    CHECK((fit.beta - linalg::pseudo_inverse(x) * y).norm() < 1e-10);

    Matrix pen = Matrix::Zero(3, 3);
    pen(0, 0) = 1.0;
    Matrix dup(12, 3);
    dup << x.col(0), x.col(1), x.col(1);
    const DesignBlock singular = make_block(1, dup, BlockKind::custom, 1.0, pen);
    CHECK_THROWS_AS(BlockSolver{singular}, linalg_error);
}

TEST_CASE("penalized SSE selection score equals SSE plus the fitted penalty")
{
    Rng rng(26);
    const Matrix x = test::gaussian_matrix(25, 4, rng);
    const Vector y = test::gaussian_vector(25, rng);
    const DesignBlock b = make_block(0, x, BlockKind::ridge, 3.0);
    const BlockFit fit = fit_block(b, y);
    const double sse = (y - x * fit.beta).squaredNorm();
    const double pen = 3.0 * fit.beta.squaredNorm();
    CHECK(fit.sse == doctest::Approx(sse));
    CHECK(fit.penalty == doctest::Approx(pen));
    CHECK(fit.score(SelectionCriterion::sse) + y.squaredNorm() == doctest::Approx(sse));
    CHECK(fit.score(SelectionCriterion::penalized_sse) + y.squaredNorm() == doctest::Approx(sse + pen));
}

TEST_CASE("offset initialisation and stopping tolerance")
{
    Rng rng(27);
    const Matrix x = test::gaussian_matrix(50, 2, rng);
    Vector y(50);
    for (Index i = 0; i < 50; ++i) y(i) = rng.bernoulli(0.7) ? 1.0 : 0.0;
    BoostConfig c;
    c.init = InitMode::offset;
    c.max_iter = 5000;
    c.stop_tol = 1e-10;
    const BoostPath p = run_boost(componentwise_partition(x), LossSpec::binomial(), y, c);
    CHECK(p.offset == doctest::Approx(std::log(y.mean() / (1.0 - y.mean()))));
    CHECK(p.terminated_by == Termination::tol);
    CHECK(p.iterations() < 5000);
}

TEST_CASE("numeric blow-up: guarded runs stop, unguarded runs throw")
{
    Matrix x = Matrix::Constant(10, 1, 10.0);
    Vector y = Vector::Constant(10, 200.0);
    BoostConfig c;
    c.nu = 1.0;
    c.max_iter = 10;
    c.divergence_guard = true;
    const BoostPath p = run_boost(componentwise_partition(x), LossSpec::poisson(), y, c);
    CHECK(p.terminated_by == Termination::divergence);
    CHECK(divergence_detector(p, 5) == Verdict::diverging);
    c.divergence_guard = false;
    CHECK_THROWS_AS(run_boost(componentwise_partition(x), LossSpec::poisson(), y, c), numeric_error);
}

TEST_CASE("divergence detector on constructed paths")
{
    std::vector<double> loss, coord;
    for (int k = 0; k <= 40; ++k) {
        loss.push_back(1.0 + std::pow(0.8, k));
        coord.push_back(1.0 - std::pow(0.8, k));
    }
    CHECK(divergence_detector(synthetic_path(loss, coord), 20) == Verdict::converging);

    std::vector<double> flat(41, 1.0), alt;
    for (int k = 0; k <= 40; ++k) alt.push_back(k % 2 == 0 ? 1.0 : -1.0);
    CHECK(divergence_detector(synthetic_path(flat, alt), 20) == Verdict::oscillating);

    std::vector<double> grow;
    for (int k = 0; k <= 40; ++k) grow.push_back(std::pow(1.5, k));
    CHECK(divergence_detector(synthetic_path(grow, coord), 20) == Verdict::diverging);

    std::vector<double> bumpy = loss;
    bumpy[35] = bumpy[34] + 0.1;
    CHECK(divergence_detector(synthetic_path(bumpy, coord), 20) == Verdict::oscillating);

    std::vector<double> with_nan = loss;
    with_nan[40] = std::nan("");
    CHECK(divergence_detector(synthetic_path(with_nan, coord), 20) == Verdict::diverging);
    CHECK_THROWS_AS(divergence_detector(synthetic_path(loss, coord), 1), config_error);
}

TEST_CASE("path CSV has one row per iterate")
{
    Rng rng(28);
    const Matrix x = test::gaussian_matrix(10, 3, rng);
    const Vector y = test::gaussian_vector(10, rng);
    BoostConfig c;
    c.max_iter = 12;
    const BoostPath p = run_boost(componentwise_partition(x), LossSpec::l2(), y, c);
    const auto file = std::filesystem::temp_directory_path() / "bampath_test_path.csv";
    write_path_csv(file, p);
    CHECK(csv::count_rows(file) == 13);
    std::filesystem::remove(file);
}

TEST_CASE("smoother boosting contracts the residual at the spectral rate")
{
    Rng rng(29);
    const Index n = 25;
    const std::vector<Matrix> smoothers{random_smoother(n, rng), random_smoother(n, rng),
                                        random_smoother(n, rng)};
    const Vector y = test::gaussian_vector(n, rng);
    for (SmootherSelection sel : {SmootherSelection::greedy, SmootherSelection::cyclic,
                                  SmootherSelection::random}) {
        SmootherConfig c;
        c.nu = 0.7;
        c.max_iter = 300;
        c.selection = sel;
        const SmootherPath p = smoother_boost(smoothers, y, c);
        CHECK(p.contraction < 1.0);
        CHECK(p.contraction == doctest::Approx(smoother_contraction(smoothers, c.nu)));
        for (std::size_t k = 0; k < p.residual_norms.size(); ++k) {
            CHECK(p.residual_norms[k]
                  <= std::pow(p.contraction, static_cast<double>(k)) * y.norm() * (1.0 + 1e-12)
                         + 1e-14 * y.norm());
        }
        CHECK(p.residual_norms.back() < 1e-8 * y.norm());
    }
}

TEST_CASE("invalid smoothers are rejected")
{
    Matrix s = Matrix::Identity(3, 3);
    s(0, 0) = 1.2;
    CHECK_THROWS_AS(validate_smoother(s), invalid_smoother_error);
    s(0, 0) = 0.0;
    CHECK_THROWS_AS(validate_smoother(s), invalid_smoother_error);
    s(0, 0) = 0.5;
    s(0, 1) = 0.1;
    CHECK_THROWS_AS(validate_smoother(s), invalid_smoother_error);
    CHECK_THROWS_AS(validate_smoother(Matrix::Identity(2, 3)), invalid_smoother_error);
}
