#include <bampath/boost.hpp>
#include <bampath/closedform.hpp>
#include <bampath/error.hpp>

#include "test_util.hpp"

#include <doctest.h>

#include <cmath>

using namespace bampath;

namespace {

// beta_{k+1} = beta_k + nu A^{-1} X'(y - X beta_k), A = X'X + lambda P, via a fresh LU.
std::vector<Vector> recursion(const Matrix& x, const Vector& y, const Matrix& pen, double lambda,
                              double nu, int k_max)
{
    const Matrix a = x.transpose() * x + lambda * pen;
    const Eigen::FullPivLU<Matrix> lu(a);
    Vector b = Vector::Zero(x.cols());
    std::vector<Vector> out{b};
    for (int k = 0; k < k_max; ++k) {
        b += nu * lu.solve(x.transpose() * (y - x * b));
        out.push_back(b);
    }
    return out;
}

} // namespace

TEST_CASE("shrinkage factor")
{
    CHECK(shrinkage_factor(0.1, 0) == 0.0);
    CHECK(shrinkage_factor(1.0, 3) == 1.0);
    CHECK(shrinkage_factor(0.5, 2) == doctest::Approx(0.75));
    // tiny nu keeps full relative precision where 1 - (1-nu)^k would cancel
    CHECK(shrinkage_factor(1e-12, 1) == doctest::Approx(1e-12).epsilon(1e-12));
    CHECK(shrinkage_factor(1e-9, 1000) == doctest::Approx(-std::expm1(1000 * std::log1p(-1e-9))));
}

TEST_CASE("linear closed form matches iterative joint boosting")
{
    Rng rng(31);
    for (double nu : {0.1, 0.5, 1.0}) {
        const Matrix x = test::gaussian_matrix(60, 5, rng);
        const Vector y = test::gaussian_vector(60, rng);
        BoostConfig c;
        c.nu = nu;
        c.mode = BoostMode::joint;
        c.max_iter = 200;
        const BoostPath p = run_boost(joint_partition(x), LossSpec::l2(), y, c);
        const Vector ols = x.colPivHouseholderQr().solve(y);
        for (int k = 1; k <= c.max_iter; ++k) {
            const Vector cf = linear_boost_path(x, y, nu, k);
            CHECK(linalg::rel_diff(cf, (1.0 - std::pow(1.0 - nu, k)) * ols) < 1e-12);
            CHECK(linalg::rel_diff(p.betas[static_cast<std::size_t>(k)], cf) < 1e-10);
        }
    }
    Matrix rd = test::gaussian_matrix(10, 3, rng);
    rd.col(2) = rd.col(0);
    CHECK_THROWS_AS(linear_boost_path(rd, test::gaussian_vector(10, rng), 0.1, 3), rank_error);
}

TEST_CASE("penalized closed form matches the plain recursion")
{
    Rng rng(32);
    const Matrix x = test::gaussian_matrix(40, 6, rng);
    const Vector y = test::gaussian_vector(40, rng);
    const Matrix pen = difference_penalty(6, 2);
    for (double lambda : {0.0, 0.5, 20.0}) {
        const auto ref = recursion(x, y, pen, lambda, 0.3, 150);
        for (int k : {1, 2, 10, 77, 150}) {
            CHECK(linalg::rel_diff(penalized_boost_path(x, y, pen, lambda, 0.3, k),
                                   ref[static_cast<std::size_t>(k)])
                  < 1e-10);
        }
    }
    // rank-deficient X without penalty: the path shrinks the min-norm solution
    Matrix rd = x;
    rd.col(5) = rd.col(0) - rd.col(1);
    const Vector mn = linalg::pseudo_inverse(rd) * y;
    CHECK(linalg::rel_diff(penalized_boost_path(rd, y, pen, 0.0, 0.2, 9), shrinkage_factor(0.2, 9) * mn)
          < 1e-10);
    // the engine agrees for a penalized joint learner
    BoostConfig c;
    c.mode = BoostMode::joint;
    c.nu = 0.3;
    c.max_iter = 40;
    const BoostPath p = run_boost(joint_partition(x, BlockKind::pspline, 5.0), LossSpec::l2(), y, c);
    CHECK(linalg::rel_diff(p.last(), penalized_boost_path(x, y, pen, 5.0, 0.3, 40)) < 1e-10);
}

TEST_CASE("every penalized path converges to the unpenalized fit")
{
    Rng rng(33);
    const Matrix x = test::gaussian_matrix(30, 4, rng);
    const Vector y = test::gaussian_vector(30, rng);
    const Matrix pen = Matrix::Identity(4, 4);
    const Vector ols = x.colPivHouseholderQr().solve(y);
    CHECK(linalg::rel_diff(boost_limit(x, y, 100.0, pen), ols) < 1e-12);
    CHECK(linalg::rel_diff(penalized_boost_path(x, y, pen, 1.0, 1.0, 20000), ols) < 1e-8);
    const Vector pls = penalized_least_squares(x, y, pen, 1.0);
    CHECK(linalg::rel_diff(pls, (x.transpose() * x + pen).ldlt().solve(x.transpose() * y)) < 1e-12);
    CHECK(linalg::rel_diff(pls, ols) > 1e-3);
}

TEST_CASE("implicit penalty reproduces the boosting iterate")
{
    Rng rng(34);
    for (double lambda : {0.0, 3.0}) {
        const Matrix x = test::gaussian_matrix(50, 5, rng);
        const Vector y = test::gaussian_vector(50, rng);
        const Matrix pen = difference_penalty(5, 1) + 0.1 * Matrix::Identity(5, 5);
        for (int k : {1, 5, 30, 64, 200}) {
            const ImplicitPenalty ip = implicit_penalty(x, y, pen, lambda, 0.2, k);
            const Vector bk = penalized_boost_path(x, y, pen, lambda, 0.2, k);
            const Vector xty = x.transpose() * y;
            const Vector resid = (x.transpose() * x + ip.gamma) * bk - xty;
            CHECK(resid.norm() / xty.norm() < 1e-8);
            CHECK(linalg::is_symmetric(ip.gamma, 1e-10));
            CHECK(linalg::sym_eigenvalues(ip.gamma).minCoeff() > -1e-8 * ip.gamma.norm());
            CHECK(linalg::rel_diff(ip.beta_gamma, bk) < 1e-8);
            if (k <= 64) {
                CHECK(test::rel_err(ip.gamma, implicit_penalty_direct(x, pen, lambda, 0.2, k)) < 1e-8);
            }
        }
    }
}

TEST_CASE("isotropic design: ridge-equivalent lambda")
{
    CHECK_THROWS_AS(ridge_equivalent_lambda(1.0, 0.1, 0), domain_error);
    CHECK(ridge_equivalent_lambda(2.0, 0.5, 1) == doctest::Approx(2.0));
    CHECK(ridge_equivalent_lambda(2.0, 0.5, 2) == doctest::Approx(2.0 * 0.25 / 0.75));
    // ridge base learner: rate nu sigma2 / (sigma2 + lambda)
    const double rate = 0.5 * 2.0 / (2.0 + 6.0);
    CHECK(ridge_equivalent_lambda(2.0, 0.5, 3, 6.0)
          == doctest::Approx(2.0 * std::pow(1 - rate, 3) / (1 - std::pow(1 - rate, 3))));

    Rng rng(35);
    const Matrix q = Eigen::HouseholderQR<Matrix>(test::gaussian_matrix(30, 3, rng)).householderQ()
                     * Matrix::Identity(30, 3);
    const Matrix x = std::sqrt(3.0) * q;
    const Vector y = test::gaussian_vector(30, rng);
    const RidgePath rp(x, y);
    for (int k : {1, 4, 25, 300}) {
        const Vector ridge = (x.transpose() * x + ridge_equivalent_lambda(3.0, 0.1, k) * Matrix::Identity(3, 3))
                                 .ldlt()
                                 .solve(x.transpose() * y);
        CHECK(linalg::rel_diff(linear_boost_path(x, y, 0.1, k), ridge) < 1e-10);
        CHECK(linalg::rel_diff(rp.solve(ridge_equivalent_lambda(3.0, 0.1, k)), ridge) < 1e-12);
    }
}

TEST_CASE("ridge path nearest-point search")
{
    Rng rng(36);
    const Matrix x = test::gaussian_matrix(40, 3, rng);
    const Vector y = test::gaussian_vector(40, rng);
    const RidgePath rp(x, y);
    const auto grid = log_grid(1e-4, 1e4, 50);
    CHECK(grid.size() == 50);
    CHECK(grid.front() == doctest::Approx(1e-4));
    CHECK(grid.back() == doctest::Approx(1e4));
    // a point on the path between grid nodes: refinement finds it
    const Vector on_path = rp.solve(3.3);
    const auto near = rp.nearest(on_path, grid, true);
    CHECK(near.distance < 1e-6);
    CHECK(near.lambda == doctest::Approx(3.3).epsilon(1e-3));
    CHECK(near.grid_distance >= near.distance);
    const auto coarse = rp.nearest(on_path, grid, false);
    CHECK(coarse.distance == doctest::Approx(coarse.grid_distance));
}
