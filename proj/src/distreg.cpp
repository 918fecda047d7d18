#include <bampath/distreg.hpp>
#include <bampath/csv.hpp>
#include <bampath/error.hpp>
#include <bampath/losses.hpp>
#include <bampath/rng.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace bampath {

namespace {

void check_model(const GaussianLSModel& m, const Vector& y)
{
    if (m.x.rows() != y.size() || m.z.rows() != y.size()) {
        throw domain_error("location-scale: design rows do not match outcome length");
    }
    if (m.x.cols() != m.beta.size() || m.z.cols() != m.xi.size()) {
        throw domain_error("location-scale: coefficient length does not match design");
    }
    if (!m.beta.allFinite() || !m.xi.allFinite()) {
        throw numeric_error("location-scale: non-finite coefficients");
    }
}

// log sigma per observation, guarded so that sigma^2 = exp(2 eta) stays finite.
Vector log_sigma(const GaussianLSModel& m)
{
    Vector eta = m.z * m.xi;
    for (Index i = 0; i < eta.size(); ++i) {
        if (!std::isfinite(eta(i)) || 2.0 * std::abs(eta(i)) > predictor_limit) {
            throw numeric_error("location-scale: scale predictor overflow",
                                static_cast<std::size_t>(i));
        }
    }
    return eta;
}

struct Residuals
{
    Vector eta;
    Vector r;
    Vector inv_s2;   // 1 / sigma^2
};

Residuals residuals(const GaussianLSModel& m, const Vector& y)
{
    Residuals out;
    out.eta = log_sigma(m);
    out.r = y - m.x * m.beta;
    out.inv_s2 = (-2.0 * out.eta.array()).exp().matrix();
    if (!out.r.allFinite()) throw numeric_error("location-scale: non-finite residuals");
    return out;
}

} // namespace

LSEval gauss_ls_eval(const GaussianLSModel& model, const Vector& y)
{
    check_model(model, y);
    const Residuals res = residuals(model, y);
    const Vector r2s = res.r.cwiseProduct(res.r).cwiseProduct(res.inv_s2);
    LSEval out;
    out.nll = 0.5 * static_cast<double>(y.size()) * std::log(2.0 * std::numbers::pi)
              + res.eta.sum() + 0.5 * r2s.sum();
    out.grad_beta = -(model.x.transpose() * res.r.cwiseProduct(res.inv_s2));
    out.grad_xi = model.z.transpose() * (Vector::Ones(y.size()) - r2s);
    if (!std::isfinite(out.nll)) throw numeric_error("location-scale: non-finite likelihood");
    return out;
}

Matrix LSHessian::full() const
{
    const Index pb = bb.rows();
    const Index px = xx.rows();
    Matrix h(pb + px, pb + px);
    h.topLeftCorner(pb, pb) = bb;
    h.topRightCorner(pb, px) = bx;
    h.bottomLeftCorner(px, pb) = xb;
    h.bottomRightCorner(px, px) = xx;
    return h;
}

LSHessian gauss_ls_hessian(const GaussianLSModel& model, const Vector& y)
{
    check_model(model, y);
    const Residuals res = residuals(model, y);
    LSHessian h;
    h.bb = model.x.transpose() * res.inv_s2.asDiagonal() * model.x;
    h.bx = 2.0 * model.x.transpose() * res.r.cwiseProduct(res.inv_s2).asDiagonal() * model.z;
    h.xb = h.bx.transpose();
    const Vector w = 2.0 * res.r.cwiseProduct(res.r).cwiseProduct(res.inv_s2);
    h.xx = model.z.transpose() * w.asDiagonal() * model.z;
    return h;
}

BiconvexityReport biconvexity_check(int trials, std::uint64_t seed, double eps)
{
    if (trials < 1) throw config_error("biconvexity_check: trials must be positive");
    BiconvexityReport rep;
    rep.trials = trials;
    rep.min_eig_bb = std::numeric_limits<double>::infinity();
    rep.min_eig_xx = std::numeric_limits<double>::infinity();
    Rng rng(seed);
    auto gaussian = [&](Index r, Index c, double sd) {
        Matrix m(r, c);
        for (Index i = 0; i < r; ++i)
            for (Index j = 0; j < c; ++j) m(i, j) = sd * rng.normal();
        return m;
    };
    // Smallest eigenvalue relative to max(1, lambda_max).
    auto rel_min = [](const Matrix& h) {
        const Vector ev = linalg::sym_eigenvalues(h);
        return ev.minCoeff() / std::max(1.0, ev.maxCoeff());
    };
    for (int t = 0; t < trials; ++t) {
        const Index n = 5 + static_cast<Index>(rng.index(26));
        const Index pb = 1 + static_cast<Index>(rng.index(4));
        const Index px = 1 + static_cast<Index>(rng.index(3));
        GaussianLSModel m{gaussian(n, pb, 1.0), gaussian(n, px, 1.0), gaussian(pb, 1, 1.0),
                          gaussian(px, 1, 0.5)};
        const Vector y = gaussian(n, 1, 2.0);
        const LSHessian h = gauss_ls_hessian(m, y);
        rep.min_eig_bb = std::min(rep.min_eig_bb, rel_min(h.bb));
        rep.min_eig_xx = std::min(rep.min_eig_xx, rel_min(h.xx));
    }
    rep.biconvex = rep.min_eig_bb >= -eps && rep.min_eig_xx >= -eps;

    // Ray xi = t xi0 with z' xi0 = -1 < 0 for all rows: sigma -> 0.
    {
        const Index n = 10;
        Matrix z(n, 2);
        Matrix x(n, 1);
        Vector y(n);
        for (Index i = 0; i < n; ++i) {
            z(i, 0) = 1.0;
            z(i, 1) = rng.normal();
            x(i, 0) = 1.0;
            y(i) = 1.0 + 0.1 * static_cast<double>(i);
        }
        const Vector xi0 = (Vector(2) << -1.0, 0.0).finished();
        double prev = 0.0;
        bool increasing = true;
        for (int s = 0; s <= 8; ++s) {
            const double t = 4.0 * s;
            GaussianLSModel m{x, z, Vector::Zero(1), t * xi0};
            const double lm = linalg::lambda_max(gauss_ls_hessian(m, y).xx);
            rep.ray_t.push_back(t);
            rep.ray_lambda_max.push_back(lm);
            if (s > 0 && !(lm > prev)) increasing = false;
            prev = lm;
        }
        rep.ray_unbounded =
            increasing && rep.ray_lambda_max.back() > 1e12 * rep.ray_lambda_max.front();
    }

    // n = 1 counterexample.
    {
        GaussianLSModel m{Matrix::Ones(1, 1), Matrix::Ones(1, 1), Vector::Ones(1),
                          Vector::Ones(1)};
        const Vector y = Vector::Constant(1, 2.0);
        rep.counterexample_eigs = linalg::sym_eigenvalues(gauss_ls_hessian(m, y).full());
        rep.counterexample_indefinite =
            rep.counterexample_eigs.minCoeff() < 0.0 && rep.counterexample_eigs.maxCoeff() > 0.0;
    }
    return rep;
}

LSBoostResult cyclic_boost_ls(const Matrix& x, const Matrix& z, const Vector& y,
                              const LSBoostConfig& config)
{
    if (!(config.nu > 0.0 && config.nu <= 1.0)) throw config_error("nu must lie in (0, 1]");
    if (config.max_iter < 1) throw config_error("max_iter must be at least 1");
    const DesignBlock mean_block = make_block(0, x, BlockKind::linear);
    const DesignBlock scale_block = make_block(1, z, BlockKind::linear);
    const BlockSolver mean_solver(mean_block);
    const BlockSolver scale_solver(scale_block);

    GaussianLSModel model{x, z, Vector::Zero(x.cols()), Vector::Zero(z.cols())};
    LSBoostResult out;
    auto record = [&](BoostPath& path, const Vector& coef, const LSEval& ev, const Vector& grad) {
        path.betas.push_back(coef);
        path.losses.push_back(ev.nll);
        path.selected.push_back(-1);
        path.grad_norms.push_back(grad.norm());
    };

    LSEval ev = gauss_ls_eval(model, y);
    record(out.mean, model.beta, ev, ev.grad_beta);
    record(out.scale, model.xi, ev, ev.grad_xi);

    try {
        for (int k = 1; k <= config.max_iter; ++k) {
            {
                const Residuals res = residuals(model, y);
                const Vector u = res.r.cwiseProduct(res.inv_s2);
                model.beta += config.nu * mean_solver.fit(u).beta;
                ev = gauss_ls_eval(model, y);
                record(out.mean, model.beta, ev, ev.grad_beta);
            }
            if (config.update_scale) {
                const Residuals res = residuals(model, y);
                const Vector u = (res.r.cwiseProduct(res.r).cwiseProduct(res.inv_s2).array() - 1.0)
                                     .matrix();
                model.xi += config.nu * scale_solver.fit(u).beta;
                ev = gauss_ls_eval(model, y);
            }
            record(out.scale, model.xi, ev, ev.grad_xi);
        }
    } catch (const numeric_error& e) {
        out.error = e.what();
        out.mean.error = out.error;
        out.scale.error = out.error;
        out.mean.terminated_by = Termination::divergence;
        out.scale.terminated_by = Termination::divergence;
    }
    out.mean_verdict = divergence_detector(out.mean, std::max(2, config.window));
    out.scale_verdict = divergence_detector(out.scale, std::max(2, config.window));
    return out;
}

void write_paired_csv(const std::filesystem::path& file, const LSBoostResult& result)
{
    const Index pm = result.mean.betas.empty() ? 0 : result.mean.betas.front().size();
    const Index ps = result.scale.betas.empty() ? 0 : result.scale.betas.front().size();
    const Index m = std::max(pm, ps);
    std::vector<std::string> header{"k", "model", "loss"};
    for (const auto& l : csv::numbered_labels("coef", m)) header.push_back(l);
    csv::Writer w(file, header);
    const std::size_t rows = std::max(result.mean.betas.size(), result.scale.betas.size());
    auto emit = [&](std::size_t k, const char* name, const BoostPath& p) {
        if (k >= p.betas.size()) return;
        w.cell(k).cell(name).cell(p.losses[k]);
        for (Index j = 0; j < m; ++j) {
            if (j < p.betas[k].size()) {
                w.cell(p.betas[k](j));
            } else {
                w.cell("");
            }
        }
        w.end_row();
    };
    for (std::size_t k = 0; k < rows; ++k) {
        emit(k, "mean", result.mean);
        emit(k, "scale", result.scale);
    }
}

} // namespace bampath
