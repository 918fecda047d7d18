#include <bampath/design.hpp>
#include <bampath/error.hpp>

#include <algorithm>
#include <cmath>
#include <string>

namespace bampath {

std::string_view to_string(BlockKind kind)
{
    switch (kind) {
    case BlockKind::linear: return "linear";
    case BlockKind::ridge: return "ridge";
    case BlockKind::pspline: return "pspline";
    case BlockKind::custom: return "custom";
    }
    return "unknown";
}

Matrix DesignBlock::penalized_gram() const
{
    Matrix g = linalg::gram(x);
    if (lambda > 0.0) g += lambda * penalty;
    return g;
}

void validate(const DesignBlock& block)
{
    const std::string where = "block " + std::to_string(block.id) + ": ";
    if (block.penalty.rows() != block.cols() || block.penalty.cols() != block.cols()) {
        throw invalid_spec_error(where + "penalty dimension does not match column count");
    }
    if (!(block.lambda >= 0.0) || !std::isfinite(block.lambda)) {
        throw invalid_spec_error(where + "lambda must be finite and nonnegative");
    }
    if (block.kind == BlockKind::linear
        && (block.lambda != 0.0 || (block.penalty.size() && block.penalty.cwiseAbs().maxCoeff() != 0.0))) {
        throw invalid_spec_error(where + "linear blocks carry no penalty");
    }
    if (!block.x.allFinite() || !block.penalty.allFinite()) {
        throw invalid_spec_error(where + "non-finite entries");
    }
    if (block.cols() == 0) return;
    if (!linalg::is_symmetric(block.penalty, 1e-12)) {
        throw invalid_spec_error(where + "penalty is not symmetric");
    }
    const Vector ev = linalg::sym_eigenvalues(block.penalty);
    const double eps_psd = 1e-10 * (1.0 + std::max(ev.maxCoeff(), 0.0));
    if (ev.minCoeff() < -eps_psd) {
        throw invalid_spec_error(where + "penalty is not positive semi-definite");
    }
}

static Matrix default_penalty(BlockKind kind, Index p, int diff_order)
{
    switch (kind) {
    case BlockKind::linear: return Matrix::Zero(p, p);
    case BlockKind::ridge: return Matrix::Identity(p, p);
    case BlockKind::pspline: return difference_penalty(p, diff_order);
    case BlockKind::custom: break;
    }
    throw invalid_spec_error("custom blocks require an explicit penalty");
}

DesignBlock make_block(int id, Matrix x, BlockKind kind, double lambda, Matrix penalty)
{
    DesignBlock block;
    block.id = id;
    block.kind = kind;
    block.lambda = lambda;
    block.penalty = penalty.size() ? std::move(penalty) : default_penalty(kind, x.cols(), 2);
    block.x = std::move(x);
    validate(block);
    return block;
}

Vector BlockPartition::gather(const Vector& beta, std::size_t b) const
{
    const auto& cols = column_map[b];
    Vector out(static_cast<Index>(cols.size()));
    for (std::size_t j = 0; j < cols.size(); ++j) out(static_cast<Index>(j)) = beta(cols[j]);
    return out;
}

void BlockPartition::scatter_add(Vector& beta, std::size_t b, const Vector& delta,
                                 double scale) const
{
    const auto& cols = column_map[b];
    for (std::size_t j = 0; j < cols.size(); ++j) {
        beta(cols[j]) += scale * delta(static_cast<Index>(j));
    }
}

Matrix BlockPartition::joint_penalty() const
{
    Matrix pen = Matrix::Zero(p, p);
    for (std::size_t b = 0; b < blocks.size(); ++b) {
        const auto& cols = column_map[b];
        const auto& blk = blocks[b];
        if (blk.lambda == 0.0) continue;
        for (std::size_t i = 0; i < cols.size(); ++i) {
            for (std::size_t j = 0; j < cols.size(); ++j) {
                pen(cols[i], cols[j]) +=
                    blk.lambda * blk.penalty(static_cast<Index>(i), static_cast<Index>(j));
            }
        }
    }
    return pen;
}

DesignBlock BlockPartition::joint_block() const
{
    if (blocks.size() == 1 && column_map[0].size() == static_cast<std::size_t>(p)) {
        bool identity_order = true;
        for (std::size_t j = 0; j < column_map[0].size(); ++j) {
            identity_order = identity_order && column_map[0][j] == static_cast<Index>(j);
        }
        if (identity_order) return blocks[0];
    }
    DesignBlock joint;
    joint.id = 0;
    joint.x = x;
    joint.penalty = joint_penalty();
    const bool any = std::any_of(blocks.begin(), blocks.end(),
                                 [](const DesignBlock& b) { return b.lambda > 0.0; });
    joint.lambda = any ? 1.0 : 0.0;
    joint.kind = any ? BlockKind::custom : BlockKind::linear;
    return joint;
}

BlockPartition make_partition(const Matrix& x, const std::vector<BlockSpec>& specs)
{
    if (specs.empty()) throw partition_error("partition needs at least one block");
    std::vector<int> owner(static_cast<std::size_t>(x.cols()), -1);

    BlockPartition part;
    part.n = x.rows();
    part.p = x.cols();
    part.x = x;
    for (std::size_t b = 0; b < specs.size(); ++b) {
        const auto& spec = specs[b];
        if (spec.columns.empty()) {
            throw partition_error("block " + std::to_string(b) + " has no columns");
        }
        Matrix xb(x.rows(), static_cast<Index>(spec.columns.size()));
        for (std::size_t j = 0; j < spec.columns.size(); ++j) {
            const Index c = spec.columns[j];
            if (c < 0 || c >= x.cols()) {
                throw partition_error("column " + std::to_string(c) + " out of range");
            }
            auto& o = owner[static_cast<std::size_t>(c)];
            if (o != -1) {
                throw partition_error("column " + std::to_string(c) + " claimed by blocks "
                                      + std::to_string(o) + " and " + std::to_string(b));
            }
            o = static_cast<int>(b);
            xb.col(static_cast<Index>(j)) = x.col(c);
        }
        Matrix pen = spec.penalty.size()
                         ? spec.penalty
                         : default_penalty(spec.kind, xb.cols(), spec.diff_order);
        part.blocks.push_back(
            make_block(static_cast<int>(b), std::move(xb), spec.kind, spec.lambda, std::move(pen)));
        part.column_map.push_back(spec.columns);
    }
    for (std::size_t c = 0; c < owner.size(); ++c) {
        if (owner[c] == -1) {
            throw partition_error("column " + std::to_string(c) + " not covered by any block");
        }
    }
    return part;
}

BlockPartition componentwise_partition(const Matrix& x)
{
    std::vector<BlockSpec> specs;
    for (Index j = 0; j < x.cols(); ++j) {
        BlockSpec spec;
        spec.columns = {j};
        specs.push_back(std::move(spec));
    }
    return make_partition(x, specs);
}

BlockPartition joint_partition(const Matrix& x, BlockKind kind, double lambda, Matrix penalty,
                               int diff_order)
{
    BlockSpec spec;
    spec.kind = kind;
    spec.lambda = lambda;
    spec.penalty = std::move(penalty);
    spec.diff_order = diff_order;
    for (Index j = 0; j < x.cols(); ++j) spec.columns.push_back(j);
    return make_partition(x, {spec});
}

void SplineSpec::validate() const
{
    if (knots < 2) throw invalid_spec_error("spline: at least two knots required");
    if (degree < 0) throw invalid_spec_error("spline: degree must be nonnegative");
    if (diff_order < 1 || diff_order >= basis_size()) {
        throw invalid_spec_error("spline: difference order must lie in [1, basis size)");
    }
    if (!(hi > lo) || !std::isfinite(lo) || !std::isfinite(hi)) {
        throw invalid_spec_error("spline: degenerate domain");
    }
}

Vector knot_vector(const SplineSpec& spec)
{
    spec.validate();
    const double h = (spec.hi - spec.lo) / (spec.knots - 1);
    const Index m = spec.knots + 2 * spec.degree;
    Vector t(m);
    for (Index i = 0; i < m; ++i) t(i) = spec.lo + static_cast<double>(i - spec.degree) * h;
    // pin the domain ends exactly
    t(spec.degree) = spec.lo;
    t(spec.degree + spec.knots - 1) = spec.hi;
    return t;
}

Matrix bspline_basis(const Vector& x, const SplineSpec& spec)
{
    const Vector t = knot_vector(spec);
    const int l = spec.degree;
    const Index nb = spec.basis_size();
    const Index first = l;                     // first interior interval
    const Index last = l + spec.knots - 2;     // last interior interval

    Matrix basis = Matrix::Zero(x.size(), nb);
    std::vector<double> n_val(static_cast<std::size_t>(l + 1));
    std::vector<double> left(static_cast<std::size_t>(l + 1));
    std::vector<double> right(static_cast<std::size_t>(l + 1));

    for (Index i = 0; i < x.size(); ++i) {
        const double xi = x(i);
        if (!(xi >= spec.lo && xi <= spec.hi)) {
            throw domain_error("bspline_basis: x[" + std::to_string(i) + "] = "
                               + std::to_string(xi) + " outside spline domain");
        }
        Index m = first;
        if (xi >= spec.hi) {
            m = last;
        } else {
            // upper_bound over the interior knots t[first .. last + 1]
            const double* begin = t.data() + first;
            const double* end = t.data() + last + 2;
            m = (std::upper_bound(begin, end, xi) - t.data()) - 1;
            m = std::clamp(m, first, last);
        }

        n_val[0] = 1.0;
        for (int j = 1; j <= l; ++j) {
            left[static_cast<std::size_t>(j)] = xi - t(m + 1 - j);
            right[static_cast<std::size_t>(j)] = t(m + j) - xi;
            double saved = 0.0;
            for (int r = 0; r < j; ++r) {
                const double denom =
                    right[static_cast<std::size_t>(r + 1)] + left[static_cast<std::size_t>(j - r)];
                const double tmp = n_val[static_cast<std::size_t>(r)] / denom;
                n_val[static_cast<std::size_t>(r)] =
                    saved + right[static_cast<std::size_t>(r + 1)] * tmp;
                saved = left[static_cast<std::size_t>(j - r)] * tmp;
            }
            n_val[static_cast<std::size_t>(j)] = saved;
        }
        for (int r = 0; r <= l; ++r) basis(i, m - l + r) = n_val[static_cast<std::size_t>(r)];
    }
    return basis;
}

Matrix difference_matrix(Index p, int d)
{
    if (d < 1 || d >= p) {
        throw invalid_spec_error("difference_penalty: order must lie in [1, p)");
    }
    Matrix dm = Matrix::Identity(p, p);
    for (int k = 0; k < d; ++k) {
        const Index r = dm.rows();
        dm = (dm.bottomRows(r - 1) - dm.topRows(r - 1)).eval();
    }
    return dm;
}

Matrix difference_penalty(Index p, int d)
{
    const Matrix dm = difference_matrix(p, d);
    return dm.transpose() * dm;
}

} // namespace bampath
