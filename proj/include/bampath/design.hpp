#pragma once

#include <bampath/linalg.hpp>

#include <filesystem>
#include <string_view>
#include <vector>

namespace bampath {

enum class BlockKind { linear, ridge, pspline, custom };

std::string_view to_string(BlockKind kind);

/// One base learner: f_b(x) = X_b beta_b, fitted with penalty lambda_b * beta_b' P_b beta_b.
/// Immutable once built through make_block or make_partition.
struct DesignBlock
{
    int id = 0;
    Matrix x;
    Matrix penalty;
    double lambda = 0.0;
    BlockKind kind = BlockKind::linear;

    Index rows() const { return x.rows(); }
    Index cols() const { return x.cols(); }
    bool penalized() const { return lambda > 0.0; }

    /// X_b' X_b + lambda_b P_b
    Matrix penalized_gram() const;
};

/// Checks the DesignBlock invariants; throws invalid_spec_error.
void validate(const DesignBlock& block);

DesignBlock make_block(int id, Matrix x, BlockKind kind, double lambda = 0.0, Matrix penalty = {});

struct BlockPartition
{
    std::vector<DesignBlock> blocks;
    std::vector<std::vector<Index>> column_map;
    Index n = 0;
    Index p = 0;
    Matrix x;

    std::size_t size() const { return blocks.size(); }

    Vector gather(const Vector& beta, std::size_t b) const;
    void scatter_add(Vector& beta, std::size_t b, const Vector& delta, double scale) const;

    /// Global penalty sum_b U_b (lambda_b P_b) U_b'.
    Matrix joint_penalty() const;

    /// All columns as one block carrying joint_penalty() with lambda = 1
    /// (or lambda = 0 when no block is penalized).
    DesignBlock joint_block() const;
};

/// Requested block: a column subset of the global design.
/// An empty penalty selects the default for the kind: zero for linear,
/// identity for ridge, the diff_order difference penalty for pspline.
struct BlockSpec
{
    std::vector<Index> columns;
    BlockKind kind = BlockKind::linear;
    double lambda = 0.0;
    Matrix penalty;
    int diff_order = 2;
};

/// Blocks follow spec order. Throws partition_error on overlapping,
/// out-of-range or non-covering column sets.
BlockPartition make_partition(const Matrix& x, const std::vector<BlockSpec>& specs);

/// Each column its own unpenalized block.
BlockPartition componentwise_partition(const Matrix& x);

/// Single block spanning every column.
BlockPartition joint_partition(const Matrix& x, BlockKind kind = BlockKind::linear,
                               double lambda = 0.0, Matrix penalty = {}, int diff_order = 2);

struct SplineSpec
{
    int knots = 10;      // equidistant knots including both domain ends
    int degree = 3;
    int diff_order = 2;
    double lo = 0.0;
    double hi = 1.0;

    Index basis_size() const { return knots + degree - 1; }
    /// Throws invalid_spec_error.
    void validate() const;
};

/// Extended knot vector: `knots` equidistant positions on [lo, hi] plus
/// `degree` replicas of the spacing beyond each end.
Vector knot_vector(const SplineSpec& spec);

/// n x (knots + degree - 1) B-spline design via the Cox-de Boor triangle.
Matrix bspline_basis(const Vector& x, const SplineSpec& spec);

/// D_d' D_d for the (p - d) x p d-th order difference matrix D_d.
Matrix difference_penalty(Index p, int d);

/// D_d itself.
Matrix difference_matrix(Index p, int d);

} // namespace bampath
