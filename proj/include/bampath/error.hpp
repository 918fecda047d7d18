#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>

namespace bampath {

/// Base class of every error raised by the library.
class bampath_error : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

/// Input lies outside the region where an operation is defined.
class domain_error : public bampath_error
{
public:
    using bampath_error::bampath_error;
};

/// Malformed spline, block or penalty specification.
class invalid_spec_error : public bampath_error
{
public:
    using bampath_error::bampath_error;
};

/// Block column sets overlap or do not cover the design.
class partition_error : public bampath_error
{
public:
    using bampath_error::bampath_error;
};

/// Non-finite values or exponent overflow. Carries the offending
/// observation index when one is known.
class numeric_error : public bampath_error
{
public:
    explicit numeric_error(const std::string& msg, std::optional<std::size_t> index = std::nullopt)
        : bampath_error(index ? msg + " (index " + std::to_string(*index) + ")" : msg),
          index_(index)
    {}

    std::optional<std::size_t> index() const noexcept { return index_; }

private:
    std::optional<std::size_t> index_;
};

/// Singular or otherwise unusable linear system.
class linalg_error : public bampath_error
{
public:
    using bampath_error::bampath_error;
};

/// Design matrix lacks the column rank an operation requires.
class rank_error : public linalg_error
{
public:
    using linalg_error::linalg_error;
};

/// Smoother matrix with an eigenvalue outside (0, 1].
class invalid_smoother_error : public bampath_error
{
public:
    using bampath_error::bampath_error;
};

/// Invalid constant handed to a rate formula.
class invalid_constant_error : public bampath_error
{
public:
    using bampath_error::bampath_error;
};

/// Bad experiment or run configuration.
class config_error : public bampath_error
{
public:
    using bampath_error::bampath_error;
};

/// Output directory is missing files its manifest promises.
class integrity_error : public bampath_error
{
public:
    using bampath_error::bampath_error;
};

} // namespace bampath
