#pragma once

#include <bampath/linalg.hpp>

#include <filesystem>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

namespace bampath::csv {

/// Decimal text that round-trips a double ("%.17g").
std::string format_double(double v);

/// Row-major CSV with a header row of column labels.
void write_matrix(std::ostream& os, const Matrix& m, const std::vector<std::string>& labels);
void write_matrix(const std::filesystem::path& path, const Matrix& m,
                  const std::vector<std::string>& labels);

/// Labels prefix_1 .. prefix_n.
std::vector<std::string> numbered_labels(const std::string& prefix, Index n);

/// Data rows in a CSV file (header excluded). Throws integrity_error when the
/// file is missing.
std::size_t count_rows(const std::filesystem::path& path);

/// Streaming writer for heterogeneous rows.
class Writer
{
public:
    Writer(const std::filesystem::path& path, const std::vector<std::string>& header);
    ~Writer();

    Writer(const Writer&) = delete;
    Writer& operator=(const Writer&) = delete;

    Writer& cell(double v);
    Writer& cell(long long v);
    Writer& cell(int v) { return cell(static_cast<long long>(v)); }
    Writer& cell(std::size_t v) { return cell(static_cast<long long>(v)); }
    Writer& cell(const std::string& v);
    Writer& cell(const char* v) { return cell(std::string(v)); }
    Writer& cells(const Vector& v);
    void end_row();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

} // namespace bampath::csv
