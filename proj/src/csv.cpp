#include <bampath/csv.hpp>
#include <bampath/error.hpp>

#include <cstdio>
#include <fstream>
#include <ostream>

namespace bampath::csv {

std::string format_double(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

static void write_header(std::ostream& os, const std::vector<std::string>& labels)
{
    for (std::size_t j = 0; j < labels.size(); ++j) {
        if (j) os << ',';
        os << labels[j];
    }
    os << '\n';
}

void write_matrix(std::ostream& os, const Matrix& m, const std::vector<std::string>& labels)
{
    if (static_cast<Index>(labels.size()) != m.cols()) {
        throw invalid_spec_error("csv: label count does not match column count");
    }
    write_header(os, labels);
    for (Index i = 0; i < m.rows(); ++i) {
        for (Index j = 0; j < m.cols(); ++j) {
            if (j) os << ',';
            os << format_double(m(i, j));
        }
        os << '\n';
    }
}

void write_matrix(const std::filesystem::path& path, const Matrix& m,
                  const std::vector<std::string>& labels)
{
    std::ofstream os(path);
    if (!os) throw integrity_error("cannot open " + path.string() + " for writing");
    write_matrix(os, m, labels);
}

std::vector<std::string> numbered_labels(const std::string& prefix, Index n)
{
    std::vector<std::string> out;
    out.reserve(static_cast<std::size_t>(n));
    for (Index j = 1; j <= n; ++j) out.push_back(prefix + "_" + std::to_string(j));
    return out;
}

std::size_t count_rows(const std::filesystem::path& path)
{
    std::ifstream is(path);
    if (!is) throw integrity_error("missing CSV: " + path.string());
    std::string line;
    std::size_t lines = 0;
    while (std::getline(is, line)) {
        if (!line.empty()) ++lines;
    }
    return lines == 0 ? 0 : lines - 1;
}

struct Writer::Impl
{
    std::ofstream os;
    bool row_started = false;

    void sep()
    {
        if (row_started) os << ',';
        row_started = true;
    }
};

Writer::Writer(const std::filesystem::path& path, const std::vector<std::string>& header)
    : impl_(std::make_unique<Impl>())
{
    impl_->os.open(path);
    if (!impl_->os) throw integrity_error("cannot open " + path.string() + " for writing");
    write_header(impl_->os, header);
}

Writer::~Writer() = default;

Writer& Writer::cell(double v)
{
    impl_->sep();
    impl_->os << format_double(v);
    return *this;
}

Writer& Writer::cell(long long v)
{
    impl_->sep();
    impl_->os << v;
    return *this;
}

Writer& Writer::cell(const std::string& v)
{
    impl_->sep();
    impl_->os << v;
    return *this;
}

Writer& Writer::cells(const Vector& v)
{
    for (Index i = 0; i < v.size(); ++i) cell(v(i));
    return *this;
}

void Writer::end_row()
{
    impl_->os << '\n';
    impl_->row_started = false;
}

} // namespace bampath::csv
