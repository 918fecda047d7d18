#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace bampath::svg {

struct Series
{
    std::string label;
    std::vector<double> x;
    std::vector<double> y;
};

struct ChartOptions
{
    std::string title;
    std::string x_label;
    std::string y_label;
    bool log_y = false;
    int width = 720;
    int height = 420;
};

/// Polyline chart with axes, min/max tick labels and a legend. Non-finite
/// points (and non-positive ones on a log axis) are skipped.
void write_line_chart(const std::filesystem::path& path, const std::vector<Series>& series,
                      const ChartOptions& options);

} // namespace bampath::svg
