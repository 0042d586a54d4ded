#pragma once

// Result tables (CSV with '#' metadata lines) and simple SVG line plots.

#include <string>
#include <utility>
#include <vector>

namespace ctap::experiments {

struct ResultTable {
    std::string name;
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;
    std::vector<std::pair<std::string, std::string>> metadata;

    ResultTable() = default;
    ResultTable(std::string name, std::vector<std::string> columns);

    /// Throws std::invalid_argument when the width does not match.
    void add_row(std::vector<double> row);

    /// Replaces an existing key or appends a new one.
    void set_meta(const std::string& key, const std::string& value);
    void set_meta(const std::string& key, double value);

    /// Column values by name; throws std::out_of_range when absent.
    std::vector<double> column(const std::string& name) const;

    std::string to_csv() const;
    void write_csv(const std::string& path) const;
};

/// Shortest round-trip decimal for a double.
std::string format_number(double v);

struct PlotSeries {
    std::string label;
    std::vector<double> x;
    std::vector<double> y;
};

struct Plot {
    std::string name;
    std::string title;
    std::string x_label;
    std::string y_label;
    bool log_x = false;
    bool log_y = false;
    std::vector<PlotSeries> series;
    std::vector<double> x_markers;  // vertical guide lines

    std::string to_svg() const;
    void write_svg(const std::string& path) const;
};

}  // namespace ctap::experiments
