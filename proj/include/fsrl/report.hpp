#pragma once

#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "fsrl/stats.hpp"

namespace fsrl {

// Shortest text that reads back to the same double; stable across runs.
std::string format_number(double x);

// Writes fields separated by commas. Fields are written as given, so callers
// keep commas out of them.
void write_csv_row(std::ostream& out, const std::vector<std::string>& fields);

// Per-point mean and standard error across runs. Every run must have the
// same number of points; throws std::invalid_argument otherwise or when
// there are no runs. With one run the standard error is 0 and n = 1 flags it.
std::vector<MeanStderr> aggregate(const std::vector<std::vector<double>>& runs);

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<MeanStderr> y;
};

// Whitespace-delimited "x mean stderr n" rows after a '#' header, readable by
// gnuplot with `using 1:2:3 with yerrorlines`.
void write_plot_data(std::ostream& out, const Series& series);

// Self-contained SVG with one polyline per series and vertical error bars.
void write_svg(std::ostream& out, const std::vector<Series>& series, const std::string& title,
               const std::string& x_label, const std::string& y_label);

// "mean (stderr)" with one decimal, e.g. "-94.6 (3.6)"; a single run is
// marked "-94.6 (n=1)".
std::string format_cell(const MeanStderr& m, int decimals = 1);

// Right-aligned text table. Missing cells print as "-".
std::string format_table(const std::string& corner, const std::vector<std::string>& row_labels,
                         const std::vector<std::string>& col_labels,
                         const std::vector<std::vector<std::optional<MeanStderr>>>& cells,
                         int decimals = 1);

}  // namespace fsrl
