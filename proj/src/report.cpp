#include "fsrl/report.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>

namespace fsrl {

std::string format_number(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, x);
  if (ec != std::errc()) throw std::runtime_error("format_number: conversion failed");
  return std::string(buf, end);
}

void write_csv_row(std::ostream& out, const std::vector<std::string>& fields) {
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out << ',';
    out << fields[i];
  }
  out << '\n';
}

std::vector<MeanStderr> aggregate(const std::vector<std::vector<double>>& runs) {
  if (runs.empty()) throw std::invalid_argument("aggregate: no runs");
  const std::size_t n = runs.front().size();
  for (const auto& r : runs) {
    if (r.size() != n) {
      throw std::invalid_argument("aggregate: runs have different evaluation grids (" +
                                  std::to_string(n) + " vs " + std::to_string(r.size()) +
                                  " points)");
    }
  }
  std::vector<MeanStderr> out;
  out.reserve(n);
  std::vector<double> column(runs.size());
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < runs.size(); ++k) column[k] = runs[k][i];
    out.push_back(mean_stderr(column));
  }
  return out;
}

void write_plot_data(std::ostream& out, const Series& series) {
  out << "# " << series.label << "\n# x mean stderr n\n";
  for (std::size_t i = 0; i < series.x.size() && i < series.y.size(); ++i) {
    out << format_number(series.x[i]) << ' ' << format_number(series.y[i].mean) << ' '
        << format_number(series.y[i].std_error) << ' ' << series.y[i].n << '\n';
  }
}

namespace {

std::string escape_xml(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string fixed(double x, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, x);
  std::string s = buf;
  if (s == "-0" || s.rfind("-0.", 0) == 0) {
    // Avoid "-0.0" for values that round to zero.
    bool zero = true;
    for (char c : s.substr(1)) zero &= (c == '0' || c == '.');
    if (zero) s.erase(0, 1);
  }
  return s;
}

}  // namespace

void write_svg(std::ostream& out, const std::vector<Series>& series, const std::string& title,
               const std::string& x_label, const std::string& y_label) {
  const double w = 640, h = 420, left = 70, right = 150, top = 40, bottom = 50;
  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
  for (const auto& s : series) {
    for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
      x0 = std::min(x0, s.x[i]);
      x1 = std::max(x1, s.x[i]);
      y0 = std::min(y0, s.y[i].mean - s.y[i].std_error);
      y1 = std::max(y1, s.y[i].mean + s.y[i].std_error);
    }
  }
  if (!(x1 >= x0)) x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  if (x1 == x0) x0 -= 0.5, x1 += 0.5;
  if (y1 == y0) y0 -= 0.5, y1 += 0.5;
  const double pw = w - left - right, ph = h - top - bottom;
  auto px = [&](double x) { return left + (x - x0) / (x1 - x0) * pw; };
  auto py = [&](double y) { return top + (y1 - y) / (y1 - y0) * ph; };
  static const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                  "#9467bd", "#8c564b", "#e377c2", "#17becf"};

  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<text x=\"" << w / 2 << "\" y=\"20\" text-anchor=\"middle\">" << escape_xml(title)
      << "</text>\n";
  out << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << pw << "\" height=\"" << ph
      << "\" fill=\"none\" stroke=\"black\"/>\n";
  // Axis end labels only.
  out << "<text x=\"" << left << "\" y=\"" << h - bottom + 16 << "\" text-anchor=\"middle\">"
      << fixed(x0, 2) << "</text>\n";
  out << "<text x=\"" << left + pw << "\" y=\"" << h - bottom + 16
      << "\" text-anchor=\"middle\">" << fixed(x1, 2) << "</text>\n";
  out << "<text x=\"" << left - 6 << "\" y=\"" << top + 4 << "\" text-anchor=\"end\">"
      << fixed(y1, 2) << "</text>\n";
  out << "<text x=\"" << left - 6 << "\" y=\"" << top + ph << "\" text-anchor=\"end\">"
      << fixed(y0, 2) << "</text>\n";
  out << "<text x=\"" << left + pw / 2 << "\" y=\"" << h - 12 << "\" text-anchor=\"middle\">"
      << escape_xml(x_label) << "</text>\n";
  out << "<text transform=\"translate(16," << top + ph / 2
      << ") rotate(-90)\" text-anchor=\"middle\">" << escape_xml(y_label) << "</text>\n";

  for (std::size_t k = 0; k < series.size(); ++k) {
    const auto& s = series[k];
    const char* color = kColors[k % 8];
    const std::size_t n = std::min(s.x.size(), s.y.size());
    if (n > 0) {
      out << "<polyline fill=\"none\" stroke=\"" << color << "\" points=\"";
      for (std::size_t i = 0; i < n; ++i) {
        if (i) out << ' ';
        out << fixed(px(s.x[i]), 2) << ',' << fixed(py(s.y[i].mean), 2);
      }
      out << "\"/>\n";
      for (std::size_t i = 0; i < n; ++i) {
        if (s.y[i].std_error <= 0.0) continue;
        out << "<line x1=\"" << fixed(px(s.x[i]), 2) << "\" x2=\"" << fixed(px(s.x[i]), 2)
            << "\" y1=\"" << fixed(py(s.y[i].mean - s.y[i].std_error), 2) << "\" y2=\""
            << fixed(py(s.y[i].mean + s.y[i].std_error), 2) << "\" stroke=\"" << color
            << "\"/>\n";
      }
    }
    const double ly = top + 14 + 18 * static_cast<double>(k);
    out << "<line x1=\"" << w - right + 10 << "\" x2=\"" << w - right + 30 << "\" y1=\"" << ly - 4
        << "\" y2=\"" << ly - 4 << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
    out << "<text x=\"" << w - right + 36 << "\" y=\"" << ly << "\">" << escape_xml(s.label)
        << "</text>\n";
  }
  out << "</svg>\n";
}

std::string format_cell(const MeanStderr& m, int decimals) {
  if (m.n < 2) return fixed(m.mean, decimals) + " (n=" + std::to_string(m.n) + ")";
  return fixed(m.mean, decimals) + " (" + fixed(m.std_error, decimals) + ")";
}

std::string format_table(const std::string& corner, const std::vector<std::string>& row_labels,
                         const std::vector<std::string>& col_labels,
                         const std::vector<std::vector<std::optional<MeanStderr>>>& cells,
                         int decimals) {
  std::vector<std::vector<std::string>> grid;
  grid.push_back({corner});
  for (const auto& c : col_labels) grid.back().push_back(c);
  for (std::size_t r = 0; r < row_labels.size(); ++r) {
    std::vector<std::string> row{row_labels[r]};
    for (std::size_t c = 0; c < col_labels.size(); ++c) {
      const bool present = r < cells.size() && c < cells[r].size() && cells[r][c].has_value();
      row.push_back(present ? format_cell(*cells[r][c], decimals) : "-");
    }
    grid.push_back(std::move(row));
  }
  std::vector<std::size_t> width(col_labels.size() + 1, 0);
  for (const auto& row : grid) {
    for (std::size_t c = 0; c < row.size(); ++c) width[c] = std::max(width[c], row[c].size());
  }
  std::string out;
  for (const auto& row : grid) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c) out += "  ";
      out += std::string(width[c] - row[c].size(), ' ') + row[c];
    }
    out += '\n';
  }
  return out;
}

}  // namespace fsrl
