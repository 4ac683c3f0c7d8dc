#pragma once

#include <string>
#include <vector>

namespace cibm {

// Dependency-free SVG emitters; CSV files remain the data contract, these are
// a plotting convenience.

// Line plot with a shaded +/- std band.
void write_line_plot_svg(const std::string& path, const std::string& title,
                         const std::vector<double>& x, const std::vector<double>& mean,
                         const std::vector<double>& std_dev, const std::string& xlabel,
                         const std::string& ylabel);

// Scatter colored by progress t in [0,1] (cold to warm).
void write_scatter_svg(const std::string& path, const std::string& title,
                       const std::vector<double>& x, const std::vector<double>& y,
                       const std::vector<double>& t, const std::string& xlabel,
                       const std::string& ylabel);

}  // namespace cibm
