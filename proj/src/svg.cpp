#include "cibm/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "cibm/errors.hpp"

namespace cibm {

namespace {

constexpr double kWidth = 640.0, kHeight = 440.0;
constexpr double kLeft = 64.0, kRight = 24.0, kTop = 40.0, kBottom = 48.0;

struct Scale {
  double lo, hi;
  double px0, px1;
  double operator()(double v) const {
    if (hi == lo) return 0.5 * (px0 + px1);
    return px0 + (v - lo) / (hi - lo) * (px1 - px0);
  }
};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4g", v);
  return buf;
}

void header(std::ofstream& os, const std::string& title, const Scale& sx, const Scale& sy,
            const std::string& xlabel, const std::string& ylabel) {
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\""
     << kHeight << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight << "\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << kWidth / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">"
     << title << "</text>\n";
  // axes
  os << "<line x1=\"" << kLeft << "\" y1=\"" << kHeight - kBottom << "\" x2=\""
     << kWidth - kRight << "\" y2=\"" << kHeight - kBottom << "\" stroke=\"black\"/>\n";
  os << "<line x1=\"" << kLeft << "\" y1=\"" << kTop << "\" x2=\"" << kLeft << "\" y2=\""
     << kHeight - kBottom << "\" stroke=\"black\"/>\n";
  os << "<text x=\"" << kWidth / 2 << "\" y=\"" << kHeight - 12
     << "\" text-anchor=\"middle\" font-size=\"12\">" << xlabel << "</text>\n";
  os << "<text x=\"16\" y=\"" << kHeight / 2 << "\" text-anchor=\"middle\" font-size=\"12\" "
     << "transform=\"rotate(-90 16 " << kHeight / 2 << ")\">" << ylabel << "</text>\n";
  // range labels
  os << "<text x=\"" << kLeft << "\" y=\"" << kHeight - kBottom + 16
     << "\" font-size=\"10\" text-anchor=\"middle\">" << num(sx.lo) << "</text>\n";
  os << "<text x=\"" << kWidth - kRight << "\" y=\"" << kHeight - kBottom + 16
     << "\" font-size=\"10\" text-anchor=\"middle\">" << num(sx.hi) << "</text>\n";
  os << "<text x=\"" << kLeft - 6 << "\" y=\"" << kHeight - kBottom
     << "\" font-size=\"10\" text-anchor=\"end\">" << num(sy.lo) << "</text>\n";
  os << "<text x=\"" << kLeft - 6 << "\" y=\"" << kTop + 4
     << "\" font-size=\"10\" text-anchor=\"end\">" << num(sy.hi) << "</text>\n";
}

}  // namespace

void write_line_plot_svg(const std::string& path, const std::string& title,
                         const std::vector<double>& x, const std::vector<double>& mean,
                         const std::vector<double>& std_dev, const std::string& xlabel,
                         const std::string& ylabel) {
  if (x.size() != mean.size() || x.size() != std_dev.size() || x.empty())
    throw validation_error("write_line_plot_svg: inconsistent series");
  double ylo = mean[0] - std_dev[0], yhi = mean[0] + std_dev[0];
  for (std::size_t i = 0; i < x.size(); ++i) {
    ylo = std::min(ylo, mean[i] - std_dev[i]);
    yhi = std::max(yhi, mean[i] + std_dev[i]);
  }
  const double pad = (yhi - ylo) * 0.05 + 1e-12;
  Scale sx{x.front(), x.back(), kLeft, kWidth - kRight};
  Scale sy{ylo - pad, yhi + pad, kHeight - kBottom, kTop};

  std::ofstream os(path, std::ios::binary);
  if (!os) throw data_error("cannot write " + path);
  header(os, title, sx, sy, xlabel, ylabel);

  os << "<polygon fill=\"#4a7db3\" fill-opacity=\"0.2\" stroke=\"none\" points=\"";
  for (std::size_t i = 0; i < x.size(); ++i)
    os << num(sx(x[i])) << ',' << num(sy(mean[i] + std_dev[i])) << ' ';
  for (std::size_t i = x.size(); i-- > 0;)
    os << num(sx(x[i])) << ',' << num(sy(mean[i] - std_dev[i])) << ' ';
  os << "\"/>\n";

  os << "<polyline fill=\"none\" stroke=\"#2c5d8f\" stroke-width=\"2\" points=\"";
  for (std::size_t i = 0; i < x.size(); ++i)
    os << num(sx(x[i])) << ',' << num(sy(mean[i])) << ' ';
  os << "\"/>\n";
  for (std::size_t i = 0; i < x.size(); ++i)
    os << "<circle cx=\"" << num(sx(x[i])) << "\" cy=\"" << num(sy(mean[i]))
       << "\" r=\"3\" fill=\"#2c5d8f\"/>\n";
  os << "</svg>\n";
}

void write_scatter_svg(const std::string& path, const std::string& title,
                       const std::vector<double>& x, const std::vector<double>& y,
                       const std::vector<double>& t, const std::string& xlabel,
                       const std::string& ylabel) {
  if (x.size() != y.size() || x.size() != t.size() || x.empty())
    throw validation_error("write_scatter_svg: inconsistent series");
  double xlo = x[0], xhi = x[0], ylo = y[0], yhi = y[0];
  for (std::size_t i = 0; i < x.size(); ++i) {
    xlo = std::min(xlo, x[i]);
    xhi = std::max(xhi, x[i]);
    ylo = std::min(ylo, y[i]);
    yhi = std::max(yhi, y[i]);
  }
  const double xpad = (xhi - xlo) * 0.05 + 1e-12;
  const double ypad = (yhi - ylo) * 0.05 + 1e-12;
  Scale sx{xlo - xpad, xhi + xpad, kLeft, kWidth - kRight};
  Scale sy{ylo - ypad, yhi + ypad, kHeight - kBottom, kTop};

  std::ofstream os(path, std::ios::binary);
  if (!os) throw data_error("cannot write " + path);
  header(os, title, sx, sy, xlabel, ylabel);
  for (std::size_t i = 0; i < x.size(); ++i) {
    // cold (blue) to warm (orange) by progress
    const double w = std::clamp(t[i], 0.0, 1.0);
    const int r = static_cast<int>(40 + w * 200);
    const int g = static_cast<int>(80 + w * 60);
    const int b = static_cast<int>(200 - w * 160);
    os << "<circle cx=\"" << num(sx(x[i])) << "\" cy=\"" << num(sy(y[i]))
       << "\" r=\"4\" fill=\"rgb(" << r << ',' << g << ',' << b << ")\" fill-opacity=\"0.7\"/>\n";
  }
  os << "</svg>\n";
}

}  // namespace cibm
