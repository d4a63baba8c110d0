#include "mdeconv/report_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace mdeconv {

std::string
format_g12(double v)
{
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

std::string
risk_report_csv(const RiskReport& report)
{
  std::string out = "n,x0,h_star,q05,q25,median,q75,q95,mse,runs,seed\n";
  for (const auto& r : report.rows) {
    out += std::to_string(r.n);
    for (double v : { r.x0, r.h_star, r.q05, r.q25, r.median, r.q75, r.q95, r.mse }) {
      out += ',';
      out += format_g12(v);
    }
    out += ',' + std::to_string(r.runs) + ',' + std::to_string(r.seed) + '\n';
  }
  return out;
}

std::string
risk_report_svg(const RiskReport& report, const std::string& title)
{
  constexpr double width_per_box = 70.0;
  constexpr double left = 70.0;
  constexpr double top = 40.0;
  constexpr double plot_h = 300.0;
  const std::size_t k = report.rows.size();
  const double width = left + width_per_box * static_cast<double>(std::max<std::size_t>(k, 1)) + 20.0;
  const double height = top + plot_h + 60.0;

  double ymax = 0.0;
  for (const auto& r : report.rows)
    ymax = std::max(ymax, r.q95);
  if (!(ymax > 0.0))
    ymax = 1.0;
  auto ypix = [&](double v) { return top + plot_h * (1.0 - v / ymax); };

  // Label by whichever coordinate varies.
  bool vary_x = false;
  for (const auto& r : report.rows)
    vary_x = vary_x || r.x0 != report.rows.front().x0;

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << format_g12(width)
     << "\" height=\"" << format_g12(height) << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  if (!title.empty())
    os << "<text x=\"" << format_g12(width / 2) << "\" y=\"20\" text-anchor=\"middle\">" << title
       << "</text>\n";
  os << "<line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left << "\" y2=\""
     << top + plot_h << "\" stroke=\"black\"/>\n";
  for (int t = 0; t <= 4; ++t) {
    const double v = ymax * t / 4.0;
    os << "<text x=\"" << left - 5 << "\" y=\"" << format_g12(ypix(v) + 4)
       << "\" text-anchor=\"end\">" << format_g12(std::round(v * 1e4) / 1e4) << "</text>\n";
  }
  for (std::size_t i = 0; i < k; ++i) {
    const auto& r = report.rows[i];
    const double cx = left + width_per_box * (static_cast<double>(i) + 0.5);
    const double half = width_per_box * 0.3;
    os << "<line x1=\"" << format_g12(cx) << "\" y1=\"" << format_g12(ypix(r.q95)) << "\" x2=\""
       << format_g12(cx) << "\" y2=\"" << format_g12(ypix(r.q05)) << "\" stroke=\"black\"/>\n";
    for (double w : { r.q05, r.q95 })
      os << "<line x1=\"" << format_g12(cx - half / 2) << "\" y1=\"" << format_g12(ypix(w))
         << "\" x2=\"" << format_g12(cx + half / 2) << "\" y2=\"" << format_g12(ypix(w))
         << "\" stroke=\"black\"/>\n";
    os << "<rect x=\"" << format_g12(cx - half) << "\" y=\"" << format_g12(ypix(r.q75))
       << "\" width=\"" << format_g12(2 * half) << "\" height=\""
       << format_g12(ypix(r.q25) - ypix(r.q75)) << "\" fill=\"#cfe0f3\" stroke=\"black\"/>\n";
    os << "<line x1=\"" << format_g12(cx - half) << "\" y1=\"" << format_g12(ypix(r.median))
       << "\" x2=\"" << format_g12(cx + half) << "\" y2=\"" << format_g12(ypix(r.median))
       << "\" stroke=\"#c0392b\" stroke-width=\"2\"/>\n";
    os << "<text x=\"" << format_g12(cx) << "\" y=\"" << format_g12(top + plot_h + 18)
       << "\" text-anchor=\"middle\">"
       << (vary_x ? "x=" + format_g12(r.x0) : "n=" + std::to_string(r.n)) << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

} // namespace mdeconv
