#pragma once

#include "mdeconv/simulate.hpp"

#include <string>

namespace mdeconv {

//! printf "%.12g".
std::string format_g12(double v);

//! CSV with header n,x0,h_star,q05,q25,median,q75,q95,mse,runs,seed.
std::string risk_report_csv(const RiskReport& report);

//! Static SVG with one box per row: whiskers q05..q95, box q25..q75, median
//! bar. Drawn from the quantile columns only.
std::string risk_report_svg(const RiskReport& report, const std::string& title = {});

} // namespace mdeconv
