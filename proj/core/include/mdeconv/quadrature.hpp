#pragma once

#include "mdeconv/errors.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <vector>

namespace mdeconv {

//! Controls for adaptive quadrature. `t_lo`/`t_hi` bound the log-domain
//! truncation used by the Mellin-type integrals; `breakpoints` are extra
//! panel boundaries (in the integration variable) where the integrand is
//! known to be non-smooth.
struct QuadSpec
{
  double rel_tol = 1e-12;
  double abs_tol = 0.0;
  unsigned max_depth = 18;
  double t_lo = -200.0;
  double t_hi = 200.0;
  std::vector<double> breakpoints;
  //! Factor applied to the requested tolerance before NonConvergence is
  //! raised; the Gauss-Kronrod error estimate is pessimistic.
  double fail_factor = 1e3;
};

namespace detail {

struct Tally
{
  double err = 0.0;
  double l1 = 0.0;
};

// One 31-point Kronrod rule on [a, b]. Boost's rule is applied on [-1, 1] so
// the value, error and L1 are all rescaled by the same half-width.
template<class F>
auto
gk_leaf(const F& f, double a, double b, double& err, double& l1)
{
  using boost::math::quadrature::gauss_kronrod;
  const double mid = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  auto mapped = [&](double t) { return f(mid + half * t); };
  double e = 0.0;
  double l = 0.0;
  const auto value = gauss_kronrod<double, 31>::integrate(mapped, -1.0, 1.0, 0, 0.0, &e, &l);
  err = e * half;
  l1 = l * half;
  return value * half;
}

// Bisects until the leaf error meets max(abs_target, rel_tol |value|), the
// error is at rounding level, or the depth is spent.
template<class F>
auto
gk_adaptive(const F& f, double a, double b, double rel_tol, double abs_target, unsigned depth,
            Tally& tally)
{
  double err = 0.0;
  double l1 = 0.0;
  const auto value = gk_leaf(f, a, b, err, l1);
  const double noise = 64.0 * std::numeric_limits<double>::epsilon() * l1;
  const double wanted = std::max({ abs_target, rel_tol * std::abs(value), noise });
  if (err <= wanted || depth == 0 || !(b - a > 4.0 * std::numeric_limits<double>::min())) {
    tally.err += err;
    tally.l1 += l1;
    return value;
  }
  const double mid = 0.5 * (a + b);
  const double next = abs_target > 0.0 ? 0.5 * abs_target : rel_tol * std::abs(value) * 0.5;
  return gk_adaptive(f, a, mid, rel_tol, next, depth - 1, tally) +
         gk_adaptive(f, mid, b, rel_tol, next, depth - 1, tally);
}

// Finite panel of the (possibly infinite) range, after the same maps Boost
// uses: t / (1 - t^2) on (-1, 1), a + t / (1 - t) on [0, 1).
template<class F>
auto
gk_range(const F& f, double a, double b, const QuadSpec& spec, Tally& tally)
{
  using R = decltype(f(a + 0.0));
  const bool lo_inf = std::isinf(a);
  const bool hi_inf = std::isinf(b);
  if (lo_inf && hi_inf) {
    auto g = [&](double t) -> R {
      if (std::abs(t) >= 1.0)
        return R{};
      const double inv = 1.0 / (1.0 - t * t);
      return f(t * inv) * ((1.0 + t * t) * inv * inv);
    };
    return gk_adaptive(g, -1.0, 1.0, spec.rel_tol, spec.abs_tol, spec.max_depth, tally);
  }
  if (hi_inf) {
    auto g = [&](double t) -> R {
      if (t >= 1.0)
        return R{};
      const double inv = 1.0 / (1.0 - t);
      return f(a + t * inv) * (inv * inv);
    };
    return gk_adaptive(g, 0.0, 1.0, spec.rel_tol, spec.abs_tol, spec.max_depth, tally);
  }
  if (lo_inf) {
    auto g = [&](double t) -> R {
      if (t >= 1.0)
        return R{};
      const double inv = 1.0 / (1.0 - t);
      return f(b - t * inv) * (inv * inv);
    };
    return gk_adaptive(g, 0.0, 1.0, spec.rel_tol, spec.abs_tol, spec.max_depth, tally);
  }
  return gk_adaptive(f, a, b, spec.rel_tol, spec.abs_tol, spec.max_depth, tally);
}

} // namespace detail

//! Adaptive Gauss-Kronrod integral of `f` over [a, b] (infinite limits
//! allowed), split at every breakpoint in `spec` lying inside (a, b).
template<class F>
auto
integrate(F&& f, double a, double b, const QuadSpec& spec = {})
{
  std::vector<double> cuts{ a };
  for (double p : spec.breakpoints) {
    if (p > a && p < b)
      cuts.push_back(p);
  }
  cuts.push_back(b);
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

  detail::Tally tally;
  using R = decltype(f(a + 0.0));
  R total{};
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i)
    total += detail::gk_range(f, cuts[i], cuts[i + 1], spec, tally);
  // Error is judged against the whole range so negligible tail panels pass.
  const double allowed = spec.fail_factor * std::max({ spec.abs_tol, spec.rel_tol * tally.l1,
                                                        64.0 * std::numeric_limits<double>::epsilon() * tally.l1 });
  if (!(tally.err <= allowed) && tally.err > 1e3 * std::numeric_limits<double>::min()) {
    std::ostringstream os;
    os << "adaptive quadrature on [" << a << ", " << b
       << "] did not reach tolerance (error estimate " << tally.err << ", L1 " << tally.l1
       << ")";
    throw NonConvergence(os.str());
  }
  return total;
}

} // namespace mdeconv
