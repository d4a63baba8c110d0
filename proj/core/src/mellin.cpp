#include "mdeconv/mellin.hpp"
#include "mdeconv/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace mdeconv {

namespace {

constexpr double kPi = std::numbers::pi;

void
require(bool ok, const char* what)
{
  if (!ok)
    throw InvalidArgument(what);
}

double
gamma_variate(double alpha, CounterRng& rng)
{
  // Marsaglia-Tsang squeeze; alpha < 1 boosted through U^{1/alpha}.
  if (alpha < 1.0) {
    const double boost = std::pow(rng.uniform(), 1.0 / alpha);
    return gamma_variate(alpha + 1.0, rng) * boost;
  }
  const double d = alpha - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x = 0.0;
    double v = 0.0;
    do {
      x = rng.standard_normal();
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = rng.uniform();
    if (u < 1.0 - 0.0331 * x * x * x * x)
      return d * v;
    if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v)))
      return d * v;
  }
}

// Scans e^{sigma t} |u(e^t)| on a coarse grid and returns the t-interval
// outside of which the magnitude stays below `rel` times its peak.
std::pair<double, double>
log_domain_window(const DensityFn& u, double sigma, const QuadSpec& quad,
                  double rel = 1e-14)
{
  constexpr double step = 0.25;
  const auto n = static_cast<std::size_t>((quad.t_hi - quad.t_lo) / step) + 1;
  std::vector<double> mag(n);
  double peak = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double t = quad.t_lo + step * static_cast<double>(i);
    const double v = std::exp(sigma * t) * std::abs(u(std::exp(t)));
    mag[i] = std::isfinite(v) ? v : 0.0;
    peak = std::max(peak, mag[i]);
  }
  if (peak == 0.0)
    return { 0.0, 0.0 };
  std::size_t lo = 0;
  while (lo + 1 < n && mag[lo] < rel * peak)
    ++lo;
  std::size_t hi = n - 1;
  while (hi > lo && mag[hi] < rel * peak)
    --hi;
  const double t_lo = std::max(quad.t_lo, quad.t_lo + step * (static_cast<double>(lo) - 1.0));
  const double t_hi = std::min(quad.t_hi, quad.t_lo + step * (static_cast<double>(hi) + 1.0));
  return { t_lo, t_hi };
}

QuadSpec
log_domain_spec(const QuadSpec& quad)
{
  QuadSpec spec = quad;
  spec.breakpoints.clear();
  spec.breakpoints.push_back(0.0);
  for (double x : quad.breakpoints) {
    if (x > 0.0)
      spec.breakpoints.push_back(std::log(x));
  }
  return spec;
}

std::string
num(double v)
{
  std::ostringstream os;
  os.precision(12);
  os << v;
  return os.str();
}

// Bisecting Gauss-Kronrod with an absolute target, split evenly over halves.
template<class F>
double
integrate_absolute(const F& f, double a, double b, double target, unsigned depth)
{
  detail::Tally tally;
  return detail::gk_adaptive(f, a, b, 0.0, target, depth, tally);
}

} // namespace

std::string
ComplexStrip::str() const
{
  std::ostringstream os;
  if (is_line())
    os << "{Re(z) = " << a << "}";
  else
    os << "{" << a << " < Re(z) < " << b << "}";
  return os.str();
}

ErrorModel::ErrorModel(Kind kind, ComplexStrip strip, DecayRegularity decay,
                       std::optional<ZeroBehavior> zero)
  : kind_(std::move(kind))
  , strip_(strip)
  , decay_(decay)
  , zero_(zero)
{
  if (zero_) {
    require(zero_->p >= 0.0 && zero_->p < 1.0, "zero behavior needs 0 <= p < 1");
    require(zero_->q >= 0.0, "zero behavior needs q >= 0");
    require(zero_->delta > 0.0 && zero_->delta < 1.0,
            "zero behavior needs 0 < delta < 1");
  }
}

ErrorModel
ErrorModel::uniform(double theta)
{
  require(theta > 0.0, "uniform: theta must be positive");
  const double s5 = std::sqrt(0.2);
  return ErrorModel(Uniform{ theta }, { 0.0, kInf },
                    SmoothDecay{ 1.0, 2.0, s5, 2.0 * s5, 1.0 },
                    ZeroBehavior{ 0.0, 0.0, std::min(0.5, theta / 2.0),
                                  1.0 / theta, 1.0 / theta });
}

ErrorModel
ErrorModel::beta(double nu, double theta)
{
  require(nu > -1.0, "beta: nu must exceed -1");
  require(theta > 0.0, "beta: theta must be positive");
  // Constants of the decay bounds on the line sigma = 1.
  const double s5 = std::sqrt(0.2);
  SmoothDecay decay{ 1.0, 2.0 * (1.0 + nu), s5, 2.0 * s5 * (nu + 1.0), nu + 1.0 };
  std::optional<ZeroBehavior> zero;
  if (nu <= 0.0) {
    const double c = (nu + 1.0) / std::pow(theta, nu + 1.0);
    zero = ZeroBehavior{ -nu, 0.0, std::min(0.5, theta / 2.0), c, c };
  }
  return ErrorModel(Beta{ nu, theta }, { -nu, kInf }, decay, zero);
}

ErrorModel
ErrorModel::power(double nu)
{
  require(nu > 0.0, "power: nu must be positive");
  return beta(nu - 1.0, 1.0);
}

ErrorModel
ErrorModel::pareto(double nu, double theta)
{
  require(nu > 1.0, "pareto: nu must exceed 1");
  require(theta > 0.0, "pareto: theta must be positive");
  const double s5 = std::sqrt(0.2);
  SmoothDecay decay{ 1.0, 2.0 * (nu - 1.0), s5, 2.0 * s5 * (nu - 1.0), nu - 1.0 };
  return ErrorModel(Pareto{ nu, theta }, { -kInf, nu }, decay, std::nullopt);
}

ErrorModel
ErrorModel::gamma(double alpha, double mu)
{
  require(alpha > 0.0 && mu > 0.0, "gamma: alpha and mu must be positive");
  std::optional<ZeroBehavior> zero;
  if (alpha <= 1.0)
    zero = ZeroBehavior{ 1.0 - alpha, 0.0, 0.5 };
  return ErrorModel(Gamma{ alpha, mu }, { 1.0 - alpha, kInf },
                    SuperSmoothDecay{ kPi / 2.0, alpha - 0.5 }, zero);
}

ErrorModel
ErrorModel::half_normal(double upsilon)
{
  require(upsilon > 0.0, "half-normal: upsilon must be positive");
  return ErrorModel(HalfNormal{ upsilon }, { 0.0, kInf },
                    SuperSmoothDecay{ kPi / 4.0, 0.0 },
                    ZeroBehavior{ 0.0, 0.0, 0.5 });
}

ErrorModel
ErrorModel::log_product_uniform()
{
  return ErrorModel(LogProductUniform{}, { 0.0, kInf }, SmoothDecay{ 2.0 },
                    ZeroBehavior{ 0.0, 1.0, 0.5, 1.0, 1.0 });
}

ErrorModel
ErrorModel::custom(Custom spec, DecayRegularity decay,
                   std::optional<ZeroBehavior> zero)
{
  require(static_cast<bool>(spec.sampler), "custom model needs a sampler");
  require(spec.mellin || spec.density,
          "custom model needs a density or a Mellin transform");
  const ComplexStrip strip = spec.strip;
  return ErrorModel(std::move(spec), strip, decay, zero);
}

ErrorModel
ErrorModel::unit_point_mass()
{
  Custom spec;
  spec.name = "pointmass";
  spec.sampler = [](CounterRng&) { return 1.0; };
  spec.mellin = [](cplx) { return cplx(1.0, 0.0); };
  spec.strip = { -kInf, kInf };
  return custom(std::move(spec));
}

std::optional<double>
ErrorModel::power_shape() const
{
  if (const auto* u = std::get_if<Uniform>(&kind_); u && u->theta == 1.0)
    return 1.0;
  if (const auto* b = std::get_if<Beta>(&kind_); b && b->theta == 1.0)
    return b->nu + 1.0;
  return std::nullopt;
}

double
ErrorModel::density(double x) const
{
  struct Visitor
  {
    double x;
    double operator()(const Uniform& m) const
    {
      return (x >= 0.0 && x <= m.theta) ? 1.0 / m.theta : 0.0;
    }
    double operator()(const Beta& m) const
    {
      if (x <= 0.0 || x > m.theta)
        return 0.0;
      return (m.nu + 1.0) * std::pow(x / m.theta, m.nu) / m.theta;
    }
    double operator()(const Pareto& m) const
    {
      if (x < m.theta)
        return 0.0;
      return (m.nu - 1.0) / m.theta * std::pow(m.theta / x, m.nu);
    }
    double operator()(const Gamma& m) const
    {
      if (x <= 0.0)
        return 0.0;
      return std::exp(m.alpha * std::log(m.mu) + (m.alpha - 1.0) * std::log(x) -
                      m.mu * x - std::lgamma(m.alpha));
    }
    double operator()(const HalfNormal& m) const
    {
      if (x < 0.0)
        return 0.0;
      return std::sqrt(2.0 / kPi) / m.upsilon *
             std::exp(-x * x / (2.0 * m.upsilon * m.upsilon));
    }
    double operator()(const LogProductUniform&) const
    {
      return (x > 0.0 && x <= 1.0) ? -std::log(x) : 0.0;
    }
    double operator()(const Custom& m) const
    {
      if (!m.density)
        throw InvalidArgument("model '" + m.name + "' has no density");
      return m.density(x);
    }
  };
  return std::visit(Visitor{ x }, kind_);
}

double
ErrorModel::sample(CounterRng& rng) const
{
  struct Visitor
  {
    CounterRng& rng;
    double operator()(const Uniform& m) const { return m.theta * rng.uniform(); }
    double operator()(const Beta& m) const
    {
      return m.theta * std::pow(rng.uniform(), 1.0 / (m.nu + 1.0));
    }
    double operator()(const Pareto& m) const
    {
      return m.theta * std::pow(rng.uniform(), -1.0 / (m.nu - 1.0));
    }
    double operator()(const Gamma& m) const
    {
      return gamma_variate(m.alpha, rng) / m.mu;
    }
    double operator()(const HalfNormal& m) const
    {
      return m.upsilon * std::abs(rng.standard_normal());
    }
    double operator()(const LogProductUniform&) const
    {
      const double u1 = rng.uniform();
      return u1 * rng.uniform();
    }
    double operator()(const Custom& m) const { return m.sampler(rng); }
  };
  return std::visit(Visitor{ rng }, kind_);
}

std::vector<double>
ErrorModel::breakpoints() const
{
  struct Visitor
  {
    std::vector<double> operator()(const Uniform& m) const { return { m.theta }; }
    std::vector<double> operator()(const Beta& m) const { return { m.theta }; }
    std::vector<double> operator()(const Pareto& m) const { return { m.theta }; }
    std::vector<double> operator()(const Gamma&) const { return {}; }
    std::vector<double> operator()(const HalfNormal&) const { return {}; }
    std::vector<double> operator()(const LogProductUniform&) const { return { 1.0 }; }
    std::vector<double> operator()(const Custom& m) const { return m.breakpoints; }
  };
  return std::visit(Visitor{}, kind_);
}

std::string
ErrorModel::name() const
{
  struct Visitor
  {
    std::string operator()(const Uniform& m) const
    {
      return "uniform(" + num(m.theta) + ")";
    }
    std::string operator()(const Beta& m) const
    {
      return "beta(" + num(m.nu) + "," + num(m.theta) + ")";
    }
    std::string operator()(const Pareto& m) const
    {
      return "pareto(" + num(m.nu) + "," + num(m.theta) + ")";
    }
    std::string operator()(const Gamma& m) const
    {
      return "gamma(" + num(m.alpha) + "," + num(m.mu) + ")";
    }
    std::string operator()(const HalfNormal& m) const
    {
      return "halfnormal(" + num(m.upsilon) + ")";
    }
    std::string operator()(const LogProductUniform&) const { return "logproduct"; }
    std::string operator()(const Custom& m) const { return m.name; }
  };
  return std::visit(Visitor{}, kind_);
}

cplx
mellin_analytic(const ErrorModel& model, cplx z)
{
  if (!model.strip().contains(z.real())) {
    std::ostringstream os;
    os << "z = " << z << " lies outside the analyticity strip "
       << model.strip().str() << " of " << model.name();
    throw StripViolation(os.str());
  }
  // Written so that z = 1 evaluates to exactly 1.
  const cplx zm1 = z - 1.0;
  struct Visitor
  {
    cplx z;
    cplx zm1;
    cplx operator()(const ErrorModel::Uniform& m) const
    {
      return std::pow(m.theta, zm1) / z;
    }
    cplx operator()(const ErrorModel::Beta& m) const
    {
      return (m.nu + 1.0) * std::pow(m.theta, zm1) / (zm1 + (m.nu + 1.0));
    }
    cplx operator()(const ErrorModel::Pareto& m) const
    {
      return (m.nu - 1.0) * std::pow(m.theta, zm1) / ((m.nu - 1.0) - zm1);
    }
    cplx operator()(const ErrorModel::Gamma& m) const
    {
      return std::pow(m.mu, -zm1) * complex_gamma(zm1 + m.alpha) /
             complex_gamma(cplx(m.alpha, 0.0));
    }
    cplx operator()(const ErrorModel::HalfNormal& m) const
    {
      return std::pow(std::sqrt(2.0) * m.upsilon, zm1) * complex_gamma(z / 2.0) /
             complex_gamma(cplx(0.5, 0.0));
    }
    cplx operator()(const ErrorModel::LogProductUniform&) const
    {
      return 1.0 / (z * z);
    }
    cplx operator()(const ErrorModel::Custom& m) const
    {
      if (m.mellin)
        return m.mellin(z);
      QuadSpec quad;
      quad.breakpoints = m.breakpoints;
      return mellin_numeric(m.density, z, quad);
    }
  };
  return std::visit(Visitor{ z, zm1 }, model.kind());
}

cplx
mellin_numeric(const DensityFn& density, cplx z, const QuadSpec& quad)
{
  const auto [lo, hi] = log_domain_window(density, z.real(), quad);
  if (lo >= hi)
    return { 0.0, 0.0 };
  const QuadSpec spec = log_domain_spec(quad);
  auto integrand = [&](double t) -> cplx {
    const double u = density(std::exp(t));
    if (u == 0.0)
      return { 0.0, 0.0 };
    return std::exp(z * t) * u;
  };
  return integrate(integrand, lo, hi, spec);
}

ParsevalSides
parseval_check(const DensityFn& u, double s, const QuadSpec& quad,
               const MellinFn& transform)
{
  auto square = [&](double x) {
    const double v = u(x);
    return v * v;
  };
  const auto [lo, hi] = log_domain_window(square, 2.0 * s, quad);
  const QuadSpec spec = log_domain_spec(quad);
  const double lhs =
    lo < hi ? integrate(
                [&](double t) {
                  const double v = u(std::exp(t));
                  return v == 0.0 ? 0.0 : v * v * std::exp(2.0 * s * t);
                },
                lo, hi, spec)
            : 0.0;

  auto power = [&](double omega) {
    const cplx z(s, omega);
    const cplx v = transform ? transform(z) : mellin_numeric(u, z, quad);
    return std::norm(v);
  };
  // |u~(s+iw)|^2 is even in w for real u. Integrate doubling panels
  // [W, 2W] to an absolute target tied to the running total, until they are
  // negligible; a geometric tail correction covers power-law decay. Wide
  // panels are cut into at most 1024 pieces of width >= 1 so that no single
  // rule sees many oscillations.
  auto panel_integral = [&](double a, double b, double scale) {
    const int pieces = static_cast<int>(std::clamp(std::floor(b - a), 1.0, 1024.0));
    const double width = (b - a) / pieces;
    const double target = 1e-2 * quad.rel_tol * scale / pieces;
    double sum = 0.0;
    for (int k = 0; k < pieces; ++k)
      sum += integrate_absolute(power, a + k * width, a + (k + 1) * width, target, 40);
    return sum;
  };
  const double rough = integrate_absolute(power, 0.0, 1.0, kInf, 0);
  double total = panel_integral(0.0, 1.0, std::abs(rough));
  double prev_panel = 0.0;
  double panel = 0.0;
  constexpr double kMaxOmega = 1048576.0;
  for (double w = 1.0; w < kMaxOmega; w *= 2.0) {
    prev_panel = panel;
    panel = panel_integral(w, 2.0 * w, total);
    total += panel;
    if (panel <= 1e-3 * quad.rel_tol * total)
      break;
    if (2.0 * w >= kMaxOmega && prev_panel > 0.0) {
      const double ratio = panel / prev_panel;
      if (ratio > 0.0 && ratio < 1.0)
        total += panel * ratio / (1.0 - ratio);
    }
  }
  return { lhs, total / kPi };
}

IdentifiabilityResult
identifiability_check(const MellinFn& g_plus, const MellinFn& g_minus,
                      double probe_re, std::span<const double> omegas,
                      double floor)
{
  double margin = kInf;
  for (double w : omegas) {
    const cplx z(probe_re, w);
    const cplx gp = g_plus(z);
    const cplx gm = g_minus ? g_minus(z) : cplx(0.0, 0.0);
    margin = std::min(margin, std::abs(gp * gp - gm * gm));
  }
  if (omegas.empty())
    margin = 0.0;
  return { margin > floor, margin };
}

DecayFit
fit_decay_exponent(const ErrorModel& model, double sigma, double omega_lo,
                   double omega_hi, std::size_t points)
{
  if (!(omega_hi > omega_lo && omega_lo > 0.0) || points < 2)
    throw InvalidArgument("fit_decay_exponent needs 0 < omega_lo < omega_hi");
  const auto* super = std::get_if<SuperSmoothDecay>(&model.decay());
  std::vector<double> xs(points);
  std::vector<double> ys(points);
  const double step = std::log(omega_hi / omega_lo) / static_cast<double>(points - 1);
  for (std::size_t i = 0; i < points; ++i) {
    const double w = omega_lo * std::exp(step * static_cast<double>(i));
    const double mag = std::log(std::abs(mellin_analytic(model, { sigma, w })));
    if (super) {
      xs[i] = w;
      ys[i] = mag - super->nu * std::log(w);
    } else {
      xs[i] = std::log(w);
      ys[i] = mag;
    }
  }
  const double n = static_cast<double>(points);
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < points; ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < points; ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
  }
  const double slope = sxy / sxx;
  double rss = 0.0;
  for (std::size_t i = 0; i < points; ++i) {
    const double r = ys[i] - (my + slope * (xs[i] - mx));
    rss += r * r;
  }
  return { -slope, std::sqrt(rss / n) };
}

} // namespace mdeconv
