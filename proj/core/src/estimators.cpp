#include "mdeconv/estimators.hpp"
#include "mdeconv/errors.hpp"

#include <cmath>
#include <sstream>

namespace mdeconv {

namespace {

std::string
fmt(double v)
{
  std::ostringstream os;
  os.precision(12);
  os << v;
  return os.str();
}

void
require_positive(double v, const char* what)
{
  if (!(v > 0.0) || !std::isfinite(v))
    throw InvalidArgument(std::string(what) + " must be positive and finite, got " + fmt(v));
}

template<class Eval>
double
sample_mean(std::span<const double> sample, Warnings* warnings, Eval eval)
{
  if (sample.empty())
    throw EmptySample("the sample has no observations");
  std::vector<double> terms(sample.size());
  std::size_t negative = 0;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    const double y = sample[i];
    if (!std::isfinite(y))
      throw DomainError("observation " + std::to_string(i + 1) + " is not finite");
    if (y < 0.0) {
      ++negative;
      terms[i] = 0.0;
    } else {
      terms[i] = eval(y);
    }
  }
  if (negative > 0 && warnings) {
    warnings->push_back(std::to_string(negative) +
                        " negative observation(s) outside the support of a "
                        "nonnegative error model; they contribute 0");
  }
  return pairwise_sum(terms) / static_cast<double>(sample.size());
}

} // namespace

double
pairwise_sum(std::span<const double> values)
{
  constexpr std::size_t block = 64;
  if (values.size() <= block) {
    double s = 0.0;
    for (double v : values)
      s += v;
    return s;
  }
  const std::size_t half = values.size() / 2;
  return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

void
EstimatorConfig::validate() const
{
  require_positive(h, "bandwidth h");
  const bool zero = std::holds_alternative<AtZero>(target);
  if (const auto* p = std::get_if<AtPoint>(&target))
    require_positive(p->x0, "estimation point x0");
  if (zero != lkernel.at_zero())
    throw InvalidArgument("estimation target and L-kernel type disagree");
  if (std::abs(h - lkernel.h()) > 1e-12 * h)
    throw InvalidArgument("config h = " + fmt(h) + " differs from the L-kernel h = " +
                          fmt(lkernel.h()));
  if (std::abs(s - lkernel.s()) > 1e-12)
    throw InvalidArgument("config s = " + fmt(s) + " differs from the L-kernel s = " +
                          fmt(lkernel.s()));
}

void
HolderClassSpec::validate() const
{
  require_positive(A, "Hoelder constant A");
  require_positive(beta, "smoothness beta");
  if (!(r > 1.0))
    throw InvalidArgument("neighbourhood ratio r must exceed 1, got " + fmt(r));
  if (!(M >= 0.0))
    throw InvalidArgument("bound M must be nonnegative, got " + fmt(M));
}

double
estimate_at_point(std::span<const double> sample, const EstimatorConfig& config,
                  Warnings* warnings)
{
  const auto* p = std::get_if<AtPoint>(&config.target);
  if (!p)
    throw InvalidArgument("estimate_at_point needs an AtPoint target");
  config.validate();
  const double x0 = p->x0;
  return sample_mean(sample, warnings,
                     [&](double y) { return config.lkernel.evaluate(x0, y); });
}

double
estimate_at_zero(std::span<const double> sample, const EstimatorConfig& config,
                 Warnings* warnings)
{
  if (!std::holds_alternative<AtZero>(config.target))
    throw InvalidArgument("estimate_at_zero needs an AtZero target");
  config.validate();
  return sample_mean(sample, warnings,
                     [&](double y) { return config.lkernel.evaluate0(y); });
}

double
estimate(std::span<const double> sample, const EstimatorConfig& config,
         Warnings* warnings)
{
  if (std::holds_alternative<AtZero>(config.target))
    return estimate_at_zero(sample, config, warnings);
  return estimate_at_point(sample, config, warnings);
}

double
bandwidth_smooth(double A, double beta, double gamma, double x0, double n,
                 double r, Warnings* warnings)
{
  require_positive(A, "A");
  require_positive(beta, "beta");
  require_positive(gamma, "gamma");
  require_positive(x0, "x0");
  require_positive(n, "n");
  const double scale = A * x0 * (std::pow(x0, beta) + 1.0);
  const double h =
    std::pow(scale * scale * n, -1.0 / (2.0 * beta + 2.0 * gamma + 1.0));
  if (warnings && r > 1.0 && !(h < std::min(std::log(r), 1.0))) {
    warnings->push_back("BandwidthTooLarge: h* = " + fmt(h) +
                        " is not below min(ln r, 1) = " +
                        fmt(std::min(std::log(r), 1.0)));
  }
  return h;
}

double
s_star_moment(double alpha, double b, double eps)
{
  require_positive(alpha, "alpha");
  require_positive(eps, "eps");
  return std::max(-alpha, 0.5 * (1.0 - b) + eps);
}

double
bandwidth_moment(const MomentRule& rule, double x0, double n)
{
  require_positive(rule.A, "A");
  require_positive(rule.beta, "beta");
  require_positive(rule.gamma, "gamma");
  require_positive(rule.M, "M");
  require_positive(x0, "x0");
  require_positive(n, "n");
  const double s = s_star_moment(rule.alpha, rule.b, rule.eps);
  const double base = rule.A * rule.A * std::pow(x0, 2.0 - 2.0 * s) *
                      std::pow(std::pow(x0, rule.beta) + 1.0, 2.0) * n / rule.M;
  return rule.C5 *
         std::pow(base, -1.0 / (2.0 * rule.beta + 2.0 * rule.gamma + 1.0));
}

double
bandwidth_supersmooth(double A, double beta, double gamma, double lambda,
                      double x0, double n, double C1)
{
  require_positive(A, "A");
  require_positive(beta, "beta");
  require_positive(gamma, "gamma");
  require_positive(lambda, "lambda");
  require_positive(x0, "x0");
  require_positive(n, "n");
  const double arg = A * A * std::pow(x0, 2.0 * beta + 2.0) * n;
  if (!(arg > std::exp(1.0))) {
    throw DomainError("A^2 x0^(2 beta + 2) n = " + fmt(arg) +
                      " must exceed e for the super-smooth bandwidth");
  }
  return C1 * gamma * std::pow(std::log(arg), -1.0 + 1.0 / (2.0 * lambda));
}

ZeroBandwidth
bandwidth_zero(double A, double beta, double M, double p, double q, double n)
{
  require_positive(A, "A");
  require_positive(beta, "beta");
  require_positive(M, "M");
  if (!(p >= 0.0 && p < 1.0))
    throw InvalidArgument("zero behaviour exponent p must lie in [0, 1), got " + fmt(p));
  if (!(q >= 0.0))
    throw InvalidArgument("log exponent q must be nonnegative, got " + fmt(q));
  if (!(n >= 3.0))
    throw InvalidArgument("sample size n must be at least 3, got " + fmt(n));
  const int kappa = (p == 0.0) ? 1 : 0;
  const double base = M / (A * A) * std::pow(std::log(n), q + kappa) / n;
  return { 0.5 * (1.0 - p), std::pow(base, 1.0 / (2.0 * beta + 1.0 + p)), kappa };
}

double
expected_estimate(const EstimatorConfig& config,
                  const std::function<double(double)>& density)
{
  config.validate();
  const auto kernel = config.lkernel.kernel();
  if (!kernel)
    throw InvalidArgument("the L-kernel carries no deconvolution kernel");
  const double h = config.h;
  if (const auto* p = std::get_if<AtPoint>(&config.target)) {
    // t = x0 e^{h u}: int K(u) f(x0 e^{hu}) e^{hu} du.
    const double x0 = p->x0;
    return integrate_against(*kernel, [&](double u) {
      const double e = std::exp(h * u);
      return e == 0.0 || !std::isfinite(e) ? 0.0 : density(x0 * e) * e;
    });
  }
  return integrate_against(*kernel, [&](double v) { return density(h * v); });
}

} // namespace mdeconv
