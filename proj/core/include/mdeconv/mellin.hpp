#pragma once

#include "mdeconv/complex_gamma.hpp"
#include "mdeconv/quadrature.hpp"
#include "mdeconv/rng.hpp"

#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace mdeconv {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

using MellinFn = std::function<cplx(cplx)>;
using DensityFn = std::function<double(double)>;

//! Vertical strip {a < Re(z) < b} where a Mellin transform converges.
//! A degenerate strip a == b is the single line Re(z) = a.
struct ComplexStrip
{
  double a = -kInf;
  double b = kInf;

  bool is_line() const noexcept { return a == b; }
  bool contains(double re) const noexcept
  {
    return is_line() ? re == a : (re > a && re < b);
  }
  std::string str() const;
};

// Regularity metadata. Constants not stated for a model are NaN.
struct SmoothDecay
{
  double gamma;
  double omega0 = std::numeric_limits<double>::quiet_NaN();
  double c0 = std::numeric_limits<double>::quiet_NaN();
  double B1 = std::numeric_limits<double>::quiet_NaN();
  double B2 = std::numeric_limits<double>::quiet_NaN();
};

struct SuperSmoothDecay
{
  double gamma; // exponential rate
  double nu;    // polynomial prefactor exponent
  double omega0 = std::numeric_limits<double>::quiet_NaN();
  double c0 = std::numeric_limits<double>::quiet_NaN();
  double B1 = std::numeric_limits<double>::quiet_NaN();
  double B2 = std::numeric_limits<double>::quiet_NaN();
};

//! g(x) ~ x^{-p} ln(1/x)^q on (0, delta).
struct ZeroBehavior
{
  double p;
  double q;
  double delta;
  double c0 = std::numeric_limits<double>::quiet_NaN();
  double C0 = std::numeric_limits<double>::quiet_NaN();
};

using DecayRegularity = std::variant<std::monostate, SmoothDecay, SuperSmoothDecay>;

//! A known error density g on [0, inf) with its Mellin transform.
class ErrorModel
{
public:
  struct Uniform { double theta; };
  //! g(x) = (nu+1) x^nu / theta^{nu+1} on (0, theta), nu > -1.
  struct Beta { double nu; double theta; };
  //! g(x) = (nu-1) theta^{nu-1} / x^nu on (theta, inf), nu > 1.
  struct Pareto { double nu; double theta; };
  //! g(x) = mu^alpha x^{alpha-1} e^{-mu x} / Gamma(alpha).
  struct Gamma { double alpha; double mu; };
  struct HalfNormal { double upsilon; };
  //! Product of two independent U(0,1): g(x) = ln(1/x) on (0, 1).
  struct LogProductUniform {};
  struct Custom
  {
    std::string name;
    DensityFn density;                       // may be empty for atoms
    std::function<double(CounterRng&)> sampler;
    MellinFn mellin;                         // empty -> numeric transform
    ComplexStrip strip;
    std::vector<double> breakpoints;         // x-locations of jumps
  };

  using Kind =
    std::variant<Uniform, Beta, Pareto, Gamma, HalfNormal, LogProductUniform, Custom>;

  static ErrorModel uniform(double theta = 1.0);
  static ErrorModel beta(double nu, double theta = 1.0);
  //! g(x) = nu x^{nu-1} on (0, 1); the same family as beta(nu - 1, 1).
  static ErrorModel power(double nu);
  static ErrorModel pareto(double nu, double theta);
  static ErrorModel gamma(double alpha, double mu);
  static ErrorModel half_normal(double upsilon);
  static ErrorModel log_product_uniform();
  static ErrorModel custom(Custom spec,
                           DecayRegularity decay = {},
                           std::optional<ZeroBehavior> zero = {});
  //! eta == 1 almost surely: no measurement error at all.
  static ErrorModel unit_point_mass();

  const Kind& kind() const noexcept { return kind_; }
  const ComplexStrip& strip() const noexcept { return strip_; }
  const DecayRegularity& decay() const noexcept { return decay_; }
  const std::optional<ZeroBehavior>& zero_behavior() const noexcept { return zero_; }

  //! Shape parameter nu of g(x) = nu x^{nu-1} on (0,1) when the model is a
  //! unit-scale Beta/Uniform, otherwise empty.
  std::optional<double> power_shape() const;

  double density(double x) const;
  double sample(CounterRng& rng) const;
  //! Points in (0, inf) where the density is not smooth.
  std::vector<double> breakpoints() const;
  std::string name() const;

private:
  ErrorModel(Kind kind, ComplexStrip strip, DecayRegularity decay,
             std::optional<ZeroBehavior> zero);

  Kind kind_;
  ComplexStrip strip_;
  DecayRegularity decay_;
  std::optional<ZeroBehavior> zero_;
};

//! Closed-form Mellin transform of the model; Custom models without a
//! closed form fall back to mellin_numeric. Throws StripViolation.
cplx mellin_analytic(const ErrorModel& model, cplx z);

//! int_0^inf x^{z-1} u(x) dx by adaptive quadrature in t = ln x, split at
//! x = 1 and at `quad.breakpoints` (given as x-locations).
cplx mellin_numeric(const DensityFn& density, cplx z, const QuadSpec& quad = {});

struct ParsevalSides
{
  double lhs;
  double rhs;
};

//! Both sides of int u^2 x^{2s-1} dx = (1/2pi) int |u~(s+iw)|^2 dw by
//! independent quadratures. `transform` defaults to mellin_numeric of u.
ParsevalSides parseval_check(const DensityFn& u, double s,
                             const QuadSpec& quad = {},
                             const MellinFn& transform = {});

struct IdentifiabilityResult
{
  bool identifiable;
  double margin;
};

//! min over the grid of |g+(z)^2 - g-(z)^2| on Re(z) = probe_re.
//! An empty `g_minus` means the density is one-sided.
IdentifiabilityResult identifiability_check(const MellinFn& g_plus,
                                            const MellinFn& g_minus,
                                            double probe_re,
                                            std::span<const double> omegas,
                                            double floor = 1e-12);

struct DecayFit
{
  double gamma;
  double residual; // RMS of the least-squares fit
};

//! Estimates the decay exponent of |g~(sigma + i w)| over [w_lo, w_hi].
//! Smooth models: negated log-log slope. Super-smooth models: negated slope
//! of log|g~| - nu log w against w.
DecayFit fit_decay_exponent(const ErrorModel& model, double sigma,
                            double omega_lo, double omega_hi,
                            std::size_t points = 64);

} // namespace mdeconv
