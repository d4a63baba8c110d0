#pragma once

#include "mdeconv/kernels.hpp"
#include "mdeconv/mellin.hpp"

#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace mdeconv {

//! Controls for the numerical Mellin-line inversion.
struct InversionOptions
{
  //! Frequencies where |F| < envelope_tol * max|F| are dropped.
  double envelope_tol = 1e-12;
  //! Largest scanned frequency, in units of the kernel argument
  //! (omega * h for point tables, omega for zero-point tables).
  double frequency_budget = 5e3;
  //! Required ratio max_{|t|>=T} |rho| / max |rho|.
  double tail_tol = 1e-10;
  double t_initial = 4.0;
  double t_max = 1024.0;
  //! t-samples per shortest retained period.
  int oversample = 32;
  //! Zero-point tables: below u_lo the profile is extended by its boundary
  //! L value; u_lo is where y^{-s} amplification reaches this factor.
  double zero_amplification = 1e6;
};

//! Uniform table of a rho-profile and its derivative on [-T, T], read by
//! cubic Hermite interpolation.
struct RhoTable
{
  double t0 = 0.0;  // first node
  double dt = 0.0;
  double T = 0.0;   // support half-width
  double omega_max = 0.0;
  std::vector<double> values;
  std::vector<double> slopes;

  //! Interpolated value; 0 outside [-T, T].
  double operator()(double t) const;
};

//! Observation-side kernel L_{s,h}.
class LKernel
{
public:
  //! Gaussian-jackknife kernel with g(x) = nu x^{nu-1} on (0,1):
  //! L = (1/sqrt(2 pi)) sum_j c_j exp(-l^2/(2 j^2 h^2)) (1/(x j h))
  //!     [1 + l/(nu j^2 h^2)],  l = ln(x/y).
  struct ClosedBeta { double nu; int m; double h; double s; };
  //! Exponential-base zero-point kernel with g(x) = nu x^{nu-1} on (0,1).
  struct ClosedBetaZero { double nu; int m; double s; double h; };
  struct NumericTable
  {
    std::optional<ErrorModel> model; // empty for raw transform input
    KernelK kernel;
    double s;
    double h;
    bool at_zero;
    std::shared_ptr<const RhoTable> rho;
    double u_lo; // zero-point tables only
  };
  struct TwoSided
  {
    MellinFn g_plus;
    MellinFn g_minus;
    KernelK kernel;
    double s;
    double h;
    std::shared_ptr<const RhoTable> rho_plus;
    std::shared_ptr<const RhoTable> rho_minus;
  };

  using Kind = std::variant<ClosedBeta, ClosedBetaZero, NumericTable, TwoSided>;

  explicit LKernel(Kind kind)
    : kind_(std::move(kind))
  {}

  const Kind& kind() const noexcept { return kind_; }
  bool at_zero() const noexcept;
  double s() const noexcept;
  double h() const noexcept;
  std::optional<KernelK> kernel() const;
  std::string name() const;

  //! L_{s,h}(x, y); zero when y/x <= 0. Throws DomainError for x == 0 and
  //! InvalidArgument on a zero-point kernel.
  double evaluate(double x, double y) const;
  //! L_{s,h}(y) of the zero-point estimator, y >= 0.
  double evaluate0(double y) const;

  //! The profile rho(t): L = (1/x)|x/y|^s rho(ln|y/x|) for point kernels and
  //! L = h^{s-1} y^{-s} rho(ln(y/h)) at zero. `negative` selects the y/x < 0
  //! branch of a two-sided kernel.
  double rho(double t, bool negative = false) const;
  //! Half-width of the tabulated profile (closed forms report a width past
  //! which the profile is below double precision).
  double support_halfwidth() const;

private:
  Kind kind_;
};

//! Point kernel by numerical inversion of Kcheck((s+iw)h) / g~(1-s-iw).
//! Throws StripViolation, DivergentIntegrand, GridResolution.
LKernel lkernel_numeric(const ErrorModel& model, const KernelK& kernel,
                        double s, double h, const InversionOptions& opt = {});

//! Same with the Mellin transform of g supplied directly; the line
//! Re z = 1 - s must lie in its strip.
LKernel lkernel_numeric(const MellinFn& g_mellin, const KernelK& kernel,
                        double s, double h, const InversionOptions& opt = {});

//! Closed form for the Gaussian-jackknife kernel and g(x) = nu x^{nu-1}.
//! Independent of s; `s` is recorded only.
LKernel lkernel_closed_beta(double nu, int m, double h, double s = 0.0);

//! Closed form for the exponential-base zero-point kernel and
//! g(x) = nu x^{nu-1}; requires 0 < s < nu (recorded only).
LKernel lkernel_closed_beta_zero(double nu, int m, double h, double s);

//! Zero-point kernel by numerical inversion of K~(s+iw) / g~(1-s-iw). The
//! kernel must be of Mellin type (ZeroPoint or ExponentialBase).
LKernel lkernel_zero_numeric(const ErrorModel& model, const KernelK& kernel,
                             double s, double h, const InversionOptions& opt = {});

LKernel lkernel_zero_numeric(const MellinFn& g_mellin, const KernelK& kernel,
                             double s, double h, const InversionOptions& opt = {});

//! Both branches for a density on the whole line. An empty `g_minus` is the
//! zero function. Throws NotIdentifiable when |g+^2 - g-^2| falls below
//! `floor` on the line Re z = 1 - s.
LKernel lkernel_two_sided(const MellinFn& g_plus, const MellinFn& g_minus,
                          const KernelK& kernel, double s, double h,
                          const InversionOptions& opt = {},
                          double floor = 1e-12);

//! Closed form when one applies, numeric inversion otherwise.
LKernel make_lkernel(const ErrorModel& model, const KernelK& kernel, double s,
                     double h, bool at_zero, const InversionOptions& opt = {});

} // namespace mdeconv
