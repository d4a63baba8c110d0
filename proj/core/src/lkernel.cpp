#include "mdeconv/lkernel.hpp"
#include "mdeconv/errors.hpp"

#include <fftw3.h>

#include <array>
#include <cmath>
#include <mutex>
#include <numbers>
#include <sstream>

namespace mdeconv {

namespace {

constexpr double kPi = std::numbers::pi;
const double kInvSqrt2Pi = 1.0 / std::sqrt(2.0 * kPi);
constexpr std::size_t kMaxGrid = std::size_t{ 1 } << 22;

// FFTW planning is not thread-safe; execution on distinct arrays is.
std::mutex&
fftw_planner_mutex()
{
  static std::mutex m;
  return m;
}

// Integrand on the line for omega >= 0; returns the (+) and (-) branch.
using LineFn = std::function<std::array<cplx, 2>(double)>;

std::string
fmt(double v)
{
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

// Smallest frequency beyond which both branches stay below the envelope
// tolerance over a full doubling window.
double
scan_cutoff(const LineFn& f, double scale, const InversionOptions& opt)
{
  const double step0 = 0.05 / scale;
  double peak = 0.0;
  double last_big = 0.0;
  for (double omega = 0.0;; omega += std::max(step0, 0.01 * omega)) {
    const auto v = f(omega);
    const double mag = std::max(std::abs(v[0]), std::abs(v[1]));
    if (!std::isfinite(mag)) {
      throw DivergentIntegrand("line integrand is not finite at omega = " +
                               fmt(omega));
    }
    peak = std::max(peak, mag);
    if (mag >= opt.envelope_tol * peak)
      last_big = omega;
    if (omega * scale >= 1.0 && omega > 2.0 * last_big)
      break;
    if (omega * scale > opt.frequency_budget) {
      throw DivergentIntegrand(
        "line integrand does not decay below " + fmt(opt.envelope_tol) +
        " of its peak within the frequency budget (|F| = " + fmt(mag / peak) +
        " of peak at omega = " + fmt(omega) + ")");
    }
  }
  if (peak == 0.0)
    throw DivergentIntegrand("line integrand vanishes identically");
  return last_big + std::max(step0, 0.01 * last_big);
}

struct FftwBuffer
{
  explicit FftwBuffer(std::size_t n)
    : data(static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * n)))
  {
    if (!data)
      throw GridResolution("cannot allocate an inversion grid of size " +
                           std::to_string(n));
  }
  ~FftwBuffer() { fftw_free(data); }
  FftwBuffer(const FftwBuffer&) = delete;
  FftwBuffer& operator=(const FftwBuffer&) = delete;

  fftw_complex* data;
};

void
forward_fft(FftwBuffer& buf, std::size_t n)
{
  fftw_plan plan;
  {
    std::lock_guard lock(fftw_planner_mutex());
    plan = fftw_plan_dft_1d(static_cast<int>(n), buf.data, buf.data,
                            FFTW_FORWARD, FFTW_ESTIMATE);
  }
  fftw_execute(plan);
  std::lock_guard lock(fftw_planner_mutex());
  fftw_destroy_plan(plan);
}

// rho(t) = (1/2pi) int e^{-i w t} F(w) dw for both branches. The grid on
// [-2T, 2T) doubles T until the profile beyond |t| = T is negligible.
std::array<RhoTable, 2>
invert_line(const LineFn& f, int branches, double scale,
            const InversionOptions& opt)
{
  const double omega_max = scan_cutoff(f, scale, opt);
  for (double T = opt.t_initial; T <= opt.t_max; T *= 2.0) {
    const double wanted = 4.0 * T * opt.oversample * omega_max / kPi;
    std::size_t n = 1024;
    while (static_cast<double>(n) < wanted)
      n *= 2;
    if (n > kMaxGrid) {
      throw GridResolution("inversion grid would need " + fmt(wanted) +
                           " points (omega_max = " + fmt(omega_max) +
                           ", T = " + fmt(T) + ")");
    }
    const double dt = 4.0 * T / static_cast<double>(n);
    const double dw = 2.0 * kPi / (static_cast<double>(n) * dt);
    const std::size_t half = n / 2;
    const auto retained =
      std::min<std::size_t>(half - 1, static_cast<std::size_t>(omega_max / dw));

    std::vector<std::array<cplx, 2>> line(retained + 1);
    for (std::size_t k = 0; k <= retained; ++k)
      line[k] = f(dw * static_cast<double>(k));

    std::array<RhoTable, 2> out;
    bool decayed = true;
    for (int b = 0; b < branches && decayed; ++b) {
      FftwBuffer val(n);
      FftwBuffer der(n);
      for (std::size_t j = 0; j < n; ++j) {
        val.data[j][0] = val.data[j][1] = 0.0;
        der.data[j][0] = der.data[j][1] = 0.0;
      }
      auto put = [&](std::size_t j, cplx v, double omega) {
        const double sign = (j % 2 == 0) ? 1.0 : -1.0;
        const cplx d = cplx(0.0, -omega) * v;
        val.data[j][0] = sign * v.real();
        val.data[j][1] = sign * v.imag();
        der.data[j][0] = sign * d.real();
        der.data[j][1] = sign * d.imag();
      };
      for (std::size_t k = 0; k <= retained; ++k) {
        const double omega = dw * static_cast<double>(k);
        put(half + k, line[k][b], omega);
        if (k > 0)
          put(half - k, std::conj(line[k][b]), -omega);
      }
      forward_fft(val, n);
      forward_fft(der, n);

      const double norm = dw / (2.0 * kPi) * ((half % 2 == 0) ? 1.0 : -1.0);
      std::vector<double> rho(n);
      std::vector<double> drho(n);
      double peak = 0.0;
      for (std::size_t k = 0; k < n; ++k) {
        const double sign = (k % 2 == 0) ? norm : -norm;
        rho[k] = sign * val.data[k][0];
        drho[k] = sign * der.data[k][0];
        peak = std::max(peak, std::abs(rho[k]));
      }
      const std::size_t lo = n / 4;
      const std::size_t hi = 3 * n / 4;
      double tail = 0.0;
      for (std::size_t k = 0; k <= lo; ++k)
        tail = std::max(tail, std::abs(rho[k]));
      for (std::size_t k = hi; k < n; ++k)
        tail = std::max(tail, std::abs(rho[k]));
      if (peak > 0.0 && tail >= opt.tail_tol * peak) {
        decayed = false;
        break;
      }
      RhoTable& table = out[b];
      table.T = T;
      table.dt = dt;
      table.t0 = -T;
      table.omega_max = omega_max;
      table.values.assign(rho.begin() + static_cast<std::ptrdiff_t>(lo),
                          rho.begin() + static_cast<std::ptrdiff_t>(hi) + 1);
      table.slopes.assign(drho.begin() + static_cast<std::ptrdiff_t>(lo),
                          drho.begin() + static_cast<std::ptrdiff_t>(hi) + 1);
    }
    if (decayed)
      return out;
  }
  throw GridResolution("rho profile does not decay below " +
                       fmt(opt.tail_tol) + " of its peak within |t| <= " +
                       fmt(opt.t_max));
}

void
check_h(double h)
{
  if (!(h > 0.0) || !std::isfinite(h))
    throw InvalidArgument("bandwidth h must be positive, got " + fmt(h));
}

void
check_line(const ErrorModel& model, double s)
{
  if (!model.strip().contains(1.0 - s)) {
    throw StripViolation("line Re z = " + fmt(1.0 - s) + " (s = " + fmt(s) +
                         ") outside the strip " + model.strip().str() +
                         " of " + model.name());
  }
}

MellinFn
analytic_of(const ErrorModel& model)
{
  return [model](cplx z) { return mellin_analytic(model, z); };
}

std::vector<double>
jackknife_weights(int m)
{
  std::vector<double> w;
  for (int j = 1; j <= m + 1; ++j)
    w.push_back(binomial(m + 1, j) * ((j % 2 == 1) ? 1.0 : -1.0));
  return w;
}

double
closed_beta_value(const LKernel::ClosedBeta& k, double x, double y)
{
  const double l = std::log(x / y);
  double sum = 0.0;
  const auto w = jackknife_weights(k.m);
  for (std::size_t i = 0; i < w.size(); ++i) {
    const double jh = static_cast<double>(i + 1) * k.h;
    sum += w[i] * std::exp(-l * l / (2.0 * jh * jh)) / (x * jh) *
           (1.0 + l / (k.nu * jh * jh));
  }
  return kInvSqrt2Pi * sum;
}

double
closed_beta_zero_value(const LKernel::ClosedBetaZero& k, double y)
{
  double sum = 0.0;
  const auto w = jackknife_weights(k.m);
  for (std::size_t i = 0; i < w.size(); ++i) {
    const double jh = static_cast<double>(i + 1) * k.h;
    sum += w[i] / jh * std::exp(-y / jh) * (1.0 - y / (jh * k.nu));
  }
  return sum;
}

double
zero_lower_cut(double s, double T, const InversionOptions& opt)
{
  if (s <= 0.0)
    return -T;
  return std::max(-T, -std::log(opt.zero_amplification) / s);
}

void
require_point_kernel(const KernelK& kernel)
{
  if (kernel.transform_kind() != TransformKind::bilateral_laplace) {
    throw InvalidArgument("point L-kernels need a bilateral-Laplace kernel, got " +
                          kernel.name());
  }
}

void
require_zero_kernel(const KernelK& kernel, double s)
{
  if (kernel.transform_kind() != TransformKind::mellin) {
    throw InvalidArgument("zero-point L-kernels need a Mellin-type kernel, got " +
                          kernel.name());
  }
  if (std::holds_alternative<ExponentialBase>(kernel.family()) && !(s > 0.0)) {
    throw StripViolation("exponential-base kernel transform needs Re z = s > 0, got s = " +
                         fmt(s));
  }
}

LKernel
numeric_point(std::optional<ErrorModel> model, const MellinFn& g,
              const KernelK& kernel, double s, double h,
              const InversionOptions& opt)
{
  require_point_kernel(kernel);
  check_h(h);
  LineFn f = [&](double omega) -> std::array<cplx, 2> {
    const cplx z(s, omega);
    return { kernel.transform(z * h) / g(1.0 - z), cplx(0.0) };
  };
  auto tables = invert_line(f, 1, h, opt);
  return LKernel(LKernel::NumericTable{
    std::move(model), kernel, s, h, false,
    std::make_shared<const RhoTable>(std::move(tables[0])), 0.0 });
}

LKernel
numeric_zero(std::optional<ErrorModel> model, const MellinFn& g,
             const KernelK& kernel, double s, double h,
             const InversionOptions& opt)
{
  require_zero_kernel(kernel, s);
  check_h(h);
  LineFn f = [&](double omega) -> std::array<cplx, 2> {
    const cplx z(s, omega);
    return { kernel.transform(z) / g(1.0 - z), cplx(0.0) };
  };
  auto tables = invert_line(f, 1, 1.0, opt);
  const double T = tables[0].T;
  return LKernel(LKernel::NumericTable{
    std::move(model), kernel, s, h, true,
    std::make_shared<const RhoTable>(std::move(tables[0])),
    zero_lower_cut(s, T, opt) });
}

} // namespace

double
RhoTable::operator()(double t) const
{
  if (!(t >= -T && t <= T) || values.empty())
    return 0.0;
  const double u = (t - t0) / dt;
  auto i = static_cast<std::size_t>(u);
  if (i + 1 >= values.size())
    i = values.size() - 2;
  const double r = u - static_cast<double>(i);
  const double h00 = (1.0 + 2.0 * r) * (1.0 - r) * (1.0 - r);
  const double h10 = r * (1.0 - r) * (1.0 - r);
  const double h01 = r * r * (3.0 - 2.0 * r);
  const double h11 = r * r * (r - 1.0);
  return h00 * values[i] + h10 * dt * slopes[i] + h01 * values[i + 1] +
         h11 * dt * slopes[i + 1];
}

bool
LKernel::at_zero() const noexcept
{
  if (std::holds_alternative<ClosedBetaZero>(kind_))
    return true;
  if (const auto* t = std::get_if<NumericTable>(&kind_))
    return t->at_zero;
  return false;
}

double
LKernel::s() const noexcept
{
  return std::visit([](const auto& k) { return k.s; }, kind_);
}

double
LKernel::h() const noexcept
{
  return std::visit([](const auto& k) { return k.h; }, kind_);
}

std::optional<KernelK>
LKernel::kernel() const
{
  struct Visitor
  {
    std::optional<KernelK> operator()(const ClosedBeta& k) const
    {
      return build_gaussian_jackknife_kernel(k.m);
    }
    std::optional<KernelK> operator()(const ClosedBetaZero& k) const
    {
      return build_exponential_zero_kernel(k.m);
    }
    std::optional<KernelK> operator()(const NumericTable& k) const { return k.kernel; }
    std::optional<KernelK> operator()(const TwoSided& k) const { return k.kernel; }
  };
  return std::visit(Visitor{}, kind_);
}

std::string
LKernel::name() const
{
  struct Visitor
  {
    std::string operator()(const ClosedBeta& k) const
    {
      return "closed-beta(nu=" + fmt(k.nu) + ",m=" + std::to_string(k.m) +
             ",h=" + fmt(k.h) + ")";
    }
    std::string operator()(const ClosedBetaZero& k) const
    {
      return "closed-beta-zero(nu=" + fmt(k.nu) + ",m=" + std::to_string(k.m) +
             ",s=" + fmt(k.s) + ",h=" + fmt(k.h) + ")";
    }
    std::string operator()(const NumericTable& k) const
    {
      return std::string(k.at_zero ? "numeric-zero(" : "numeric(") +
             (k.model ? k.model->name() : std::string("custom")) + "," +
             k.kernel.name() + ",s=" + fmt(k.s) + ",h=" + fmt(k.h) + ")";
    }
    std::string operator()(const TwoSided& k) const
    {
      return "two-sided(" + k.kernel.name() + ",s=" + fmt(k.s) +
             ",h=" + fmt(k.h) + ")";
    }
  };
  return std::visit(Visitor{}, kind_);
}

double
LKernel::evaluate(double x, double y) const
{
  if (at_zero())
    throw InvalidArgument("evaluate(x, y) called on a zero-point kernel; use evaluate0");
  if (x == 0.0 || !std::isfinite(x))
    throw DomainError("point kernels need x != 0, got x = " + fmt(x));
  const double r = y / x;
  if (const auto* k = std::get_if<ClosedBeta>(&kind_))
    return r > 0.0 ? closed_beta_value(*k, x, y) : 0.0;
  if (r > 0.0)
    return std::pow(r, -s()) * rho(std::log(r)) / x;
  if (r < 0.0 && std::holds_alternative<TwoSided>(kind_))
    return -std::pow(-r, -s()) * rho(std::log(-r), true) / x;
  return 0.0;
}

double
LKernel::evaluate0(double y) const
{
  if (!at_zero())
    throw InvalidArgument("evaluate0 called on a point kernel; use evaluate");
  if (!(y >= 0.0))
    throw DomainError("zero-point kernels need y >= 0, got y = " + fmt(y));
  if (const auto* k = std::get_if<ClosedBetaZero>(&kind_))
    return closed_beta_zero_value(*k, y);
  const auto& t = std::get<NumericTable>(kind_);
  double u = (y > 0.0) ? std::log(y / t.h) : -kInf;
  if (u > t.rho->T)
    return 0.0;
  u = std::max(u, t.u_lo);
  return std::exp(-t.s * u) * (*t.rho)(u) / t.h;
}

double
LKernel::rho(double t, bool negative) const
{
  struct Visitor
  {
    double t;
    bool negative;
    double operator()(const ClosedBeta& k) const
    {
      return negative ? 0.0 : std::exp(k.s * t) * closed_beta_value(k, 1.0, std::exp(t));
    }
    double operator()(const ClosedBetaZero& k) const
    {
      if (negative)
        return 0.0;
      return k.h * std::exp(k.s * t) * closed_beta_zero_value(k, k.h * std::exp(t));
    }
    double operator()(const NumericTable& k) const
    {
      return negative ? 0.0 : (*k.rho)(t);
    }
    double operator()(const TwoSided& k) const
    {
      return negative ? (*k.rho_minus)(t) : (*k.rho_plus)(t);
    }
  };
  return std::visit(Visitor{ t, negative }, kind_);
}

double
LKernel::support_halfwidth() const
{
  struct Visitor
  {
    double operator()(const ClosedBeta& k) const { return 40.0 * (k.m + 1) * k.h; }
    double operator()(const ClosedBetaZero& k) const
    {
      return std::log(800.0 * (k.m + 1));
    }
    double operator()(const NumericTable& k) const { return k.rho->T; }
    double operator()(const TwoSided& k) const { return k.rho_plus->T; }
  };
  return std::visit(Visitor{}, kind_);
}

LKernel
lkernel_numeric(const ErrorModel& model, const KernelK& kernel, double s,
                double h, const InversionOptions& opt)
{
  check_line(model, s);
  return numeric_point(model, analytic_of(model), kernel, s, h, opt);
}

LKernel
lkernel_numeric(const MellinFn& g_mellin, const KernelK& kernel, double s,
                double h, const InversionOptions& opt)
{
  return numeric_point(std::nullopt, g_mellin, kernel, s, h, opt);
}

LKernel
lkernel_closed_beta(double nu, int m, double h, double s)
{
  if (!(nu > 0.0))
    throw InvalidArgument("closed beta kernel needs nu > 0");
  if (m < 1)
    throw InvalidArgument("closed beta kernel needs m >= 1");
  check_h(h);
  return LKernel(LKernel::ClosedBeta{ nu, m, h, s });
}

LKernel
lkernel_closed_beta_zero(double nu, int m, double h, double s)
{
  if (!(nu > 0.0))
    throw InvalidArgument("closed beta zero kernel needs nu > 0");
  if (m < 1)
    throw InvalidArgument("closed beta zero kernel needs m >= 1");
  check_h(h);
  if (!(s > 0.0 && s < nu)) {
    throw StripViolation("closed beta zero kernel needs 0 < s < nu, got s = " +
                         fmt(s) + ", nu = " + fmt(nu));
  }
  return LKernel(LKernel::ClosedBetaZero{ nu, m, s, h });
}

LKernel
lkernel_zero_numeric(const ErrorModel& model, const KernelK& kernel, double s,
                     double h, const InversionOptions& opt)
{
  check_line(model, s);
  return numeric_zero(model, analytic_of(model), kernel, s, h, opt);
}

LKernel
lkernel_zero_numeric(const MellinFn& g_mellin, const KernelK& kernel, double s,
                     double h, const InversionOptions& opt)
{
  return numeric_zero(std::nullopt, g_mellin, kernel, s, h, opt);
}

LKernel
lkernel_two_sided(const MellinFn& g_plus, const MellinFn& g_minus,
                  const KernelK& kernel, double s, double h,
                  const InversionOptions& opt, double floor)
{
  if (!g_plus)
    throw InvalidArgument("two-sided kernel needs g+");
  require_point_kernel(kernel);
  check_h(h);
  std::vector<double> probe;
  for (int i = 0; i <= 400; ++i)
    probe.push_back(0.25 * i);
  const auto ident = identifiability_check(g_plus, g_minus, 1.0 - s, probe, floor);
  if (!ident.identifiable) {
    throw NotIdentifiable("|g+^2 - g-^2| = " + fmt(ident.margin) +
                          " on Re z = " + fmt(1.0 - s) + " is below " + fmt(floor));
  }
  const bool has_minus = static_cast<bool>(g_minus);
  LineFn f = [&](double omega) -> std::array<cplx, 2> {
    const cplx z(s, omega);
    const cplx gp = g_plus(1.0 - z);
    const cplx gm = has_minus ? g_minus(1.0 - z) : cplx(0.0);
    const cplx kc = kernel.transform(z * h);
    // g+/(g+^2 - g-^2) written so that g- = 0 gives exactly 1/g+.
    return { kc / (gp - gm * gm / gp), kc * gm / (gp * gp - gm * gm) };
  };
  auto tables = invert_line(f, 2, h, opt);
  return LKernel(LKernel::TwoSided{
    g_plus, g_minus, kernel, s, h,
    std::make_shared<const RhoTable>(std::move(tables[0])),
    std::make_shared<const RhoTable>(std::move(tables[1])) });
}

LKernel
make_lkernel(const ErrorModel& model, const KernelK& kernel, double s,
             double h, bool at_zero, const InversionOptions& opt)
{
  const auto shape = model.power_shape();
  if (!at_zero) {
    if (const auto* g = std::get_if<GaussianJackknife>(&kernel.family());
        g && shape) {
      check_line(model, s);
      return lkernel_closed_beta(*shape, g->m, h, s);
    }
    return lkernel_numeric(model, kernel, s, h, opt);
  }
  if (const auto* e = std::get_if<ExponentialBase>(&kernel.family());
      e && shape && s > 0.0 && s < *shape) {
    return lkernel_closed_beta_zero(*shape, e->m, h, s);
  }
  return lkernel_zero_numeric(model, kernel, s, h, opt);
}

} // namespace mdeconv
