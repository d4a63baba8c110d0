#include "mdeconv/kernels.hpp"
#include "mdeconv/errors.hpp"

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <shared_mutex>
#include <sstream>
#include <vector>

namespace mdeconv {

namespace detail {

class KernelImpl
{
public:
  virtual ~KernelImpl() = default;

  virtual double evaluate(double t) const = 0;
  virtual cplx transform(cplx z) const = 0;

  KernelFamily family;
  int order = 1;
  KernelSupport support = KernelSupport::real_line;
  TransformKind kind = TransformKind::bilateral_laplace;
  double lo = 0.0;
  double hi = 0.0;
};

} // namespace detail

namespace {

constexpr double kPi = std::numbers::pi;
const double kInvSqrt2Pi = 1.0 / std::sqrt(2.0 * kPi);

void
check_order(int m, int limit = 12)
{
  if (m < 1 || m > limit) {
    std::ostringstream os;
    os << "kernel order m = " << m << " outside [1, " << limit << "]";
    throw InvalidArgument(os.str());
  }
}

// Alternating binomial weights C(m+1, j)(-1)^{j+1}, j = 1..m+1.
std::vector<double>
jackknife_weights(int m)
{
  std::vector<double> w;
  for (int j = 1; j <= m + 1; ++j)
    w.push_back(binomial(m + 1, j) * ((j % 2 == 1) ? 1.0 : -1.0));
  return w;
}

double
bump(double t)
{
  if (t <= -1.0 || t >= 1.0)
    return 0.0;
  return std::exp(-1.0 / (1.0 - t * t));
}

class FlatKernel final : public detail::KernelImpl
{
public:
  FlatKernel(int m, int q)
  {
    check_order(m);
    if (q < 1 || q > 12)
      throw InvalidArgument("flat kernel smoothness q outside [1, 12]");
    family = FlatCompact{ m, q };
    order = m;
    support = KernelSupport::unit_interval;
    kind = TransformKind::bilateral_laplace;
    lo = -1.0;
    hi = 1.0;

    const int dim = m + 1;
    std::vector<double> mom(2 * m + 1);
    QuadSpec quad;
    quad.rel_tol = 1e-14;
    quad.breakpoints = { 0.0 };
    for (int k = 0; k <= 2 * m; ++k)
      mom[k] = integrate([k](double t) { return std::pow(t, k) * bump(t); },
                         -1.0, 1.0, quad);
    Eigen::MatrixXd gram(dim, dim);
    for (int i = 0; i < dim; ++i)
      for (int j = 0; j < dim; ++j)
        gram(i, j) = mom[i + j];
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(gram);
    const auto& sv = svd.singularValues();
    const double cond = sv(0) / sv(sv.size() - 1);
    if (!(cond <= 1e12)) {
      std::ostringstream os;
      os << "moment Gram matrix for m = " << m << " has condition number "
         << cond;
      throw IllConditioned(os.str());
    }
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(dim);
    rhs(0) = 1.0;
    Eigen::VectorXd c = gram.ldlt().solve(rhs);
    coef_.assign(c.data(), c.data() + dim);
  }

  double evaluate(double t) const override
  {
    const double phi = bump(t);
    if (phi == 0.0)
      return 0.0;
    double p = 0.0;
    for (auto it = coef_.rbegin(); it != coef_.rend(); ++it)
      p = p * t + *it;
    return p * phi;
  }

  cplx transform(cplx z) const override
  {
    const std::pair<double, double> key{ z.real(), z.imag() };
    {
      std::shared_lock lock(mutex_);
      if (auto it = cache_.find(key); it != cache_.end())
        return it->second;
    }
    QuadSpec quad;
    quad.rel_tol = 1e-13;
    quad.max_depth = 22;
    quad.breakpoints = { 0.0 };
    const cplx value = integrate(
      [&](double t) { return evaluate(t) * std::exp(-z * t); }, -1.0, 1.0, quad);
    std::unique_lock lock(mutex_);
    if (cache_.size() >= kCacheLimit)
      cache_.clear();
    cache_.emplace(key, value);
    return value;
  }

private:
  static constexpr std::size_t kCacheLimit = std::size_t{ 1 } << 20;

  std::vector<double> coef_;
  mutable std::shared_mutex mutex_;
  mutable std::map<std::pair<double, double>, cplx> cache_;
};

class GaussianKernel final : public detail::KernelImpl
{
public:
  explicit GaussianKernel(int m)
    : weights_(jackknife_weights(m))
  {
    check_order(m);
    family = GaussianJackknife{ m };
    order = m;
    support = KernelSupport::real_line;
    kind = TransformKind::bilateral_laplace;
    hi = 14.0 * (m + 1);
    lo = -hi;
  }

  double evaluate(double t) const override
  {
    double sum = 0.0;
    for (std::size_t i = 0; i < weights_.size(); ++i) {
      const double j = static_cast<double>(i + 1);
      const double u = t / j;
      sum += weights_[i] / j * kInvSqrt2Pi * std::exp(-0.5 * u * u);
    }
    return sum;
  }

  cplx transform(cplx z) const override
  {
    cplx sum = 0.0;
    for (std::size_t i = 0; i < weights_.size(); ++i) {
      const double j = static_cast<double>(i + 1);
      sum += weights_[i] * std::exp(0.5 * j * j * z * z);
    }
    return sum;
  }

private:
  std::vector<double> weights_;
};

class SuperSmoothKernelImpl final : public detail::KernelImpl
{
public:
  static constexpr double kHalfWidth = 30.0;
  static constexpr std::size_t kNodes = 1u << 14;

  SuperSmoothKernelImpl(int m, int lambda)
    : weights_(jackknife_weights(m))
    , lambda_(lambda)
  {
    check_order(m);
    if (lambda < 2 || lambda > 8)
      throw InvalidArgument("super-smooth kernel needs 2 <= lambda <= 8");
    family = SuperSmoothKernel{ m, lambda };
    order = m;
    support = KernelSupport::real_line;
    kind = TransformKind::bilateral_laplace;
    hi = kHalfWidth * (m + 1);
    lo = -hi;

    // Trapezoid inversion of the even cosine transform. The omega step keeps
    // the aliasing period (2 pi / step = 4 * half width) well outside the
    // table; w^ is below 1e-40 past omega_max.
    const double two_lambda = 2.0 * lambda;
    const double omega_max = std::pow(two_lambda * 95.0, 1.0 / two_lambda);
    const double step = 2.0 * kPi / (4.0 * kHalfWidth);
    const auto terms = static_cast<std::size_t>(std::ceil(omega_max / step));
    std::vector<double> what(terms + 1);
    for (std::size_t k = 0; k <= terms; ++k) {
      const double w = step * static_cast<double>(k);
      what[k] = std::exp(-std::pow(w, two_lambda) / two_lambda);
    }
    dx_ = 2.0 * kHalfWidth / static_cast<double>(kNodes);
    values_.resize(kNodes + 1);
    slopes_.resize(kNodes + 1);
    for (std::size_t i = 0; i <= kNodes; ++i) {
      const double x = -kHalfWidth + dx_ * static_cast<double>(i);
      double v = 0.5 * what[0];
      double d = 0.0;
      for (std::size_t k = 1; k <= terms; ++k) {
        const double w = step * static_cast<double>(k);
        v += what[k] * std::cos(w * x);
        d -= what[k] * w * std::sin(w * x);
      }
      values_[i] = v * step / kPi;
      slopes_[i] = d * step / kPi;
    }
  }

  double base(double x) const
  {
    if (std::abs(x) > kHalfWidth) {
      std::ostringstream os;
      os << "x = " << x << " outside the inversion table [-" << kHalfWidth
         << ", " << kHalfWidth << "]";
      throw GridResolution(os.str());
    }
    const double u = (x + kHalfWidth) / dx_;
    auto i = static_cast<std::size_t>(u);
    if (i >= kNodes)
      i = kNodes - 1;
    const double r = u - static_cast<double>(i);
    // Cubic Hermite on [x_i, x_{i+1}].
    const double h00 = (1.0 + 2.0 * r) * (1.0 - r) * (1.0 - r);
    const double h10 = r * (1.0 - r) * (1.0 - r);
    const double h01 = r * r * (3.0 - 2.0 * r);
    const double h11 = r * r * (r - 1.0);
    return h00 * values_[i] + h10 * dx_ * slopes_[i] + h01 * values_[i + 1] +
           h11 * dx_ * slopes_[i + 1];
  }

  double evaluate(double t) const override
  {
    double sum = 0.0;
    for (std::size_t i = 0; i < weights_.size(); ++i) {
      const double j = static_cast<double>(i + 1);
      if (std::abs(t / j) <= kHalfWidth)
        sum += weights_[i] / j * base(t / j);
    }
    return sum;
  }

  cplx transform(cplx z) const override
  {
    // w^ is entire: w^(omega) = exp(-omega^{2 lambda} / (2 lambda)) and
    // K^(z) = K-hat(-iz).
    const double two_lambda = 2.0 * lambda_;
    cplx sum = 0.0;
    for (std::size_t i = 0; i < weights_.size(); ++i) {
      const double j = static_cast<double>(i + 1);
      const cplx omega = cplx(0.0, -1.0) * j * z;
      sum += weights_[i] * std::exp(-std::pow(omega, 2 * lambda_) / two_lambda);
    }
    return sum;
  }

  //! int K(t) weight(t) dt, one 4-point Gauss-Legendre rule per table cell
  //! of every scaled copy; exact for polynomial weights up to degree 4.
  double integrate_cells(const std::function<double(double)>& weight) const
  {
    static constexpr std::array<double, 4> node{ -0.8611363115940526,
                                                 -0.3399810435848563,
                                                 0.3399810435848563,
                                                 0.8611363115940526 };
    static constexpr std::array<double, 4> mass{ 0.3478548451374538,
                                                 0.6521451548625461,
                                                 0.6521451548625461,
                                                 0.3478548451374538 };
    double total = 0.0;
    for (std::size_t c = 0; c < weights_.size(); ++c) {
      const double j = static_cast<double>(c + 1);
      double copy = 0.0;
      for (std::size_t i = 0; i < kNodes; ++i) {
        const double mid = -kHalfWidth + dx_ * (static_cast<double>(i) + 0.5);
        double cell = 0.0;
        for (int g = 0; g < 4; ++g) {
          const double u = mid + 0.5 * dx_ * node[g];
          cell += mass[g] * base(u) * weight(j * u);
        }
        copy += 0.5 * dx_ * cell;
      }
      total += weights_[c] * copy;
    }
    return total;
  }

private:
  std::vector<double> weights_;
  int lambda_;
  double dx_ = 0.0;
  std::vector<double> values_;
  std::vector<double> slopes_;
};

class ZeroPointKernel final : public detail::KernelImpl
{
public:
  ZeroPointKernel(int m, double s)
    : weights_(jackknife_weights(m))
    , s_(s)
  {
    check_order(m);
    if (!(s >= 0.0))
      throw InvalidArgument("zero-point kernel needs s >= 0");
    family = ZeroPoint{ m, s };
    order = m;
    support = KernelSupport::half_line;
    kind = TransformKind::mellin;
    lo = 0.0;
    hi = (m + 1) * std::exp(20.0);
  }

  double evaluate(double x) const override
  {
    double sum = 0.0;
    for (std::size_t i = 0; i < weights_.size(); ++i) {
      const double j = static_cast<double>(i + 1);
      sum += weights_[i] / j * zero_base_psi(s_, x / j);
    }
    return sum;
  }

  cplx transform(cplx z) const override
  {
    // psi~_s(z) = exp(-(1-s)^2/2) exp((z-s)^2/2); scaling by j gives j^{z-1}.
    cplx sum = 0.0;
    for (std::size_t i = 0; i < weights_.size(); ++i) {
      const double j = static_cast<double>(i + 1);
      sum += weights_[i] * std::exp((z - 1.0) * std::log(j));
    }
    const cplx shift = z - s_;
    return std::exp(0.5 * shift * shift - 0.5 * (1.0 - s_) * (1.0 - s_)) * sum;
  }

private:
  std::vector<double> weights_;
  double s_;
};

class ExponentialKernel final : public detail::KernelImpl
{
public:
  explicit ExponentialKernel(int m)
    : weights_(jackknife_weights(m))
  {
    check_order(m);
    family = ExponentialBase{ m };
    order = m;
    support = KernelSupport::half_line;
    kind = TransformKind::mellin;
    lo = 0.0;
    hi = 60.0 * (m + 1);
  }

  double evaluate(double x) const override
  {
    if (x < 0.0)
      return 0.0;
    double sum = 0.0;
    for (std::size_t i = 0; i < weights_.size(); ++i) {
      const double j = static_cast<double>(i + 1);
      sum += weights_[i] / j * std::exp(-x / j);
    }
    return sum;
  }

  cplx transform(cplx z) const override
  {
    cplx sum = 0.0;
    for (std::size_t i = 0; i < weights_.size(); ++i) {
      const double j = static_cast<double>(i + 1);
      sum += weights_[i] * std::exp((z - 1.0) * std::log(j));
    }
    return complex_gamma(z) * sum;
  }

private:
  std::vector<double> weights_;
};

} // namespace

double
binomial(int n, int k)
{
  if (k < 0 || k > n)
    return 0.0;
  double r = 1.0;
  for (int i = 1; i <= k; ++i)
    r = r * static_cast<double>(n - k + i) / static_cast<double>(i);
  return std::round(r);
}

double
zero_base_psi(double s, double x)
{
  if (x <= 0.0)
    return 0.0;
  const double l = std::log(x);
  return kInvSqrt2Pi * std::exp(-0.5 * (1.0 - s) * (1.0 - s) - s * l - 0.5 * l * l);
}

const KernelFamily&
KernelK::family() const noexcept
{
  return impl_->family;
}

int
KernelK::order() const noexcept
{
  return impl_->order;
}

KernelSupport
KernelK::support() const noexcept
{
  return impl_->support;
}

TransformKind
KernelK::transform_kind() const noexcept
{
  return impl_->kind;
}

double
KernelK::effective_lo() const noexcept
{
  return impl_->lo;
}

double
KernelK::effective_hi() const noexcept
{
  return impl_->hi;
}

double
KernelK::evaluate(double t) const
{
  return impl_->evaluate(t);
}

cplx
KernelK::transform(cplx z) const
{
  return impl_->transform(z);
}

std::string
KernelK::name() const
{
  struct Visitor
  {
    std::string operator()(const FlatCompact& f) const
    {
      return "flat(m=" + std::to_string(f.m) + ",q=" + std::to_string(f.q) + ")";
    }
    std::string operator()(const GaussianJackknife& f) const
    {
      return "gaussian(m=" + std::to_string(f.m) + ")";
    }
    std::string operator()(const SuperSmoothKernel& f) const
    {
      return "supersmooth(m=" + std::to_string(f.m) +
             ",lambda=" + std::to_string(f.lambda) + ")";
    }
    std::string operator()(const ZeroPoint& f) const
    {
      std::ostringstream os;
      os << "zero(m=" << f.m << ",s=" << f.s << ")";
      return os.str();
    }
    std::string operator()(const ExponentialBase& f) const
    {
      return "exponential(m=" + std::to_string(f.m) + ")";
    }
  };
  return std::visit(Visitor{}, impl_->family);
}

KernelK
build_flat_kernel(int m, int q)
{
  return KernelK(std::make_shared<FlatKernel>(m, q));
}

KernelK
build_gaussian_jackknife_kernel(int m)
{
  return KernelK(std::make_shared<GaussianKernel>(m));
}

KernelK
build_supersmooth_kernel(int m, int lambda)
{
  return KernelK(std::make_shared<SuperSmoothKernelImpl>(m, lambda));
}

KernelK
build_zero_kernel(int m, double s)
{
  return KernelK(std::make_shared<ZeroPointKernel>(m, s));
}

KernelK
build_exponential_zero_kernel(int m)
{
  return KernelK(std::make_shared<ExponentialKernel>(m));
}

KernelK
build_kernel(const KernelFamily& family)
{
  struct Visitor
  {
    KernelK operator()(const FlatCompact& f) const { return build_flat_kernel(f.m, f.q); }
    KernelK operator()(const GaussianJackknife& f) const
    {
      return build_gaussian_jackknife_kernel(f.m);
    }
    KernelK operator()(const SuperSmoothKernel& f) const
    {
      return build_supersmooth_kernel(f.m, f.lambda);
    }
    KernelK operator()(const ZeroPoint& f) const { return build_zero_kernel(f.m, f.s); }
    KernelK operator()(const ExponentialBase& f) const
    {
      return build_exponential_zero_kernel(f.m);
    }
  };
  return std::visit(Visitor{}, family);
}

double
supersmooth_base(const KernelK& kernel, double x)
{
  const auto* family = std::get_if<SuperSmoothKernel>(&kernel.family());
  if (!family)
    throw InvalidArgument("supersmooth_base needs a super-smooth kernel");
  // The family tag fixes the concrete type.
  return static_cast<const SuperSmoothKernelImpl&>(kernel.impl()).base(x);
}

double
integrate_against(const KernelK& kernel,
                  const std::function<double(double)>& weight,
                  const QuadSpec& quad)
{
  const KernelK& k = kernel;
  if (std::holds_alternative<ZeroPoint>(k.family())) {
    // Log-normal shape: integrate in u = ln x.
    const double m1 = static_cast<double>(k.order() + 1);
    return integrate(
      [&](double u) {
        const double x = std::exp(u);
        const double v = k.evaluate(x);
        return v == 0.0 ? 0.0 : v * weight(x) * x;
      },
      -20.0, 20.0 + std::log(m1), quad);
  }
  if (std::holds_alternative<SuperSmoothKernel>(k.family()))
    return static_cast<const SuperSmoothKernelImpl&>(k.impl())
      .integrate_cells(weight);
  QuadSpec spec = quad;
  if (k.support() != KernelSupport::half_line)
    spec.breakpoints.push_back(0.0);
  return integrate([&](double t) { return k.evaluate(t) * weight(t); },
                   k.effective_lo(), k.effective_hi(), spec);
}

double
kernel_moments(const KernelK& kernel, int k)
{
  if (k < 0)
    throw InvalidArgument("moment order must be nonnegative");
  return integrate_against(kernel, [k](double t) { return std::pow(t, k); });
}

} // namespace mdeconv
