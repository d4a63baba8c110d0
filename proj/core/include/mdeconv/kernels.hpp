#pragma once

#include "mdeconv/complex_gamma.hpp"
#include "mdeconv/quadrature.hpp"

#include <functional>
#include <memory>
#include <string>
#include <variant>

namespace mdeconv {

// Kernel families.
struct FlatCompact { int m; int q; };
struct GaussianJackknife { int m; };
struct SuperSmoothKernel { int m; int lambda; };
//! Mellin-side kernel built on psi_s(x) = c x^{-s} exp(-ln^2 x / 2).
struct ZeroPoint { int m; double s; };
//! Mellin-side kernel built on w(x) = e^{-x}; its Mellin transform is
//! Gamma(z) sum_j C(m+1,j)(-1)^{j+1} j^{z-1}.
struct ExponentialBase { int m; };

using KernelFamily =
  std::variant<FlatCompact, GaussianJackknife, SuperSmoothKernel, ZeroPoint, ExponentialBase>;

enum class KernelSupport
{
  unit_interval, // [-1, 1]
  real_line,
  half_line      // [0, inf)
};

enum class TransformKind
{
  bilateral_laplace, // K^(z) = int K(t) e^{-zt} dt
  mellin             // K~(z) = int_0^inf x^{z-1} K(x) dx
};

namespace detail {
class KernelImpl;
}

//! Deconvolution-side kernel K. Immutable; copies share state and may be
//! used concurrently.
class KernelK
{
public:
  const KernelFamily& family() const noexcept;
  int order() const noexcept;
  KernelSupport support() const noexcept;
  TransformKind transform_kind() const noexcept;
  std::string name() const;

  double operator()(double t) const { return evaluate(t); }
  double evaluate(double t) const;
  cplx transform(cplx z) const;

  //! Points outside of which K vanishes (or is below double precision);
  //! used to bound quadratures.
  double effective_lo() const noexcept;
  double effective_hi() const noexcept;

  explicit KernelK(std::shared_ptr<const detail::KernelImpl> impl)
    : impl_(std::move(impl))
  {}

  const detail::KernelImpl& impl() const noexcept { return *impl_; }

private:
  std::shared_ptr<const detail::KernelImpl> impl_;
};

//! K = p * phi with phi(t) = exp(-1/(1-t^2)) on (-1,1) and deg p = m chosen
//! so that int K = 1 and int t^k K = 0, k = 1..m. phi is C-infinity, so any
//! q is honoured. Throws IllConditioned when the Gram matrix condition number
//! exceeds 1e12.
KernelK build_flat_kernel(int m, int q);

//! sum_j C(m+1,j)(-1)^{j+1} (1/j) w(t/j) with the standard normal w.
KernelK build_gaussian_jackknife_kernel(int m);

//! Same alternating sum with w defined by w^(omega) = exp(-|omega|^{2 lambda}/(2 lambda)).
KernelK build_supersmooth_kernel(int m, int lambda);

//! Zero-point kernel K_s built from psi_s.
KernelK build_zero_kernel(int m, double s);

//! Zero-point kernel built from w(x) = e^{-x}.
KernelK build_exponential_zero_kernel(int m);

//! Builds the kernel described by a family value.
KernelK build_kernel(const KernelFamily& family);

//! The base function w of a super-smooth kernel, read from its inversion
//! table. Throws GridResolution for |x| beyond the table.
double supersmooth_base(const KernelK& kernel, double x);

//! psi_s itself.
double zero_base_psi(double s, double x);

//! int K(t) weight(t) dt over the kernel support.
double integrate_against(const KernelK& kernel,
                         const std::function<double(double)>& weight,
                         const QuadSpec& quad = {});

//! k-th moment int t^k K(t) dt.
double kernel_moments(const KernelK& kernel, int k);

//! Binomial coefficient C(n, k) as a double.
double binomial(int n, int k);

} // namespace mdeconv
