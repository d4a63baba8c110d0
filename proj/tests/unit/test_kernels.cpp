#include <mdeconv/errors.hpp>
#include <mdeconv/kernels.hpp>

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <thread>

using namespace mdeconv;

namespace {

constexpr double kPi = std::numbers::pi;

cplx
laplace_by_quadrature(const KernelK& k, cplx z)
{
  return { integrate_against(k, [&](double t) { return std::exp(-z * t).real(); }),
           integrate_against(k, [&](double t) { return std::exp(-z * t).imag(); }) };
}

cplx
mellin_by_quadrature(const KernelK& k, cplx z)
{
  return { integrate_against(k, [&](double x) { return std::pow(cplx(x), z - 1.0).real(); }),
           integrate_against(k, [&](double x) { return std::pow(cplx(x), z - 1.0).imag(); }) };
}

} // namespace

TEST(Kernels, MomentsAllFamilies)
{
  for (int m : { 1, 2, 3 }) {
    for (const auto& k :
         { build_flat_kernel(m, m + 2), build_gaussian_jackknife_kernel(m),
           build_supersmooth_kernel(m, 2), build_zero_kernel(m, 0.5),
           build_exponential_zero_kernel(m) }) {
      EXPECT_LT(std::abs(kernel_moments(k, 0) - 1.0), 1e-10) << k.name();
      for (int j = 1; j <= m; ++j)
        EXPECT_LT(std::abs(kernel_moments(k, j)), 1e-8) << k.name() << " k=" << j;
    }
  }
}

TEST(Kernels, FlatFourthMomentSurvives)
{
  const auto k = build_flat_kernel(3, 3);
  EXPECT_LT(std::abs(kernel_moments(k, 2)), 1e-10);
  EXPECT_GT(std::abs(kernel_moments(k, 4)), 1e-4);
}

TEST(Kernels, FlatVanishesOutsideAndIsFlatAtBoundary)
{
  const auto k = build_flat_kernel(2, 4);
  EXPECT_EQ(k(1.0), 0.0);
  EXPECT_EQ(k(-1.3), 0.0);
  EXPECT_EQ(k.support(), KernelSupport::unit_interval);
  // The bump is flat to all orders at 1: divided differences within 0.2% of
  // the edge are negligible.
  for (int order = 1; order <= 4; ++order) {
    const double d = 2e-3;
    const double t = 1.0 - order * d;
    double diff = 0.0;
    for (int i = 0; i <= order; ++i)
      diff += (i % 2 ? -1.0 : 1.0) * std::tgamma(order + 1.0) /
              (std::tgamma(i + 1.0) * std::tgamma(order - i + 1.0)) * k(t + (order - i) * d);
    EXPECT_LT(std::abs(diff / std::pow(d, order)), 1e-6) << order;
  }
}

TEST(Kernels, FlatTransformAtZeroIsOne)
{
  const auto k = build_flat_kernel(2, 2);
  EXPECT_NEAR(k.transform(0.0).real(), 1.0, 1e-12);
  const cplx z(0.4, 2.5);
  EXPECT_LT(std::abs(k.transform(z) - laplace_by_quadrature(k, z)), 1e-10);
}

TEST(Kernels, FlatRejectsIllConditionedOrders)
{
  EXPECT_THROW(build_flat_kernel(40, 2), Error);
}

TEST(Kernels, GaussianValues)
{
  EXPECT_NEAR(build_gaussian_jackknife_kernel(1)(0.0), 1.5 / std::sqrt(2.0 * kPi), 1e-15);
  EXPECT_NEAR(build_gaussian_jackknife_kernel(1)(0.0), 0.598413420602149, 1e-14);
  for (int m = 1; m <= 5; ++m)
    EXPECT_NEAR(build_gaussian_jackknife_kernel(m).transform(0.0).real(), 1.0, 1e-13);
}

TEST(Kernels, GaussianEvenMomentsFollowWeights)
{
  // int t^k K = sum_j c_j j^k E Z^k with c = (-1)^{j+1} C(m+1, j).
  EXPECT_NEAR(kernel_moments(build_gaussian_jackknife_kernel(1), 2), -2.0, 1e-10);
  const auto k2 = build_gaussian_jackknife_kernel(2);
  EXPECT_LT(std::abs(kernel_moments(k2, 2)), 1e-8);
  EXPECT_NEAR(kernel_moments(k2, 4), 3.0 * (3.0 - 48.0 + 81.0), 1e-8);
  EXPECT_LT(std::abs(kernel_moments(build_gaussian_jackknife_kernel(3), 3)), 1e-8);
}

TEST(Kernels, GaussianTransformIdentity)
{
  const auto k = build_gaussian_jackknife_kernel(2);
  for (int i = 0; i < 20; ++i) {
    const cplx z(-1.0 + 2.0 * (i % 5) / 4.0, -5.0 + 10.0 * (i / 5) / 3.0);
    cplx closed = 0.0;
    for (int j = 1; j <= 3; ++j)
      closed += binomial(3, j) * (j % 2 ? 1.0 : -1.0) * std::exp(double(j * j) * z * z / 2.0);
    EXPECT_LT(std::abs(k.transform(z) - closed), 1e-12 * (1.0 + std::abs(closed)));
    EXPECT_LT(std::abs(laplace_by_quadrature(k, z) - closed), 1e-8 * (1.0 + std::abs(closed)))
      << z;
  }
}

TEST(Kernels, SuperSmoothBase)
{
  const auto k = build_supersmooth_kernel(1, 2);
  double mass = 0.0;
  const double dx = 0.01;
  for (int i = -3000; i <= 3000; ++i)
    mass += supersmooth_base(k, i * dx) * dx;
  EXPECT_NEAR(mass, 1.0, 1e-6);
  EXPECT_THROW(supersmooth_base(k, 31.0), GridResolution);
  EXPECT_NEAR(k.transform(0.0).real(), 1.0, 1e-14);
  for (double w = 0.25; w < 4.0; w += 0.25) {
    const double env = std::exp(-std::pow(w, 4) / 4.0);
    EXPECT_LE(std::abs(k.transform(cplx(0.0, w))), 2.0 * env + 1e-300) << w;
  }
}

TEST(Kernels, SuperSmoothTransformAgreesWithQuadrature)
{
  const auto k = build_supersmooth_kernel(2, 2);
  for (double w : { 0.0, 0.7, 1.5 }) {
    const cplx z(0.0, w);
    EXPECT_LT(std::abs(k.transform(z) - laplace_by_quadrature(k, z)), 1e-8) << w;
  }
}

TEST(Kernels, ZeroPointBase)
{
  const double s = 0.5;
  const auto mass = integrate_against(build_zero_kernel(0 + 1, s), [](double) { return 1.0; });
  EXPECT_NEAR(mass, 1.0, 1e-10);
  // psi itself: nonnegative with unit mass.
  QuadSpec quad;
  double psi_mass = 0.0;
  for (double lo = -20.0; lo < 20.0; lo += 1.0) {
    psi_mass += integrate([&](double u) {
      const double x = std::exp(u);
      return zero_base_psi(s, x) * x;
    }, lo, lo + 1.0, quad);
  }
  EXPECT_NEAR(psi_mass, 1.0, 1e-10);
  EXPECT_GE(zero_base_psi(s, 1e-3), 0.0);
}

TEST(Kernels, ZeroPointTransformIdentity)
{
  for (double s : { 0.25, 0.5 }) {
    const auto k = build_zero_kernel(2, s);
    for (double w = -10.0; w <= 10.0; w += 2.5) {
      const cplx z(s, w);
      EXPECT_LT(std::abs(k.transform(z) - mellin_by_quadrature(k, z)), 1e-8) << s << " " << w;
    }
  }
  // At z = s the transform is exp(-(1-s)^2/2) sum_j c_j j^{s-1}.
  const double s = 0.5;
  const auto k = build_zero_kernel(1, s);
  const double base = std::exp(-0.5 * (1.0 - s) * (1.0 - s));
  const double sum = 2.0 - std::pow(2.0, s - 1.0);
  EXPECT_NEAR(k.transform(s).real(), base * sum, 1e-14);
}

TEST(Kernels, ZeroPointFirstMomentVanishes)
{
  EXPECT_LT(std::abs(kernel_moments(build_zero_kernel(2, 0.5), 1)), 1e-8);
}

TEST(Kernels, ExponentialBaseTransform)
{
  const auto k = build_exponential_zero_kernel(2);
  EXPECT_NEAR(k(0.0), 3.0 - 3.0 / 2.0 + 1.0 / 3.0, 1e-14);
  const cplx z(2.0, 1.5);
  EXPECT_LT(std::abs(k.transform(z) - mellin_by_quadrature(k, z)), 1e-9);
}

TEST(Kernels, BuildKernelDispatch)
{
  EXPECT_EQ(build_kernel(GaussianJackknife{ 2 }).order(), 2);
  EXPECT_EQ(build_kernel(ExponentialBase{ 1 }).transform_kind(), TransformKind::mellin);
  EXPECT_EQ(build_kernel(FlatCompact{ 1, 3 }).support(), KernelSupport::unit_interval);
  EXPECT_THROW(build_gaussian_jackknife_kernel(0), InvalidArgument);
}

TEST(Kernels, ConcurrentTransformsAgree)
{
  const auto k = build_flat_kernel(2, 2);
  std::vector<cplx> zs;
  for (int i = 0; i < 64; ++i)
    zs.emplace_back(0.1 * (i % 7), 0.37 * i);
  std::vector<std::vector<cplx>> out(4, std::vector<cplx>(zs.size()));
  std::vector<std::thread> workers;
  for (std::size_t t = 0; t < 4; ++t) {
    // Each worker visits the points in a different order.
    workers.emplace_back([&, t] {
      for (std::size_t i = 0; i < zs.size(); ++i) {
        const std::size_t j = (i + 16 * t) % zs.size();
        out[t][j] = k.transform(zs[j]);
      }
    });
  }
  for (auto& w : workers)
    w.join();
  const auto fresh = build_flat_kernel(2, 2);
  for (std::size_t j = 0; j < zs.size(); ++j) {
    for (std::size_t t = 1; t < 4; ++t)
      EXPECT_EQ(out[t][j], out[0][j]);
    EXPECT_EQ(out[0][j], fresh.transform(zs[j]));
  }
}

TEST(Kernels, Binomial)
{
  EXPECT_EQ(binomial(5, 2), 10.0);
  EXPECT_EQ(binomial(4, 0), 1.0);
  EXPECT_EQ(binomial(4, 5), 0.0);
}
