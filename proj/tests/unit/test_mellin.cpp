#include <mdeconv/complex_gamma.hpp>
#include <mdeconv/errors.hpp>
#include <mdeconv/kernels.hpp>
#include <mdeconv/mellin.hpp>

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

using namespace mdeconv;

namespace {

constexpr double kPi = std::numbers::pi;

std::vector<ErrorModel>
catalog()
{
  return { ErrorModel::uniform(1.0),          ErrorModel::beta(1.0, 1.0),
           ErrorModel::pareto(3.0, 1.0),      ErrorModel::log_product_uniform(),
           ErrorModel::gamma(2.0, 1.0),       ErrorModel::half_normal(1.0) };
}

cplx
numeric_of(const ErrorModel& model, cplx z)
{
  QuadSpec quad;
  quad.breakpoints = model.breakpoints();
  return mellin_numeric([&](double x) { return model.density(x); }, z, quad);
}

} // namespace

TEST(ComplexGamma, ClassicalValues)
{
  EXPECT_NEAR(complex_gamma(5.0).real(), 24.0, 1e-12);
  EXPECT_NEAR(complex_gamma(0.5).real(), std::sqrt(kPi), 1e-13);
  const cplx g = complex_gamma(cplx(1.0, 1.0));
  EXPECT_NEAR(g.real(), 0.49801566811836, 1e-13);
  EXPECT_NEAR(g.imag(), -0.15494982830181, 1e-13);
  // Reflection branch.
  EXPECT_NEAR(complex_gamma(-0.5).real(), -2.0 * std::sqrt(kPi), 1e-12);
}

TEST(ComplexGamma, PolesThrow)
{
  for (double p : { 0.0, -1.0, -2.0, -7.0 })
    EXPECT_THROW(complex_gamma(p), PoleError);
}

TEST(ComplexGamma, RecurrenceOnProbeGrid)
{
  for (double re = -9.7; re < 29.0; re += 1.3) {
    for (double im = -50.0; im <= 50.0; im += 6.25) {
      const cplx z(re, im);
      const cplx lhs = complex_gamma(z + 1.0);
      const cplx rhs = z * complex_gamma(z);
      EXPECT_LT(std::abs(lhs - rhs), 1e-10 * std::abs(lhs)) << z;
    }
  }
}

TEST(ComplexGamma, CriticalLineModulus)
{
  // |Gamma(1/2 + iy)|^2 = pi / cosh(pi y).
  for (double y : { 0.3, 2.0, 7.5, 20.0 }) {
    const double m = std::norm(complex_gamma(cplx(0.5, y)));
    EXPECT_NEAR(m / (kPi / std::cosh(kPi * y)), 1.0, 1e-11);
  }
}

TEST(Mellin, ClosedFormValues)
{
  EXPECT_NEAR(std::abs(mellin_analytic(ErrorModel::uniform(1.0), 1.0) - 1.0), 0.0, 1e-15);
  EXPECT_NEAR(mellin_analytic(ErrorModel::uniform(1.0), 2.0).real(), 0.5, 1e-15);
  EXPECT_NEAR(mellin_analytic(ErrorModel::beta(1.0, 1.0), 3.0).real(), 0.5, 1e-15);
  const cplx lp = mellin_analytic(ErrorModel::log_product_uniform(), cplx(1.0, 2.0));
  EXPECT_NEAR(lp.real(), -3.0 / 25.0, 1e-15);
  EXPECT_NEAR(lp.imag(), -4.0 / 25.0, 1e-15);
}

TEST(Mellin, EqualsOneAtOne)
{
  for (const auto& m : catalog())
    EXPECT_NEAR(std::abs(mellin_analytic(m, 1.0) - 1.0), 0.0, 1e-14) << m.name();
}

TEST(Mellin, StripViolationReportsStrip)
{
  try {
    mellin_analytic(ErrorModel::pareto(3.0, 1.0), cplx(3.5, 0.0));
    FAIL() << "expected StripViolation";
  } catch (const StripViolation& e) {
    EXPECT_NE(std::string(e.what()).find("Re(z)"), std::string::npos);
  }
  EXPECT_THROW(mellin_analytic(ErrorModel::uniform(1.0), cplx(-0.5, 1.0)), StripViolation);
}

TEST(Mellin, NumericOracleMatchesAnalytic)
{
  for (const auto& m : catalog()) {
    for (int k = 0; k < 40; ++k) {
      const cplx z(1.0, -20.0 + 40.0 * k / 39.0);
      const cplx a = mellin_analytic(m, z);
      EXPECT_LT(std::abs(a - numeric_of(m, z)), 1e-8 * (1.0 + std::abs(a))) << m.name() << z;
    }
  }
}

TEST(Mellin, NumericExamples)
{
  const auto unif = [](double x) { return x > 0.0 && x < 1.0 ? 1.0 : 0.0; };
  const cplx z(1.0, 5.0);
  EXPECT_LT(std::abs(mellin_numeric(unif, z) - 1.0 / z), 1e-12);
  const auto ex = [](double x) { return std::exp(-x); };
  EXPECT_NEAR(mellin_numeric(ex, 1.0).real(), 1.0, 1e-12);
  EXPECT_NEAR(mellin_numeric(ex, 3.0).real(), complex_gamma(3.0).real(), 1e-12);
}

TEST(Mellin, SamplersStayInSupport)
{
  for (const auto& [model, lo, hi] :
       { std::tuple{ ErrorModel::beta(0.5, 2.0), 0.0, 2.0 },
         std::tuple{ ErrorModel::pareto(3.0, 1.5), 1.5, kInf },
         std::tuple{ ErrorModel::uniform(1.0), 0.0, 1.0 } }) {
    for (std::uint64_t i = 0; i < 2000; ++i) {
      CounterRng rng(stream_key({ 11, i }));
      const double x = model.sample(rng);
      EXPECT_GT(x, lo);
      EXPECT_LE(x, hi);
    }
  }
}

TEST(Parseval, ExampleFixtures)
{
  const auto ex = parseval_check([](double x) { return std::exp(-x); }, 0.5);
  EXPECT_NEAR(ex.lhs, 0.5, 1e-12);
  EXPECT_NEAR(ex.rhs / ex.lhs, 1.0, 1e-8);

  const auto psi = parseval_check([](double x) { return zero_base_psi(0.5, x); }, 0.5);
  EXPECT_NEAR(psi.rhs / psi.lhs, 1.0, 1e-8);

  QuadSpec quad;
  quad.breakpoints = { 1.0, 2.0 };
  const auto box =
    parseval_check([](double x) { return x >= 1.0 && x <= 2.0 ? 1.0 : 0.0; }, 1.0, quad,
                   [](cplx z) { return (std::pow(cplx(2.0), z) - 1.0) / z; });
  EXPECT_NEAR(box.lhs, 1.5, 1e-12);
  EXPECT_NEAR(box.rhs / box.lhs, 1.0, 1e-8);
}

TEST(Identifiability, Examples)
{
  std::vector<double> omegas;
  for (int k = -40; k <= 40; ++k)
    omegas.push_back(k * 0.25);
  const MellinFn inv = [](cplx z) { return 1.0 / z; };
  const auto one_sided = identifiability_check(inv, {}, 1.0, omegas);
  EXPECT_TRUE(one_sided.identifiable);
  EXPECT_NEAR(one_sided.margin, 1.0 / 101.0, 1e-14);

  const auto symmetric = identifiability_check(inv, inv, 1.0, omegas);
  EXPECT_FALSE(symmetric.identifiable);
  EXPECT_EQ(symmetric.margin, 0.0);

  const auto beta = ErrorModel::beta(1.0, 1.0);
  EXPECT_TRUE(identifiability_check([&](cplx z) { return mellin_analytic(beta, z); }, {}, 1.0,
                                    omegas)
                .identifiable);
}

TEST(DecayFit, DeclaredExponents)
{
  EXPECT_NEAR(fit_decay_exponent(ErrorModel::uniform(1.0), 1.0, 10.0, 1000.0).gamma, 1.0, 0.02);
  EXPECT_NEAR(fit_decay_exponent(ErrorModel::log_product_uniform(), 1.0, 10.0, 1000.0).gamma, 2.0,
              0.02);
  EXPECT_NEAR(fit_decay_exponent(ErrorModel::pareto(3.0, 1.0), 1.0, 10.0, 1000.0).gamma, 1.0,
              0.05);
}

TEST(DecayFit, MatchesRegularityMetadata)
{
  for (const auto& m : catalog()) {
    const auto* smooth = std::get_if<SmoothDecay>(&m.decay());
    if (!smooth)
      continue;
    EXPECT_NEAR(fit_decay_exponent(m, 1.0, 10.0, 1000.0).gamma, smooth->gamma, 0.05) << m.name();
  }
}

TEST(ErrorModels, PowerIsShiftedBeta)
{
  const auto p = ErrorModel::power(0.5);
  const auto b = ErrorModel::beta(-0.5, 1.0);
  for (double x : { 0.01, 0.3, 0.9 })
    EXPECT_DOUBLE_EQ(p.density(x), b.density(x));
  EXPECT_EQ(p.power_shape().value(), 0.5);
  EXPECT_EQ(ErrorModel::uniform(1.0).power_shape().value(), 1.0);
  EXPECT_FALSE(ErrorModel::gamma(2.0, 1.0).power_shape());
}

TEST(ErrorModels, InvalidParameters)
{
  EXPECT_THROW(ErrorModel::uniform(0.0), InvalidArgument);
  EXPECT_THROW(ErrorModel::pareto(1.0, 1.0), InvalidArgument);
  EXPECT_THROW(ErrorModel::beta(-1.0, 1.0), InvalidArgument);
}
