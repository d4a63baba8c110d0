#include <mdeconv/errors.hpp>
#include <mdeconv/estimators.hpp>
#include <mdeconv/simulate.hpp>

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

using namespace mdeconv;

namespace {

constexpr double kPi = std::numbers::pi;

EstimatorConfig
point_config(double x0, const LKernel& l)
{
  return { AtPoint{ x0 }, l.s(), l.h(), l };
}

EstimatorConfig
zero_config(const LKernel& l)
{
  return { AtZero{}, l.s(), l.h(), l };
}

struct MeanAndError
{
  double mean;
  double stderr_;
};

template<class F>
MeanAndError
sample_stats(const std::vector<double>& ys, F f)
{
  double sum = 0.0, sq = 0.0;
  for (double y : ys) {
    const double v = f(y);
    sum += v;
    sq += v * v;
  }
  const double n = static_cast<double>(ys.size());
  const double mean = sum / n;
  return { mean, std::sqrt((sq / n - mean * mean) / n) };
}

} // namespace

TEST(Bandwidth, SmoothValue)
{
  EXPECT_NEAR(bandwidth_smooth(1, 1, 1, 1, 1000), std::pow(4000.0, -0.2), 1e-15);
  EXPECT_NEAR(bandwidth_smooth(1, 1, 1, 1, 1000), 0.19036539387158783, 1e-10);
}

TEST(Bandwidth, SmoothHomogeneityAndMonotonicity)
{
  std::mt19937_64 gen(5);
  std::uniform_real_distribution<double> u(0.2, 3.0);
  for (int i = 0; i < 200; ++i) {
    const double A = u(gen), beta = u(gen), gamma = u(gen), x0 = u(gen);
    const double n = 10.0 + 1000.0 * u(gen);
    const double h = bandwidth_smooth(A, beta, gamma, x0, n);
    EXPECT_LT(bandwidth_smooth(A, beta, gamma, x0, 2.0 * n), h);
    EXPECT_NEAR(bandwidth_smooth(2.0 * A, beta, gamma, x0, n) / h,
                std::pow(2.0, -2.0 / (2.0 * beta + 2.0 * gamma + 1.0)), 1e-12);
  }
}

TEST(Bandwidth, SmoothSideConditionWarns)
{
  Warnings w;
  bandwidth_smooth(1, 1, 1, 1, 1000, std::exp(1.0), &w);
  EXPECT_TRUE(w.empty());
  bandwidth_smooth(1, 1, 1, 1, 1000, 1.1, &w);
  ASSERT_EQ(w.size(), 1u);
  EXPECT_NE(w[0].find("BandwidthTooLarge"), std::string::npos);
}

TEST(Bandwidth, MomentRule)
{
  EXPECT_EQ(s_star_moment(1.0, kInf, 0.01), -1.0);
  EXPECT_NEAR(s_star_moment(0.2, 2.0, 0.1), -0.2, 1e-15);
  EXPECT_NEAR(s_star_moment(1.0, 1.0, 0.25), 0.25, 1e-15);
  const MomentRule rule{ 1.0, 1.0, 1.0, 1.0, 1.0, kInf, 0.01 };
  // s* = -1 at x0 = 2: [A^2 x0^4 (x0 + 1)^2 n]^{-1/5}.
  EXPECT_NEAR(bandwidth_moment(rule, 2.0, 100.0), std::pow(16.0 * 9.0 * 100.0, -0.2), 1e-14);
}

TEST(Bandwidth, SuperSmooth)
{
  const double h = bandwidth_supersmooth(1, 1, kPi / 2, 2, 1, 1e4);
  EXPECT_NEAR(h, (kPi / 2) * std::pow(std::log(1e4), -0.75), 1e-15);
  EXPECT_NEAR(h, 0.29710715931302356, 1e-10);
  EXPECT_LT(bandwidth_supersmooth(1, 1, kPi / 2, 2, 1, 1e6), h);
  EXPECT_THROW(bandwidth_supersmooth(1, 1, 1, 2, 1, 2.0), DomainError);
}

TEST(Bandwidth, ZeroRule)
{
  const auto a = bandwidth_zero(1, 1, 1, 0.0, 0.0, 1000);
  EXPECT_EQ(a.s, 0.5);
  EXPECT_EQ(a.kappa, 1);
  EXPECT_NEAR(a.h, std::pow(std::log(1000.0) / 1000.0, 1.0 / 3.0), 1e-15);
  EXPECT_NEAR(a.h, 0.19044912476405547, 1e-10);
  const auto b = bandwidth_zero(1, 1, 1, 0.5, 0.0, 1000);
  EXPECT_EQ(b.s, 0.25);
  EXPECT_EQ(b.kappa, 0);
  EXPECT_THROW(bandwidth_zero(1, 1, 1, 1.0, 0.0, 1000), InvalidArgument);
}

TEST(Estimator, SinglePointValues)
{
  const auto l = lkernel_closed_beta(1.0, 1, 0.5);
  const std::vector<double> one{ 1.0 };
  EXPECT_NEAR(estimate_at_point(one, point_config(1.0, l)), 3.0 / std::sqrt(2.0 * kPi), 1e-15);
  const std::vector<double> dup(17, 1.0);
  EXPECT_NEAR(estimate_at_point(dup, point_config(1.0, l)),
              estimate_at_point(one, point_config(1.0, l)), 1e-15);

  const auto z = lkernel_closed_beta_zero(1.0, 1, 1.0, 0.5);
  const std::vector<double> zero{ 0.0 };
  EXPECT_NEAR(estimate_at_zero(zero, zero_config(z)), 1.5, 1e-15);
}

TEST(Estimator, EmptyAndMismatched)
{
  const auto l = lkernel_closed_beta(1.0, 1, 0.5);
  EXPECT_THROW(estimate_at_point({}, point_config(1.0, l)), EmptySample);
  const auto z = lkernel_closed_beta_zero(1.0, 1, 1.0, 0.5);
  EXPECT_THROW(estimate_at_zero({}, zero_config(z)), EmptySample);
  const std::vector<double> ys{ 1.0 };
  EXPECT_THROW(estimate_at_point(ys, EstimatorConfig{ AtPoint{ 1.0 }, 0.0, 0.4, l }),
               InvalidArgument);
  EXPECT_THROW(estimate_at_point(ys, EstimatorConfig{ AtZero{}, 0.0, 0.5, l }),
               InvalidArgument);
  EXPECT_THROW(estimate_at_point(ys, point_config(-1.0, l)), InvalidArgument);
}

TEST(Estimator, NegativeObservationsWarn)
{
  const auto l = lkernel_closed_beta(1.0, 1, 0.5);
  const std::vector<double> ys{ 1.0, -2.0, 0.7 };
  Warnings w;
  const double v = estimate_at_point(ys, point_config(1.0, l), &w);
  ASSERT_EQ(w.size(), 1u);
  EXPECT_NEAR(v, (l.evaluate(1.0, 1.0) + l.evaluate(1.0, 0.7)) / 3.0, 1e-15);
}

TEST(Estimator, PermutationAndConcatenation)
{
  const auto l = lkernel_closed_beta(1.0, 2, 0.3);
  const auto cfg = point_config(1.2, l);
  auto a = generate_sample(TargetDensity::exponential(1.0), ErrorModel::uniform(1.0), 700, 3);
  auto b = generate_sample(TargetDensity::exponential(1.0), ErrorModel::uniform(1.0), 300, 4);
  const double fa = estimate_at_point(a, cfg);
  const double fb = estimate_at_point(b, cfg);
  auto shuffled = a;
  std::mt19937_64 gen(1);
  std::shuffle(shuffled.begin(), shuffled.end(), gen);
  EXPECT_NEAR(estimate_at_point(shuffled, cfg), fa, 1e-13);
  auto both = a;
  both.insert(both.end(), b.begin(), b.end());
  EXPECT_NEAR(estimate_at_point(both, cfg), 0.7 * fa + 0.3 * fb, 1e-13);
}

TEST(Estimator, PairwiseSumIsLengthDeterministic)
{
  std::vector<double> v(1000);
  for (std::size_t i = 0; i < v.size(); ++i)
    v[i] = 1.0 / (1.0 + static_cast<double>(i));
  EXPECT_EQ(pairwise_sum(v), pairwise_sum(v));
  EXPECT_NEAR(pairwise_sum(v), 7.485470860550345, 1e-12);
}

TEST(Estimator, LawOfLargeNumbersAtPoint)
{
  const auto l = lkernel_closed_beta(1.0, 1, 0.3);
  const auto cfg = point_config(1.0, l);
  const auto ys =
    generate_sample(TargetDensity::exponential(1.0), ErrorModel::uniform(1.0), 1000000, 9);
  const auto st = sample_stats(ys, [&](double y) { return l.evaluate(1.0, y); });
  const double mean = expected_estimate(cfg, [](double t) { return t < 0 ? 0.0 : std::exp(-t); });
  EXPECT_NEAR(estimate_at_point(ys, cfg), st.mean, 1e-12);
  EXPECT_LT(std::abs(st.mean - mean), 3.0 * st.stderr_);
}

TEST(Estimator, LawOfLargeNumbersAtZero)
{
  const double h = 0.15;
  const auto l = lkernel_closed_beta_zero(1.0, 1, h, 0.5);
  const auto cfg = zero_config(l);
  const auto ys =
    generate_sample(TargetDensity::exponential(2.0), ErrorModel::power(1.0), 1000000, 10);
  const auto st = sample_stats(ys, [&](double y) { return l.evaluate0(y); });
  const double mean =
    expected_estimate(cfg, [](double t) { return t < 0 ? 0.0 : 2.0 * std::exp(-2.0 * t); });
  EXPECT_LT(std::abs(st.mean - mean), 3.0 * st.stderr_);
  // E L(Y) = int K_h f_X = sum_j c_j 2 / (1 + 2 j h) with c = (2, -1).
  EXPECT_NEAR(mean, 2.0 * 2.0 / (1.0 + 2.0 * h) - 2.0 / (1.0 + 4.0 * h), 1e-10);
}

TEST(ExpectedEstimate, ApproachesTruthAsHShrinks)
{
  const auto k = build_gaussian_jackknife_kernel(1);
  const auto f = [](double t) { return t < 0 ? 0.0 : std::exp(-t); };
  double previous = kInf;
  for (double h : { 0.4, 0.2, 0.1, 0.05 }) {
    const auto l = lkernel_closed_beta(1.0, 1, h);
    const double bias = std::abs(expected_estimate(point_config(1.0, l), f) - std::exp(-1.0));
    EXPECT_LT(bias, previous);
    // Symmetric order-1 kernel: the bias is O(h^2).
    EXPECT_LT(bias / (h * h), 0.5) << h;
    previous = bias;
  }
  (void)k;
}

TEST(ExpectedEstimate, ExactForLocalLogPolynomials)
{
  // e^u f(x0 e^u) is a quadratic in u, which an order-2 kernel reproduces.
  const auto f = [](double t) {
    const double u = std::log(t);
    return (1.0 + 0.3 * u + 0.1 * u * u) / t;
  };
  const auto k = build_flat_kernel(2, 3);
  const double x0 = 1.4;
  const auto l = lkernel_numeric(ErrorModel::uniform(1.0), k, 0.0, 0.3);
  const double value = expected_estimate(point_config(x0, l), f);
  EXPECT_NEAR(value, f(x0), 1e-8);
}

TEST(ExpectedEstimate, ConstantDensity)
{
  const double h = 0.05;
  const auto l = lkernel_closed_beta(1.0, 2, h);
  const double c = 0.25;
  EXPECT_NEAR(expected_estimate(point_config(1.0, l), [&](double) { return c; }), c, 1e-5);
}

TEST(HolderClass, Validation)
{
  EXPECT_NO_THROW((HolderClassSpec{ 1.0, 1.0, 2.0 }.validate()));
  EXPECT_THROW((HolderClassSpec{ 1.0, 1.0, 1.0 }.validate()), InvalidArgument);
  EXPECT_THROW((HolderClassSpec{ 0.0, 1.0, 2.0 }.validate()), InvalidArgument);
}
