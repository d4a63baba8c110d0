#pragma once

#include "mdeconv/estimators.hpp"
#include "mdeconv/kernels.hpp"
#include "mdeconv/mellin.hpp"
#include "mdeconv/rng.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace mdeconv {

//! Density of the unobserved X with a matching sampler.
class TargetDensity
{
public:
  //! lambda e^{-lambda x}
  struct Exponential { double rate; };
  //! 1 / (pi x (1 + ln^2(x / x0)))
  struct LogCauchy { double x0; };
  struct Custom
  {
    std::string name;
    DensityFn density;
    std::function<double(CounterRng&)> sampler;
  };
  using Kind = std::variant<Exponential, LogCauchy, Custom>;

  static TargetDensity exponential(double rate);
  static TargetDensity log_cauchy(double x0);
  static TargetDensity custom(Custom spec);

  const Kind& kind() const noexcept { return kind_; }
  double density(double x) const;
  //! Density of ln X at u; exact where exp(u) would overflow for log-Cauchy.
  double log_density(double u) const;
  double sample(CounterRng& rng) const;
  //! Closed-form CDF where available.
  std::optional<double> cdf(double x) const;
  std::string name() const;

private:
  explicit TargetDensity(Kind kind)
    : kind_(std::move(kind))
  {}

  Kind kind_;
};

struct TargetSelfTest
{
  double integral;     // int f by quadrature
  double ks_statistic; // sup |F_n - F|
  double ks_limit;     // 1.95 / sqrt(n)
  bool passed;
};

//! Quadrature of the density over (0, inf) and a Kolmogorov-Smirnov check of
//! the sampler against the CDF (numeric CDF for custom targets).
TargetSelfTest target_self_test(const TargetDensity& target, std::uint64_t seed,
                                std::size_t n = 100000);

//! Named random streams; each (seed, stream, run) tuple is independent.
enum class Stream : std::uint64_t
{
  oracle = 1,
  evaluation = 2,
  user = 3
};

//! Y_i = X_i eta_i; draw i uses its own counter stream keyed by
//! (seed, stream, run, component, i), so the samples of one run are nested
//! across n (common random numbers).
std::vector<double> generate_sample(const TargetDensity& target,
                                    const ErrorModel& model, std::size_t n,
                                    std::uint64_t seed, std::uint64_t run = 0,
                                    Stream stream = Stream::user);

struct SimulationSpec
{
  TargetDensity target = TargetDensity::exponential(1.0);
  ErrorModel model = ErrorModel::uniform(1.0);
  std::vector<std::size_t> n_grid;
  //! Estimation points; empty means the estimator at zero.
  std::vector<double> points;
  std::size_t runs = 200;
  std::size_t oracle_runs = 300;
  std::vector<double> h_grid;
  std::uint64_t seed = 1;
  //! Empty: Gaussian jackknife at points, exponential base at zero, both of
  //! order `kernel_order`.
  std::optional<KernelFamily> kernel;
  int kernel_order = 1;
  //! Empty: 0 at points; (1 - p)/2 from the model's zero behaviour at zero.
  std::optional<double> s;
  //! 0 means MDECONV_THREADS or the hardware concurrency.
  unsigned threads = 0;

  bool at_zero() const noexcept { return points.empty(); }
  //! Throws InvalidArgument.
  void validate() const;
  KernelK build_kernel_for_spec() const;
  double resolved_s() const;
};

//! n log-spaced values on [lo, hi].
std::vector<double> log_spaced(double lo, double hi, std::size_t count);

struct OracleResult
{
  double h_star;
  std::vector<double> h_grid;
  std::vector<double> mse;
};

//! Grid argmin of the empirical MSE over spec.oracle_runs samples of size n
//! drawn from the oracle stream; ties go to the smaller h.
OracleResult oracle_bandwidth(const SimulationSpec& spec, std::size_t n,
                              std::optional<double> point);

struct RiskRow
{
  std::size_t n;
  double x0; // 0 for the estimator at zero
  double h_star;
  double q05, q25, median, q75, q95;
  double mse;
  std::size_t runs;
  std::uint64_t seed;
};

struct RiskReport
{
  std::vector<RiskRow> rows;
  std::vector<OracleResult> oracles; // parallel to rows
  //! Absolute errors per row, in run order.
  std::vector<std::vector<double>> errors;
};

RiskReport monte_carlo_risk(const SimulationSpec& spec);

//! Type-7 (linear interpolation) sample quantile; `sorted` must be sorted.
double quantile_sorted(std::span<const double> sorted, double p);

enum class RateAxis
{
  log_n,           // log(median) against log n
  log_ln_n_over_n  // log(median) against log(ln n / n)
};

struct RateFit
{
  double slope;
  double intercept;
  double residual; // RMS residual
};

//! Least squares of log(median) on the chosen axis. Throws DegenerateDesign
//! with fewer than 3 distinct n.
RateFit rate_regression(std::span<const std::size_t> n,
                        std::span<const double> median, RateAxis axis);

//! Worker count: the explicit value, else MDECONV_THREADS, else hardware.
unsigned resolve_threads(unsigned requested);

//! Runs fn(i) for i in [0, count) on `threads` workers. The first failure by
//! index is rethrown after all workers stop.
void parallel_for(std::size_t count, unsigned threads,
                  const std::function<void(std::size_t)>& fn);

} // namespace mdeconv
