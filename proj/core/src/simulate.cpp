#include "mdeconv/simulate.hpp"
#include "mdeconv/errors.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <numbers>
#include <sstream>
#include <thread>

namespace mdeconv {

namespace {

constexpr double kPi = std::numbers::pi;

std::string
fmt(double v)
{
  std::ostringstream os;
  os.precision(12);
  os << v;
  return os.str();
}

enum Component : std::uint64_t
{
  signal = 0,
  noise = 1,
};

} // namespace

TargetDensity
TargetDensity::exponential(double rate)
{
  if (!(rate > 0.0) || !std::isfinite(rate))
    throw InvalidArgument("exponential target needs a positive rate");
  return TargetDensity(Exponential{ rate });
}

TargetDensity
TargetDensity::log_cauchy(double x0)
{
  if (!(x0 > 0.0) || !std::isfinite(x0))
    throw InvalidArgument("log-Cauchy target needs x0 > 0");
  return TargetDensity(LogCauchy{ x0 });
}

TargetDensity
TargetDensity::custom(Custom spec)
{
  if (!spec.density || !spec.sampler)
    throw InvalidArgument("custom target needs a density and a sampler");
  return TargetDensity(std::move(spec));
}

double
TargetDensity::density(double x) const
{
  struct Visitor
  {
    double x;
    double operator()(const Exponential& e) const
    {
      return x < 0.0 ? 0.0 : e.rate * std::exp(-e.rate * x);
    }
    double operator()(const LogCauchy& c) const
    {
      if (x <= 0.0)
        return 0.0;
      const double l = std::log(x / c.x0);
      return 1.0 / (kPi * x * (1.0 + l * l));
    }
    double operator()(const Custom& c) const { return c.density(x); }
  };
  return std::visit(Visitor{ x }, kind_);
}

double
TargetDensity::log_density(double u) const
{
  if (const auto* c = std::get_if<LogCauchy>(&kind_)) {
    const double l = u - std::log(c->x0);
    return 1.0 / (kPi * (1.0 + l * l));
  }
  const double x = std::exp(u);
  return (x == 0.0 || !std::isfinite(x)) ? 0.0 : density(x) * x;
}

double
TargetDensity::sample(CounterRng& rng) const
{
  struct Visitor
  {
    CounterRng& rng;
    double operator()(const Exponential& e) const
    {
      return -std::log(rng.uniform()) / e.rate;
    }
    double operator()(const LogCauchy& c) const
    {
      return c.x0 * std::exp(std::tan(kPi * (rng.uniform() - 0.5)));
    }
    double operator()(const Custom& c) const { return c.sampler(rng); }
  };
  return std::visit(Visitor{ rng }, kind_);
}

std::optional<double>
TargetDensity::cdf(double x) const
{
  if (const auto* e = std::get_if<Exponential>(&kind_))
    return x <= 0.0 ? 0.0 : -std::expm1(-e->rate * x);
  if (const auto* c = std::get_if<LogCauchy>(&kind_))
    return x <= 0.0 ? 0.0 : 0.5 + std::atan(std::log(x / c->x0)) / kPi;
  return std::nullopt;
}

std::string
TargetDensity::name() const
{
  struct Visitor
  {
    std::string operator()(const Exponential& e) const
    {
      return "exponential(" + fmt(e.rate) + ")";
    }
    std::string operator()(const LogCauchy& c) const
    {
      return "logcauchy(" + fmt(c.x0) + ")";
    }
    std::string operator()(const Custom& c) const { return c.name; }
  };
  return std::visit(Visitor{}, kind_);
}

TargetSelfTest
target_self_test(const TargetDensity& target, std::uint64_t seed, std::size_t n)
{
  if (n < 2)
    throw InvalidArgument("self-test needs n >= 2");
  // Log-domain quadrature handles both light and log-heavy tails.
  auto log_integrand = [&](double u) { return target.log_density(u); };
  QuadSpec quad;
  quad.rel_tol = 1e-11;
  const double integral = integrate(log_integrand, -kInf, kInf, quad);

  std::vector<double> xs(n);
  for (std::size_t i = 0; i < n; ++i) {
    CounterRng rng(stream_key({ seed, 0x5e1f7e57ULL, i }));
    xs[i] = target.sample(rng);
  }
  std::sort(xs.begin(), xs.end());

  std::vector<double> F(n);
  if (target.cdf(1.0)) {
    for (std::size_t i = 0; i < n; ++i)
      F[i] = *target.cdf(xs[i]);
  } else {
    double acc = 0.0;
    double prev = -kInf;
    for (std::size_t i = 0; i < n; ++i) {
      const double u = xs[i] > 0.0 ? std::log(xs[i]) : -kInf;
      if (u > prev)
        acc += integrate(log_integrand, prev, u, quad);
      prev = std::max(prev, u);
      F[i] = acc;
    }
  }
  double d = 0.0;
  const double nn = static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    d = std::max(d, (static_cast<double>(i) + 1.0) / nn - F[i]);
    d = std::max(d, F[i] - static_cast<double>(i) / nn);
  }
  const double limit = 1.95 / std::sqrt(nn);
  return { integral, d, limit, std::abs(integral - 1.0) < 1e-8 && d < limit };
}

std::vector<double>
generate_sample(const TargetDensity& target, const ErrorModel& model,
                std::size_t n, std::uint64_t seed, std::uint64_t run,
                Stream stream)
{
  if (n < 1)
    throw InvalidArgument("sample size must be at least 1");
  std::vector<double> y(n);
  const auto s = static_cast<std::uint64_t>(stream);
  for (std::size_t i = 0; i < n; ++i) {
    CounterRng xr(stream_key({ seed, s, run, Component::signal, i }));
    CounterRng er(stream_key({ seed, s, run, Component::noise, i }));
    y[i] = target.sample(xr) * model.sample(er);
  }
  return y;
}

void
SimulationSpec::validate() const
{
  if (runs < 1)
    throw InvalidArgument("runs must be at least 1");
  if (oracle_runs < 30)
    throw InvalidArgument("oracle runs must be at least 30, got " +
                          std::to_string(oracle_runs));
  if (n_grid.empty())
    throw InvalidArgument("the n grid is empty");
  for (auto n : n_grid) {
    if (n < 1)
      throw InvalidArgument("sample sizes must be at least 1");
  }
  if (h_grid.empty())
    throw InvalidArgument("the h grid is empty");
  for (std::size_t i = 0; i < h_grid.size(); ++i) {
    if (!(h_grid[i] > 0.0) || !std::isfinite(h_grid[i]))
      throw InvalidArgument("h grid values must be positive, got " + fmt(h_grid[i]));
    if (i > 0 && !(h_grid[i] > h_grid[i - 1]))
      throw InvalidArgument("the h grid must be strictly increasing");
  }
  for (double x : points) {
    if (!(x > 0.0) || !std::isfinite(x))
      throw InvalidArgument("estimation points must be positive, got " + fmt(x));
  }
  if (kernel_order < 1)
    throw InvalidArgument("kernel order must be at least 1");
}

KernelK
SimulationSpec::build_kernel_for_spec() const
{
  if (kernel)
    return build_kernel(*kernel);
  return at_zero() ? build_exponential_zero_kernel(kernel_order)
                   : build_gaussian_jackknife_kernel(kernel_order);
}

double
SimulationSpec::resolved_s() const
{
  if (s)
    return *s;
  if (!at_zero())
    return 0.0;
  if (const auto& z = model.zero_behavior())
    return 0.5 * (1.0 - z->p);
  if (const auto nu = model.power_shape())
    return 0.5 * *nu;
  return 0.5;
}

std::vector<double>
log_spaced(double lo, double hi, std::size_t count)
{
  if (!(lo > 0.0) || !(hi >= lo) || count < 1)
    throw InvalidArgument("log_spaced needs 0 < lo <= hi and count >= 1");
  std::vector<double> out(count);
  if (count == 1) {
    out[0] = lo;
    return out;
  }
  const double a = std::log(lo);
  const double b = std::log(hi);
  for (std::size_t i = 0; i < count; ++i)
    out[i] = std::exp(a + (b - a) * static_cast<double>(i) /
                            static_cast<double>(count - 1));
  out.front() = lo;
  out.back() = hi;
  return out;
}

unsigned
resolve_threads(unsigned requested)
{
  if (requested > 0)
    return requested;
  if (const char* env = std::getenv("MDECONV_THREADS")) {
    char* end = nullptr;
    const unsigned long v = std::strtoul(env, &end, 10);
    if (end != env && *end == '\0' && v > 0)
      return static_cast<unsigned>(std::min<unsigned long>(v, 1024));
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

void
parallel_for(std::size_t count, unsigned threads,
             const std::function<void(std::size_t)>& fn)
{
  const unsigned workers =
    static_cast<unsigned>(std::min<std::size_t>(std::max(1u, threads), count));
  std::atomic<std::size_t> next{ 0 };
  std::atomic<bool> failed{ false };
  std::mutex error_mutex;
  std::size_t error_index = count;
  std::exception_ptr error;

  auto work = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= count || failed.load())
        return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (i < error_index) {
          error_index = i;
          error = std::current_exception();
        }
        failed.store(true);
      }
    }
  };
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w)
      pool.emplace_back(work);
    for (auto& t : pool)
      t.join();
  }
  if (error)
    std::rethrow_exception(error);
}

namespace {

struct Prepared
{
  std::vector<LKernel> lkernels; // parallel to h_grid
  double s;
};

Prepared
prepare(const SimulationSpec& spec)
{
  spec.validate();
  const KernelK kernel = spec.build_kernel_for_spec();
  Prepared p{ {}, spec.resolved_s() };
  p.lkernels.reserve(spec.h_grid.size());
  for (double h : spec.h_grid)
    p.lkernels.push_back(make_lkernel(spec.model, kernel, p.s, h, spec.at_zero()));
  return p;
}

EstimatorConfig
config_for(const Prepared& p, std::size_t hi, std::optional<double> point)
{
  const LKernel& lk = p.lkernels[hi];
  EstimationTarget target =
    point ? EstimationTarget{ AtPoint{ *point } } : EstimationTarget{ AtZero{} };
  return EstimatorConfig{ target, p.s, lk.h(), lk, ManualChoice{} };
}

OracleResult
oracle_with(const SimulationSpec& spec, const Prepared& p, std::size_t n,
            std::optional<double> point, unsigned threads)
{
  const double truth = spec.target.density(point.value_or(0.0));
  const std::size_t H = spec.h_grid.size();
  std::vector<std::vector<double>> sq(spec.oracle_runs, std::vector<double>(H));
  std::vector<EstimatorConfig> configs;
  for (std::size_t k = 0; k < H; ++k)
    configs.push_back(config_for(p, k, point));
  parallel_for(spec.oracle_runs, threads, [&](std::size_t r) {
    const auto y = generate_sample(spec.target, spec.model, n, spec.seed, r,
                                   Stream::oracle);
    for (std::size_t k = 0; k < H; ++k) {
      const double e = estimate(y, configs[k]) - truth;
      sq[r][k] = e * e;
    }
  });
  OracleResult out{ 0.0, spec.h_grid, std::vector<double>(H, 0.0) };
  for (std::size_t k = 0; k < H; ++k) {
    std::vector<double> col(spec.oracle_runs);
    for (std::size_t r = 0; r < spec.oracle_runs; ++r)
      col[r] = sq[r][k];
    out.mse[k] = pairwise_sum(col) / static_cast<double>(spec.oracle_runs);
  }
  std::size_t best = 0;
  for (std::size_t k = 1; k < H; ++k) {
    // Strict comparison keeps the smaller h on ties.
    if (out.mse[k] < out.mse[best])
      best = k;
  }
  out.h_star = spec.h_grid[best];
  return out;
}

} // namespace

OracleResult
oracle_bandwidth(const SimulationSpec& spec, std::size_t n,
                 std::optional<double> point)
{
  const Prepared p = prepare(spec);
  return oracle_with(spec, p, n, point, resolve_threads(spec.threads));
}

double
quantile_sorted(std::span<const double> sorted, double p)
{
  if (sorted.empty())
    throw EmptySample("quantile of an empty set");
  if (!(p >= 0.0 && p <= 1.0))
    throw InvalidArgument("quantile level must lie in [0, 1]");
  const double pos = p * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

RiskReport
monte_carlo_risk(const SimulationSpec& spec)
{
  const Prepared p = prepare(spec);
  const unsigned threads = resolve_threads(spec.threads);
  std::vector<std::optional<double>> targets;
  if (spec.at_zero())
    targets.emplace_back(std::nullopt);
  for (double x : spec.points)
    targets.emplace_back(x);

  RiskReport report;
  for (std::size_t n : spec.n_grid) {
    for (const auto& point : targets) {
      OracleResult oracle = oracle_with(spec, p, n, point, threads);
      const auto hi = static_cast<std::size_t>(
        std::find(spec.h_grid.begin(), spec.h_grid.end(), oracle.h_star) -
        spec.h_grid.begin());
      const EstimatorConfig config = config_for(p, hi, point);
      const double truth = spec.target.density(point.value_or(0.0));

      std::vector<double> err(spec.runs);
      parallel_for(spec.runs, threads, [&](std::size_t r) {
        const auto y = generate_sample(spec.target, spec.model, n, spec.seed, r,
                                       Stream::evaluation);
        err[r] = std::abs(estimate(y, config) - truth);
      });
      std::vector<double> sq(err.size());
      for (std::size_t r = 0; r < err.size(); ++r)
        sq[r] = err[r] * err[r];
      std::vector<double> sorted = err;
      std::sort(sorted.begin(), sorted.end());

      RiskRow row{};
      row.n = n;
      row.x0 = point.value_or(0.0);
      row.h_star = oracle.h_star;
      row.q05 = quantile_sorted(sorted, 0.05);
      row.q25 = quantile_sorted(sorted, 0.25);
      row.median = quantile_sorted(sorted, 0.5);
      row.q75 = quantile_sorted(sorted, 0.75);
      row.q95 = quantile_sorted(sorted, 0.95);
      row.mse = pairwise_sum(sq) / static_cast<double>(spec.runs);
      row.runs = spec.runs;
      row.seed = spec.seed;
      report.rows.push_back(row);
      report.oracles.push_back(std::move(oracle));
      report.errors.push_back(std::move(err));
    }
  }
  return report;
}

RateFit
rate_regression(std::span<const std::size_t> n, std::span<const double> median,
                RateAxis axis)
{
  if (n.size() != median.size())
    throw InvalidArgument("rate regression needs one median per n");
  std::vector<std::size_t> distinct(n.begin(), n.end());
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  if (distinct.size() < 3) {
    throw DegenerateDesign("rate regression needs at least 3 distinct n, got " +
                           std::to_string(distinct.size()));
  }
  const std::size_t k = n.size();
  std::vector<double> xs(k);
  std::vector<double> ys(k);
  for (std::size_t i = 0; i < k; ++i) {
    const double nn = static_cast<double>(n[i]);
    if (nn < 2.0 || !(median[i] > 0.0))
      throw DomainError("rate regression needs n >= 2 and positive medians");
    xs[i] = axis == RateAxis::log_n ? std::log(nn) : std::log(std::log(nn) / nn);
    ys[i] = std::log(median[i]);
  }
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= static_cast<double>(k);
  my /= static_cast<double>(k);
  double sxx = 0.0;
  double sxy = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
  }
  if (!(sxx > 0.0))
    throw DegenerateDesign("regression abscissae do not vary");
  const double slope = sxy / sxx;
  const double intercept = my - slope * mx;
  double rss = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    const double r = ys[i] - (intercept + slope * xs[i]);
    rss += r * r;
  }
  return { slope, intercept, std::sqrt(rss / static_cast<double>(k)) };
}

} // namespace mdeconv
