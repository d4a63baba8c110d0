#include "cli.hpp"

#include <mdeconv/errors.hpp>
#include <mdeconv/estimators.hpp>
#include <mdeconv/lkernel.hpp>
#include <mdeconv/report_io.hpp>

#include <CLI11.hpp>
#include <json.hpp>
#include <toml.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>

namespace mdeconv::cli {

namespace {

using json = nlohmann::ordered_json;

//! Raised for malformed command lines after CLI11 parsing; exit code 2.
struct UsageError : std::runtime_error
{
  using std::runtime_error::runtime_error;
};

std::string_view
trim(std::string_view s)
{
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos)
    return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::optional<double>
to_double(std::string_view s)
{
  s = trim(s);
  if (s.empty())
    return std::nullopt;
  if (s.front() == '+')
    s.remove_prefix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size())
    return std::nullopt;
  return v;
}

std::vector<std::string_view>
split(std::string_view s, char sep)
{
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.push_back(trim(s.substr(start, pos - start)));
    if (pos == std::string_view::npos)
      return out;
    start = pos + 1;
  }
}

//! "name:a,b" -> (name, [a, b]).
std::pair<std::string, std::vector<double>>
parse_call(std::string_view text, std::string_view what)
{
  const auto colon = text.find(':');
  std::string name(trim(text.substr(0, colon)));
  std::vector<double> args;
  if (colon != std::string_view::npos) {
    for (auto part : split(text.substr(colon + 1), ',')) {
      const auto v = to_double(part);
      if (!v)
        throw InvalidArgument("bad number '" + std::string(part) + "' in " +
                              std::string(what) + " '" + std::string(text) + "'");
      args.push_back(*v);
    }
  }
  return { name, args };
}

void
require_arity(const std::string& name, const std::vector<double>& args,
              std::size_t lo, std::size_t hi, std::string_view text)
{
  if (args.size() < lo || args.size() > hi)
    throw InvalidArgument("'" + std::string(text) + "': " + name + " takes " +
                          (lo == hi ? std::to_string(lo)
                                    : std::to_string(lo) + " to " + std::to_string(hi)) +
                          " parameter(s)");
}

int
as_order(double v, std::string_view text)
{
  if (v != std::floor(v) || v < 1 || v > 64)
    throw InvalidArgument("'" + std::string(text) + "': order must be a positive integer");
  return static_cast<int>(v);
}

//! key=value pairs after "name:".
std::pair<std::string, std::map<std::string, double>>
parse_rule_text(std::string_view text)
{
  const auto colon = text.find(':');
  std::string name(trim(text.substr(0, colon)));
  std::map<std::string, double> kv;
  if (colon != std::string_view::npos) {
    for (auto part : split(text.substr(colon + 1), ',')) {
      const auto eq = part.find('=');
      const auto v = eq == std::string_view::npos ? std::nullopt : to_double(part.substr(eq + 1));
      if (!v)
        throw InvalidArgument("rule entries must be key=value, got '" + std::string(part) + "'");
      kv[std::string(trim(part.substr(0, eq)))] = *v;
    }
  }
  return { name, kv };
}

struct RuleReader
{
  std::string name;
  std::map<std::string, double> kv;

  double get(const std::string& key, std::optional<double> fallback = {})
  {
    const auto it = kv.find(key);
    if (it != kv.end()) {
      const double v = it->second;
      kv.erase(it);
      return v;
    }
    if (fallback)
      return *fallback;
    throw InvalidArgument("rule " + name + " needs " + key + "=...");
  }

  void finish() const
  {
    if (!kv.empty())
      throw InvalidArgument("rule " + name + " has unknown key " + kv.begin()->first);
  }
};

std::optional<double>
model_gamma(const ErrorModel& model)
{
  if (const auto* d = std::get_if<SmoothDecay>(&model.decay()))
    return d->gamma;
  if (const auto* d = std::get_if<SuperSmoothDecay>(&model.decay()))
    return d->gamma;
  return std::nullopt;
}

double
default_zero_s(const ErrorModel& model)
{
  if (const auto& z = model.zero_behavior())
    return 0.5 * (1.0 - z->p);
  if (const auto nu = model.power_shape())
    return 0.5 * *nu;
  return 0.5;
}

double
round12(double v)
{
  return std::isfinite(v) ? std::stod(format_g12(v)) : v;
}

std::string
read_text(const std::filesystem::path& path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw UsageError("cannot open " + path.string());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void
require_input(const std::filesystem::path& path)
{
  std::error_code ec;
  if (!std::filesystem::is_regular_file(path, ec))
    throw UsageError("no such file: " + path.string());
}

void
require_output(const std::filesystem::path& path)
{
  const auto parent = path.has_parent_path() ? path.parent_path() : std::filesystem::path(".");
  std::error_code ec;
  if (!std::filesystem::is_directory(parent, ec))
    throw UsageError("output directory does not exist: " + parent.string());
}

std::string
csv_row(std::initializer_list<double> values)
{
  std::string row;
  for (double v : values) {
    if (!row.empty())
      row += ',';
    row += format_g12(v);
  }
  return row + '\n';
}

// ---- simulation spec ------------------------------------------------------

std::size_t
line_of(const toml::node& node)
{
  return node.source().begin.line;
}

struct TomlReader
{
  const toml::table& table;
  std::string section;
  std::set<std::string> seen;

  const toml::node* find(const std::string& key)
  {
    seen.insert(key);
    return table.get(key);
  }

  std::optional<double> number(const std::string& key)
  {
    const auto* node = find(key);
    if (!node)
      return std::nullopt;
    if (const auto v = node->value<double>())
      return *v;
    throw ParseError(line_of(*node), section + "." + key + " must be a number");
  }

  std::optional<std::int64_t> integer(const std::string& key)
  {
    const auto* node = find(key);
    if (!node)
      return std::nullopt;
    if (const auto* v = node->as_integer())
      return v->get();
    throw ParseError(line_of(*node), section + "." + key + " must be an integer");
  }

  std::optional<std::string> string(const std::string& key)
  {
    const auto* node = find(key);
    if (!node)
      return std::nullopt;
    if (const auto* v = node->as_string())
      return v->get();
    throw ParseError(line_of(*node), section + "." + key + " must be a string");
  }

  std::optional<bool> boolean(const std::string& key)
  {
    const auto* node = find(key);
    if (!node)
      return std::nullopt;
    if (const auto* v = node->as_boolean())
      return v->get();
    throw ParseError(line_of(*node), section + "." + key + " must be true or false");
  }

  std::optional<std::vector<double>> numbers(const std::string& key)
  {
    const auto* node = find(key);
    if (!node)
      return std::nullopt;
    const auto* arr = node->as_array();
    if (!arr)
      throw ParseError(line_of(*node), section + "." + key + " must be an array");
    std::vector<double> out;
    for (const auto& el : *arr) {
      const auto v = el.value<double>();
      if (!v)
        throw ParseError(line_of(el), section + "." + key + " holds a non-number");
      out.push_back(*v);
    }
    return out;
  }

  void finish() const
  {
    for (const auto& [k, v] : table) {
      if (!seen.count(std::string(k.str())))
        throw ParseError(line_of(v), "unknown key " + section + "." + std::string(k.str()));
    }
  }
};

template<class T>
T
wrap_line(std::size_t line, const std::function<T()>& fn)
{
  try {
    return fn();
  } catch (const ParseError&) {
    throw;
  } catch (const Error& e) {
    throw ParseError(line, e.what());
  }
}

// ---- subcommands ------------------------------------------------------------

struct EstimateArgs
{
  std::string input, model, kernel, rule;
  double point = 0.0;
  std::optional<double> h, s;
  bool numeric = false;
};

json
warnings_json(const Warnings& w)
{
  json arr = json::array();
  for (const auto& s : w)
    arr.push_back(s);
  return arr;
}

int
cmd_estimate(const EstimateArgs& a, bool at_zero, std::ostream& out)
{
  require_input(a.input);
  const auto model = parse_model(a.model);
  const auto family = parse_kernel(a.kernel);
  const auto sample = load_sample(a.input);
  const double n = static_cast<double>(sample.size());

  Warnings warnings;
  Provenance provenance = ManualChoice{};
  double s = a.s.value_or(at_zero ? default_zero_s(model) : 0.0);
  double h = a.h.value_or(0.0);

  if (!a.rule.empty()) {
    auto [name, kv] = parse_rule_text(a.rule);
    RuleReader r{ name, kv };
    const auto gamma_default = model_gamma(model);
    if (at_zero) {
      if (name != "zero")
        throw InvalidArgument("estimate-zero accepts rule zero:A=..,beta=..[,M=..]");
      const auto& zb = model.zero_behavior();
      double p = zb ? zb->p : 0.0;
      double q = zb ? zb->q : 0.0;
      ZeroRule rule{ r.get("A"), r.get("beta"), r.get("M", 1.0), r.get("p", p), r.get("q", q) };
      r.finish();
      const auto zbw = bandwidth_zero(rule.A, rule.beta, rule.M, rule.p, rule.q, n);
      if (!a.s)
        s = zbw.s;
      h = zbw.h;
      provenance = rule;
    } else if (name == "smooth") {
      SmoothRule rule{ r.get("A"), r.get("beta"), r.get("gamma", gamma_default) };
      const double ratio = r.get("r", std::exp(1.0));
      r.finish();
      h = bandwidth_smooth(rule.A, rule.beta, rule.gamma, a.point, n, ratio, &warnings);
      provenance = rule;
    } else if (name == "moment") {
      MomentRule rule{ r.get("A"),     r.get("beta"), r.get("gamma", gamma_default),
                       r.get("alpha"), r.get("M", 1.0), r.get("b"),
                       r.get("eps", 0.01) };
      rule.C5 = r.get("C5", 1.0);
      r.finish();
      h = bandwidth_moment(rule, a.point, n);
      if (!a.s)
        s = s_star_moment(rule.alpha, rule.b, rule.eps);
      provenance = rule;
    } else if (name == "supersmooth") {
      SuperSmoothRule rule{ r.get("A"), r.get("beta"), r.get("gamma", gamma_default),
                            r.get("lambda") };
      rule.C1 = r.get("C1", 1.0);
      r.finish();
      h = bandwidth_supersmooth(rule.A, rule.beta, rule.gamma, rule.lambda, a.point, n,
                                rule.C1);
      provenance = rule;
    } else {
      throw InvalidArgument("unknown rule '" + name + "' (smooth, moment, supersmooth)");
    }
  } else if (!a.h) {
    throw UsageError("either --h or --rule is required");
  }

  const auto kernel = build_kernel(family);
  const LKernel lk = a.numeric ? (at_zero ? lkernel_zero_numeric(model, kernel, s, h)
                                          : lkernel_numeric(model, kernel, s, h))
                               : make_lkernel(model, kernel, s, h, at_zero);
  EstimationTarget target = at_zero ? EstimationTarget{ AtZero{} }
                                    : EstimationTarget{ AtPoint{ a.point } };
  const EstimatorConfig config{ target, s, h, lk, provenance };
  const double value = estimate(sample, config, &warnings);

  json j;
  j["estimate"] = round12(value);
  j["h"] = round12(h);
  j["s"] = round12(s);
  j["n"] = sample.size();
  if (!at_zero)
    j["x0"] = round12(a.point);
  j["lkernel"] = lk.name();
  j["warnings"] = warnings_json(warnings);
  out << j.dump(2) << '\n';
  return 0;
}

struct SimulateArgs
{
  std::string spec, out, svg;
  unsigned threads = 0;
};

int
cmd_simulate(const SimulateArgs& a, std::ostream& out)
{
  require_input(a.spec);
  require_output(a.out);
  if (!a.svg.empty())
    require_output(a.svg);
  auto spec = load_simulation_spec(a.spec);
  if (a.threads > 0)
    spec.threads = a.threads;
  const auto report = monte_carlo_risk(spec);
  write_file_atomic(a.out, risk_report_csv(report));
  if (!a.svg.empty()) {
    const std::string title = spec.target.name() + ", " + spec.model.name() +
                              (spec.at_zero() ? ", at zero" : "");
    write_file_atomic(a.svg, risk_report_svg(report, title));
  }
  out << "wrote " << report.rows.size() << " rows to " << a.out << '\n';
  return 0;
}

struct RateArgs
{
  std::string report;
  std::string axis = "log-n";
  std::optional<double> x0;
};

int
cmd_rate_check(const RateArgs& a, std::ostream& out)
{
  require_input(a.report);
  RateAxis axis;
  if (a.axis == "log-n")
    axis = RateAxis::log_n;
  else if (a.axis == "log-ln-n-over-n")
    axis = RateAxis::log_ln_n_over_n;
  else
    throw UsageError("--axis must be log-n or log-ln-n-over-n");

  std::istringstream in(read_text(a.report));
  std::string line;
  std::size_t lineno = 0;
  std::vector<std::string> header;
  std::vector<std::size_t> ns;
  std::vector<double> medians, xs;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty())
      continue;
    const auto cells = split(line, ',');
    if (header.empty()) {
      for (auto c : cells)
        header.emplace_back(c);
      continue;
    }
    if (cells.size() != header.size())
      throw ParseError(lineno, "expected " + std::to_string(header.size()) + " columns");
    std::map<std::string, double> row;
    for (std::size_t i = 0; i < cells.size(); ++i) {
      const auto v = to_double(cells[i]);
      if (!v)
        throw ParseError(lineno, "non-numeric cell '" + std::string(cells[i]) + "'");
      row[header[i]] = *v;
    }
    if (!row.count("n") || !row.count("median") || !row.count("x0"))
      throw ParseError(1, "report needs n, x0 and median columns");
    if (a.x0 && std::abs(row["x0"] - *a.x0) > 1e-12 * std::max(1.0, *a.x0))
      continue;
    ns.push_back(static_cast<std::size_t>(row["n"]));
    medians.push_back(row["median"]);
    xs.push_back(row["x0"]);
  }
  if (header.empty())
    throw EmptyFile(a.report + " is empty");
  if (!a.x0) {
    for (double x : xs) {
      if (x != xs.front())
        throw UsageError("report mixes several x0 values; pick one with --x0");
    }
  }
  const auto fit = rate_regression(ns, medians, axis);
  json j;
  j["axis"] = a.axis;
  j["slope"] = round12(fit.slope);
  j["intercept"] = round12(fit.intercept);
  j["residual"] = round12(fit.residual);
  j["points"] = ns.size();
  out << j.dump(2) << '\n';
  return 0;
}

struct KernelDumpArgs
{
  std::string kernel, out;
  std::optional<double> t_min, t_max, re;
  double omega_max = 10.0;
  std::size_t count = 201;
};

int
cmd_kernel_dump(const KernelDumpArgs& a, std::ostream& out)
{
  require_output(a.out);
  if (a.count < 2)
    throw UsageError("--count must be at least 2");
  const auto kernel = build_kernel(parse_kernel(a.kernel));
  const bool mellin = kernel.transform_kind() == TransformKind::mellin;
  const double lo = a.t_min.value_or(std::max(kernel.effective_lo(), -10.0));
  const double hi = a.t_max.value_or(std::min(kernel.effective_hi(), 10.0));
  if (!(hi > lo))
    throw UsageError("empty t range");
  double re = a.re.value_or(0.0);
  if (!a.re && mellin) {
    const auto* zp = std::get_if<ZeroPoint>(&kernel.family());
    re = zp ? zp->s : 0.5;
  }
  std::string csv = "t,K,omega,transform_re,transform_im\n";
  const double den = static_cast<double>(a.count - 1);
  for (std::size_t i = 0; i < a.count; ++i) {
    const double t = lo + (hi - lo) * static_cast<double>(i) / den;
    const double w = -a.omega_max + 2.0 * a.omega_max * static_cast<double>(i) / den;
    const cplx z = kernel.transform(cplx(re, w));
    csv += csv_row({ t, kernel.evaluate(t), w, z.real(), z.imag() });
  }
  write_file_atomic(a.out, csv);
  out << "wrote " << a.count << " rows for " << kernel.name() << " (transform on Re z = "
      << format_g12(re) << ") to " << a.out << '\n';
  return 0;
}

struct LKernelDumpArgs
{
  std::string model, kernel, out;
  double h = 0.2;
  std::optional<double> s;
  double x = 1.0;
  bool zero = false;
  bool numeric = false;
  std::size_t count = 401;
};

int
cmd_lkernel_dump(const LKernelDumpArgs& a, std::ostream& out)
{
  require_output(a.out);
  if (a.count < 2)
    throw UsageError("--count must be at least 2");
  const auto model = parse_model(a.model);
  const auto kernel = build_kernel(parse_kernel(a.kernel));
  const double s = a.s.value_or(a.zero ? default_zero_s(model) : 0.0);
  const LKernel lk = a.numeric ? (a.zero ? lkernel_zero_numeric(model, kernel, s, a.h)
                                         : lkernel_numeric(model, kernel, s, a.h))
                               : make_lkernel(model, kernel, s, a.h, a.zero);
  const double T = std::min(lk.support_halfwidth(), 50.0);
  std::string csv = "t,rho,y,L\n";
  for (std::size_t i = 0; i < a.count; ++i) {
    const double t = -T + 2.0 * T * static_cast<double>(i) / static_cast<double>(a.count - 1);
    if (a.zero) {
      const double y = a.h * std::exp(t);
      csv += csv_row({ t, lk.rho(t), y, lk.evaluate0(y) });
    } else {
      const double y = a.x * std::exp(t);
      csv += csv_row({ t, lk.rho(t), y, lk.evaluate(a.x, y) });
    }
  }
  write_file_atomic(a.out, csv);
  out << "wrote " << a.count << " rows for " << lk.name() << " to " << a.out << '\n';
  return 0;
}

int
cmd_mellin_eval(const std::string& model_text, const std::string& z_text, bool numeric,
                std::ostream& out)
{
  const auto model = parse_model(model_text);
  const cplx z = parse_complex(z_text);
  if (numeric) {
    QuadSpec quad;
    quad.breakpoints = model.breakpoints();
    if (!model.strip().contains(z.real()))
      throw StripViolation("Re z = " + format_g12(z.real()) + " is outside " +
                           model.strip().str());
    out << format_complex(mellin_numeric([&](double x) { return model.density(x); }, z, quad))
        << '\n';
  } else {
    out << format_complex(mellin_analytic(model, z)) << '\n';
  }
  return 0;
}

int
cmd_self_test(std::ostream& out)
{
  bool ok = true;
  const std::vector<ErrorModel> catalog{
    ErrorModel::uniform(1.0),      ErrorModel::beta(1.0, 1.0),  ErrorModel::pareto(3.0, 1.0),
    ErrorModel::log_product_uniform(), ErrorModel::gamma(2.0, 1.0), ErrorModel::half_normal(1.0),
  };
  for (const auto& model : catalog) {
    QuadSpec quad;
    quad.breakpoints = model.breakpoints();
    double worst = 0.0;
    for (int k = 0; k < 40; ++k) {
      const cplx z(1.0, -20.0 + 40.0 * k / 39.0);
      const cplx a = mellin_analytic(model, z);
      const cplx b = mellin_numeric([&](double x) { return model.density(x); }, z, quad);
      worst = std::max(worst, std::abs(a - b) / (1.0 + std::abs(a)));
    }
    const bool pass = worst < 1e-8;
    ok = ok && pass;
    out << (pass ? "PASS" : "FAIL") << " mellin " << model.name() << " worst "
        << format_g12(worst) << '\n';
  }
  for (double nu : { 1.0, 0.5 }) {
    for (int m : { 1, 2 }) {
      for (double h : { 0.2, 0.5 }) {
        const auto closed = lkernel_closed_beta(nu, m, h);
        const auto numeric =
          lkernel_numeric(ErrorModel::power(nu), build_gaussian_jackknife_kernel(m), 0.0, h);
        double worst = 0.0;
        for (int i = 0; i < 200; ++i) {
          const double y = std::exp(-4.0 + 8.0 * i / 199.0);
          worst = std::max(worst, std::abs(closed.evaluate(1.0, y) - numeric.evaluate(1.0, y)));
        }
        const bool pass = worst < 1e-6;
        ok = ok && pass;
        out << (pass ? "PASS" : "FAIL") << " lkernel nu=" << format_g12(nu) << " m=" << m
            << " h=" << format_g12(h) << " worst " << format_g12(worst) << '\n';
      }
    }
  }
  return ok ? 0 : 1;
}

} // namespace

ErrorModel
parse_model(std::string_view text)
{
  auto [name, args] = parse_call(text, "model");
  if (name == "uniform") {
    require_arity(name, args, 0, 1, text);
    return ErrorModel::uniform(args.empty() ? 1.0 : args[0]);
  }
  if (name == "beta") {
    require_arity(name, args, 1, 2, text);
    return ErrorModel::beta(args[0], args.size() > 1 ? args[1] : 1.0);
  }
  if (name == "power") {
    require_arity(name, args, 1, 1, text);
    return ErrorModel::power(args[0]);
  }
  if (name == "pareto") {
    require_arity(name, args, 2, 2, text);
    return ErrorModel::pareto(args[0], args[1]);
  }
  if (name == "gamma") {
    require_arity(name, args, 2, 2, text);
    return ErrorModel::gamma(args[0], args[1]);
  }
  if (name == "halfnormal") {
    require_arity(name, args, 1, 1, text);
    return ErrorModel::half_normal(args[0]);
  }
  if (name == "logproduct") {
    require_arity(name, args, 0, 0, text);
    return ErrorModel::log_product_uniform();
  }
  throw InvalidArgument("unknown model '" + std::string(text) +
                        "' (uniform, beta, power, pareto, gamma, halfnormal, logproduct)");
}

KernelFamily
parse_kernel(std::string_view text)
{
  auto [name, args] = parse_call(text, "kernel");
  if (name == "gaussian") {
    require_arity(name, args, 1, 1, text);
    return GaussianJackknife{ as_order(args[0], text) };
  }
  if (name == "flat") {
    require_arity(name, args, 1, 2, text);
    const int m = as_order(args[0], text);
    return FlatCompact{ m, args.size() > 1 ? as_order(args[1], text) : m + 2 };
  }
  if (name == "supersmooth") {
    require_arity(name, args, 1, 2, text);
    return SuperSmoothKernel{ as_order(args[0], text),
                              args.size() > 1 ? as_order(args[1], text) : 1 };
  }
  if (name == "zero") {
    require_arity(name, args, 2, 2, text);
    return ZeroPoint{ as_order(args[0], text), args[1] };
  }
  if (name == "exponential") {
    require_arity(name, args, 1, 1, text);
    return ExponentialBase{ as_order(args[0], text) };
  }
  throw InvalidArgument("unknown kernel '" + std::string(text) +
                        "' (gaussian, flat, supersmooth, zero, exponential)");
}

cplx
parse_complex(std::string_view text)
{
  std::string s;
  for (char c : text) {
    if (c != ' ')
      s += c;
  }
  const auto bad = [&] { return InvalidArgument("bad complex number '" + std::string(text) + "'"); };
  if (s.empty())
    throw bad();
  if (s.back() != 'i') {
    const auto re = to_double(s);
    if (!re)
      throw bad();
    return { *re, 0.0 };
  }
  s.pop_back();
  // The sign that separates the parts is the last one not following an exponent.
  std::size_t cut = std::string::npos;
  for (std::size_t i = s.size(); i-- > 1;) {
    if ((s[i] == '+' || s[i] == '-') && s[i - 1] != 'e' && s[i - 1] != 'E') {
      cut = i;
      break;
    }
  }
  const std::string re_part = cut == std::string::npos ? "" : s.substr(0, cut);
  std::string im_part = cut == std::string::npos ? s : s.substr(cut);
  if (im_part.empty() || im_part == "+" || im_part == "-")
    im_part += "1";
  const auto im = to_double(im_part);
  const auto re = re_part.empty() ? std::optional<double>(0.0) : to_double(re_part);
  if (!re || !im)
    throw bad();
  return { *re, *im };
}

std::string
format_complex(cplx z)
{
  if (z.imag() == 0.0)
    return format_g12(z.real());
  const std::string im = format_g12(std::abs(z.imag()));
  return format_g12(z.real()) + (std::signbit(z.imag()) ? "-" : "+") + im + "i";
}

std::vector<double>
load_sample(const std::filesystem::path& path)
{
  std::ifstream in(path);
  if (!in)
    throw InvalidArgument("cannot open " + path.string());
  std::vector<double> values;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto cell = trim(line);
    if (cell.empty())
      continue;
    if (cell.find(',') != std::string_view::npos)
      throw ParseError(lineno, "expected one column, got '" + std::string(cell) + "'");
    const auto v = to_double(cell);
    if (!v) {
      if (lineno == 1)
        continue; // header
      throw ParseError(lineno, "not a number: '" + std::string(cell) + "'");
    }
    if (!std::isfinite(*v))
      throw ParseError(lineno, "not a finite number: '" + std::string(cell) + "'");
    values.push_back(*v);
  }
  if (values.empty())
    throw EmptyFile(path.string() + " holds no observations");
  return values;
}

SimulationSpec
parse_simulation_spec(std::string_view text)
{
  toml::table root;
  try {
    root = toml::parse(text);
  } catch (const toml::parse_error& e) {
    throw ParseError(e.source().begin.line, std::string(e.description()));
  }

  SimulationSpec spec;
  const auto section = [&](const std::string& key) -> const toml::table* {
    const auto* node = root.get(key);
    if (!node)
      return nullptr;
    if (const auto* t = node->as_table())
      return t;
    throw ParseError(line_of(*node), "[" + key + "] must be a table");
  };
  for (const auto& [k, v] : root) {
    const std::string key(k.str());
    if (key != "target" && key != "errors" && key != "design")
      throw ParseError(line_of(v), "unknown section " + key);
  }

  if (const auto* t = section("target")) {
    TomlReader r{ *t, "target", {} };
    const auto kind = r.string("kind").value_or("exponential");
    const std::size_t line = line_of(*t);
    if (kind == "exponential") {
      const double rate = r.number("rate").value_or(1.0);
      spec.target = wrap_line<TargetDensity>(line, [&] { return TargetDensity::exponential(rate); });
    } else if (kind == "logcauchy") {
      const double x0 = r.number("x0").value_or(1.0);
      spec.target = wrap_line<TargetDensity>(line, [&] { return TargetDensity::log_cauchy(x0); });
    } else {
      throw ParseError(line_of(*t->get("kind")), "target.kind must be exponential or logcauchy");
    }
    r.finish();
  }

  if (const auto* t = section("errors")) {
    TomlReader r{ *t, "errors", {} };
    const auto model = r.string("model");
    if (model) {
      const std::size_t line = line_of(*t->get("model"));
      spec.model = wrap_line<ErrorModel>(line, [&] { return parse_model(*model); });
    }
    r.finish();
  }

  const auto* design = section("design");
  if (!design)
    throw ParseError(1, "missing [design] section");
  TomlReader r{ *design, "design", {} };
  const auto count_of = [&](const std::string& key, double v) -> std::size_t {
    if (!(v >= 1.0) || v != std::floor(v))
      throw ParseError(line_of(*design->get(key)), "design." + key + " must hold positive integers");
    return static_cast<std::size_t>(v);
  };
  if (const auto ns = r.numbers("n")) {
    for (double v : *ns)
      spec.n_grid.push_back(count_of("n", v));
  } else {
    throw ParseError(line_of(*design), "design.n is required");
  }
  const auto x0 = r.numbers("x0");
  const bool at_zero = r.boolean("at_zero").value_or(false);
  if (at_zero && x0)
    throw ParseError(line_of(*design->get("at_zero")), "give either design.x0 or design.at_zero");
  if (!at_zero && !x0)
    throw ParseError(line_of(*design), "design.x0 or design.at_zero = true is required");
  if (x0)
    spec.points = *x0;
  if (const auto v = r.integer("runs"))
    spec.runs = count_of("runs", static_cast<double>(*v));
  if (const auto v = r.integer("oracle_runs"))
    spec.oracle_runs = count_of("oracle_runs", static_cast<double>(*v));
  const auto grid = r.numbers("h_grid");
  const auto h_min = r.number("h_min");
  const auto h_max = r.number("h_max");
  const auto h_count = r.integer("h_count");
  if (grid) {
    if (h_min || h_max || h_count)
      throw ParseError(line_of(*design->get("h_grid")), "give either h_grid or h_min/h_max/h_count");
    spec.h_grid = *grid;
  } else {
    const double lo = h_min.value_or(0.02);
    const double hi = h_max.value_or(1.0);
    const auto count = h_count.value_or(20);
    spec.h_grid = wrap_line<std::vector<double>>(line_of(*design), [&] {
      if (count < 1)
        throw InvalidArgument("h_count must be positive");
      return log_spaced(lo, hi, static_cast<std::size_t>(count));
    });
  }
  if (const auto v = r.integer("seed")) {
    if (*v < 0)
      throw ParseError(line_of(*design->get("seed")), "design.seed must be nonnegative");
    spec.seed = static_cast<std::uint64_t>(*v);
  }
  if (const auto v = r.string("kernel")) {
    const std::size_t line = line_of(*design->get("kernel"));
    spec.kernel = wrap_line<KernelFamily>(line, [&] { return parse_kernel(*v); });
  }
  if (const auto v = r.integer("kernel_order"))
    spec.kernel_order = static_cast<int>(*v);
  if (const auto v = r.number("s"))
    spec.s = *v;
  if (const auto v = r.integer("threads")) {
    if (*v < 0)
      throw ParseError(line_of(*design->get("threads")), "design.threads must be nonnegative");
    spec.threads = static_cast<unsigned>(*v);
  }
  r.finish();
  wrap_line<int>(line_of(*design), [&] {
    spec.validate();
    return 0;
  });
  return spec;
}

SimulationSpec
load_simulation_spec(const std::filesystem::path& path)
{
  return parse_simulation_spec(read_text(path));
}

void
write_file_atomic(const std::filesystem::path& path, const std::string& content)
{
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out)
      throw InvalidArgument("cannot write " + tmp.string());
    out << content;
    out.flush();
    if (!out)
      throw InvalidArgument("write failed for " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw InvalidArgument("cannot move output into " + path.string());
  }
}

int
run(int argc, const char* const* argv, std::ostream& out, std::ostream& err)
{
  CLI::App app{ "Density estimation under multiplicative measurement error", "mdeconv" };
  app.require_subcommand(1);
  // --h is the bandwidth, so help is long-form only.
  app.set_help_flag("--help", "print this help and exit");
  app.set_version_flag("--version", "mdeconv 0.1.0");

  const std::string model_help =
    "error model: uniform[:theta] | beta:nu[,theta] (g = (nu+1) x^nu / theta^(nu+1)) | "
    "power:nu (g = nu x^(nu-1) on (0,1)) | pareto:nu,theta | gamma:alpha,mu | "
    "halfnormal:upsilon | logproduct";
  const std::string kernel_help =
    "kernel: gaussian:m | flat:m[,q] | supersmooth:m[,lambda] | zero:m,s | exponential:m";

  EstimateArgs est;
  est.kernel = "gaussian:1";
  auto* c_est = app.add_subcommand("estimate", "estimate f_X at a point from a sample file");
  c_est->add_option("--input", est.input, "one-column CSV of observations")->required();
  c_est->add_option("--model", est.model, model_help)->required();
  c_est->add_option("--point", est.point, "estimation point x0 > 0")->required();
  c_est->add_option("--h", est.h, "bandwidth");
  c_est->add_option("--s", est.s, "integration line parameter (default 0)");
  c_est->add_option("--kernel", est.kernel, kernel_help)->capture_default_str();
  c_est->add_option("--rule", est.rule,
                    "bandwidth rule: smooth:A=..,beta=..[,gamma=..][,r=..] | "
                    "moment:A=..,beta=..,alpha=..,b=..[,gamma=..][,M=..][,eps=..][,C5=..] | "
                    "supersmooth:A=..,beta=..,lambda=..[,gamma=..][,C1=..]");
  c_est->add_flag("--numeric", est.numeric, "force the numeric L-kernel");

  EstimateArgs estz;
  estz.kernel = "exponential:1";
  auto* c_estz = app.add_subcommand("estimate-zero", "estimate f_X(0) from a sample file");
  c_estz->add_option("--input", estz.input, "one-column CSV of observations")->required();
  c_estz->add_option("--model", estz.model, model_help)->required();
  c_estz->add_option("--h", estz.h, "bandwidth");
  c_estz->add_option("--s", estz.s, "line parameter (default (1-p)/2 or nu/2)");
  c_estz->add_option("--kernel", estz.kernel, kernel_help)->capture_default_str();
  c_estz->add_option("--rule", estz.rule, "bandwidth rule: zero:A=..,beta=..[,M=..][,p=..][,q=..]");
  c_estz->add_flag("--numeric", estz.numeric, "force the numeric L-kernel");

  SimulateArgs sim;
  auto* c_sim = app.add_subcommand("simulate", "run a Monte-Carlo risk campaign");
  c_sim->add_option("--spec", sim.spec, "TOML simulation spec")->required();
  c_sim->add_option("--out", sim.out, "report CSV")->required();
  c_sim->add_option("--svg", sim.svg, "boxplot SVG");
  c_sim->add_option("--threads", sim.threads, "workers (default MDECONV_THREADS or all cores)");

  RateArgs rate;
  auto* c_rate = app.add_subcommand("rate-check", "regress log median error on a rate axis");
  c_rate->add_option("--report", rate.report, "report CSV from simulate")->required();
  c_rate->add_option("--axis", rate.axis, "log-n | log-ln-n-over-n")->capture_default_str();
  c_rate->add_option("--x0", rate.x0, "use rows with this x0 only");

  KernelDumpArgs kd;
  auto* c_kd = app.add_subcommand("kernel-dump", "sample a kernel and its transform to CSV");
  c_kd->add_option("--kernel", kd.kernel, kernel_help)->required();
  c_kd->add_option("--out", kd.out, "output CSV")->required();
  c_kd->add_option("--t-min", kd.t_min, "first t");
  c_kd->add_option("--t-max", kd.t_max, "last t");
  c_kd->add_option("--re", kd.re, "real part of the transform line");
  c_kd->add_option("--omega-max", kd.omega_max, "transform samples on |omega| <= this")
    ->capture_default_str();
  c_kd->add_option("--count", kd.count, "rows")->capture_default_str();

  LKernelDumpArgs ld;
  ld.kernel = "gaussian:1";
  auto* c_ld = app.add_subcommand("lkernel-dump", "sample an L-kernel profile to CSV");
  c_ld->add_option("--model", ld.model, model_help)->required();
  c_ld->add_option("--kernel", ld.kernel, kernel_help)->capture_default_str();
  c_ld->add_option("--h", ld.h, "bandwidth")->capture_default_str();
  c_ld->add_option("--s", ld.s, "line parameter");
  c_ld->add_option("--x", ld.x, "point x for L(x, y)")->capture_default_str();
  c_ld->add_flag("--zero", ld.zero, "the estimator at zero");
  c_ld->add_flag("--numeric", ld.numeric, "force numeric inversion");
  c_ld->add_option("--out", ld.out, "output CSV")->required();
  c_ld->add_option("--count", ld.count, "rows")->capture_default_str();

  std::string me_model, me_z;
  bool me_numeric = false;
  auto* c_me = app.add_subcommand("mellin-eval", "evaluate the Mellin transform of an error model");
  c_me->add_option("--model", me_model, model_help)->required();
  c_me->add_option("--z", me_z, "complex point a+bi")->required();
  c_me->add_flag("--numeric", me_numeric, "use quadrature instead of the closed form");

  auto* c_st = app.add_subcommand("self-test", "closed-form versus numeric consistency suites");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  try {
    if (c_est->parsed()) {
      if (!(est.point > 0.0))
        throw UsageError("--point must be positive");
      if (est.h && !est.rule.empty())
        throw UsageError("--h and --rule are exclusive");
      return cmd_estimate(est, false, out);
    }
    if (c_estz->parsed()) {
      if (estz.h && !estz.rule.empty())
        throw UsageError("--h and --rule are exclusive");
      return cmd_estimate(estz, true, out);
    }
    if (c_sim->parsed())
      return cmd_simulate(sim, out);
    if (c_rate->parsed())
      return cmd_rate_check(rate, out);
    if (c_kd->parsed())
      return cmd_kernel_dump(kd, out);
    if (c_ld->parsed())
      return cmd_lkernel_dump(ld, out);
    if (c_me->parsed())
      return cmd_mellin_eval(me_model, me_z, me_numeric, out);
    if (c_st->parsed())
      return cmd_self_test(out);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return 2;
  } catch (const InvalidArgument& e) {
    // Malformed grammar on the command line is a usage error.
    err << "usage error: " << e.what() << '\n';
    return 2;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}

} // namespace mdeconv::cli
