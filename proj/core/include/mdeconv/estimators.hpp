#pragma once

#include "mdeconv/lkernel.hpp"

#include <functional>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace mdeconv {

using Warnings = std::vector<std::string>;

struct AtPoint { double x0; };
struct AtZero {};
using EstimationTarget = std::variant<AtPoint, AtZero>;

// Where (s, h) came from. Rule constants that the theory leaves free
// (C1, C5) default to 1.
struct ManualChoice {};
struct SmoothRule { double A, beta, gamma; };
struct MomentRule { double A, beta, gamma, alpha, M, b, eps; double C5 = 1.0; };
struct SuperSmoothRule { double A, beta, gamma, lambda; double C1 = 1.0; };
struct ZeroRule { double A, beta, M, p, q; };
using Provenance =
  std::variant<ManualChoice, SmoothRule, MomentRule, SuperSmoothRule, ZeroRule>;

struct EstimatorConfig
{
  EstimationTarget target;
  double s;
  double h;
  LKernel lkernel;
  Provenance provenance = ManualChoice{};

  //! h > 0, x0 > 0, and (s, h, target) agree with the L-kernel.
  //! Throws InvalidArgument.
  void validate() const;
};

//! Local Hoelder class on [x0/r, r x0] with constant A and smoothness beta;
//! M bounds the sup norm or the moment, depending on the bandwidth rule.
struct HolderClassSpec
{
  double A;
  double beta;
  double r;
  double M = 1.0;

  void validate() const;
};

//! Mean of L(x0, Y_j) by pairwise summation. Negative observations
//! contribute 0 and are reported through `warnings`. Throws EmptySample.
double estimate_at_point(std::span<const double> sample,
                         const EstimatorConfig& config,
                         Warnings* warnings = nullptr);

//! Mean of L(Y_j) for the estimator at zero.
double estimate_at_zero(std::span<const double> sample,
                        const EstimatorConfig& config,
                        Warnings* warnings = nullptr);

//! Dispatches on config.target.
double estimate(std::span<const double> sample, const EstimatorConfig& config,
                Warnings* warnings = nullptr);

//! [A^2 x0^2 (x0^beta + 1)^2 n]^{-1/(2 beta + 2 gamma + 1)}. Warns when
//! h >= min(ln r, 1).
double bandwidth_smooth(double A, double beta, double gamma, double x0,
                        double n, double r = 2.718281828459045,
                        Warnings* warnings = nullptr);

//! max(-alpha, (1 - b)/2 + eps); b may be +inf.
double s_star_moment(double alpha, double b, double eps);

//! C5 [M^{-1} A^2 x0^{2 - 2 s*} (x0^beta + 1)^2 n]^{-1/(2 beta + 2 gamma + 1)}.
double bandwidth_moment(const MomentRule& rule, double x0, double n);

//! C1 gamma [ln(A^2 x0^{2 beta + 2} n)]^{-1 + 1/(2 lambda)}. Throws
//! DomainError when the logarithm's argument is <= e.
double bandwidth_supersmooth(double A, double beta, double gamma,
                             double lambda, double x0, double n,
                             double C1 = 1.0);

struct ZeroBandwidth
{
  double s;
  double h;
  int kappa;
};

//! s* = (1 - p)/2, kappa = [p == 0], h* = [M A^{-2} (ln n)^{q + kappa} / n]^{1/(2 beta + 1 + p)}.
ZeroBandwidth bandwidth_zero(double A, double beta, double M, double p,
                             double q, double n);

//! The mean of the estimator: int K_h(x0, t) f(t) dt at a point, or
//! int (1/h) K(t/h) f(t) dt at zero, by quadrature against K.
double expected_estimate(const EstimatorConfig& config,
                         const std::function<double(double)>& density);

//! Pairwise sum; the order of additions depends only on the length.
double pairwise_sum(std::span<const double> values);

} // namespace mdeconv
