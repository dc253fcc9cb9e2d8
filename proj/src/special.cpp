// Copyright 2026 The cmivf Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "cmivf/special.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "cmivf/error.hpp"

namespace cmivf {
namespace {

constexpr double kEps = 1e-16;
constexpr double kTiny = 1e-300;
constexpr int kMaxIter = 100000;

// Continued fraction for I_x(a,b), evaluated with the modified Lentz method.
double beta_cf(double a, double b, double x) {
  const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < kEps) return h;
  }
  raise(ErrorCode::kInternal, "incomplete beta continued fraction did not converge");
}

double gamma_series(double a, double x) {
  double ap = a, del = 1.0 / a, sum = del;
  for (int n = 0; n < kMaxIter; ++n) {
    ap += 1.0;
    del *= x / ap;
    sum += del;
    if (std::abs(del) < std::abs(sum) * kEps) break;
  }
  return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

double gamma_cf(double a, double x) {
  double b = x + 1.0 - a, c = 1.0 / kTiny, d = 1.0 / b, h = d;
  for (int i = 1; i <= kMaxIter; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < kTiny) d = kTiny;
    c = b + an / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < kEps) break;
  }
  return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
}

void check_gamma_args(double a, double x) {
  if (!(a > 0.0) || !(x >= 0.0) || !std::isfinite(a))
    raise(ErrorCode::kDomainError, "incomplete gamma needs a > 0, x >= 0");
}

// Sum of Poisson(mu)-weighted terms term(j), outward from the mode.
template <typename Term>
double poisson_mixture(double mu, Term term) {
  const auto j0 = static_cast<long>(std::floor(mu));
  auto weight = [mu](long j) {
    return std::exp(-mu + j * std::log(mu) - std::lgamma(static_cast<double>(j) + 1.0));
  };
  double total = 0.0;
  for (long j = j0;; ++j) {
    const double w = weight(j);
    total += w * term(j);
    if (w < 1e-20 && j > j0) break;
  }
  for (long j = j0 - 1; j >= 0; --j) {
    const double w = weight(j);
    total += w * term(j);
    if (w < 1e-20) break;
  }
  return total;
}

}  // namespace

double reg_inc_beta(double x, double a, double b) {
  if (!(x >= 0.0 && x <= 1.0) || !(a > 0.0) || !(b > 0.0) || !std::isfinite(a) ||
      !std::isfinite(b))
    raise(ErrorCode::kDomainError, "reg_inc_beta needs x in [0,1], a > 0, b > 0 (got x=" +
                                       std::to_string(x) + ", a=" + std::to_string(a) +
                                       ", b=" + std::to_string(b) + ")");
  if (x == 0.0) return 0.0;
  if (x == 1.0) return 1.0;
  const double log_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                           a * std::log(x) + b * std::log1p(-x);
  const double front = std::exp(log_front);
  double result;
  if (x < (a + 1.0) / (a + b + 2.0)) {
    result = front * beta_cf(a, b, x) / a;
  } else {
    result = 1.0 - front * beta_cf(b, a, 1.0 - x) / b;
  }
  return std::clamp(result, 0.0, 1.0);
}

double reg_gamma_p(double a, double x) {
  check_gamma_args(a, x);
  if (x == 0.0) return 0.0;
  if (x < a + 1.0) return std::clamp(gamma_series(a, x), 0.0, 1.0);
  return std::clamp(1.0 - gamma_cf(a, x), 0.0, 1.0);
}

double reg_gamma_q(double a, double x) {
  check_gamma_args(a, x);
  if (x == 0.0) return 1.0;
  if (x < a + 1.0) return std::clamp(1.0 - gamma_series(a, x), 0.0, 1.0);
  return std::clamp(gamma_cf(a, x), 0.0, 1.0);
}

double noncentral_chi2_cdf(double x, double dof, double lambda) {
  if (!(dof > 0.0) || !(lambda >= 0.0))
    raise(ErrorCode::kDomainError, "noncentral chi-squared needs dof > 0, lambda >= 0");
  if (!(x > 0.0)) return 0.0;
  if (lambda == 0.0) return reg_gamma_p(0.5 * dof, 0.5 * x);
  const double r = poisson_mixture(0.5 * lambda, [&](long j) {
    return reg_gamma_p(0.5 * dof + static_cast<double>(j), 0.5 * x);
  });
  return std::clamp(r, 0.0, 1.0);
}

double noncentral_chi2_sf(double x, double dof, double lambda) {
  if (!(dof > 0.0) || !(lambda >= 0.0))
    raise(ErrorCode::kDomainError, "noncentral chi-squared needs dof > 0, lambda >= 0");
  if (!(x > 0.0)) return 1.0;
  if (lambda == 0.0) return reg_gamma_q(0.5 * dof, 0.5 * x);
  const double r = poisson_mixture(0.5 * lambda, [&](long j) {
    return reg_gamma_q(0.5 * dof + static_cast<double>(j), 0.5 * x);
  });
  return std::clamp(r, 0.0, 1.0);
}

double normal_cdf(double t) { return 0.5 * std::erfc(-t / std::sqrt(2.0)); }

double cap_fraction(double s, std::size_t d) {
  if (d < 2) raise(ErrorCode::kDomainError, "cap_fraction needs ambient dimension d >= 2");
  if (!(s >= -1.0 && s <= 1.0))
    raise(ErrorCode::kDomainError, "cap_fraction needs s in [-1, 1] (got " + std::to_string(s) + ")");
  if (s < 0.0) return 1.0 - cap_fraction(-s, d);
  const double sin2 = (1.0 - s) * (1.0 + s);
  return 0.5 * reg_inc_beta(sin2, 0.5 * (static_cast<double>(d) - 1.0), 0.5);
}

double ks_statistic(std::span<const double> samples, const std::function<double(double)>& cdf) {
  if (samples.empty()) raise(ErrorCode::kInvalidArgument, "KS statistic of an empty sample");
  std::vector<double> x(samples.begin(), samples.end());
  std::sort(x.begin(), x.end());
  const double n = static_cast<double>(x.size());
  double dmax = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double f = cdf(x[i]);
    dmax = std::max({dmax, (static_cast<double>(i) + 1.0) / n - f, f - static_cast<double>(i) / n});
  }
  return dmax;
}

double ks_pvalue(double statistic, std::size_t n) {
  const double sn = std::sqrt(static_cast<double>(n));
  const double lam = (sn + 0.12 + 0.11 / sn) * statistic;
  if (lam <= 0.0) return 1.0;
  constexpr double kPi = 3.14159265358979323846;
  if (lam < 1.18) {
    // Complementary series, fast for small lambda.
    double sum = 0.0;
    for (int k = 1; k < 200; ++k) {
      const double t = std::exp(-(2.0 * k - 1) * (2.0 * k - 1) * kPi * kPi / (8.0 * lam * lam));
      sum += t;
      if (t < 1e-18) break;
    }
    return std::clamp(1.0 - std::sqrt(2.0 * kPi) / lam * sum, 0.0, 1.0);
  }
  double sum = 0.0, sign = 1.0;
  for (int k = 1; k < 200; ++k) {
    const double t = std::exp(-2.0 * k * k * lam * lam);
    sum += sign * t;
    sign = -sign;
    if (t < 1e-18) break;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

namespace {

std::vector<double> average_ranks(std::span<const double> v) {
  std::vector<std::size_t> order(v.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> ranks(v.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
    const double r = 0.5 * (static_cast<double>(i) + static_cast<double>(j)) + 1.0;
    for (std::size_t t = i; t <= j; ++t) ranks[order[t]] = r;
    i = j + 1;
  }
  return ranks;
}

}  // namespace

double spearman(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2)
    raise(ErrorCode::kInvalidArgument, "spearman needs two equal-length samples of size >= 2");
  const auto rx = average_ranks(x), ry = average_ranks(y);
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
  const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace cmivf
