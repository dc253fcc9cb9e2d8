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

#pragma once

#include <cstddef>
#include <functional>
#include <span>

namespace cmivf {

/// Regularized incomplete beta function I_x(a, b), x in [0,1], a, b > 0.
/// Continued-fraction evaluation (modified Lentz), absolute error ~1e-14.
/// Throws DomainError outside that range.
double reg_inc_beta(double x, double a, double b);

/// Regularized lower / upper incomplete gamma functions P(a, x), Q(a, x).
double reg_gamma_p(double a, double x);
double reg_gamma_q(double a, double x);

/// Noncentral chi-squared CDF and survival function with `dof` degrees of
/// freedom and noncentrality `lambda`, as a Poisson mixture of central
/// chi-squared laws summed outward from the Poisson mode.
double noncentral_chi2_cdf(double x, double dof, double lambda);
double noncentral_chi2_sf(double x, double dof, double lambda);

double normal_cdf(double t);

/// Fraction of the unit sphere in R^d (ambient dimension d >= 2) within
/// angle arccos(s) of a pole: 1/2 * I_{1-s^2}((d-1)/2, 1/2) for s >= 0,
/// extended by 1 - cap_fraction(-s, d) for s < 0.
double cap_fraction(double s, std::size_t d);

/// One-sample Kolmogorov-Smirnov statistic sup |F_n - F|; sorts a copy.
double ks_statistic(std::span<const double> samples, const std::function<double(double)>& cdf);

/// Asymptotic p-value of the KS statistic for sample size n, with Stephens'
/// small-sample correction.
double ks_pvalue(double statistic, std::size_t n);

/// Spearman rank correlation (average ranks for ties).
double spearman(std::span<const double> x, std::span<const double> y);

}  // namespace cmivf
