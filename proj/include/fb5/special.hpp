#pragma once

namespace fb5 {

/// Regularized lower incomplete gamma P(a, x), a > 0, x >= 0.
/// Series expansion for x < a+1, Lentz continued fraction otherwise;
/// absolute accuracy ~1e-12.
double gamma_p(double a, double x);

/// Chi-squared CDF with k degrees of freedom.
double chi_squared_cdf(double x, double k);

/// Upper-tail p-value of the chi-squared distribution.
double chi_squared_sf(double x, double k);

}  // namespace fb5
