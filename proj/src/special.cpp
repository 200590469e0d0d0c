#include "fb5/special.hpp"

#include <cmath>
#include <stdexcept>

namespace fb5 {

namespace {

double gamma_p_series(double a, double x) {
  double term = 1.0 / a;
  double sum = term;
  for (int n = 1; n < 10000; ++n) {
    term *= x / (a + n);
    sum += term;
    if (std::abs(term) < std::abs(sum) * 1e-15) break;
  }
  return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// Q(a,x) by modified Lentz continued fraction.
double gamma_q_cf(double a, double x) {
  const double tiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < 10000; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::abs(delta - 1.0) < 1e-15) break;
  }
  return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
}

}  // namespace

double gamma_p(double a, double x) {
  if (!(a > 0)) throw std::domain_error("gamma_p: a must be > 0");
  if (x < 0) throw std::domain_error("gamma_p: x must be >= 0");
  if (x == 0) return 0.0;
  if (x < a + 1.0) return gamma_p_series(a, x);
  return 1.0 - gamma_q_cf(a, x);
}

double chi_squared_cdf(double x, double k) {
  if (x <= 0) return 0.0;
  return gamma_p(0.5 * k, 0.5 * x);
}

double chi_squared_sf(double x, double k) {
  if (x <= 0) return 1.0;
  if (x < k + 2.0) return 1.0 - gamma_p(0.5 * k, 0.5 * x);
  return gamma_q_cf(0.5 * k, 0.5 * x);
}

}  // namespace fb5
