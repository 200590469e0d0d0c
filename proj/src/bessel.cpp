#include "fb5/bessel.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace fb5 {

namespace {

constexpr double kPi = 3.14159265358979323846;

// log(sinh(x)/x), stable for every x > 0.
double log_sinhc(double x) {
  if (x < 1e-4) {
    const double x2 = x * x;
    return std::log1p(x2 / 6.0 * (1.0 + x2 / 20.0));
  }
  return x + std::log(-std::expm1(-2.0 * x)) - std::log(2.0 * x);
}

}  // namespace

double log_bessel_i(double order, double kappa) {
  if (!(kappa > 0)) throw std::domain_error("log_bessel_i: kappa must be > 0");
  if (!(order >= 0)) throw std::domain_error("log_bessel_i: order must be >= 0");

  // I_v(x) = (x/2)^v / Gamma(v+1) * sum_k t_k,
  // t_0 = 1, t_{k+1} = t_k * (x^2/4) / ((k+1)(v+k+1)).
  const double log_q = 2.0 * std::log(kappa / 2.0);
  double log_t = 0.0;
  double log_sum = 0.0;
  for (int k = 0;; ++k) {
    log_t += log_q - std::log((k + 1.0) * (order + k + 1.0));
    if (log_t > log_sum) {
      log_sum = log_t + std::log1p(std::exp(log_sum - log_t));
    } else {
      log_sum += std::log1p(std::exp(log_t - log_sum));
    }
    const bool decaying = log_q < std::log((k + 2.0) * (order + k + 2.0));
    if (decaying && log_t < log_sum - 40.0) break;
    if (k > 2000000) throw std::runtime_error("log_bessel_i: series stalled");
  }
  return order * std::log(kappa / 2.0) - std::lgamma(order + 1.0) + log_sum;
}

BesselHalfTable::BesselHalfTable(double kappa, int n_max) : kappa_(kappa) {
  if (!(kappa > 0)) throw std::domain_error("BesselHalfTable: kappa must be > 0");
  build(n_max);
}

double BesselHalfTable::log_half_int(int n) {
  if (n < 0) throw std::domain_error("BesselHalfTable: negative order index");
  if (n > capacity()) build(std::max(2 * capacity(), n + 8));
  return log_i_[static_cast<size_t>(n)];
}

void BesselHalfTable::build(int n_max) {
  // Scaled spherical Bessel values i~_n obey the same three-term recurrence
  // as i_n(x) = sqrt(pi/(2x)) I_{n+1/2}(x):
  //   i_{n-1} = i_{n+1} + ((2n+1)/x) i_n.
  // Running it downward accumulates only positive terms, so the minimal
  // solution dominates and the arbitrary seed washes out. The seed
  // contamination decays like exp(-((N+1)^2 - n^2)/x); the start offset
  // below keeps it under ~1e-13 for every requested order.
  const double x = kappa_;
  const int n_start =
      static_cast<int>(std::ceil(std::sqrt(static_cast<double>(n_max) * n_max +
                                           34.0 * x))) +
      24;

  std::vector<double> val(static_cast<size_t>(n_start) + 2, 0.0);
  std::vector<double> scale(static_cast<size_t>(n_start) + 2, 0.0);

  double hi = 0.0;           // value at order n+1
  double lo = 1.0;           // value at order n (arbitrary seed scale)
  double log_scale = 0.0;    // accumulated rescaling, in logs
  for (int n = n_start; n >= 0; --n) {
    val[static_cast<size_t>(n)] = lo;
    scale[static_cast<size_t>(n)] = log_scale;
    const double next = hi + ((2.0 * n + 1.0) / x) * lo;
    hi = lo;
    lo = next;
    if (lo > 1e250) {
      lo *= 1e-250;
      hi *= 1e-250;
      log_scale += 250.0 * std::log(10.0);
    } else if (lo < 1e-250 && lo > 0) {
      lo *= 1e250;
      hi *= 1e250;
      log_scale -= 250.0 * std::log(10.0);
    }
  }
  // "lo" now holds the scaled value at order -1; val[0] at order 0.

  // Anchor: i_0(x) = sinh(x)/x.
  const double log_i0 = log_sinhc(x);
  const double anchor = log_i0 - (std::log(val[0]) + scale[0]);

  log_i_.assign(static_cast<size_t>(n_max) + 1, 0.0);
  const double half_log = 0.5 * std::log(2.0 * x / kPi);
  for (int n = 0; n <= n_max; ++n) {
    const double v = val[static_cast<size_t>(n)];
    const double log_in =
        v > 0 ? std::log(v) + scale[static_cast<size_t>(n)] + anchor
              : -std::numeric_limits<double>::infinity();
    // I_{n+1/2}(x) = sqrt(2x/pi) i_n(x)
    log_i_[static_cast<size_t>(n)] = log_in + half_log;
  }
}

}  // namespace fb5
