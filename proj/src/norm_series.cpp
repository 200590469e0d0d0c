#include "fb5/norm_series.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "fb5/geometry.hpp"

namespace fb5 {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

void check_domain(double kappa, double beta) {
  if (!(kappa > 0)) throw std::domain_error("norm series: kappa must be > 0");
  if (!(beta >= 0)) throw std::domain_error("norm series: beta must be >= 0");
  if (!(2.0 * beta / kappa < 1.0)) {
    throw std::domain_error("norm series: eccentricity 2*beta/kappa must be < 1");
  }
}

// Log-sum over j >= j0 of terms f_j supplied in log scale by `log_term`.
// Accumulates against a running maximum. Termination requires the ratio
// test t_j / sum_{k<=j} t_k < rel_tol and additionally a geometric bound
// on the truncated tail, t_j * r/(1-r) with r the current term ratio:
// near e = 1 the terms decay slowly and the bare ratio test alone would
// leave a tail ~rel_tol/(1-r) that breaks the derivative-consistency
// tolerance downstream.
template <typename LogTerm>
double log_series_sum(int j0, const SeriesConfig& cfg, LogTerm&& log_term) {
  double log_max = kNegInf;
  double sum = 0.0;  // sum of exp(log f_j - log_max)
  double prev_lt = kNegInf;
  for (int j = j0; j < j0 + cfg.max_terms; ++j) {
    const double lt = log_term(j);
    double t;
    if (lt > log_max) {
      if (log_max != kNegInf) sum *= std::exp(log_max - lt);
      log_max = lt;
      t = 1.0;
    } else {
      t = std::exp(lt - log_max);
    }
    sum += t;
    if (t / sum < cfg.rel_tol && prev_lt > lt) {
      const double r = std::exp(lt - prev_lt);
      const double tail = t * r / (1.0 - r);
      if (tail / sum < cfg.rel_tol) return log_max + std::log(sum);
    }
    prev_lt = lt;
  }
  throw std::runtime_error("norm series: no convergence within max_terms");
}

}  // namespace

double series_S1(int m, double kappa, double beta, BesselHalfTable& table,
                 const SeriesConfig& cfg) {
  check_domain(kappa, beta);
  if (m < 0 || m > 2) throw std::domain_error("series_S1: m must be 0, 1 or 2");
  const double log_delta1 = std::log(2.0 * kPi) + 0.5 * std::log(2.0 / kappa);
  const double e = 2.0 * beta / kappa;
  if (e == 0.0) {
    // only j = 0 survives
    return log_delta1 + std::lgamma(0.5) + table.log_half_int(m);
  }
  const double log_e2 = 2.0 * std::log(e);
  double log_coef = std::lgamma(0.5);  // lgamma(j+1/2) - lgamma(j+1) at j=0
  const double sum = log_series_sum(0, cfg, [&](int j) {
    if (j > 0) log_coef += std::log((j - 0.5) / j);
    return log_coef + j * log_e2 + table.log_half_int(2 * j + m);
  });
  return log_delta1 + sum;
}

double series_S1(int m, double kappa, double beta, const SeriesConfig& cfg) {
  BesselHalfTable table(kappa);
  return series_S1(m, kappa, beta, table, cfg);
}

double series_S2(int n, double kappa, double beta, BesselHalfTable& table,
                 const SeriesConfig& cfg) {
  check_domain(kappa, beta);
  if (!(beta > 0)) throw std::domain_error("series_S2: beta must be > 0");
  if (n < 0 || n > 1) throw std::domain_error("series_S2: n must be 0 or 1");
  const double log_delta2 =
      std::log(4.0 * kPi / beta) + 0.5 * std::log(2.0 / kappa);
  const double e = 2.0 * beta / kappa;
  const double log_e2 = 2.0 * std::log(e);
  double log_coef = std::lgamma(1.5);  // lgamma(j+1/2) - lgamma(j) at j=1
  const double sum = log_series_sum(1, cfg, [&](int j) {
    if (j > 1) log_coef += std::log((j - 0.5) / (j - 1.0));
    return log_coef + j * log_e2 + table.log_half_int(2 * j + n);
  });
  return log_delta2 + sum;
}

double series_S2(int n, double kappa, double beta, const SeriesConfig& cfg) {
  BesselHalfTable table(kappa);
  return series_S2(n, kappa, beta, table, cfg);
}

double series_bb(double kappa, double beta, BesselHalfTable& table,
                 const SeriesConfig& cfg) {
  check_domain(kappa, beta);
  if (!(beta > 0)) throw std::domain_error("series_bb: beta must be > 0");
  const double log_pref =
      std::log(4.0 * kPi / (beta * beta)) + 0.5 * std::log(2.0 / kappa);
  const double e = 2.0 * beta / kappa;
  const double log_e2 = 2.0 * std::log(e);
  double log_coef = std::lgamma(1.5);
  const double sum = log_series_sum(1, cfg, [&](int j) {
    if (j > 1) log_coef += std::log((j - 0.5) / (j - 1.0));
    return log_coef + std::log(2.0 * j - 1.0) + j * log_e2 +
           table.log_half_int(2 * j);
  });
  return log_pref + sum;
}

double series_bb(double kappa, double beta, const SeriesConfig& cfg) {
  BesselHalfTable table(kappa);
  return series_bb(kappa, beta, table, cfg);
}

NormTerms norm_terms(double kappa, double beta, const SeriesConfig& cfg) {
  check_domain(kappa, beta);
  BesselHalfTable table(kappa);

  NormTerms t;
  t.log_c = series_S1(0, kappa, beta, table, cfg);
  t.log_c_k = series_S1(1, kappa, beta, table, cfg);
  const double s12 = series_S1(2, kappa, beta, table, cfg);
  // c_kk = exp(S1^{(2)}) + c_k / kappa
  t.log_c_kk =
      t.log_c_k + std::log(std::exp(s12 - t.log_c_k) + 1.0 / kappa);

  if (beta > 0) {
    t.log_c_b = series_S2(0, kappa, beta, table, cfg);
    t.log_c_kb = series_S2(1, kappa, beta, table, cfg);
    t.log_c_bb = series_bb(kappa, beta, table, cfg);
  } else {
    // c_b and c_kb vanish; c_bb tends to the j=1 coefficient limit
    //   c_bb(kappa, 0) = 8 pi^{3/2} sqrt(2/kappa) I_{5/2}(kappa) / kappa^2.
    t.log_c_b = kNegInf;
    t.log_c_kb = kNegInf;
    t.log_c_bb = std::log(8.0) + 1.5 * std::log(kPi) +
                 0.5 * std::log(2.0 / kappa) - 2.0 * std::log(kappa) +
                 table.log_half_int(2);
  }
  return t;
}

}  // namespace fb5
