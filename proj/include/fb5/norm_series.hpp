#pragma once

#include "fb5/bessel.hpp"

namespace fb5 {

struct SeriesConfig {
  double rel_tol = 1e-6;  // stop when term / running sum drops below this
  int max_terms = 10000;
};

/// log c(kappa,beta) and the logs of its five partial derivatives, all in
/// natural-log scale. At beta = 0, c_b and c_kb vanish and their logs are
/// -infinity sentinels; log_c_bb is finite (leading-coefficient limit).
struct NormTerms {
  double log_c = 0;
  double log_c_k = 0;
  double log_c_kk = 0;
  double log_c_b = 0;
  double log_c_kb = 0;
  double log_c_bb = 0;
};

/// S1^(m): log of the Bessel series behind c (m=0), c_kappa (m=1) and the
/// I_{p+2} part of c_kappakappa (m=2). Requires 2*beta/kappa < 1.
double series_S1(int m, double kappa, double beta,
                 const SeriesConfig& cfg = {});
double series_S1(int m, double kappa, double beta, BesselHalfTable& table,
                 const SeriesConfig& cfg);

/// S2^(n): log of the series behind c_beta (n=0) and c_kappabeta (n=1).
/// Requires beta > 0 (the series starts at j=1 and carries a 1/beta factor).
double series_S2(int n, double kappa, double beta,
                 const SeriesConfig& cfg = {});
double series_S2(int n, double kappa, double beta, BesselHalfTable& table,
                 const SeriesConfig& cfg);

/// log c_betabeta for beta > 0.
double series_bb(double kappa, double beta, const SeriesConfig& cfg = {});
double series_bb(double kappa, double beta, BesselHalfTable& table,
                 const SeriesConfig& cfg);

/// All six log values at once, sharing one Bessel table.
NormTerms norm_terms(double kappa, double beta, const SeriesConfig& cfg = {});

}  // namespace fb5
