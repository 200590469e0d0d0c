#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "fb5/bessel.hpp"
#include "fb5/norm_series.hpp"
#include "fb5/geometry.hpp"

using namespace fb5;

namespace {

// closed form: I_{1/2}(x) = sqrt(2/(pi x)) sinh x
double log_i_half(double x) {
  return 0.5 * std::log(2.0 / (kPi * x)) + x + std::log1p(-std::exp(-2.0 * x)) -
         std::log(2.0);
}

// closed form: I_{3/2}(x) = sqrt(2/(pi x)) (cosh x - sinh x / x)
double log_i_three_half(double x) {
  const double v = std::cosh(x) - std::sinh(x) / x;
  return 0.5 * std::log(2.0 / (kPi * x)) + std::log(v);
}

double log_c_vmf(double kappa) {  // c(kappa, 0) = 4 pi sinh(kappa)/kappa
  return std::log(4.0 * kPi) + kappa + std::log(-std::expm1(-2.0 * kappa)) -
         std::log(2.0 * kappa);
}

}  // namespace

TEST_CASE("log_bessel_i matches half-integer closed forms") {
  for (double x : {0.01, 0.5, 2.0, 10.0, 50.0, 200.0}) {
    CHECK(log_bessel_i(0.5, x) == doctest::Approx(log_i_half(x)).epsilon(1e-12));
    if (x >= 0.5) {
      CHECK(log_bessel_i(1.5, x) ==
            doctest::Approx(log_i_three_half(x)).epsilon(1e-11));
    }
  }
  // specific value from the spec: order 1/2, kappa = 2
  const double expect = std::log(std::sqrt(1.0 / kPi) * std::sinh(2.0));
  CHECK(log_bessel_i(0.5, 2.0) == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("log_bessel_i small-argument limit") {
  // I_{1/2}(k) -> sqrt(2/(pi k)) * k ... leading series term k/ (sqrt(2k/pi)...)
  const double k = 1e-6;
  const double lead =
      0.5 * std::log(k / 2.0) - std::lgamma(1.5);  // (k/2)^{1/2}/Gamma(3/2)
  CHECK(log_bessel_i(0.5, k) == doctest::Approx(lead).epsilon(1e-6));
}

TEST_CASE("bessel table agrees with the direct series over the full range") {
  for (double x : {1e-6, 1e-3, 0.1, 1.0, 10.0, 100.0, 1000.0, 10000.0}) {
    BesselHalfTable table(x, 40);
    for (int n : {0, 1, 2, 5, 17, 40}) {
      const double ref = log_bessel_i(n + 0.5, x);
      CHECK(table.log_half_int(n) == doctest::Approx(ref).epsilon(5e-11));
    }
  }
}

TEST_CASE("table extends on demand") {
  BesselHalfTable table(5.0, 4);
  const double ref = log_bessel_i(63.5, 5.0);
  CHECK(table.log_half_int(63) == doctest::Approx(ref).epsilon(1e-10));
}

TEST_CASE("bessel ratio I_{p+2}/I_p < 1") {
  CHECK(log_bessel_i(4.5, 10.0) < log_bessel_i(2.5, 10.0));
}

TEST_CASE("bessel recurrence via finite differences") {
  // kappa I'_p = kappa I_{p-1} - p I_p, with I' from central differences of
  // exp(log I)
  for (double p : {1.5, 2.5, 6.5}) {
    for (double x : {2.0, 10.0, 40.0}) {
      // Richardson-extrapolated central differences; I ~ e^x so the steps
      // are absolute
      const double h = 1e-3;
      auto iv = [&](double xx) { return std::exp(log_bessel_i(p, xx)); };
      const double d_h = (iv(x + h) - iv(x - h)) / (2 * h);
      const double d_h2 = (iv(x + h / 2) - iv(x - h / 2)) / h;
      const double d = (4 * d_h2 - d_h) / 3;
      const double ip = std::exp(log_bessel_i(p, x));
      const double im = std::exp(log_bessel_i(p - 1, x));
      const double lhs = x * d;
      const double rhs = x * im - p * ip;
      CHECK(std::abs(lhs - rhs) / std::abs(rhs) < 1e-8);
    }
  }
}

TEST_CASE("rejects invalid domain") {
  CHECK_THROWS_AS(log_bessel_i(0.5, -1.0), std::domain_error);
  CHECK_THROWS_AS(log_bessel_i(0.5, 0.0), std::domain_error);
  CHECK_THROWS_AS(series_S1(0, 10.0, 5.0), std::domain_error);   // e = 1
  CHECK_THROWS_AS(series_S1(0, 10.0, 6.0), std::domain_error);   // e > 1
  CHECK_THROWS_AS(series_S2(0, 10.0, 0.0), std::domain_error);   // beta = 0
  CHECK_THROWS_AS(norm_terms(-1.0, 0.0), std::domain_error);
}

TEST_CASE("S1 at beta = 0 reduces to the vMF normalizer") {
  for (double kappa : {0.1, 1.0, 10.0, 100.0}) {
    CHECK(series_S1(0, kappa, 0.0) ==
          doctest::Approx(log_c_vmf(kappa)).epsilon(1e-12));
  }
}

TEST_CASE("S1 terms decrease strictly (ratio test of the paper)") {
  // f_{j+1}/f_j = (j+1/2)/(j+1) e^2 I_{p+2+m}/I_{p+m} < 1 for e < 1
  for (double kappa : {1.0, 10.0, 100.0}) {
    for (double e : {0.1, 0.5, 0.9}) {
      const double beta = 0.5 * kappa * e;
      BesselHalfTable table(kappa);
      for (int m = 0; m <= 2; ++m) {
        double prev = std::numeric_limits<double>::infinity();
        double log_coef = std::lgamma(0.5);
        for (int j = 0; j < 25; ++j) {
          if (j > 0) log_coef += std::log((j - 0.5) / j);
          const double log_fj = log_coef + 2.0 * j * std::log(e) +
                                table.log_half_int(2 * j + m);
          CHECK(log_fj < prev);
          prev = log_fj;
        }
      }
      (void)beta;
    }
  }
}

TEST_CASE("S1 finite and convergent at a moderate point") {
  const double s = series_S1(0, 10.0, 2.5);
  CHECK(std::isfinite(s));
  // against a tighter tolerance reference
  SeriesConfig tight;
  tight.rel_tol = 1e-14;
  CHECK(s == doctest::Approx(series_S1(0, 10.0, 2.5, tight)).epsilon(1e-6));
}

TEST_CASE("asymptotic formula at large kappa") {
  // c ~ 2 pi exp(kappa) (kappa^2 - 4 beta^2)^{-1/2}
  const double kappa = 1000.0, beta = 50.0;
  const double asym = std::log(2.0 * kPi) + kappa -
                      0.5 * std::log(kappa * kappa - 4.0 * beta * beta);
  const double got = series_S1(0, kappa, beta);
  CHECK(std::abs(std::exp(got - asym) - 1.0) < 1e-3);
}

TEST_CASE("c_beta vanishes linearly as beta -> 0") {
  const double kappa = 10.0;
  const double b1 = 1e-4, b2 = 2e-4;
  const double s1 = std::exp(series_S2(0, kappa, b1));
  const double s2 = std::exp(series_S2(0, kappa, b2));
  CHECK(s2 / s1 == doctest::Approx(2.0).epsilon(1e-4));
}

TEST_CASE("S2 below S1 at a moderate point") {
  CHECK(series_S2(0, 10.0, 2.5) < series_S1(0, 10.0, 2.5));
}

TEST_CASE("derivatives match central finite differences of c") {
  // oracle: c via series_S1 at a much tighter tolerance than the values
  // under test; absolute steps since c scales like e^kappa
  SeriesConfig tight;
  tight.rel_tol = 1e-13;
  tight.max_terms = 100000;
  for (double kappa : {1.0, 10.0, 100.0}) {
    for (double e : {0.1, 0.5, 0.9}) {
      const double beta = 0.5 * kappa * e;
      const NormTerms t = norm_terms(kappa, beta);

      const double hk = 1e-3;
      const double hb = std::min(1e-3, 0.45 * beta);
      auto c_at = [&](double k, double b) {
        return std::exp(series_S1(0, k, b, tight));
      };

      const double c0 = c_at(kappa, beta);
      const double fd_ck = (c_at(kappa + hk, beta) - c_at(kappa - hk, beta)) / (2 * hk);
      const double fd_cb = (c_at(kappa, beta + hb) - c_at(kappa, beta - hb)) / (2 * hb);
      const double fd_ckk =
          (c_at(kappa + hk, beta) - 2 * c0 + c_at(kappa - hk, beta)) / (hk * hk);
      // c_bb is small relative to c at large kappa; a larger step plus
      // Richardson extrapolation beats the cancellation noise
      const double hbig = std::min(0.45 * beta, 0.02 * std::max(1.0, beta));
      const double d2 =
          (c_at(kappa, beta + hbig) - 2 * c0 + c_at(kappa, beta - hbig)) /
          (hbig * hbig);
      const double d2h = (c_at(kappa, beta + hbig / 2) - 2 * c0 +
                          c_at(kappa, beta - hbig / 2)) /
                         (hbig * hbig / 4);
      const double fd_cbb = (4 * d2h - d2) / 3;
      const double fd_ckb = (c_at(kappa + hk, beta + hb) - c_at(kappa + hk, beta - hb) -
                             c_at(kappa - hk, beta + hb) + c_at(kappa - hk, beta - hb)) /
                            (4 * hk * hb);

      CHECK(std::exp(t.log_c_k) == doctest::Approx(fd_ck).epsilon(1e-5));
      CHECK(std::exp(t.log_c_b) == doctest::Approx(fd_cb).epsilon(1e-5));
      CHECK(std::exp(t.log_c_kk) == doctest::Approx(fd_ckk).epsilon(1e-5));
      CHECK(std::exp(t.log_c_bb) == doctest::Approx(fd_cbb).epsilon(1e-5));
      CHECK(std::exp(t.log_c_kb) == doctest::Approx(fd_ckb).epsilon(1e-5));
    }
  }
}

TEST_CASE("mixed partial route symmetry") {
  // c_kb from S2^(1) equals d(c_b)/dkappa by finite differences
  const double kappa = 10.0, beta = 2.5;
  const double hk = 1e-4 * kappa;
  const double fd = (std::exp(series_S2(0, kappa + hk, beta)) -
                     std::exp(series_S2(0, kappa - hk, beta))) /
                    (2 * hk);
  CHECK(std::exp(series_S2(1, kappa, beta)) ==
        doctest::Approx(fd).epsilon(1e-4));
}

TEST_CASE("norm_terms at beta = 0") {
  const NormTerms t = norm_terms(10.0, 0.0);
  CHECK(t.log_c == doctest::Approx(log_c_vmf(10.0)).epsilon(1e-12));
  CHECK(std::isinf(t.log_c_b));
  CHECK(t.log_c_b < 0);
  CHECK(std::isinf(t.log_c_kb));
  CHECK(std::isfinite(t.log_c_bb));
  // c_bb(kappa,0) continuity: compare with small-beta evaluation
  const NormTerms t2 = norm_terms(10.0, 1e-6);
  CHECK(t.log_c_bb == doctest::Approx(t2.log_c_bb).epsilon(1e-6));
}

TEST_CASE("uniform limit: c -> 4 pi as kappa -> 0") {
  const NormTerms t = norm_terms(1e-8, 0.0);
  CHECK(t.log_c == doctest::Approx(std::log(4.0 * kPi)).epsilon(1e-9));
}

TEST_CASE("moment bounds from NormTerms") {
  for (double kappa : {1.0, 10.0, 100.0}) {
    for (double e : {0.0, 0.1, 0.5, 0.9}) {
      const NormTerms t = norm_terms(kappa, 0.5 * kappa * e);
      const double r1 = std::exp(t.log_c_k - t.log_c);
      CHECK(r1 > 0.0);
      CHECK(r1 < 1.0);
      // trace of E[yy^T] = 1: lambda1 + lambda2 + lambda3 with
      // lambda1 = c_kk/c, lambda2+lambda3 = 1 - c_kk/c identically; check
      // PSD Fisher diagonal c*c_kk >= c_k^2 instead
      CHECK(t.log_c + t.log_c_kk >= 2.0 * t.log_c_k - 1e-10);
      const double ckk_c = std::exp(t.log_c_kk - t.log_c);
      const double cb_c = std::isinf(t.log_c_b) ? 0.0 : std::exp(t.log_c_b - t.log_c);
      const double l2 = 0.5 * (1.0 - ckk_c + cb_c);
      const double l3 = 0.5 * (1.0 - ckk_c - cb_c);
      CHECK(l2 > 0.0);
      CHECK(l3 > 0.0);
      CHECK(ckk_c + l2 + l3 == doctest::Approx(1.0).epsilon(1e-12));
    }
  }
}
