#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numeric>

#include "fb5/distributions.hpp"
#include "fb5/special.hpp"

using namespace fb5;

namespace {

KentParams make_params(double psi, double alpha, double eta, double kappa,
                       double ecc) {
  return KentParams(OrientationAngles(psi, alpha, eta), kappa,
                    0.5 * kappa * ecc);
}

// 16-point Gauss-Legendre nodes/weights on [-1, 1]
void gauss16(double* x, double* w) {
  static const double xs[8] = {0.0950125098376374, 0.2816035507792589,
                               0.4580167776572274, 0.6178762444026438,
                               0.7554044083550030, 0.8656312023878318,
                               0.9445750230732326, 0.9894009349916499};
  static const double ws[8] = {0.1894506104550685, 0.1826034150449236,
                               0.1691565193950025, 0.1495959888165767,
                               0.1246289712555339, 0.0951585116824928,
                               0.0622535239386479, 0.0271524594117541};
  for (int i = 0; i < 8; ++i) {
    x[8 + i] = xs[i];
    x[7 - i] = -xs[i];
    w[8 + i] = ws[i];
    w[7 - i] = ws[i];
  }
}

// integral of the density over [t0,t1] x [p0,p1] in (t = x1, phi)
double cell_probability(const KentParams& p, double t0, double t1, double p0,
                        double p1) {
  double xs[16], ws[16];
  gauss16(xs, ws);
  double total = 0;
  for (int i = 0; i < 16; ++i) {
    const double t = 0.5 * (t0 + t1) + 0.5 * (t1 - t0) * xs[i];
    const double st = std::sqrt(std::max(0.0, 1.0 - t * t));
    for (int j = 0; j < 16; ++j) {
      const double phi = 0.5 * (p0 + p1) + 0.5 * (p1 - p0) * xs[j];
      const Vec3 x(t, st * std::cos(phi), st * std::sin(phi));
      total += ws[i] * ws[j] * std::exp(kent_log_density(x, p));
    }
  }
  return total * 0.25 * (t1 - t0) * (p1 - p0);
}

}  // namespace

TEST_CASE("kent density with beta = 0 equals the vMF density") {
  const KentParams kp = make_params(0.4, 1.0, 2.0, 7.0, 0.0);
  const VmfParams vp(UnitVector3(kp.gamma1()), 7.0);
  Rng rng(5);
  for (int i = 0; i < 50; ++i) {
    const Vec3 x = vmf_sample(VmfParams(UnitVector3(0, 0, 1), 0.0), 1, rng)[0];
    CHECK(kent_log_density(x, kp) ==
          doctest::Approx(vmf_log_density(x, vp)).epsilon(1e-12));
  }
}

TEST_CASE("density at the mean axis is kappa - log c") {
  const KentParams p = make_params(0.3, 0.8, 1.5, 10.0, 0.5);
  CHECK(kent_log_density(p.gamma1(), p) ==
        doctest::Approx(10.0 - p.log_c()).epsilon(1e-12));
}

TEST_CASE("density integrates to one (Monte Carlo on the sphere)") {
  const KentParams p = make_params(0.3, 0.8, 1.5, 10.0, 0.5);
  Rng rng(17);
  const std::size_t n = 1000000;
  double sum = 0, sum_sq = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double t = 2.0 * rng.uniform() - 1.0;
    const double phi = kTwoPi * rng.uniform();
    const double st = std::sqrt(std::max(0.0, 1.0 - t * t));
    const Vec3 x(t, st * std::cos(phi), st * std::sin(phi));
    const double f = std::exp(kent_log_density(x, p)) * 4.0 * kPi;
    sum += f;
    sum_sq += f * f;
  }
  const double mean = sum / n;
  const double se = std::sqrt((sum_sq / n - mean * mean) / n);
  CHECK(std::abs(mean - 1.0) < 3.0 * se);
}

TEST_CASE("density ratio along major and minor axes") {
  const KentParams p = make_params(0.3, 0.8, 1.5, 10.0, 0.5);
  const double beta = p.beta();
  CHECK(kent_log_density(p.gamma2(), p) - kent_log_density(p.gamma3(), p) ==
        doctest::Approx(2.0 * beta).epsilon(1e-10));
}

TEST_CASE("rotation equivariance of the density") {
  const KentParams p = make_params(0.3, 0.8, 1.5, 10.0, 0.5);
  // rotate both the datum and the parameters by the same rotation
  const Mat3 r = axes_from_angles(1.1, 0.6, 0.9).as_matrix();
  const Mat3 q2 = r * p.q_matrix();
  const auto rec = angles_from_axes(q2);
  const KentParams p2(rec.angles, p.kappa(), p.beta());
  Rng rng(23);
  for (int i = 0; i < 100; ++i) {
    const double t = 2.0 * rng.uniform() - 1.0;
    const double phi = kTwoPi * rng.uniform();
    const double st = std::sqrt(std::max(0.0, 1.0 - t * t));
    const Vec3 x(t, st * std::cos(phi), st * std::sin(phi));
    CHECK(kent_log_density(r * x, p2) ==
          doctest::Approx(kent_log_density(x, p)).epsilon(1e-10));
  }
}

TEST_CASE("moments: vMF reduction and uniform limit") {
  // beta = 0, kappa = 10: |E[x]| = coth(10) - 1/10
  const KentParams p = make_params(0.0, 0.8, 1.5, 10.0, 0.0);
  const KentMoments m = kent_moments(p);
  const double expect = 1.0 / std::tanh(10.0) - 0.1;
  CHECK(m.mean_vec.norm() == doctest::Approx(expect).epsilon(1e-10));
  CHECK(expect == doctest::Approx(0.9000000041223073).epsilon(1e-12));

  // kappa -> 0: E[xx^T] -> I/3
  const KentParams u = make_params(0.0, 0.8, 1.5, 1e-7, 0.0);
  const KentMoments mu = kent_moments(u);
  CHECK((mu.second_moment - Mat3::Identity() / 3.0).cwiseAbs().maxCoeff() <
        1e-6);
}

TEST_CASE("moment matrix properties") {
  const KentParams p = make_params(0.3, 0.8, 1.5, 10.0, 0.5);
  const KentMoments m = kent_moments(p);
  CHECK(m.second_moment.trace() == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(m.lambda1 > m.lambda2);
  CHECK(m.lambda2 > m.lambda3);
  CHECK(m.lambda3 > 0.0);
  CHECK((m.mean_vec - std::exp(norm_terms(10.0, 2.5).log_c_k -
                               norm_terms(10.0, 2.5).log_c) *
                          p.gamma1())
            .norm() < 1e-12);
}

TEST_CASE("sampler moments match analytic moments") {
  Rng rng(41);
  for (double kappa : {10.0, 100.0}) {
    for (double e : {0.5, 0.9}) {
      const KentParams p = make_params(0.77, 1.05, 2.3, kappa, e);
      const auto xs = kent_sample(p, 100000, rng);
      Vec3 mean = Vec3::Zero();
      Mat3 sec = Mat3::Zero();
      for (const auto& x : xs) {
        mean += x;
        sec += x * x.transpose();
      }
      mean /= double(xs.size());
      sec /= double(xs.size());
      const KentMoments m = kent_moments(p);
      CHECK((mean - m.mean_vec).cwiseAbs().maxCoeff() < 0.01);
      CHECK((sec - m.second_moment).cwiseAbs().maxCoeff() < 0.01);
    }
  }
}

TEST_CASE("sampler lambda gap at high eccentricity") {
  const KentParams p = make_params(0.77, 1.05, 2.3, 100.0, 0.9);
  const auto xs = kent_sample(p, 100000, 999);
  // empirical lambda2 - lambda3 in the distribution frame
  Mat3 sec = Mat3::Zero();
  for (const auto& x : xs) sec += x * x.transpose();
  sec /= double(xs.size());
  const Mat3 q = p.q_matrix();
  const Mat3 lam = q.transpose() * sec * q;
  const KentMoments m = kent_moments(p);
  CHECK(std::abs((lam(1, 1) - lam(2, 2)) - (m.lambda2 - m.lambda3)) < 0.01);
}

TEST_CASE("sampler determinism under a fixed seed") {
  const KentParams p = make_params(0.3, 0.8, 1.5, 10.0, 0.5);
  const auto a = kent_sample(p, 100, 1234);
  const auto b = kent_sample(p, 100, 1234);
  REQUIRE(a.size() == b.size());
  for (size_t i = 0; i < a.size(); ++i) CHECK((a[i] - b[i]).norm() == 0.0);
  const auto c = kent_sample(p, 100, 1235);
  CHECK((a[0] - c[0]).norm() > 0.0);
}

TEST_CASE("sampler chi-squared goodness of fit") {
  // equal-area partition: 10 bands in t, 5 sectors in phi; cells with tiny
  // expectation merged into one bucket
  for (double kappa : {1.0, 10.0}) {
    for (double e : {0.1, 0.9}) {
      const KentParams p = make_params(0.77, 1.05, 2.3, kappa, e);
      const std::size_t n = 100000;
      const auto xs = kent_sample(p, n, 777);

      const int nb = 10, ns = 5;
      std::vector<double> expected(nb * ns);
      std::vector<double> observed(nb * ns, 0.0);
      for (int b = 0; b < nb; ++b) {
        const double t0 = -1.0 + 2.0 * b / nb;
        const double t1 = -1.0 + 2.0 * (b + 1) / nb;
        for (int s = 0; s < ns; ++s) {
          expected[b * ns + s] =
              n * cell_probability(p, t0, t1, kTwoPi * s / ns,
                                   kTwoPi * (s + 1) / ns);
        }
      }
      for (const auto& x : xs) {
        int b = std::min(nb - 1, int((x.x() + 1.0) / 2.0 * nb));
        double phi = std::atan2(x.z(), x.y());
        if (phi < 0) phi += kTwoPi;
        int s = std::min(ns - 1, int(phi / kTwoPi * ns));
        observed[b * ns + s] += 1.0;
      }
      // merge low-expectation cells
      double chi2 = 0, rest_exp = 0, rest_obs = 0;
      int dof = -1;
      for (int c = 0; c < nb * ns; ++c) {
        if (expected[c] < 10.0) {
          rest_exp += expected[c];
          rest_obs += observed[c];
        } else {
          chi2 += (observed[c] - expected[c]) * (observed[c] - expected[c]) /
                  expected[c];
          ++dof;
        }
      }
      if (rest_exp > 10.0) {
        chi2 += (rest_obs - rest_exp) * (rest_obs - rest_exp) / rest_exp;
        ++dof;
      }
      REQUIRE(dof >= 1);
      const double pval = chi_squared_sf(chi2, dof);
      CHECK(pval > 0.001);
    }
  }
}

TEST_CASE("KL divergence properties") {
  const KentParams a = make_params(0.3, 0.8, 1.5, 10.0, 0.5);
  CHECK(kent_kl(a, a) == doctest::Approx(0.0).epsilon(1e-10));

  Rng rng(99);
  for (int i = 0; i < 100; ++i) {
    const KentParams x = make_params(rng.uniform() * kPi, rng.uniform() * kPi,
                                     rng.uniform() * kTwoPi,
                                     0.5 + 20.0 * rng.uniform(),
                                     0.9 * rng.uniform());
    const KentParams y = make_params(rng.uniform() * kPi, rng.uniform() * kPi,
                                     rng.uniform() * kTwoPi,
                                     0.5 + 20.0 * rng.uniform(),
                                     0.9 * rng.uniform());
    CHECK(kent_kl(x, y) >= -1e-10);
  }
}

TEST_CASE("KL reduces to the vMF formula at beta = 0") {
  const KentParams a = make_params(0.0, 0.8, 1.5, 10.0, 0.0);
  const KentParams b = make_params(0.0, 1.2, 2.5, 4.0, 0.0);
  const VmfParams va(UnitVector3(a.gamma1()), 10.0);
  const VmfParams vb(UnitVector3(b.gamma1()), 4.0);
  CHECK(kent_kl(a, b) == doctest::Approx(vmf_kl(va, vb)).epsilon(1e-9));
}

TEST_CASE("vMF basics") {
  // kappa = 0 is the uniform density
  const VmfParams u(UnitVector3(0, 0, 1), 0.0);
  CHECK(vmf_log_density(Vec3(1, 0, 0), u) ==
        doctest::Approx(std::log(1.0 / (4.0 * kPi))).epsilon(1e-12));
  CHECK(vmf_kl(u, u) == doctest::Approx(0.0));

  // mean resultant at kappa = 10
  CHECK(vmf_mean_resultant(10.0) == doctest::Approx(0.9000000041223073).epsilon(1e-12));
}

TEST_CASE("vMF sampler moments") {
  const VmfParams p(UnitVector3(1, 2, -1), 10.0);
  const auto xs = vmf_sample(p, 100000, 31);
  Vec3 mean = Vec3::Zero();
  for (const auto& x : xs) mean += x;
  mean /= double(xs.size());
  const VmfMoments m = vmf_moment(p);
  CHECK((mean - m.mean_vec).cwiseAbs().maxCoeff() < 0.01);
  CHECK(m.second_moment.trace() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("parameter validation") {
  CHECK_THROWS_AS(make_params(0.3, 0.8, 1.5, -1.0, 0.1), std::invalid_argument);
  CHECK_THROWS_AS(make_params(0.3, 0.8, 1.5, 10.0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(KentParams(OrientationAngles(0.3, 0.8, 1.5), 10.0, -0.5),
                  std::invalid_argument);
}
