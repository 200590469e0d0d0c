#include "fb5/distributions.hpp"

#include <cmath>

namespace fb5 {

KentParams::KentParams(const OrientationAngles& angles, double kappa,
                       double beta)
    : angles_(angles), kappa_(kappa), beta_(beta) {
  if (!(kappa_ > 0)) throw std::invalid_argument("KentParams: kappa must be > 0");
  if (!(beta_ >= 0)) throw std::invalid_argument("KentParams: beta must be >= 0");
  if (!(2.0 * beta_ / kappa_ < kMaxEccentricity + 1e-15)) {
    throw std::invalid_argument("KentParams: beta must be < kappa/2");
  }
  axes_ = axes_from_angles(angles_);
  log_c_ = norm_terms(kappa_, beta_).log_c;
}

VmfParams::VmfParams(const UnitVector3& mean_, double kappa_)
    : mean(mean_), kappa(kappa_) {
  if (!(kappa >= 0)) throw std::invalid_argument("VmfParams: kappa must be >= 0");
}

double kent_log_density(const Vec3& x, const KentParams& p) {
  const double d1 = p.gamma1().dot(x);
  const double d2 = p.gamma2().dot(x);
  const double d3 = p.gamma3().dot(x);
  return p.kappa() * d1 + p.beta() * (d2 * d2 - d3 * d3) - p.log_c();
}

KentMoments kent_moments(const KentParams& p, const NormTerms& t) {
  KentMoments m;
  const double r1 = std::exp(t.log_c_k - t.log_c);
  const double ckk_c = std::exp(t.log_c_kk - t.log_c);
  const double cb_c =
      std::isinf(t.log_c_b) ? 0.0 : std::exp(t.log_c_b - t.log_c);
  m.lambda1 = ckk_c;
  m.lambda2 = 0.5 * (1.0 - ckk_c + cb_c);
  m.lambda3 = 0.5 * (1.0 - ckk_c - cb_c);
  m.mean_vec = r1 * p.gamma1();
  const Mat3 q = p.q_matrix();
  m.second_moment =
      q * Vec3(m.lambda1, m.lambda2, m.lambda3).asDiagonal() * q.transpose();
  return m;
}

KentMoments kent_moments(const KentParams& p) {
  return kent_moments(p, norm_terms(p.kappa(), p.beta()));
}

double kent_kl(const KentParams& a, const KentParams& b) {
  const KentMoments ma = kent_moments(a);
  const Vec3& ex = ma.mean_vec;
  const Mat3& exx = ma.second_moment;
  double kl = b.log_c() - a.log_c();
  kl += (a.kappa() * a.gamma1() - b.kappa() * b.gamma1()).dot(ex);
  kl += a.beta() * a.gamma2().dot(exx * a.gamma2());
  kl -= b.beta() * b.gamma2().dot(exx * b.gamma2());
  kl -= a.beta() * a.gamma3().dot(exx * a.gamma3());
  kl += b.beta() * b.gamma3().dot(exx * b.gamma3());
  return kl;
}

namespace {

// cos(colatitude) about the mean for vMF(kappa), by exact inverse CDF.
double vmf_cos_colat(double kappa, Rng& rng) {
  const double u = rng.uniform_pos();
  if (kappa < 1e-12) return 2.0 * u - 1.0;
  // F^{-1}(u) = 1 + log(u + (1-u) e^{-2k}) / k
  return 1.0 + std::log(u + (1.0 - u) * std::exp(-2.0 * kappa)) / kappa;
}

}  // namespace

std::vector<Vec3> kent_sample(const KentParams& p, std::size_t n, Rng& rng) {
  std::vector<Vec3> out;
  out.reserve(n);
  const double kappa = p.kappa(), beta = p.beta();
  const double kappa_env = std::max(kappa - 2.0 * beta, 1e-12);
  const Mat3 q = p.q_matrix();
  while (out.size() < n) {
    const double t = vmf_cos_colat(kappa_env, rng);
    const double phi = kTwoPi * rng.uniform();
    const double st = std::sqrt(std::max(0.0, 1.0 - t * t));
    const double y2 = st * std::cos(phi);
    const double y3 = st * std::sin(phi);
    if (beta > 0) {
      const double log_accept = 2.0 * beta * (t - 1.0) + beta * (y2 * y2 - y3 * y3);
      if (std::log(rng.uniform_pos()) >= log_accept) continue;
    }
    out.emplace_back(q * Vec3(t, y2, y3));
  }
  return out;
}

std::vector<Vec3> kent_sample(const KentParams& p, std::size_t n,
                              std::uint64_t seed) {
  Rng rng(seed);
  return kent_sample(p, n, rng);
}

double vmf_log_norm(double kappa) {
  if (kappa < 1e-8) {
    // 4*pi*sinh(k)/k -> 4*pi as k -> 0
    return std::log(4.0 * kPi) + std::log1p(kappa * kappa / 6.0);
  }
  return std::log(4.0 * kPi) + kappa + std::log(-std::expm1(-2.0 * kappa)) -
         std::log(2.0 * kappa);
}

double vmf_log_density(const Vec3& x, const VmfParams& p) {
  return p.kappa * p.mean.vec().dot(x) - vmf_log_norm(p.kappa);
}

double vmf_mean_resultant(double kappa) {
  if (kappa < 1e-6) return kappa / 3.0 * (1.0 - kappa * kappa / 15.0);
  return 1.0 / std::tanh(kappa) - 1.0 / kappa;
}

double vmf_kl(const VmfParams& a, const VmfParams& b) {
  const Vec3 ex = vmf_mean_resultant(a.kappa) * a.mean.vec();
  return vmf_log_norm(b.kappa) - vmf_log_norm(a.kappa) +
         (a.kappa * a.mean.vec() - b.kappa * b.mean.vec()).dot(ex);
}

VmfMoments vmf_moment(const VmfParams& p) {
  VmfMoments m;
  const double a = vmf_mean_resultant(p.kappa);
  const Vec3 mu = p.mean.vec();
  m.mean_vec = a * mu;
  const double a_over_k = p.kappa < 1e-6 ? (1.0 / 3.0) : a / p.kappa;
  m.second_moment = a_over_k * Mat3::Identity() +
                    (1.0 - 3.0 * a_over_k) * mu * mu.transpose();
  return m;
}

void tangent_basis(const Vec3& axis, Vec3& u, Vec3& v) {
  const Vec3 ref =
      std::abs(axis.x()) < 0.9 ? Vec3(1, 0, 0) : Vec3(0, 1, 0);
  u = axis.cross(ref).normalized();
  v = axis.cross(u);
}

std::vector<Vec3> vmf_sample(const VmfParams& p, std::size_t n, Rng& rng) {
  std::vector<Vec3> out;
  out.reserve(n);
  const Vec3 mu = p.mean.vec();
  Vec3 u, v;
  tangent_basis(mu, u, v);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = vmf_cos_colat(p.kappa, rng);
    const double phi = kTwoPi * rng.uniform();
    const double st = std::sqrt(std::max(0.0, 1.0 - t * t));
    out.emplace_back(t * mu + st * (std::cos(phi) * u + std::sin(phi) * v));
  }
  return out;
}

std::vector<Vec3> vmf_sample(const VmfParams& p, std::size_t n,
                             std::uint64_t seed) {
  Rng rng(seed);
  return vmf_sample(p, n, rng);
}

KentParams vmf_as_kent(const VmfParams& p) {
  const auto sph = cartesian_to_spherical(p.mean);
  const double kappa = std::max(p.kappa, 1e-8);
  return KentParams(OrientationAngles(0.0, sph.theta, sph.phi), kappa, 0.0);
}

}  // namespace fb5
