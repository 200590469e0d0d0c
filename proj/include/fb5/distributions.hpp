#pragma once

#include <vector>

#include "fb5/geometry.hpp"
#include "fb5/norm_series.hpp"
#include "fb5/rng.hpp"

namespace fb5 {

/// Largest admissible eccentricity; beta < kappa/2 * (1 - 1e-9) keeps the
/// density unimodal and the series in their convergence domain.
inline constexpr double kMaxEccentricity = 1.0 - 1e-9;

/// FB5 (Kent) parameters: orientation angles plus the scalar pair
/// (kappa, beta). The orthonormal axes are derived once on construction.
class KentParams {
public:
  KentParams() : KentParams(OrientationAngles{}, 1.0, 0.0) {}
  KentParams(const OrientationAngles& angles, double kappa, double beta);

  const OrientationAngles& angles() const { return angles_; }
  double kappa() const { return kappa_; }
  double beta() const { return beta_; }
  double eccentricity() const { return 2.0 * beta_ / kappa_; }
  const Vec3& gamma1() const { return axes_.gamma1; }
  const Vec3& gamma2() const { return axes_.gamma2; }
  const Vec3& gamma3() const { return axes_.gamma3; }
  const AxisTriple& axes() const { return axes_; }
  Mat3 q_matrix() const { return axes_.as_matrix(); }
  double log_c() const { return log_c_; }

private:
  OrientationAngles angles_;
  double kappa_;
  double beta_;
  AxisTriple axes_;
  double log_c_;
};

/// von Mises-Fisher parameters on the 2-sphere.
struct VmfParams {
  UnitVector3 mean;
  double kappa = 0;  // >= 0; 0 is the uniform distribution

  VmfParams() = default;
  VmfParams(const UnitVector3& mean_, double kappa_);
};

struct KentMoments {
  Vec3 mean_vec;      // E[x] = (c_k/c) gamma1
  Mat3 second_moment; // E[x x^T] = Q diag(lambda) Q^T
  double lambda1 = 0, lambda2 = 0, lambda3 = 0;
};

double kent_log_density(const Vec3& x, const KentParams& p);
KentMoments kent_moments(const KentParams& p);
KentMoments kent_moments(const KentParams& p, const NormTerms& terms);

/// KL divergence D(a || b) in nats, from the closed form in terms of the
/// first two moments of a.
double kent_kl(const KentParams& a, const KentParams& b);

/// i.i.d. FB5 draws. Rejection sampling in the standard frame against a
/// vMF envelope of concentration kappa - 2*beta, which admits the exact
/// bound  log accept = 2*beta*(t - 1) + beta*(y2^2 - y3^2) <= 0.
std::vector<Vec3> kent_sample(const KentParams& p, std::size_t n, Rng& rng);
std::vector<Vec3> kent_sample(const KentParams& p, std::size_t n,
                              std::uint64_t seed);

double vmf_log_density(const Vec3& x, const VmfParams& p);
double vmf_kl(const VmfParams& a, const VmfParams& b);

struct VmfMoments {
  Vec3 mean_vec;
  Mat3 second_moment;
};
VmfMoments vmf_moment(const VmfParams& p);

/// Exact vMF sampling: inverse-CDF colatitude about the mean plus a
/// uniform azimuth in the tangent plane.
std::vector<Vec3> vmf_sample(const VmfParams& p, std::size_t n, Rng& rng);
std::vector<Vec3> vmf_sample(const VmfParams& p, std::size_t n,
                             std::uint64_t seed);

/// Mean resultant length A(kappa) = coth(kappa) - 1/kappa (A(0) = 0).
double vmf_mean_resultant(double kappa);

/// log of the vMF normalizer c_v(kappa) = 4 pi sinh(kappa)/kappa.
double vmf_log_norm(double kappa);

/// Orthonormal basis completion: two unit vectors spanning the plane
/// orthogonal to axis.
void tangent_basis(const Vec3& axis, Vec3& u, Vec3& v);

/// Kent parameters with beta = 0 equivalent to the given vMF.
KentParams vmf_as_kent(const VmfParams& p);

}  // namespace fb5
