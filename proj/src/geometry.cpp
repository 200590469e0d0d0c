#include "fb5/geometry.hpp"

#include <cmath>

namespace fb5 {

double wrap_two_pi(double angle) {
  double w = std::fmod(angle, kTwoPi);
  if (w < 0) w += kTwoPi;
  if (w >= kTwoPi) w = 0;  // fmod rounding at the seam
  return w;
}

UnitVector3::UnitVector3(const Vec3& v) {
  const double n = v.norm();
  if (!(n > 1e-300)) {
    throw std::invalid_argument("UnitVector3: zero-length vector");
  }
  v_ = v / n;
}

SphericalAngles::SphericalAngles(double theta_, double phi_)
    : theta(theta_), phi(wrap_two_pi(phi_)) {
  if (!(theta >= 0 && theta <= kPi)) {
    throw std::invalid_argument("SphericalAngles: theta outside [0,pi]");
  }
}

OrientationAngles::OrientationAngles(double psi_, double alpha_, double eta_)
    : psi(psi_), alpha(alpha_), eta(wrap_two_pi(eta_)) {
  if (!(psi >= 0 && psi <= kPi)) {
    throw std::invalid_argument("OrientationAngles: psi outside [0,pi]");
  }
  if (!(alpha >= 0 && alpha <= kPi)) {
    throw std::invalid_argument("OrientationAngles: alpha outside [0,pi]");
  }
}

Rotation3::Rotation3(const Mat3& m) : m_(m) {
  if ((m.transpose() * m - Mat3::Identity()).cwiseAbs().maxCoeff() > 1e-10) {
    throw std::invalid_argument("Rotation3: matrix is not orthogonal");
  }
  if (std::abs(m.determinant() - 1.0) > 1e-10) {
    throw std::invalid_argument("Rotation3: determinant is not +1");
  }
}

Mat3 rot_psi(double psi) {
  const double c = std::cos(psi), s = std::sin(psi);
  Mat3 r;
  r << 1, 0, 0,
       0, c, s,
       0, -s, c;
  return r;
}

Mat3 rot_eta(double eta) { return rot_psi(eta); }

Mat3 rot_alpha(double alpha) {
  const double c = std::cos(alpha), s = std::sin(alpha);
  Mat3 r;
  r << c, s, 0,
       -s, c, 0,
       0, 0, 1;
  return r;
}

AxisTriple axes_from_angles(double psi, double alpha, double eta) {
  const double cp = std::cos(psi), sp = std::sin(psi);
  const double ca = std::cos(alpha), sa = std::sin(alpha);
  const double ce = std::cos(eta), se = std::sin(eta);
  AxisTriple t;
  t.gamma1 = Vec3(ca, sa * ce, sa * se);
  t.gamma2 = Vec3(-cp * sa, cp * ca * ce - sp * se, cp * ca * se + sp * ce);
  t.gamma3 = Vec3(sp * sa, -sp * ca * ce - cp * se, -sp * ca * se + cp * ce);
  return t;
}

AxisTriple axes_from_angles(const OrientationAngles& a) {
  return axes_from_angles(a.psi, a.alpha, a.eta);
}

AnglesFromAxesResult angles_from_axes(const Mat3& q) {
  AnglesFromAxesResult out;
  const Vec3 g1 = q.col(0), g2 = q.col(1), g3 = q.col(2);

  const double cos_alpha = std::clamp(g1.x(), -1.0, 1.0);
  const double sin_alpha = std::hypot(g1.y(), g1.z());

  if (sin_alpha < 1e-12) {
    // gamma1 at a pole of X1: only the combined spin about X1 is
    // identifiable. Report alpha exactly 0 (or pi), psi := 0, and fold
    // the spin into eta.
    out.gimbal_degenerate = true;
    const bool north = cos_alpha > 0;
    double eta;
    if (north) {
      // gamma2 = (0, cos eta, sin eta)
      eta = std::atan2(g2.z(), g2.y());
    } else {
      // gamma2 = (0, -cos eta, -sin eta)
      eta = std::atan2(-g2.z(), -g2.y());
    }
    out.angles = OrientationAngles(0.0, north ? 0.0 : kPi, wrap_two_pi(eta));
    return out;
  }

  const double alpha = std::acos(cos_alpha);
  const double eta = wrap_two_pi(std::atan2(g1.z(), g1.y()));
  // gamma2.x = -cos(psi) sin(alpha), gamma3.x = sin(psi) sin(alpha)
  double psi = std::atan2(g3.x(), -g2.x());
  if (psi < 0) psi += kPi;  // FB5 symmetry: psi+pi flips gamma2, gamma3
  if (psi >= kPi) psi -= kPi;
  out.angles = OrientationAngles(psi, alpha, eta);
  return out;
}

AnglesFromAxesResult angles_from_axes(const Rotation3& q) {
  return angles_from_axes(q.matrix());
}

UnitVector3 spherical_to_cartesian(const SphericalAngles& a) {
  const double ct = std::cos(a.theta), st = std::sin(a.theta);
  return UnitVector3(Vec3(ct, st * std::cos(a.phi), st * std::sin(a.phi)));
}

SphericalAngles cartesian_to_spherical(const UnitVector3& v) {
  const double theta = std::acos(std::clamp(v.x(), -1.0, 1.0));
  const double st = std::hypot(v.y(), v.z());
  const double phi = st < 1e-14 ? 0.0 : wrap_two_pi(std::atan2(v.z(), v.y()));
  return SphericalAngles(theta, phi);
}

}  // namespace fb5
