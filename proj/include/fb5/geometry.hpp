#pragma once

#include <Eigen/Dense>
#include <stdexcept>

namespace fb5 {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Mat2 = Eigen::Matrix2d;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kTwoPi = 2.0 * kPi;

/// Wraps an angle into [0, 2*pi).
double wrap_two_pi(double angle);

/// Unit vector on the 2-sphere. Normalized on construction; rejects
/// near-zero input.
class UnitVector3 {
public:
  UnitVector3() : v_(1, 0, 0) {}
  explicit UnitVector3(const Vec3& v);
  UnitVector3(double x, double y, double z) : UnitVector3(Vec3(x, y, z)) {}

  const Vec3& vec() const { return v_; }
  operator const Vec3&() const { return v_; }
  double x() const { return v_.x(); }
  double y() const { return v_.y(); }
  double z() const { return v_.z(); }

private:
  Vec3 v_;
};

/// Co-latitude theta in [0,pi] measured from the X1 axis, longitude phi
/// in [0,2pi). The pole is X1 = (1,0,0): x1 = cos(theta).
struct SphericalAngles {
  double theta = 0;
  double phi = 0;

  SphericalAngles() = default;
  SphericalAngles(double theta_, double phi_);
};

/// The three rotation angles (psi, alpha, eta) tying the axis triple
/// (gamma1, gamma2, gamma3) to the standard basis. (alpha, eta) are the
/// co-latitude and longitude of gamma1; psi spins the major/minor axes
/// about it.
struct OrientationAngles {
  double psi = 0;    // [0, pi]
  double alpha = 0;  // [0, pi]
  double eta = 0;    // [0, 2*pi)

  OrientationAngles() = default;
  OrientationAngles(double psi_, double alpha_, double eta_);
};

/// Proper rotation matrix (orthogonal, det +1). Validated on construction.
class Rotation3 {
public:
  Rotation3() : m_(Mat3::Identity()) {}
  explicit Rotation3(const Mat3& m);

  const Mat3& matrix() const { return m_; }
  Vec3 col(int i) const { return m_.col(i); }

private:
  Mat3 m_;
};

struct AxisTriple {
  Vec3 gamma1, gamma2, gamma3;

  Mat3 as_matrix() const {  // Q = (gamma1, gamma2, gamma3)
    Mat3 q;
    q.col(0) = gamma1;
    q.col(1) = gamma2;
    q.col(2) = gamma3;
    return q;
  }
};

/// Axes (gamma1, gamma2, gamma3) from the rotation angles. Defined for all
/// real angle values (periodic extension); canonical ranges are those of
/// OrientationAngles.
AxisTriple axes_from_angles(double psi, double alpha, double eta);
AxisTriple axes_from_angles(const OrientationAngles& a);

/// Elementary rotations about X1 (psi, eta) and X3 (alpha); the net
/// rotation R = R_psi * R_alpha * R_eta maps gamma_i onto X_i.
Mat3 rot_psi(double psi);
Mat3 rot_alpha(double alpha);
Mat3 rot_eta(double eta);

struct AnglesFromAxesResult {
  OrientationAngles angles;
  // True when sin(alpha) < 1e-12: psi and eta are jointly unidentifiable;
  // the convention psi = 0 is applied and the combined spin is folded
  // into eta.
  bool gimbal_degenerate = false;
};

/// Inverse of axes_from_angles. The recovered psi lies in [0, pi); a triple
/// whose effective psi is in (pi, 2pi) is reported with gamma2/gamma3
/// negated, which leaves any FB5 density unchanged.
AnglesFromAxesResult angles_from_axes(const Rotation3& q);
AnglesFromAxesResult angles_from_axes(const Mat3& q);

UnitVector3 spherical_to_cartesian(const SphericalAngles& a);
SphericalAngles cartesian_to_spherical(const UnitVector3& v);

}  // namespace fb5
