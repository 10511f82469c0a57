// Copyright 2026 The uwbimu Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Quaternion and rotation algebra. Quaternions are scalar-first (q0, q1, q2, q3),
// Hamilton product, and R{q} maps IMU-frame vectors into the world frame.

#include <cmath>

#include <Eigen/Core>
#include <Eigen/Dense>

#include "uwbimu/errors.hpp"

namespace uwbimu {

using Vec3 = Eigen::Vector3d;
using Vec4 = Eigen::Vector4d;
using Mat3 = Eigen::Matrix3d;
using Mat4 = Eigen::Matrix4d;
using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

template <typename S> using Vec3T = Eigen::Matrix<S, 3, 1>;
template <typename S> using Vec4T = Eigen::Matrix<S, 4, 1>;
template <typename S> using Mat3T = Eigen::Matrix<S, 3, 3>;

/// Normalization slack accepted by operations that require a unit quaternion.
inline constexpr double kQuaternionNormTolerance = 1e-6;

class UnitQuaternion {
public:
  UnitQuaternion() = default;
  UnitQuaternion(double q0, double q1, double q2, double q3) : q_(q0, q1, q2, q3) {}
  explicit UnitQuaternion(const Vec4& q) : q_(q) {}

  static UnitQuaternion identity() { return {}; }

  /// Exponential map of a rotation vector (axis * angle).
  static UnitQuaternion exp(const Vec3& rotation_vector) {
    const double angle = rotation_vector.norm();
    if (angle < 1e-12) {
      UnitQuaternion q(1.0, 0.5 * rotation_vector.x(), 0.5 * rotation_vector.y(),
                       0.5 * rotation_vector.z());
      return q.normalized();
    }
    const double s = std::sin(0.5 * angle) / angle;
    return {std::cos(0.5 * angle), s * rotation_vector.x(), s * rotation_vector.y(),
            s * rotation_vector.z()};
  }

  static UnitQuaternion from_axis_angle(const Vec3& axis, double angle) {
    return exp(axis.normalized() * angle);
  }

  double q0() const { return q_[0]; }
  double q1() const { return q_[1]; }
  double q2() const { return q_[2]; }
  double q3() const { return q_[3]; }
  const Vec4& coeffs() const { return q_; }

  double norm() const { return q_.norm(); }
  bool is_normalized(double tol = kQuaternionNormTolerance) const {
    return std::abs(q_.squaredNorm() - 1.0) <= tol;
  }
  UnitQuaternion normalized() const { return UnitQuaternion(Vec4(q_ / q_.norm())); }
  void normalize() { q_ /= q_.norm(); }

  UnitQuaternion conjugate() const { return {q_[0], -q_[1], -q_[2], -q_[3]}; }

  /// Hamilton product.
  UnitQuaternion operator*(const UnitQuaternion& o) const {
    const double a0 = q_[0], a1 = q_[1], a2 = q_[2], a3 = q_[3];
    const double b0 = o.q_[0], b1 = o.q_[1], b2 = o.q_[2], b3 = o.q_[3];
    return {a0 * b0 - a1 * b1 - a2 * b2 - a3 * b3, a0 * b1 + a1 * b0 + a2 * b3 - a3 * b2,
            a0 * b2 - a1 * b3 + a2 * b0 + a3 * b1, a0 * b3 + a1 * b2 - a2 * b1 + a3 * b0};
  }

  /// Logarithm map; returns the rotation vector with angle in [0, pi].
  Vec3 log() const {
    UnitQuaternion q = q_[0] < 0.0 ? UnitQuaternion(Vec4(-q_)) : *this;
    const Vec3 v(q.q1(), q.q2(), q.q3());
    const double vn = v.norm();
    if (vn < 1e-12) return 2.0 * v;
    return 2.0 * std::atan2(vn, q.q0()) * v / vn;
  }

private:
  Vec4 q_{1.0, 0.0, 0.0, 0.0};
};

template <typename S>
Mat3T<S> skew(const Vec3T<S>& v) {
  Mat3T<S> m;
  m << S(0.0), -v.z(), v.y(),
       v.z(), S(0.0), -v.x(),
      -v.y(), v.x(), S(0.0);
  return m;
}

inline Mat3 skew(const Vec3& v) { return skew<double>(v); }

/// Direction cosine matrix of an unconstrained 4-vector, using the
/// homogeneous quadratic form. Equal to the usual R{q} on the unit sphere;
/// off the sphere it scales as |q|^2. Derivatives w.r.t. the four raw
/// quaternion coordinates are taken through this form.
template <typename S>
Mat3T<S> rotation_matrix_ambient(const Vec4T<S>& q) {
  const S q0 = q[0], q1 = q[1], q2 = q[2], q3 = q[3];
  const S two(2.0);
  Mat3T<S> r;
  r << q0 * q0 + q1 * q1 - q2 * q2 - q3 * q3, two * (q1 * q2 - q0 * q3), two * (q1 * q3 + q0 * q2),
       two * (q1 * q2 + q0 * q3), q0 * q0 - q1 * q1 + q2 * q2 - q3 * q3, two * (q2 * q3 - q0 * q1),
       two * (q1 * q3 - q0 * q2), two * (q2 * q3 + q0 * q1), q0 * q0 - q1 * q1 - q2 * q2 + q3 * q3;
  return r;
}

/// R{q}: IMU frame -> world frame. Throws InvalidArgument when |q| is off by more than 1e-6.
inline Mat3 rotation_matrix(const UnitQuaternion& q) {
  if (!q.is_normalized()) {
    throw InvalidArgument("rotation_matrix: quaternion is not normalized (|q|^2 = " +
                          std::to_string(q.coeffs().squaredNorm()) + ")");
  }
  return rotation_matrix_ambient<double>(q.coeffs());
}

/// Quaternion-kinematics matrix: q_dot = 0.5 * Omega(w) * q for a body rate w.
template <typename S>
Eigen::Matrix<S, 4, 4> omega_matrix(const Vec3T<S>& w) {
  Eigen::Matrix<S, 4, 4> m;
  m(0, 0) = S(0.0);
  m.template block<1, 3>(0, 1) = -w.transpose();
  m.template block<3, 1>(1, 0) = w;
  m.template block<3, 3>(1, 1) = -skew<S>(w);
  return m;
}

inline Mat4 omega_matrix(const Vec3& w) { return omega_matrix<double>(w); }

/// Xi{q}, the 4x3 matrix with Xi{q} w == Omega(w) q.
template <typename S>
Eigen::Matrix<S, 4, 3> xi_matrix(const Vec4T<S>& q) {
  const S q0 = q[0], q1 = q[1], q2 = q[2], q3 = q[3];
  Eigen::Matrix<S, 4, 3> m;
  m << -q1, -q2, -q3,
        q0, -q3,  q2,
        q3,  q0, -q1,
       -q2,  q1,  q0;
  return m;
}

inline Eigen::Matrix<double, 4, 3> xi_matrix(const UnitQuaternion& q) {
  return xi_matrix<double>(q.coeffs());
}

/// R * (I + [w dt]x). Accurate to O(dt^2) against R * exp([w dt]x); the
/// result is not exactly orthonormal. Any sign of dt is accepted.
inline Mat3 first_order_rotation_increment(const Mat3& r, const Vec3& w, double dt) {
  return r * (Mat3::Identity() + skew(Vec3(w * dt)));
}

/// Rodrigues formula for exp([phi]x).
inline Mat3 rotation_exp(const Vec3& phi) {
  const double angle = phi.norm();
  const Mat3 k = skew(phi);
  if (angle < 1e-8) return Mat3::Identity() + k + 0.5 * k * k;
  return Mat3::Identity() + std::sin(angle) / angle * k +
         (1.0 - std::cos(angle)) / (angle * angle) * k * k;
}

/// d(R{q} p)/dq through the homogeneous form, a 3x4 matrix (the F0 block).
inline Eigen::Matrix<double, 3, 4> rotate_point_jacobian(const Vec4& q, const Vec3& p) {
  // R(q) p = (q0^2 - |v|^2) p + 2 (v.p) v + 2 q0 (v x p)
  const double q0 = q[0];
  const Vec3 v = q.tail<3>();
  Eigen::Matrix<double, 3, 4> j;
  j.col(0) = 2.0 * q0 * p + 2.0 * v.cross(p);
  for (int k = 0; k < 3; ++k) {
    const Vec3 ek = Vec3::Unit(k);
    j.col(k + 1) = -2.0 * v[k] * p + 2.0 * p[k] * v + 2.0 * v.dot(p) * ek + 2.0 * q0 * ek.cross(p);
  }
  return j;
}

}  // namespace uwbimu
