// Copyright 2026 The uwbimu Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Sensitivity of the delayed output h = 1/2 |p_i - p_U(t_r)|^2 to the IMU
// input applied over the delay, and the resulting identifiability verdict
// for the time offset t_d.
//
// The radio position at t_r = t_I + t_d comes from one Euler step of length
// t_d (see delay_step), which is affine in a_m and w_m. Differentiating:
//   dh/da_c = -1/2 t_d^2 dp_r^T R e_c
//   dh/dw_c = -t_d dp_r^T R [e_c]x p_IU
// with dp_r = p_i - p_U(t_r). When p_U(t_r) = p_U(t_I), R^T dp_r = p_i^I - p_IU
// and the gyro term reduces to -t_d p_i^I . (e_c x p_IU).

#include <algorithm>
#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "uwbimu/errors.hpp"
#include "uwbimu/geom.hpp"
#include "uwbimu/models.hpp"
#include "uwbimu/trajectories.hpp"

namespace uwbimu {

inline constexpr double kSensitivityZeroTol = 1e-10;
inline constexpr double kSensitivityMarginal = 1e-9;
inline constexpr double kAlignEps = 1e-8;
inline constexpr double kCoLocationEps = 1e-6;  // m
inline constexpr double kOracleStep = 1e-3;

/// 1/2 |p_i - p_U(t_I + t_d)|^2 predicted from the state and input at t_I.
inline double delayed_half_squared_range(const State& x, const Vec3& a_m, const Vec3& w_m, const Vec3& anchor) {
  ImuSample u;
  u.a_m = a_m;
  u.w_m = w_m;
  const double r = delayed_range(x, u, anchor);
  return 0.5 * r * r;
}

enum class InputChannel { accel, gyro };

/// Central difference of the delayed output w.r.t. one input channel.
inline double sensitivity_oracle(const State& x, const ImuSample& u, const Vec3& anchor, InputChannel ch, int axis,
                                 double eps = kOracleStep) {
  Vec3 ap = u.a_m, am = u.a_m, wp = u.w_m, wm = u.w_m;
  if (ch == InputChannel::accel) {
    ap[axis] += eps;
    am[axis] -= eps;
  } else {
    wp[axis] += eps;
    wm[axis] -= eps;
  }
  return (delayed_half_squared_range(x, ap, wp, anchor) - delayed_half_squared_range(x, am, wm, anchor)) /
         (2.0 * eps);
}

namespace detail {

inline void check_axis(int axis) {
  if (axis < 0 || axis > 2) throw InvalidArgument("sensitivity: axis must be 0, 1 or 2");
}

inline void check_against_oracle(double value, double oracle, const char* what) {
  const double tol = std::max(1e-8, 1e-4 * std::abs(value));
  if (!(std::abs(value - oracle) <= tol)) {
    throw NumericalFailure(std::string(what) + ": closed form " + std::to_string(value) +
                           " disagrees with finite-difference oracle " + std::to_string(oracle));
  }
}

inline Vec3 delayed_residual(const State& x, const ImuSample& u, const Vec3& anchor) {
  const DelayedPose pose = delay_step(x, u.a_m, u.w_m, x.t_d);
  return anchor - pose.radio(x.p_IU);
}

}  // namespace detail

/// Closed-form dh/da_axis, self-checked against the oracle.
inline double accel_sensitivity(const State& x, const ImuSample& u, const Vec3& anchor, int axis) {
  detail::check_axis(axis);
  if (!(x.t_d >= 0.0)) throw InvalidArgument("accel_sensitivity: t_d must be >= 0");
  const Vec3 dp = detail::delayed_residual(x, u, anchor);
  const double value = -0.5 * x.t_d * x.t_d * dp.dot(x.R().col(axis));
  detail::check_against_oracle(value, sensitivity_oracle(x, u, anchor, InputChannel::accel, axis), "accel_sensitivity");
  return value;
}

/// Closed-form dh/dw_axis, self-checked against the oracle.
inline double gyro_sensitivity(const State& x, const ImuSample& u, const Vec3& anchor, int axis) {
  detail::check_axis(axis);
  if (!(x.t_d >= 0.0)) throw InvalidArgument("gyro_sensitivity: t_d must be >= 0");
  const Vec3 dp = detail::delayed_residual(x, u, anchor);
  const double value = -x.t_d * dp.dot(x.R() * Vec3::Unit(axis).cross(x.p_IU));
  detail::check_against_oracle(value, sensitivity_oracle(x, u, anchor, InputChannel::gyro, axis), "gyro_sensitivity");
  return value;
}

/// Anchor position in the IMU frame, R^T (p_i - p).
inline Vec3 anchor_in_imu(const State& x, const Vec3& anchor) { return x.R().transpose() * (anchor - x.p_WI); }

/// Triple product p_i^I . ([e_axis]x p_IU) t_d evaluated at t_I. Equals
/// -gyro_sensitivity whenever the delay step leaves the radio in place.
inline double gyro_triple_product(const State& x, const Vec3& anchor, int axis) {
  detail::check_axis(axis);
  return anchor_in_imu(x, anchor).dot(Vec3::Unit(axis).cross(x.p_IU)) * x.t_d;
}

enum class Verdict { identifiable, marginal, not_identifiable };

inline std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::identifiable: return "identifiable";
    case Verdict::marginal: return "marginal";
    case Verdict::not_identifiable: return "not-identifiable";
  }
  return "unknown";
}

/// S1..S9 for one anchor; s[k] holds S(k+1).
struct SConditions {
  std::array<bool, 9> s{};

  std::vector<int> triggered() const {
    std::vector<int> out;
    for (int k = 0; k < 9; ++k) {
      if (s[k]) out.push_back(k + 1);
    }
    return out;
  }
};

inline bool aligned(const Vec3& axis, const Vec3& v) {
  const double n = v.norm();
  if (n == 0.0) return true;
  return axis.cross(v / n).norm() < kAlignEps;
}

inline SConditions s_conditions(const State& x, const Vec3& anchor) {
  SConditions c;
  const Vec3 pi = anchor_in_imu(x, anchor);
  c.s[0] = std::abs(x.t_d) <= 1e-12;
  c.s[1] = x.p_IU.norm() <= kCoLocationEps;
  c.s[2] = pi.norm() <= kCoLocationEps;
  for (int axis = 0; axis < 3; ++axis) {
    c.s[3 + 2 * axis] = aligned(Vec3::Unit(axis), x.p_IU);
    c.s[4 + 2 * axis] = aligned(Vec3::Unit(axis), pi);
  }
  return c;
}

struct IdentifiabilityReport {
  std::array<double, 3> accel{};  // per axis, largest-magnitude value over anchors
  std::array<double, 3> gyro{};
  std::vector<std::array<double, 3>> accel_per_anchor;
  std::vector<std::array<double, 3>> gyro_per_anchor;
  bool T1 = false, T2 = false, T3 = false;
  bool gyro_route = false;  // T3 with a nonzero sensitivity on an excited gyro axis
  std::vector<SConditions> s_per_anchor;
  std::vector<int> triggered;  // union of S indices over anchors
  double min_anchor_distance = 0.0;
  double max_relevant_sensitivity = 0.0;
  Verdict verdict = Verdict::not_identifiable;
};

/// Identifiable iff T1 and (T2 or T3); marginal when identifiable by the
/// flags but the largest sensitivity on an excited channel is <= 1e-9.
inline IdentifiabilityReport classify(const State& x, const ImuSample& u, const AnchorSet& anchors,
                                      const ExcitationReport& excitation) {
  IdentifiabilityReport r;
  const Vec3 radio = x.radio_position();
  r.min_anchor_distance = std::numeric_limits<double>::infinity();
  for (const auto& a : anchors) {
    r.min_anchor_distance = std::min(r.min_anchor_distance, (a.p_W - radio).norm());
    std::array<double, 3> sa{}, sg{};
    for (int axis = 0; axis < 3; ++axis) {
      sa[axis] = accel_sensitivity(x, u, a.p_W, axis);
      sg[axis] = gyro_sensitivity(x, u, a.p_W, axis);
      if (std::abs(sa[axis]) > std::abs(r.accel[axis])) r.accel[axis] = sa[axis];
      if (std::abs(sg[axis]) > std::abs(r.gyro[axis])) r.gyro[axis] = sg[axis];
    }
    r.accel_per_anchor.push_back(sa);
    r.gyro_per_anchor.push_back(sg);
    r.s_per_anchor.push_back(s_conditions(x, a.p_W));
  }
  for (int k = 1; k <= 9; ++k) {
    for (const auto& s : r.s_per_anchor) {
      if (s.s[k - 1]) {
        r.triggered.push_back(k);
        break;
      }
    }
  }

  r.T1 = r.min_anchor_distance > kCoLocationEps;
  double relevant = 0.0;
  for (int axis = 0; axis < 3; ++axis) {
    if (excitation.accel(axis)) {
      relevant = std::max(relevant, std::abs(r.accel[axis]));
      if (std::abs(r.accel[axis]) > kSensitivityZeroTol) r.T2 = true;
    }
  }
  r.T3 = x.p_IU.norm() > kCoLocationEps && excitation.all_gyro();
  for (int axis = 0; axis < 3; ++axis) {
    if (excitation.gyro(axis)) {
      if (r.T3) relevant = std::max(relevant, std::abs(r.gyro[axis]));
      if (r.T3 && std::abs(r.gyro[axis]) > kSensitivityZeroTol) r.gyro_route = true;
    }
  }
  r.max_relevant_sensitivity = relevant;
  if (r.T1 && (r.T2 || r.T3)) {
    r.verdict = relevant > kSensitivityMarginal ? Verdict::identifiable : Verdict::marginal;
  } else {
    r.verdict = Verdict::not_identifiable;
  }
  return r;
}

}  // namespace uwbimu
