// Copyright 2026 The uwbimu Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Closed-form ground-truth trajectories over [0, duration].

#include <array>
#include <cmath>
#include <numbers>
#include <string>

#include "uwbimu/errors.hpp"
#include "uwbimu/geom.hpp"
#include "uwbimu/models.hpp"

namespace uwbimu {

enum class TrajectoryKind { static_pose, single_axis_accel, single_axis_rotation, full_excitation };

inline std::string to_string(TrajectoryKind k) {
  switch (k) {
    case TrajectoryKind::static_pose: return "static";
    case TrajectoryKind::single_axis_accel: return "single_axis_accel";
    case TrajectoryKind::single_axis_rotation: return "single_axis_rotation";
    case TrajectoryKind::full_excitation: return "full_excitation";
  }
  return "unknown";
}

inline TrajectoryKind trajectory_kind_from_string(const std::string& s) {
  if (s == "static") return TrajectoryKind::static_pose;
  if (s == "single_axis_accel") return TrajectoryKind::single_axis_accel;
  if (s == "single_axis_rotation") return TrajectoryKind::single_axis_rotation;
  if (s == "full_excitation") return TrajectoryKind::full_excitation;
  throw InvalidArgument("unknown trajectory kind '" + s + "'");
}

/// Parameters of every generator; each kind reads only the fields it needs.
struct TrajectoryParams {
  double duration = 60.0;
  Vec3 position = Vec3::Zero();  // static pose / centre of motion
  UnitQuaternion attitude;       // static or initial attitude

  // single_axis_accel / single_axis_rotation
  int axis = 0;            // IMU-frame axis
  double amplitude = 0.0;  // m
  double frequency = 0.0;  // Hz
  double rate = 0.0;       // rad/s

  // full_excitation: translation sinusoids (world axes) and ZYX Euler-angle sinusoids.
  Vec3 pos_amplitude{0.3, 0.1, 0.06};
  Vec3 pos_frequency{0.7, 1.1, 1.3};  // Hz
  Vec3 pos_phase = Vec3::Zero();
  Vec3 att_amplitude{0.5, 0.5, 1.0};  // roll, pitch, yaw (rad)
  Vec3 att_rate{0.5, 0.9, 1.7};       // rad/s
  Vec3 att_phase = Vec3::Zero();
  Vec3 att_offset = Vec3::Zero();
};

class Trajectory {
public:
  Trajectory(TrajectoryKind kind, TrajectoryParams params) : kind_(kind), p_(std::move(params)) {
    if (!(p_.duration > 0.0)) throw InvalidArgument("Trajectory: duration must be > 0");
    if (!p_.attitude.is_normalized()) throw InvalidArgument("Trajectory: attitude is not normalized");
    if (kind_ == TrajectoryKind::single_axis_accel || kind_ == TrajectoryKind::single_axis_rotation) {
      if (p_.axis < 0 || p_.axis > 2) throw InvalidArgument("Trajectory: axis must be 0, 1 or 2");
    }
  }

  TrajectoryKind kind() const { return kind_; }
  const TrajectoryParams& params() const { return p_; }
  double duration() const { return p_.duration; }
  bool contains(double t) const { return t >= 0.0 && t <= p_.duration; }

  KinematicSample sample(double t) const {
    if (!contains(t)) {
      throw DomainError("Trajectory: t = " + std::to_string(t) + " outside [0, " + std::to_string(p_.duration) + "]");
    }
    switch (kind_) {
      case TrajectoryKind::static_pose: return static_at();
      case TrajectoryKind::single_axis_accel: return accel_at(t);
      case TrajectoryKind::single_axis_rotation: return rotation_at(t);
      case TrajectoryKind::full_excitation: return full_at(t);
    }
    return {};
  }

  /// Ground-truth state at t with the given extras.
  State state(double t, const Vec3& b_a, const Vec3& b_w, const Vec3& p_IU, double t_d) const {
    const KinematicSample k = sample(t);
    State s;
    s.p_WI = k.p;
    s.v_WI = k.v;
    s.q_WI = k.q;
    s.b_a = b_a;
    s.b_w = b_w;
    s.p_IU = p_IU;
    s.t_d = t_d;
    return s;
  }

private:
  KinematicSample static_at() const {
    KinematicSample k;
    k.p = p_.position;
    k.q = p_.attitude;
    return k;
  }

  KinematicSample accel_at(double t) const {
    const double w = 2.0 * std::numbers::pi * p_.frequency;
    const Vec3 dir = rotation_matrix(p_.attitude).col(p_.axis);
    KinematicSample k;
    k.q = p_.attitude;
    k.p = p_.position + dir * p_.amplitude * std::sin(w * t);
    k.v = dir * p_.amplitude * w * std::cos(w * t);
    k.a = -dir * p_.amplitude * w * w * std::sin(w * t);
    return k;
  }

  KinematicSample rotation_at(double t) const {
    KinematicSample k;
    k.p = p_.position;
    k.w_body = Vec3::Unit(p_.axis) * p_.rate;
    k.q = p_.attitude * UnitQuaternion::exp(k.w_body * t);
    return k;
  }

  KinematicSample full_at(double t) const {
    KinematicSample k;
    for (int i = 0; i < 3; ++i) {
      const double w = 2.0 * std::numbers::pi * p_.pos_frequency[i];
      const double ph = w * t + p_.pos_phase[i];
      k.p[i] = p_.position[i] + p_.pos_amplitude[i] * std::sin(ph);
      k.v[i] = p_.pos_amplitude[i] * w * std::cos(ph);
      k.a[i] = -p_.pos_amplitude[i] * w * w * std::sin(ph);
    }
    Vec3 ang, dang;
    for (int i = 0; i < 3; ++i) {
      const double ph = p_.att_rate[i] * t + p_.att_phase[i];
      ang[i] = p_.att_offset[i] + p_.att_amplitude[i] * std::sin(ph);
      dang[i] = p_.att_amplitude[i] * p_.att_rate[i] * std::cos(ph);
    }
    const double roll = ang[0], pitch = ang[1], yaw = ang[2];
    k.q = UnitQuaternion::exp(Vec3::UnitZ() * yaw) * UnitQuaternion::exp(Vec3::UnitY() * pitch) *
          UnitQuaternion::exp(Vec3::UnitX() * roll);
    const double sr = std::sin(roll), cr = std::cos(roll), sp = std::sin(pitch), cp = std::cos(pitch);
    k.w_body = Vec3(dang[0] - dang[2] * sp, dang[1] * cr + dang[2] * sr * cp, -dang[1] * sr + dang[2] * cr * cp);
    return k;
  }

  TrajectoryKind kind_;
  TrajectoryParams p_;
};

inline Trajectory make_static(const Vec3& position, const UnitQuaternion& attitude, double duration = 60.0) {
  TrajectoryParams p;
  p.position = position;
  p.attitude = attitude;
  p.duration = duration;
  return {TrajectoryKind::static_pose, p};
}

/// Sinusoidal translation A sin(2 pi f t) along one IMU axis at constant attitude.
inline Trajectory make_single_axis_accel(int axis, double amplitude, double frequency,
                                         const Vec3& centre = Vec3::Zero(),
                                         const UnitQuaternion& attitude = UnitQuaternion::identity(),
                                         double duration = 60.0) {
  if (!(amplitude > 0.0)) throw InvalidArgument("make_single_axis_accel: amplitude must be > 0");
  if (!(frequency > 0.0)) throw InvalidArgument("make_single_axis_accel: frequency must be > 0");
  TrajectoryParams p;
  p.axis = axis;
  p.amplitude = amplitude;
  p.frequency = frequency;
  p.position = centre;
  p.attitude = attitude;
  p.duration = duration;
  return {TrajectoryKind::single_axis_accel, p};
}

/// Fixed position, constant body rate about one IMU axis.
inline Trajectory make_single_axis_rotation(int axis, double rate, const Vec3& position = Vec3::Zero(),
                                            const UnitQuaternion& attitude = UnitQuaternion::identity(),
                                            double duration = 60.0) {
  if (rate == 0.0) throw InvalidArgument("make_single_axis_rotation: rate must be nonzero");
  TrajectoryParams p;
  p.axis = axis;
  p.rate = rate;
  p.position = position;
  p.attitude = attitude;
  p.duration = duration;
  return {TrajectoryKind::single_axis_rotation, p};
}

inline Trajectory make_full_excitation(TrajectoryParams params = {}) {
  return {TrajectoryKind::full_excitation, std::move(params)};
}

/// Noise-free IMU sample on a trajectory.
inline ImuSample synth_imu(const Trajectory& truth, double t, const Vec3& b_a, const Vec3& b_w,
                           const NoiseConfig& noise, Rng* rng) {
  return synth_imu(truth.sample(t), t, b_a, b_w, noise, rng);
}

inline constexpr double kExcitationThreshold = 1e-4;

/// Channel order: a_x, a_y, a_z, w_x, w_y, w_z.
struct ExcitationReport {
  std::array<bool, 6> excited{};
  std::array<double, 6> measure{};

  bool accel(int axis) const { return excited[axis]; }
  bool gyro(int axis) const { return excited[3 + axis]; }
  bool all_accel() const { return excited[0] && excited[1] && excited[2]; }
  bool all_gyro() const { return excited[3] && excited[4] && excited[5]; }
  bool any_accel() const { return excited[0] || excited[1] || excited[2]; }

  static ExcitationReport all(bool value) {
    ExcitationReport r;
    r.excited.fill(value);
    return r;
  }
};

/// Accelerometer channels: variance of the noise-free specific force over the
/// window. Gyro channels: mean square of the noise-free body rate (a gyro at
/// rest reads zero, so a constant rate counts as excitation).
inline ExcitationReport excitation_report(const Trajectory& traj, double t0, double t1, double step = 5e-3,
                                          double threshold = kExcitationThreshold) {
  if (!(t1 > t0)) throw InvalidArgument("excitation_report: empty window");
  if (!traj.contains(t0) || !traj.contains(t1)) throw DomainError("excitation_report: window outside trajectory");
  const int n = std::max(2, static_cast<int>(std::ceil((t1 - t0) / step)) + 1);
  Eigen::Matrix<double, 6, 1> sum = Eigen::Matrix<double, 6, 1>::Zero();
  Eigen::Matrix<double, 6, 1> sum2 = Eigen::Matrix<double, 6, 1>::Zero();
  for (int i = 0; i < n; ++i) {
    const double t = t0 + (t1 - t0) * i / (n - 1);
    const KinematicSample k = traj.sample(t);
    Eigen::Matrix<double, 6, 1> u;
    u << k.specific_force(), k.w_body;
    sum += u;
    sum2 += u.cwiseProduct(u);
  }
  ExcitationReport r;
  for (int c = 0; c < 6; ++c) {
    const double mean = sum[c] / n;
    const double ms = sum2[c] / n;
    r.measure[c] = c < 3 ? std::max(0.0, ms - mean * mean) : ms;
    r.excited[c] = r.measure[c] > threshold;
  }
  return r;
}

}  // namespace uwbimu
