// Copyright 2026 The uwbimu Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// System model: state, sensor records, IMU/range synthesis, the motion model
// in direct and control-affine form, and delayed-state range prediction.

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "uwbimu/errors.hpp"
#include "uwbimu/geom.hpp"

namespace uwbimu {

/// Gravity in the world frame (z up), m/s^2.
inline const Vec3 kGravity{0.0, 0.0, 9.8};

/// Dimension of the state without the time offset.
inline constexpr int kStateDim = 19;

template <typename S> using StateVectorT = Eigen::Matrix<S, kStateDim, 1>;
using StateVector = StateVectorT<double>;

/// Offsets into the 19-vector (p, v, q0..q3, b_a, b_w, p_IU).
namespace idx {
inline constexpr int p = 0;
inline constexpr int v = 3;
inline constexpr int q = 6;
inline constexpr int ba = 10;
inline constexpr int bw = 13;
inline constexpr int pu = 16;
}  // namespace idx

struct State {
  Vec3 p_WI = Vec3::Zero();
  Vec3 v_WI = Vec3::Zero();
  UnitQuaternion q_WI;
  Vec3 b_a = Vec3::Zero();
  Vec3 b_w = Vec3::Zero();
  Vec3 p_IU = Vec3::Zero();
  double t_d = 0.0;

  Mat3 R() const { return rotation_matrix(q_WI); }
  /// Mobile-radio position in the world frame.
  Vec3 radio_position() const { return R() * p_IU + p_WI; }

  StateVector to_vector() const {
    StateVector x;
    x << p_WI, v_WI, q_WI.coeffs(), b_a, b_w, p_IU;
    return x;
  }

  static State from_vector(const StateVector& x, double t_d = 0.0) {
    State s;
    s.p_WI = x.segment<3>(idx::p);
    s.v_WI = x.segment<3>(idx::v);
    s.q_WI = UnitQuaternion(Vec4(x.segment<4>(idx::q)));
    s.b_a = x.segment<3>(idx::ba);
    s.b_w = x.segment<3>(idx::bw);
    s.p_IU = x.segment<3>(idx::pu);
    s.t_d = t_d;
    return s;
  }
};

struct ImuSample {
  double t = 0.0;  // IMU clock
  Vec3 a_m = Vec3::Zero();
  Vec3 w_m = Vec3::Zero();
};

struct RangeSample {
  double t = 0.0;  // UWB clock (reference)
  int anchor_id = 0;
  double range = 0.0;
};

struct Anchor {
  int id = 0;
  Vec3 p_W = Vec3::Zero();
};

class AnchorSet {
public:
  AnchorSet() = default;
  explicit AnchorSet(std::vector<Anchor> anchors) : anchors_(std::move(anchors)) { validate(); }

  /// Anchors with ids 0..n-1 from a list of positions.
  static AnchorSet from_positions(const std::vector<Vec3>& positions) {
    std::vector<Anchor> a;
    for (std::size_t i = 0; i < positions.size(); ++i) a.push_back({static_cast<int>(i), positions[i]});
    return AnchorSet(std::move(a));
  }

  void validate() const {
    if (anchors_.empty()) throw InvalidArgument("AnchorSet: at least one anchor is required");
    for (std::size_t i = 0; i < anchors_.size(); ++i) {
      if (!anchors_[i].p_W.allFinite()) throw InvalidArgument("AnchorSet: non-finite anchor position");
      for (std::size_t j = i + 1; j < anchors_.size(); ++j) {
        if (anchors_[i].id == anchors_[j].id) {
          throw InvalidArgument("AnchorSet: duplicate anchor id " + std::to_string(anchors_[i].id));
        }
      }
    }
  }

  std::size_t size() const { return anchors_.size(); }
  const Anchor& operator[](std::size_t i) const { return anchors_[i]; }
  const std::vector<Anchor>& anchors() const { return anchors_; }
  auto begin() const { return anchors_.begin(); }
  auto end() const { return anchors_.end(); }

  const Anchor& find(int id) const {
    for (const auto& a : anchors_) {
      if (a.id == id) return a;
    }
    throw InvalidArgument("AnchorSet: unknown anchor id " + std::to_string(id));
  }
  bool contains(int id) const {
    for (const auto& a : anchors_) {
      if (a.id == id) return true;
    }
    return false;
  }

  /// 3x3 matrix whose rows are the positions of anchors first..first+2.
  Mat3 rows3(std::size_t first = 0) const {
    if (anchors_.size() < first + 3) throw InvalidArgument("AnchorSet: fewer than three anchors");
    Mat3 m;
    for (int r = 0; r < 3; ++r) m.row(r) = anchors_[first + r].p_W.transpose();
    return m;
  }

private:
  std::vector<Anchor> anchors_;
};

/// Per-axis standard deviations. sigma_a and sigma_w are per-sample white
/// noise on the IMU outputs; sigma_ba and sigma_bw are random-walk
/// densities (unit/sqrt(s)); sigma_r is per-range white noise.
struct NoiseConfig {
  double sigma_a = 0.0;
  double sigma_w = 0.0;
  double sigma_ba = 0.0;
  double sigma_bw = 0.0;
  double sigma_r = 0.0;
  std::uint64_t seed = 0;

  void validate() const {
    for (double s : {sigma_a, sigma_w, sigma_ba, sigma_bw, sigma_r}) {
      if (!(s >= 0.0) || !std::isfinite(s)) throw InvalidArgument("NoiseConfig: sigmas must be finite and >= 0");
    }
  }
};

using Rng = std::mt19937_64;

inline Vec3 gaussian3(Rng& rng, double sigma) {
  if (sigma == 0.0) return Vec3::Zero();
  std::normal_distribution<double> n(0.0, sigma);
  return {n(rng), n(rng), n(rng)};
}

/// Noise-free kinematic truth at one instant, as supplied by a trajectory.
struct KinematicSample {
  Vec3 p = Vec3::Zero();
  Vec3 v = Vec3::Zero();
  Vec3 a = Vec3::Zero();  // world-frame acceleration
  UnitQuaternion q;
  Vec3 w_body = Vec3::Zero();

  /// Specific force in the IMU frame, R^T (a + g).
  Vec3 specific_force() const { return rotation_matrix(q).transpose() * (a + kGravity); }
};

/// IMU sample from a kinematic sample. The trajectory decides the domain;
/// rng may be null when the noise sigmas are zero.
inline ImuSample synth_imu(const KinematicSample& k, double t, const Vec3& b_a, const Vec3& b_w,
                           const NoiseConfig& noise, Rng* rng) {
  ImuSample u;
  u.t = t;
  u.a_m = k.specific_force() + b_a;
  u.w_m = k.w_body + b_w;
  if (noise.sigma_a > 0.0 || noise.sigma_w > 0.0) {
    if (rng == nullptr) throw InvalidArgument("synth_imu: noise requested without an RNG");
    u.a_m += gaussian3(*rng, noise.sigma_a);
    u.w_m += gaussian3(*rng, noise.sigma_w);
  }
  return u;
}

/// One range per anchor, stamped t.
inline std::vector<RangeSample> synth_range(const AnchorSet& anchors, const State& x, const NoiseConfig& noise,
                                            Rng* rng, double t = 0.0) {
  const Vec3 radio = x.radio_position();
  std::vector<RangeSample> out;
  out.reserve(anchors.size());
  std::normal_distribution<double> n(0.0, noise.sigma_r > 0.0 ? noise.sigma_r : 1.0);
  for (const auto& a : anchors) {
    double r = (a.p_W - radio).norm();
    if (noise.sigma_r > 0.0) {
      if (rng == nullptr) throw InvalidArgument("synth_range: noise requested without an RNG");
      r += n(*rng);
    }
    out.push_back({t, a.id, std::max(r, 0.0)});
  }
  return out;
}

// Control-affine form x_dot = f0(x) + f1(x) a_m + f2(x) w_m on the 19-vector.

template <typename S>
StateVectorT<S> f0(const StateVectorT<S>& x) {
  const Vec4T<S> q = x.template segment<4>(idx::q);
  const Mat3T<S> r = rotation_matrix_ambient<S>(q);
  const Vec3T<S> ba = x.template segment<3>(idx::ba);
  const Vec3T<S> bw = x.template segment<3>(idx::bw);
  StateVectorT<S> out = StateVectorT<S>::Constant(S(0.0));
  out.template segment<3>(idx::p) = x.template segment<3>(idx::v);
  const Vec3T<S> g(S(kGravity.x()), S(kGravity.y()), S(kGravity.z()));
  out.template segment<3>(idx::v) = -(r * ba) - g;
  out.template segment<4>(idx::q) = S(-0.5) * (xi_matrix<S>(q) * bw);
  return out;
}

template <typename S>
Eigen::Matrix<S, kStateDim, 3> f1(const StateVectorT<S>& x) {
  Eigen::Matrix<S, kStateDim, 3> out = Eigen::Matrix<S, kStateDim, 3>::Constant(S(0.0));
  out.template block<3, 3>(idx::v, 0) = rotation_matrix_ambient<S>(x.template segment<4>(idx::q));
  return out;
}

template <typename S>
Eigen::Matrix<S, kStateDim, 3> f2(const StateVectorT<S>& x) {
  Eigen::Matrix<S, kStateDim, 3> out = Eigen::Matrix<S, kStateDim, 3>::Constant(S(0.0));
  out.template block<4, 3>(idx::q, 0) = S(0.5) * xi_matrix<S>(x.template segment<4>(idx::q));
  return out;
}

/// Time derivative of the state under the noise-free motion model, evaluated
/// directly (not through the affine split). Biases, p_IU and t_d are constant.
struct StateDerivative {
  Vec3 p_dot, v_dot;
  Vec4 q_dot;
};

inline StateDerivative state_derivative(const Vec3& v, const UnitQuaternion& q, const Vec3& b_a,
                                        const Vec3& b_w, const Vec3& a_m, const Vec3& w_m) {
  const Mat3 r = rotation_matrix_ambient<double>(q.coeffs());
  return {v, r * (a_m - b_a) - kGravity, 0.5 * omega_matrix(Vec3(w_m - b_w)) * q.coeffs()};
}

enum class Scheme { euler, rk4 };

namespace detail {

inline State advance(const State& x, const StateDerivative& d, double dt) {
  State y = x;
  y.p_WI += dt * d.p_dot;
  y.v_WI += dt * d.v_dot;
  y.q_WI = UnitQuaternion(Vec4(x.q_WI.coeffs() + dt * d.q_dot));
  return y;
}

inline StateDerivative eval(const State& x, const Vec3& a_m, const Vec3& w_m) {
  return state_derivative(x.v_WI, x.q_WI, x.b_a, x.b_w, a_m, w_m);
}

inline State rk4_step(const State& x, const Vec3& a0, const Vec3& w0, const Vec3& a_mid, const Vec3& w_mid,
                      const Vec3& a1, const Vec3& w1, double dt) {
  const StateDerivative k1 = eval(x, a0, w0);
  const StateDerivative k2 = eval(advance(x, k1, 0.5 * dt), a_mid, w_mid);
  const StateDerivative k3 = eval(advance(x, k2, 0.5 * dt), a_mid, w_mid);
  const StateDerivative k4 = eval(advance(x, k3, dt), a1, w1);
  StateDerivative sum{(k1.p_dot + 2.0 * k2.p_dot + 2.0 * k3.p_dot + k4.p_dot) / 6.0,
                      (k1.v_dot + 2.0 * k2.v_dot + 2.0 * k3.v_dot + k4.v_dot) / 6.0,
                      (k1.q_dot + 2.0 * k2.q_dot + 2.0 * k3.q_dot + k4.q_dot) / 6.0};
  State y = advance(x, sum, dt);
  y.q_WI.normalize();
  return y;
}

}  // namespace detail

/// Integrate the motion model over dt holding u constant (zero-order hold).
inline State propagate(const State& x, const ImuSample& u, double dt, Scheme scheme = Scheme::rk4) {
  if (!(dt >= 0.0)) throw InvalidArgument("propagate: dt must be >= 0");
  if (dt == 0.0) return x;
  if (scheme == Scheme::euler) {
    State y = detail::advance(x, detail::eval(x, u.a_m, u.w_m), dt);
    y.q_WI.normalize();
    return y;
  }
  return detail::rk4_step(x, u.a_m, u.w_m, u.a_m, u.w_m, u.a_m, u.w_m, dt);
}

/// RK4 step with the input sampled at t, t + dt/2 and t + dt. Used when the
/// inputs come from a continuous trajectory rather than a held IMU sample.
inline State propagate_rk4(const State& x, const ImuSample& u0, const ImuSample& u_mid, const ImuSample& u1,
                           double dt) {
  if (!(dt >= 0.0)) throw InvalidArgument("propagate_rk4: dt must be >= 0");
  if (dt == 0.0) return x;
  return detail::rk4_step(x, u0.a_m, u0.w_m, u_mid.a_m, u_mid.w_m, u1.a_m, u1.w_m, dt);
}

/// Pose of the IMU after one Euler step of length dt from x with inputs held:
/// p + v dt + 1/2 (R (a_m - b_a) - g) dt^2 and R (I + [(w_m - b_w) dt]x).
struct DelayedPose {
  Vec3 p;
  Mat3 R;

  Vec3 radio(const Vec3& p_IU) const { return R * p_IU + p; }
};

inline DelayedPose delay_step(const State& x, const Vec3& a_m, const Vec3& w_m, double dt) {
  const Mat3 r = x.R();
  DelayedPose out;
  out.p = x.p_WI + x.v_WI * dt + 0.5 * (r * (a_m - x.b_a) - kGravity) * dt * dt;
  out.R = first_order_rotation_increment(r, w_m - x.b_w, dt);
  return out;
}

/// Range to a single anchor at t_r = t_I + t_d, predicted from the state at t_I.
inline double delayed_range(const State& x_at_tI, const ImuSample& u_at_tI, const Vec3& anchor) {
  const DelayedPose pose = delay_step(x_at_tI, u_at_tI.a_m, u_at_tI.w_m, x_at_tI.t_d);
  return (anchor - pose.radio(x_at_tI.p_IU)).norm();
}

/// Predicted noise-free ranges for all anchors, in anchor order.
inline std::vector<double> delayed_range_prediction(const State& x_at_tI, const ImuSample& u_at_tI,
                                                    const AnchorSet& anchors) {
  if (!(x_at_tI.t_d >= 0.0)) throw InvalidArgument("delayed_range_prediction: t_d must be >= 0");
  const DelayedPose pose = delay_step(x_at_tI, u_at_tI.a_m, u_at_tI.w_m, x_at_tI.t_d);
  const Vec3 radio = pose.radio(x_at_tI.p_IU);
  std::vector<double> out;
  out.reserve(anchors.size());
  for (const auto& a : anchors) out.push_back((a.p_W - radio).norm());
  return out;
}

}  // namespace uwbimu
