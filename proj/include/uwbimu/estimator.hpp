// Copyright 2026 The uwbimu Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Error-state Kalman filter over (p, v, q, b_a, b_w, p_IU, t_d) fusing IMU
// propagation with UWB ranges.
//
// Clock model: the UWB clock is the reference. An IMU sample stamped t was
// taken at true time t - t_d, so the filter state at stamp t describes the
// vehicle at t - t_d. A range stamped t_r is predicted from the state at
// stamp t_r by propagating t_d seconds (DelayMode::propagate_by_td) or read
// off directly (DelayMode::ignore_td).
//
// Error state (19): dp, dv, dtheta, db_a, db_w, dp_IU, dt_d, with the attitude
// error on the right: q_true = q (x) Exp(dtheta).

#include <cmath>
#include <limits>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/distributions/chi_squared.hpp>

#include "uwbimu/dataset.hpp"
#include "uwbimu/errors.hpp"
#include "uwbimu/geom.hpp"
#include "uwbimu/models.hpp"

namespace uwbimu {

inline constexpr int kErrDim = 19;
using ErrVec = Eigen::Matrix<double, kErrDim, 1>;
using ErrMat = Eigen::Matrix<double, kErrDim, kErrDim>;

namespace err {
inline constexpr int p = 0;
inline constexpr int v = 3;
inline constexpr int th = 6;
inline constexpr int ba = 9;
inline constexpr int bw = 12;
inline constexpr int pu = 15;
inline constexpr int td = 18;
}  // namespace err

enum class DelayMode { propagate_by_td, ignore_td };

inline std::string to_string(DelayMode m) { return m == DelayMode::propagate_by_td ? "propagate_by_td" : "ignore_td"; }

inline DelayMode delay_mode_from_string(const std::string& s) {
  if (s == "propagate_by_td") return DelayMode::propagate_by_td;
  if (s == "ignore_td") return DelayMode::ignore_td;
  throw InvalidArgument("unknown delay mode '" + s + "'");
}

/// x (+) dx.
inline State boxplus(const State& x, const ErrVec& dx) {
  State y = x;
  y.p_WI += dx.segment<3>(err::p);
  y.v_WI += dx.segment<3>(err::v);
  y.q_WI = (x.q_WI * UnitQuaternion::exp(dx.segment<3>(err::th))).normalized();
  y.b_a += dx.segment<3>(err::ba);
  y.b_w += dx.segment<3>(err::bw);
  y.p_IU += dx.segment<3>(err::pu);
  y.t_d += dx[err::td];
  return y;
}

/// a (-) b, so that b (+) (a (-) b) == a.
inline ErrVec boxminus(const State& a, const State& b) {
  ErrVec d;
  d.segment<3>(err::p) = a.p_WI - b.p_WI;
  d.segment<3>(err::v) = a.v_WI - b.v_WI;
  d.segment<3>(err::th) = (b.q_WI.conjugate() * a.q_WI).log();
  d.segment<3>(err::ba) = a.b_a - b.b_a;
  d.segment<3>(err::bw) = a.b_w - b.b_w;
  d.segment<3>(err::pu) = a.p_IU - b.p_IU;
  d[err::td] = a.t_d - b.t_d;
  return d;
}

struct FilterState {
  State x;
  ErrMat P = ErrMat::Identity();
  double t = 0.0;  // stamp the state refers to (IMU clock)
};

struct FilterConfig {
  State initial;
  ErrMat P0 = ErrMat::Identity();
  NoiseConfig noise;
  double imu_period = 0.005;  // s; converts per-sample IMU noise into a density
  double gate = 25.0;         // squared Mahalanobis distance above which a range is rejected
  DelayMode mode = DelayMode::propagate_by_td;
  double trace_cap = 1e8;
  double jacobian_step = 1e-6;

  void validate() const {
    noise.validate();
    if (!(imu_period > 0.0)) throw InvalidArgument("FilterConfig: imu_period must be > 0");
    if (!(gate > 0.0)) throw InvalidArgument("FilterConfig: gate must be > 0");
    if (!P0.isApprox(P0.transpose(), 1e-12)) throw InvalidArgument("FilterConfig: P0 is not symmetric");
    Eigen::SelfAdjointEigenSolver<ErrMat> es(P0);
    if (es.eigenvalues().minCoeff() < -1e-12) throw InvalidArgument("FilterConfig: P0 is not PSD");
  }
};

/// Diagonal P0 from per-block standard deviations.
inline ErrMat diagonal_covariance(double sp, double sv, double sth, double sba, double sbw, double spu, double std_) {
  ErrVec d;
  d << Vec3::Constant(sp * sp), Vec3::Constant(sv * sv), Vec3::Constant(sth * sth), Vec3::Constant(sba * sba),
      Vec3::Constant(sbw * sbw), Vec3::Constant(spu * spu), std_ * std_;
  return d.asDiagonal();
}

namespace detail {

inline void symmetrize(ErrMat& p) { p = 0.5 * (p + p.transpose()).eval(); }

inline ImuSample midpoint(const ImuSample& u0, const ImuSample& u1) {
  ImuSample m;
  m.t = 0.5 * (u0.t + u1.t);
  m.a_m = 0.5 * (u0.a_m + u1.a_m);
  m.w_m = 0.5 * (u0.w_m + u1.w_m);
  return m;
}

}  // namespace detail

/// Propagate nominal state and covariance over dt with the input varying
/// linearly from u0 to u1. The error-state transition is linearized at the
/// midpoint input.
inline FilterState predict(const FilterState& fs, const ImuSample& u0, const ImuSample& u1, double dt,
                           const FilterConfig& cfg) {
  if (!(dt >= 0.0)) throw InvalidArgument("predict: dt must be >= 0");
  if (dt == 0.0) return fs;
  const ImuSample u = detail::midpoint(u0, u1);
  FilterState out = fs;
  out.x = propagate_rk4(fs.x, u0, u, u1, dt);
  out.t = fs.t + dt;

  const Mat3 r = fs.x.R();
  const Vec3 a = u.a_m - fs.x.b_a;
  const Vec3 w = u.w_m - fs.x.b_w;
  ErrMat A = ErrMat::Zero();
  A.block<3, 3>(err::p, err::v).setIdentity();
  A.block<3, 3>(err::v, err::th) = -r * skew(a);
  A.block<3, 3>(err::v, err::ba) = -r;
  A.block<3, 3>(err::th, err::th) = -skew(w);
  A.block<3, 3>(err::th, err::bw) = -Mat3::Identity();
  const ErrMat F = ErrMat::Identity() + A * dt;

  const NoiseConfig& n = cfg.noise;
  ErrVec q = ErrVec::Zero();
  q.segment<3>(err::v).setConstant(n.sigma_a * n.sigma_a * cfg.imu_period * dt);
  q.segment<3>(err::th).setConstant(n.sigma_w * n.sigma_w * cfg.imu_period * dt);
  q.segment<3>(err::ba).setConstant(n.sigma_ba * n.sigma_ba * dt);
  q.segment<3>(err::bw).setConstant(n.sigma_bw * n.sigma_bw * dt);

  out.P = F * fs.P * F.transpose();
  out.P.diagonal() += q;
  detail::symmetrize(out.P);
  if (!out.P.allFinite() || out.P.trace() > cfg.trace_cap) {
    throw NumericalFailure("predict: covariance diverged (trace " + std::to_string(out.P.trace()) + ")");
  }
  return out;
}

/// Propagate nominal state and covariance over dt with u held constant.
inline FilterState predict(const FilterState& fs, const ImuSample& u, double dt, const FilterConfig& cfg) {
  return predict(fs, u, u, dt, cfg);
}

/// Predicted range for one anchor under the configured delay handling.
inline double predicted_range(const State& x, const ImuSample& u, const Vec3& anchor, DelayMode mode) {
  if (mode == DelayMode::ignore_td) return (anchor - x.radio_position()).norm();
  return delayed_range(x, u, anchor);
}

/// 1x19 Jacobian of predicted_range w.r.t. the error state, central differences.
inline Eigen::Matrix<double, 1, kErrDim> range_jacobian(const State& x, const ImuSample& u, const Vec3& anchor,
                                                         DelayMode mode, double step = 1e-6) {
  Eigen::Matrix<double, 1, kErrDim> h;
  for (int i = 0; i < kErrDim; ++i) {
    ErrVec d = ErrVec::Zero();
    d[i] = step;
    h[i] = (predicted_range(boxplus(x, d), u, anchor, mode) - predicted_range(boxplus(x, -d), u, anchor, mode)) /
           (2.0 * step);
  }
  return h;
}

struct InnovationRecord {
  double t = 0.0;
  int anchor_id = 0;
  double z = 0.0;
  double predicted = 0.0;
  double innovation = 0.0;
  double S = 0.0;
  double nis = 0.0;
  bool accepted = false;
};

/// EKF update with one range. A gated measurement leaves the state unchanged.
inline FilterState update_range(const FilterState& fs, const RangeSample& z, const ImuSample& u_latest,
                                const AnchorSet& anchors, const FilterConfig& cfg, InnovationRecord* record = nullptr) {
  const Vec3 anchor = anchors.find(z.anchor_id).p_W;
  InnovationRecord rec;
  rec.t = z.t;
  rec.anchor_id = z.anchor_id;
  rec.z = z.range;
  rec.predicted = predicted_range(fs.x, u_latest, anchor, cfg.mode);
  rec.innovation = z.range - rec.predicted;
  const Eigen::Matrix<double, 1, kErrDim> H = range_jacobian(fs.x, u_latest, anchor, cfg.mode, cfg.jacobian_step);
  const double rvar = cfg.noise.sigma_r * cfg.noise.sigma_r;
  rec.S = (H * fs.P * H.transpose())(0, 0) + rvar;
  if (!(rec.S > 0.0) || !std::isfinite(rec.S)) {
    throw NumericalFailure("update_range: singular innovation covariance at t = " + std::to_string(z.t));
  }
  rec.nis = rec.innovation * rec.innovation / rec.S;
  rec.accepted = rec.nis <= cfg.gate;
  if (record != nullptr) *record = rec;
  if (!rec.accepted) return fs;

  const ErrVec K = fs.P * H.transpose() / rec.S;
  FilterState out = fs;
  out.x = boxplus(fs.x, K * rec.innovation);
  const ErrMat IKH = ErrMat::Identity() - K * H;
  out.P = IKH * fs.P * IKH.transpose() + rvar * K * K.transpose();
  detail::symmetrize(out.P);
  return out;
}

/// Normalized estimation error squared of the estimate against the truth.
inline double nees(const FilterState& fs, const State& truth) {
  const ErrVec e = boxminus(truth, fs.x);
  Eigen::LDLT<ErrMat> ldlt(fs.P);
  if (ldlt.info() != Eigen::Success) return std::numeric_limits<double>::quiet_NaN();
  return e.dot(ldlt.solve(e));
}

struct StepRecord {
  double t = 0.0;
  State x;
  ErrVec sigma = ErrVec::Zero();
  double nees = std::numeric_limits<double>::quiet_NaN();
  ErrVec error = ErrVec::Constant(std::numeric_limits<double>::quiet_NaN());  // truth (-) estimate
};

struct RunMetrics {
  std::size_t steps = 0;
  std::size_t updates = 0;
  std::size_t gated = 0;
  std::size_t skipped_ranges = 0;  // ranges before the first IMU sample
  bool has_truth = false;
  ErrVec initial_error = ErrVec::Zero();
  ErrVec final_error = ErrVec::Zero();
  ErrVec initial_sigma = ErrVec::Zero();
  ErrVec final_sigma = ErrVec::Zero();
  double position_rmse = 0.0;
  double nees_mean = 0.0;
  double nees_fraction_in_bounds = 0.0;
  double nees_lower = 0.0, nees_upper = 0.0;
};

struct RunResult {
  std::vector<StepRecord> steps;
  std::vector<InnovationRecord> innovations;
  RunMetrics metrics;
  FilterState final_state;
};

/// Two-sided bounds of a chi-square variable with the given dof.
inline std::pair<double, double> chi_square_bounds(int dof, double confidence = 0.95) {
  const boost::math::chi_squared dist(dof);
  const double tail = 0.5 * (1.0 - confidence);
  return {boost::math::quantile(dist, tail), boost::math::quantile(dist, 1.0 - tail)};
}

/// Run the filter over a dataset. With truth, each step also carries the
/// estimation error and NEES, the truth being read at stamp - t_d(true).
inline RunResult run(const FilterConfig& cfg, const Dataset& data, const AnchorSet& anchors,
                     const TruthSeries* truth = nullptr) {
  cfg.validate();
  data.check_order();
  RunResult res;
  RunMetrics& m = res.metrics;
  m.has_truth = truth != nullptr && !truth->empty();
  std::tie(m.nees_lower, m.nees_upper) = chi_square_bounds(kErrDim);

  FilterState fs;
  fs.x = cfg.initial;
  fs.P = cfg.P0;
  m.initial_sigma = cfg.P0.diagonal().cwiseSqrt();
  bool have_imu = false;
  ImuSample last_u;
  double sq_pos = 0.0;
  double nees_sum = 0.0;
  std::size_t nees_n = 0, nees_in = 0;
  bool first_step = true;

  for (std::size_t i = 0; i < data.records.size(); ++i) {
    const Record& rec = data.records[i];
    if (rec.kind == RecordKind::imu) {
      if (have_imu) {
        fs = predict(fs, last_u, rec.imu, rec.t - fs.t, cfg);
      } else {
        fs.t = rec.t;
        have_imu = true;
      }
      last_u = rec.imu;
    } else {
      if (!have_imu) {
        ++m.skipped_ranges;
        continue;
      }
      if (rec.t > fs.t) fs = predict(fs, last_u, rec.t - fs.t, cfg);
      InnovationRecord ir;
      fs = update_range(fs, rec.range, last_u, anchors, cfg, &ir);
      res.innovations.push_back(ir);
      ++m.updates;
      if (!ir.accepted) ++m.gated;
    }
    const bool group_end = i + 1 == data.records.size() || data.records[i + 1].t != rec.t;
    if (!group_end || !have_imu) continue;

    StepRecord s;
    s.t = fs.t;
    s.x = fs.x;
    s.sigma = fs.P.diagonal().cwiseMax(0.0).cwiseSqrt();
    if (m.has_truth) {
      const State& tx = truth->front().x;
      const State tr = truth_at(*truth, fs.t - tx.t_d);
      s.error = boxminus(tr, fs.x);
      s.nees = nees(fs, tr);
      if (first_step) m.initial_error = s.error;
      sq_pos += s.error.segment<3>(err::p).squaredNorm();
      if (std::isfinite(s.nees)) {
        nees_sum += s.nees;
        ++nees_n;
        if (s.nees >= m.nees_lower && s.nees <= m.nees_upper) ++nees_in;
      }
    }
    first_step = false;
    res.steps.push_back(s);
  }

  m.steps = res.steps.size();
  m.final_sigma = fs.P.diagonal().cwiseMax(0.0).cwiseSqrt();
  if (m.has_truth && !res.steps.empty()) {
    m.final_error = res.steps.back().error;
    m.position_rmse = std::sqrt(sq_pos / static_cast<double>(res.steps.size()));
    m.nees_mean = nees_n ? nees_sum / static_cast<double>(nees_n) : 0.0;
    m.nees_fraction_in_bounds = nees_n ? static_cast<double>(nees_in) / static_cast<double>(nees_n) : 0.0;
  }
  res.final_state = fs;
  return res;
}

}  // namespace uwbimu
