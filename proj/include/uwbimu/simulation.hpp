// Copyright 2026 The uwbimu Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Scenario description and synthetic data generation.

#include <cmath>
#include <cstdint>
#include <vector>

#include "uwbimu/dataset.hpp"
#include "uwbimu/errors.hpp"
#include "uwbimu/estimator.hpp"
#include "uwbimu/models.hpp"
#include "uwbimu/trajectories.hpp"

namespace uwbimu {

/// Filter initialization for a scenario: per-block prior sigmas, the
/// deterministic prior offsets on p_IU and t_d, and the remaining initial
/// errors drawn from the prior.
struct FilterSetup {
  double sigma_p = 0.3;
  double sigma_v = 0.05;
  double sigma_theta = 0.02;
  double sigma_ba = 0.05;
  double sigma_bw = 0.001;
  double sigma_pu = 0.1;
  double sigma_td = 0.02;
  Vec3 pu_offset{0.0577350269189626, -0.0577350269189626, 0.0577350269189626};
  double td_offset = 0.02;
  bool sample_initial_errors = true;
  double gate = 25.0;
  DelayMode mode = DelayMode::propagate_by_td;
};

struct Scenario {
  std::string name = "scenario";
  AnchorSet anchors = AnchorSet::from_positions({{0.0, 0.0, 0.3}, {6.0, 0.0, 2.6}, {0.0, 5.0, 2.2}, {6.0, 5.0, 0.6}});
  TrajectoryKind trajectory_kind = TrajectoryKind::full_excitation;
  TrajectoryParams trajectory = [] {
    TrajectoryParams t;
    t.position = Vec3(3.0, 2.5, 1.2);
    return t;
  }();
  NoiseConfig noise{0.05, 0.005, 1e-3, 1e-4, 0.05, 0};
  Vec3 p_IU{0.12, -0.08, 0.138564064605510};
  double t_d = 0.05;
  Vec3 b_a0 = Vec3::Zero();
  Vec3 b_w0 = Vec3::Zero();
  double imu_rate = 200.0;
  double uwb_rate = 20.0;
  double duration = 60.0;
  std::uint64_t seed = 1;
  FilterSetup filter;

  Trajectory make_trajectory() const {
    TrajectoryParams p = trajectory;
    p.duration = duration;
    return {trajectory_kind, p};
  }

  void validate() const {
    if (!(imu_rate > 0.0)) throw ConfigError("imu_rate", "must be > 0");
    if (!(uwb_rate > 0.0)) throw ConfigError("uwb_rate", "must be > 0");
    if (!(duration > 0.0)) throw ConfigError("duration", "must be > 0");
    if (!(t_d >= 0.0) || !(t_d < duration)) throw ConfigError("truth.t_d", "must lie in [0, duration)");
    try {
      noise.validate();
    } catch (const InvalidArgument& e) {
      throw ConfigError("noise", e.what());
    }
    try {
      anchors.validate();
    } catch (const InvalidArgument& e) {
      throw ConfigError("anchors", e.what());
    }
    try {
      make_trajectory();
    } catch (const InvalidArgument& e) {
      throw ConfigError("trajectory", e.what());
    }
  }
};

struct SimulationOutput {
  Dataset dataset;
  TruthSeries truth;  // at IMU rate, keyed by true time
};

/// Round a timestamp to whole nanoseconds so IMU and UWB stamps that
/// coincide compare equal.
inline double quantize_time(double t) { return std::round(t * 1e9) / 1e9; }

/// IMU sample k is taken at true time k / imu_rate and stamped t_d later;
/// range epoch j is taken and stamped at j / uwb_rate. Both streams sample
/// true time over [0, duration]. Biases follow discrete random walks.
inline SimulationOutput simulate(const Scenario& sc) {
  sc.validate();
  const Trajectory traj = sc.make_trajectory();
  Rng rng(sc.seed);
  SimulationOutput out;

  const double dt = 1.0 / sc.imu_rate;
  const auto n_imu = static_cast<long>(std::floor(sc.duration * sc.imu_rate + 1e-9));
  Vec3 ba = sc.b_a0, bw = sc.b_w0;
  std::vector<Record> imu;
  imu.reserve(static_cast<std::size_t>(n_imu + 1));
  for (long k = 0; k <= n_imu; ++k) {
    const double tau = quantize_time(static_cast<double>(k) * dt);
    const KinematicSample ks = traj.sample(tau);
    ImuSample u = synth_imu(ks, quantize_time(tau + sc.t_d), ba, bw, sc.noise, &rng);
    imu.push_back(Record::of(u));
    State s;
    s.p_WI = ks.p;
    s.v_WI = ks.v;
    s.q_WI = ks.q;
    s.b_a = ba;
    s.b_w = bw;
    s.p_IU = sc.p_IU;
    s.t_d = sc.t_d;
    out.truth.push_back({tau, s});
    ba += gaussian3(rng, sc.noise.sigma_ba * std::sqrt(dt));
    bw += gaussian3(rng, sc.noise.sigma_bw * std::sqrt(dt));
  }

  std::vector<Record> ranges;
  const auto n_uwb = static_cast<long>(std::floor(sc.duration * sc.uwb_rate + 1e-9));
  for (long j = 0; j <= n_uwb; ++j) {
    const double t = quantize_time(static_cast<double>(j) / sc.uwb_rate);
    const State s = traj.state(t, Vec3::Zero(), Vec3::Zero(), sc.p_IU, sc.t_d);
    for (const RangeSample& r : synth_range(sc.anchors, s, sc.noise, &rng, t)) ranges.push_back(Record::of(r));
  }

  // Merge by time; on equal stamps IMU records come first.
  out.dataset.records.reserve(imu.size() + ranges.size());
  std::size_t a = 0, b = 0;
  while (a < imu.size() || b < ranges.size()) {
    if (b == ranges.size() || (a < imu.size() && imu[a].t <= ranges[b].t)) {
      out.dataset.records.push_back(imu[a++]);
    } else {
      out.dataset.records.push_back(ranges[b++]);
    }
  }
  return out;
}

/// Filter configuration for a scenario: the truth at the first IMU sample
/// plus the configured prior offsets and, optionally, errors drawn from P0.
inline FilterConfig make_filter_config(const Scenario& sc, const TruthSeries& truth) {
  if (truth.empty()) throw InvalidArgument("make_filter_config: empty truth");
  const FilterSetup& f = sc.filter;
  FilterConfig cfg;
  cfg.P0 = diagonal_covariance(f.sigma_p, f.sigma_v, f.sigma_theta, f.sigma_ba, f.sigma_bw, f.sigma_pu, f.sigma_td);
  cfg.noise = sc.noise;
  cfg.imu_period = 1.0 / sc.imu_rate;
  cfg.gate = f.gate;
  cfg.mode = f.mode;

  ErrVec e = ErrVec::Zero();
  if (f.sample_initial_errors) {
    Rng rng(sc.seed ^ 0x9e3779b97f4a7c15ULL);
    std::normal_distribution<double> n(0.0, 1.0);
    for (int i = 0; i < err::pu; ++i) e[i] = std::sqrt(cfg.P0(i, i)) * n(rng);
  }
  e.segment<3>(err::pu) = f.pu_offset;
  e[err::td] = f.td_offset;
  cfg.initial = boxplus(truth.front().x, e);
  return cfg;
}

}  // namespace uwbimu
