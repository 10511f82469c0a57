// Copyright 2026 The uwbimu Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>

#include "test_util.hpp"
#include "uwbimu/identifiability.hpp"

using namespace uwbimu;
using namespace uwbimu::testing;

namespace {

// State at rest with identity attitude, IMU at the origin.
State rest_state(const Vec3& p_IU, double t_d) {
  State x;
  x.p_IU = p_IU;
  x.t_d = t_d;
  return x;
}

double loglog_slope(const std::vector<double>& xs, const std::vector<double>& ys) {
  double mx = 0.0, my = 0.0;
  const auto n = static_cast<double>(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += std::log(xs[i]) / n;
    my += std::log(ys[i]) / n;
  }
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxy += (std::log(xs[i]) - mx) * (std::log(ys[i]) - my);
    sxx += (std::log(xs[i]) - mx) * (std::log(xs[i]) - mx);
  }
  return sxy / sxx;
}

std::vector<double> log_grid(double lo, double hi, int n) {
  std::vector<double> out;
  for (int i = 0; i < n; ++i) out.push_back(lo * std::pow(hi / lo, static_cast<double>(i) / (n - 1)));
  return out;
}

}  // namespace

TEST(AccelSensitivity, ZeroDelayGivesZero) {
  const State x = rest_state(Vec3(0.1, 0.2, 0.3), 0.0);
  for (int c = 0; c < 3; ++c) EXPECT_EQ(accel_sensitivity(x, hover_input(x), Vec3(2, 1, 0), c), 0.0);
}

TEST(AccelSensitivity, UnitResidualAlongAxis) {
  // dp = (1, 0, 0), R = I, t_d = 0.1. Magnitude 1/2 t_d^2; the sign follows
  // the derivative of 1/2 |p_i - p_U|^2 as the radio moves toward the anchor.
  const State x = rest_state(Vec3::Zero(), 0.1);
  const ImuSample u = hover_input(x);
  const double s = accel_sensitivity(x, u, Vec3(1, 0, 0), 0);
  EXPECT_NEAR(std::abs(s), 0.005, 1e-15);
  EXPECT_NEAR(s, sensitivity_oracle(x, u, Vec3(1, 0, 0), InputChannel::accel, 0), 1e-12);
  EXPECT_NEAR(s, -0.005, 1e-15);
  EXPECT_NEAR(accel_sensitivity(x, u, Vec3(1, 0, 0), 1), 0.0, 1e-15);
}

TEST(AccelSensitivity, CoLocatedRadioGivesZeroAndFailsT1) {
  const State x = rest_state(Vec3(0.1, -0.2, 0.05), 0.05);
  const ImuSample u = hover_input(x);
  const Vec3 anchor = x.radio_position();
  for (int c = 0; c < 3; ++c) EXPECT_NEAR(accel_sensitivity(x, u, anchor, c), 0.0, 1e-15);
  const AnchorSet anchors = AnchorSet::from_positions({anchor, {4, 0, 1}, {0, 4, 2}});
  EXPECT_FALSE(classify(x, u, anchors, ExcitationReport::all(true)).T1);
}

TEST(AccelSensitivity, RejectsBadArguments) {
  State x = rest_state(Vec3::Zero(), 0.1);
  EXPECT_THROW(accel_sensitivity(x, hover_input(x), Vec3(1, 0, 0), 3), InvalidArgument);
  x.t_d = -0.01;
  EXPECT_THROW(accel_sensitivity(x, hover_input(x), Vec3(1, 0, 0), 0), InvalidArgument);
  EXPECT_THROW(gyro_sensitivity(x, hover_input(x), Vec3(1, 0, 0), 0), InvalidArgument);
}

TEST(GyroSensitivity, CoLocatedImuAndRadioGivesZero) {
  Rng rng(51);
  State x = rand_state(rng);
  x.p_IU.setZero();
  for (int c = 0; c < 3; ++c) EXPECT_EQ(gyro_sensitivity(x, rand_imu(rng), rand_vec(rng, 3.0), c), 0.0);
}

TEST(GyroSensitivity, AxisAlignedWithLeverArmGivesZero) {
  const State x = rest_state(Vec3(0.0, 0.3, 0.0), 0.08);
  EXPECT_NEAR(gyro_sensitivity(x, hover_input(x), Vec3(2, 1, -1), 1), 0.0, 1e-15);
}

TEST(GyroSensitivity, HandComputedTripleProduct) {
  // p_i^I = (0, 1, 0), p_IU = (0, 0, 0.1), axis x, t_d = 0.1.
  const State x = rest_state(Vec3(0, 0, 0.1), 0.1);
  const ImuSample u = hover_input(x);
  const Vec3 anchor(0, 1, 0);
  EXPECT_NEAR(gyro_triple_product(x, anchor, 0), -0.01, 1e-15);
  const double s = gyro_sensitivity(x, u, anchor, 0);
  EXPECT_NEAR(s, sensitivity_oracle(x, u, anchor, InputChannel::gyro, 0), 1e-12);
  EXPECT_NEAR(s, 0.01, 1e-15);
}

TEST(GyroSensitivity, TripleProductIsMinusSensitivityAtHover) {
  Rng rng(52);
  for (int k = 0; k < 200; ++k) {
    State x = rand_state(rng);
    x.v_WI.setZero();
    const ImuSample u = hover_input(x);
    const Vec3 anchor = rand_vec(rng, 3.0);
    for (int c = 0; c < 3; ++c) {
      EXPECT_NEAR(gyro_sensitivity(x, u, anchor, c), -gyro_triple_product(x, anchor, c), 1e-12);
    }
  }
}

TEST(Sensitivity, ClosedFormsMatchOracle) {
  Rng rng(53);
  double worst = 0.0;
  for (int k = 0; k < 1000; ++k) {
    const State x = rand_state(rng);
    const ImuSample u = rand_imu(rng);
    const Vec3 anchor = rand_vec(rng, 4.0);
    for (int c = 0; c < 3; ++c) {
      const double sa = accel_sensitivity(x, u, anchor, c);
      const double oa = sensitivity_oracle(x, u, anchor, InputChannel::accel, c);
      const double sg = gyro_sensitivity(x, u, anchor, c);
      const double og = sensitivity_oracle(x, u, anchor, InputChannel::gyro, c);
      worst = std::max(worst, std::abs(sa - oa) / std::max(1e-8, 1e-4 * std::abs(sa)));
      worst = std::max(worst, std::abs(sg - og) / std::max(1e-8, 1e-4 * std::abs(sg)));
    }
  }
  EXPECT_LE(worst, 1.0);
}

TEST(Sensitivity, DelayScalingExponents) {
  Rng rng(54);
  const std::vector<double> tds = log_grid(1e-3, 1e-1, 25);
  for (int k = 0; k < 20; ++k) {
    State x = rand_state(rng);
    x.v_WI.setZero();
    const Vec3 anchor = rand_vec(rng, 4.0);
    const int c = k % 3;
    std::vector<double> sa, sg;
    for (double td : tds) {
      x.t_d = td;
      const ImuSample u = hover_input(x);
      sa.push_back(std::abs(accel_sensitivity(x, u, anchor, c)));
      sg.push_back(std::abs(gyro_sensitivity(x, u, anchor, c)));
    }
    EXPECT_NEAR(loglog_slope(tds, sa), 2.0, 0.05);
    EXPECT_NEAR(loglog_slope(tds, sg), 1.0, 0.05);
  }
}

TEST(SConditions, EachConstructionZeroesItsSensitivity) {
  Rng rng(55);
  for (int k = 0; k < 100; ++k) {
    State x = rand_state(rng);
    x.v_WI.setZero();
    const Vec3 anchor = rand_vec(rng, 4.0);

    State s1 = x;
    s1.t_d = 0.0;
    EXPECT_TRUE(s_conditions(s1, anchor).s[0]);
    for (int c = 0; c < 3; ++c) {
      EXPECT_LT(std::abs(accel_sensitivity(s1, hover_input(s1), anchor, c)), kSensitivityZeroTol);
      EXPECT_LT(std::abs(gyro_sensitivity(s1, hover_input(s1), anchor, c)), kSensitivityZeroTol);
    }

    State s2 = x;
    s2.p_IU.setZero();
    EXPECT_TRUE(s_conditions(s2, anchor).s[1]);
    for (int c = 0; c < 3; ++c) {
      EXPECT_LT(std::abs(gyro_sensitivity(s2, hover_input(s2), anchor, c)), kSensitivityZeroTol);
    }

    // S3: anchor at the IMU origin.
    EXPECT_TRUE(s_conditions(x, x.p_WI).s[2]);
    for (int c = 0; c < 3; ++c) {
      EXPECT_LT(std::abs(gyro_sensitivity(x, hover_input(x), x.p_WI, c)), kSensitivityZeroTol);
    }

    for (int c = 0; c < 3; ++c) {
      // S4 / S6 / S8: lever arm along the axis.
      State sa = x;
      sa.p_IU = Vec3::Unit(c) * (0.1 + std::abs(x.p_IU.norm()));
      EXPECT_TRUE(s_conditions(sa, anchor).s[3 + 2 * c]);
      EXPECT_LT(std::abs(gyro_sensitivity(sa, hover_input(sa), anchor, c)), kSensitivityZeroTol);

      // S5 / S7 / S9: anchor along the axis in the IMU frame.
      const Vec3 along = x.p_WI + x.R() * (Vec3::Unit(c) * (1.0 + anchor.norm()));
      EXPECT_TRUE(s_conditions(x, along).s[4 + 2 * c]);
      EXPECT_LT(std::abs(gyro_sensitivity(x, hover_input(x), along, c)), kSensitivityZeroTol);
    }
  }
}

TEST(SConditions, LeverArmAlignmentsAreExclusive) {
  Rng rng(56);
  for (int k = 0; k < 1000; ++k) {
    State x = rand_state(rng);
    if (k % 4 == 0) x.p_IU = Vec3::Unit(k % 3) * 0.2;
    const Vec3 anchor = (k % 5 == 0) ? Vec3(x.p_WI + x.R() * Vec3::Unit(k % 3)) : rand_vec(rng, 3.0);
    const SConditions s = s_conditions(x, anchor);
    EXPECT_FALSE(s.s[3] && s.s[5] && s.s[7]);
    if (!s.s[2]) EXPECT_FALSE(s.s[4] && s.s[6] && s.s[8]);
  }
}

TEST(SConditions, SecondAnchorEscapesAxisAlignment) {
  Rng rng(57);
  std::uniform_int_distribution<int> axis_dist(0, 2);
  for (int k = 0; k < 500; ++k) {
    State x = rand_state(rng);
    x.v_WI.setZero();
    const int c = axis_dist(rng);
    if (s_conditions(x, Vec3::Zero()).s[3 + 2 * c]) continue;
    // First anchor on the axis (S5/S7/S9 for axis c), second generic.
    const Vec3 a1 = x.p_WI + x.R() * Vec3::Unit(c) * 2.0;
    const Vec3 a2 = x.p_WI + x.R() * rand_vec(rng, 2.0);
    const ImuSample u = hover_input(x);
    EXPECT_LT(std::abs(gyro_sensitivity(x, u, a1, c)), kSensitivityZeroTol);
    const double best = std::max(std::abs(gyro_sensitivity(x, u, a1, c)), std::abs(gyro_sensitivity(x, u, a2, c)));
    EXPECT_GT(best, kSensitivityZeroTol);
  }
}

TEST(Classify, FullExcitationIsIdentifiable) {
  const Trajectory traj = make_full_excitation();
  const AnchorSet anchors = AnchorSet::from_positions({{3, 0, 0.3}, {6, 4, 2.6}, {-3, 5, 2.2}});
  const ExcitationReport ex = excitation_report(traj, 0.0, 20.0);
  const State x = traj.state(2.3, Vec3::Zero(), Vec3::Zero(), Vec3(0.12, -0.08, 0.14), 0.05);
  const ImuSample u = synth_imu(traj, 2.3, Vec3::Zero(), Vec3::Zero(), NoiseConfig{}, nullptr);
  const IdentifiabilityReport r = classify(x, u, anchors, ex);
  EXPECT_TRUE(r.T1);
  EXPECT_TRUE(r.T2);
  EXPECT_TRUE(r.T3);
  EXPECT_TRUE(r.triggered.empty());
  EXPECT_EQ(r.verdict, Verdict::identifiable);
}

TEST(Classify, StaticIsNotIdentifiable) {
  const Trajectory traj = make_static(Vec3(1, 2, 1), UnitQuaternion::identity());
  const AnchorSet anchors = AnchorSet::from_positions({{3, 0, 0.3}, {6, 4, 2.6}, {-3, 5, 2.2}});
  const ExcitationReport ex = excitation_report(traj, 0.0, 10.0);
  const State x = traj.state(1.0, Vec3::Zero(), Vec3::Zero(), Vec3(0.12, -0.08, 0.14), 0.05);
  const ImuSample u = synth_imu(traj, 1.0, Vec3::Zero(), Vec3::Zero(), NoiseConfig{}, nullptr);
  const IdentifiabilityReport r = classify(x, u, anchors, ex);
  EXPECT_FALSE(r.T2);
  EXPECT_FALSE(r.T3);
  EXPECT_EQ(r.verdict, Verdict::not_identifiable);
}

TEST(Classify, RotationOnlyWithCoLocatedRadioIsNotIdentifiable) {
  const Trajectory traj = make_single_axis_rotation(2, 1.0, Vec3(1, 2, 1));
  const AnchorSet anchors = AnchorSet::from_positions({{3, 0, 0.3}, {6, 4, 2.6}, {-3, 5, 2.2}});
  const ExcitationReport ex = excitation_report(traj, 0.0, 10.0);
  const State x = traj.state(1.0, Vec3::Zero(), Vec3::Zero(), Vec3::Zero(), 0.05);
  const ImuSample u = synth_imu(traj, 1.0, Vec3::Zero(), Vec3::Zero(), NoiseConfig{}, nullptr);
  const IdentifiabilityReport r = classify(x, u, anchors, ex);
  EXPECT_FALSE(r.T3);
  EXPECT_NE(std::find(r.triggered.begin(), r.triggered.end(), 2), r.triggered.end());
  EXPECT_EQ(r.verdict, Verdict::not_identifiable);
}

TEST(Classify, VerdictFollowsFlags) {
  Rng rng(58);
  for (int k = 0; k < 200; ++k) {
    const State x = rand_state(rng);
    const AnchorSet anchors = AnchorSet::from_positions({rand_vec(rng, 3.0), rand_vec(rng, 3.0), rand_vec(rng, 3.0)});
    ExcitationReport ex;
    for (auto& e : ex.excited) e = std::bernoulli_distribution(0.5)(rng);
    const IdentifiabilityReport r = classify(x, rand_imu(rng), anchors, ex);
    const bool flags = r.T1 && (r.T2 || r.T3);
    EXPECT_EQ(r.verdict != Verdict::not_identifiable, flags);
  }
}
