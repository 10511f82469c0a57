// Copyright 2026 The uwbimu Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "test_util.hpp"
#include "uwbimu/trajectories.hpp"

using namespace uwbimu;
using namespace uwbimu::testing;

namespace {

std::vector<Trajectory> generators(Rng& rng) {
  std::uniform_real_distribution<double> u(0.2, 2.0);
  std::uniform_int_distribution<int> ax(0, 2);
  TrajectoryParams fp;
  fp.pos_amplitude = Vec3(u(rng), u(rng), u(rng)) * 0.2;
  fp.pos_frequency = Vec3(u(rng), u(rng), u(rng));
  fp.att_amplitude = Vec3(u(rng), u(rng), u(rng)) * 0.4;
  fp.att_rate = Vec3(u(rng), u(rng), u(rng));
  fp.att_phase = Vec3(u(rng), u(rng), u(rng));
  return {make_static(rand_vec(rng), rand_quat(rng), 10.0),
          make_single_axis_accel(ax(rng), 0.1 * u(rng), u(rng), rand_vec(rng), rand_quat(rng), 10.0),
          make_single_axis_rotation(ax(rng), u(rng), rand_vec(rng), rand_quat(rng), 10.0),
          make_full_excitation(fp)};
}

/// Relative mismatch between a central difference and the supplied derivative.
double rel_mismatch(const Vec3& numeric, const Vec3& supplied) {
  return (numeric - supplied).norm() / std::max(supplied.norm(), 1e-3);
}

}  // namespace

TEST(Trajectory, DerivativesAreConsistent) {
  Rng rng(1);
  const double h = 1e-5;
  for (int trial = 0; trial < 20; ++trial) {
    for (const Trajectory& tr : generators(rng)) {
      for (double t : {0.5, 2.3, 7.9}) {
        const KinematicSample a = tr.sample(t - h), b = tr.sample(t + h), k = tr.sample(t);
        EXPECT_LT(rel_mismatch((b.p - a.p) / (2 * h), k.v), 1e-6) << to_string(tr.kind());
        EXPECT_LT(rel_mismatch((b.v - a.v) / (2 * h), k.a), 1e-6) << to_string(tr.kind());
        // Body rate from the quaternion derivative: w = 2 Xi(q)^T q_dot.
        const Vec4 qd = (b.q.coeffs() - a.q.coeffs()) / (2 * h);
        const Vec3 w = 2.0 * xi_matrix(k.q).transpose() * qd;
        EXPECT_LT(rel_mismatch(w, k.w_body), 1e-6) << to_string(tr.kind());
      }
    }
  }
}

TEST(Trajectory, OutsideDomainThrows) {
  const Trajectory t = make_full_excitation();
  EXPECT_THROW(t.sample(-1e-9), DomainError);
  EXPECT_THROW(t.sample(t.duration() + 1e-9), DomainError);
  EXPECT_NO_THROW(t.sample(t.duration()));
}

TEST(StaticTrajectory, PoseIsConstant) {
  Rng rng(2);
  const Vec3 p = rand_vec(rng);
  const UnitQuaternion q = rand_quat(rng);
  const Trajectory t = make_static(p, q);
  for (double s : {0.0, 13.0, 60.0}) {
    const KinematicSample k = t.sample(s);
    EXPECT_EQ(k.p, p);
    EXPECT_EQ(k.q.coeffs(), q.coeffs());
    EXPECT_TRUE(k.v.isZero(0.0) && k.a.isZero(0.0) && k.w_body.isZero(0.0));
  }
}

TEST(StaticTrajectory, ImuMeasuresGravityOnly) {
  Rng rng(3);
  const UnitQuaternion q = rand_quat(rng);
  const ImuSample u = synth_imu(make_static(Vec3::Zero(), q), 4.0, Vec3::Zero(), Vec3::Zero(), NoiseConfig{}, nullptr);
  EXPECT_LT((u.a_m - rotation_matrix(q).transpose() * kGravity).norm(), 1e-14);
  EXPECT_TRUE(u.w_m.isZero(0.0));
}

TEST(StaticTrajectory, NothingExcited) {
  const ExcitationReport r = excitation_report(make_static(Vec3::Zero(), UnitQuaternion()), 0.0, 60.0);
  for (bool e : r.excited) EXPECT_FALSE(e);
}

TEST(SingleAxisAccel, StartsAtCentreAndPeaksAtExpectedAcceleration) {
  const double A = 0.2, f = 1.5;
  const Trajectory t = make_single_axis_accel(1, A, f, Vec3(1, 2, 3));
  EXPECT_LT((t.sample(0.0).p - Vec3(1, 2, 3)).norm(), 1e-15);
  const double peak = t.sample(0.25 / f).a.norm();
  const double w = 2.0 * std::numbers::pi * f;
  EXPECT_NEAR(peak, A * w * w, 1e-12);
}

TEST(SingleAxisAccel, ExactlyOneAccelChannelExcited) {
  for (int axis = 0; axis < 3; ++axis) {
    const ExcitationReport r = excitation_report(make_single_axis_accel(axis, 0.1, 1.0), 0.0, 60.0);
    for (int c = 0; c < 3; ++c) {
      EXPECT_EQ(r.accel(c), c == axis);
      EXPECT_FALSE(r.gyro(c));
    }
  }
}

TEST(SingleAxisAccel, RejectsNonPositiveAmplitude) {
  EXPECT_THROW(make_single_axis_accel(0, 0.0, 1.0), InvalidArgument);
}

TEST(SingleAxisRotation, AttitudePeriod) {
  const double rate = 0.7;
  const Trajectory t = make_single_axis_rotation(2, rate);
  const double period = 2.0 * std::numbers::pi / rate;
  EXPECT_LT((rotation_matrix(t.sample(period).q) - Mat3::Identity()).norm(), 1e-12);
  EXPECT_GT((rotation_matrix(t.sample(0.5 * period).q) - Mat3::Identity()).norm(), 1.0);
}

TEST(SingleAxisRotation, OnlyItsGyroChannelExcitedAboutVertical) {
  const ExcitationReport r = excitation_report(make_single_axis_rotation(2, 0.5), 0.0, 60.0);
  EXPECT_FALSE(r.any_accel());
  EXPECT_FALSE(r.gyro(0));
  EXPECT_FALSE(r.gyro(1));
  EXPECT_TRUE(r.gyro(2));
}

TEST(SingleAxisRotation, RejectsZeroRate) { EXPECT_THROW(make_single_axis_rotation(0, 0.0), InvalidArgument); }

TEST(FullExcitation, AllChannelsExcited) {
  const ExcitationReport r = excitation_report(make_full_excitation(), 0.0, 60.0);
  for (bool e : r.excited) EXPECT_TRUE(e);
}

TEST(FullExcitation, StaysInsideBoundingBox) {
  TrajectoryParams p;
  p.position = Vec3(3, 2.5, 1.2);
  const Trajectory t = make_full_excitation(p);
  for (double s = 0.0; s <= 60.0; s += 0.01) {
    const Vec3 d = (t.sample(s).p - p.position).cwiseAbs();
    EXPECT_TRUE((d.array() <= p.pos_amplitude.array() + 1e-12).all());
  }
}

TEST(Excitation, MatchesConstructionOnRandomParameterizations) {
  Rng rng(4);
  std::uniform_real_distribution<double> u(0.3, 2.0);
  std::uniform_int_distribution<int> ax(0, 2);
  for (int i = 0; i < 100; ++i) {
    const int axis = ax(rng);
    const ExcitationReport s = excitation_report(make_static(rand_vec(rng), rand_quat(rng), 10.0), 0.0, 10.0);
    for (bool e : s.excited) EXPECT_FALSE(e);

    const ExcitationReport a =
        excitation_report(make_single_axis_accel(axis, 0.05 * u(rng), u(rng), Vec3::Zero(), UnitQuaternion(), 10.0),
                          0.0, 10.0);
    for (int c = 0; c < 3; ++c) EXPECT_EQ(a.accel(c), c == axis);
    EXPECT_FALSE(a.gyro(0) || a.gyro(1) || a.gyro(2));

    const ExcitationReport g =
        excitation_report(make_single_axis_rotation(axis, u(rng), Vec3::Zero(), UnitQuaternion(), 10.0), 0.0, 10.0);
    for (int c = 0; c < 3; ++c) EXPECT_EQ(g.gyro(c), c == axis);

    TrajectoryParams fp;
    fp.pos_amplitude = 0.1 * Vec3(u(rng), u(rng), u(rng));
    fp.pos_frequency = Vec3(u(rng), u(rng), u(rng));
    fp.att_amplitude = 0.3 * Vec3(u(rng), u(rng), u(rng));
    fp.att_rate = Vec3(u(rng), u(rng), u(rng));
    fp.duration = 10.0;
    const ExcitationReport f = excitation_report(make_full_excitation(fp), 0.0, 10.0);
    for (bool e : f.excited) EXPECT_TRUE(e);
  }
}

TEST(Excitation, EmptyWindowThrows) {
  EXPECT_THROW(excitation_report(make_full_excitation(), 5.0, 5.0), InvalidArgument);
}
