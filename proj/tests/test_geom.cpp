// Copyright 2026 The uwbimu Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>

#include "test_util.hpp"
#include "uwbimu/geom.hpp"

using namespace uwbimu;
using namespace uwbimu::testing;

TEST(RotationMatrix, IdentityQuaternionGivesIdentity) {
  EXPECT_TRUE(rotation_matrix(UnitQuaternion(1, 0, 0, 0)).isApprox(Mat3::Identity(), 1e-15));
}

TEST(RotationMatrix, QuarterTurnAboutZMapsXToY) {
  const double h = std::sqrt(0.5);
  const Vec3 y = rotation_matrix(UnitQuaternion(h, 0, 0, h)) * Vec3::UnitX();
  EXPECT_NEAR((y - Vec3::UnitY()).norm(), 0.0, 1e-15);
}

TEST(RotationMatrix, RandomQuaternionsGiveProperRotations) {
  Rng rng(11);
  for (int i = 0; i < 1000; ++i) {
    const Mat3 r = rotation_matrix(rand_quat(rng));
    EXPECT_LT((r * r.transpose() - Mat3::Identity()).norm(), 1e-12);
    EXPECT_NEAR(r.determinant(), 1.0, 1e-12);
  }
}

TEST(RotationMatrix, RejectsNonNormalizedInput) {
  EXPECT_THROW(rotation_matrix(UnitQuaternion(1.0, 0.01, 0, 0)), InvalidArgument);
  EXPECT_NO_THROW(rotation_matrix(UnitQuaternion(1.0 + 1e-8, 0, 0, 0)));
}

TEST(RotationMatrix, DoubleCover) {
  Rng rng(12);
  for (int i = 0; i < 200; ++i) {
    const UnitQuaternion q = rand_quat(rng);
    const UnitQuaternion m(Vec4(-q.coeffs()));
    EXPECT_LT((rotation_matrix(q) - rotation_matrix(m)).norm(), 1e-15);
  }
}

TEST(RotationMatrix, AgreesWithHamiltonProductAction) {
  Rng rng(13);
  for (int i = 0; i < 200; ++i) {
    const UnitQuaternion q = rand_quat(rng);
    const Vec3 v = rand_vec(rng);
    const UnitQuaternion pv(Vec4(0.0, v.x(), v.y(), v.z()));
    const Vec4 rotated = (q * pv * q.conjugate()).coeffs();
    EXPECT_LT((rotated.tail<3>() - rotation_matrix(q) * v).norm(), 1e-12);
  }
}

TEST(RotationMatrix, NormalizeReachesUnitNorm) {
  Rng rng(14);
  for (int i = 0; i < 100; ++i) {
    UnitQuaternion q(Vec4(3.0 * rand_quat(rng).coeffs()));
    q.normalize();
    EXPECT_NEAR(q.coeffs().squaredNorm(), 1.0, 1e-12);
  }
}

TEST(OmegaMatrix, ZeroRateGivesZero) { EXPECT_TRUE(omega_matrix(Vec3::Zero()).isZero(0.0)); }

TEST(OmegaMatrix, UnitXRateEntries) {
  const Mat4 o = omega_matrix(Vec3::UnitX());
  EXPECT_EQ(o(1, 0), 1.0);
  EXPECT_EQ(o(0, 1), -1.0);
}

TEST(OmegaMatrix, IsAntisymmetric) {
  Rng rng(15);
  for (int i = 0; i < 100; ++i) {
    const Mat4 o = omega_matrix(rand_vec(rng));
    EXPECT_TRUE((o + o.transpose()).isZero(0.0));
  }
}

TEST(XiMatrix, IdentityQuaternionLayout) {
  Eigen::Matrix<double, 4, 3> expected;
  expected << 0, 0, 0, 1, 0, 0, 0, 1, 0, 0, 0, 1;
  EXPECT_TRUE(xi_matrix(UnitQuaternion(1, 0, 0, 0)).isApprox(expected, 0.0));
}

TEST(XiMatrix, MatchesOmegaForm) {
  Rng rng(16);
  for (int i = 0; i < 1000; ++i) {
    const UnitQuaternion q = rand_quat(rng);
    const Vec3 w = rand_vec(rng);
    const Vec4 a = 0.5 * xi_matrix(q) * w;
    const Vec4 b = 0.5 * omega_matrix(w) * q.coeffs();
    EXPECT_LT((a - b).norm(), 1e-12);
  }
}

TEST(XiMatrix, ColumnsOrthogonalToQuaternion) {
  Rng rng(17);
  for (int i = 0; i < 200; ++i) {
    const UnitQuaternion q = rand_quat(rng);
    EXPECT_LT((q.coeffs().transpose() * xi_matrix(q)).norm(), 1e-15);
  }
}

TEST(Skew, ZeroVectorGivesZero) { EXPECT_TRUE(skew(Vec3::Zero()).isZero(0.0)); }

TEST(Skew, CrossProductAxiom) {
  EXPECT_TRUE((skew(Vec3::UnitX()) * Vec3::UnitY()).isApprox(Vec3::UnitZ()));
  Rng rng(18);
  for (int i = 0; i < 200; ++i) {
    const Vec3 v = rand_vec(rng), w = rand_vec(rng);
    EXPECT_LT((skew(v) * w - v.cross(w)).norm(), 1e-14);
    EXPECT_NEAR(w.dot(skew(v) * w), 0.0, 1e-14);
    EXPECT_TRUE((skew(v).transpose() + skew(v)).isZero(0.0));
  }
}

TEST(FirstOrderIncrement, ZeroStepLeavesRotation) {
  Rng rng(19);
  const Mat3 r = rotation_matrix(rand_quat(rng));
  EXPECT_EQ(first_order_rotation_increment(r, rand_vec(rng), 0.0), r);
}

TEST(FirstOrderIncrement, SmallStepNearExactExponential) {
  // The first-order error at dt = 1e-3 is (1 - cos(1e-3)) ~ 5e-7.
  const Mat3 approx = first_order_rotation_increment(Mat3::Identity(), Vec3::UnitZ(), 1e-3);
  EXPECT_TRUE(approx.isApprox(Mat3::Identity() + 1e-3 * skew(Vec3::UnitZ()), 0.0));
  const Mat3 exact = rotation_exp(Vec3(0, 0, 1e-3));
  EXPECT_LT((approx - exact).norm(), 1e-6);
}

TEST(FirstOrderIncrement, ErrorIsSecondOrderInStep) {
  Rng rng(20);
  const Mat3 r = rotation_matrix(rand_quat(rng));
  const Vec3 w(0.3, -0.7, 1.1);
  std::vector<double> c;
  for (double dt : {1e-2, 1e-3, 1e-4}) {
    const double e = (first_order_rotation_increment(r, w, dt) - r * rotation_exp(w * dt)).norm();
    c.push_back(e / (dt * dt));
  }
  EXPECT_NEAR(c[1] / c[0], 1.0, 0.02);
  EXPECT_NEAR(c[2] / c[1], 1.0, 0.02);
}

TEST(FirstOrderIncrement, AgreesWithQuaternionKinematicsToSecondOrder) {
  Rng rng(21);
  const UnitQuaternion q = rand_quat(rng);
  const Vec3 w = rand_vec(rng);
  std::vector<double> err;
  for (double dt : {1e-2, 1e-3}) {
    // One Euler step of q_dot = 1/2 Omega(w) q, then renormalized.
    UnitQuaternion q1(Vec4(q.coeffs() + 0.5 * dt * omega_matrix(w) * q.coeffs()));
    q1.normalize();
    err.push_back((rotation_matrix(q1) - first_order_rotation_increment(rotation_matrix(q), w, dt)).norm());
  }
  EXPECT_LT(err[1], err[0] / 50.0);
}

TEST(RotationExp, MatchesQuaternionExp) {
  Rng rng(22);
  for (int i = 0; i < 200; ++i) {
    const Vec3 phi = rand_vec(rng);
    EXPECT_LT((rotation_exp(phi) - rotation_matrix(UnitQuaternion::exp(phi))).norm(), 1e-12);
  }
}

TEST(QuaternionLog, InvertsExp) {
  Rng rng(23);
  for (int i = 0; i < 200; ++i) {
    Vec3 phi = rand_vec(rng, 0.8);
    // log returns the principal angle
    if (phi.norm() > 3.0) phi *= 3.0 / phi.norm();
    EXPECT_LT((UnitQuaternion::exp(phi).log() - phi).norm(), 1e-12);
  }
}

TEST(RotatePointJacobian, MatchesCentralDifferences) {
  Rng rng(24);
  for (int i = 0; i < 100; ++i) {
    const Vec4 q = rand_quat(rng).coeffs();
    const Vec3 p = rand_vec(rng);
    const Eigen::Matrix<double, 3, 4> j = rotate_point_jacobian(q, p);
    for (int k = 0; k < 4; ++k) {
      Vec4 qp = q, qm = q;
      qp[k] += 1e-6;
      qm[k] -= 1e-6;
      const Vec3 d = (rotation_matrix_ambient<double>(qp) * p - rotation_matrix_ambient<double>(qm) * p) / 2e-6;
      EXPECT_LT((d - j.col(k)).norm(), 1e-8);
    }
  }
}
