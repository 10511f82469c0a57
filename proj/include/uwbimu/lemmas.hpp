// Copyright 2026 The uwbimu Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Sampled checks of the closed-form determinants behind the rank argument:
// det(dp_ijk), F5 F0 - F6 (9x4), F13 R - F15 (9x3) and F5 F3 + F18 (9x3).
// Every closed form assumes the canonical anchor frame: anchor i at the
// origin, j on +y, k in the xy-plane.

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "uwbimu/errors.hpp"
#include "uwbimu/geom.hpp"
#include "uwbimu/models.hpp"
#include "uwbimu/observability.hpp"

namespace uwbimu {

struct LemmaCase {
  StateVector x = StateVector::Zero();  // canonical frame
  double pjy = 1.0, pkx = 1.0, pky = 0.0;
  Mat3 C = Mat3::Identity();  // world -> canonical rotation
  Vec3 origin = Vec3::Zero();  // world position of anchor i

  Mat3 anchors() const {
    Mat3 a;
    a << 0.0, 0.0, 0.0, 0.0, pjy, 0.0, pkx, pky, 0.0;
    return a;
  }
  Vec3 p() const { return x.segment<3>(idx::p); }
  Vec4 q() const { return x.segment<4>(idx::q); }
  Vec3 pu() const { return x.segment<3>(idx::pu); }
  Vec3 radio() const { return rotation_matrix_ambient<double>(q()) * pu() + p(); }
};

/// Rigid change of world frame putting the three anchors in canonical position.
/// Velocity and attitude are rotated; body-frame quantities are untouched.
inline LemmaCase to_canonical(const Mat3& anchors, const StateVector& x_world) {
  const Vec3 pi = anchors.row(0).transpose(), pj = anchors.row(1).transpose(), pk = anchors.row(2).transpose();
  const Vec3 dj = pj - pi, dk = pk - pi;
  const Vec3 n = dj.cross(dk);
  if (dj.norm() < kGeomEps || n.norm() < kGeomEps) throw InvalidArgument("to_canonical: anchors are collinear");
  const Vec3 ey = dj.normalized();
  const Vec3 ez = -n.normalized();  // makes p_kx positive
  const Vec3 ex = ey.cross(ez);
  LemmaCase c;
  c.C.row(0) = ex.transpose();
  c.C.row(1) = ey.transpose();
  c.C.row(2) = ez.transpose();
  c.origin = pi;
  c.pjy = dj.norm();
  c.pkx = ex.dot(dk);
  c.pky = ey.dot(dk);

  const Eigen::Quaterniond qc(c.C);
  const UnitQuaternion qC(qc.w(), qc.x(), qc.y(), qc.z());
  const UnitQuaternion qw(Vec4(x_world.segment<4>(idx::q)));
  c.x = x_world;
  c.x.segment<3>(idx::p) = c.C * (x_world.segment<3>(idx::p) - pi);
  c.x.segment<3>(idx::v) = c.C * x_world.segment<3>(idx::v);
  c.x.segment<4>(idx::q) = (qC * qw).coeffs();
  return c;
}

struct Terms3 {
  double t1 = 0.0, t2 = 0.0, t3 = 0.0;
  double operator[](int i) const { return i == 0 ? t1 : (i == 1 ? t2 : t3); }
};

inline Terms3 f_terms(const LemmaCase& c) {
  const double q0 = c.x[idx::q], q1 = c.x[idx::q + 1], q2 = c.x[idx::q + 2], q3 = c.x[idx::q + 3];
  const double px = c.x[0], py = c.x[1], pz = c.x[2];
  const double ux = c.x[idx::pu], uy = c.x[idx::pu + 1], uz = c.x[idx::pu + 2];
  Terms3 f;
  f.t1 = uz + pz - 2 * py * q0 * q1 - 2 * pz * q1 * q1 + 2 * px * q0 * q2 - 2 * pz * q2 * q2 + 2 * px * q1 * q3 +
         2 * py * q2 * q3;
  f.t2 = uy + py + 2 * pz * q0 * q1 - 2 * py * q1 * q1 + 2 * px * q1 * q2 - 2 * px * q0 * q3 + 2 * pz * q2 * q3 -
         2 * py * q3 * q3;
  f.t3 = ux + px - 2 * pz * q0 * q2 + 2 * py * q1 * q2 - 2 * px * q2 * q2 + 2 * py * q0 * q3 + 2 * pz * q1 * q3 -
         2 * px * q3 * q3;
  return f;
}

inline Terms3 g_terms(const LemmaCase& c) {
  const double q0 = c.x[idx::q], q1 = c.x[idx::q + 1], q2 = c.x[idx::q + 2], q3 = c.x[idx::q + 3];
  const double px = c.x[0], pz = c.x[2];
  const double ux = c.x[idx::pu], uy = c.x[idx::pu + 1], uz = c.x[idx::pu + 2];
  Terms3 g;
  g.t1 = uz + pz + 2 * uy * q0 * q1 - 2 * uz * q1 * q1 + 2 * px * q0 * q2 - 2 * pz * q2 * q2 - 2 * px * q1 * q3 -
         2 * uy * q2 * q3 - 2 * uz * q3 * q3 - 2 * pz * q3 * q3;
  g.t2 = ux * q0 * q1 + px * q0 * q1 + uz * q1 * q2 - pz * q1 * q2 + uz * q0 * q3 + pz * q0 * q3 - ux * q2 * q3 +
         px * q2 * q3;
  g.t3 = ux + px - 2 * ux * q1 * q1 - 2 * px * q1 * q1 - 2 * pz * q0 * q2 - 2 * uy * q1 * q2 - 2 * px * q2 * q2 -
         2 * uy * q0 * q3 - 2 * pz * q1 * q3 - 2 * ux * q3 * q3;
  return g;
}

/// Radio z-coordinate in the homogeneous form used by det(dp_ijk); also the
/// constraint the g-terms reduce to.
inline double radio_z_homogeneous(const LemmaCase& c) {
  const double q0 = c.x[idx::q], q1 = c.x[idx::q + 1], q2 = c.x[idx::q + 2], q3 = c.x[idx::q + 3];
  const double ux = c.x[idx::pu], uy = c.x[idx::pu + 1], uz = c.x[idx::pu + 2];
  return c.x[2] + ux * (-2 * q0 * q2 + 2 * q1 * q3) + uy * (2 * q0 * q1 + 2 * q2 * q3) +
         uz * (q0 * q0 - q1 * q1 - q2 * q2 + q3 * q3);
}

/// The same coordinate with |q| = 1 substituted (form used by the 4-row determinants).
inline double radio_z_unit(const LemmaCase& c) {
  const double q0 = c.x[idx::q], q1 = c.x[idx::q + 1], q2 = c.x[idx::q + 2], q3 = c.x[idx::q + 3];
  const double ux = c.x[idx::pu], uy = c.x[idx::pu + 1], uz = c.x[idx::pu + 2];
  return uz + c.x[2] + 2 * uy * q0 * q1 - 2 * uz * q1 * q1 - 2 * ux * q0 * q2 - 2 * uz * q2 * q2 + 2 * ux * q1 * q3 +
         2 * uy * q2 * q3;
}

inline double det_lemma1(const LemmaCase& c) { return c.pjy * c.pkx * radio_z_homogeneous(c); }

inline Mat3 dp_ijk(const LemmaCase& c) {
  const Mat3 a = c.anchors();
  const Vec3 radio = c.radio();
  Mat3 d;
  for (int i = 0; i < 3; ++i) d.row(i) = a.row(i) - radio.transpose();
  return d;
}

inline double det_lemma1_direct(const LemmaCase& c) { return dp_ijk(c).determinant(); }

/// A determinant over a 1-based row subset and its closed form
/// coefficient * p_jy * (p_kx * radio_z, Lemma 2 only) * f[f_index] * g[g_index].
struct ListedDeterminant {
  std::vector<int> rows;
  double coefficient = 1.0;
  int f_index = -1;
  int g_index = -1;

  std::string label() const {
    std::string s = "det(";
    for (std::size_t i = 0; i < rows.size(); ++i) s += (i ? "," : "") + std::to_string(rows[i]);
    return s + ")";
  }
};

inline std::vector<ListedDeterminant> listed_determinants(int lemma) {
  switch (lemma) {
    case 1: return {{{1, 2, 3}, 1.0, -1, -1}};
    case 2: return {{{1, 2, 3, 4}, -16.0, 0, -1}, {{1, 2, 3, 7}, 16.0, 1, -1}, {{4, 5, 6, 7}, -16.0, 2, -1}};
    case 3:
      return {{{1, 2, 4}, 1.0, 0, 0}, {{1, 4, 5}, 2.0, 0, 1}, {{1, 4, 8}, 1.0, 0, 2},
              {{1, 7, 2}, 1.0, 1, 0}, {{1, 7, 5}, 2.0, 1, 1}, {{1, 8, 7}, 1.0, 1, 2},
              {{2, 7, 4}, 1.0, 2, 0}, {{4, 7, 5}, 2.0, 2, 1}, {{4, 7, 8}, 1.0, 2, 2}};
    case 4:
      return {{{1, 2, 4}, -1.0, 0, 0}, {{1, 4, 5}, -2.0, 0, 1}, {{1, 4, 8}, -1.0, 0, 2},
              {{1, 7, 2}, -1.0, 1, 0}, {{1, 5, 7}, -2.0, 1, 1}, {{1, 8, 7}, -1.0, 1, 2},
              {{2, 7, 4}, -1.0, 2, 0}, {{4, 7, 5}, -2.0, 2, 1}, {{4, 7, 8}, -1.0, 2, 2}};
    default: throw InvalidArgument("listed_determinants: lemma id must be 1..4");
  }
}

inline double product_form(int lemma, const ListedDeterminant& d, const LemmaCase& c) {
  if (lemma == 1) return det_lemma1(c);
  const Terms3 f = f_terms(c);
  if (lemma == 2) return d.coefficient * c.pjy * c.pkx * radio_z_unit(c) * f[d.f_index];
  const Terms3 g = g_terms(c);
  return d.coefficient * c.pjy * f[d.f_index] * g[d.g_index];
}

/// The lemma's matrix assembled from the numeric observability gradients.
inline Mat lemma_matrix(int lemma, const LemmaCase& c, Engine engine = Engine::dual) {
  if (lemma == 1) return dp_ijk(c);
  if (lemma < 1 || lemma > 4) throw InvalidArgument("lemma_matrix: lemma id must be 1..4");
  const Mat3 a = c.anchors();
  StackGradients g;
  const auto& stack = observability_stack();
  if (lemma == 2 || lemma == 4) g.entries[3] = gradient(stack[3], c.x, a, engine);
  if (lemma == 3) g.entries[4] = gradient(stack[4], c.x, a, engine);
  if (lemma == 4) g.entries[5] = gradient(stack[5], c.x, a, engine);
  ObservabilityBlocks b;
  const Vec4 q = c.q();
  b.R = rotation_matrix_ambient<double>(q);
  b.F0 = rotate_point_jacobian(q, c.pu());
  b.F3 = 0.5 * b.F0 * xi_matrix<double>(q);
  switch (lemma) {
    case 2:
      b.F5 = g.L11().middleCols(idx::p, 3);
      b.F6 = g.L11().middleCols(idx::q, 4);
      return b.lemma2();
    case 3:
      b.F13 = g.L20().middleCols(idx::p, 3);
      b.F15 = g.L20().middleCols(idx::pu, 3);
      return b.lemma3();
    default:
      b.F5 = g.L11().middleCols(idx::p, 3);
      b.F18 = g.L011().middleCols(idx::bw, 3);
      return b.lemma4();
  }
}

inline double subset_determinant(const Mat& m, const std::vector<int>& rows) {
  Mat s(rows.size(), m.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) s.row(i) = m.row(rows[i] - 1);
  return s.determinant();
}

enum class LemmaSampling { generic, coplanar };

inline constexpr double kLemmaRelTol = 1e-6;
inline constexpr double kNonDegenerateFloor = 0.05;

/// Random case in the canonical frame, carried through a random rigid world
/// frame and back so the frame change is exercised. Generic cases keep every
/// f-, g-term and the radio height at least 0.05 in magnitude; coplanar cases
/// move the IMU vertically so the radio lies in the anchor plane.
inline LemmaCase sample_lemma_case(Rng& rng, LemmaSampling mode) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int attempt = 0; attempt < 10000; ++attempt) {
    const double pjy = 1.0 + 4.0 * (0.5 + 0.5 * u(rng));
    const double pkx = 1.0 + 4.0 * (0.5 + 0.5 * u(rng));
    const double pky = 3.0 * u(rng);
    Mat3 a;
    a << 0, 0, 0, 0, pjy, 0, pkx, pky, 0;
    StateVector x;
    x.segment<3>(idx::p) = Vec3(3.0 * u(rng), 3.0 * u(rng), 3.0 * u(rng));
    x.segment<3>(idx::v) = Vec3(n(rng), n(rng), n(rng));
    x.segment<4>(idx::q) = Vec4(n(rng), n(rng), n(rng), n(rng)).normalized();
    x.segment<3>(idx::ba) = 0.1 * Vec3(n(rng), n(rng), n(rng));
    x.segment<3>(idx::bw) = 0.1 * Vec3(n(rng), n(rng), n(rng));
    x.segment<3>(idx::pu) = 0.5 * Vec3(u(rng), u(rng), u(rng));
    if (mode == LemmaSampling::coplanar) {
      const Vec3 rpu = rotation_matrix_ambient<double>(Vec4(x.segment<4>(idx::q))) * x.segment<3>(idx::pu);
      x[idx::p + 2] = -rpu.z();
    }

    // Random rigid world frame, then back to canonical.
    const UnitQuaternion qw = UnitQuaternion(Vec4(n(rng), n(rng), n(rng), n(rng))).normalized();
    const Mat3 rw = rotation_matrix(qw);
    const Vec3 tw(5.0 * u(rng), 5.0 * u(rng), 5.0 * u(rng));
    Mat3 aw;
    for (int i = 0; i < 3; ++i) aw.row(i) = (rw * a.row(i).transpose() + tw).transpose();
    StateVector xw = x;
    xw.segment<3>(idx::p) = rw * x.segment<3>(idx::p) + tw;
    xw.segment<3>(idx::v) = rw * x.segment<3>(idx::v);
    xw.segment<4>(idx::q) = (qw * UnitQuaternion(Vec4(x.segment<4>(idx::q)))).coeffs();
    LemmaCase c = to_canonical(aw, xw);
    if (mode == LemmaSampling::coplanar) return c;

    const Terms3 f = f_terms(c), g = g_terms(c);
    bool ok = std::abs(radio_z_unit(c)) >= kNonDegenerateFloor;
    for (int i = 0; i < 3; ++i) ok = ok && std::abs(f[i]) >= kNonDegenerateFloor && std::abs(g[i]) >= kNonDegenerateFloor;
    if (ok) return c;
  }
  throw NumericalFailure("sample_lemma_case: could not draw a non-degenerate case");
}

struct DeterminantRecord {
  int lemma = 0;
  int sample = 0;
  std::string subset;
  double direct = 0.0;
  double product = 0.0;
  double rel_error = 0.0;
  bool sign_agrees = true;
  bool ok = false;
};

struct LemmaSummary {
  int lemma = 0;
  LemmaSampling sampling = LemmaSampling::generic;
  int n_samples = 0;
  int identity_failures = 0;
  int full_rank_cases = 0;   // generic samples whose matrix has full column rank
  int coplanar_collapses = 0;  // coplanar twins whose matrix lost rank
  int coplanar_listed_zero = 0;  // coplanar twins whose listed determinants all vanish
  double max_rel_error = 0.0;
  int sign_flips = 0;
  std::vector<DeterminantRecord> records;
  std::vector<int> ranks;
  std::vector<int> coplanar_ranks;

  bool identities_ok() const { return identity_failures == 0; }
  bool full_rank_ok() const { return full_rank_cases == n_samples; }
  bool collapse_ok() const { return coplanar_collapses == n_samples; }
  bool passed() const { return identities_ok() && full_rank_ok() && collapse_ok(); }
};

namespace detail {

inline LemmaCase coplanar_twin(const LemmaCase& c) {
  LemmaCase t = c;
  const Vec3 rpu = rotation_matrix_ambient<double>(c.q()) * c.pu();
  t.x[idx::p + 2] = -rpu.z();
  return t;
}

inline double scale_of(int lemma, const LemmaCase& c) {
  // Magnitude of a listed determinant's generic size, to judge "vanished".
  const double s = std::max({c.pjy, std::abs(c.pkx), 1.0}) * std::max(1.0, c.p().norm() + c.pu().norm());
  return lemma == 2 ? 16.0 * s * s * s : s * s * s;
}

}  // namespace detail

/// Samples n cases. For each: (a) every listed determinant equals its closed
/// form up to sign within 1e-6 relative; (b) the matrix has full column rank;
/// (c) the coplanar twin of the case (radio moved into the anchor plane) has
/// a rank-deficient matrix. With LemmaSampling::coplanar the primary samples
/// are themselves coplanar; (a) still applies and (b) is expected to fail.
inline LemmaSummary check_lemma(int lemma, int n_samples, std::uint64_t seed,
                                LemmaSampling sampling = LemmaSampling::generic, Engine engine = Engine::dual) {
  if (lemma < 1 || lemma > 4) throw InvalidArgument("check_lemma: lemma id must be 1..4");
  if (n_samples < 0) throw InvalidArgument("check_lemma: n_samples must be >= 0");
  LemmaSummary s;
  s.lemma = lemma;
  s.sampling = sampling;
  s.n_samples = n_samples;
  Rng rng(seed + 7919ULL * static_cast<std::uint64_t>(lemma));
  const auto listed = listed_determinants(lemma);
  for (int k = 0; k < n_samples; ++k) {
    const LemmaCase c = sample_lemma_case(rng, sampling);
    const Mat m = lemma_matrix(lemma, c, engine);
    for (const auto& d : listed) {
      DeterminantRecord r;
      r.lemma = lemma;
      r.sample = k;
      r.subset = d.label();
      r.direct = subset_determinant(m, d.rows);
      r.product = product_form(lemma, d, c);
      const double e_plus = std::abs(r.direct - r.product), e_minus = std::abs(r.direct + r.product);
      r.sign_agrees = e_plus <= e_minus;
      const double denom = sampling == LemmaSampling::coplanar
                               ? detail::scale_of(lemma, c)
                               : std::max(std::abs(r.product), std::numeric_limits<double>::min());
      r.rel_error = std::min(e_plus, e_minus) / denom;
      r.ok = r.rel_error < kLemmaRelTol;
      if (!r.ok) ++s.identity_failures;
      if (!r.sign_agrees) ++s.sign_flips;
      s.max_rel_error = std::max(s.max_rel_error, r.rel_error);
      s.records.push_back(r);
    }
    const int rank = numeric_rank(m).rank;
    s.ranks.push_back(rank);
    if (rank == m.cols()) ++s.full_rank_cases;

    const LemmaCase t = detail::coplanar_twin(c);
    const Mat mt = lemma_matrix(lemma, t, engine);
    const int trank = numeric_rank(mt).rank;
    s.coplanar_ranks.push_back(trank);
    if (trank < mt.cols()) ++s.coplanar_collapses;
    bool all_zero = true;
    for (const auto& d : listed) {
      all_zero = all_zero && std::abs(subset_determinant(mt, d.rows)) < 1e-9 * detail::scale_of(lemma, t);
    }
    if (all_zero) ++s.coplanar_listed_zero;
  }
  return s;
}

}  // namespace uwbimu
