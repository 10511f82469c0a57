// Copyright 2026 The uwbimu Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Observability matrix of the three-anchor output h_i = 1/2 |p_i - R p_IU - p|^2
// under the control-affine dynamics, built from gradients of Lie derivatives.
//
// Two numeric engines evaluate the same recursion L_f g = (dg/dx) f:
//  - Engine::dual nests forward-mode dual numbers, one layer per derivative,
//    and is exact to rounding. It is the default.
//  - Engine::finite_difference uses central differences (Richardson-extrapolated
//    for nested levels). It degrades quickly with depth and is kept for
//    diagnostics.

#include <algorithm>
#include <array>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "uwbimu/dual.hpp"
#include "uwbimu/errors.hpp"
#include "uwbimu/geom.hpp"
#include "uwbimu/models.hpp"
#include "uwbimu/trajectories.hpp"

namespace uwbimu {

enum class Field { f0, f1, f2 };
enum class Engine { dual, finite_difference };

inline constexpr int kAllColumns = -1;

/// One vector-field application. For f1/f2, column selects the input axis;
/// kAllColumns expands the entry into three stacked copies, one per axis.
struct FieldApp {
  Field field = Field::f0;
  int column = kAllColumns;
};

/// Vector fields applied to h, innermost first: {f0, f1} is L_f1 L_f0 h.
struct LieDerivativeSpec {
  std::vector<FieldApp> fields;
  std::string label;

  int stacked_field() const {
    int found = -1;
    for (std::size_t i = 0; i < fields.size(); ++i) {
      if (fields[i].field != Field::f0 && fields[i].column == kAllColumns) {
        if (found >= 0) throw InvalidArgument("LieDerivativeSpec: at most one stacked field is allowed");
        found = static_cast<int>(i);
      }
    }
    return found;
  }
  int rows() const { return stacked_field() >= 0 ? 9 : 3; }
};

/// The six entries of the observability stack, in row order.
inline const std::array<LieDerivativeSpec, 6>& observability_stack() {
  static const std::array<LieDerivativeSpec, 6> stack = {{
      {{}, "L0"},
      {{{Field::f0, 0}}, "L1_f0"},
      {{{Field::f0, 0}, {Field::f0, 0}}, "L2_f0"},
      {{{Field::f0, 0}, {Field::f1, kAllColumns}}, "L1_f1 L1_f0"},
      {{{Field::f2, kAllColumns}}, "L1_f2 L0"},
      {{{Field::f0, 0}, {Field::f1, kAllColumns}, {Field::f0, 0}}, "L1_f0 L1_f1 L1_f0"},
  }};
  return stack;
}

template <typename S>
Vec3T<S> h3(const StateVectorT<S>& x, const Mat3& anchors) {
  const Mat3T<S> r = rotation_matrix_ambient<S>(x.template segment<4>(idx::q));
  const Vec3T<S> radio = r * x.template segment<3>(idx::pu) + x.template segment<3>(idx::p);
  Vec3T<S> out;
  for (int i = 0; i < 3; ++i) {
    const Vec3T<S> d(S(anchors(i, 0)) - radio[0], S(anchors(i, 1)) - radio[1], S(anchors(i, 2)) - radio[2]);
    out[i] = S(0.5) * (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]);
  }
  return out;
}

/// Three-anchor output for anchors given as a set (exactly three required).
inline Vec3 h3(const State& x, const AnchorSet& anchors) {
  if (anchors.size() != 3) throw InvalidArgument("h3: exactly three anchors are required");
  return h3<double>(x.to_vector(), anchors.rows3());
}

namespace detail {

template <typename S>
StateVectorT<S> field_value(const FieldApp& f, const StateVectorT<S>& x) {
  switch (f.field) {
    case Field::f0: return f0<S>(x);
    case Field::f1: return f1<S>(x).col(f.column);
    case Field::f2: return f2<S>(x).col(f.column);
  }
  return StateVectorT<S>::Constant(S(0.0));
}

inline constexpr int kMaxLieDepth = 4;

template <int Depth, typename S>
Vec3T<S> lie_dual(const std::vector<FieldApp>& fields, std::size_t n, const StateVectorT<S>& x,
                  const Mat3& anchors) {
  if (n == 0) return h3<S>(x, anchors);
  if constexpr (Depth == 0) {
    throw InvalidArgument("lie_derivative: nesting deeper than supported");
  } else {
    using D = Dual<S>;
    const StateVectorT<S> dir = field_value<S>(fields[n - 1], x);
    StateVectorT<D> xd;
    for (int i = 0; i < kStateDim; ++i) xd[i] = D(x[i], dir[i]);
    const Vec3T<D> val = lie_dual<Depth - 1, D>(fields, n - 1, xd, anchors);
    return Vec3T<S>(val[0].d, val[1].d, val[2].d);
  }
}

inline constexpr double kNestedStep = 1e-4;
inline constexpr double kOuterStep = 1e-6;

inline Vec3 lie_fd(const std::vector<FieldApp>& fields, std::size_t n, const StateVector& x, const Mat3& anchors) {
  if (n == 0) return h3<double>(x, anchors);
  const StateVector dir = field_value<double>(fields[n - 1], x);
  const double h = kNestedStep / std::max(1.0, dir.norm());
  auto central = [&](double step) {
    return Vec3((lie_fd(fields, n - 1, x + step * dir, anchors) - lie_fd(fields, n - 1, x - step * dir, anchors)) /
                (2.0 * step));
  };
  return (4.0 * central(0.5 * h) - central(h)) / 3.0;
}

/// Expand a spec with a stacked field into three concrete specs (axis x, y, z).
inline std::vector<std::vector<FieldApp>> expand(const LieDerivativeSpec& spec) {
  const int s = spec.stacked_field();
  if (s < 0) return {spec.fields};
  std::vector<std::vector<FieldApp>> out;
  for (int c = 0; c < 3; ++c) {
    auto f = spec.fields;
    f[s].column = c;
    out.push_back(f);
  }
  return out;
}

inline void validate(const LieDerivativeSpec& spec) {
  if (spec.fields.size() > static_cast<std::size_t>(kMaxLieDepth)) {
    throw InvalidArgument("lie_derivative: at most " + std::to_string(kMaxLieDepth) + " field applications");
  }
  for (const auto& f : spec.fields) {
    if (f.field != Field::f0 && (f.column < kAllColumns || f.column > 2)) {
      throw InvalidArgument("lie_derivative: input column must be 0, 1, 2 or kAllColumns");
    }
  }
  spec.stacked_field();
}

inline void require_finite(const Mat& m, const char* what) {
  if (!m.allFinite()) throw NumericalFailure(std::string(what) + ": non-finite derivative");
}

}  // namespace detail

/// Value of the Lie derivative (3 rows, or 9 for a stacked entry).
inline Vec lie_derivative(const LieDerivativeSpec& spec, const StateVector& x, const Mat3& anchors,
                          Engine engine = Engine::dual) {
  detail::validate(spec);
  const auto parts = detail::expand(spec);
  Vec out(3 * parts.size());
  for (std::size_t k = 0; k < parts.size(); ++k) {
    const Vec3 v = engine == Engine::dual
                       ? detail::lie_dual<detail::kMaxLieDepth, double>(parts[k], parts[k].size(), x, anchors)
                       : detail::lie_fd(parts[k], parts[k].size(), x, anchors);
    out.segment<3>(3 * k) = v;
  }
  detail::require_finite(out, "lie_derivative");
  return out;
}

/// Gradient w.r.t. the 19 raw coordinates (quaternion treated as a free 4-vector).
inline Mat gradient(const LieDerivativeSpec& spec, const StateVector& x, const Mat3& anchors,
                    Engine engine = Engine::dual) {
  detail::validate(spec);
  const auto parts = detail::expand(spec);
  Mat g(3 * parts.size(), kStateDim);
  for (std::size_t k = 0; k < parts.size(); ++k) {
    const auto& f = parts[k];
    for (int i = 0; i < kStateDim; ++i) {
      Vec3 col;
      if (engine == Engine::dual) {
        using D = Dual<double>;
        StateVectorT<D> xd;
        for (int j = 0; j < kStateDim; ++j) xd[j] = D(x[j], j == i ? 1.0 : 0.0);
        const Vec3T<D> val = detail::lie_dual<detail::kMaxLieDepth, D>(f, f.size(), xd, anchors);
        col = Vec3(val[0].d, val[1].d, val[2].d);
      } else {
        const double h = detail::kOuterStep * (1.0 + std::abs(x[i]));
        StateVector xp = x, xm = x;
        xp[i] += h;
        xm[i] -= h;
        col = (detail::lie_fd(f, f.size(), xp, anchors) - detail::lie_fd(f, f.size(), xm, anchors)) / (2.0 * h);
      }
      g.block<3, 1>(3 * k, i) = col;
    }
  }
  detail::require_finite(g, "gradient");
  return g;
}

/// Gradients of the six stack entries, always with all input axes.
struct StackGradients {
  std::array<Mat, 6> entries;  // 3, 3, 3, 9, 9, 9 rows

  const Mat& L0() const { return entries[0]; }
  const Mat& L1f0() const { return entries[1]; }
  const Mat& L2f0() const { return entries[2]; }
  const Mat& L11() const { return entries[3]; }
  const Mat& L20() const { return entries[4]; }
  const Mat& L011() const { return entries[5]; }
};

inline StackGradients stack_gradients(const StateVector& x, const Mat3& anchors, Engine engine = Engine::dual) {
  StackGradients s;
  const auto& stack = observability_stack();
  for (std::size_t k = 0; k < stack.size(); ++k) s.entries[k] = gradient(stack[k], x, anchors, engine);
  return s;
}

/// Named sub-blocks of the stacked gradients and the lemma matrices built from them.
struct ObservabilityBlocks {
  Mat3 dp_ijk;                        // rows p_i - R p_IU - p
  Eigen::Matrix<double, 3, 4> F0;     // d(R p_IU)/dq
  Eigen::Matrix<double, 3, 3> F3;     // 1/2 F0 Xi
  Mat F5, F6, F7;                     // p, q, p_IU blocks of grad L1_f1 L1_f0 h
  Mat F13, F15;                       // p, p_IU blocks of grad L1_f2 h
  Mat F18;                            // b_w block of grad L1_f0 L1_f1 L1_f0 h
  Mat3 R;

  Mat lemma2() const { return F5 * F0 - F6; }  // 9x4
  Mat lemma3() const { return F13 * R - F15; }  // 9x3
  Mat lemma4() const { return F5 * F3 + F18; }  // 9x3
  Mat step_iv_residual() const { return F5 * R - F7; }
};

inline ObservabilityBlocks extract_blocks(const StackGradients& g, const StateVector& x, const Mat3& anchors) {
  ObservabilityBlocks b;
  const Vec4 q = x.segment<4>(idx::q);
  const Vec3 pu = x.segment<3>(idx::pu);
  b.R = rotation_matrix_ambient<double>(q);
  const Vec3 radio = b.R * pu + x.segment<3>(idx::p);
  for (int i = 0; i < 3; ++i) b.dp_ijk.row(i) = (anchors.row(i).transpose() - radio).transpose();
  b.F0 = rotate_point_jacobian(q, pu);
  b.F3 = 0.5 * b.F0 * xi_matrix<double>(q);
  b.F5 = g.L11().middleCols(idx::p, 3);
  b.F6 = g.L11().middleCols(idx::q, 4);
  b.F7 = g.L11().middleCols(idx::pu, 3);
  b.F13 = g.L20().middleCols(idx::p, 3);
  b.F15 = g.L20().middleCols(idx::pu, 3);
  b.F18 = g.L011().middleCols(idx::bw, 3);
  return b;
}

inline constexpr double kRankRelTol = 1e-10;
inline constexpr double kGeomEps = 1e-9;

struct RankInfo {
  Vec singular_values;
  int rank = 0;
  double tolerance = 0.0;
  Mat null_space;  // columns span the numeric null space
};

/// SVD rank: sigma_i > sigma_max * max(m, n) * 1e-10.
inline RankInfo numeric_rank(const Mat& m) {
  RankInfo r;
  if (m.rows() == 0 || m.cols() == 0) {
    r.null_space = Mat::Identity(m.cols(), m.cols());
    return r;
  }
  Eigen::JacobiSVD<Mat> svd(m, Eigen::ComputeFullV);
  r.singular_values = svd.singularValues();
  const double smax = r.singular_values.size() > 0 ? r.singular_values[0] : 0.0;
  r.tolerance = smax * static_cast<double>(std::max(m.rows(), m.cols())) * kRankRelTol;
  for (int i = 0; i < r.singular_values.size(); ++i) {
    if (r.singular_values[i] > r.tolerance) ++r.rank;
  }
  const int n = static_cast<int>(m.cols());
  r.null_space = svd.matrixV().rightCols(n - r.rank);
  return r;
}

struct Conditions {
  bool C1 = false;  // anchors non-collinear
  bool C2 = false;  // radio not coplanar with the anchors
  bool C3 = false;  // all accelerometer axes excited
  bool C4 = false;  // all gyro axes excited
  double triangle_area = 0.0;
  double tetrahedron_volume = 0.0;

  bool all() const { return C1 && C2 && C3 && C4; }
};

inline Conditions check_conditions(const Mat3& anchors, const StateVector& x, const ExcitationReport& excitation) {
  Conditions c;
  const Vec3 pi = anchors.row(0).transpose(), pj = anchors.row(1).transpose(), pk = anchors.row(2).transpose();
  const Vec3 n = (pj - pi).cross(pk - pi);
  c.triangle_area = 0.5 * n.norm();
  const Vec3 radio = rotation_matrix_ambient<double>(Vec4(x.segment<4>(idx::q))) * x.segment<3>(idx::pu) +
                     x.segment<3>(idx::p);
  c.tetrahedron_volume = std::abs(n.dot(radio - pi)) / 6.0;
  c.C1 = c.triangle_area > kGeomEps;
  c.C2 = c.tetrahedron_volume > kGeomEps;
  c.C3 = excitation.all_accel();
  c.C4 = excitation.all_gyro();
  return c;
}

struct ObservabilityReport {
  Mat O;
  std::vector<std::string> row_labels;
  Vec singular_values;
  int rank = 0;
  double tolerance = 0.0;
  Mat null_space;
  Conditions conditions;
  int tangent_rank = 0;  // rank after mapping q columns onto the unit-sphere tangent space
  StackGradients gradients;

  bool full_rank() const { return rank == kStateDim; }
};

/// Stack rows in the fixed order. Rows of the f1-derived entries for input
/// axis c appear only if a_c is excited; rows of the f2-derived entry for
/// axis c only if w_c is excited.
inline Mat assemble_O(const StackGradients& g, const ExcitationReport& excitation,
                      std::vector<std::string>* labels = nullptr) {
  static const char* axis_name[3] = {"x", "y", "z"};
  std::vector<Mat> blocks;
  std::vector<std::string> names;
  auto add = [&](const Mat& m, const std::string& name) {
    blocks.push_back(m);
    for (int r = 0; r < m.rows(); ++r) names.push_back(name + "[" + std::to_string(r) + "]");
  };
  add(g.L0(), "L0");
  add(g.L1f0(), "L1_f0");
  add(g.L2f0(), "L2_f0");
  for (int c = 0; c < 3; ++c) {
    if (excitation.accel(c)) add(g.L11().middleRows(3 * c, 3), std::string("L1_f1") + axis_name[c] + " L1_f0");
  }
  for (int c = 0; c < 3; ++c) {
    if (excitation.gyro(c)) add(g.L20().middleRows(3 * c, 3), std::string("L1_f2") + axis_name[c] + " L0");
  }
  for (int c = 0; c < 3; ++c) {
    if (excitation.accel(c)) {
      add(g.L011().middleRows(3 * c, 3), std::string("L1_f0 L1_f1") + axis_name[c] + " L1_f0");
    }
  }
  int rows = 0;
  for (const auto& b : blocks) rows += static_cast<int>(b.rows());
  Mat o(rows, kStateDim);
  int r = 0;
  for (const auto& b : blocks) {
    o.middleRows(r, b.rows()) = b;
    r += static_cast<int>(b.rows());
  }
  if (labels != nullptr) *labels = std::move(names);
  return o;
}

/// Basis of the tangent space of the unit-quaternion sphere embedded in the
/// 19 raw coordinates: 19x18, with 1/2 Xi{q} in the quaternion rows.
inline Mat tangent_basis(const StateVector& x) {
  Mat t = Mat::Zero(kStateDim, kStateDim - 1);
  t.block<6, 6>(0, 0).setIdentity();
  t.block<4, 3>(idx::q, 6) = 0.5 * xi_matrix<double>(Vec4(x.segment<4>(idx::q)));
  t.block<9, 9>(idx::ba, 9).setIdentity();
  return t;
}

inline ObservabilityReport build_O(const StateVector& x, const Mat3& anchors,
                                   const ExcitationReport& excitation = ExcitationReport::all(true),
                                   Engine engine = Engine::dual) {
  ObservabilityReport rep;
  rep.gradients = stack_gradients(x, anchors, engine);
  rep.O = assemble_O(rep.gradients, excitation, &rep.row_labels);
  const RankInfo ri = numeric_rank(rep.O);
  rep.singular_values = ri.singular_values;
  rep.rank = ri.rank;
  rep.tolerance = ri.tolerance;
  rep.null_space = ri.null_space;
  rep.conditions = check_conditions(anchors, x, excitation);
  rep.tangent_rank = numeric_rank(rep.O * tangent_basis(x)).rank;
  return rep;
}

inline ObservabilityReport build_O(const State& x, const AnchorSet& anchors,
                                   const ExcitationReport& excitation = ExcitationReport::all(true),
                                   Engine engine = Engine::dual) {
  if (anchors.size() != 3) throw InvalidArgument("build_O: exactly three anchors are required");
  return build_O(x.to_vector(), anchors.rows3(), excitation, engine);
}

/// Closed-form gradients of the first two stack entries, written out by hand.
namespace closed_form {

/// grad L0 h = [-dp, 0, -dp F0, 0, 0, -dp R].
inline Mat grad_L0(const StateVector& x, const Mat3& anchors) {
  const Vec4 q = x.segment<4>(idx::q);
  const Vec3 pu = x.segment<3>(idx::pu);
  const Mat3 r = rotation_matrix_ambient<double>(q);
  const Vec3 radio = r * pu + x.segment<3>(idx::p);
  Mat3 dp;
  for (int i = 0; i < 3; ++i) dp.row(i) = anchors.row(i) - radio.transpose();
  Mat g = Mat::Zero(3, kStateDim);
  g.middleCols(idx::p, 3) = -dp;
  g.middleCols(idx::q, 4) = -dp * rotate_point_jacobian(q, pu);
  g.middleCols(idx::pu, 3) = -dp * r;
  return g;
}

/// L1_f0 h = -dp v + 1/2 dp F0 Xi b_w.
inline Vec3 L1f0(const StateVector& x, const Mat3& anchors) {
  const Vec4 q = x.segment<4>(idx::q);
  const Vec3 pu = x.segment<3>(idx::pu);
  const Mat3 r = rotation_matrix_ambient<double>(q);
  const Vec3 radio = r * pu + x.segment<3>(idx::p);
  Mat3 dp;
  for (int i = 0; i < 3; ++i) dp.row(i) = anchors.row(i) - radio.transpose();
  const Vec3 c = -x.segment<3>(idx::v) + 0.5 * rotate_point_jacobian(q, pu) * xi_matrix<double>(q) *
                                              x.segment<3>(idx::bw);
  return dp * c;
}

/// Gradient of L1_f0 h. With c = -v + m, m = 1/2 F0(q) Xi(q) b_w:
/// d/dp = -c^T, d/dv = -dp_i^T, d/dq = -c^T F0 + dp_i^T dm/dq,
/// d/db_w = 1/2 dp_i^T F0 Xi, d/dp_IU = -c^T R + dp_i^T dm/dp_IU.
inline Mat grad_L1f0(const StateVector& x, const Mat3& anchors) {
  const Vec4 q = x.segment<4>(idx::q);
  const Vec3 pu = x.segment<3>(idx::pu);
  const Vec3 bw = x.segment<3>(idx::bw);
  const Mat3 r = rotation_matrix_ambient<double>(q);
  const Vec3 radio = r * pu + x.segment<3>(idx::p);
  Mat3 dp;
  for (int i = 0; i < 3; ++i) dp.row(i) = anchors.row(i) - radio.transpose();

  const Eigen::Matrix<double, 3, 4> F0 = rotate_point_jacobian(q, pu);
  const Eigen::Matrix<double, 4, 3> xi = xi_matrix<double>(q);
  const Vec4 y = xi * bw;  // = Omega(b_w) q
  const Vec3 c = -x.segment<3>(idx::v) + 0.5 * F0 * y;

  // m(q) = B(q, Omega q) for the symmetric bilinear B with R(q) p_IU = B(q, q).
  const Eigen::Matrix<double, 3, 4> dm_dq =
      0.5 * rotate_point_jacobian(y, pu) + 0.5 * F0 * omega_matrix(bw);
  // m is linear in p_IU: column k is 1/2 F0(q; e_k) y.
  Mat3 dm_dpu;
  for (int k = 0; k < 3; ++k) dm_dpu.col(k) = 0.5 * rotate_point_jacobian(q, Vec3::Unit(k)) * y;

  Mat g = Mat::Zero(3, kStateDim);
  for (int i = 0; i < 3; ++i) {
    const Eigen::RowVector3d d = dp.row(i);
    g.block<1, 3>(i, idx::p) = -c.transpose();
    g.block<1, 3>(i, idx::v) = -d;
    g.block<1, 4>(i, idx::q) = -c.transpose() * F0 + d * dm_dq;
    g.block<1, 3>(i, idx::bw) = 0.5 * d * F0 * xi;
    g.block<1, 3>(i, idx::pu) = -c.transpose() * r + d * dm_dpu;
  }
  return g;
}

}  // namespace closed_form

}  // namespace uwbimu
