// Copyright 2026 The uwbimu Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "uwbimu/errors.hpp"
#include "uwbimu/models.hpp"

namespace uwbimu {

inline constexpr int kDatasetSchemaVersion = 1;

enum class RecordKind { imu, range };

struct Record {
  double t = 0.0;
  RecordKind kind = RecordKind::imu;
  ImuSample imu;
  RangeSample range;

  static Record of(const ImuSample& u) { return {u.t, RecordKind::imu, u, {}}; }
  static Record of(const RangeSample& r) { return {r.t, RecordKind::range, {}, r}; }
};

struct DatasetHeader {
  int version = kDatasetSchemaVersion;
  std::string scenario_hash;
  std::string units = "SI: s, m, m/s^2, rad/s";
};

struct Dataset {
  DatasetHeader header;
  std::vector<Record> records;

  /// Throws InputError when a stream goes backwards in time.
  void check_order() const {
    double last_imu = -std::numeric_limits<double>::infinity();
    double last_range = last_imu, last_any = last_imu;
    for (std::size_t i = 0; i < records.size(); ++i) {
      const Record& r = records[i];
      double& last = r.kind == RecordKind::imu ? last_imu : last_range;
      if (r.t < last || r.t < last_any) {
        throw InputError("dataset record " + std::to_string(i) + " at t = " + std::to_string(r.t) +
                         " is out of order");
      }
      last = r.t;
      last_any = r.t;
    }
  }

  std::size_t count(RecordKind k) const {
    return static_cast<std::size_t>(
        std::count_if(records.begin(), records.end(), [k](const Record& r) { return r.kind == k; }));
  }
};

/// Ground truth at a true (UWB-clock) time.
struct TruthSample {
  double t = 0.0;
  State x;
};

using TruthSeries = std::vector<TruthSample>;

/// Linear interpolation in time (normalized lerp for the attitude). Times
/// outside the series clamp to the ends.
inline State truth_at(const TruthSeries& truth, double t) {
  if (truth.empty()) throw InvalidArgument("truth_at: empty truth series");
  auto it = std::lower_bound(truth.begin(), truth.end(), t, [](const TruthSample& s, double v) { return s.t < v; });
  if (it == truth.begin()) return truth.front().x;
  if (it == truth.end()) return truth.back().x;
  if (it->t == t) return it->x;
  const TruthSample& b = *it;
  const TruthSample& a = *(it - 1);
  const double w = (t - a.t) / (b.t - a.t);
  State s = a.x;
  s.p_WI = (1 - w) * a.x.p_WI + w * b.x.p_WI;
  s.v_WI = (1 - w) * a.x.v_WI + w * b.x.v_WI;
  Vec4 qb = b.x.q_WI.coeffs();
  if (qb.dot(a.x.q_WI.coeffs()) < 0.0) qb = -qb;
  s.q_WI = UnitQuaternion(Vec4((1 - w) * a.x.q_WI.coeffs() + w * qb)).normalized();
  s.b_a = (1 - w) * a.x.b_a + w * b.x.b_a;
  s.b_w = (1 - w) * a.x.b_w + w * b.x.b_w;
  return s;
}

}  // namespace uwbimu
