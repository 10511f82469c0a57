// Copyright 2026 The uwbimu Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Scenario JSON, dataset JSON Lines, and CSV/JSON writers for the reports.

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "uwbimu/dataset.hpp"
#include "uwbimu/errors.hpp"
#include "uwbimu/estimator.hpp"
#include "uwbimu/identifiability.hpp"
#include "uwbimu/lemmas.hpp"
#include "uwbimu/observability.hpp"
#include "uwbimu/simulation.hpp"

namespace uwbimu::io {

using Json = nlohmann::ordered_json;

inline std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open '" + path + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot open '" + path + "' for writing");
  out << text;
  if (!out) throw InputError("failed writing '" + path + "'");
}

/// Shortest text that parses back to the same double.
inline std::string fmt(double v) {
  char buf[32];
  for (int prec = 15; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof buf, "%.*g", prec, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  return buf;
}

inline std::string fnv1a_hex(const std::string& s) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

inline Json to_json(const Vec3& v) { return Json::array({v.x(), v.y(), v.z()}); }
inline Json to_json(const UnitQuaternion& q) { return Json::array({q.q0(), q.q1(), q.q2(), q.q3()}); }

// ---------------------------------------------------------------------------
// Scenario

namespace detail {

/// Cursor into a JSON object that reports errors with the full field path
/// and rejects keys nobody asked for.
class Reader {
public:
  Reader(const Json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(display(), "expected an object");
  }

  std::string field(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  bool has(const std::string& key) const { return j_.contains(key); }

  const Json& at(const std::string& key) {
    seen_.insert(key);
    if (!j_.contains(key)) throw ConfigError(field(key), "required field is missing");
    return j_.at(key);
  }

  template <typename T>
  void get(const std::string& key, T& out) {
    if (!has(key)) return;
    out = value<T>(at(key), field(key));
  }

  void get(const std::string& key, Vec3& out) {
    if (!has(key)) return;
    out = vec3(at(key), field(key));
  }

  void get(const std::string& key, UnitQuaternion& out) {
    if (!has(key)) return;
    const Json& a = at(key);
    const std::string p = field(key);
    if (!a.is_array() || a.size() != 4) throw ConfigError(p, "expected an array of 4 numbers [q0, q1, q2, q3]");
    Vec4 q;
    for (int i = 0; i < 4; ++i) q[i] = value<double>(a[static_cast<std::size_t>(i)], p + "[" + std::to_string(i) + "]");
    out = UnitQuaternion(q);
    if (!out.is_normalized()) throw ConfigError(p, "quaternion is not unit norm");
  }

  Reader object(const std::string& key) { return {at(key), field(key)}; }

  /// Throws if the object holds keys that were never read.
  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!seen_.count(it.key())) throw ConfigError(field(it.key()), "unknown field");
    }
  }

  template <typename T>
  static T value(const Json& v, const std::string& p) {
    if constexpr (std::is_same_v<T, bool>) {
      if (!v.is_boolean()) throw ConfigError(p, "expected a boolean");
      return v.get<bool>();
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!v.is_string()) throw ConfigError(p, "expected a string");
      return v.get<std::string>();
    } else if constexpr (std::is_integral_v<T>) {
      if (!v.is_number_integer()) throw ConfigError(p, "expected an integer");
      if (std::is_unsigned_v<T> && v.is_number_integer() && !v.is_number_unsigned() && v.get<std::int64_t>() < 0) {
        throw ConfigError(p, "expected a non-negative integer");
      }
      return v.get<T>();
    } else {
      if (!v.is_number()) throw ConfigError(p, "expected a number");
      const double d = v.get<double>();
      if (!std::isfinite(d)) throw ConfigError(p, "expected a finite number");
      return d;
    }
  }

  static Vec3 vec3(const Json& a, const std::string& p) {
    if (!a.is_array() || a.size() != 3) throw ConfigError(p, "expected an array of 3 numbers");
    Vec3 v;
    for (int i = 0; i < 3; ++i) v[i] = value<double>(a[static_cast<std::size_t>(i)], p + "[" + std::to_string(i) + "]");
    return v;
  }

private:
  std::string display() const { return path_.empty() ? "<root>" : path_; }

  const Json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

}  // namespace detail

inline Json scenario_to_json(const Scenario& sc) {
  Json j;
  j["name"] = sc.name;
  j["seed"] = sc.seed;
  j["duration"] = sc.duration;
  j["imu_rate"] = sc.imu_rate;
  j["uwb_rate"] = sc.uwb_rate;
  Json anchors = Json::array();
  for (const Anchor& a : sc.anchors) anchors.push_back(Json{{"id", a.id}, {"p_W", to_json(a.p_W)}});
  j["anchors"] = anchors;

  const TrajectoryParams& t = sc.trajectory;
  Json tj;
  tj["kind"] = to_string(sc.trajectory_kind);
  tj["position"] = to_json(t.position);
  tj["attitude"] = to_json(t.attitude);
  tj["axis"] = t.axis;
  tj["amplitude"] = t.amplitude;
  tj["frequency"] = t.frequency;
  tj["rate"] = t.rate;
  tj["pos_amplitude"] = to_json(t.pos_amplitude);
  tj["pos_frequency"] = to_json(t.pos_frequency);
  tj["pos_phase"] = to_json(t.pos_phase);
  tj["att_amplitude"] = to_json(t.att_amplitude);
  tj["att_rate"] = to_json(t.att_rate);
  tj["att_phase"] = to_json(t.att_phase);
  tj["att_offset"] = to_json(t.att_offset);
  j["trajectory"] = tj;

  j["noise"] = Json{{"sigma_a", sc.noise.sigma_a},
                    {"sigma_w", sc.noise.sigma_w},
                    {"sigma_ba", sc.noise.sigma_ba},
                    {"sigma_bw", sc.noise.sigma_bw},
                    {"sigma_r", sc.noise.sigma_r}};
  j["truth"] = Json{{"p_IU", to_json(sc.p_IU)}, {"t_d", sc.t_d}, {"b_a0", to_json(sc.b_a0)}, {"b_w0", to_json(sc.b_w0)}};

  const FilterSetup& f = sc.filter;
  j["filter"] = Json{{"sigma_p", f.sigma_p},
                     {"sigma_v", f.sigma_v},
                     {"sigma_theta", f.sigma_theta},
                     {"sigma_ba", f.sigma_ba},
                     {"sigma_bw", f.sigma_bw},
                     {"sigma_pu", f.sigma_pu},
                     {"sigma_td", f.sigma_td},
                     {"pu_offset", to_json(f.pu_offset)},
                     {"td_offset", f.td_offset},
                     {"sample_initial_errors", f.sample_initial_errors},
                     {"gate", f.gate},
                     {"mode", to_string(f.mode)}};
  return j;
}

/// Parse and validate a scenario. Omitted fields keep their defaults;
/// unknown fields, wrong types and invalid values raise ConfigError with
/// the field path.
inline Scenario scenario_from_json(const Json& j) {
  Scenario sc;
  detail::Reader r(j, "");
  r.get("name", sc.name);
  r.get("seed", sc.seed);
  r.get("duration", sc.duration);
  r.get("imu_rate", sc.imu_rate);
  r.get("uwb_rate", sc.uwb_rate);

  const Json& aj = r.at("anchors");
  if (!aj.is_array()) throw ConfigError("anchors", "expected an array");
  std::vector<Anchor> anchors;
  for (std::size_t i = 0; i < aj.size(); ++i) {
    detail::Reader ar(aj[i], "anchors[" + std::to_string(i) + "]");
    Anchor a;
    a.id = detail::Reader::value<int>(ar.at("id"), ar.field("id"));
    a.p_W = detail::Reader::vec3(ar.at("p_W"), ar.field("p_W"));
    ar.finish();
    anchors.push_back(a);
  }
  try {
    sc.anchors = AnchorSet(anchors);
  } catch (const InvalidArgument& e) {
    throw ConfigError("anchors", e.what());
  }

  if (r.has("trajectory")) {
    detail::Reader tr = r.object("trajectory");
    TrajectoryParams& t = sc.trajectory;
    std::string kind = to_string(sc.trajectory_kind);
    tr.get("kind", kind);
    try {
      sc.trajectory_kind = trajectory_kind_from_string(kind);
    } catch (const InvalidArgument& e) {
      throw ConfigError("trajectory.kind", e.what());
    }
    tr.get("position", t.position);
    tr.get("attitude", t.attitude);
    tr.get("axis", t.axis);
    tr.get("amplitude", t.amplitude);
    tr.get("frequency", t.frequency);
    tr.get("rate", t.rate);
    tr.get("pos_amplitude", t.pos_amplitude);
    tr.get("pos_frequency", t.pos_frequency);
    tr.get("pos_phase", t.pos_phase);
    tr.get("att_amplitude", t.att_amplitude);
    tr.get("att_rate", t.att_rate);
    tr.get("att_phase", t.att_phase);
    tr.get("att_offset", t.att_offset);
    tr.finish();
    if (t.axis < 0 || t.axis > 2) throw ConfigError("trajectory.axis", "must be 0, 1 or 2");
  }

  if (r.has("noise")) {
    detail::Reader nr = r.object("noise");
    nr.get("sigma_a", sc.noise.sigma_a);
    nr.get("sigma_w", sc.noise.sigma_w);
    nr.get("sigma_ba", sc.noise.sigma_ba);
    nr.get("sigma_bw", sc.noise.sigma_bw);
    nr.get("sigma_r", sc.noise.sigma_r);
    nr.finish();
    const char* names[] = {"sigma_a", "sigma_w", "sigma_ba", "sigma_bw", "sigma_r"};
    const double vals[] = {sc.noise.sigma_a, sc.noise.sigma_w, sc.noise.sigma_ba, sc.noise.sigma_bw,
                           sc.noise.sigma_r};
    for (int i = 0; i < 5; ++i) {
      if (vals[i] < 0.0) throw ConfigError(std::string("noise.") + names[i], "must be >= 0");
    }
  }
  sc.noise.seed = sc.seed;

  if (r.has("truth")) {
    detail::Reader tr = r.object("truth");
    tr.get("p_IU", sc.p_IU);
    tr.get("t_d", sc.t_d);
    tr.get("b_a0", sc.b_a0);
    tr.get("b_w0", sc.b_w0);
    tr.finish();
  }

  if (r.has("filter")) {
    detail::Reader fr = r.object("filter");
    FilterSetup& f = sc.filter;
    fr.get("sigma_p", f.sigma_p);
    fr.get("sigma_v", f.sigma_v);
    fr.get("sigma_theta", f.sigma_theta);
    fr.get("sigma_ba", f.sigma_ba);
    fr.get("sigma_bw", f.sigma_bw);
    fr.get("sigma_pu", f.sigma_pu);
    fr.get("sigma_td", f.sigma_td);
    fr.get("pu_offset", f.pu_offset);
    fr.get("td_offset", f.td_offset);
    fr.get("sample_initial_errors", f.sample_initial_errors);
    fr.get("gate", f.gate);
    std::string mode = to_string(f.mode);
    fr.get("mode", mode);
    try {
      f.mode = delay_mode_from_string(mode);
    } catch (const InvalidArgument& e) {
      throw ConfigError("filter.mode", e.what());
    }
    fr.finish();
    const double sig[] = {f.sigma_p, f.sigma_v, f.sigma_theta, f.sigma_ba, f.sigma_bw, f.sigma_pu, f.sigma_td};
    for (double s : sig) {
      if (!(s > 0.0)) throw ConfigError("filter", "prior sigmas must be > 0");
    }
    if (!(f.gate > 0.0)) throw ConfigError("filter.gate", "must be > 0");
  }
  r.finish();
  sc.validate();
  return sc;
}

inline Scenario parse_scenario(const std::string& text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw ConfigError("<root>", std::string("invalid JSON: ") + e.what());
  }
  return scenario_from_json(j);
}

inline Scenario load_scenario(const std::string& path) {
  std::string text;
  try {
    text = read_text(path);
  } catch (const InputError& e) {
    throw ConfigError("<file>", e.what());
  }
  return parse_scenario(text);
}

inline std::string dump_scenario(const Scenario& sc) { return scenario_to_json(sc).dump(2) + "\n"; }

inline std::string scenario_hash(const Scenario& sc) { return fnv1a_hex(scenario_to_json(sc).dump()); }

// ---------------------------------------------------------------------------
// Dataset (JSON Lines: one header line, then one record per line)

inline std::string dump_dataset(const Dataset& d) {
  std::string out;
  out += Json{{"schema_version", d.header.version}, {"scenario_hash", d.header.scenario_hash}, {"units", d.header.units}}
             .dump();
  out += '\n';
  for (const Record& r : d.records) {
    Json j;
    j["t"] = r.t;
    if (r.kind == RecordKind::imu) {
      j["kind"] = "imu";
      j["a_m"] = to_json(r.imu.a_m);
      j["w_m"] = to_json(r.imu.w_m);
    } else {
      j["kind"] = "range";
      j["anchor_id"] = r.range.anchor_id;
      j["range"] = r.range.range;
    }
    out += j.dump();
    out += '\n';
  }
  return out;
}

inline Dataset parse_dataset(const std::string& text) {
  Dataset d;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  bool have_header = false;
  auto fail = [&](const std::string& what) {
    throw InputError("dataset line " + std::to_string(lineno) + ": " + what);
  };
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    Json j;
    try {
      j = Json::parse(line);
    } catch (const Json::parse_error& e) {
      fail(std::string("invalid JSON: ") + e.what());
    }
    try {
      if (!have_header) {
        if (!j.contains("schema_version")) fail("header lacks schema_version");
        d.header.version = j.at("schema_version").get<int>();
        if (d.header.version != kDatasetSchemaVersion) {
          fail("unsupported schema_version " + std::to_string(d.header.version));
        }
        d.header.scenario_hash = j.value("scenario_hash", std::string());
        d.header.units = j.value("units", std::string());
        have_header = true;
        continue;
      }
      Record r;
      r.t = j.at("t").get<double>();
      const std::string kind = j.at("kind").get<std::string>();
      if (kind == "imu") {
        r.kind = RecordKind::imu;
        r.imu.t = r.t;
        for (int i = 0; i < 3; ++i) {
          r.imu.a_m[i] = j.at("a_m").at(static_cast<std::size_t>(i)).get<double>();
          r.imu.w_m[i] = j.at("w_m").at(static_cast<std::size_t>(i)).get<double>();
        }
      } else if (kind == "range") {
        r.kind = RecordKind::range;
        r.range.t = r.t;
        r.range.anchor_id = j.at("anchor_id").get<int>();
        r.range.range = j.at("range").get<double>();
      } else {
        fail("unknown record kind '" + kind + "'");
      }
      d.records.push_back(r);
    } catch (const Json::exception& e) {
      fail(e.what());
    }
  }
  if (!have_header) throw InputError("dataset has no header line");
  d.check_order();
  return d;
}

// ---------------------------------------------------------------------------
// CSV

inline std::string state_csv_header(const std::string& prefix = "") {
  const char* cols[] = {"p_x", "p_y", "p_z", "v_x", "v_y", "v_z", "q0", "q1", "q2", "q3",
                        "ba_x", "ba_y", "ba_z", "bw_x", "bw_y", "bw_z", "pu_x", "pu_y", "pu_z", "t_d"};
  std::string h;
  for (const char* c : cols) h += "," + prefix + c;
  return h;
}

inline std::string error_csv_header(const std::string& prefix) {
  const char* cols[] = {"p_x",  "p_y",  "p_z",  "v_x",  "v_y",  "v_z",  "th_x", "th_y", "th_z", "ba_x",
                        "ba_y", "ba_z", "bw_x", "bw_y", "bw_z", "pu_x", "pu_y", "pu_z", "t_d"};
  std::string h;
  for (const char* c : cols) h += "," + prefix + c;
  return h;
}

inline void append_state(std::string& line, const State& x) {
  const StateVector v = x.to_vector();
  for (int i = 0; i < kStateDim; ++i) line += "," + fmt(v[i]);
  line += "," + fmt(x.t_d);
}

inline std::string dump_truth_csv(const TruthSeries& truth) {
  std::string out = "t" + state_csv_header() + "\n";
  for (const TruthSample& s : truth) {
    std::string line = fmt(s.t);
    append_state(line, s.x);
    out += line + "\n";
  }
  return out;
}

inline TruthSeries parse_truth_csv(const std::string& text) {
  TruthSeries truth;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (lineno == 1 || line.empty()) continue;
    std::vector<double> v;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) {
      char* end = nullptr;
      v.push_back(std::strtod(cell.c_str(), &end));
      if (end == cell.c_str()) throw InputError("truth line " + std::to_string(lineno) + ": bad number '" + cell + "'");
    }
    if (v.size() != 2 + kStateDim) throw InputError("truth line " + std::to_string(lineno) + ": wrong column count");
    StateVector x;
    for (int i = 0; i < kStateDim; ++i) x[i] = v[static_cast<std::size_t>(1 + i)];
    truth.push_back({v[0], State::from_vector(x, v.back())});
  }
  return truth;
}

/// Per-step filter output: estimate, 3-sigma bounds, NEES and, with truth,
/// the error truth (-) estimate.
inline std::string dump_steps_csv(const RunResult& r) {
  std::string out = "t" + state_csv_header() + error_csv_header("3sigma_") + ",nees" + error_csv_header("err_") + "\n";
  for (const StepRecord& s : r.steps) {
    std::string line = fmt(s.t);
    append_state(line, s.x);
    for (int i = 0; i < kErrDim; ++i) line += "," + fmt(3.0 * s.sigma[i]);
    line += "," + fmt(s.nees);
    for (int i = 0; i < kErrDim; ++i) line += "," + fmt(s.error[i]);
    out += line + "\n";
  }
  return out;
}

inline std::string dump_innovations_csv(const RunResult& r) {
  std::string out = "t,anchor_id,z,predicted,innovation,S,nis,accepted\n";
  for (const InnovationRecord& i : r.innovations) {
    out += fmt(i.t) + "," + std::to_string(i.anchor_id) + "," + fmt(i.z) + "," + fmt(i.predicted) + "," +
           fmt(i.innovation) + "," + fmt(i.S) + "," + fmt(i.nis) + "," + (i.accepted ? "1" : "0") + "\n";
  }
  return out;
}

inline std::string dump_lemma_csv(const std::vector<LemmaSummary>& summaries) {
  std::string out = "lemma,sampling,sample,subset,direct,product,rel_error,sign_agrees,ok\n";
  for (const LemmaSummary& s : summaries) {
    const char* mode = s.sampling == LemmaSampling::generic ? "generic" : "coplanar";
    for (const DeterminantRecord& d : s.records) {
      out += std::to_string(d.lemma) + "," + mode + "," + std::to_string(d.sample) + "," + d.subset + "," +
             fmt(d.direct) + "," + fmt(d.product) + "," + fmt(d.rel_error) + "," + (d.sign_agrees ? "1" : "0") + "," +
             (d.ok ? "1" : "0") + "\n";
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Report JSON

inline Json to_json(const Conditions& c) {
  return Json{{"C1", c.C1},
              {"C2", c.C2},
              {"C3", c.C3},
              {"C4", c.C4},
              {"triangle_area", c.triangle_area},
              {"tetrahedron_volume", c.tetrahedron_volume}};
}

inline Json to_json(const Mat& m) {
  Json rows = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    Json row = Json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(row);
  }
  return rows;
}

inline Json to_json(const ObservabilityReport& rep, bool include_matrix = false) {
  Json j;
  j["rank"] = rep.rank;
  j["tangent_rank"] = rep.tangent_rank;
  j["full_rank"] = rep.full_rank();
  j["tolerance"] = rep.tolerance;
  j["rows"] = rep.O.rows();
  j["cols"] = rep.O.cols();
  j["singular_values"] = std::vector<double>(rep.singular_values.data(),
                                             rep.singular_values.data() + rep.singular_values.size());
  j["conditions"] = to_json(rep.conditions);
  // Columns of the basis, one array per null vector.
  j["null_space"] = to_json(Mat(rep.null_space.transpose()));
  j["row_labels"] = rep.row_labels;
  if (include_matrix) j["O"] = to_json(rep.O);
  return j;
}

inline Json to_json(const ExcitationReport& e) {
  return Json{{"accel", {e.accel(0), e.accel(1), e.accel(2)}},
              {"gyro", {e.gyro(0), e.gyro(1), e.gyro(2)}},
              {"measure", std::vector<double>(e.measure.begin(), e.measure.end())}};
}

inline Json to_json(const IdentifiabilityReport& r) {
  Json j;
  j["verdict"] = to_string(r.verdict);
  j["accel"] = r.accel;
  j["gyro"] = r.gyro;
  j["T1"] = r.T1;
  j["T2"] = r.T2;
  j["T3"] = r.T3;
  j["gyro_route"] = r.gyro_route;
  j["triggered"] = r.triggered;
  j["min_anchor_distance"] = r.min_anchor_distance;
  j["max_relevant_sensitivity"] = r.max_relevant_sensitivity;
  Json per = Json::array();
  for (std::size_t i = 0; i < r.accel_per_anchor.size(); ++i) {
    per.push_back(Json{{"accel", r.accel_per_anchor[i]},
                       {"gyro", r.gyro_per_anchor[i]},
                       {"triggered", r.s_per_anchor[i].triggered()}});
  }
  j["per_anchor"] = per;
  return j;
}

inline Json to_json(const LemmaSummary& s) {
  return Json{{"lemma", s.lemma},
              {"sampling", s.sampling == LemmaSampling::generic ? "generic" : "coplanar"},
              {"n_samples", s.n_samples},
              {"identity_failures", s.identity_failures},
              {"max_rel_error", s.max_rel_error},
              {"full_rank_cases", s.full_rank_cases},
              {"coplanar_collapses", s.coplanar_collapses},
              {"coplanar_listed_zero", s.coplanar_listed_zero},
              {"sign_flips", s.sign_flips},
              {"identities_ok", s.identities_ok()},
              {"full_rank_ok", s.full_rank_ok()},
              {"collapse_ok", s.collapse_ok()},
              {"passed", s.passed()}};
}

inline Json error_json(const ErrVec& e) { return std::vector<double>(e.data(), e.data() + e.size()); }

inline Json to_json(const RunMetrics& m) {
  Json j;
  j["steps"] = m.steps;
  j["updates"] = m.updates;
  j["gated"] = m.gated;
  j["skipped_ranges"] = m.skipped_ranges;
  j["has_truth"] = m.has_truth;
  j["initial_sigma"] = error_json(m.initial_sigma);
  j["final_sigma"] = error_json(m.final_sigma);
  if (m.has_truth) {
    j["initial_error"] = error_json(m.initial_error);
    j["final_error"] = error_json(m.final_error);
    j["t_d_error"] = {{"initial", std::abs(m.initial_error[err::td])}, {"final", std::abs(m.final_error[err::td])}};
    j["p_IU_error"] = {{"initial", m.initial_error.segment<3>(err::pu).norm()},
                       {"final", m.final_error.segment<3>(err::pu).norm()}};
    j["position_rmse"] = m.position_rmse;
    j["nees_mean"] = m.nees_mean;
    j["nees_fraction_in_bounds"] = m.nees_fraction_in_bounds;
    j["nees_bounds"] = {m.nees_lower, m.nees_upper};
  }
  return j;
}

}  // namespace uwbimu::io
