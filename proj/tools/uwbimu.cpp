// Copyright 2026 The uwbimu Authors
// SPDX-License-Identifier: Apache-2.0

// uwbimu: simulate, analyze, identifiability, lemmas, ekf.
//
// Exit codes: 0 success, 2 config error, 3 numerical failure,
// 4 assertion failure, 1 anything else. UWBIMU_LOG=quiet|info|debug sets
// the stderr verbosity (default info).

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "uwbimu/io.hpp"

namespace fs = std::filesystem;
using namespace uwbimu;
using io::Json;

namespace {

enum class LogLevel { quiet = 0, info = 1, debug = 2 };

LogLevel log_level() {
  const char* env = std::getenv("UWBIMU_LOG");
  if (env == nullptr) return LogLevel::info;
  const std::string v = env;
  if (v == "quiet" || v == "0") return LogLevel::quiet;
  if (v == "debug" || v == "2") return LogLevel::debug;
  return LogLevel::info;
}

void log(LogLevel lvl, const std::string& msg) {
  if (static_cast<int>(lvl) <= static_cast<int>(log_level())) std::cerr << "[uwbimu] " << msg << "\n";
}

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;
constexpr int kExitAssertion = 4;

struct Common {
  std::string scenario;
  std::string out;
  std::optional<std::uint64_t> seed;
  int samples = -1;
};

Scenario load(const Common& c) {
  if (c.scenario.empty()) throw ConfigError("--scenario", "a scenario file is required");
  Scenario sc = io::load_scenario(c.scenario);
  if (c.seed) {
    sc.seed = *c.seed;
    sc.noise.seed = *c.seed;
  }
  log(LogLevel::debug, "loaded scenario '" + sc.name + "' hash " + io::scenario_hash(sc));
  return sc;
}

void emit(const std::string& out, const std::string& file, const std::string& text) {
  if (out.empty()) {
    std::cout << text;
    return;
  }
  fs::create_directories(out);
  const std::string path = (fs::path(out) / file).string();
  io::write_text(path, text);
  log(LogLevel::info, "wrote " + path);
}

void emit_json(const std::string& out, const std::string& file, const Json& j) { emit(out, file, j.dump(2) + "\n"); }

/// Instants at which the run is analyzed: n points spread over [0, T].
std::vector<double> sample_times(double duration, int n) {
  std::vector<double> t;
  if (n <= 1) return {0.5 * duration};
  for (int i = 0; i < n; ++i) t.push_back(duration * (static_cast<double>(i) + 0.5) / static_cast<double>(n));
  return t;
}

State state_at(const Scenario& sc, const Trajectory& traj, double t) {
  return traj.state(t, sc.b_a0, sc.b_w0, sc.p_IU, sc.t_d);
}

int cmd_simulate(const Common& c) {
  const Scenario sc = load(c);
  SimulationOutput sim = simulate(sc);
  sim.dataset.header.scenario_hash = io::scenario_hash(sc);
  log(LogLevel::info, std::to_string(sim.dataset.count(RecordKind::imu)) + " IMU and " +
                          std::to_string(sim.dataset.count(RecordKind::range)) + " range records");
  if (c.out.empty()) throw ConfigError("--out", "simulate needs an output directory");
  emit(c.out, "dataset.jsonl", io::dump_dataset(sim.dataset));
  emit(c.out, "truth.csv", io::dump_truth_csv(sim.truth));
  emit(c.out, "scenario.json", io::dump_scenario(sc));
  return kExitOk;
}

int cmd_analyze(const Common& c, bool require_full_rank) {
  const Scenario sc = load(c);
  if (sc.anchors.size() < 3) throw ConfigError("anchors", "observability analysis needs at least three anchors");
  const AnchorSet first3(std::vector<Anchor>(sc.anchors.begin(), sc.anchors.begin() + 3));
  const Trajectory traj = sc.make_trajectory();
  const ExcitationReport exc = excitation_report(traj, 0.0, sc.duration);

  Json instants = Json::array();
  int min_rank = kStateDim + 1;
  std::optional<ObservabilityReport> worst;
  double worst_t = 0.0;
  for (double t : sample_times(sc.duration, c.samples < 0 ? 20 : c.samples)) {
    ObservabilityReport rep = build_O(state_at(sc, traj, t), first3, exc);
    instants.push_back(Json{{"t", t}, {"rank", rep.rank}, {"tangent_rank", rep.tangent_rank}});
    log(LogLevel::debug, "t = " + io::fmt(t) + " rank " + std::to_string(rep.rank));
    if (rep.rank < min_rank) {
      min_rank = rep.rank;
      worst_t = t;
      worst = std::move(rep);
    }
  }
  Json j;
  j["scenario"] = sc.name;
  j["anchors_used"] = Json::array({first3[0].id, first3[1].id, first3[2].id});
  j["excitation"] = io::to_json(exc);
  j["min_rank"] = worst ? min_rank : 0;
  j["full_rank"] = worst && min_rank == kStateDim;
  j["instants"] = instants;
  if (worst) {
    j["worst_t"] = worst_t;
    j["report"] = io::to_json(*worst);
  }
  emit_json(c.out, "observability.json", j);
  log(LogLevel::info, "min rank over run: " + std::to_string(worst ? min_rank : 0));
  if (require_full_rank && !(worst && min_rank == kStateDim)) return kExitAssertion;
  return kExitOk;
}

int cmd_identifiability(const Common& c, bool require_identifiable) {
  const Scenario sc = load(c);
  const Trajectory traj = sc.make_trajectory();
  const ExcitationReport exc = excitation_report(traj, 0.0, sc.duration);
  NoiseConfig clean;
  Json instants = Json::array();
  Verdict best = Verdict::not_identifiable;
  std::optional<IdentifiabilityReport> best_rep;
  int counts[3] = {0, 0, 0};
  for (double t : sample_times(sc.duration, c.samples < 0 ? 20 : c.samples)) {
    const State x = state_at(sc, traj, t);
    const ImuSample u = synth_imu(traj.sample(t), t, sc.b_a0, sc.b_w0, clean, nullptr);
    IdentifiabilityReport rep = classify(x, u, sc.anchors, exc);
    ++counts[static_cast<int>(rep.verdict)];
    instants.push_back(Json{{"t", t}, {"verdict", to_string(rep.verdict)}});
    const auto rank = [](Verdict v) { return v == Verdict::identifiable ? 2 : v == Verdict::marginal ? 1 : 0; };
    if (!best_rep || rank(rep.verdict) > rank(best)) {
      best = rep.verdict;
      best_rep = std::move(rep);
    }
  }
  Json j;
  j["scenario"] = sc.name;
  j["verdict"] = best_rep ? to_string(best) : "not-identifiable";
  j["counts"] = Json{{"identifiable", counts[0]}, {"marginal", counts[1]}, {"not-identifiable", counts[2]}};
  j["excitation"] = io::to_json(exc);
  if (best_rep) j["report"] = io::to_json(*best_rep);
  j["instants"] = instants;
  emit_json(c.out, "identifiability.json", j);
  log(LogLevel::info, "verdict: " + j["verdict"].get<std::string>());
  if (require_identifiable && best != Verdict::identifiable) return kExitAssertion;
  return kExitOk;
}

int cmd_lemmas(const Common& c, bool coplanar) {
  const int n = c.samples < 0 ? 1000 : c.samples;
  const std::uint64_t seed = c.seed.value_or(1);
  const LemmaSampling mode = coplanar ? LemmaSampling::coplanar : LemmaSampling::generic;
  std::vector<LemmaSummary> all;
  Json lemmas = Json::array();
  int passed = 0;
  for (int id = 1; id <= 4; ++id) {
    LemmaSummary s = check_lemma(id, n, seed, mode);
    Json j = io::to_json(s);
    const bool ok = s.identities_ok() && s.full_rank_ok();
    j["passed"] = ok;
    if (coplanar) j["expected_degenerate"] = !ok;
    passed += ok ? 1 : 0;
    log(LogLevel::info, "lemma " + std::to_string(id) + ": " + (ok ? "pass" : coplanar ? "degenerate (expected)" : "FAIL") +
                            ", max rel error " + io::fmt(s.max_rel_error));
    lemmas.push_back(j);
    all.push_back(std::move(s));
  }
  Json summary{{"samples", n},
               {"seed", seed},
               {"sampling", coplanar ? "coplanar" : "generic"},
               {"passed", passed},
               {"lemmas", lemmas}};
  if (c.out.empty()) {
    std::cout << summary.dump(2) << "\n";
  } else {
    emit(c.out, "lemmas.csv", io::dump_lemma_csv(all));
    emit_json(c.out, "lemmas_summary.json", summary);
  }
  if (!coplanar && passed != 4) return kExitAssertion;
  return kExitOk;
}

int cmd_ekf(const Common& c, const std::string& dataset_path, const std::string& truth_path, const std::string& mode) {
  Scenario sc = load(c);
  if (!mode.empty()) {
    try {
      sc.filter.mode = delay_mode_from_string(mode);
    } catch (const InvalidArgument& e) {
      throw ConfigError("--mode", e.what());
    }
  }
  Dataset data;
  TruthSeries truth;
  if (dataset_path.empty()) {
    SimulationOutput sim = simulate(sc);
    data = std::move(sim.dataset);
    truth = std::move(sim.truth);
  } else {
    data = io::parse_dataset(io::read_text(dataset_path));
    if (!truth_path.empty()) truth = io::parse_truth_csv(io::read_text(truth_path));
  }
  // Without truth the prior mean is built from the scenario trajectory at t = 0.
  const TruthSeries seed_truth =
      truth.empty() ? TruthSeries{{0.0, state_at(sc, sc.make_trajectory(), 0.0)}} : truth;
  const FilterConfig cfg = make_filter_config(sc, seed_truth);
  const RunResult r = run(cfg, data, sc.anchors, truth.empty() ? nullptr : &truth);

  Json summary;
  summary["scenario"] = sc.name;
  summary["mode"] = to_string(cfg.mode);
  summary["metrics"] = io::to_json(r.metrics);
  Json fin;
  fin["p_IU"] = io::to_json(r.final_state.x.p_IU);
  fin["t_d"] = r.final_state.x.t_d;
  summary["final"] = fin;
  if (c.out.empty()) {
    std::cout << summary.dump(2) << "\n";
  } else {
    emit(c.out, "steps.csv", io::dump_steps_csv(r));
    emit(c.out, "innovations.csv", io::dump_innovations_csv(r));
    emit_json(c.out, "summary.json", summary);
  }
  if (r.metrics.has_truth) {
    log(LogLevel::info, "t_d error " + io::fmt(std::abs(r.metrics.initial_error[err::td])) + " -> " +
                            io::fmt(std::abs(r.metrics.final_error[err::td])) + ", NEES in bounds " +
                            io::fmt(r.metrics.nees_fraction_in_bounds));
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"UWB/IMU time-offset and lever-arm observability toolkit"};
  app.require_subcommand(1);

  Common common;
  std::uint64_t seed_value = 0;
  auto add_common = [&](CLI::App* sub, bool scenario) {
    if (scenario) sub->add_option("--scenario", common.scenario, "scenario JSON file");
    sub->add_option("--out", common.out, "output directory (stdout when omitted)");
    sub->add_option("--seed", seed_value, "override the random seed");
    sub->add_option("--samples", common.samples, "number of sampled instants / cases");
  };

  auto* sim = app.add_subcommand("simulate", "synthesize a dataset and ground truth from a scenario");
  add_common(sim, true);

  bool require_full_rank = false;
  auto* ana = app.add_subcommand("analyze", "observability rank over the run");
  add_common(ana, true);
  ana->add_flag("--require-full-rank", require_full_rank, "exit 4 unless rank 19 at every sampled instant");

  bool require_identifiable = false;
  auto* idf = app.add_subcommand("identifiability", "time-offset identifiability verdict");
  add_common(idf, true);
  idf->add_flag("--require-identifiable", require_identifiable, "exit 4 unless the verdict is identifiable");

  bool coplanar = false;
  auto* lem = app.add_subcommand("lemmas", "sampled determinant identities and rank checks");
  add_common(lem, false);
  lem->add_flag("--coplanar", coplanar, "sample degenerate cases with the radio in the anchor plane");

  std::string dataset_path, truth_path, mode;
  auto* ekf = app.add_subcommand("ekf", "run the error-state filter");
  add_common(ekf, true);
  ekf->add_option("--dataset", dataset_path, "dataset JSONL (simulated from the scenario when omitted)");
  ekf->add_option("--truth", truth_path, "ground-truth CSV for metrics");
  ekf->add_option("--mode", mode, "propagate_by_td or ignore_td");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    // Usage errors count as configuration errors; --help exits 0.
    return app.exit(e) == 0 ? kExitOk : kExitConfig;
  }

  for (auto* sub : {sim, ana, idf, lem, ekf}) {
    if (sub->parsed() && sub->count("--seed") > 0) common.seed = seed_value;
  }

  try {
    if (sim->parsed()) return cmd_simulate(common);
    if (ana->parsed()) return cmd_analyze(common, require_full_rank);
    if (idf->parsed()) return cmd_identifiability(common, require_identifiable);
    if (lem->parsed()) return cmd_lemmas(common, coplanar);
    if (ekf->parsed()) return cmd_ekf(common, dataset_path, truth_path, mode);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const NumericalFailure& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
