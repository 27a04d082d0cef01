#include "nosadam/scenarios.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "nosadam/landscape.hpp"
#include "nosadam/oco.hpp"
#include "nosadam/optimizers.hpp"
#include "nosadam/schedules.hpp"

namespace nosadam {

namespace {

using nlohmann::json;

constexpr double kPi = std::numbers::pi;

const std::vector<std::string>& names_impl() {
  static const std::vector<std::string> names = {
      "bounds",         "bowl",     "bowl-sharp", "conditions",
      "counterexample", "logistic", "spike",      "weights"};
  return names;
}

json parse_json_text(const std::string& text, const std::string& where) {
  try {
    return json::parse(text, nullptr, true, /*ignore_comments=*/true);
  } catch (const json::exception& e) {
    throw std::invalid_argument(where + ": " + e.what());
  }
}

json parse_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in.good()) {
    throw std::invalid_argument("cannot read config file: " + path);
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_json_text(buf.str(), path);
}

// Keys each scenario accepts, across committed file, user config, and flag
// overrides alike.
const std::vector<std::string>& allowed_keys(const std::string& scenario) {
  static const std::map<std::string, std::vector<std::string>> table = {
      {"conditions", {"gamma", "gammas", "T", "p"}},
      {"weights", {"beta2", "gamma", "shift", "t", "T"}},
      {"counterexample",
       {"rule", "rules", "C", "period", "T", "alpha", "beta1", "beta2",
        "gamma", "lambda", "p", "epsilon", "bias_correction", "x1",
        "late_window_frac", "avg_regret_max", "expected"}},
      {"spike",
       {"rule", "rules", "C", "period", "T", "alpha", "beta1", "beta2",
        "gamma", "lambda", "p", "epsilon", "bias_correction", "x1",
        "spike_step", "spike_factor", "recovery_window", "recovery_ratio"}},
      {"bowl",
       {"rule", "rules", "T", "alpha", "alpha_by_rule", "beta1", "beta2",
        "gamma", "lambda", "p", "epsilon", "bias_correction", "surface",
        "init", "valley_a", "expected", "global_distance_max"}},
      {"bowl-sharp",
       {"rule", "rules", "T", "alpha", "alpha_by_rule", "beta1", "beta2",
        "gamma", "lambda", "p", "epsilon", "bias_correction", "surface",
        "location_a", "expected", "global_distance_max"}},
      {"logistic",
       {"rule", "rules", "T", "seed", "alpha", "beta1", "beta2", "gamma",
        "lambda", "p", "epsilon", "bias_correction", "data_seed", "n", "d",
        "classes", "minibatch", "parity_tol", "box_half_width"}},
      {"bounds",
       {"rule", "T", "seed", "alpha", "beta1", "gamma", "lambda", "p",
        "epsilon", "curv_lo", "curv_hi", "d"}},
  };
  const auto it = table.find(scenario);
  if (it == table.end()) {
    std::string known;
    for (const std::string& n : names_impl()) {
      if (!known.empty()) known += ", ";
      known += n;
    }
    throw std::invalid_argument("unknown scenario: " + scenario +
                                " (expected one of " + known + ")");
  }
  return it->second;
}

void check_rule_string(const json& v, const std::string& where) {
  if (!v.is_string()) {
    throw std::invalid_argument(where + " must be an optimizer rule name");
  }
  rule_from_name(v.get<std::string>());
}

void check_keys(const std::string& scenario, const json& obj,
                const std::string& source) {
  if (!obj.is_object()) {
    throw std::invalid_argument("scenario " + scenario + ": " + source +
                                " must be a JSON object");
  }
  const std::vector<std::string>& allowed = allowed_keys(scenario);
  for (const auto& item : obj.items()) {
    const std::string& key = item.key();
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      throw std::invalid_argument("scenario " + scenario +
                                  ": unknown config key '" + key + "' in " +
                                  source);
    }
    if (key == "rule") {
      check_rule_string(item.value(), "scenario " + scenario + ": 'rule'");
    } else if (key == "rules") {
      if (!item.value().is_array()) {
        throw std::invalid_argument("scenario " + scenario +
                                    ": 'rules' must be an array");
      }
      for (const json& r : item.value()) {
        check_rule_string(r, "scenario " + scenario + ": 'rules' entry");
      }
    } else if (key == "expected" || key == "alpha_by_rule") {
      if (!item.value().is_object()) {
        throw std::invalid_argument("scenario " + scenario + ": '" + key +
                                    "' must be an object keyed by rule");
      }
      for (const auto& sub : item.value().items()) {
        rule_from_name(sub.key());
      }
    } else if (key == "surface") {
      if (!item.value().is_object()) {
        throw std::invalid_argument("scenario " + scenario +
                                    ": 'surface' must be an object");
      }
      static const std::vector<std::string> surf = {"a", "b",    "c",
                                                    "r", "beta", "i_set"};
      for (const auto& sub : item.value().items()) {
        if (std::find(surf.begin(), surf.end(), sub.key()) == surf.end()) {
          throw std::invalid_argument("scenario " + scenario +
                                      ": unknown surface key '" + sub.key() +
                                      "'");
        }
      }
    }
  }
}

// Type-checked getters over the resolved config.
struct CfgView {
  const json& cfg;
  std::string who;

  [[noreturn]] void fail(const std::string& key, const char* want) const {
    throw std::invalid_argument("scenario " + who + ": key '" + key +
                                "' must be " + want);
  }
  const json* find(const std::string& key) const {
    const auto it = cfg.find(key);
    return it == cfg.end() ? nullptr : &*it;
  }
  double num(const std::string& key, double dflt) const {
    const json* v = find(key);
    if (!v) return dflt;
    if (!v->is_number()) fail(key, "a number");
    return v->get<double>();
  }
  std::size_t uint(const std::string& key, std::size_t dflt) const {
    const json* v = find(key);
    if (!v) return dflt;
    if (!v->is_number()) fail(key, "a non-negative integer");
    const double d = v->get<double>();
    if (!(d >= 0.0) || d != std::floor(d) || d > 1e15) {
      fail(key, "a non-negative integer");
    }
    return static_cast<std::size_t>(d);
  }
  std::uint64_t u64(const std::string& key, std::uint64_t dflt) const {
    return static_cast<std::uint64_t>(uint(key, static_cast<std::size_t>(
                                               dflt)));
  }
  bool boolean(const std::string& key, bool dflt) const {
    const json* v = find(key);
    if (!v) return dflt;
    if (!v->is_boolean()) fail(key, "a boolean");
    return v->get<bool>();
  }
  std::array<double, 3> point(const std::string& key) const {
    const json* v = find(key);
    if (!v) {
      throw std::invalid_argument("scenario " + who + ": key '" + key +
                                  "' is required");
    }
    if (!v->is_array() || v->size() != 3 || !(*v)[0].is_number() ||
        !(*v)[1].is_number() || !(*v)[2].is_number()) {
      fail(key, "an [x, y, z] array");
    }
    return {(*v)[0].get<double>(), (*v)[1].get<double>(),
            (*v)[2].get<double>()};
  }
  std::vector<std::string> rules(std::vector<std::string> dflt) const {
    if (const json* one = find("rule")) {
      return {one->get<std::string>()};
    }
    if (const json* many = find("rules")) {
      std::vector<std::string> out;
      for (const json& r : *many) out.push_back(r.get<std::string>());
      if (out.empty()) fail("rules", "a non-empty array");
      return out;
    }
    return dflt;
  }
  double alpha_for(Rule rule) const {
    if (const json* by = find("alpha_by_rule")) {
      const auto it = by->find(rule_name(rule));
      if (it != by->end()) {
        if (!it->is_number()) fail("alpha_by_rule", "an object of numbers");
        return it->get<double>();
      }
    }
    return num("alpha", 0.001);
  }
};

OptimizerConfig opt_config_for(Rule rule, const CfgView& c, std::size_t T) {
  OptimizerConfig oc;
  oc.rule = rule;
  oc.p = c.num("p", 2.0);
  oc.epsilon = c.num("epsilon", 1e-8);
  oc.momentum =
      MomentumSchedule::make(c.num("beta1", 0.9), c.num("lambda", 1.0));
  const double alpha = c.alpha_for(rule);
  switch (rule) {
    case Rule::NosAdam:
      oc.weights = WeightSchedule::hyperharmonic(c.num("gamma", 0.1));
      oc.step_size = StepSizeSchedule::inv_sqrt(alpha);
      break;
    case Rule::PNosAdam:
      oc.weights = WeightSchedule::hyperharmonic(c.num("gamma", 0.1));
      oc.step_size = StepSizeSchedule::inv_p_root(alpha, oc.p);
      break;
    case Rule::Adam:
      oc.bias_correction = c.boolean("bias_correction", true);
      oc.weights = WeightSchedule::ema_equivalent(c.num("beta2", 0.999));
      oc.step_size = StepSizeSchedule::inv_sqrt(alpha);
      break;
    case Rule::AMSGrad:
      oc.weights = WeightSchedule::ema_equivalent(c.num("beta2", 0.999));
      oc.step_size = StepSizeSchedule::inv_sqrt(alpha);
      break;
  }
  if (rule == Rule::NosAdam || rule == Rule::PNosAdam) {
    oc.condition_check_horizon = std::min<std::size_t>(T, 100000);
  }
  return oc;
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

void add_verdict(ScenarioResult& r, bool ok, const std::string& what) {
  r.verdicts.push_back(std::string(ok ? "PASS " : "FAIL ") + what);
  r.pass = r.pass && ok;
}

std::string out_path(const ScenarioSpec& spec, const std::string& file) {
  return spec.out_dir + "/" + file;
}

bool want_csvs(const ScenarioSpec& spec) {
  return !spec.out_dir.empty() && spec.write_csvs;
}

void save_run_csv(const ScenarioSpec& spec, ScenarioResult& result,
                  const RunRecord& record, const std::string& file) {
  if (!want_csvs(spec)) return;
  const std::string path = out_path(spec, file);
  write_run_csv(record, path);
  result.files.push_back(path);
}

void finalize(const ScenarioSpec& spec, ScenarioResult& result,
              const json& cfg, json results) {
  result.sidecar = json{{"scenario", result.name},
                        {"config", cfg},
                        {"pass", result.pass},
                        {"verdicts", result.verdicts},
                        {"results", std::move(results)}};
  if (!spec.out_dir.empty()) {
    const std::string path = out_path(spec, result.name + ".json");
    std::ofstream out(path);
    if (!out.good()) {
      throw std::invalid_argument("cannot write sidecar: " + path);
    }
    out << result.sidecar.dump(2) << "\n";
    out.close();
    if (!out.good()) {
      throw std::runtime_error("failed to finish writing: " + path);
    }
    result.files.push_back(path);
  }
}

// ---------------------------------------------------------------------------
// conditions: both weight-schedule requirements over a gamma set.

ScenarioResult run_conditions(const ScenarioSpec& spec, const json& cfg) {
  const CfgView c{cfg, "conditions"};
  ScenarioResult result;
  result.name = "conditions";
  result.pass = true;

  std::vector<double> gammas;
  if (const json* single = c.find("gamma")) {
    if (!single->is_number()) c.fail("gamma", "a number");
    gammas.push_back(single->get<double>());
  } else if (const json* many = c.find("gammas")) {
    if (!many->is_array() || many->empty()) {
      c.fail("gammas", "a non-empty array of numbers");
    }
    for (const json& g : *many) {
      if (!g.is_number()) c.fail("gammas", "a non-empty array of numbers");
      gammas.push_back(g.get<double>());
    }
  } else {
    gammas = {0.0, 1e-4, 1e-3, 1e-2, 1e-1, 0.5, 1.0};
  }
  const std::size_t T = c.uint("T", 100000);
  const double p = c.num("p", 2.0);
  if (T < 1) c.fail("T", "a positive integer");

  json rows = json::array();
  std::size_t violations = 0;
  std::string first_bad;
  for (double gamma : gammas) {
    const WeightSchedule ws = WeightSchedule::hyperharmonic(gamma);
    const ConditionReport c1 = ws.check_condition1(T);
    const ConditionReport c2 = ws.check_condition2(T, p);
    if (!c1.holds || !c2.holds) {
      ++violations;
      if (first_bad.empty()) {
        const ConditionReport& bad = c1.holds ? c2 : c1;
        first_bad = "gamma=" + fmt(gamma) + " fails the " +
                    (c1.holds ? "tail-growth" : "average-decay") +
                    " condition at step " +
                    std::to_string(*bad.first_violation);
      }
    }
    rows.push_back(json{{"gamma", gamma},
                        {"condition1_holds", c1.holds},
                        {"condition2_holds", c2.holds}});
  }
  const bool ok = violations == 0;
  add_verdict(result, ok,
              "conditions: " + std::to_string(gammas.size()) +
                  " schedule(s), T=" + std::to_string(T) +
                  (ok ? ", zero violations" : ", " + first_bad));
  result.metric = static_cast<double>(violations);
  finalize(spec, result, cfg,
           json{{"T", T}, {"p", p}, {"schedules", std::move(rows)}});
  return result;
}

// ---------------------------------------------------------------------------
// weights: per-step weight profiles of the competing schedules.

ScenarioResult run_weights(const ScenarioSpec& spec, const json& cfg) {
  const CfgView c{cfg, "weights"};
  ScenarioResult result;
  result.name = "weights";
  result.pass = true;

  const double beta2 = c.num("beta2", 0.9);
  const double gamma = c.num("gamma", 0.1);
  const double shift = c.num("shift", 20.0);
  std::size_t t = c.uint("T", 0);
  if (t == 0) t = c.uint("t", 100);
  if (t < 2) c.fail("t", "an integer >= 2");
  if (shift < 0.0) c.fail("shift", "non-negative");

  const std::vector<double> adam =
      WeightSchedule::ema_equivalent(beta2).weights_at(t);
  const std::vector<double> nosadam =
      WeightSchedule::hyperharmonic(gamma).weights_at(t);
  std::vector<double> shifted(t);
  double shifted_sum = 0.0;
  for (std::size_t k = 1; k <= t; ++k) {
    shifted[k - 1] = std::pow(static_cast<double>(k) + shift, -gamma);
    shifted_sum += shifted[k - 1];
  }
  for (double& w : shifted) w /= shifted_sum;

  auto column_sum = [](const std::vector<double>& w) {
    double s = 0.0;
    for (double wi : w) s += wi;
    return s;
  };
  const bool sums_ok = std::abs(column_sum(adam) - 1.0) <= 1e-12 &&
                       std::abs(column_sum(nosadam) - 1.0) <= 1e-12 &&
                       std::abs(column_sum(shifted) - 1.0) <= 1e-12;
  bool adam_recent_heavy = true;
  bool nosadam_old_heavy = true;
  bool shifted_old_heavy = true;
  for (std::size_t k = 1; k < t; ++k) {
    adam_recent_heavy = adam_recent_heavy && adam[k] >= adam[k - 1];
    nosadam_old_heavy = nosadam_old_heavy && nosadam[k] <= nosadam[k - 1];
    shifted_old_heavy = shifted_old_heavy && shifted[k] <= shifted[k - 1];
  }
  const double nosadam_ratio = nosadam.front() / nosadam.back();
  const double shifted_ratio = shifted.front() / shifted.back();
  const bool shifted_flatter = shifted_ratio < nosadam_ratio;
  const bool nostalgia = nosadam.front() > adam.front();

  add_verdict(result, sums_ok, "weights/sums: columns renormalize to one");
  add_verdict(result,
              adam_recent_heavy && nosadam_old_heavy && shifted_old_heavy,
              "weights/shape: ema grows toward recent steps, the "
              "long-memory columns decay");
  add_verdict(result, shifted_flatter && nostalgia,
              "weights/contrast: shifted profile is flatter (first/last " +
                  fmt(shifted_ratio) + " vs " + fmt(nosadam_ratio) +
                  ") and old steps outweigh the ema's");
  result.metric = shifted_ratio;

  if (want_csvs(spec)) {
    const std::string path = out_path(spec, "weights.csv");
    std::FILE* f = std::fopen(path.c_str(), "w");
    if (!f) throw std::invalid_argument("cannot open for writing: " + path);
    std::fprintf(f,
                 "# weight placed on the step-k gradient after %zu steps; "
                 "each column renormalized to sum to one\n",
                 t);
    std::fputs("k,adam_weight,nosadam_weight,shifted_weight\n", f);
    for (std::size_t k = 1; k <= t; ++k) {
      std::fprintf(f, "%zu,%.17g,%.17g,%.17g\n", k, adam[k - 1],
                   nosadam[k - 1], shifted[k - 1]);
    }
    if (std::fclose(f) != 0) {
      throw std::runtime_error("failed to finish writing: " + path);
    }
    result.files.push_back(path);
  }

  finalize(spec, result, cfg,
           json{{"t", t},
                {"beta2", beta2},
                {"gamma", gamma},
                {"shift", shift},
                {"nosadam_first_over_last", nosadam_ratio},
                {"shifted_first_over_last", shifted_ratio},
                {"adam_weight_on_step1", adam.front()},
                {"nosadam_weight_on_step1", nosadam.front()}});
  return result;
}

// ---------------------------------------------------------------------------
// counterexample: periodic linear losses that defeat short-memory steps.

ScenarioResult run_counterexample(const ScenarioSpec& spec, const json& cfg) {
  const CfgView c{cfg, "counterexample"};
  ScenarioResult result;
  result.name = "counterexample";
  result.pass = true;

  const double C = c.num("C", 2.5);
  const int period = static_cast<int>(c.uint("period", 3));
  const std::size_t T = c.uint("T", 200000);
  const double frac = c.num("late_window_frac", 0.1);
  const double regret_max = c.num("avg_regret_max", 0.01);
  const double x1 = c.num("x1", 1.0);
  if (T < 10) c.fail("T", "an integer >= 10");
  if (!(frac > 0.0) || frac > 1.0) c.fail("late_window_frac", "in (0, 1]");

  static const std::map<std::string, std::string> default_expected = {
      {"adam", "DIVERGES"},
      {"amsgrad", "CONVERGES"},
      {"nosadam", "CONVERGES"},
      {"p-nosadam", "CONVERGES"}};

  const std::shared_ptr<LossOracle> oracle = make_counterexample(C, period);
  const BoxFeasibleSet feasible = BoxFeasibleSet::cube(1, -1.0, 1.0);
  json results = json::object();
  bool have_metric = false;
  for (const std::string& rule : c.rules({"adam", "nosadam"})) {
    const OptimizerConfig oc = opt_config_for(rule_from_name(rule), c, T);
    const RunRecord rec = run_online(oc, *oracle, feasible, {x1}, T);

    const std::size_t window = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::ceil(frac * static_cast<double>(T))));
    double late_mean = 0.0;
    for (std::size_t t = T - window + 1; t <= T; ++t) {
      late_mean += rec.x_at(t)[0];
    }
    late_mean /= static_cast<double>(window);
    const double avg_regret = rec.regret / static_cast<double>(T);

    std::string status = "INCONCLUSIVE";
    if (late_mean > 0.0) {
      status = "DIVERGES";
    } else if (late_mean < 0.0 && avg_regret <= regret_max) {
      status = "CONVERGES";
    }
    std::string expected;
    if (const json* exp = c.find("expected")) {
      const auto it = exp->find(rule);
      if (it != exp->end()) expected = it->get<std::string>();
    }
    if (expected.empty()) expected = default_expected.at(rule);

    const bool ok = status == expected;
    add_verdict(result, ok,
                "counterexample/" + rule + ": " + status +
                    " (late-window mean " + fmt(late_mean) + ", avg regret " +
                    fmt(avg_regret) + "), expected " + expected);
    results[rule] = json{{"late_window_mean", late_mean},
                         {"avg_regret", avg_regret},
                         {"final_x", rec.x_at(T)[0]},
                         {"status", status},
                         {"expected", expected},
                         {"gamma_always_psd", rec.gamma_always_psd},
                         {"pass", ok}};
    if (rule == "nosadam" || !have_metric) {
      result.metric = avg_regret;
      have_metric = rule == "nosadam";
    }
    save_run_csv(spec, result, rec, "counterexample_" + rule + ".csv");
  }
  finalize(spec, result, cfg, std::move(results));
  return result;
}

// ---------------------------------------------------------------------------
// spike: one scaled loss; contrasts denominator recovery across rules.

ScenarioResult run_spike(const ScenarioSpec& spec, const json& cfg) {
  const CfgView c{cfg, "spike"};
  ScenarioResult result;
  result.name = "spike";
  result.pass = true;

  const double C = c.num("C", 2.5);
  const int period = static_cast<int>(c.uint("period", 3));
  const std::size_t T = c.uint("T", 30000);
  const std::size_t spike_step = c.uint("spike_step", 10000);
  const double factor = c.num("spike_factor", 100.0);
  const std::size_t window = c.uint("recovery_window", 15000);
  const double ratio = c.num("recovery_ratio", 2.0);
  const double x1 = c.num("x1", 1.0);
  if (spike_step < 2 || spike_step >= T) {
    throw std::invalid_argument(
        "scenario spike: spike_step must fall inside the horizon");
  }
  if (T < spike_step + window) {
    throw std::invalid_argument(
        "scenario spike: horizon too short to observe the recovery window");
  }

  const std::shared_ptr<LossOracle> oracle =
      make_spike_oracle(make_counterexample(C, period), spike_step, factor);
  const BoxFeasibleSet feasible = BoxFeasibleSet::cube(1, -1.0, 1.0);
  json results = json::object();
  for (const std::string& rule : c.rules({"amsgrad", "nosadam"})) {
    const OptimizerConfig oc = opt_config_for(rule_from_name(rule), c, T);
    const RunRecord rec = run_online(oc, *oracle, feasible, {x1}, T);
    const double v_pre = rec.v_at(spike_step - 1)[0];
    const double v_spike = rec.v_at(spike_step)[0];

    if (rule == "amsgrad") {
      // The max rule keeps the denominator at or above the spike level for
      // the rest of the run; reconstruct its running max from the raw trace.
      double hat = 0.0;
      bool monotone = true;
      bool held = true;
      for (std::size_t t = 1; t <= T; ++t) {
        const double next = std::max(hat, rec.v_at(t)[0]);
        monotone = monotone && next >= hat;
        hat = next;
        if (t >= spike_step) held = held && hat >= v_spike;
      }
      const bool ok = monotone && held;
      add_verdict(result, ok,
                  "spike/amsgrad: denominator never decreases and holds the "
                  "spike level (final/pre ratio " +
                      fmt(hat / v_pre) + ")");
      results[rule] = json{{"v_pre_spike", v_pre},
                           {"v_at_spike", v_spike},
                           {"v_hat_final", hat},
                           {"held_spike_level", held},
                           {"monotone", monotone},
                           {"pass", ok}};
    } else {
      std::size_t recovery = 0;
      for (std::size_t t = spike_step + 1; t <= T; ++t) {
        if (rec.v_at(t)[0] <= ratio * v_pre) {
          recovery = t;
          break;
        }
      }
      const bool registered = v_spike > ratio * v_pre;
      const bool ok =
          registered && recovery != 0 && recovery - spike_step <= window;
      const std::size_t steps = recovery == 0 ? 0 : recovery - spike_step;
      add_verdict(
          result, ok,
          "spike/" + rule + ": second moment jumped x" + fmt(v_spike / v_pre) +
              " and returned within " + fmt(ratio) + "x of its pre-spike "
              "value after " +
              (recovery == 0 ? "more than " + std::to_string(T - spike_step)
                             : std::to_string(steps)) +
              " steps (window " + std::to_string(window) + ")");
      results[rule] = json{{"v_pre_spike", v_pre},
                           {"v_at_spike", v_spike},
                           {"recovery_steps", steps},
                           {"recovered", recovery != 0},
                           {"pass", ok}};
      if (rule == "nosadam") {
        result.metric =
            recovery == 0 ? static_cast<double>(T) : static_cast<double>(steps);
      }
    }
    save_run_csv(spec, result, rec, "spike_" + rule + ".csv");
  }
  finalize(spec, result, cfg, std::move(results));
  return result;
}

// ---------------------------------------------------------------------------
// bowl / bowl-sharp: descent on the 3-D test surface.

BowlParams surface_from(const CfgView& c, const BowlParams& base) {
  BowlParams params = base;
  if (const json* s = c.find("surface")) {
    const CfgView sv{*s, c.who + ".surface"};
    params.a = sv.num("a", params.a);
    params.b = sv.num("b", params.b);
    params.c = sv.num("c", params.c);
    params.r = sv.num("r", params.r);
    params.beta = sv.num("beta", params.beta);
    if (const json* is = sv.find("i_set")) {
      if (!is->is_array() || is->empty()) {
        sv.fail("i_set", "a non-empty array of integers");
      }
      params.i_set.clear();
      for (const json& v : *is) {
        if (!v.is_number_integer()) {
          sv.fail("i_set", "a non-empty array of integers");
        }
        params.i_set.push_back(v.get<int>());
      }
    }
  }
  validate_bowl(params);
  return params;
}

json trajectory_summary(const Trajectory& traj) {
  const TrajectoryPoint& last = traj.points.back();
  const double dist = std::sqrt((last.x - kPi) * (last.x - kPi) +
                                (last.y - kPi) * (last.y - kPi) +
                                (last.z - kPi) * (last.z - kPi));
  return json{{"final", {last.x, last.y, last.z}},
              {"final_f", last.f},
              {"distance_to_center", dist},
              {"basin", traj.terminal.is_global ? "global" : "local"},
              {"local_index", traj.terminal.local_index},
              {"basin_distance", traj.terminal.distance}};
}

void save_trajectory(const ScenarioSpec& spec, ScenarioResult& result,
                     const Trajectory& traj, const std::string& file) {
  if (!want_csvs(spec)) return;
  const std::string path = out_path(spec, file);
  write_trajectory_csv(traj, path);
  result.files.push_back(path);
}

// Judged descent shared by the trap/approach legs: nostalgic rules are
// expected at the global center, short-memory rules in a ring basin.
void basin_leg(const ScenarioSpec& spec, ScenarioResult& result,
               const CfgView& c, const BowlParams& params,
               const std::array<double, 3>& start, std::size_t T, double gdm,
               const std::vector<std::string>& rules, const std::string& leg,
               json& results, bool& have_metric) {
  static const std::map<std::string, std::string> default_expected = {
      {"nosadam", "global"},
      {"p-nosadam", "global"},
      {"adam", "local"},
      {"amsgrad", "local"}};
  for (const std::string& rule : rules) {
    const Trajectory traj =
        run_descent(params, opt_config_for(rule_from_name(rule), c, T), start,
                    T);
    json summary = trajectory_summary(traj);
    std::string expected;
    if (const json* exp = c.find("expected")) {
      const auto it = exp->find(rule);
      if (it != exp->end()) expected = it->get<std::string>();
    }
    if (expected.empty()) expected = default_expected.at(rule);
    if (expected != "global" && expected != "local") {
      c.fail("expected", "an object mapping rules to 'global' or 'local'");
    }

    const double dist = summary["distance_to_center"].get<double>();
    const bool is_global = traj.terminal.is_global;
    const bool ok = expected == "global" ? (is_global && dist < gdm)
                                         : !is_global;
    add_verdict(result, ok,
                result.name + "/" + leg + "/" + rule + ": terminal basin " +
                    (is_global ? "global" : "local") + " (center distance " +
                    fmt(dist) + "), expected " + expected);
    summary["expected"] = expected;
    summary["pass"] = ok;
    results[leg][rule] = std::move(summary);
    if (rule == "nosadam" || !have_metric) {
      result.metric = traj.points.back().f;
      have_metric = rule == "nosadam";
    }
    save_trajectory(spec, result, traj,
                    result.name + "_" + leg + "_" + rule + ".csv");
  }
}

ScenarioResult run_bowl(const ScenarioSpec& spec, const json& cfg) {
  const CfgView c{cfg, "bowl"};
  ScenarioResult result;
  result.name = "bowl";
  result.pass = true;

  const BowlParams params = surface_from(c, BowlParams::wide());
  const std::array<double, 3> init = c.point("init");
  const std::array<double, 3> valley_a = c.point("valley_a");
  const std::size_t T = c.uint("T", 2000);
  const double gdm = c.num("global_distance_max", 0.5);
  if (T < 1) c.fail("T", "a positive integer");

  const BasinLabel valley = classify_basin(params, valley_a);
  if (valley.is_global) {
    throw std::invalid_argument(
        "scenario bowl: valley_a must lie inside a ring basin");
  }

  const std::vector<std::string> rules = c.rules({"adam", "nosadam"});
  json results = json::object();
  bool have_metric = false;
  // trap: from the committed point on the side of the bowl, the short-memory
  // rule overshoots the center into a ring pocket; the long-memory rule
  // settles at the center.
  basin_leg(spec, result, c, params, init, T, gdm, rules, "trap", results,
            have_metric);
  // escape: both start inside that same pocket; the short-memory rule's
  // denominator forgets the pocket's gradient scale and it jumps out.
  for (const std::string& rule : rules) {
    const Trajectory traj =
        run_descent(params, opt_config_for(rule_from_name(rule), c, T),
                    valley_a, T);
    json summary = trajectory_summary(traj);
    const bool nostalgic = rule == "nosadam" || rule == "p-nosadam";
    const bool stayed = !traj.terminal.is_global &&
                        traj.terminal.local_index == valley.local_index;
    const bool ok = nostalgic ? stayed : !stayed;
    add_verdict(result, ok,
                "bowl/escape/" + rule + ": " +
                    (stayed ? "stayed in" : "left") + " the starting pocket "
                    "(index " +
                    std::to_string(valley.local_index) + "), expected to " +
                    (nostalgic ? "stay" : "leave"));
    summary["stayed"] = stayed;
    summary["pass"] = ok;
    results["escape"][rule] = std::move(summary);
    save_trajectory(spec, result, traj, "bowl_escape_" + rule + ".csv");
  }
  results["valley_index"] = valley.local_index;
  if (want_csvs(spec)) {
    const std::string path = out_path(spec, "bowl_slice.csv");
    write_slice_csv(
        export_slice(params, 2.34, 0.0, 2.0 * kPi, 0.0, 2.0 * kPi, 200, 200),
        path);
    result.files.push_back(path);
  }
  finalize(spec, result, cfg, std::move(results));
  return result;
}

ScenarioResult run_bowl_sharp(const ScenarioSpec& spec, const json& cfg) {
  const CfgView c{cfg, "bowl-sharp"};
  ScenarioResult result;
  result.name = "bowl-sharp";
  result.pass = true;

  const BowlParams params = surface_from(c, BowlParams::sharper());
  const std::array<double, 3> location_a = c.point("location_a");
  const std::size_t T = c.uint("T", 2000);
  const double gdm = c.num("global_distance_max", 0.5);
  if (T < 1) c.fail("T", "a positive integer");

  // approach: from a point outside the ring, the max-memory rule's
  // denominator keeps the scale of the steepest wall it ever saw, freezing
  // it short of the center; the averaging rule's denominator decays and it
  // arrives.
  json results = json::object();
  bool have_metric = false;
  basin_leg(spec, result, c, params, location_a, T, gdm,
            c.rules({"amsgrad", "nosadam"}), "approach", results,
            have_metric);
  finalize(spec, result, cfg, std::move(results));
  return result;
}

// ---------------------------------------------------------------------------
// logistic: softmax regression on synthetic clusters, final-loss parity.

ScenarioResult run_logistic(const ScenarioSpec& spec, const json& cfg) {
  const CfgView c{cfg, "logistic"};
  ScenarioResult result;
  result.name = "logistic";
  result.pass = true;

  const std::uint64_t data_seed = c.u64("data_seed", 42);
  const std::size_t n = c.uint("n", 600);
  const std::size_t d = c.uint("d", 8);
  const std::size_t classes = c.uint("classes", 3);
  const std::size_t minibatch = c.uint("minibatch", 128);
  const std::size_t T = c.uint("T", 5000);
  const double tol = c.num("parity_tol", 0.05);
  const double width = c.num("box_half_width", 10.0);
  const std::uint64_t seed = c.u64("seed", 1);
  if (T < 1) c.fail("T", "a positive integer");

  const Dataset data = make_gaussian_clusters(data_seed, n, d, classes);
  const std::shared_ptr<LossOracle> oracle =
      make_logistic_oracle(data, minibatch, seed);
  const std::shared_ptr<LossOracle> full = make_logistic_oracle(data, n, 0);
  const std::size_t dim = oracle->dim();
  const BoxFeasibleSet feasible = BoxFeasibleSet::cube(dim, -width, width);

  json results = json::object();
  std::vector<std::pair<std::string, double>> finals;
  for (const std::string& rule : c.rules({"adam", "amsgrad", "nosadam"})) {
    const OptimizerConfig oc = opt_config_for(rule_from_name(rule), c, T);
    const RunRecord rec =
        run_online(oc, *oracle, feasible, std::vector<double>(dim, 0.0), T);
    const std::span<const double> xT = rec.x_at(T);
    const double final_loss =
        full->loss(1, std::vector<double>(xT.begin(), xT.end()));
    finals.emplace_back(rule, final_loss);
    results[rule] = json{{"final_training_loss", final_loss},
                         {"mean_minibatch_loss",
                          rec.cumulative_loss / static_cast<double>(T)},
                         {"gamma_always_psd", rec.gamma_always_psd}};
    save_run_csv(spec, result, rec, "logistic_" + rule + ".csv");
  }

  double lo = finals.front().second;
  double hi = lo;
  std::string detail;
  for (const auto& [rule, loss] : finals) {
    lo = std::min(lo, loss);
    hi = std::max(hi, loss);
    if (!detail.empty()) detail += " ";
    detail += rule + "=" + fmt(loss);
  }
  const double spread = lo > 0.0
                            ? (hi - lo) / lo
                            : std::numeric_limits<double>::infinity();
  const bool ok = finals.size() < 2 || spread <= tol;
  add_verdict(result, ok,
              "logistic: final losses " + detail + " (spread " +
                  fmt(100.0 * spread) + "%, tolerance " + fmt(100.0 * tol) +
                  "%)");
  results["spread"] = spread;
  result.metric = hi;
  finalize(spec, result, cfg, std::move(results));
  return result;
}

// ---------------------------------------------------------------------------
// bounds: a quadratic-oracle run with its regret-bound breakdowns.

ScenarioResult run_bounds(const ScenarioSpec& spec, const json& cfg) {
  const CfgView c{cfg, "bounds"};
  ScenarioResult result;
  result.name = "bounds";
  result.pass = true;

  const std::uint64_t seed = c.u64("seed", 7);
  const std::size_t d = c.uint("d", 5);
  const std::size_t T = c.uint("T", 10000);
  const double curv_lo = c.num("curv_lo", 0.5);
  const double curv_hi = c.num("curv_hi", 2.0);
  const std::string rule_str = [&] {
    const json* r = c.find("rule");
    return r ? r->get<std::string>() : std::string("nosadam");
  }();
  const Rule rule = rule_from_name(rule_str);
  if (rule != Rule::NosAdam && rule != Rule::PNosAdam) {
    throw std::invalid_argument(
        "scenario bounds: the bound evaluators need a long-memory rule");
  }
  if (T < 1 || d < 1) c.fail("T", "positive integers for T and d");

  const std::shared_ptr<LossOracle> oracle =
      make_quadratic_oracle(seed, d, curv_lo, curv_hi, T);
  const BoxFeasibleSet feasible = BoxFeasibleSet::cube(d, -1.0, 1.0);
  const OptimizerConfig oc = opt_config_for(rule, c, T);
  const RunRecord rec =
      run_online(oc, *oracle, feasible, std::vector<double>(d, 0.0), T);
  const double R = rec.regret;

  const BoundInputs inputs = make_bound_inputs(rec, feasible);
  auto terms_json = [](const BoundBreakdown& b) {
    return json{{"term1", b.term1},
                {"term2", b.term2},
                {"term3", b.term3},
                {"total", b.total()}};
  };
  json results = json::object();
  results["regret"] = R;
  results["regret_over_sqrtT"] = R / std::sqrt(static_cast<double>(T));

  const double p = rule == Rule::PNosAdam ? c.num("p", 2.0) : 2.0;
  bool dominated = std::isfinite(R);
  std::string detail = "regret " + fmt(R);
  if (p == 2.0) {
    const BoundBreakdown thm = theorem_bound_terms(inputs);
    results["theorem"] = terms_json(thm);
    dominated = dominated && thm.total() >= R;
    detail += " <= theorem " + fmt(thm.total());
    if (inputs.lambda < 1.0 || inputs.beta1 == 0.0) {
      const BoundBreakdown cor = corollary_bound_terms(inputs);
      results["corollary"] = terms_json(cor);
      dominated = dominated && cor.total() >= R;
      detail += " / corollary " + fmt(cor.total());
    } else {
      results["corollary"] = "skipped: needs lambda < 1";
    }
  }
  const BoundBreakdown pthm = p_theorem_bound_terms(inputs, p);
  results["p_theorem"] = terms_json(pthm);
  dominated = dominated && pthm.total() >= R;
  detail += " / p-form " + fmt(pthm.total());

  add_verdict(result, dominated, "bounds: " + detail);
  result.metric = R;
  save_run_csv(spec, result, rec, "bounds_" + rule_str + ".csv");
  finalize(spec, result, cfg, std::move(results));
  return result;
}

}  // namespace

std::vector<std::string> scenario_names() {
  std::vector<std::string> names = names_impl();
  std::sort(names.begin(), names.end());
  return names;
}

std::string scenario_description(const std::string& name) {
  static const std::map<std::string, std::string> table = {
      {"bounds",
       "single quadratic-oracle run with its regret-bound breakdowns"},
      {"bowl", "wide-bowl descent; the ema rule overshoots into a ring "
               "pocket and later escapes it, the long-memory rule does "
               "neither"},
      {"bowl-sharp", "sharper surface; max-memory freezes on the approach, "
                     "the long-memory rule reaches the center"},
      {"conditions",
       "verifies the long-memory schedules meet both convergence conditions"},
      {"counterexample",
       "periodic linear stream where short-memory steps drift to the wrong "
       "end of the interval"},
      {"logistic",
       "softmax regression on synthetic clusters; final-loss parity"},
      {"spike", "one 100x loss spike; contrasts denominator recovery"},
      {"weights",
       "exports the per-step gradient weights of the competing schedules"},
  };
  const auto it = table.find(name);
  if (it == table.end()) {
    allowed_keys(name);  // throws the canonical unknown-scenario error
    throw std::logic_error("missing description for scenario " + name);
  }
  return it->second;
}

nlohmann::json resolve_scenario_config(const ScenarioSpec& spec) {
  allowed_keys(spec.name);  // validates the name

  std::string dir = spec.scenario_dir;
  if (dir.empty()) {
    if (const char* env = std::getenv("NOSADAM_SCENARIO_DIR")) dir = env;
  }
  if (dir.empty()) dir = "scenarios";

  const std::string committed_path = dir + "/" + spec.name + ".json";
  json merged = parse_json_file(committed_path);
  check_keys(spec.name, merged, committed_path);

  if (!spec.config_path.empty()) {
    json user = parse_json_file(spec.config_path);
    if (user.is_object() && user.contains("config")) {
      // A sidecar from an earlier run; its echoed config reproduces it.
      if (user.contains("scenario") &&
          user["scenario"].get<std::string>() != spec.name) {
        throw std::invalid_argument(
            "config file " + spec.config_path + " was recorded for scenario " +
            user["scenario"].get<std::string>() + ", not " + spec.name);
      }
      user = user["config"];
    }
    check_keys(spec.name, user, spec.config_path);
    for (const auto& item : user.items()) merged[item.key()] = item.value();
  }

  check_keys(spec.name, spec.overrides, "command-line overrides");
  for (const auto& item : spec.overrides.items()) {
    merged[item.key()] = item.value();
  }
  return merged;
}

ScenarioResult run_scenario(const ScenarioSpec& spec) {
  const json cfg = resolve_scenario_config(spec);
  if (!spec.out_dir.empty()) {
    std::error_code ec;
    std::filesystem::create_directories(spec.out_dir, ec);
    if (ec) {
      throw std::invalid_argument("cannot create output directory " +
                                  spec.out_dir + ": " + ec.message());
    }
  }
  if (spec.name == "conditions") return run_conditions(spec, cfg);
  if (spec.name == "weights") return run_weights(spec, cfg);
  if (spec.name == "counterexample") return run_counterexample(spec, cfg);
  if (spec.name == "spike") return run_spike(spec, cfg);
  if (spec.name == "bowl") return run_bowl(spec, cfg);
  if (spec.name == "bowl-sharp") return run_bowl_sharp(spec, cfg);
  if (spec.name == "logistic") return run_logistic(spec, cfg);
  if (spec.name == "bounds") return run_bounds(spec, cfg);
  throw std::logic_error("unhandled scenario: " + spec.name);
}

SweepResult run_sweep(const ScenarioSpec& base,
                      const std::map<std::string, std::vector<nlohmann::json>>&
                          grid,
                      const SweepOptions& options) {
  if (grid.empty()) {
    throw std::invalid_argument("sweep needs a non-empty parameter grid");
  }
  std::size_t total = 1;
  for (const auto& [key, values] : grid) {
    if (values.empty()) {
      throw std::invalid_argument("sweep grid key '" + key +
                                  "' has no values");
    }
    total *= values.size();
  }
  if (total > options.cap) {
    throw std::invalid_argument(
        "sweep of " + std::to_string(total) +
        " combinations exceeds the cap of " + std::to_string(options.cap));
  }

  // Enumerate the cartesian product with keys in sorted (map) order, the
  // last key varying fastest.
  std::vector<std::string> keys;
  for (const auto& [key, values] : grid) keys.push_back(key);
  std::vector<json> combos(total, json::object());
  std::vector<std::string> params(total);
  for (std::size_t idx = 0; idx < total; ++idx) {
    std::size_t rem = idx;
    json combo = json::object();
    for (std::size_t k = keys.size(); k-- > 0;) {
      const std::vector<json>& values = grid.at(keys[k]);
      combo[keys[k]] = values[rem % values.size()];
      rem /= values.size();
    }
    std::string label;
    for (const std::string& key : keys) {
      if (!label.empty()) label += ";";
      const json& v = combo[key];
      label += key + "=" + (v.is_string() ? v.get<std::string>() : v.dump());
    }
    combos[idx] = std::move(combo);
    params[idx] = std::move(label);
  }

  std::size_t workers = options.workers;
  if (workers == 0) {
    if (const char* env = std::getenv("NOSADAM_WORKERS")) {
      workers = static_cast<std::size_t>(std::strtoull(env, nullptr, 10));
    }
  }
  if (workers == 0) {
    workers = std::max(1u, std::min(8u, std::thread::hardware_concurrency()));
  }
  workers = std::min(workers, total);

  std::vector<ScenarioResult> results(total);
  std::vector<std::exception_ptr> errors(total);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    while (true) {
      const std::size_t idx = next.fetch_add(1);
      if (idx >= total) return;
      try {
        ScenarioSpec spec = base;
        for (const auto& item : combos[idx].items()) {
          spec.overrides[item.key()] = item.value();
        }
        if (!base.out_dir.empty()) {
          char sub[32];
          std::snprintf(sub, sizeof sub, "/combo_%03zu", idx);
          spec.out_dir = base.out_dir + sub;
        }
        spec.write_csvs = false;
        results[idx] = run_scenario(spec);
      } catch (...) {
        errors[idx] = std::current_exception();
      }
    }
  };
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (std::thread& th : pool) th.join();
  }
  for (std::size_t idx = 0; idx < total; ++idx) {
    if (!errors[idx]) continue;
    try {
      std::rethrow_exception(errors[idx]);
    } catch (const std::invalid_argument& e) {
      throw std::invalid_argument("sweep combo " + params[idx] + ": " +
                                  e.what());
    } catch (const std::exception& e) {
      throw std::runtime_error("sweep combo " + params[idx] + ": " + e.what());
    }
  }

  SweepResult out;
  out.pass = true;
  out.rows.resize(total);
  for (std::size_t idx = 0; idx < total; ++idx) {
    SweepRow& row = out.rows[idx];
    row.combo = idx;
    row.params = params[idx];
    row.pass = results[idx].pass;
    row.metric = results[idx].metric;
    row.verdicts = results[idx].verdicts;
    out.pass = out.pass && row.pass;
  }
  std::stable_sort(out.rows.begin(), out.rows.end(),
                   [](const SweepRow& a, const SweepRow& b) {
                     const double ma =
                         std::isnan(a.metric)
                             ? std::numeric_limits<double>::infinity()
                             : a.metric;
                     const double mb =
                         std::isnan(b.metric)
                             ? std::numeric_limits<double>::infinity()
                             : b.metric;
                     return ma < mb;
                   });

  if (!base.out_dir.empty()) {
    std::error_code ec;
    std::filesystem::create_directories(base.out_dir, ec);
    if (ec) {
      throw std::invalid_argument("cannot create output directory " +
                                  base.out_dir + ": " + ec.message());
    }
    out.summary_path = base.out_dir + "/sweep_summary.csv";
    std::FILE* f = std::fopen(out.summary_path.c_str(), "w");
    if (!f) {
      throw std::invalid_argument("cannot open for writing: " +
                                  out.summary_path);
    }
    std::fputs("rank,combo,params,pass,metric\n", f);
    for (std::size_t rank = 0; rank < out.rows.size(); ++rank) {
      const SweepRow& row = out.rows[rank];
      std::fprintf(f, "%zu,%zu,%s,%d,%.17g\n", rank + 1, row.combo,
                   row.params.c_str(), row.pass ? 1 : 0, row.metric);
    }
    if (std::fclose(f) != 0) {
      throw std::runtime_error("failed to finish writing: " +
                               out.summary_path);
    }
  }
  return out;
}

}  // namespace nosadam
