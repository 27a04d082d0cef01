#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <map>
#include <string>
#include <tuple>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "nosadam/scenarios.hpp"

namespace {

using nlohmann::json;

std::string scenario_dir_default() {
  // The environment wins; the compiled-in path makes the installed binary
  // work from any directory.
  if (std::getenv("NOSADAM_SCENARIO_DIR")) return "";
#ifdef NOSADAM_SCENARIO_DIR_DEFAULT
  return NOSADAM_SCENARIO_DIR_DEFAULT;
#else
  return "";
#endif
}

json to_number(const std::string& raw, const std::string& flag) {
  const char* begin = raw.c_str();
  char* end = nullptr;
  const double v = std::strtod(begin, &end);
  if (raw.empty() || end != begin + raw.size()) {
    throw std::invalid_argument("flag --" + flag + " expects a number, got '" +
                                raw + "'");
  }
  if (v == std::floor(v) && std::abs(v) <= 9.0e15) {
    return json(static_cast<std::int64_t>(v));
  }
  return json(v);
}

std::vector<std::string> split_list(const std::string& raw) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = raw.find(',', start);
    parts.push_back(raw.substr(start, comma - start));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return parts;
}

struct FlagBinding {
  std::string key;
  bool numeric;
  CLI::Option* option;
};

struct VerbState {
  std::string scenario;
  std::string out;
  std::string config;
  std::map<std::string, std::string> values;
};

void add_value_flags(CLI::App* sub, VerbState& state,
                     std::vector<FlagBinding>& bound) {
  const auto add = [&](const char* names, const char* key, bool numeric,
                       const char* desc) {
    bound.push_back(
        {key, numeric, sub->add_option(names, state.values[key], desc)});
  };
  add("--rule", "rule", false,
      "optimizer rule: adam, amsgrad, nosadam, p-nosadam");
  add("--gamma", "gamma", true, "hyperharmonic exponent");
  add("--p", "p", true, "moment order for p-nosadam");
  add("--alpha", "alpha", true, "base step size");
  add("--beta1", "beta1", true, "momentum coefficient");
  add("--beta2", "beta2", true, "ema second-moment coefficient");
  add("--lambda", "lambda", true, "per-step momentum decay");
  add("--T,--t", "T", true, "step horizon (or weight-window length)");
  add("--seed", "seed", true, "run seed");
  add("--C", "C", true, "counterexample slope");
  add("--spike-step", "spike_step", true, "step at which the loss is scaled");
  add("--spike-factor", "spike_factor", true, "loss scale at the spike");
  add("--shift", "shift", true, "weight-profile index shift");
}

int run_verb(const VerbState& state, const std::vector<FlagBinding>& bound,
             bool as_sweep) {
  nosadam::ScenarioSpec spec;
  spec.name = state.scenario;
  spec.scenario_dir = scenario_dir_default();
  spec.config_path = state.config;
  spec.out_dir = state.out;

  if (!as_sweep) {
    for (const FlagBinding& fb : bound) {
      if (fb.option->count() == 0) continue;
      const std::string& raw = state.values.at(fb.key);
      spec.overrides[fb.key] = fb.numeric ? to_number(raw, fb.key) : json(raw);
    }
    const nosadam::ScenarioResult result = nosadam::run_scenario(spec);
    for (const std::string& line : result.verdicts) {
      std::cout << line << "\n";
    }
    for (const std::string& file : result.files) {
      std::cerr << "wrote " << file << "\n";
    }
    return result.pass ? 0 : 1;
  }

  std::map<std::string, std::vector<json>> grid;
  for (const FlagBinding& fb : bound) {
    if (fb.option->count() == 0) continue;
    for (const std::string& part : split_list(state.values.at(fb.key))) {
      grid[fb.key].push_back(fb.numeric ? to_number(part, fb.key)
                                        : json(part));
    }
  }
  const nosadam::SweepResult result = nosadam::run_sweep(spec, grid);
  for (std::size_t rank = 0; rank < result.rows.size(); ++rank) {
    const nosadam::SweepRow& row = result.rows[rank];
    char metric[64];
    std::snprintf(metric, sizeof metric, "%.6g", row.metric);
    std::cout << "rank=" << rank + 1 << " combo=" << row.combo
              << " pass=" << (row.pass ? 1 : 0) << " metric=" << metric
              << " " << row.params << "\n";
  }
  if (!result.summary_path.empty()) {
    std::cerr << "wrote " << result.summary_path << "\n";
  }
  return result.pass ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"named, reproducible experiments for adaptive optimizers with "
               "long-memory second moments"};
  app.require_subcommand(1);

  VerbState run_state;
  VerbState sweep_state;
  VerbState validate_state;
  std::vector<FlagBinding> run_bound;
  std::vector<FlagBinding> sweep_bound;
  std::vector<FlagBinding> validate_bound;

  CLI::App* run = app.add_subcommand(
      "run", "run one scenario and print its PASS/FAIL verdicts");
  run->add_option("scenario", run_state.scenario, "scenario name")->required();
  run->add_option("--out", run_state.out, "output directory for CSVs and the "
                                          "JSON sidecar");
  run->add_option("--config", run_state.config,
                  "JSON config overlay (a sidecar from an earlier run works)");
  add_value_flags(run, run_state, run_bound);

  CLI::App* sweep = app.add_subcommand(
      "sweep", "run a cartesian grid; value flags accept comma lists");
  sweep->add_option("scenario", sweep_state.scenario, "scenario name")
      ->required();
  sweep->add_option("--out", sweep_state.out,
                    "output directory for per-combo sidecars and the summary");
  sweep->add_option("--config", sweep_state.config, "JSON config overlay");
  add_value_flags(sweep, sweep_state, sweep_bound);

  CLI::App* list = app.add_subcommand("list", "list the available scenarios");

  CLI::App* validate = app.add_subcommand(
      "validate-config", "resolve and print the effective config, no run");
  validate->add_option("scenario", validate_state.scenario, "scenario name")
      ->required();
  validate->add_option("--config", validate_state.config,
                       "JSON config overlay");
  add_value_flags(validate, validate_state, validate_bound);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (list->parsed()) {
      for (const std::string& name : nosadam::scenario_names()) {
        std::cout << name << ": " << nosadam::scenario_description(name)
                  << "\n";
      }
      return 0;
    }
    if (validate->parsed()) {
      nosadam::ScenarioSpec spec;
      spec.name = validate_state.scenario;
      spec.scenario_dir = scenario_dir_default();
      spec.config_path = validate_state.config;
      for (const FlagBinding& fb : validate_bound) {
        if (fb.option->count() == 0) continue;
        const std::string& raw = validate_state.values.at(fb.key);
        spec.overrides[fb.key] =
            fb.numeric ? to_number(raw, fb.key) : json(raw);
      }
      std::cout << nosadam::resolve_scenario_config(spec).dump(2) << "\n";
      return 0;
    }
    if (run->parsed()) return run_verb(run_state, run_bound, false);
    if (sweep->parsed()) return run_verb(sweep_state, sweep_bound, true);
    return 2;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::out_of_range& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return 1;
  }
}
