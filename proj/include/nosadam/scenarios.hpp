#ifndef NOSADAM_SCENARIOS_HPP
#define NOSADAM_SCENARIOS_HPP

#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

namespace nosadam {

// A named experiment resolved from three layers, later layers winning:
// committed defaults in <scenario_dir>/<name>.json, then the optional user
// config file, then flat flag overrides.
struct ScenarioSpec {
  std::string name;
  std::string scenario_dir;  // "" -> $NOSADAM_SCENARIO_DIR, then "scenarios"
  std::string config_path;   // optional user JSON (flat or a sidecar)
  nlohmann::json overrides = nlohmann::json::object();
  std::string out_dir;       // "" -> no files written
  bool write_csvs = true;    // sidecars are always written when out_dir set
};

struct ScenarioResult {
  std::string name;
  bool pass = false;
  double metric = 0.0;  // scenario-specific ranking value (loss or regret)
  std::vector<std::string> verdicts;  // one PASS/FAIL line per check
  nlohmann::json sidecar;
  std::vector<std::string> files;
};

std::vector<std::string> scenario_names();
std::string scenario_description(const std::string& name);

// Committed defaults merged with the user config and overrides; rejects
// unknown keys and type mismatches.
nlohmann::json resolve_scenario_config(const ScenarioSpec& spec);

ScenarioResult run_scenario(const ScenarioSpec& spec);

struct SweepOptions {
  std::size_t cap = 512;
  std::size_t workers = 0;  // 0 -> $NOSADAM_WORKERS, then hardware
};

struct SweepRow {
  std::size_t combo = 0;  // enumeration index, grid keys in sorted order
  std::string params;     // "key=value;..." in sorted key order
  bool pass = false;
  double metric = 0.0;
  std::vector<std::string> verdicts;
};

struct SweepResult {
  std::vector<SweepRow> rows;  // ranked by metric, ties by combo index
  bool pass = false;           // conjunction over rows
  std::string summary_path;    // "" when no out_dir
};

// Runs the cartesian product of `grid` over the base spec. Per-combo CSVs
// are suppressed; each combo writes its sidecar under combo_NNN/.
SweepResult run_sweep(const ScenarioSpec& base,
                      const std::map<std::string, std::vector<nlohmann::json>>&
                          grid,
                      const SweepOptions& options = {});

}  // namespace nosadam

#endif
