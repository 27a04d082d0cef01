#ifndef NOSADAM_OPTIMIZERS_HPP
#define NOSADAM_OPTIMIZERS_HPP

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "nosadam/schedules.hpp"

namespace nosadam {

enum class Rule { NosAdam, PNosAdam, Adam, AMSGrad };

std::string rule_name(Rule rule);
Rule rule_from_name(const std::string& name);

// Axis-aligned feasible box; the weighted projection onto it separates per
// coordinate and reduces to a clamp for any diagonal metric.
struct BoxFeasibleSet {
  BoxFeasibleSet(std::vector<double> lo, std::vector<double> hi);
  static BoxFeasibleSet cube(std::size_t dim, double lo, double hi);

  std::size_t dim() const { return lower.size(); }
  bool contains(std::span<const double> x) const;
  // l-infinity diameter max_i (upper_i - lower_i).
  double diameter_inf() const;

  std::vector<double> lower;
  std::vector<double> upper;
};

// Clamp of x onto the box. The metric argument is the diagonal of the
// projection norm; it is accepted for interface fidelity but does not change
// the result for an axis-aligned box.
std::vector<double> project_box(std::span<const double> x,
                                const BoxFeasibleSet& feasible,
                                std::span<const double> metric = {});

struct OptimizerConfig {
  Rule rule = Rule::NosAdam;
  // Moment/root exponent for PNosAdam; the other rules always use 2.
  double p = 2.0;
  WeightSchedule weights = WeightSchedule::hyperharmonic(0.1);
  StepSizeSchedule step_size = StepSizeSchedule::inv_sqrt(0.001);
  MomentumSchedule momentum = MomentumSchedule::make(0.9);
  // Denominator guard: update divides by v^(1/p) + epsilon. The recurrences
  // themselves have no guard, so epsilon = 0 reproduces them exactly (and
  // divides by zero when v = 0).
  double epsilon = 1e-8;
  bool bias_correction = false;  // Adam only
  // When > 0, construction verifies both convergence conditions up to this
  // horizon for NosAdam/PNosAdam schedules. 0 skips the check.
  std::size_t condition_check_horizon = 0;
};

struct OptimizerState {
  std::size_t t = 0;
  std::vector<double> m;
  std::vector<double> v;
  std::vector<double> v_hat;  // AMSGrad only
};

// Diagonal increment of Gamma_t = V_t^(1/p)/alpha_t - V_{t-1}^(1/p)/alpha_{t-1}
// at one step, computed from the raw v buffers (never the epsilon-guarded
// denominators). At t = 1 the previous term is zero, so min_increment is the
// smallest entry of v_1^(1/p)/alpha_1.
struct GammaReport {
  std::size_t step = 0;
  double min_increment = 0.0;
  bool psd = true;  // min_increment >= -kGammaTolerance
};

inline constexpr double kGammaTolerance = 1e-12;

// One optimizer run: owns the state and the current iterate, applies one
// update per served gradient, keeps every iterate inside the feasible box.
// A step is, in order: beta2_t -> m update -> v update -> (AMSGrad max) ->
// raw step -> projection -> advance t.
class Optimizer {
 public:
  Optimizer(OptimizerConfig config, std::vector<double> x0,
            BoxFeasibleSet feasible);

  GammaReport step(std::span<const double> gradient);

  const std::vector<double>& iterate() const { return x_; }
  const OptimizerState& state() const { return state_; }
  const OptimizerConfig& config() const { return config_; }
  const BoxFeasibleSet& feasible() const { return feasible_; }
  double root_exponent() const { return p_; }
  // alpha_t used at the most recent step.
  double last_alpha() const { return last_alpha_; }

 private:
  OptimizerConfig config_;
  BoxFeasibleSet feasible_;
  std::vector<double> x_;
  OptimizerState state_;
  std::vector<double> prev_inv_lr_;  // v^(1/p)/alpha after the previous step
  double p_ = 2.0;
  double last_alpha_ = 0.0;
};

// Validates the rule/schedule pairing and (optionally) the convergence
// conditions; throws std::invalid_argument on mismatch. Called by the
// Optimizer constructor.
void validate_config(const OptimizerConfig& config);

// Recomputes the monitor from recorded traces: v_trace is T x d row-major,
// alpha_trace has length T. Reports start at t = 2 (there is no previous
// learning rate at t = 1), so T <= 1 yields an empty sequence and the
// conjunction over it is vacuously true.
std::vector<GammaReport> gamma_sequence(std::span<const double> v_trace,
                                        std::size_t dim,
                                        std::span<const double> alpha_trace,
                                        double p = 2.0);

}  // namespace nosadam

#endif
