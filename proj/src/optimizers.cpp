#include "nosadam/optimizers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace nosadam {

std::string rule_name(Rule rule) {
  switch (rule) {
    case Rule::NosAdam:
      return "nosadam";
    case Rule::PNosAdam:
      return "p-nosadam";
    case Rule::Adam:
      return "adam";
    case Rule::AMSGrad:
      return "amsgrad";
  }
  throw std::logic_error("rule_name: unknown rule");
}

Rule rule_from_name(const std::string& name) {
  if (name == "nosadam") return Rule::NosAdam;
  if (name == "p-nosadam") return Rule::PNosAdam;
  if (name == "adam") return Rule::Adam;
  if (name == "amsgrad") return Rule::AMSGrad;
  throw std::invalid_argument("unknown optimizer rule: " + name);
}

BoxFeasibleSet::BoxFeasibleSet(std::vector<double> lo, std::vector<double> hi)
    : lower(std::move(lo)), upper(std::move(hi)) {
  if (lower.size() != upper.size()) {
    throw std::invalid_argument("feasible box: bound dimensions differ");
  }
  if (lower.empty()) {
    throw std::invalid_argument("feasible box: dimension must be positive");
  }
  for (std::size_t i = 0; i < lower.size(); ++i) {
    if (!std::isfinite(lower[i]) || !std::isfinite(upper[i]) ||
        lower[i] > upper[i]) {
      throw std::invalid_argument(
          "feasible box: bounds must be finite with lower <= upper");
    }
  }
}

BoxFeasibleSet BoxFeasibleSet::cube(std::size_t dim, double lo, double hi) {
  return BoxFeasibleSet(std::vector<double>(dim, lo),
                        std::vector<double>(dim, hi));
}

bool BoxFeasibleSet::contains(std::span<const double> x) const {
  if (x.size() != lower.size()) return false;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i] < lower[i] || x[i] > upper[i]) return false;
  }
  return true;
}

double BoxFeasibleSet::diameter_inf() const {
  double d = 0.0;
  for (std::size_t i = 0; i < lower.size(); ++i) {
    d = std::max(d, upper[i] - lower[i]);
  }
  return d;
}

std::vector<double> project_box(std::span<const double> x,
                                const BoxFeasibleSet& feasible,
                                std::span<const double> metric) {
  if (x.size() != feasible.dim()) {
    throw std::invalid_argument("project_box: point dimension mismatch");
  }
  if (!metric.empty() && metric.size() != x.size()) {
    throw std::invalid_argument("project_box: metric dimension mismatch");
  }
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    out[i] = std::clamp(x[i], feasible.lower[i], feasible.upper[i]);
  }
  return out;
}

void validate_config(const OptimizerConfig& config) {
  const bool nostalgic =
      config.rule == Rule::NosAdam || config.rule == Rule::PNosAdam;
  if (config.rule == Rule::PNosAdam) {
    if (!(config.p > 1.0) || !std::isfinite(config.p)) {
      throw std::invalid_argument("p-nosadam requires finite p > 1");
    }
  }
  if (!nostalgic && config.weights.kind() != WeightKind::EmaEquivalent) {
    throw std::invalid_argument(
        "adam/amsgrad read beta2 from an ema-equivalent weight schedule");
  }
  if (nostalgic && config.weights.kind() == WeightKind::EmaEquivalent) {
    throw std::invalid_argument(
        "nosadam/p-nosadam need a hyperharmonic or explicit weight schedule; "
        "express an ema shape as explicit geometric weights");
  }
  if (config.bias_correction && config.rule != Rule::Adam) {
    throw std::invalid_argument("bias correction is an adam-only option");
  }
  if (!(config.epsilon >= 0.0) || !std::isfinite(config.epsilon)) {
    throw std::invalid_argument("epsilon must be finite and >= 0");
  }
  if (config.rule == Rule::PNosAdam &&
      config.step_size.decay == StepSizeSchedule::Decay::InvPRoot &&
      config.step_size.p != config.p) {
    throw std::invalid_argument(
        "step-size root exponent must match the optimizer's p");
  }
  if (nostalgic && config.condition_check_horizon > 0) {
    const double p_eff = config.rule == Rule::PNosAdam ? config.p : 2.0;
    const ConditionReport c1 =
        config.weights.check_condition1(config.condition_check_horizon);
    if (!c1.holds) {
      throw std::invalid_argument(
          "weight schedule violates the average-decay condition at step " +
          std::to_string(*c1.first_violation));
    }
    const ConditionReport c2 =
        config.weights.check_condition2(config.condition_check_horizon, p_eff);
    if (!c2.holds) {
      throw std::invalid_argument(
          "weight schedule violates the tail-growth condition at step " +
          std::to_string(*c2.first_violation));
    }
  }
}

Optimizer::Optimizer(OptimizerConfig config, std::vector<double> x0,
                     BoxFeasibleSet feasible)
    : config_(std::move(config)),
      feasible_(std::move(feasible)),
      x_(std::move(x0)) {
  validate_config(config_);
  if (x_.size() != feasible_.dim()) {
    throw std::invalid_argument("optimizer: x0 dimension mismatch");
  }
  for (double xi : x_) {
    if (!std::isfinite(xi)) {
      throw std::invalid_argument("optimizer: x0 must be finite");
    }
  }
  if (!feasible_.contains(x_)) {
    x_ = project_box(x_, feasible_);
  }
  p_ = config_.rule == Rule::PNosAdam ? config_.p : 2.0;
  state_.m.assign(x_.size(), 0.0);
  state_.v.assign(x_.size(), 0.0);
  if (config_.rule == Rule::AMSGrad) {
    state_.v_hat.assign(x_.size(), 0.0);
  }
  prev_inv_lr_.assign(x_.size(), 0.0);
}

GammaReport Optimizer::step(std::span<const double> gradient) {
  const std::size_t d = x_.size();
  const std::size_t t = state_.t + 1;
  if (gradient.size() != d) {
    throw std::invalid_argument("optimizer step: gradient dimension mismatch");
  }
  for (std::size_t i = 0; i < d; ++i) {
    if (!std::isfinite(gradient[i])) {
      throw std::domain_error("non-finite gradient poisons the run at step " +
                              std::to_string(t) + ", coordinate " +
                              std::to_string(i));
    }
  }

  const double beta1 = config_.momentum.beta1_at(t);
  const double beta2 = config_.rule == Rule::Adam ||
                               config_.rule == Rule::AMSGrad
                           ? config_.weights.ema_beta2()
                           : config_.weights.beta2(t);
  const double alpha = config_.step_size.alpha(t);
  last_alpha_ = alpha;

  // Bias correction rescales the moment estimates; it never feeds back into
  // the recurrences.
  double m_scale = 1.0;
  double v_scale = 1.0;
  if (config_.bias_correction) {
    m_scale = 1.0 - std::pow(config_.momentum.beta1, static_cast<double>(t));
    v_scale = 1.0 - std::pow(beta2, static_cast<double>(t));
  }

  GammaReport report;
  report.step = t;
  report.min_increment = std::numeric_limits<double>::infinity();

  const bool square = p_ == 2.0;
  for (std::size_t i = 0; i < d; ++i) {
    const double g = gradient[i];
    state_.m[i] = beta1 * state_.m[i] + (1.0 - beta1) * g;
    const double g_pow = square ? g * g : std::pow(std::abs(g), p_);
    state_.v[i] = beta2 * state_.v[i] + (1.0 - beta2) * g_pow;

    // The monitor always reads the raw v recurrence, independent of epsilon
    // and of the AMSGrad max.
    const double root_raw =
        square ? std::sqrt(state_.v[i]) : std::pow(state_.v[i], 1.0 / p_);
    const double inv_lr = root_raw / alpha;
    const double increment = inv_lr - prev_inv_lr_[i];
    report.min_increment = std::min(report.min_increment, increment);
    prev_inv_lr_[i] = inv_lr;

    double root = root_raw;
    if (config_.rule == Rule::AMSGrad) {
      state_.v_hat[i] = std::max(state_.v_hat[i], state_.v[i]);
      root = std::sqrt(state_.v_hat[i]);
    }
    const double m_hat = state_.m[i] / m_scale;
    const double denom =
        (config_.bias_correction ? root / std::sqrt(v_scale) : root) +
        config_.epsilon;
    x_[i] -= alpha * m_hat / denom;
  }

  x_ = project_box(x_, feasible_);
  state_.t = t;
  report.psd = report.min_increment >= -kGammaTolerance;
  return report;
}

std::vector<GammaReport> gamma_sequence(std::span<const double> v_trace,
                                        std::size_t dim,
                                        std::span<const double> alpha_trace,
                                        double p) {
  if (dim == 0) throw std::invalid_argument("gamma_sequence: dim must be > 0");
  if (v_trace.size() != alpha_trace.size() * dim) {
    throw std::invalid_argument("gamma_sequence: trace lengths disagree");
  }
  if (!(p > 1.0)) throw std::invalid_argument("gamma_sequence: p must be > 1");
  const std::size_t steps = alpha_trace.size();
  std::vector<GammaReport> out;
  if (steps < 2) return out;
  out.reserve(steps - 1);
  const bool square = p == 2.0;
  for (std::size_t t = 2; t <= steps; ++t) {
    GammaReport report;
    report.step = t;
    report.min_increment = std::numeric_limits<double>::infinity();
    const double* v_now = v_trace.data() + (t - 1) * dim;
    const double* v_prev = v_trace.data() + (t - 2) * dim;
    for (std::size_t i = 0; i < dim; ++i) {
      const double now = (square ? std::sqrt(v_now[i]) : std::pow(v_now[i], 1.0 / p)) /
                         alpha_trace[t - 1];
      const double prev =
          (square ? std::sqrt(v_prev[i]) : std::pow(v_prev[i], 1.0 / p)) /
          alpha_trace[t - 2];
      report.min_increment = std::min(report.min_increment, now - prev);
    }
    report.psd = report.min_increment >= -kGammaTolerance;
    out.push_back(report);
  }
  return out;
}

}  // namespace nosadam
