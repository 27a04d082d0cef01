#include "nosadam/schedules.hpp"

#include <cmath>
#include <stdexcept>

namespace nosadam {

WeightSchedule WeightSchedule::hyperharmonic(double gamma) {
  if (!(gamma >= 0.0) || !std::isfinite(gamma))
    throw std::invalid_argument("hyperharmonic schedule requires gamma >= 0");
  WeightSchedule s;
  s.kind_ = WeightKind::Hyperharmonic;
  s.gamma_ = gamma;
  return s;
}

WeightSchedule WeightSchedule::explicit_weights(std::vector<double> b) {
  if (b.empty()) throw std::invalid_argument("explicit schedule is empty");
  if (!(b.front() > 0.0))
    throw std::invalid_argument("explicit schedule needs b_1 > 0 so B_t > 0");
  for (double v : b)
    if (!(v >= 0.0) || !std::isfinite(v))
      throw std::invalid_argument("explicit weights must be finite and >= 0");
  WeightSchedule s;
  s.kind_ = WeightKind::Explicit;
  s.explicit_b_ = std::move(b);
  return s;
}

WeightSchedule WeightSchedule::ema_equivalent(double beta2) {
  if (!(beta2 > 0.0 && beta2 < 1.0))
    throw std::invalid_argument("ema schedule requires beta2 in (0,1)");
  WeightSchedule s;
  s.kind_ = WeightKind::EmaEquivalent;
  s.ema_beta2_ = beta2;
  return s;
}

double WeightSchedule::raw_b(std::size_t k) const {
  if (kind_ == WeightKind::Hyperharmonic)
    return std::pow(static_cast<double>(k), -gamma_);
  return explicit_b_[k - 1];
}

double WeightSchedule::b(std::size_t k) const {
  if (k == 0) throw std::invalid_argument("b(k) requires k >= 1");
  if (kind_ == WeightKind::EmaEquivalent)
    throw std::domain_error(
        "b_k is not materialized for an EMA-equivalent schedule (it would "
        "overflow); query beta2(t) instead");
  if (kind_ == WeightKind::Explicit && k > explicit_b_.size())
    throw std::out_of_range("explicit schedule exhausted at k=" +
                            std::to_string(k));
  return raw_b(k);
}

void WeightSchedule::ensure_sums(std::size_t t) const {
  if (kind_ == WeightKind::Explicit && t > explicit_b_.size())
    throw std::out_of_range("explicit schedule exhausted at t=" +
                            std::to_string(t));
  while (sums_.size() < t) {
    const std::size_t k = sums_.size() + 1;
    const double prev = sums_.empty() ? 0.0 : sums_.back();
    sums_.push_back(prev + raw_b(k));
  }
}

double WeightSchedule::partial_sum(std::size_t t) const {
  if (kind_ == WeightKind::EmaEquivalent)
    throw std::domain_error(
        "B_t is not materialized for an EMA-equivalent schedule");
  if (t == 0) return 0.0;
  ensure_sums(t);
  return sums_[t - 1];
}

double WeightSchedule::beta2(std::size_t t) const {
  if (t == 0) throw std::invalid_argument("beta2(t) requires t >= 1");
  if (kind_ == WeightKind::EmaEquivalent) return ema_beta2_;
  if (t == 1) return 0.0;  // B_0 = 0
  ensure_sums(t);
  return sums_[t - 2] / sums_[t - 1];
}

std::vector<double> WeightSchedule::weights_at(std::size_t t) const {
  if (t == 0) throw std::invalid_argument("weights_at(t) requires t >= 1");
  std::vector<double> w(t);
  if (kind_ == WeightKind::EmaEquivalent) {
    const double beta = ema_beta2_;
    const double norm = 1.0 - std::pow(beta, static_cast<double>(t));
    double geom = 1.0;  // beta^(t-k), starting at k = t
    for (std::size_t k = t; k >= 1; --k) {
      w[k - 1] = (1.0 - beta) * geom / norm;
      geom *= beta;
    }
    return w;
  }
  ensure_sums(t);
  const double total = sums_[t - 1];
  for (std::size_t k = 1; k <= t; ++k) w[k - 1] = raw_b(k) / total;
  return w;
}

ConditionReport WeightSchedule::check_condition1(std::size_t T) const {
  if (T < 2) throw std::invalid_argument("condition check requires T >= 2");
  ConditionReport report;
  if (kind_ == WeightKind::EmaEquivalent) {
    // b_k grows like beta2^-k, so compare the scaled sums
    // s_t = beta2^t B_t = 1 + beta2 s_{t-1}, which stay bounded. The
    // condition B_t/t <= B_{t-1}/(t-1) becomes (t-1) s_t <= t beta2 s_{t-1}.
    const double beta = ema_beta2_;
    double s_prev = 1.0;
    for (std::size_t t = 2; t <= T; ++t) {
      const double s_t = 1.0 + beta * s_prev;
      const double lhs = static_cast<double>(t - 1) * s_t;
      const double rhs = static_cast<double>(t) * beta * s_prev;
      if (!(lhs <= rhs)) {
        report.holds = false;
        report.first_violation = t;
        return report;
      }
      s_prev = s_t;
    }
    return report;
  }
  ensure_sums(T);
  for (std::size_t t = 2; t <= T; ++t) {
    const double lhs = sums_[t - 1] / static_cast<double>(t);
    const double rhs = sums_[t - 2] / static_cast<double>(t - 1);
    if (!(lhs <= rhs)) {
      report.holds = false;
      report.first_violation = t;
      return report;
    }
  }
  return report;
}

ConditionReport WeightSchedule::check_condition2(std::size_t T,
                                                 double p) const {
  if (T < 2) throw std::invalid_argument("condition check requires T >= 2");
  ConditionReport report;
  if (kind_ == WeightKind::EmaEquivalent) {
    // Same rescaling as condition 1: with b_t = beta2^-t the inequality
    // B_t/(t b_t^p) >= B_{t-1}/((t-1) b_{t-1}^p) reduces to
    // (t-1) beta2^p s_t >= t beta2 s_{t-1}.
    const double beta = ema_beta2_;
    const double beta_p = std::pow(beta, p);
    double s_prev = 1.0;
    for (std::size_t t = 2; t <= T; ++t) {
      const double s_t = 1.0 + beta * s_prev;
      const double lhs = static_cast<double>(t - 1) * beta_p * s_t;
      const double rhs = static_cast<double>(t) * beta * s_prev;
      if (!(lhs >= rhs)) {
        report.holds = false;
        report.first_violation = t;
        return report;
      }
      s_prev = s_t;
    }
    return report;
  }
  ensure_sums(T);
  auto b_pow = [p](double v) { return p == 2.0 ? v * v : std::pow(v, p); };
  for (std::size_t t = 2; t <= T; ++t) {
    const double bt = raw_b(t);
    const double bt_prev = raw_b(t - 1);
    if (bt == 0.0 || bt_prev == 0.0) {
      const std::size_t bad = bt == 0.0 ? t : t - 1;
      throw std::domain_error("condition 2 degenerates: b_" +
                              std::to_string(bad) + " = 0");
    }
    const double lhs = sums_[t - 1] / (static_cast<double>(t) * b_pow(bt));
    const double rhs =
        sums_[t - 2] / (static_cast<double>(t - 1) * b_pow(bt_prev));
    if (!(lhs >= rhs)) {
      report.holds = false;
      report.first_violation = t;
      return report;
    }
  }
  return report;
}

std::optional<std::size_t> WeightSchedule::max_step() const {
  if (kind_ == WeightKind::Explicit) return explicit_b_.size();
  return std::nullopt;
}

std::string WeightSchedule::describe() const {
  switch (kind_) {
    case WeightKind::Hyperharmonic:
      return "hyperharmonic(gamma=" + std::to_string(gamma_) + ")";
    case WeightKind::Explicit:
      return "explicit(" + std::to_string(explicit_b_.size()) + " terms)";
    case WeightKind::EmaEquivalent:
      return "ema(beta2=" + std::to_string(ema_beta2_) + ")";
  }
  return "?";
}

StepSizeSchedule StepSizeSchedule::inv_sqrt(double alpha) {
  if (!(alpha > 0.0)) throw std::invalid_argument("alpha must be positive");
  return {alpha, Decay::InvSqrt, 2.0};
}

StepSizeSchedule StepSizeSchedule::inv_p_root(double alpha, double p) {
  if (!(alpha > 0.0)) throw std::invalid_argument("alpha must be positive");
  if (!(p > 1.0)) throw std::invalid_argument("inv_p_root requires p > 1");
  return {alpha, Decay::InvPRoot, p};
}

StepSizeSchedule StepSizeSchedule::constant(double alpha) {
  if (!(alpha > 0.0)) throw std::invalid_argument("alpha must be positive");
  return {alpha, Decay::Constant, 2.0};
}

double StepSizeSchedule::alpha(std::size_t t) const {
  if (t == 0) throw std::invalid_argument("alpha(t) requires t >= 1");
  switch (decay) {
    case Decay::InvSqrt:
      return base / std::sqrt(static_cast<double>(t));
    case Decay::InvPRoot:
      return base / std::pow(static_cast<double>(t), 1.0 / p);
    case Decay::Constant:
      return base;
  }
  return base;
}

MomentumSchedule MomentumSchedule::make(double beta1, double lambda) {
  if (!(beta1 >= 0.0 && beta1 < 1.0))
    throw std::invalid_argument("beta1 must lie in [0,1)");
  if (!(lambda > 0.0 && lambda <= 1.0))
    throw std::invalid_argument("lambda must lie in (0,1]");
  return {beta1, lambda};
}

double MomentumSchedule::beta1_at(std::size_t t) const {
  if (t == 0) throw std::invalid_argument("beta1_at(t) requires t >= 1");
  if (lambda == 1.0) return beta1;
  return beta1 * std::pow(lambda, static_cast<double>(t - 1));
}

}  // namespace nosadam
