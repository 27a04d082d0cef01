#ifndef NOSADAM_SCHEDULES_HPP
#define NOSADAM_SCHEDULES_HPP

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

namespace nosadam {

struct ConditionReport {
  bool holds = true;
  std::optional<std::size_t> first_violation;
};

enum class WeightKind { Hyperharmonic, Explicit, EmaEquivalent };

// Weighting sequence b_k with running sums B_t = sum_{k<=t} b_k, B_0 = 0.
// The per-step decay factor of the second-moment average is
// beta2(t) = B_{t-1}/B_t, so the effective averaging weights at step t are
// b_k/B_t and always sum to 1.
//
// Three kinds:
//   Hyperharmonic(gamma): b_k = k^-gamma, gamma >= 0.
//   Explicit(b):          a caller-supplied finite sequence, b_1 > 0.
//   EmaEquivalent(beta2): beta2(t) is the constant beta2, matching the usual
//                         exponential moving average. The implied b_k grow
//                         like beta2^-k and overflow within ~10^3 steps for
//                         beta2 near 1, so B_t is never materialized for this
//                         kind: b() and partial_sum() are unsupported queries,
//                         and the condition checks run on a rescaled form.
class WeightSchedule {
 public:
  static WeightSchedule hyperharmonic(double gamma);
  static WeightSchedule explicit_weights(std::vector<double> b);
  static WeightSchedule ema_equivalent(double beta2);

  WeightKind kind() const { return kind_; }
  double gamma() const { return gamma_; }
  double ema_beta2() const { return ema_beta2_; }

  // b_k, k >= 1. Throws std::domain_error for EmaEquivalent and
  // std::out_of_range past the end of an Explicit sequence.
  double b(std::size_t k) const;

  // B_t; B_0 = 0. Same errors as b().
  double partial_sum(std::size_t t) const;

  // beta2(t) = B_{t-1}/B_t (so beta2(1) = 0), or the constant for
  // EmaEquivalent. Strictly less than 1 for all t.
  double beta2(std::size_t t) const;

  // Effective averaging weights w_1..w_t at step t; they sum to 1. For
  // EmaEquivalent these are (1-beta2) beta2^(t-k) renormalized by
  // (1-beta2^t).
  std::vector<double> weights_at(std::size_t t) const;

  // Checks B_t/t <= B_{t-1}/(t-1) for t = 2..T. Exact comparison; both
  // sides are computed with the same operation order so analytically equal
  // cases (gamma = 0) hold with equality.
  ConditionReport check_condition1(std::size_t T) const;

  // Checks B_t/(t b_t^p) >= B_{t-1}/((t-1) b_{t-1}^p) for t = 2..T.
  // Throws std::domain_error naming the step if some b_t = 0.
  ConditionReport check_condition2(std::size_t T, double p = 2.0) const;

  // Largest step an Explicit schedule can serve; unbounded otherwise.
  std::optional<std::size_t> max_step() const;

  std::string describe() const;

 private:
  WeightSchedule() = default;
  void ensure_sums(std::size_t t) const;
  double raw_b(std::size_t k) const;

  WeightKind kind_ = WeightKind::Hyperharmonic;
  double gamma_ = 0.0;
  double ema_beta2_ = 0.0;
  std::vector<double> explicit_b_;
  // Monotone cache of B_1..B_n, extended on demand; accumulation order is
  // fixed so any query is identical to an eager computation.
  mutable std::vector<double> sums_;
};

// Step sizes alpha_t: alpha/sqrt(t), alpha/t^(1/p) with p > 1, or constant.
struct StepSizeSchedule {
  enum class Decay { InvSqrt, InvPRoot, Constant };

  static StepSizeSchedule inv_sqrt(double alpha);
  static StepSizeSchedule inv_p_root(double alpha, double p);
  static StepSizeSchedule constant(double alpha);

  double alpha(std::size_t t) const;

  double base = 0.001;
  Decay decay = Decay::InvSqrt;
  double p = 2.0;
};

// beta1(t) = beta1 * lambda^(t-1); lambda = 1 keeps it constant.
struct MomentumSchedule {
  static MomentumSchedule make(double beta1, double lambda = 1.0);

  double beta1_at(std::size_t t) const;

  double beta1 = 0.9;
  double lambda = 1.0;
};

}  // namespace nosadam

#endif
