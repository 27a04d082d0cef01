#ifndef NOSADAM_OCO_HPP
#define NOSADAM_OCO_HPP

#include <cstdint>
#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "nosadam/optimizers.hpp"
#include "nosadam/schedules.hpp"

namespace nosadam {

// Online loss source: at step t the harness asks for f_t and its gradient at
// the current iterate. Oracles are deterministic functions of (t, x, seed),
// so queries may arrive in any order and runs replay exactly.
class LossOracle {
 public:
  virtual ~LossOracle() = default;

  virtual std::size_t dim() const = 0;
  virtual double loss(std::size_t t, std::span<const double> x) const = 0;
  virtual void gradient(std::size_t t, std::span<const double> x,
                        std::span<double> out) const = 0;
  // Largest step the oracle can serve; SIZE_MAX when unlimited.
  virtual std::size_t horizon() const {
    return std::numeric_limits<std::size_t>::max();
  }
  // Uniform bound on the gradient's max-norm over the feasible set.
  virtual double gradient_bound(const BoxFeasibleSet& feasible) const = 0;
  // Closed-form minimizer of the summed loss over the box, when one exists.
  virtual std::optional<std::vector<double>> analytic_comparator(
      const BoxFeasibleSet& feasible, std::size_t T) const {
    (void)feasible;
    (void)T;
    return std::nullopt;
  }
  // Iterative high-precision minimizer for oracles without a closed form
  // (the logistic task solves its full-batch problem here).
  virtual std::optional<std::vector<double>> solve_comparator(
      const BoxFeasibleSet& feasible, std::size_t T) const {
    (void)feasible;
    (void)T;
    return std::nullopt;
  }
  virtual std::uint64_t seed() const { return 0; }
  virtual std::string describe() const = 0;
};

// Periodic linear stream: f_t(x) = C x when t falls on the first step of a
// period, -x otherwise. With C above (period - 1) the summed loss increases
// in x, so the best fixed point sits at the lower boundary.
std::shared_ptr<LossOracle> make_counterexample(double C, int period = 3);

// Per-step separable quadratics 0.5 * sum_i a_i (x_i - c_i)^2 with curvatures
// drawn uniformly from [curvature_lo, curvature_hi] and centers from [-1, 1],
// pregenerated from the seed for t <= horizon.
std::shared_ptr<LossOracle> make_quadratic_oracle(std::uint64_t seed,
                                                  std::size_t dim,
                                                  double curvature_lo,
                                                  double curvature_hi,
                                                  std::size_t horizon);

// Wraps a base oracle, scaling loss and gradient by `factor` at exactly
// spike_step.
std::shared_ptr<LossOracle> make_spike_oracle(
    std::shared_ptr<const LossOracle> base, std::size_t spike_step,
    double factor = 100.0);

struct Dataset {
  std::size_t n = 0;
  std::size_t d = 0;
  std::size_t classes = 0;
  std::vector<double> features;  // n x d row-major
  std::vector<int> labels;       // in [0, classes)
};

// Balanced Gaussian clusters with overlapping class means, so the logistic
// problem is not separable and has a finite minimizer.
Dataset make_gaussian_clusters(std::uint64_t seed, std::size_t n_samples,
                               std::size_t d, std::size_t classes);

// One row per sample, label in the last column; malformed rows abort with
// the line number.
Dataset load_dataset_csv(const std::string& path);

// Multi-class logistic regression over weights (classes x (d+1), bias last).
// Serves minibatch cross-entropy; minibatch indices are a deterministic
// function of (seed, t). minibatch = 0 or >= n means full batch.
std::shared_ptr<LossOracle> make_logistic_oracle(Dataset data,
                                                 std::size_t minibatch,
                                                 std::uint64_t seed);
std::shared_ptr<LossOracle> make_logistic_task(std::uint64_t seed,
                                               std::size_t n_samples,
                                               std::size_t d,
                                               std::size_t classes,
                                               std::size_t minibatch);

// Full trace of one online run. Row-major T x d layout for the vector
// traces; scalar traces have length T.
struct RunRecord {
  std::size_t T = 0;
  std::size_t dim = 0;
  std::uint64_t seed = 0;
  OptimizerConfig config;
  std::vector<double> x;  // iterate that suffered f_t
  std::vector<double> g;
  std::vector<double> v;  // buffer state after step t
  std::vector<double> alpha;
  std::vector<double> f;
  std::vector<double> gamma_min_increment;
  std::vector<double> comparator;           // empty when unknown
  std::vector<double> comparator_cum_loss;  // length T when comparator known
  double cumulative_loss = 0.0;
  double regret = std::numeric_limits<double>::quiet_NaN();
  double g_inf = 0.0;
  bool gamma_always_psd = true;

  std::span<const double> x_at(std::size_t t) const;  // t in [1, T]
  std::span<const double> g_at(std::size_t t) const;
  std::span<const double> v_at(std::size_t t) const;
};

// Serves f_t/g_t in order, applies optimizer steps, records everything.
// Fills regret against the oracle's analytic comparator when one exists.
RunRecord run_online(const OptimizerConfig& config, const LossOracle& oracle,
                     const BoxFeasibleSet& feasible,
                     std::vector<double> x1, std::size_t T);

// sum_{t<=T} f_t(x).
double total_loss(const LossOracle& oracle, std::span<const double> x,
                  std::size_t T);

// Cumulative loss of the run minus the summed loss of the fixed comparator.
double regret(const LossOracle& oracle, const RunRecord& record,
              std::span<const double> comparator);

// Best fixed point in hindsight: analytic form if the oracle has one, else
// the oracle's iterative solver, else grid refinement (d <= 3).
std::vector<double> offline_comparator(const LossOracle& oracle,
                                       const BoxFeasibleSet& feasible,
                                       std::size_t T);
// The grid-refinement path by itself, for oracles of dimension <= 3.
std::vector<double> grid_comparator(const LossOracle& oracle,
                                    const BoxFeasibleSet& feasible,
                                    std::size_t T, double tol = 1e-8);

// Monitor recomputation from the recorded traces (reports start at t = 2).
std::vector<GammaReport> gamma_sequence(const RunRecord& record,
                                        double p = 2.0);

struct BoundInputs {
  double D_inf = 0.0;
  double G_inf = 0.0;
  double alpha = 0.0;
  double beta1 = 0.0;
  double lambda = 1.0;
  std::size_t d = 0;
  std::size_t T = 0;
  std::vector<double> v_final;       // d
  std::vector<double> v_trace;       // T x d
  std::vector<double> alpha_trace;   // T
  std::vector<double> beta1_trace;   // T
  std::vector<double> b_trace;       // T
  std::vector<double> B_trace;       // T
};

// Assembles bound inputs from a finished nostalgic run (Adam/AMSGrad have no
// regret theorem here and are rejected).
BoundInputs make_bound_inputs(const RunRecord& record,
                              const BoxFeasibleSet& feasible);

struct BoundBreakdown {
  double term1 = 0.0;
  double term2 = 0.0;
  double term3 = 0.0;
  double total() const { return term1 + term2 + term3; }
};

// Three-term regret bound for the square-root rule. The nostalgic average
// satisfies sum_t b_t g_t^2 = B_T v_T, so the data-dependent third term needs
// no gradient trace.
BoundBreakdown theorem_bound_terms(const BoundInputs& inputs);
double theorem_bound(const BoundInputs& inputs);

// Bound specialization for beta_{1,t} = beta1 * lambda^{t-1} with lambda < 1.
BoundBreakdown corollary_bound_terms(const BoundInputs& inputs);
double corollary_bound(const BoundInputs& inputs);

// p-th-root generalization; at p = 2 its first two terms match
// theorem_bound and the third carries (beta1 + 1) where the square-root bound
// carries beta1. Both are reported side by side, none is canonical here.
BoundBreakdown p_theorem_bound_terms(const BoundInputs& inputs, double p);
double p_theorem_bound(const BoundInputs& inputs, double p);

struct PLemmaReport {
  bool holds = true;
  // max over j of LHS - RHS; <= 0 when the inequality holds everywhere.
  double max_margin = -std::numeric_limits<double>::infinity();
  std::optional<std::size_t> first_violation;  // index into S
};

// Verifies 1/S_j^{1/p} <= p/(p-1) * (S_j^{(p-1)/p} - S_{j-1}^{(p-1)/p}) /
// (S_j - S_{j-1}) for j = 1..n-1. S must be strictly increasing with
// S_0 >= 0 and S_1 > 0.
PLemmaReport check_p_lemma(std::span<const double> S, double p);

// CSV export, header: t,f,regret_cum,x_norm,v_min,v_max,alpha,
// gamma_min_increment. regret_cum is NaN when no comparator is known.
void write_run_csv(const RunRecord& record, const std::string& path);

}  // namespace nosadam

#endif
