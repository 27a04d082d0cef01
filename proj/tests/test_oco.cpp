#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "nosadam/oco.hpp"
#include "nosadam/optimizers.hpp"
#include "nosadam/rng.hpp"

using namespace nosadam;

namespace {

OptimizerConfig nosadam_hh(double gamma, double alpha) {
  OptimizerConfig c;
  c.rule = Rule::NosAdam;
  c.weights = WeightSchedule::hyperharmonic(gamma);
  c.step_size = StepSizeSchedule::inv_sqrt(alpha);
  c.momentum = MomentumSchedule::make(0.9);
  return c;
}

OptimizerConfig adam_config(double beta2, double alpha) {
  OptimizerConfig c;
  c.rule = Rule::Adam;
  c.weights = WeightSchedule::ema_equivalent(beta2);
  c.step_size = StepSizeSchedule::constant(alpha);
  c.momentum = MomentumSchedule::make(0.9);
  return c;
}

// Deterministic full-batch descent reference for the logistic comparator.
double long_descent_objective(const LossOracle& oracle, std::size_t T,
                              double step, int iters) {
  std::vector<double> w(oracle.dim(), 0.0);
  std::vector<double> g(oracle.dim(), 0.0);
  for (int it = 0; it < iters; ++it) {
    // Average gradient of the summed objective; full batch makes every
    // step's gradient identical, so t = 1 stands in for the sum.
    oracle.gradient(1, w, g);
    for (std::size_t j = 0; j < w.size(); ++j) w[j] -= step * g[j];
  }
  return total_loss(oracle, w, T);
}

}  // namespace

TEST_CASE("counterexample stream layout") {
  const std::shared_ptr<LossOracle> oracle = make_counterexample(2.5);
  const std::vector<double> x = {1.0};
  CHECK(oracle->loss(1, x) == 2.5);
  CHECK(oracle->loss(2, x) == -1.0);
  CHECK(oracle->loss(3, x) == -1.0);
  CHECK(oracle->loss(4, x) == 2.5);
  std::vector<double> g(1);
  oracle->gradient(7, x, g);
  CHECK(g[0] == 2.5);
  oracle->gradient(8, x, g);
  CHECK(g[0] == -1.0);

  CHECK_THROWS_AS(make_counterexample(2.0), std::invalid_argument);
  CHECK_THROWS_AS(make_counterexample(1.5, 3), std::invalid_argument);
}

TEST_CASE("counterexample comparator sits at the lower boundary") {
  const BoxFeasibleSet box = BoxFeasibleSet::cube(1, -1.0, 1.0);
  for (double C : {2.1, 2.5, 3.0}) {
    const std::shared_ptr<LossOracle> oracle = make_counterexample(C);
    for (std::size_t n : {1, 10, 100}) {
      const std::size_t T = 3 * n;
      const std::optional<std::vector<double>> cmp =
          oracle->analytic_comparator(box, T);
      REQUIRE(cmp.has_value());
      CHECK((*cmp)[0] == -1.0);
      // Per period the comparator loss is -C + 2.
      CHECK(total_loss(*oracle, *cmp, T) ==
            doctest::Approx(-static_cast<double>(n) * (C - 2.0))
                .epsilon(1e-12));
    }
  }
}

TEST_CASE("grid refinement finds the boundary minimizer") {
  const BoxFeasibleSet box = BoxFeasibleSet::cube(1, -1.0, 1.0);
  for (double C : {2.1, 2.5, 3.0}) {
    const std::shared_ptr<LossOracle> oracle = make_counterexample(C);
    for (std::size_t T : {3, 30, 300}) {
      const std::vector<double> cmp = grid_comparator(*oracle, box, T);
      CHECK(std::abs(cmp[0] - (-1.0)) <= 1e-6);
    }
  }
}

TEST_CASE("grid refinement matches the quadratic closed form") {
  const std::shared_ptr<LossOracle> oracle =
      make_quadratic_oracle(5, 2, 0.5, 2.0, 50);
  const BoxFeasibleSet box = BoxFeasibleSet::cube(2, -2.0, 2.0);
  const std::vector<double> analytic = *oracle->analytic_comparator(box, 50);
  const std::vector<double> grid = grid_comparator(*oracle, box, 50);
  const double f_analytic = total_loss(*oracle, analytic, 50);
  const double f_grid = total_loss(*oracle, grid, 50);
  CHECK(f_grid - f_analytic <= 1e-8 * std::max(1.0, std::abs(f_analytic)));
  CHECK(f_grid - f_analytic >= -1e-12 * std::max(1.0, std::abs(f_analytic)));

  // offline_comparator prefers the closed form when one exists.
  CHECK(offline_comparator(*oracle, box, 50) == analytic);

  const std::shared_ptr<LossOracle> wide =
      make_quadratic_oracle(5, 4, 0.5, 2.0, 10);
  CHECK_THROWS_AS(
      grid_comparator(*wide, BoxFeasibleSet::cube(4, -2.0, 2.0), 10),
      std::invalid_argument);
}

TEST_CASE("run_online records the full trace") {
  const std::shared_ptr<LossOracle> oracle =
      make_quadratic_oracle(11, 3, 0.5, 2.0, 200);
  const BoxFeasibleSet box = BoxFeasibleSet::cube(3, -2.0, 2.0);
  const RunRecord rec =
      run_online(nosadam_hh(0.1, 0.05), *oracle, box, {0.0, 0.0, 0.0}, 200);
  CHECK(rec.T == 200);
  CHECK(rec.dim == 3);
  CHECK(rec.x.size() == 600);
  CHECK(rec.g.size() == 600);
  CHECK(rec.v.size() == 600);
  CHECK(rec.alpha.size() == 200);
  CHECK(rec.f.size() == 200);
  CHECK(rec.gamma_min_increment.size() == 200);
  CHECK(rec.seed == 11);
  CHECK(std::isfinite(rec.regret));
  CHECK(rec.regret >= 0.0);
  CHECK(rec.gamma_always_psd);
  CHECK(rec.g_inf <= oracle->gradient_bound(box));

  double cum = 0.0;
  for (double ft : rec.f) cum += ft;
  CHECK(rec.cumulative_loss == doctest::Approx(cum).epsilon(1e-15));

  // First iterate is x1, alpha follows the inverse square root.
  CHECK(rec.x_at(1)[0] == 0.0);
  CHECK(rec.alpha[0] == 0.05);
  CHECK(rec.alpha[3] == 0.025);
}

TEST_CASE("regret basics") {
  const std::shared_ptr<LossOracle> zero =
      make_quadratic_oracle(3, 2, 0.0, 0.0, 100);
  const BoxFeasibleSet box = BoxFeasibleSet::cube(2, -1.0, 1.0);
  const RunRecord rec =
      run_online(nosadam_hh(0.1, 0.01), *zero, box, {0.5, -0.5}, 100);
  CHECK(rec.regret == 0.0);
  CHECK(rec.cumulative_loss == 0.0);

  // A record that sat at the comparator the whole run has zero regret.
  const std::shared_ptr<LossOracle> ce = make_counterexample(2.5);
  RunRecord still;
  still.T = 30;
  still.dim = 1;
  const std::vector<double> cmp = {-1.0};
  still.cumulative_loss = total_loss(*ce, cmp, still.T);
  CHECK(regret(*ce, still, cmp) == 0.0);

  // Single-step regret of a convex loss is non-negative.
  const std::shared_ptr<LossOracle> quad =
      make_quadratic_oracle(17, 2, 0.5, 2.0, 1);
  const RunRecord one =
      run_online(adam_config(0.999, 0.01), *quad,
                 BoxFeasibleSet::cube(2, -2.0, 2.0), {1.0, 1.0}, 1);
  CHECK(one.regret >= 0.0);
}

TEST_CASE("run_online rejects bad setups") {
  const std::shared_ptr<LossOracle> oracle =
      make_quadratic_oracle(7, 2, 0.5, 2.0, 10);
  const BoxFeasibleSet box = BoxFeasibleSet::cube(2, -1.0, 1.0);
  const OptimizerConfig cfg = nosadam_hh(0.1, 0.01);
  CHECK_THROWS_AS(run_online(cfg, *oracle, box, {0.0, 0.0}, 0),
                  std::invalid_argument);
  CHECK_THROWS_AS(run_online(cfg, *oracle, box, {2.0, 0.0}, 5),
                  std::invalid_argument);
  CHECK_THROWS_AS(run_online(cfg, *oracle, box, {0.0}, 5),
                  std::invalid_argument);
  CHECK_THROWS_AS(run_online(cfg, *oracle, box, {0.0, 0.0}, 11),
                  std::runtime_error);
}

namespace {

class PoisonOracle final : public LossOracle {
 public:
  std::size_t dim() const override { return 1; }
  double loss(std::size_t t, std::span<const double>) const override {
    return t == 3 ? std::numeric_limits<double>::infinity() : 1.0;
  }
  void gradient(std::size_t, std::span<const double>,
                std::span<double> out) const override {
    out[0] = 1.0;
  }
  double gradient_bound(const BoxFeasibleSet&) const override { return 1.0; }
  std::string describe() const override { return "poison"; }
};

}  // namespace

TEST_CASE("non-finite loss aborts with the step") {
  const PoisonOracle oracle;
  try {
    run_online(nosadam_hh(0.1, 0.01), oracle, BoxFeasibleSet::cube(1, -1, 1),
               {0.0}, 10);
    FAIL("expected a non-finite loss error");
  } catch (const std::runtime_error& e) {
    CHECK(std::string(e.what()).find("step 3") != std::string::npos);
  }
}

TEST_CASE("identical seeds reproduce the record bitwise") {
  const std::shared_ptr<LossOracle> oracle =
      make_quadratic_oracle(23, 3, 0.5, 2.0, 500);
  const BoxFeasibleSet box = BoxFeasibleSet::cube(3, -2.0, 2.0);
  const OptimizerConfig cfg = nosadam_hh(0.1, 0.05);
  const RunRecord a = run_online(cfg, *oracle, box, {0.0, 0.0, 0.0}, 500);
  const RunRecord b = run_online(cfg, *oracle, box, {0.0, 0.0, 0.0}, 500);
  CHECK(a.x == b.x);
  CHECK(a.g == b.g);
  CHECK(a.v == b.v);
  CHECK(a.f == b.f);
  CHECK(a.alpha == b.alpha);
  CHECK(a.gamma_min_increment == b.gamma_min_increment);
  CHECK(a.regret == b.regret);
  CHECK(a.cumulative_loss == b.cumulative_loss);
}

TEST_CASE("monitor flag from the record matches a replay") {
  const std::shared_ptr<LossOracle> quad =
      make_quadratic_oracle(31, 2, 0.5, 2.0, 300);
  const BoxFeasibleSet box = BoxFeasibleSet::cube(2, -2.0, 2.0);
  const RunRecord nos =
      run_online(nosadam_hh(0.1, 0.05), *quad, box, {0.0, 0.0}, 300);
  CHECK(nos.gamma_always_psd);
  const std::vector<GammaReport> seq = gamma_sequence(nos);
  REQUIRE(seq.size() == 299);
  bool all = true;
  for (std::size_t i = 0; i < seq.size(); ++i) {
    CHECK(seq[i].min_increment == nos.gamma_min_increment[i + 1]);
    all = all && seq[i].psd;
  }
  CHECK(all == nos.gamma_always_psd);

  const std::shared_ptr<LossOracle> ce = make_counterexample(2.5);
  const RunRecord adam =
      run_online(adam_config(0.999, 0.01), *ce,
                 BoxFeasibleSet::cube(1, -1.0, 1.0), {0.0}, 3000);
  CHECK_FALSE(adam.gamma_always_psd);
}

TEST_CASE("spike oracle") {
  const std::shared_ptr<LossOracle> base = make_counterexample(2.5);
  const std::shared_ptr<LossOracle> same = make_spike_oracle(base, 10, 1.0);
  const std::vector<double> x = {0.7};
  std::vector<double> g1(1);
  std::vector<double> g2(1);
  for (std::size_t t = 1; t <= 50; ++t) {
    CHECK(same->loss(t, x) == base->loss(t, x));
    base->gradient(t, x, g1);
    same->gradient(t, x, g2);
    CHECK(g1[0] == g2[0]);
  }

  const std::shared_ptr<LossOracle> spiked = make_spike_oracle(base, 10, 100.0);
  CHECK(spiked->loss(10, x) == 100.0 * base->loss(10, x));
  CHECK(spiked->loss(9, x) == base->loss(9, x));
  spiked->gradient(10, x, g1);
  CHECK(g1[0] == 250.0);

  CHECK_THROWS_AS(make_spike_oracle(base, 0, 100.0), std::invalid_argument);
  CHECK_THROWS_AS(make_spike_oracle(nullptr, 5, 100.0), std::invalid_argument);
}

TEST_CASE("nostalgic v recovers after a spike, amsgrad's max does not") {
  const std::size_t spike_step = 100;
  const std::shared_ptr<LossOracle> spiked =
      make_spike_oracle(make_counterexample(2.5), spike_step, 100.0);
  const BoxFeasibleSet box = BoxFeasibleSet::cube(1, -1.0, 1.0);

  const RunRecord nos =
      run_online(nosadam_hh(0.1, 0.01), *spiked, box, {0.0}, 400);
  const double pre = nos.v_at(spike_step - 1)[0];
  const double at = nos.v_at(spike_step)[0];
  CHECK(at > 100.0 * pre);
  // Later gradients fall below the inflated average, so v strictly decreases
  // immediately afterwards and keeps shrinking on average. Full recovery to
  // twice the pre-spike level takes longer than this short run; the
  // committed scenario covers it.
  CHECK(nos.v_at(spike_step + 1)[0] < at);
  CHECK(nos.v_at(400)[0] < at);

  // v_hat is not part of the recorded trace; drive a fresh AMSGrad optimizer
  // over the same stream and watch the denominator.
  OptimizerConfig ams = adam_config(0.999, 0.01);
  ams.rule = Rule::AMSGrad;
  Optimizer opt(ams, {0.0}, box);
  std::vector<double> g(1);
  double hat_at_spike = 0.0;
  for (std::size_t t = 1; t <= 400; ++t) {
    spiked->gradient(t, opt.iterate(), g);
    opt.step(g);
    if (t == spike_step) hat_at_spike = opt.state().v_hat[0];
    if (t > spike_step) CHECK(opt.state().v_hat[0] >= hat_at_spike);
  }
}

TEST_CASE("logistic gradient is centered at zero weights for balanced data") {
  const std::shared_ptr<LossOracle> oracle = make_logistic_task(3, 100, 2, 2, 0);
  std::vector<double> g(oracle->dim());
  const std::vector<double> w(oracle->dim(), 0.0);
  oracle->gradient(1, w, g);
  // Bias coordinates sit last in each class block of size d + 1 = 3.
  CHECK(std::abs(g[2]) <= 1e-12);
  CHECK(std::abs(g[5]) <= 1e-12);
}

TEST_CASE("logistic gradient matches finite differences") {
  const std::shared_ptr<LossOracle> oracle =
      make_logistic_task(29, 60, 3, 3, 16);
  const std::size_t dim = oracle->dim();
  Rng rng(101);
  std::vector<double> w(dim);
  std::vector<double> g(dim);
  std::vector<double> wp(dim);
  std::vector<double> wm(dim);
  const double h = 1e-6;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t t = 1 + rng.uniform_index(50);
    for (double& x : w) x = rng.uniform(-1.0, 1.0);
    oracle->gradient(t, w, g);
    for (std::size_t j = 0; j < dim; ++j) {
      wp = w;
      wm = w;
      wp[j] += h;
      wm[j] -= h;
      const double fd =
          (oracle->loss(t, wp) - oracle->loss(t, wm)) / (2.0 * h);
      CHECK(std::abs(fd - g[j]) <= 1e-6 * std::max(1.0, std::abs(g[j])));
    }
  }
}

TEST_CASE("logistic comparator matches a long plain descent") {
  const std::shared_ptr<LossOracle> oracle =
      make_logistic_task(37, 120, 3, 3, 0);
  const BoxFeasibleSet box = BoxFeasibleSet::cube(oracle->dim(), -50.0, 50.0);
  const std::size_t T = 10;
  const std::vector<double> solved = *oracle->solve_comparator(box, T);
  const double f_solved = total_loss(*oracle, solved, T);
  const double f_descent = long_descent_objective(*oracle, T, 0.2, 200000);
  CHECK(std::abs(f_solved - f_descent) <=
        1e-6 * std::max(1.0, std::abs(f_descent)));
  CHECK(f_solved <= f_descent + 1e-9);

  // offline_comparator routes through the solver for the logistic task.
  const std::vector<double> offline = offline_comparator(*oracle, box, T);
  CHECK(total_loss(*oracle, offline, T) ==
        doctest::Approx(f_solved).epsilon(1e-12));
}

TEST_CASE("minibatch regret against the weighted comparator is non-negative") {
  const std::shared_ptr<LossOracle> oracle =
      make_logistic_task(43, 90, 3, 3, 16);
  const BoxFeasibleSet box = BoxFeasibleSet::cube(oracle->dim(), -50.0, 50.0);
  const std::size_t T = 40;
  const RunRecord rec = run_online(
      nosadam_hh(0.1, 0.05), *oracle, box,
      std::vector<double>(oracle->dim(), 0.0), T);
  CHECK_FALSE(std::isfinite(rec.regret));  // no analytic comparator
  const std::vector<double> cmp = offline_comparator(*oracle, box, T);
  CHECK(regret(*oracle, rec, cmp) >= -1e-9);
}

TEST_CASE("dataset csv ingestion") {
  const std::string good = "/tmp/nosadam_test_good.csv";
  {
    std::ofstream out(good);
    out << "0.5,1.5,0\n-1.25,0.75,1\n0.0,2.0,1\n";
  }
  const Dataset data = load_dataset_csv(good);
  CHECK(data.n == 3);
  CHECK(data.d == 2);
  CHECK(data.classes == 2);
  CHECK(data.features[2] == -1.25);
  CHECK(data.labels[2] == 1);

  const std::string bad = "/tmp/nosadam_test_bad.csv";
  {
    std::ofstream out(bad);
    out << "0.5,1.5,0\nnot_a_number,0.75,1\n";
  }
  try {
    load_dataset_csv(bad);
    FAIL("expected a parse error");
  } catch (const std::runtime_error& e) {
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
  }

  {
    std::ofstream out(bad);
    out << "0.5,1.5,0\n0.5,0.75,1.5\n";
  }
  CHECK_THROWS_AS(load_dataset_csv(bad), std::runtime_error);
  {
    std::ofstream out(bad);
    out << "0.5,1.5,0\n0.5,1\n";
  }
  CHECK_THROWS_AS(load_dataset_csv(bad), std::runtime_error);
  std::remove(good.c_str());
  std::remove(bad.c_str());
}

TEST_CASE("bound inputs require a nostalgic rule") {
  const std::shared_ptr<LossOracle> quad =
      make_quadratic_oracle(47, 2, 0.5, 2.0, 50);
  const BoxFeasibleSet box = BoxFeasibleSet::cube(2, -2.0, 2.0);
  const RunRecord adam =
      run_online(adam_config(0.999, 0.01), *quad, box, {0.0, 0.0}, 50);
  CHECK_THROWS_AS(make_bound_inputs(adam, box), std::invalid_argument);
}

TEST_CASE("zero-gradient stream gives a zero bound and zero regret") {
  const std::shared_ptr<LossOracle> zero =
      make_quadratic_oracle(3, 2, 0.0, 0.0, 100);
  const BoxFeasibleSet box = BoxFeasibleSet::cube(2, -1.0, 1.0);
  const RunRecord rec =
      run_online(nosadam_hh(0.1, 0.01), *zero, box, {0.5, -0.5}, 100);
  const BoundInputs in = make_bound_inputs(rec, box);
  CHECK(theorem_bound(in) == 0.0);
  CHECK(p_theorem_bound(in, 2.0) == 0.0);
  CHECK(rec.regret == 0.0);
}

TEST_CASE("theorem bound dominates the regret on quadratic streams") {
  const BoxFeasibleSet box = BoxFeasibleSet::cube(5, -2.0, 2.0);
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const std::shared_ptr<LossOracle> quad =
        make_quadratic_oracle(seed, 5, 0.5, 2.0, 1000);
    const RunRecord rec = run_online(nosadam_hh(0.1, 0.05), *quad, box,
                                     std::vector<double>(5, 0.0), 1000);
    const BoundInputs in = make_bound_inputs(rec, box);
    CAPTURE(seed);
    CHECK(rec.regret >= 0.0);
    CHECK(theorem_bound(in) >= rec.regret);
  }
}

TEST_CASE("corollary bound with decaying momentum dominates too") {
  const BoxFeasibleSet box = BoxFeasibleSet::cube(3, -2.0, 2.0);
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const std::shared_ptr<LossOracle> quad =
        make_quadratic_oracle(seed, 3, 0.5, 2.0, 1000);
    OptimizerConfig cfg = nosadam_hh(0.1, 0.05);
    cfg.momentum = MomentumSchedule::make(0.9, 0.99);
    const RunRecord rec =
        run_online(cfg, *quad, box, std::vector<double>(3, 0.0), 1000);
    const BoundInputs in = make_bound_inputs(rec, box);
    CAPTURE(seed);
    CHECK(corollary_bound(in) >= rec.regret);
    CHECK(theorem_bound(in) >= rec.regret);
  }
}

TEST_CASE("degenerate bound hypotheses are rejected") {
  const std::shared_ptr<LossOracle> quad =
      make_quadratic_oracle(51, 2, 0.5, 2.0, 20);
  const BoxFeasibleSet box = BoxFeasibleSet::cube(2, -2.0, 2.0);
  const RunRecord rec = run_online(nosadam_hh(0.1, 0.05), *quad, box,
                                   std::vector<double>(2, 0.0), 20);
  BoundInputs in = make_bound_inputs(rec, box);
  in.beta1 = 1.0;
  CHECK_THROWS_AS(theorem_bound(in), std::domain_error);
  in.beta1 = 0.9;
  in.lambda = 1.0;
  CHECK_THROWS_AS(corollary_bound(in), std::domain_error);
  CHECK_THROWS_AS(p_theorem_bound(in, 1.0), std::domain_error);
  CHECK_THROWS_AS(p_theorem_bound(in, 0.5), std::domain_error);
}

TEST_CASE("p = 2 bound matches the square-root bound up to its constant") {
  const std::shared_ptr<LossOracle> quad =
      make_quadratic_oracle(53, 3, 0.5, 2.0, 500);
  const BoxFeasibleSet box = BoxFeasibleSet::cube(3, -2.0, 2.0);
  const RunRecord rec = run_online(nosadam_hh(0.1, 0.05), *quad, box,
                                   std::vector<double>(3, 0.0), 500);
  const BoundInputs in = make_bound_inputs(rec, box);
  const BoundBreakdown sq = theorem_bound_terms(in);
  const BoundBreakdown pb = p_theorem_bound_terms(in, 2.0);
  CHECK(pb.term1 == doctest::Approx(sq.term1).epsilon(1e-12));
  CHECK(pb.term2 == doctest::Approx(sq.term2).epsilon(1e-12));
  // The p-form carries (beta1 + 1) where the square-root form carries beta1.
  CHECK(pb.term3 ==
        doctest::Approx(sq.term3 * (0.9 + 1.0) / 0.9).epsilon(1e-12));
}

TEST_CASE("p = 3 bound dominates the p-nostalgic regret") {
  const BoxFeasibleSet box = BoxFeasibleSet::cube(3, -2.0, 2.0);
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const std::shared_ptr<LossOracle> quad =
        make_quadratic_oracle(seed + 100, 3, 0.5, 2.0, 1000);
    OptimizerConfig cfg;
    cfg.rule = Rule::PNosAdam;
    cfg.p = 3.0;
    cfg.weights = WeightSchedule::hyperharmonic(0.1);
    cfg.step_size = StepSizeSchedule::inv_p_root(0.05, 3.0);
    cfg.momentum = MomentumSchedule::make(0.9);
    const RunRecord rec =
        run_online(cfg, *quad, box, std::vector<double>(3, 0.0), 1000);
    const BoundInputs in = make_bound_inputs(rec, box);
    CAPTURE(seed);
    CHECK(rec.regret >= 0.0);
    CHECK(p_theorem_bound(in, 3.0) >= rec.regret);
  }
}

TEST_CASE("p lemma inequality") {
  const PLemmaReport two = check_p_lemma(std::vector<double>{1.0, 2.0}, 2.0);
  CHECK(two.holds);
  CHECK(1.0 / std::sqrt(2.0) == doctest::Approx(0.7071).epsilon(1e-4));
  CHECK(2.0 * (std::sqrt(2.0) - 1.0) == doctest::Approx(0.8284).epsilon(1e-4));
  CHECK(two.max_margin ==
        doctest::Approx(1.0 / std::sqrt(2.0) - 2.0 * (std::sqrt(2.0) - 1.0))
            .epsilon(1e-12));

  std::vector<double> counting(10001);
  for (std::size_t j = 0; j < counting.size(); ++j) {
    counting[j] = static_cast<double>(j);
  }
  for (double p : {1.5, 2.0, 3.0, 10.0}) {
    const PLemmaReport rep = check_p_lemma(counting, p);
    CAPTURE(p);
    CHECK(rep.holds);
    CHECK_FALSE(rep.first_violation.has_value());
  }

  const PLemmaReport tiny =
      check_p_lemma(std::vector<double>{1e-300, 2e-300}, 2.0);
  CHECK(tiny.holds);

  CHECK_THROWS_AS(check_p_lemma(std::vector<double>{1.0, 1.0}, 2.0),
                  std::invalid_argument);
  CHECK_THROWS_AS(check_p_lemma(std::vector<double>{2.0, 1.0}, 2.0),
                  std::invalid_argument);
  CHECK_THROWS_AS(check_p_lemma(std::vector<double>{1.0, 2.0}, 1.0),
                  std::invalid_argument);
  CHECK_THROWS_AS(check_p_lemma(std::vector<double>{1.0}, 2.0),
                  std::invalid_argument);
}

TEST_CASE("run csv export") {
  const std::shared_ptr<LossOracle> quad =
      make_quadratic_oracle(61, 2, 0.5, 2.0, 5);
  const BoxFeasibleSet box = BoxFeasibleSet::cube(2, -2.0, 2.0);
  const RunRecord rec =
      run_online(nosadam_hh(0.1, 0.05), *quad, box, {0.5, -0.5}, 5);
  const std::string path = "/tmp/nosadam_test_run.csv";
  write_run_csv(rec, path);
  std::ifstream in(path);
  std::string header;
  REQUIRE(std::getline(in, header));
  CHECK(header ==
        "t,f,regret_cum,x_norm,v_min,v_max,alpha,gamma_min_increment");
  std::string row;
  std::size_t rows = 0;
  std::string first_row;
  while (std::getline(in, row)) {
    if (rows == 0) first_row = row;
    ++rows;
  }
  CHECK(rows == 5);
  // %.17g survives a strtod round trip.
  const std::size_t comma = first_row.find(',');
  const std::string f_field =
      first_row.substr(comma + 1, first_row.find(',', comma + 1) - comma - 1);
  CHECK(std::stod(f_field) == rec.f[0]);
  std::remove(path.c_str());
}
