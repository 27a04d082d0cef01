#include "nosadam/oco.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "nosadam/rng.hpp"

namespace nosadam {

namespace {

std::string step_str(std::size_t t) { return std::to_string(t); }

class CounterexampleOracle final : public LossOracle {
 public:
  CounterexampleOracle(double C, int period) : C_(C), period_(period) {
    if (period_ < 2) {
      throw std::invalid_argument("counterexample period must be >= 2");
    }
    if (!std::isfinite(C_) || !(C_ > static_cast<double>(period_ - 1))) {
      throw std::invalid_argument(
          "counterexample needs C > period - 1 so the summed loss slopes up");
    }
  }

  std::size_t dim() const override { return 1; }

  double slope(std::size_t t) const {
    return t % static_cast<std::size_t>(period_) == 1 ? C_ : -1.0;
  }

  double loss(std::size_t t, std::span<const double> x) const override {
    return slope(t) * x[0];
  }

  void gradient(std::size_t t, std::span<const double>,
                std::span<double> out) const override {
    out[0] = slope(t);
  }

  double gradient_bound(const BoxFeasibleSet&) const override {
    return std::max(C_, 1.0);
  }

  std::optional<std::vector<double>> analytic_comparator(
      const BoxFeasibleSet& feasible, std::size_t T) const override {
    const std::size_t period = static_cast<std::size_t>(period_);
    const std::size_t spikes = (T + period - 1) / period;
    const double total_slope =
        C_ * static_cast<double>(spikes) - static_cast<double>(T - spikes);
    if (total_slope >= 0.0) return std::vector<double>{feasible.lower[0]};
    return std::vector<double>{feasible.upper[0]};
  }

  std::string describe() const override {
    return "counterexample(C=" + std::to_string(C_) +
           ", period=" + std::to_string(period_) + ")";
  }

 private:
  double C_;
  int period_;
};

class QuadraticOracle final : public LossOracle {
 public:
  QuadraticOracle(std::uint64_t seed, std::size_t dim, double lo, double hi,
                  std::size_t horizon)
      : seed_(seed), dim_(dim), horizon_(horizon) {
    if (dim_ == 0) throw std::invalid_argument("quadratic oracle: dim >= 1");
    if (horizon_ == 0) {
      throw std::invalid_argument("quadratic oracle: horizon >= 1");
    }
    if (!(lo >= 0.0) || !(hi >= lo) || !std::isfinite(hi)) {
      throw std::invalid_argument(
          "quadratic oracle: curvature range needs 0 <= lo <= hi");
    }
    a_.resize(horizon_ * dim_);
    c_.resize(horizon_ * dim_);
    Rng rng(mix_seed(seed_));
    for (std::size_t j = 0; j < a_.size(); ++j) {
      a_[j] = lo + (hi - lo) * rng.uniform();
      c_[j] = rng.uniform(-1.0, 1.0);
    }
  }

  std::size_t dim() const override { return dim_; }
  std::size_t horizon() const override { return horizon_; }
  std::uint64_t seed() const override { return seed_; }

  double loss(std::size_t t, std::span<const double> x) const override {
    const double* a = row(a_, t);
    const double* c = row(c_, t);
    double sum = 0.0;
    for (std::size_t i = 0; i < dim_; ++i) {
      const double r = x[i] - c[i];
      sum += a[i] * r * r;
    }
    return 0.5 * sum;
  }

  void gradient(std::size_t t, std::span<const double> x,
                std::span<double> out) const override {
    const double* a = row(a_, t);
    const double* c = row(c_, t);
    for (std::size_t i = 0; i < dim_; ++i) out[i] = a[i] * (x[i] - c[i]);
  }

  double gradient_bound(const BoxFeasibleSet& feasible) const override {
    double bound = 0.0;
    for (std::size_t t = 1; t <= horizon_; ++t) {
      const double* a = row(a_, t);
      const double* c = row(c_, t);
      for (std::size_t i = 0; i < dim_; ++i) {
        const double reach = std::max(std::abs(feasible.lower[i] - c[i]),
                                      std::abs(feasible.upper[i] - c[i]));
        bound = std::max(bound, a[i] * reach);
      }
    }
    return bound;
  }

  std::optional<std::vector<double>> analytic_comparator(
      const BoxFeasibleSet& feasible, std::size_t T) const override {
    if (T > horizon_) return std::nullopt;
    std::vector<double> out(dim_);
    for (std::size_t i = 0; i < dim_; ++i) {
      double num = 0.0;
      double den = 0.0;
      for (std::size_t t = 1; t <= T; ++t) {
        num += row(a_, t)[i] * row(c_, t)[i];
        den += row(a_, t)[i];
      }
      const double unconstrained =
          den > 0.0 ? num / den
                    : 0.5 * (feasible.lower[i] + feasible.upper[i]);
      out[i] =
          std::clamp(unconstrained, feasible.lower[i], feasible.upper[i]);
    }
    return out;
  }

  std::string describe() const override {
    return "quadratic(seed=" + std::to_string(seed_) +
           ", d=" + std::to_string(dim_) + ")";
  }

 private:
  const double* row(const std::vector<double>& buf, std::size_t t) const {
    if (t == 0 || t > horizon_) {
      throw std::out_of_range("quadratic oracle exhausted at step " +
                              step_str(t));
    }
    return buf.data() + (t - 1) * dim_;
  }

  std::uint64_t seed_;
  std::size_t dim_;
  std::size_t horizon_;
  std::vector<double> a_;
  std::vector<double> c_;
};

class SpikeOracle final : public LossOracle {
 public:
  SpikeOracle(std::shared_ptr<const LossOracle> base, std::size_t spike_step,
              double factor)
      : base_(std::move(base)), spike_step_(spike_step), factor_(factor) {
    if (!base_) throw std::invalid_argument("spike oracle: base required");
    if (spike_step_ == 0) {
      throw std::invalid_argument("spike oracle: spike_step >= 1");
    }
    if (!std::isfinite(factor_) || factor_ <= 0.0) {
      throw std::invalid_argument("spike oracle: factor must be positive");
    }
  }

  std::size_t dim() const override { return base_->dim(); }
  std::size_t horizon() const override { return base_->horizon(); }
  std::uint64_t seed() const override { return base_->seed(); }

  double loss(std::size_t t, std::span<const double> x) const override {
    const double f = base_->loss(t, x);
    return t == spike_step_ ? factor_ * f : f;
  }

  void gradient(std::size_t t, std::span<const double> x,
                std::span<double> out) const override {
    base_->gradient(t, x, out);
    if (t == spike_step_) {
      for (double& g : out) g *= factor_;
    }
  }

  double gradient_bound(const BoxFeasibleSet& feasible) const override {
    return std::max(1.0, factor_) * base_->gradient_bound(feasible);
  }

  std::string describe() const override {
    return "spike(" + base_->describe() +
           ", step=" + std::to_string(spike_step_) +
           ", factor=" + std::to_string(factor_) + ")";
  }

 private:
  std::shared_ptr<const LossOracle> base_;
  std::size_t spike_step_;
  double factor_;
};

// Cross-entropy and gradient of a weighted sample set; shared by the oracle
// and its comparator solver. Weights default to 1 per listed sample.
struct LogisticProblem {
  const Dataset* data;
  std::size_t classes;
  std::size_t cols;  // d + 1, bias last

  double eval(std::span<const double> w, std::span<const std::size_t> idx,
              std::span<const double> weight, double weight_total,
              std::span<double> grad_out) const {
    const std::size_t d = data->d;
    std::vector<double> logits(classes);
    std::vector<double> probs(classes);
    if (!grad_out.empty()) {
      std::fill(grad_out.begin(), grad_out.end(), 0.0);
    }
    double loss = 0.0;
    for (std::size_t n = 0; n < idx.size(); ++n) {
      const std::size_t s = idx[n];
      const double wn = weight.empty() ? 1.0 : weight[n];
      if (wn == 0.0) continue;
      const double* phi = data->features.data() + s * d;
      double max_logit = -std::numeric_limits<double>::infinity();
      for (std::size_t k = 0; k < classes; ++k) {
        const double* wk = w.data() + k * cols;
        double z = wk[d];
        for (std::size_t j = 0; j < d; ++j) z += wk[j] * phi[j];
        logits[k] = z;
        max_logit = std::max(max_logit, z);
      }
      double denom = 0.0;
      for (std::size_t k = 0; k < classes; ++k) {
        probs[k] = std::exp(logits[k] - max_logit);
        denom += probs[k];
      }
      const int y = data->labels[s];
      loss -= wn * (logits[y] - max_logit - std::log(denom));
      if (!grad_out.empty()) {
        for (std::size_t k = 0; k < classes; ++k) {
          const double delta =
              wn * (probs[k] / denom - (static_cast<int>(k) == y ? 1.0 : 0.0));
          double* gk = grad_out.data() + k * cols;
          for (std::size_t j = 0; j < d; ++j) gk[j] += delta * phi[j];
          gk[d] += delta;
        }
      }
    }
    if (weight_total > 0.0) {
      loss /= weight_total;
      if (!grad_out.empty()) {
        for (double& g : grad_out) g /= weight_total;
      }
    }
    return loss;
  }
};

class LogisticOracle final : public LossOracle {
 public:
  LogisticOracle(Dataset data, std::size_t minibatch, std::uint64_t seed)
      : data_(std::move(data)), minibatch_(minibatch), seed_(seed) {
    if (data_.n == 0 || data_.d == 0) {
      throw std::invalid_argument("logistic oracle: empty dataset");
    }
    if (data_.classes < 2) {
      throw std::invalid_argument("logistic oracle: need at least 2 classes");
    }
    if (data_.labels.size() != data_.n ||
        data_.features.size() != data_.n * data_.d) {
      throw std::invalid_argument("logistic oracle: dataset shape mismatch");
    }
    for (int label : data_.labels) {
      if (label < 0 || static_cast<std::size_t>(label) >= data_.classes) {
        throw std::invalid_argument("logistic oracle: label out of range");
      }
    }
    if (minibatch_ > data_.n) {
      throw std::invalid_argument(
          "logistic oracle: minibatch exceeds the sample count");
    }
    if (minibatch_ == 0) minibatch_ = data_.n;
    problem_ = LogisticProblem{&data_, data_.classes, data_.d + 1};
    feature_bound_ = 1.0;
    for (double x : data_.features) {
      feature_bound_ = std::max(feature_bound_, std::abs(x));
    }
  }

  std::size_t dim() const override { return data_.classes * (data_.d + 1); }
  std::uint64_t seed() const override { return seed_; }
  const Dataset& dataset() const { return data_; }

  std::vector<std::size_t> batch_at(std::size_t t) const {
    if (minibatch_ == data_.n) {
      std::vector<std::size_t> all(data_.n);
      for (std::size_t s = 0; s < data_.n; ++s) all[s] = s;
      return all;
    }
    Rng rng(mix_seed(seed_ + 0x9E3779B97F4A7C15ULL * t));
    std::vector<std::size_t> idx(minibatch_);
    for (std::size_t& s : idx) s = rng.uniform_index(data_.n);
    return idx;
  }

  double loss(std::size_t t, std::span<const double> x) const override {
    const std::vector<std::size_t> idx = batch_at(t);
    return problem_.eval(x, idx, {}, static_cast<double>(idx.size()), {});
  }

  void gradient(std::size_t t, std::span<const double> x,
                std::span<double> out) const override {
    const std::vector<std::size_t> idx = batch_at(t);
    problem_.eval(x, idx, {}, static_cast<double>(idx.size()), out);
  }

  double gradient_bound(const BoxFeasibleSet&) const override {
    return feature_bound_;
  }

  // Minimizes the weight each sample accumulates over the first T batches:
  // sum_t f_t(x) = sum_s (count_s / batch) ce_s(x). Deterministic
  // Barzilai-Borwein descent with a monotone backtracking safeguard.
  std::optional<std::vector<double>> solve_comparator(
      const BoxFeasibleSet& feasible, std::size_t T) const override {
    std::vector<double> count(data_.n, 0.0);
    for (std::size_t t = 1; t <= T; ++t) {
      for (std::size_t s : batch_at(t)) count[s] += 1.0;
    }
    std::vector<std::size_t> idx;
    std::vector<double> weight;
    double weight_total = 0.0;
    for (std::size_t s = 0; s < data_.n; ++s) {
      if (count[s] > 0.0) {
        idx.push_back(s);
        weight.push_back(count[s]);
        weight_total += count[s];
      }
    }

    const std::size_t dim_w = dim();
    std::vector<double> w(dim_w, 0.0);
    std::vector<double> grad(dim_w, 0.0);
    std::vector<double> w_prev;
    std::vector<double> grad_prev;
    double loss = problem_.eval(w, idx, weight, weight_total, grad);
    double step = 1.0;
    for (int iter = 0; iter < 50000; ++iter) {
      double g_inf = 0.0;
      for (double g : grad) g_inf = std::max(g_inf, std::abs(g));
      if (g_inf < 1e-12) break;

      if (!w_prev.empty()) {
        double sy = 0.0;
        double yy = 0.0;
        for (std::size_t j = 0; j < dim_w; ++j) {
          const double sj = w[j] - w_prev[j];
          const double yj = grad[j] - grad_prev[j];
          sy += sj * yj;
          yy += yj * yj;
        }
        if (sy > 0.0 && yy > 0.0) step = std::clamp(sy / yy, 1e-8, 1e4);
      }

      w_prev = w;
      grad_prev = grad;
      std::vector<double> trial(dim_w);
      double trial_loss = 0.0;
      for (int back = 0; back < 60; ++back) {
        for (std::size_t j = 0; j < dim_w; ++j) {
          trial[j] = w_prev[j] - step * grad_prev[j];
        }
        trial_loss = problem_.eval(trial, idx, weight, weight_total, grad);
        if (trial_loss <= loss) break;
        step *= 0.5;
      }
      if (trial_loss > loss) break;
      w = std::move(trial);
      loss = trial_loss;
    }
    return project_box(w, feasible);
  }

  std::string describe() const override {
    return "logistic(n=" + std::to_string(data_.n) +
           ", d=" + std::to_string(data_.d) +
           ", classes=" + std::to_string(data_.classes) +
           ", minibatch=" + std::to_string(minibatch_) +
           ", seed=" + std::to_string(seed_) + ")";
  }

 private:
  Dataset data_;
  std::size_t minibatch_;
  std::uint64_t seed_;
  LogisticProblem problem_{};
  double feature_bound_ = 1.0;
};

}  // namespace

std::shared_ptr<LossOracle> make_counterexample(double C, int period) {
  return std::make_shared<CounterexampleOracle>(C, period);
}

std::shared_ptr<LossOracle> make_quadratic_oracle(std::uint64_t seed,
                                                  std::size_t dim,
                                                  double curvature_lo,
                                                  double curvature_hi,
                                                  std::size_t horizon) {
  return std::make_shared<QuadraticOracle>(seed, dim, curvature_lo,
                                           curvature_hi, horizon);
}

std::shared_ptr<LossOracle> make_spike_oracle(
    std::shared_ptr<const LossOracle> base, std::size_t spike_step,
    double factor) {
  return std::make_shared<SpikeOracle>(std::move(base), spike_step, factor);
}

Dataset make_gaussian_clusters(std::uint64_t seed, std::size_t n_samples,
                               std::size_t d, std::size_t classes) {
  if (n_samples == 0 || d == 0 || classes < 2) {
    throw std::invalid_argument(
        "gaussian clusters: need samples, dimensions, and >= 2 classes");
  }
  if (classes > n_samples) {
    throw std::invalid_argument("gaussian clusters: more classes than samples");
  }
  Dataset out;
  out.n = n_samples;
  out.d = d;
  out.classes = classes;
  out.features.resize(n_samples * d);
  out.labels.resize(n_samples);
  // Class means sit on a radius-1.5 circle in the first two coordinates with
  // unit within-class spread, leaving the classes overlapping so the
  // logistic problem has a finite minimizer.
  const double radius = 1.5;
  Rng rng(mix_seed(seed));
  for (std::size_t s = 0; s < n_samples; ++s) {
    const std::size_t k = s % classes;  // balanced up to remainder
    const double angle = 2.0 * M_PI * static_cast<double>(k) /
                         static_cast<double>(classes);
    double* row = out.features.data() + s * d;
    for (std::size_t j = 0; j < d; ++j) row[j] = rng.normal();
    row[0] += radius * std::cos(angle);
    if (d > 1) row[1] += radius * std::sin(angle);
    out.labels[s] = static_cast<int>(k);
  }
  return out;
}

Dataset load_dataset_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open dataset file: " + path);
  Dataset out;
  std::string line;
  std::size_t line_no = 0;
  int max_label = -1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<double> values;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      std::size_t used = 0;
      double value = 0.0;
      try {
        value = std::stod(cell, &used);
      } catch (const std::exception&) {
        throw std::runtime_error("dataset line " + std::to_string(line_no) +
                                 ": unparsable value '" + cell + "'");
      }
      while (used < cell.size() &&
             std::isspace(static_cast<unsigned char>(cell[used]))) {
        ++used;
      }
      if (used != cell.size() || !std::isfinite(value)) {
        throw std::runtime_error("dataset line " + std::to_string(line_no) +
                                 ": unparsable value '" + cell + "'");
      }
      values.push_back(value);
    }
    if (values.size() < 2) {
      throw std::runtime_error("dataset line " + std::to_string(line_no) +
                               ": need at least one feature and a label");
    }
    if (out.d == 0) {
      out.d = values.size() - 1;
    } else if (values.size() - 1 != out.d) {
      throw std::runtime_error("dataset line " + std::to_string(line_no) +
                               ": expected " + std::to_string(out.d + 1) +
                               " columns, found " +
                               std::to_string(values.size()));
    }
    const double raw_label = values.back();
    const double rounded = std::round(raw_label);
    if (std::abs(raw_label - rounded) > 1e-9 || rounded < 0.0) {
      throw std::runtime_error("dataset line " + std::to_string(line_no) +
                               ": label must be a non-negative integer");
    }
    out.labels.push_back(static_cast<int>(rounded));
    max_label = std::max(max_label, static_cast<int>(rounded));
    out.features.insert(out.features.end(), values.begin(),
                        values.end() - 1);
    ++out.n;
  }
  if (out.n == 0) throw std::runtime_error("dataset file is empty: " + path);
  out.classes = static_cast<std::size_t>(max_label) + 1;
  return out;
}

std::shared_ptr<LossOracle> make_logistic_oracle(Dataset data,
                                                 std::size_t minibatch,
                                                 std::uint64_t seed) {
  return std::make_shared<LogisticOracle>(std::move(data), minibatch, seed);
}

std::shared_ptr<LossOracle> make_logistic_task(std::uint64_t seed,
                                               std::size_t n_samples,
                                               std::size_t d,
                                               std::size_t classes,
                                               std::size_t minibatch) {
  return make_logistic_oracle(
      make_gaussian_clusters(seed, n_samples, d, classes), minibatch, seed);
}

std::span<const double> RunRecord::x_at(std::size_t t) const {
  if (t == 0 || t > T) throw std::out_of_range("RunRecord: step out of range");
  return {x.data() + (t - 1) * dim, dim};
}
std::span<const double> RunRecord::g_at(std::size_t t) const {
  if (t == 0 || t > T) throw std::out_of_range("RunRecord: step out of range");
  return {g.data() + (t - 1) * dim, dim};
}
std::span<const double> RunRecord::v_at(std::size_t t) const {
  if (t == 0 || t > T) throw std::out_of_range("RunRecord: step out of range");
  return {v.data() + (t - 1) * dim, dim};
}

RunRecord run_online(const OptimizerConfig& config, const LossOracle& oracle,
                     const BoxFeasibleSet& feasible, std::vector<double> x1,
                     std::size_t T) {
  if (T < 1) throw std::invalid_argument("run_online: T >= 1 required");
  const std::size_t d = oracle.dim();
  if (feasible.dim() != d || x1.size() != d) {
    throw std::invalid_argument("run_online: dimension mismatch");
  }
  if (!feasible.contains(x1)) {
    throw std::invalid_argument("run_online: x1 outside the feasible set");
  }
  if (T > oracle.horizon()) {
    throw std::runtime_error("run_online: oracle exhausted, horizon " +
                             std::to_string(oracle.horizon()) +
                             " < T = " + std::to_string(T));
  }

  Optimizer opt(config, std::move(x1), feasible);
  RunRecord rec;
  rec.T = T;
  rec.dim = d;
  rec.seed = oracle.seed();
  rec.config = config;
  rec.x.reserve(T * d);
  rec.g.reserve(T * d);
  rec.v.reserve(T * d);
  rec.alpha.reserve(T);
  rec.f.reserve(T);
  rec.gamma_min_increment.reserve(T);

  std::vector<double> gbuf(d);
  for (std::size_t t = 1; t <= T; ++t) {
    const std::vector<double>& xt = opt.iterate();
    const double ft = oracle.loss(t, xt);
    if (!std::isfinite(ft)) {
      throw std::runtime_error("run_online: non-finite loss at step " +
                               step_str(t));
    }
    oracle.gradient(t, xt, gbuf);
    rec.x.insert(rec.x.end(), xt.begin(), xt.end());
    rec.f.push_back(ft);
    rec.cumulative_loss += ft;
    for (double gi : gbuf) rec.g_inf = std::max(rec.g_inf, std::abs(gi));
    rec.g.insert(rec.g.end(), gbuf.begin(), gbuf.end());

    const GammaReport report = opt.step(gbuf);
    rec.v.insert(rec.v.end(), opt.state().v.begin(), opt.state().v.end());
    rec.alpha.push_back(opt.last_alpha());
    rec.gamma_min_increment.push_back(report.min_increment);
    if (t >= 2 && !report.psd) rec.gamma_always_psd = false;
  }

  if (std::optional<std::vector<double>> cmp =
          oracle.analytic_comparator(feasible, T)) {
    rec.comparator = *cmp;
    rec.comparator_cum_loss.reserve(T);
    double cum = 0.0;
    for (std::size_t t = 1; t <= T; ++t) {
      cum += oracle.loss(t, rec.comparator);
      rec.comparator_cum_loss.push_back(cum);
    }
    rec.regret = rec.cumulative_loss - cum;
  }
  return rec;
}

double total_loss(const LossOracle& oracle, std::span<const double> x,
                  std::size_t T) {
  double sum = 0.0;
  for (std::size_t t = 1; t <= T; ++t) sum += oracle.loss(t, x);
  return sum;
}

double regret(const LossOracle& oracle, const RunRecord& record,
              std::span<const double> comparator) {
  return record.cumulative_loss - total_loss(oracle, comparator, record.T);
}

std::vector<double> grid_comparator(const LossOracle& oracle,
                                    const BoxFeasibleSet& feasible,
                                    std::size_t T, double tol) {
  const std::size_t d = oracle.dim();
  if (d > 3) {
    throw std::invalid_argument(
        "grid_comparator supports at most 3 dimensions, got " +
        std::to_string(d));
  }
  const std::size_t points = d == 1 ? 33 : (d == 2 ? 17 : 9);
  std::vector<double> lo = feasible.lower;
  std::vector<double> hi = feasible.upper;
  std::vector<double> best(d);
  for (std::size_t i = 0; i < d; ++i) best[i] = 0.5 * (lo[i] + hi[i]);
  double best_value = total_loss(oracle, best, T);

  std::vector<double> point(d);
  std::vector<std::size_t> index(d, 0);
  for (int level = 0; level < 40; ++level) {
    const double before = best_value;
    std::fill(index.begin(), index.end(), 0);
    while (true) {
      for (std::size_t i = 0; i < d; ++i) {
        point[i] = lo[i] + (hi[i] - lo[i]) * static_cast<double>(index[i]) /
                               static_cast<double>(points - 1);
      }
      const double value = total_loss(oracle, point, T);
      if (value < best_value) {
        best_value = value;
        best = point;
      }
      std::size_t axis = 0;
      while (axis < d && ++index[axis] == points) {
        index[axis] = 0;
        ++axis;
      }
      if (axis == d) break;
    }
    // Shrink to one grid cell around the incumbent, clamped to the box.
    bool converged = true;
    for (std::size_t i = 0; i < d; ++i) {
      const double cell = (hi[i] - lo[i]) / static_cast<double>(points - 1);
      lo[i] = std::max(feasible.lower[i], best[i] - cell);
      hi[i] = std::min(feasible.upper[i], best[i] + cell);
      if (hi[i] - lo[i] > 1e-14) converged = false;
    }
    if (level >= 4 && std::abs(before - best_value) <=
                          tol * std::max(1.0, std::abs(best_value)) &&
        converged) {
      break;
    }
  }
  return best;
}

std::vector<double> offline_comparator(const LossOracle& oracle,
                                       const BoxFeasibleSet& feasible,
                                       std::size_t T) {
  if (std::optional<std::vector<double>> cmp =
          oracle.analytic_comparator(feasible, T)) {
    return *cmp;
  }
  if (std::optional<std::vector<double>> cmp =
          oracle.solve_comparator(feasible, T)) {
    return *cmp;
  }
  return grid_comparator(oracle, feasible, T);
}

std::vector<GammaReport> gamma_sequence(const RunRecord& record, double p) {
  return gamma_sequence(record.v, record.dim, record.alpha, p);
}

BoundInputs make_bound_inputs(const RunRecord& record,
                              const BoxFeasibleSet& feasible) {
  const Rule rule = record.config.rule;
  if (rule != Rule::NosAdam && rule != Rule::PNosAdam) {
    throw std::invalid_argument(
        "bound inputs only exist for the nostalgic rules");
  }
  BoundInputs in;
  in.D_inf = feasible.diameter_inf();
  in.G_inf = record.g_inf;
  in.alpha = record.config.step_size.base;
  in.beta1 = record.config.momentum.beta1;
  in.lambda = record.config.momentum.lambda;
  in.d = record.dim;
  in.T = record.T;
  in.v_trace = record.v;
  in.alpha_trace = record.alpha;
  in.v_final.assign(record.v.end() - record.dim, record.v.end());
  in.beta1_trace.resize(record.T);
  in.b_trace.resize(record.T);
  in.B_trace.resize(record.T);
  for (std::size_t t = 1; t <= record.T; ++t) {
    in.beta1_trace[t - 1] = record.config.momentum.beta1_at(t);
    in.b_trace[t - 1] = record.config.weights.b(t);
    in.B_trace[t - 1] = record.config.weights.partial_sum(t);
  }
  return in;
}

namespace {

void check_bound_inputs(const BoundInputs& in) {
  if (in.T == 0 || in.d == 0) {
    throw std::invalid_argument("bound inputs: empty run");
  }
  if (in.beta1 >= 1.0) {
    throw std::domain_error("degenerate hypothesis: beta1 must be below 1");
  }
  if (in.v_final.size() != in.d || in.v_trace.size() != in.T * in.d ||
      in.alpha_trace.size() != in.T || in.beta1_trace.size() != in.T ||
      in.b_trace.size() != in.T || in.B_trace.size() != in.T) {
    throw std::invalid_argument("bound inputs: trace lengths disagree");
  }
}

}  // namespace

BoundBreakdown theorem_bound_terms(const BoundInputs& in) {
  check_bound_inputs(in);
  const double T = static_cast<double>(in.T);
  const double one_minus_b1 = 1.0 - in.beta1;
  BoundBreakdown out;

  double sum1 = 0.0;
  for (double vi : in.v_final) sum1 += std::sqrt(T * vi);
  out.term1 = in.D_inf * in.D_inf / (2.0 * in.alpha * one_minus_b1) * sum1;

  double sum2 = 0.0;
  for (std::size_t t = 1; t <= in.T; ++t) {
    const double b1t = in.beta1_trace[t - 1];
    if (b1t == 0.0) continue;
    const double* vt = in.v_trace.data() + (t - 1) * in.d;
    double inner = 0.0;
    for (std::size_t i = 0; i < in.d; ++i) inner += std::sqrt(vt[i]);
    sum2 += b1t * inner / in.alpha_trace[t - 1];
  }
  out.term2 = in.D_inf * in.D_inf / (2.0 * one_minus_b1) * sum2;

  // sum_t b_t g_{t,i}^2 telescopes to B_T v_{T,i} for the nostalgic average.
  const double B_T = in.B_trace.back();
  const double b_T = in.b_trace.back();
  double sum3 = 0.0;
  for (double vi : in.v_final) {
    sum3 += std::sqrt((B_T / T) * (B_T * vi) / (b_T * b_T));
  }
  out.term3 = in.alpha * in.beta1 /
              (one_minus_b1 * one_minus_b1 * one_minus_b1) * sum3;
  return out;
}

double theorem_bound(const BoundInputs& in) {
  return theorem_bound_terms(in).total();
}

BoundBreakdown corollary_bound_terms(const BoundInputs& in) {
  check_bound_inputs(in);
  const double T = static_cast<double>(in.T);
  const double one_minus_b1 = 1.0 - in.beta1;
  BoundBreakdown out;

  double sum1 = 0.0;
  for (double vi : in.v_final) sum1 += std::sqrt(T * vi);
  out.term1 = in.D_inf * in.D_inf / (2.0 * in.alpha * one_minus_b1) * sum1;

  if (in.beta1 > 0.0) {
    if (in.lambda >= 1.0) {
      throw std::domain_error(
          "corollary bound needs lambda < 1 when beta1 > 0");
    }
    const double one_minus_l = 1.0 - in.lambda;
    out.term2 = in.D_inf * in.D_inf * in.G_inf * in.beta1 *
                static_cast<double>(in.d) /
                (2.0 * one_minus_b1 * one_minus_l * one_minus_l);
    out.term3 = 2.0 * in.alpha * in.beta1 * in.G_inf * std::sqrt(T) /
                (one_minus_b1 * one_minus_b1 * one_minus_b1);
  }
  return out;
}

double corollary_bound(const BoundInputs& in) {
  return corollary_bound_terms(in).total();
}

BoundBreakdown p_theorem_bound_terms(const BoundInputs& in, double p) {
  check_bound_inputs(in);
  if (!(p > 1.0) || !std::isfinite(p)) {
    throw std::domain_error("p bound is out of hypothesis: p must exceed 1");
  }
  const double T = static_cast<double>(in.T);
  const double one_minus_b1 = 1.0 - in.beta1;
  const double inv_p = 1.0 / p;
  BoundBreakdown out;

  double sum1 = 0.0;
  for (double vi : in.v_final) {
    sum1 += std::pow(T, inv_p) * std::pow(vi, inv_p);
  }
  out.term1 = in.D_inf * in.D_inf / (2.0 * in.alpha * one_minus_b1) * sum1;

  double sum2 = 0.0;
  for (std::size_t t = 1; t <= in.T; ++t) {
    const double b1t = in.beta1_trace[t - 1];
    if (b1t == 0.0) continue;
    const double* vt = in.v_trace.data() + (t - 1) * in.d;
    double inner = 0.0;
    for (std::size_t i = 0; i < in.d; ++i) inner += std::pow(vt[i], inv_p);
    sum2 += b1t * inner / in.alpha_trace[t - 1];
  }
  out.term2 = in.D_inf * in.D_inf / (2.0 * one_minus_b1) * sum2;

  // sum_t b_t |g_{t,i}|^p = B_T v_{T,i} for the p-nostalgic average.
  const double B_T = in.B_trace.back();
  const double b_T = in.b_trace.back();
  double sum3 = 0.0;
  for (double vi : in.v_final) {
    sum3 += std::pow(B_T * vi, (p - 1.0) * inv_p) *
            std::pow(B_T / (T * std::pow(b_T, p)), inv_p);
  }
  out.term3 = in.alpha * (in.beta1 + 1.0) /
              (one_minus_b1 * one_minus_b1 * one_minus_b1) * sum3;
  return out;
}

double p_theorem_bound(const BoundInputs& in, double p) {
  return p_theorem_bound_terms(in, p).total();
}

PLemmaReport check_p_lemma(std::span<const double> S, double p) {
  if (!(p > 1.0) || !std::isfinite(p)) {
    throw std::invalid_argument("check_p_lemma: p must exceed 1");
  }
  if (S.size() < 2) {
    throw std::invalid_argument("check_p_lemma: need S_0 and at least S_1");
  }
  if (!(S[0] >= 0.0)) {
    throw std::invalid_argument("check_p_lemma: S_0 must be >= 0");
  }
  for (std::size_t j = 1; j < S.size(); ++j) {
    if (!(S[j] > S[j - 1])) {
      throw std::invalid_argument(
          "check_p_lemma: sequence not strictly increasing at index " +
          std::to_string(j));
    }
  }
  PLemmaReport out;
  const double ratio = p / (p - 1.0);
  const double head = (p - 1.0) / p;
  for (std::size_t j = 1; j < S.size(); ++j) {
    const double lhs = std::pow(S[j], -1.0 / p);
    const double rhs = ratio *
                       (std::pow(S[j], head) - std::pow(S[j - 1], head)) /
                       (S[j] - S[j - 1]);
    const double margin = lhs - rhs;
    if (margin > out.max_margin) out.max_margin = margin;
    if (margin > 0.0 && !out.first_violation) {
      out.first_violation = j;
      out.holds = false;
    }
  }
  return out;
}

void write_run_csv(const RunRecord& record, const std::string& path) {
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw std::runtime_error("cannot open for writing: " + path);
  std::fputs("t,f,regret_cum,x_norm,v_min,v_max,alpha,gamma_min_increment\n",
             f);
  const bool have_cmp = !record.comparator_cum_loss.empty();
  double cum_f = 0.0;
  char buf[512];
  for (std::size_t t = 1; t <= record.T; ++t) {
    cum_f += record.f[t - 1];
    const double regret_cum =
        have_cmp ? cum_f - record.comparator_cum_loss[t - 1]
                 : std::numeric_limits<double>::quiet_NaN();
    const std::span<const double> xt = record.x_at(t);
    double norm_sq = 0.0;
    for (double xi : xt) norm_sq += xi * xi;
    const std::span<const double> vt = record.v_at(t);
    double v_min = vt[0];
    double v_max = vt[0];
    for (double vi : vt) {
      v_min = std::min(v_min, vi);
      v_max = std::max(v_max, vi);
    }
    std::snprintf(buf, sizeof buf,
                  "%zu,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", t,
                  record.f[t - 1], regret_cum, std::sqrt(norm_sq), v_min,
                  v_max, record.alpha[t - 1],
                  record.gamma_min_increment[t - 1]);
    std::fputs(buf, f);
  }
  if (std::fclose(f) != 0) {
    throw std::runtime_error("failed to finish writing: " + path);
  }
}

}  // namespace nosadam
