#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <numbers>
#include <string>
#include <vector>

#include "nosadam/landscape.hpp"
#include "nosadam/optimizers.hpp"
#include "nosadam/rng.hpp"

using namespace nosadam;

namespace {

constexpr double kPi = std::numbers::pi;

OptimizerConfig descent_config(double gamma, double alpha, double beta1) {
  OptimizerConfig c;
  c.rule = Rule::NosAdam;
  c.weights = WeightSchedule::hyperharmonic(gamma);
  c.step_size = StepSizeSchedule::inv_sqrt(alpha);
  c.momentum = MomentumSchedule::make(beta1);
  return c;
}

// Central differences with h = 1e-6; error is reported relative to the
// gradient scale, floored at 1 so near-critical points do not divide by
// noise.
double fd_relative_error(const BowlParams& params, std::array<double, 3> p) {
  const double h = 1e-6;
  const std::array<double, 3> g = bowl_grad(params, p);
  double scale = 1.0;
  for (double gi : g) scale = std::max(scale, std::abs(gi));
  double worst = 0.0;
  for (std::size_t i = 0; i < 3; ++i) {
    std::array<double, 3> hi = p;
    std::array<double, 3> lo = p;
    hi[i] += h;
    lo[i] -= h;
    const double fd = (bowl_value(params, hi) - bowl_value(params, lo)) /
                      (hi[i] - lo[i]);
    worst = std::max(worst, std::abs(g[i] - fd) / scale);
  }
  return worst;
}

std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path);
  REQUIRE(in.good());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) lines.push_back(line);
  return lines;
}

}  // namespace

TEST_CASE("bowl value matches hand-computed references") {
  const BowlParams wide = BowlParams::wide();
  const BowlParams sharper = BowlParams::sharper();
  REQUIRE(wide.i_set.size() == 13);

  // At the bowl center every ring bump contributes cos(pi)^2 e^{-beta r^2}.
  CHECK(std::abs(bowl_value(wide, {kPi, kPi, kPi}) -
                 (-30.000000006698748)) < 1e-12);
  CHECK(std::abs(bowl_value(sharper, {kPi, kPi, kPi}) -
                 (-30.00000000000011)) < 1e-12);

  CHECK(std::abs(bowl_value(wide, {100.0, 100.0, 100.0})) < 1e-12);
  CHECK(std::abs(bowl_value(sharper, {100.0, 100.0, 100.0})) < 1e-12);
}

TEST_CASE("bowl parameters are validated") {
  BowlParams p = BowlParams::wide();
  p.a = 0.0;
  CHECK_THROWS_AS(validate_bowl(p), std::invalid_argument);
  p = BowlParams::wide();
  p.r = -1.0;
  CHECK_THROWS_AS(validate_bowl(p), std::invalid_argument);
  p = BowlParams::wide();
  p.beta = 0.0;
  CHECK_THROWS_AS(validate_bowl(p), std::invalid_argument);
  p = BowlParams::wide();
  p.i_set.clear();
  CHECK_THROWS_AS(validate_bowl(p), std::invalid_argument);
  CHECK_THROWS_AS(export_slice(p, 0.0, 0.0, 1.0, 0.0, 1.0, 4, 4),
                  std::invalid_argument);
}

TEST_CASE("gradient vanishes by symmetry and decay") {
  const BowlParams wide = BowlParams::wide();
  CHECK(bowl_grad(wide, {kPi, kPi, kPi})[2] == 0.0);

  const std::array<double, 3> far = bowl_grad(wide, {100.0, 100.0, 100.0});
  double norm = 0.0;
  for (double gi : far) norm += gi * gi;
  CHECK(std::sqrt(norm) < 1e-10);
}

TEST_CASE("analytic gradient matches central finite differences") {
  Rng rng(mix_seed(7));
  for (const BowlParams& params :
       {BowlParams::wide(), BowlParams::sharper()}) {
    double worst = 0.0;
    for (int n = 0; n < 1000; ++n) {
      const std::array<double, 3> p = {rng.uniform(0.0, 2.0 * kPi),
                                       rng.uniform(0.0, 2.0 * kPi),
                                       rng.uniform(0.0, 2.0 * kPi)};
      worst = std::max(worst, fd_relative_error(params, p));
    }
    CHECK(worst < 1e-5);
  }
}

TEST_CASE("value is symmetric in z about the bowl center") {
  Rng rng(mix_seed(11));
  const BowlParams params = BowlParams::wide();
  for (int n = 0; n < 100; ++n) {
    const double x = rng.uniform(0.0, 2.0 * kPi);
    const double y = rng.uniform(0.0, 2.0 * kPi);
    const double z = rng.uniform(0.0, 2.0 * kPi);
    const double a = bowl_value(params, {x, y, z});
    const double b = bowl_value(params, {x, y, 2.0 * kPi - z});
    CHECK(std::abs(a - b) <= 1e-12 * std::max(1.0, std::abs(a)));
  }
}

TEST_CASE("two-point slices evaluate exactly at the corners") {
  const BowlParams params = BowlParams::wide();
  const SliceGrid grid = export_slice(params, 0.7, 1.5, 2.5, -1.0, 1.0, 2, 2);
  REQUIRE(grid.nx == 2);
  REQUIRE(grid.ny == 2);
  CHECK(grid.xs[0] == 1.5);
  CHECK(grid.xs[1] == 2.5);
  CHECK(grid.ys[0] == -1.0);
  CHECK(grid.ys[1] == 1.0);
  for (std::size_t ix = 0; ix < 2; ++ix) {
    for (std::size_t iy = 0; iy < 2; ++iy) {
      CHECK(grid.value_at(ix, iy) ==
            bowl_value(params, {grid.xs[ix], grid.ys[iy], 0.7}));
    }
  }
  CHECK_THROWS_AS(export_slice(params, 0.7, 1.5, 2.5, -1.0, 1.0, 1, 2),
                  std::invalid_argument);
  CHECK_THROWS_AS(export_slice(params, 0.7, 2.5, 1.5, -1.0, 1.0, 2, 2),
                  std::invalid_argument);
}

TEST_CASE("slice minima sit in the ring overlap pocket, not the center") {
  // The ring indices 0..12 place two bumps only 0.283 rad apart (angles 0
  // and 6); their overlap forms the deepest pocket of the surface. At
  // z = 2.34 the wide term is attenuated by e^{-0.64} while the ring term
  // is z-free, so the slice minimum lands in that pocket, about 0.09 below
  // the value above the bowl center. Reference cell computed by brute-force
  // scan.
  const BowlParams params = BowlParams::wide();
  const SliceGrid at234 =
      export_slice(params, 2.34, 0.0, 2.0 * kPi, 0.0, 2.0 * kPi, 200, 200);
  std::size_t best = 0;
  for (std::size_t idx = 1; idx < at234.values.size(); ++idx) {
    if (at234.values[idx] < at234.values[best]) best = idx;
  }
  const std::size_t bx = best / at234.ny;
  const std::size_t by = best % at234.ny;
  CHECK(bx == 95);
  CHECK(by == 129);
  CHECK(std::abs(at234.values[best] - (-15.870256262360412)) < 1e-9);

  const BasinLabel pocket =
      classify_basin(params, {at234.xs[bx], at234.ys[by], kPi});
  CHECK_FALSE(pocket.is_global);
  const double off = std::hypot(at234.xs[bx] - kPi, at234.ys[by] - kPi);
  CHECK(off > 0.8);

  // The z-free ring term cancels between slices, so moving the slice to the
  // bowl equator can only deepen every cell.
  const SliceGrid atpi =
      export_slice(params, kPi, 0.0, 2.0 * kPi, 0.0, 2.0 * kPi, 200, 200);
  for (std::size_t idx = 0; idx < atpi.values.size(); ++idx) {
    if (!(atpi.values[idx] <= at234.values[idx])) {
      CHECK(atpi.values[idx] <= at234.values[idx]);
      break;
    }
  }
}

TEST_CASE("descent records every point and stays feasible") {
  const BowlParams params = BowlParams::wide();
  const OptimizerConfig config = descent_config(0.1, 0.05, 0.9);
  const std::array<double, 3> x0 = {1.0, 1.0, 2.0};
  const Trajectory a = run_descent(params, config, x0, 200);
  REQUIRE(a.points.size() == 201);
  CHECK(a.points[0].x == 1.0);
  CHECK(a.points[0].y == 1.0);
  CHECK(a.points[0].z == 2.0);
  CHECK(a.points[0].f == bowl_value(params, x0));
  for (const TrajectoryPoint& p : a.points) {
    CHECK(std::abs(p.x) <= 10.0);
    CHECK(std::abs(p.y) <= 10.0);
    CHECK(std::abs(p.z) <= 10.0);
    CHECK(std::isfinite(p.f));
  }
  CHECK(a.config.rule == Rule::NosAdam);

  const Trajectory b = run_descent(params, config, x0, 200);
  REQUIRE(b.points.size() == a.points.size());
  for (std::size_t s = 0; s < a.points.size(); ++s) {
    CHECK(a.points[s].x == b.points[s].x);
    CHECK(a.points[s].y == b.points[s].y);
    CHECK(a.points[s].z == b.points[s].z);
    CHECK(a.points[s].f == b.points[s].f);
  }
  CHECK(a.terminal.is_global == b.terminal.is_global);
  CHECK(a.terminal.distance == b.terminal.distance);
}

TEST_CASE("a flat-region start is a fixed point") {
  // Far from both the bowl and the ring every exponential underflows to an
  // exact zero gradient, so a momentum-free run cannot move.
  const BowlParams params = BowlParams::sharper();
  const std::array<double, 3> start = {-9.5, -9.5, -9.5};
  const std::array<double, 3> g = bowl_grad(params, start);
  CHECK(g[0] == 0.0);
  CHECK(g[1] == 0.0);
  CHECK(g[2] == 0.0);
  const Trajectory traj =
      run_descent(params, descent_config(0.1, 0.1, 0.0), start, 50);
  for (const TrajectoryPoint& p : traj.points) {
    CHECK(std::abs(p.x - start[0]) <= 1e-9);
    CHECK(std::abs(p.y - start[1]) <= 1e-9);
    CHECK(std::abs(p.z - start[2]) <= 1e-9);
  }
}

TEST_CASE("basin labels follow the nearest center, ties to global") {
  const BowlParams params = BowlParams::wide();
  const BasinLabel center = classify_basin(params, {kPi, kPi, kPi});
  CHECK(center.is_global);
  CHECK(center.distance == 0.0);

  const std::array<double, 3> near3 = {
      local_center(params, 3)[0] + 0.01, local_center(params, 3)[1] - 0.01,
      kPi + 0.02};
  const BasinLabel local3 = classify_basin(params, near3);
  CHECK_FALSE(local3.is_global);
  CHECK(local3.local_index == 3);
  CHECK(local3.distance < 0.05);

  // (pi, pi + 1/2, pi) is equidistant from the global center and ring
  // index 0 at (pi, pi + 1, pi).
  const BasinLabel tie = classify_basin(params, {kPi, kPi + 0.5, kPi});
  CHECK(tie.is_global);
  CHECK(std::abs(tie.distance - 0.5) < 1e-12);
}

TEST_CASE("descent settles into the basin it starts in at small steps") {
  const BowlParams sharper = BowlParams::sharper();
  const std::array<double, 3> c2 = local_center(sharper, 2);
  const Trajectory local_run =
      run_descent(sharper, descent_config(0.1, 0.001, 0.0),
                  {c2[0] + 0.01, c2[1] - 0.01, kPi}, 1500);
  CHECK_FALSE(local_run.terminal.is_global);
  CHECK(local_run.terminal.local_index == 2);

  const Trajectory global_run = run_descent(
      BowlParams::wide(), descent_config(0.1, 0.01, 0.0),
      {kPi, kPi, kPi + 0.2}, 500);
  CHECK(global_run.terminal.is_global);
  CHECK(global_run.terminal.distance < 0.1);
}

TEST_CASE("descent rejects bad setups") {
  const BowlParams params = BowlParams::wide();
  const OptimizerConfig config = descent_config(0.1, 0.05, 0.9);
  CHECK_THROWS_AS(run_descent(params, config, {0.0, 0.0, 0.0}, 0),
                  std::invalid_argument);
  CHECK_THROWS_AS(run_descent(params, config, {0.0, 0.0, 0.0}, 10,
                              BoxFeasibleSet::cube(2, -10.0, 10.0)),
                  std::invalid_argument);
  BowlParams bad = params;
  bad.i_set.clear();
  CHECK_THROWS_AS(run_descent(bad, config, {0.0, 0.0, 0.0}, 10),
                  std::invalid_argument);
}

TEST_CASE("slice and trajectory CSV exports round-trip") {
  const BowlParams params = BowlParams::wide();
  const SliceGrid grid = export_slice(params, 1.0, 0.0, 1.0, 0.0, 2.0, 3, 2);
  const std::string slice_path = "/tmp/nosadam_test_slice.csv";
  write_slice_csv(grid, slice_path);
  std::vector<std::string> lines = read_lines(slice_path);
  REQUIRE(lines.size() == 1 + 3 * 2);
  CHECK(lines[0] == "x,y,f");
  {
    char expected[256];
    std::snprintf(expected, sizeof expected, "%.17g,%.17g,%.17g", grid.xs[0],
                  grid.ys[1], grid.value_at(0, 1));
    CHECK(lines[2] == expected);
    const std::size_t comma = lines[2].rfind(',');
    CHECK(std::strtod(lines[2].c_str() + comma + 1, nullptr) ==
          grid.value_at(0, 1));
  }

  const Trajectory traj =
      run_descent(params, descent_config(0.1, 0.05, 0.9), {1.0, 1.0, 2.0}, 5);
  const std::string traj_path = "/tmp/nosadam_test_traj.csv";
  write_trajectory_csv(traj, traj_path);
  lines = read_lines(traj_path);
  REQUIRE(lines.size() == 1 + traj.points.size());
  CHECK(lines[0] == "step,x,y,z,f");
  CHECK(lines[1].rfind("0,", 0) == 0);
  CHECK(lines[6].rfind("5,", 0) == 0);
  std::remove(slice_path.c_str());
  std::remove(traj_path.c_str());
}
