#ifndef NOSADAM_LANDSCAPE_HPP
#define NOSADAM_LANDSCAPE_HPP

#include <array>
#include <string>
#include <vector>

#include "nosadam/optimizers.hpp"

namespace nosadam {

// Bowl-shaped 3-D test surface: one wide global minimum at (pi, pi, pi)
// surrounded by a ring of sharp local minima at
// (pi + r sin(i/2), pi + r cos(i/2), pi) for i in i_set.
//
// The surface is
//   f(x,y,z) = -a exp(-b((x-pi)^2 + (y-pi)^2) - (z-pi)^2)
//              - c sum_i cos(x) cos(y) exp(-beta((x-u_i)^2 + (y-w_i)^2))
// The z term in the first exponent is read with a minus sign (a bowl in all
// three coordinates); the printed form with +(z-pi)^2 would grow without
// bound in z, contradicting the intended shape.
struct BowlParams {
  double a = 30.0;
  double b = 0.007;
  double c = 0.25;
  double r = 1.0;
  double beta = 20.0;
  std::vector<int> i_set;  // defaults to 0..12, one full ring

  static BowlParams wide();     // a=30, b=0.007, c=0.25, r=1, beta=20
  static BowlParams sharper();  // same but b=2, c=4, r=1.3
};

void validate_bowl(const BowlParams& params);

double bowl_value(const BowlParams& params, std::array<double, 3> point);
std::array<double, 3> bowl_grad(const BowlParams& params,
                                std::array<double, 3> point);

// Ring center for index i.
std::array<double, 3> local_center(const BowlParams& params, int i);

struct BasinLabel {
  bool is_global = true;
  int local_index = 0;    // meaningful when !is_global
  double distance = 0.0;  // to the labeled center
};

// Nearest-center rule over the global center and the ring; ties go to the
// global basin.
BasinLabel classify_basin(const BowlParams& params,
                          std::array<double, 3> point);

struct TrajectoryPoint {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
  double f = 0.0;
};

struct Trajectory {
  OptimizerConfig config;
  std::vector<TrajectoryPoint> points;  // step count + 1, includes start
  BasinLabel terminal;
};

// Deterministic full-gradient descent on the bowl inside `box`
// ([-10, 10]^3 by default, wide enough that trajectories never touch it).
Trajectory run_descent(const BowlParams& params, const OptimizerConfig& config,
                       std::array<double, 3> x0, std::size_t T);
Trajectory run_descent(const BowlParams& params, const OptimizerConfig& config,
                       std::array<double, 3> x0, std::size_t T,
                       const BoxFeasibleSet& box);

struct SliceGrid {
  double z = 0.0;
  std::size_t nx = 0;
  std::size_t ny = 0;
  std::vector<double> xs;      // nx grid lines
  std::vector<double> ys;      // ny grid lines
  std::vector<double> values;  // nx * ny, x-major
  double value_at(std::size_t ix, std::size_t iy) const {
    return values[ix * ny + iy];
  }
};

// Samples f on a fixed-z grid over [x_lo, x_hi] x [y_lo, y_hi], inclusive of
// the endpoints. resolution >= 2 per axis.
SliceGrid export_slice(const BowlParams& params, double z, double x_lo,
                       double x_hi, double y_lo, double y_hi, std::size_t nx,
                       std::size_t ny);

// CSV headers: slice `x,y,f`; trajectory `step,x,y,z,f`.
void write_slice_csv(const SliceGrid& grid, const std::string& path);
void write_trajectory_csv(const Trajectory& trajectory,
                          const std::string& path);

}  // namespace nosadam

#endif
