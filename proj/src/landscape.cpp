#include "nosadam/landscape.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace nosadam {

namespace {

constexpr double kPi = std::numbers::pi;

std::vector<int> full_ring() {
  std::vector<int> is(13);
  for (int i = 0; i <= 12; ++i) is[static_cast<std::size_t>(i)] = i;
  return is;
}

}  // namespace

BowlParams BowlParams::wide() {
  BowlParams p;
  p.i_set = full_ring();
  return p;
}

BowlParams BowlParams::sharper() {
  BowlParams p;
  p.b = 2.0;
  p.c = 4.0;
  p.r = 1.3;
  p.i_set = full_ring();
  return p;
}

void validate_bowl(const BowlParams& params) {
  if (!(params.a > 0.0) || !(params.b > 0.0) || !(params.c > 0.0)) {
    throw std::invalid_argument("bowl depths a, b, c must be positive");
  }
  if (!(params.r > 0.0)) {
    throw std::invalid_argument("ring radius r must be positive");
  }
  if (!(params.beta > 0.0)) {
    throw std::invalid_argument("local sharpness beta must be positive");
  }
  if (params.i_set.empty()) {
    throw std::invalid_argument("i_set must name at least one local minimum");
  }
}

std::array<double, 3> local_center(const BowlParams& params, int i) {
  const double half = static_cast<double>(i) / 2.0;
  return {kPi + params.r * std::sin(half), kPi + params.r * std::cos(half),
          kPi};
}

double bowl_value(const BowlParams& params, std::array<double, 3> point) {
  const double dx = point[0] - kPi;
  const double dy = point[1] - kPi;
  const double dz = point[2] - kPi;
  double value =
      -params.a * std::exp(-params.b * (dx * dx + dy * dy) - dz * dz);
  const double cc = std::cos(point[0]) * std::cos(point[1]);
  for (int i : params.i_set) {
    const std::array<double, 3> center = local_center(params, i);
    const double ex = point[0] - center[0];
    const double ey = point[1] - center[1];
    value -= params.c * cc * std::exp(-params.beta * (ex * ex + ey * ey));
  }
  return value;
}

std::array<double, 3> bowl_grad(const BowlParams& params,
                                std::array<double, 3> point) {
  const double dx = point[0] - kPi;
  const double dy = point[1] - kPi;
  const double dz = point[2] - kPi;
  const double wide = std::exp(-params.b * (dx * dx + dy * dy) - dz * dz);
  std::array<double, 3> g = {2.0 * params.a * params.b * dx * wide,
                             2.0 * params.a * params.b * dy * wide,
                             2.0 * params.a * dz * wide};
  const double cx = std::cos(point[0]);
  const double cy = std::cos(point[1]);
  const double sx = std::sin(point[0]);
  const double sy = std::sin(point[1]);
  for (int i : params.i_set) {
    const std::array<double, 3> center = local_center(params, i);
    const double ex = point[0] - center[0];
    const double ey = point[1] - center[1];
    const double bump = std::exp(-params.beta * (ex * ex + ey * ey));
    g[0] += params.c * bump * (sx * cy + 2.0 * params.beta * ex * cx * cy);
    g[1] += params.c * bump * (cx * sy + 2.0 * params.beta * ey * cx * cy);
  }
  return g;
}

BasinLabel classify_basin(const BowlParams& params,
                          std::array<double, 3> point) {
  auto dist_to = [&point](const std::array<double, 3>& center) {
    const double dx = point[0] - center[0];
    const double dy = point[1] - center[1];
    const double dz = point[2] - center[2];
    return std::sqrt(dx * dx + dy * dy + dz * dz);
  };
  BasinLabel label;
  label.is_global = true;
  label.distance = dist_to({kPi, kPi, kPi});
  for (int i : params.i_set) {
    const double d = dist_to(local_center(params, i));
    if (d < label.distance) {
      label.is_global = false;
      label.local_index = i;
      label.distance = d;
    }
  }
  return label;
}

Trajectory run_descent(const BowlParams& params, const OptimizerConfig& config,
                       std::array<double, 3> x0, std::size_t T) {
  return run_descent(params, config, x0, T,
                     BoxFeasibleSet::cube(3, -10.0, 10.0));
}

Trajectory run_descent(const BowlParams& params, const OptimizerConfig& config,
                       std::array<double, 3> x0, std::size_t T,
                       const BoxFeasibleSet& box) {
  validate_bowl(params);
  if (T < 1) throw std::invalid_argument("descent needs at least one step");
  if (box.dim() != 3) {
    throw std::invalid_argument("descent box must be 3-dimensional");
  }
  Optimizer opt(config, std::vector<double>(x0.begin(), x0.end()), box);
  Trajectory out;
  out.config = config;
  out.points.reserve(T + 1);
  auto record = [&params, &out](std::span<const double> x) {
    const std::array<double, 3> p = {x[0], x[1], x[2]};
    const double f = bowl_value(params, p);
    if (!std::isfinite(f)) {
      throw std::runtime_error("non-finite value encountered at step " +
                               std::to_string(out.points.size()));
    }
    out.points.push_back({p[0], p[1], p[2], f});
  };
  record(opt.iterate());
  std::array<double, 3> g;
  for (std::size_t t = 1; t <= T; ++t) {
    const std::span<const double> x = opt.iterate();
    g = bowl_grad(params, {x[0], x[1], x[2]});
    opt.step(g);
    record(opt.iterate());
  }
  const TrajectoryPoint& last = out.points.back();
  out.terminal = classify_basin(params, {last.x, last.y, last.z});
  return out;
}

SliceGrid export_slice(const BowlParams& params, double z, double x_lo,
                       double x_hi, double y_lo, double y_hi, std::size_t nx,
                       std::size_t ny) {
  validate_bowl(params);
  if (nx < 2 || ny < 2) {
    throw std::invalid_argument("slice needs at least 2 points per axis");
  }
  if (!(x_lo < x_hi) || !(y_lo < y_hi)) {
    throw std::invalid_argument("slice ranges must be non-empty");
  }
  SliceGrid grid;
  grid.z = z;
  grid.nx = nx;
  grid.ny = ny;
  grid.xs.resize(nx);
  grid.ys.resize(ny);
  for (std::size_t ix = 0; ix < nx; ++ix) {
    grid.xs[ix] = x_lo + (x_hi - x_lo) * static_cast<double>(ix) /
                             static_cast<double>(nx - 1);
  }
  for (std::size_t iy = 0; iy < ny; ++iy) {
    grid.ys[iy] = y_lo + (y_hi - y_lo) * static_cast<double>(iy) /
                             static_cast<double>(ny - 1);
  }
  grid.values.resize(nx * ny);
  for (std::size_t ix = 0; ix < nx; ++ix) {
    for (std::size_t iy = 0; iy < ny; ++iy) {
      grid.values[ix * ny + iy] =
          bowl_value(params, {grid.xs[ix], grid.ys[iy], z});
    }
  }
  return grid;
}

void write_slice_csv(const SliceGrid& grid, const std::string& path) {
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw std::runtime_error("cannot open for writing: " + path);
  std::fputs("x,y,f\n", f);
  char buf[256];
  for (std::size_t ix = 0; ix < grid.nx; ++ix) {
    for (std::size_t iy = 0; iy < grid.ny; ++iy) {
      std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g\n", grid.xs[ix],
                    grid.ys[iy], grid.value_at(ix, iy));
      std::fputs(buf, f);
    }
  }
  if (std::fclose(f) != 0) {
    throw std::runtime_error("failed to finish writing: " + path);
  }
}

void write_trajectory_csv(const Trajectory& trajectory,
                          const std::string& path) {
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw std::runtime_error("cannot open for writing: " + path);
  std::fputs("step,x,y,z,f\n", f);
  char buf[256];
  for (std::size_t s = 0; s < trajectory.points.size(); ++s) {
    const TrajectoryPoint& p = trajectory.points[s];
    std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g,%.17g,%.17g\n", s, p.x,
                  p.y, p.z, p.f);
    std::fputs(buf, f);
  }
  if (std::fclose(f) != 0) {
    throw std::runtime_error("failed to finish writing: " + path);
  }
}

}  // namespace nosadam
