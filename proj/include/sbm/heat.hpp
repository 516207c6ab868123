#pragma once

// Deterministic discrete heat flow d zeta = Delta zeta dt, the sign parts of
// its solution and the compensator q_f of the negative part.

#include <span>
#include <utility>
#include <vector>

#include "sbm/lattice.hpp"

namespace sbm {

struct HeatSolution {
  GeometryPtr geometry;
  std::vector<double> time_grid;
  /// zeta_f(t, .) for every grid time.
  std::vector<Field> snapshots;
  Field initial;
};

/// Throws ConfigError unless the grid is non-empty, starts at 0 and is
/// strictly increasing.
void validate_time_grid(std::span<const double> grid);

/// `points` times geometrically spaced in [first, last], preceded by 0.
std::vector<double> geometric_time_grid(double first, double last, int points);

/// Snapshots are advanced with the series propagator from one grid time to
/// the next.
HeatSolution solve_heat(const Field& f, std::span<const double> time_grid,
                        const HeatOptions& opts = {});

/// (z+, z-) with z = z+ - z-.
std::pair<Field, Field> sign_decompose(const Field& z);

struct QTrajectory {
  GeometryPtr geometry;
  std::vector<double> time_grid;
  std::vector<Field> q_values;
  /// q-bar(t) = <q(t), 1>.
  std::vector<double> total_path;
  /// Largest drop q(t_{k-1}, i) - q(t_k, i) over the grid (0 when monotone).
  double max_decrease = 0.0;
  /// Largest |zeta^- - f^- - int Delta zeta^- ds + q| over grid and sites.
  double max_residual = 0.0;
  /// Number of quadrature nodes used, including grid times.
  std::size_t nodes = 0;
  /// Sum of the local error estimates of the quadrature.
  double quadrature_error = 0.0;
  /// Nodes whose refinement hit the depth cap.
  std::size_t capped_intervals = 0;
};

struct CompensatorOptions {
  /// Local error allowed per unit time for the trapezoid sums.
  double quad_tol = 1e-11;
  /// Threshold for the residual check of the negative-part equation.
  double residual_tol = 1e-8;
  int max_depth = 40;
  double series_tol = 1e-16;
};

/// q(t,i) = -zeta+(t,i) + zeta+(0,i) + int_0^t Delta zeta+(s,i) ds, with the
/// integral taken by adaptive trapezoid sums that refine where any site
/// changes sign. Throws QuadratureError when the residual check fails.
QTrajectory q_compensator(const Field& f, std::span<const double> time_grid,
                          const CompensatorOptions& opts = {});

/// <|zeta_f(t) - zeta^M(t)|, 1>, where zeta^M starts from M 1_{origin} and
/// M = <f, 1>. `f` must already be centred at the origin.
double l1_distance_to_point_source(const Field& f, double t,
                                   const HeatOptions& opts = {});

/// t -> <zeta_f^-(t), 1> on the grid.
std::vector<double> negative_mass_path(const Field& f,
                                       std::span<const double> time_grid,
                                       const HeatOptions& opts = {});

}  // namespace sbm
