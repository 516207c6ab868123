#include "sbm/heat.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace sbm {

void validate_time_grid(std::span<const double> grid) {
  if (grid.empty()) throw ConfigError("time grid is empty");
  if (grid.front() != 0.0) throw ConfigError("time grid must start at 0");
  for (std::size_t k = 0; k < grid.size(); ++k) {
    if (!std::isfinite(grid[k]))
      throw ConfigError("time grid contains a non-finite value");
    if (k > 0 && !(grid[k] > grid[k - 1]))
      throw ConfigError("time grid must be strictly increasing");
  }
}

std::vector<double> geometric_time_grid(double first, double last, int points) {
  if (!(first > 0.0) || !(last >= first) || points < 1)
    throw ConfigError("geometric_time_grid: need 0 < first <= last, points >= 1");
  std::vector<double> grid{0.0};
  if (points == 1) {
    grid.push_back(last);
    return grid;
  }
  const double ratio = std::pow(last / first, 1.0 / (points - 1));
  for (int k = 0; k < points; ++k)
    grid.push_back(k + 1 == points ? last : first * std::pow(ratio, k));
  return grid;
}

HeatSolution solve_heat(const Field& f, std::span<const double> time_grid,
                        const HeatOptions& opts) {
  validate_time_grid(time_grid);
  if (!f.is_finite()) throw ConfigError("solve_heat: initial field not finite");
  HeatSolution sol{f.geometry_ptr(),
                   std::vector<double>(time_grid.begin(), time_grid.end()),
                   {},
                   f};
  sol.snapshots.reserve(time_grid.size());
  sol.snapshots.push_back(f);
  for (std::size_t k = 1; k < time_grid.size(); ++k)
    sol.snapshots.push_back(heat_semigroup_apply(
        sol.snapshots.back(), time_grid[k] - time_grid[k - 1], opts));
  return sol;
}

std::pair<Field, Field> sign_decompose(const Field& z) {
  return {positive_part(z), negative_part(z)};
}

namespace {

using Vec = Eigen::VectorXd;

// Adaptive trapezoid integration of Delta zeta+ (and of Delta zeta, needed
// by the residual check) over one grid interval. Node values of zeta come
// from the series propagator applied to the left node, so no error is
// carried between nodes beyond the series truncation.
class CompensatorIntegrator {
 public:
  CompensatorIntegrator(const GeometryPtr& g, const CompensatorOptions& opts)
      : g_(g), opts_(opts), n_(g->site_count()) {}

  struct Node {
    Vec zeta;
    Vec lap_pos;  // Delta zeta+
    Vec lap;      // Delta zeta
  };

  Node node(Vec zeta) const {
    Node nd{std::move(zeta), Vec(n_), Vec(n_)};
    const Vec pos = nd.zeta.cwiseMax(0.0);
    laplacian_into(*g_, pos.data(), nd.lap_pos.data());
    laplacian_into(*g_, nd.zeta.data(), nd.lap.data());
    return nd;
  }

  Vec propagate(const Vec& from, double h) const {
    HeatPropagator prop(g_, h, opts_.series_tol);
    Vec out(n_);
    prop.apply_into(from.data(), out.data());
    return out;
  }

  // Adds the integrals over [a, b] into acc_pos / acc.
  void integrate(double a, const Node& left, double b, const Node& right,
                 int depth, Vec& acc_pos, Vec& acc) {
    const double h = b - a;
    const Node mid = node(propagate(left.zeta, 0.5 * h));
    ++nodes;
    const Vec coarse = 0.5 * h * (left.lap_pos + right.lap_pos);
    const Vec fine = 0.25 * h * (left.lap_pos + 2.0 * mid.lap_pos + right.lap_pos);
    const double err = (fine - coarse).cwiseAbs().maxCoeff() / 3.0;
    const double err_smooth =
        (0.25 * h * (left.lap + 2.0 * mid.lap + right.lap) -
         0.5 * h * (left.lap + right.lap))
            .cwiseAbs()
            .maxCoeff() /
        3.0;
    const double worst = std::max(err, err_smooth);
    if (worst <= opts_.quad_tol * h || depth >= opts_.max_depth) {
      if (depth >= opts_.max_depth && worst > opts_.quad_tol * h) ++capped;
      acc_pos += fine;
      acc += 0.25 * h * (left.lap + 2.0 * mid.lap + right.lap);
      error += worst / 4.0;
      return;
    }
    const double m = a + 0.5 * h;
    integrate(a, left, m, mid, depth + 1, acc_pos, acc);
    integrate(m, mid, b, right, depth + 1, acc_pos, acc);
  }

  std::size_t nodes = 0;
  std::size_t capped = 0;
  double error = 0.0;

 private:
  const GeometryPtr& g_;
  const CompensatorOptions& opts_;
  Index n_;
};

}  // namespace

QTrajectory q_compensator(const Field& f, std::span<const double> time_grid,
                          const CompensatorOptions& opts) {
  validate_time_grid(time_grid);
  if (!f.is_finite()) throw ConfigError("q_compensator: initial field not finite");
  if (!(opts.quad_tol > 0.0) || !(opts.residual_tol > 0.0) || opts.max_depth < 0)
    throw ConfigError("q_compensator: tolerances must be > 0");

  const GeometryPtr& g = f.geometry_ptr();
  const Index n = g->site_count();
  CompensatorIntegrator integ(g, opts);

  QTrajectory out;
  out.geometry = g;
  out.time_grid.assign(time_grid.begin(), time_grid.end());

  const Vec f_pos = f.values().cwiseMax(0.0);
  const Vec f_neg = (-f.values()).cwiseMax(0.0);
  Vec int_pos = Vec::Zero(n);  // int_0^t Delta zeta+ ds
  Vec int_all = Vec::Zero(n);  // int_0^t Delta zeta ds

  auto record = [&](double t, const Vec& zeta) {
    const Vec zeta_pos = zeta.cwiseMax(0.0);
    const Vec zeta_neg = (-zeta).cwiseMax(0.0);
    Vec q = -zeta_pos + f_pos + int_pos;
    const Vec int_neg = int_pos - int_all;
    const Vec residual = zeta_neg - f_neg - int_neg + q;
    Index worst_site = 0;
    const double worst = residual.cwiseAbs().maxCoeff(&worst_site);
    if (!std::isfinite(worst) || worst > opts.residual_tol)
      throw QuadratureError(worst, t, static_cast<long>(worst_site));
    out.max_residual = std::max(out.max_residual, worst);
    if (!out.q_values.empty()) {
      const double drop =
          (out.q_values.back().values() - q).maxCoeff();
      out.max_decrease = std::max(out.max_decrease, drop);
    }
    out.total_path.push_back(q.sum());
    out.q_values.emplace_back(g, std::move(q));
  };

  auto current = integ.node(f.values());
  integ.nodes = 1;
  record(0.0, current.zeta);
  for (std::size_t k = 1; k < time_grid.size(); ++k) {
    const double a = time_grid[k - 1];
    const double b = time_grid[k];
    auto next = integ.node(integ.propagate(current.zeta, b - a));
    ++integ.nodes;
    integ.integrate(a, current, b, next, 0, int_pos, int_all);
    record(b, next.zeta);
    current = std::move(next);
  }
  out.nodes = integ.nodes;
  out.quadrature_error = integ.error;
  out.capped_intervals = integ.capped;
  return out;
}

double l1_distance_to_point_source(const Field& f, double t,
                                   const HeatOptions& opts) {
  if (!(t >= 0.0)) throw ConfigError("l1_distance_to_point_source: t must be >= 0");
  Field diff = f;
  diff[f.geometry().origin()] -= total(f);
  return heat_semigroup_apply(diff, t, opts).values().cwiseAbs().sum();
}

std::vector<double> negative_mass_path(const Field& f,
                                       std::span<const double> time_grid,
                                       const HeatOptions& opts) {
  const HeatSolution sol = solve_heat(f, time_grid, opts);
  std::vector<double> out;
  out.reserve(sol.snapshots.size());
  for (const Field& z : sol.snapshots) out.push_back(total(negative_part(z)));
  return out;
}

}  // namespace sbm
