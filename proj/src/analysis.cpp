#include "sbm/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "sbm/parallel.hpp"

namespace sbm {

namespace {

std::vector<double> column(const std::vector<std::vector<double>>& rows,
                           std::size_t j) {
  std::vector<double> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back(r[j]);
  return out;
}

McEstimate est(const std::vector<double>& x, std::uint64_t seed) {
  return estimate(x, 0.95, seed);
}

double max_time(const std::vector<double>& times) {
  if (times.empty()) throw ConfigError("time grid is empty");
  return *std::max_element(times.begin(), times.end());
}

// Index of the snapshot recorded for time t.
std::size_t snapshot_index(std::span<const std::uint64_t> steps, double t,
                           double dt) {
  const auto k = static_cast<std::uint64_t>(std::llround(t / dt));
  const auto it = std::lower_bound(steps.begin(), steps.end(), k);
  return static_cast<std::size_t>(it - steps.begin());
}

}  // namespace

// ---------------------------------------------------------------------------

void TotalMassAccumulator::observe(const SbmState& s) {
  const double u = total(s.u);
  const double v = total(s.v);
  const double uv = pairing(s.u, s.v);
  if (started_) {
    const double du = u - u_;
    const double dv = v - v_;
    qv_ += du * du;
    cov_ += du * dv;
    bracket_ += b_ * uv_ * (s.t - t_);
  }
  started_ = true;
  t_ = s.t;
  u_ = u;
  v_ = v;
  uv_ = uv;
}

TotalMassPath total_mass_path(const SbmTrajectory& traj, double b) {
  if (traj.snapshots.size() < 2)
    throw ConfigError("total_mass_path: need at least 2 snapshots");
  TotalMassPath p;
  TotalMassAccumulator acc(b);
  for (const auto& s : traj.snapshots) {
    acc.observe(s);
    p.time_grid.push_back(s.t);
    p.u_bar.push_back(acc.u_bar());
    p.v_bar.push_back(acc.v_bar());
    p.realized_qv.push_back(acc.realized_qv());
    p.realized_cov.push_back(acc.realized_cov());
    p.bracket_integral.push_back(acc.bracket_integral());
  }
  return p;
}

double z_score(const McEstimate& e, double target) {
  const double diff = e.mean - target;
  const double scale = std::max(1.0, std::abs(target));
  if (std::abs(diff) <= 1e-12 * scale) return 0.0;
  if (e.std_error <= 0.0) return diff > 0 ? HUGE_VAL : -HUGE_VAL;
  return diff / e.std_error;
}

MartingaleReport martingale_test(const Field& u0, const Field& v0,
                                 const MartingaleConfig& cfg) {
  if (cfg.replicas < 2) throw ConfigError("martingale_test: replicas must be >= 2");
  if (cfg.record_every < 1) throw ConfigError("martingale_test: record_every must be >= 1");
  cfg.params.validate();
  const SbmState init = make_sbm_state(u0, v0, cfg.params);
  const std::uint64_t last = cfg.params.step_count();

  auto rows = parallel_replicas<std::vector<double>>(cfg.replicas, [&](std::size_t r) {
    CounterGaussian noise({cfg.seed, Stream::sbm, static_cast<std::uint32_t>(r)});
    TotalMassAccumulator acc(cfg.params.b);
    run_sbm(init, cfg.params, noise, [&](const SbmState& s) {
      if (s.step % cfg.record_every == 0 || s.step == last) acc.observe(s);
    });
    return std::vector<double>{acc.u_bar(), acc.realized_qv(), acc.bracket_integral(),
                               std::abs(acc.realized_cov() - acc.realized_qv())};
  });

  MartingaleReport rep;
  rep.u_bar_0 = total(u0);
  rep.u_bar_T = est(column(rows, 0), cfg.seed);
  rep.realized_qv = est(column(rows, 1), cfg.seed);
  rep.bracket = est(column(rows, 2), cfg.seed);
  for (const auto& r : rows) rep.cov_qv_max_diff = std::max(rep.cov_qv_max_diff, r[3]);
  rep.z = z_score(rep.u_bar_T, rep.u_bar_0);
  const double diff = std::abs(rep.realized_qv.mean - rep.bracket.mean);
  rep.relative_gap = rep.bracket.mean > 0.0 ? diff / rep.bracket.mean : diff;
  rep.pass = std::abs(rep.z) <= 3.0 && rep.relative_gap <= cfg.gap_tolerance;
  return rep;
}

// ---------------------------------------------------------------------------

SelfDualityReport self_duality_test(const Field& phi, const SelfDualityConfig& cfg) {
  require_nonnegative(phi, "phi");
  if (!(cfg.theta > 0.0)) throw ConfigError("self_duality_test: theta must be > 0");
  if (cfg.replicas < 2) throw ConfigError("self_duality_test: replicas must be >= 2");
  if (!(cfg.t >= 0.0)) throw ConfigError("self_duality_test: t must be >= 0");
  const Field flat = Field::constant(phi.geometry_ptr(), cfg.theta);

  // Per replica: (<phi, w_t>, theta <w~_t, 1>).
  std::vector<std::vector<double>> rows;
  if (cfg.t == 0.0) {
    const double x = pairing(phi, flat);
    rows.assign(cfg.replicas, {x, cfg.theta * total(phi)});
  } else {
    const PamParams p{cfg.b, cfg.dt, cfg.t, PamScheme::split_step};
    p.validate();
    const double times[] = {cfg.t};
    rows = parallel_replicas<std::vector<double>>(cfg.replicas, [&](std::size_t r) {
      const auto rep = static_cast<std::uint32_t>(r);
      const auto w = simulate_pam(flat, p, {cfg.seed, Stream::pam, rep}, times);
      const auto wd = simulate_pam(phi, p, {cfg.seed, Stream::pam_dual, rep}, times);
      return std::vector<double>{pairing(phi, w.snapshots.back().w),
                                 cfg.theta * total(wd.snapshots.back().w)};
    });
  }

  SelfDualityReport out;
  out.pass = true;
  for (double lambda : cfg.lambdas) {
    std::vector<double> a, b;
    for (const auto& r : rows) {
      b.push_back(std::exp(-lambda * r[0]));
      a.push_back(std::exp(-lambda * r[1]));
    }
    LaplacePair lp{lambda, est(a, cfg.seed), est(b, cfg.seed), 0.0, 0.0, false};
    lp.combined_se = combined_se(lp.from_phi, lp.from_flat);
    const double diff = lp.from_phi.mean - lp.from_flat.mean;
    lp.z = std::abs(diff) <= 1e-12 ? 0.0
           : lp.combined_se > 0.0  ? diff / lp.combined_se
                                   : HUGE_VAL;
    lp.pass = std::abs(lp.z) <= 3.0;
    out.pass = out.pass && lp.pass;
    out.pairs.push_back(lp);
  }
  return out;
}

// ---------------------------------------------------------------------------

const char* convex_test_name(ConvexTest c) {
  return c == ConvexTest::square ? "square" : "exp_scaled";
}

ConvexTest parse_convex_test(const std::string& name) {
  if (name == "square") return ConvexTest::square;
  if (name == "exp_scaled") return ConvexTest::exp_scaled;
  throw ConfigError("unknown convex test function '" + name + "'");
}

ComparisonReport comparison_test(const Field& u0, const Field& v0,
                                 const ComparisonConfig& cfg) {
  require_same_geometry(u0, v0);
  if (cfg.replicas < 2) throw ConfigError("comparison_test: replicas must be >= 2");
  const Field w0(u0.geometry_ptr(), u0.values() + v0.values());
  ComparisonReport out;
  out.m0 = total(w0);
  if (!(out.m0 > 0.0)) throw ConfigError("comparison_test: initial mass must be > 0");
  const double T = max_time(cfg.times);
  const SbmParams sp{cfg.b, 1.0, cfg.dt, T, SbmScheme::truncated_euler, std::nullopt};
  const PamParams pp{cfg.b, cfg.dt, T, PamScheme::split_step};
  const auto steps = snap_record_times(cfg.times, cfg.dt, T);
  const std::size_t nt = cfg.times.size();

  // Per replica: SBM totals at each time, then PAM totals at each time.
  auto rows = parallel_replicas<std::vector<double>>(cfg.replicas, [&](std::size_t r) {
    const auto rep = static_cast<std::uint32_t>(r);
    const auto s = simulate_sbm(u0, v0, sp, {cfg.seed, Stream::sbm, rep}, cfg.times);
    const auto w = simulate_pam(w0, pp, {cfg.seed, Stream::pam, rep}, cfg.times);
    std::vector<double> out(2 * nt);
    for (std::size_t k = 0; k < nt; ++k) {
      const std::size_t j = snapshot_index(steps, cfg.times[k], cfg.dt);
      out[k] = total(s.snapshots[j].u) + total(s.snapshots[j].v);
      out[nt + k] = total(w.snapshots[j].w);
    }
    return out;
  });

  out.pass = true;
  for (ConvexTest test : cfg.tests) {
    auto phi = [&](double x) {
      return test == ConvexTest::square ? x * x : std::exp(x / out.m0);
    };
    for (std::size_t k = 0; k < nt; ++k) {
      std::vector<double> a, b;
      for (const auto& r : rows) {
        a.push_back(phi(r[k]));
        b.push_back(phi(r[nt + k]));
      }
      ComparisonRow row{test, cfg.times[k], est(a, cfg.seed), est(b, cfg.seed), 0.0, false};
      row.combined_se = combined_se(row.sbm, row.pam);
      const double slack = std::max(cfg.slack_se * row.combined_se,
                                    1e-12 * std::max(1.0, std::abs(row.pam.mean)));
      row.pass = row.sbm.mean <= row.pam.mean + slack;
      out.pass = out.pass && row.pass;
      out.rows.push_back(row);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

void accumulate_min_decomposition(const Field& u, const Field& v,
                                  MinDecompositionReport& rep) {
  require_same_geometry(u, v);
  for (Index i = 0; i < u.size(); ++i) {
    const double w = std::min(u[i], v[i]);
    const double eta_neg = std::max(u[i] - v[i], 0.0);  // (v - u)^-
    rep.max_identity_violation =
        std::max(rep.max_identity_violation, std::abs(u[i] - (w + eta_neg)));
    rep.max_square_violation = std::max(rep.max_square_violation, w * w - u[i] * v[i]);
  }
  ++rep.snapshots;
}

MinDecompositionReport min_decomposition_check(const SbmTrajectory& traj) {
  MinDecompositionReport rep;
  for (const auto& s : traj.snapshots) accumulate_min_decomposition(s.u, s.v, rep);
  return rep;
}

double eta_heat_deviation(const SbmTrajectory& traj, double series_tol) {
  if (traj.snapshots.empty()) return 0.0;
  const auto& first = traj.snapshots.front();
  if (first.step != 0)
    throw ConfigError("eta_heat_deviation: trajectory must start at t = 0");
  const Field eta0(first.u.geometry_ptr(), first.v.values() - first.u.values());
  std::vector<double> grid;
  for (const auto& s : traj.snapshots) grid.push_back(s.t);
  HeatOptions opts;
  opts.tol = series_tol;
  const HeatSolution sol = solve_heat(eta0, grid, opts);
  double worst = 0.0;
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const auto& s = traj.snapshots[k];
    const Eigen::VectorXd eta = s.v.values() - s.u.values();
    worst = std::max(worst, (eta - sol.snapshots[k].values()).cwiseAbs().maxCoeff());
  }
  return worst;
}

// ---------------------------------------------------------------------------

DualityReport duality_functional_experiment(const Field& u0, const Field& v0,
                                            const DualityConfig& cfg) {
  require_same_geometry(u0, v0);
  if (total(u0) > total(v0))
    throw ConfigError("duality_functional_experiment: need <u0,1> <= <v0,1>; swap the populations");
  if (cfg.replicas < 2) throw ConfigError("duality_functional_experiment: replicas must be >= 2");
  if (!(cfg.eps > 0.0) || !(cfg.theta > 0.0) || !(cfg.search_step > 0.0))
    throw ConfigError("duality_functional_experiment: eps, theta and search_step must be > 0");
  const double T_max = max_time(cfg.T_grid);

  DualityReport out;
  const Field f(u0.geometry_ptr(), v0.values() - u0.values());
  out.q_inf = total(negative_part(f));

  std::vector<double> grid;
  const auto n_search = static_cast<std::int64_t>(std::llround(T_max / cfg.search_step));
  for (std::int64_t k = 0; k <= n_search; ++k)
    grid.push_back(static_cast<double>(k) * cfg.search_step);
  for (double T : cfg.T_grid) grid.push_back(T);
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end(),
                         [](double a, double b) { return std::abs(a - b) < 1e-12; }),
             grid.end());
  const QTrajectory q = q_compensator(f, grid);
  out.q_grid_times = grid;
  out.q_bar = q.total_path;
  std::size_t star = grid.size() - 1;
  for (std::size_t k = 0; k < grid.size(); ++k)
    if (out.q_inf - q.total_path[k] <= cfg.eps) {
      star = k;
      break;
    }
  out.T_star = grid[star];
  auto q_at = [&](double t) {
    const auto it = std::min_element(grid.begin(), grid.end(), [&](double a, double b) {
      return std::abs(a - t) < std::abs(b - t);
    });
    return q.total_path[static_cast<std::size_t>(it - grid.begin())];
  };

  std::vector<double> Ts;
  for (double T : cfg.T_grid)
    if (T >= out.T_star - 1e-12) Ts.push_back(T);
  out.pass = true;
  if (Ts.empty()) return out;

  std::vector<double> sbm_times{out.T_star};
  for (double T : Ts) sbm_times.push_back(T);
  const SbmParams sp{cfg.b, 1.0, cfg.dt, T_max, SbmScheme::truncated_euler, std::nullopt};
  const auto sbm_steps = snap_record_times(sbm_times, cfg.dt, T_max);
  std::vector<double> pam_times;
  for (double T : Ts)
    if (T - out.T_star >= cfg.dt * 0.5) pam_times.push_back(T - out.T_star);
  const double pam_T = pam_times.empty() ? 0.0 : max_time(pam_times);
  const PamParams pp{cfg.b, cfg.dt, std::max(pam_T, cfg.dt), PamScheme::split_step};
  const auto pam_steps = pam_times.empty()
                             ? std::vector<std::uint64_t>{}
                             : snap_record_times(pam_times, cfg.dt, pp.T);
  const Field flat = Field::constant(u0.geometry_ptr(), cfg.theta);
  const std::size_t nT = Ts.size();

  // Per replica: pairing values for every T, then flat values.
  auto rows = parallel_replicas<std::vector<double>>(cfg.replicas, [&](std::size_t r) {
    const auto rep = static_cast<std::uint32_t>(r);
    const auto s = simulate_sbm(u0, v0, sp, {cfg.seed, Stream::sbm, rep}, sbm_times);
    PamTrajectory w;
    if (!pam_times.empty())
      w = simulate_pam(flat, pp, {cfg.seed, Stream::pam_dual, rep}, pam_times);
    const auto& st = s.snapshots[snapshot_index(sbm_steps, out.T_star, cfg.dt)];
    const Eigen::VectorXd w_star = st.u.values().cwiseMin(st.v.values());
    std::vector<double> vals(2 * nT);
    for (std::size_t k = 0; k < nT; ++k) {
      const double lag = Ts[k] - out.T_star;
      double pair;
      if (lag < cfg.dt * 0.5)
        pair = w_star.dot(flat.values());
      else
        pair = w_star.dot(w.snapshots[snapshot_index(pam_steps, lag, cfg.dt)].w.values());
      const auto& sT = s.snapshots[snapshot_index(sbm_steps, Ts[k], cfg.dt)];
      const Eigen::VectorXd wT = sT.u.values().cwiseMin(sT.v.values());
      vals[k] = std::exp(-pair);
      vals[nT + k] = std::exp(-wT.dot(flat.values()));
    }
    return vals;
  });

  for (std::size_t k = 0; k < nT; ++k) {
    std::vector<double> a = column(rows, k), b = column(rows, nT + k), d(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) d[i] = a[i] - b[i];
    DualityRow row{Ts[k], est(a, cfg.seed), est(b, cfg.seed), est(d, cfg.seed),
                   cfg.theta * (q_at(Ts[k]) - q_at(out.T_star)), false};
    row.pass = row.gap.mean <= row.bound + 3.0 * row.gap.std_error + 1e-12;
    out.pass = out.pass && row.pass;
    out.rows.push_back(row);
  }
  return out;
}

// ---------------------------------------------------------------------------

CoexistenceReport coexistence_estimator(const Field& u0, const Field& v0,
                                        const CoexistenceConfig& cfg) {
  if (cfg.replicas < 2) throw ConfigError("coexistence_estimator: replicas must be >= 2");
  if (!(cfg.eps_mass > 0.0)) throw ConfigError("coexistence_estimator: eps_mass must be > 0");
  const bool windowed = !cfg.window.empty();
  if (windowed && static_cast<Index>(cfg.window.size()) != u0.size())
    throw ConfigError("coexistence_estimator: window size does not match geometry");
  SbmParams p = cfg.params;
  p.T = max_time(cfg.T_grid);
  const auto steps = snap_record_times(cfg.T_grid, p.dt, p.T);
  const std::size_t nT = cfg.T_grid.size();
  const Eigen::Map<const Eigen::VectorXd> window(cfg.window.data(),
                                                 static_cast<Index>(cfg.window.size()));
  CoexistenceReport out;
  out.u_bar_0 = total(u0);
  out.v_bar_0 = total(v0);
  const double eta0 = out.v_bar_0 - out.u_bar_0;

  // Per replica and time: u observable, u_bar, v_bar.
  auto rows = parallel_replicas<std::vector<double>>(cfg.replicas, [&](std::size_t r) {
    const auto s = simulate_sbm(u0, v0, p, {cfg.seed, Stream::sbm, static_cast<std::uint32_t>(r)},
                                cfg.T_grid);
    std::vector<double> vals(3 * nT);
    for (std::size_t k = 0; k < nT; ++k) {
      const auto& st = s.snapshots[snapshot_index(steps, cfg.T_grid[k], p.dt)];
      vals[3 * k] = windowed ? st.u.values().dot(window) : total(st.u);
      vals[3 * k + 1] = total(st.u);
      vals[3 * k + 2] = total(st.v);
    }
    return vals;
  });

  for (std::size_t k = 0; k < nT; ++k) {
    std::vector<double> both, alive, mu, mv;
    double dev = 0.0;
    for (const auto& r : rows) {
      const double obs = r[3 * k], u = r[3 * k + 1], v = r[3 * k + 2];
      both.push_back(u > cfg.eps_mass && v > cfg.eps_mass ? 1.0 : 0.0);
      alive.push_back(obs > cfg.eps_mass ? 1.0 : 0.0);
      mu.push_back(u);
      mv.push_back(v);
      dev = std::max(dev, std::abs((v - u) - eta0));
    }
    out.rows.push_back({cfg.T_grid[k], est(both, cfg.seed), est(alive, cfg.seed),
                        est(mu, cfg.seed), est(mv, cfg.seed), dev});
  }
  out.u_alive_nonincreasing = true;
  for (std::size_t k = 1; k < out.rows.size(); ++k)
    if (out.rows[k].u_alive.mean > out.rows[k - 1].u_alive.mean)
      out.u_alive_nonincreasing = false;
  return out;
}

// ---------------------------------------------------------------------------

UiReport uniform_integrability_probe(const Field& u0, const Field& v0,
                                     const UiConfig& cfg) {
  if (cfg.replicas < 2) throw ConfigError("uniform_integrability_probe: replicas must be >= 2");
  SbmParams p = cfg.params;
  p.T = max_time(cfg.T_grid);
  const auto steps = snap_record_times(cfg.T_grid, p.dt, p.T);
  auto rows = parallel_replicas<std::vector<double>>(cfg.replicas, [&](std::size_t r) {
    const auto s = simulate_sbm(u0, v0, p, {cfg.seed, Stream::sbm, static_cast<std::uint32_t>(r)},
                                cfg.T_grid);
    std::vector<double> vals;
    for (double T : cfg.T_grid) vals.push_back(total(s.snapshots[snapshot_index(steps, T, p.dt)].u));
    return vals;
  });
  UiReport out;
  out.nonincreasing_in_K = true;
  std::vector<double> cut = cfg.cutoffs;
  for (std::size_t k = 0; k < cfg.T_grid.size(); ++k) {
    std::vector<McEstimate> row;
    for (double K : cut) {
      std::vector<double> x;
      for (const auto& r : rows) x.push_back(r[k] > K ? r[k] : 0.0);
      row.push_back(est(x, cfg.seed));
    }
    for (std::size_t j = 0; j < cut.size(); ++j)
      for (std::size_t i = 0; i < cut.size(); ++i)
        if (cut[i] < cut[j] && row[j].mean > row[i].mean) out.nonincreasing_in_K = false;
    out.tail.push_back(std::move(row));
  }
  return out;
}

std::vector<McEstimate> pam_second_moment_trend(const PamMomentConfig& cfg) {
  if (cfg.replicas < 2) throw ConfigError("pam_second_moment_trend: replicas must be >= 2");
  const auto g = make_geometry(cfg.d, cfg.L);
  const Field flat = Field::constant(g, cfg.theta);
  const PamParams p{cfg.b, cfg.dt, max_time(cfg.T_grid), PamScheme::split_step};
  const auto steps = snap_record_times(cfg.T_grid, p.dt, p.T);
  const double n = static_cast<double>(g->site_count());
  auto rows = parallel_replicas<std::vector<double>>(cfg.replicas, [&](std::size_t r) {
    const auto w = simulate_pam(flat, p, {cfg.seed, Stream::pam, static_cast<std::uint32_t>(r)},
                                cfg.T_grid);
    std::vector<double> vals;
    for (double T : cfg.T_grid)
      vals.push_back(w.snapshots[snapshot_index(steps, T, p.dt)].w.values().squaredNorm() / n);
    return vals;
  });
  std::vector<McEstimate> out;
  for (std::size_t k = 0; k < cfg.T_grid.size(); ++k) out.push_back(est(column(rows, k), cfg.seed));
  return out;
}

// ---------------------------------------------------------------------------

McEstimate green_occupation_mc(const GreenMcConfig& cfg) {
  if (cfg.walks < 2 || cfg.chunks < 1 || !(cfg.radius >= 2.0))
    throw ConfigError("green_occupation_mc: need walks >= 2, chunks >= 1, radius >= 2");
  const double r2 = cfg.radius * cfg.radius;
  const double tail_c = 3.0 / (2.0 * std::numbers::pi);
  const std::uint64_t per_chunk = (cfg.walks + cfg.chunks - 1) / cfg.chunks;

  auto parts = parallel_replicas<MomentAccumulator>(cfg.chunks, [&](std::size_t c) {
    const StreamKey key{cfg.seed, Stream::walk, static_cast<std::uint32_t>(c)};
    const std::uint64_t begin = c * per_chunk;
    const std::uint64_t end = std::min<std::uint64_t>(cfg.walks, begin + per_chunk);
    MomentAccumulator acc;
    for (std::uint64_t k = begin; k < end; ++k) {
      const auto walk = static_cast<std::uint32_t>(k - begin);
      // Coordinates packed into 21-bit fields of one word, each offset by
      // 2^20, so the walk state stays in registers.
      constexpr int kField = 21;
      constexpr std::uint64_t kMask = (1ull << kField) - 1;
      constexpr long kBias = 1l << (kField - 1);
      std::uint64_t code = 0;
      for (int axis = 0; axis < 3; ++axis) code |= static_cast<std::uint64_t>(kBias) << (kField * axis);
      long d2 = 0;  // |x|^2
      // Returns are counted through their conditional probability: each
      // step taken from a neighbour of the origin adds 1/6.
      std::uint64_t next_to_origin = 0;
      double visits = 1.0;
      bool done = false;
      for (std::uint32_t block = 0; !done; ++block) {
        const auto [w0, w1] = counter_bits(key, walk, block);
        for (std::uint64_t word : {w0, w1}) {
          // 21 three-bit groups per word, lowest first; 6 and 7 are rejected.
          for (int g = 0; g < 21; ++g, word >>= 3) {
            const auto dir = static_cast<unsigned>(word & 7u);
            if (dir >= 6) continue;
            next_to_origin += d2 == 1;
            const int shift = kField * static_cast<int>(dir >> 1);
            const long sign = 1 - 2 * static_cast<long>(dir & 1u);
            const long c = static_cast<long>((code >> shift) & kMask) - kBias;
            d2 += 2 * sign * c + 1;
            code += static_cast<std::uint64_t>(sign) << shift;
            if (static_cast<double>(d2) >= r2) {
              visits += static_cast<double>(next_to_origin) / 6.0;
              visits += tail_c / std::sqrt(static_cast<double>(d2));
              done = true;
              break;
            }
          }
          if (done) break;
        }
      }
      acc.add(visits);
    }
    return acc;
  });
  MomentAccumulator all;
  for (const auto& p : parts) all.merge(p);
  return all.estimate(0.95, cfg.seed);
}

}  // namespace sbm
