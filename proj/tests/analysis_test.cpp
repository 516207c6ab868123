#include <doctest.h>

#include <cmath>

#include "sbm/analysis.hpp"

using namespace sbm;

TEST_CASE("z score") {
  McEstimate e;
  e.mean = 1.2;
  e.std_error = 0.1;
  CHECK(z_score(e, 1.0) == doctest::Approx(2.0));
  e.mean = 1.0;
  e.std_error = 0.0;
  CHECK(z_score(e, 1.0) == 0.0);
}

TEST_CASE("min decomposition holds for arbitrary fields") {
  const auto g = make_geometry(1, 6);
  Field u(g), v(g);
  for (Index i = 0; i < 6; ++i) {
    u[i] = 0.1 * static_cast<double>(i);
    v[i] = 0.35 - 0.05 * static_cast<double>(i);
  }
  MinDecompositionReport rep;
  accumulate_min_decomposition(u, v, rep);
  CHECK(rep.max_identity_violation == 0.0);
  CHECK(rep.max_square_violation == 0.0);
  CHECK(rep.snapshots == 1);
}

TEST_CASE("total mass path of a deterministic run") {
  const auto g = make_geometry(1, 8);
  SbmParams p;
  p.b = 0.0;
  p.dt = 0.1;
  p.T = 1.0;
  const double times[] = {0.0, 0.5, 1.0};
  const auto tr = simulate_sbm(Field::point_mass(g, 0, 1.0), Field::point_mass(g, 1, 2.0), p,
                               {1, Stream::sbm, 0}, times);
  const auto path = total_mass_path(tr, 0.0);
  for (double u : path.u_bar) CHECK(u == doctest::Approx(1.0).epsilon(1e-12));
  for (double v : path.v_bar) CHECK(v == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(path.realized_qv.back() < 1e-24);
  CHECK(path.bracket_integral.back() == 0.0);
}

TEST_CASE("martingale test on a small system") {
  const auto g = make_geometry(1, 8);
  MartingaleConfig cfg;
  cfg.params.b = 1.0;
  cfg.params.rho = 1.0;
  cfg.params.dt = 1e-2;
  cfg.params.T = 1.0;
  cfg.replicas = 400;
  cfg.seed = 17;
  Field v0 = Field::point_mass(g, 0, 1.0);
  v0[1] = 1.0;
  const auto rep = martingale_test(Field::point_mass(g, 0, 1.0), v0, cfg);
  CHECK(rep.u_bar_0 == 1.0);
  CHECK(std::isfinite(rep.z));
  CHECK(rep.realized_qv.mean > 0.0);
  CHECK(rep.relative_gap < 0.3);
  // rho = 1: both totals share the same increments.
  CHECK(rep.cov_qv_max_diff < 1e-12);
}

TEST_CASE("convex test names round-trip") {
  for (auto c : {ConvexTest::square, ConvexTest::exp_scaled})
    CHECK(parse_convex_test(convex_test_name(c)) == c);
  CHECK_THROWS_AS(parse_convex_test("cube"), ConfigError);
}

TEST_CASE("self-duality on a small torus") {
  const auto g = make_geometry(1, 4);
  SelfDualityConfig cfg;
  cfg.t = 0.5;
  cfg.dt = 1e-2;
  cfg.replicas = 2000;
  cfg.seed = 3;
  const auto rep = self_duality_test(Field::point_mass(g, 0, 1.0), cfg);
  REQUIRE(rep.pairs.size() == 3);
  for (const auto& p : rep.pairs) {
    CHECK(p.from_phi.mean > 0.0);
    CHECK(p.from_phi.mean < 1.0);
    CHECK(std::abs(p.from_phi.mean - p.from_flat.mean) < 5.0 * p.combined_se + 1e-3);
  }
}

TEST_CASE("duality functional needs the smaller population first") {
  const auto g = make_geometry(1, 8);
  DualityConfig cfg;
  cfg.replicas = 4;
  CHECK_THROWS_AS(duality_functional_experiment(Field::point_mass(g, 0, 2.0),
                                                Field::point_mass(g, 0, 1.0), cfg),
                  ConfigError);
}

TEST_CASE("green occupation oracle") {
  GreenMcConfig cfg;
  cfg.walks = 40000;
  cfg.chunks = 4;
  cfg.seed = 5;
  const McEstimate e = green_occupation_mc(cfg);
  CHECK(e.n_replicas == 40000);
  CHECK(std::abs(e.mean - green_origin(3)) < 5.0 * e.std_error);
  CHECK(e.std_error < 0.005);
}

TEST_CASE("b = 0 martingale report") {
  const auto g = make_geometry(1, 8);
  MartingaleConfig cfg;
  cfg.params.b = 0.0;
  cfg.params.dt = 1e-2;
  cfg.params.T = 0.5;
  cfg.replicas = 4;
  const auto rep = martingale_test(Field::point_mass(g, 0, 1.0), Field::point_mass(g, 1, 1.0), cfg);
  CHECK(rep.z == 0.0);
  CHECK(rep.realized_qv.mean < 1e-24);
  CHECK(rep.bracket.mean == 0.0);
}

TEST_CASE("rho = 1 keeps v_bar - u_bar constant and both nonnegative") {
  const auto g = make_geometry(1, 8);
  SbmParams p;
  p.b = 2.0;
  p.rho = 1.0;
  p.dt = 1e-2;
  p.T = 1.0;
  CounterGaussian noise({2, Stream::sbm, 0});
  TotalMassAccumulator acc(p.b);
  const Field u0 = Field::point_mass(g, 0, 1.0), v0 = Field::constant(g, 0.3);
  const double gap0 = total(v0) - total(u0);
  run_sbm(make_sbm_state(u0, v0, p), p, noise, [&](const SbmState& s) {
    acc.observe(s);
    CHECK(acc.v_bar() - acc.u_bar() == doctest::Approx(gap0).epsilon(1e-12));
    CHECK(acc.u_bar() >= 0.0);
    CHECK(acc.v_bar() >= 0.0);
  });
  CHECK(acc.realized_cov() == doctest::Approx(acc.realized_qv()).epsilon(1e-12));
}

TEST_CASE("self-duality degenerate cases") {
  const auto g = make_geometry(1, 4);
  SelfDualityConfig cfg;
  cfg.replicas = 4;
  cfg.t = 0.0;
  const Field phi = Field::point_mass(g, 1, 0.5);
  for (const auto& p : self_duality_test(phi, cfg).pairs) {
    CHECK(p.from_phi.mean == std::exp(-p.lambda * cfg.theta * 0.5));
    CHECK(p.from_flat.mean == std::exp(-p.lambda * cfg.theta * 0.5));
  }
  cfg.t = 0.2;
  cfg.dt = 0.05;
  for (const auto& p : self_duality_test(Field(g), cfg).pairs) {
    CHECK(p.from_phi.mean == 1.0);
    CHECK(p.from_flat.mean == 1.0);
  }
}

TEST_CASE("comparison degenerate cases") {
  const auto g = make_geometry(1, 6);
  ComparisonConfig cfg;
  cfg.b = 0.0;
  cfg.dt = 0.05;
  cfg.times = {0.5};
  cfg.replicas = 3;
  const Field u0 = Field::point_mass(g, 0, 1.0), v0 = Field::point_mass(g, 1, 1.0);
  const auto rep = comparison_test(u0, v0, cfg);
  REQUIRE(rep.rows.size() == 2);
  CHECK(rep.rows[0].sbm.mean == doctest::Approx(4.0).epsilon(1e-12));
  CHECK(rep.rows[0].pam.mean == doctest::Approx(4.0).epsilon(1e-12));
  CHECK(rep.rows[1].sbm.mean == doctest::Approx(std::exp(1.0)).epsilon(1e-12));

  // Equal initials: the SBM pair is two copies of the PAM from u0.
  cfg.b = 1.0;
  cfg.times = {0.5};
  cfg.replicas = 1500;
  cfg.dt = 1e-2;
  const auto eq = comparison_test(u0, u0, cfg);
  for (const auto& row : eq.rows)
    CHECK(std::abs(row.sbm.mean - row.pam.mean) <= 3.0 * row.combined_se);
}

TEST_CASE("min decomposition with equal fields") {
  const auto g = make_geometry(1, 4);
  const Field u = Field::constant(g, 0.3);
  MinDecompositionReport rep;
  accumulate_min_decomposition(u, u, rep);
  CHECK(rep.max_identity_violation == 0.0);
  CHECK(rep.max_square_violation == 0.0);
}

TEST_CASE("duality functional with pointwise ordered initials") {
  const auto g = make_geometry(1, 8);
  DualityConfig cfg;
  cfg.T_grid = {0.5, 1.0};
  cfg.dt = 1e-2;
  cfg.search_step = 0.1;
  cfg.replicas = 50;
  const Field u0 = Field::point_mass(g, 0, 0.5), v0 = Field::point_mass(g, 0, 1.0);
  const auto rep = duality_functional_experiment(u0, v0, cfg);
  // q vanishes up to the rounding of the quadrature sums.
  CHECK(std::abs(rep.q_inf) < 1e-12);
  CHECK(rep.T_star == 0.0);
  for (const auto& row : rep.rows) CHECK(std::abs(row.bound) < 1e-12);
  for (double q : rep.q_bar) CHECK(std::abs(q) < 1e-12);
}

TEST_CASE("duality functional: the gap vanishes at T = T*") {
  const auto g = make_geometry(1, 16);
  DualityConfig cfg;
  cfg.dt = 1e-2;
  cfg.search_step = 0.1;
  cfg.replicas = 20;
  cfg.eps = 0.5;
  Field u0 = Field::point_mass(g, 0, 2.0);
  Field v0 = Field::point_mass(g, 1, 1.0);
  v0[15] = 2.0;
  // Find T* with a first pass, then evaluate at T = T*.
  cfg.T_grid = {3.0};
  const double t_star = duality_functional_experiment(u0, v0, cfg).T_star;
  cfg.T_grid = {t_star};
  const auto rep = duality_functional_experiment(u0, v0, cfg);
  REQUIRE(rep.rows.size() == 1);
  CHECK(std::abs(rep.rows[0].gap.mean) < 1e-12);
  CHECK(rep.rows[0].bound == 0.0);
}

TEST_CASE("coexistence with b = 0") {
  const auto g = make_geometry(1, 8);
  CoexistenceConfig cfg;
  cfg.params.b = 0.0;
  cfg.params.dt = 0.05;
  cfg.params.T = 1.0;
  cfg.T_grid = {0.5, 1.0};
  cfg.eps_mass = 1e-9;
  cfg.replicas = 3;
  const auto rep = coexistence_estimator(Field::point_mass(g, 0, 1.0), Field::point_mass(g, 3, 2.0), cfg);
  for (const auto& row : rep.rows) {
    CHECK(row.both_alive.mean == 1.0);
    CHECK(row.eta_mass_max_dev < 1e-12);
  }
}

TEST_CASE("uniform integrability probe") {
  const auto g = make_geometry(1, 8);
  UiConfig cfg;
  cfg.params.b = 0.0;
  cfg.params.dt = 0.05;
  cfg.params.T = 1.0;
  cfg.T_grid = {0.5, 1.0};
  cfg.cutoffs = {0.5, 1.5, 3.0};
  cfg.replicas = 3;
  const auto rep = uniform_integrability_probe(Field::point_mass(g, 0, 1.0), Field::point_mass(g, 1, 1.0), cfg);
  for (const auto& row : rep.tail) {
    CHECK(row[1].mean == 0.0);
    CHECK(row[2].mean == 0.0);
  }
  cfg.params.b = 1.0;
  cfg.replicas = 200;
  CHECK(uniform_integrability_probe(Field::point_mass(g, 0, 1.0), Field::point_mass(g, 1, 1.0), cfg)
            .nonincreasing_in_K);
}
