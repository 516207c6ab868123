#include <doctest.h>

#include <cmath>
#include <limits>
#include <vector>

#include "sbm/heat.hpp"
#include "sbm/sde.hpp"

using namespace sbm;

namespace {

SbmParams params(double rho, SbmScheme scheme, double T = 0.5, double dt = 1e-2) {
  SbmParams p;
  p.b = 1.0;
  p.rho = rho;
  p.dt = dt;
  p.T = T;
  p.scheme = scheme;
  return p;
}

}  // namespace

TEST_CASE("parameter validation") {
  SbmParams p = params(1.0, SbmScheme::truncated_euler);
  CHECK_NOTHROW(p.validate());
  p.rho = 1.5;
  CHECK_THROWS_AS(p.validate(), ConfigError);
  p = params(1.0, SbmScheme::truncated_euler);
  p.b = -1.0;
  CHECK_THROWS_AS(p.validate(), ConfigError);
  p = params(1.0, SbmScheme::truncated_euler);
  p.dt = 0.0;
  CHECK_THROWS_AS(p.validate(), ConfigError);
  p = params(1.0, SbmScheme::truncated_euler);
  p.bound_N = 0.0;
  CHECK_THROWS_AS(p.validate(), ConfigError);
  CHECK_NOTHROW(params(1.0, SbmScheme::gamma_split).validate());
  CHECK_THROWS_AS(params(0.5, SbmScheme::gamma_split).validate(), ConfigError);
  p = params(1.0, SbmScheme::gamma_split);
  p.bound_N = 5.0;
  CHECK_THROWS_AS(p.validate(), ConfigError);
  CHECK(params(1.0, SbmScheme::truncated_euler, 1.0, 0.1).step_count() == 10);
}

TEST_CASE("record times snap to steps") {
  const double t[] = {0.0, 0.1, 0.1000000001, 0.05};
  const auto s = snap_record_times(t, 0.01, 1.0);
  CHECK(s == std::vector<std::uint64_t>{0, 5, 10});
  const double out[] = {2.0};
  CHECK_THROWS_AS(snap_record_times(out, 0.01, 1.0), ConfigError);
}

TEST_CASE("b = 0 reduces to the heat equation") {
  const auto g = make_geometry(1, 16);
  SbmParams p = params(0.3, SbmScheme::split_step, 1.0, 0.05);
  p.b = 0.0;
  const Field u0 = Field::point_mass(g, 0, 1.0), v0 = Field::point_mass(g, 4, 2.0);
  const double times[] = {1.0};
  const auto tr = simulate_sbm(u0, v0, p, {1, Stream::sbm, 0}, times);
  const auto& last = tr.snapshots.back();
  CHECK((last.u.values() - heat_semigroup_apply(u0, 1.0).values()).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((last.v.values() - heat_semigroup_apply(v0, 1.0).values()).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("zero stays zero") {
  const auto g = make_geometry(1, 8);
  const Field z(g);
  for (auto scheme : {SbmScheme::truncated_euler, SbmScheme::split_step}) {
    const double times[] = {0.5};
    const auto tr = simulate_sbm(z, z, params(0.2, scheme), {1, Stream::sbm, 0}, times);
    CHECK(tr.snapshots.back().u.values().cwiseAbs().maxCoeff() == 0.0);
    CHECK(tr.snapshots.back().v.values().cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("states stay nonnegative and finite for every rho and scheme") {
  const auto g = make_geometry(1, 8);
  Field u0(g), v0(g);
  for (Index i = 0; i < 8; ++i) {
    u0[i] = 0.1 * static_cast<double>(i % 3);
    v0[i] = 0.2 * static_cast<double>((i + 1) % 2);
  }
  for (double rho : {-1.0, -0.5, 0.0, 0.5, 1.0})
    for (auto scheme : {SbmScheme::truncated_euler, SbmScheme::split_step}) {
      const SbmParams p = params(rho, scheme);
      CounterGaussian noise({3, Stream::sbm, 0});
      run_sbm(make_sbm_state(u0, v0, p), p, noise, [](const SbmState& s) {
        CHECK(s.u.is_nonnegative());
        CHECK(s.v.is_nonnegative());
        CHECK(s.u.is_finite());
      });
    }
}

TEST_CASE("simulation is a pure function of the key") {
  const auto g = make_geometry(1, 8);
  const Field u0 = Field::constant(g, 0.5), v0 = Field::constant(g, 0.7);
  const SbmParams p = params(0.3, SbmScheme::truncated_euler);
  const double times[] = {0.1, 0.5};
  const auto a = simulate_sbm(u0, v0, p, {5, Stream::sbm, 2}, times);
  const auto b = simulate_sbm(u0, v0, p, {5, Stream::sbm, 2}, times);
  const auto c = simulate_sbm(u0, v0, p, {5, Stream::sbm, 3}, times);
  REQUIRE(a.snapshots.size() == 2);
  for (std::size_t k = 0; k < a.snapshots.size(); ++k) {
    CHECK(a.snapshots[k].u.values() == b.snapshots[k].u.values());
    CHECK(a.snapshots[k].v.values() == b.snapshots[k].v.values());
  }
  CHECK(a.snapshots.back().u.values() != c.snapshots.back().u.values());
}

TEST_CASE("rho = 1: v - u follows the heat flow") {
  const auto g = make_geometry(1, 16);
  Field u0(g), v0(g);
  u0[0] = 2.0;
  v0[1] = 1.0;
  v0[15] = 2.0;
  const SbmParams p = params(1.0, SbmScheme::split_step, 2.0, 1e-3);
  const double times[] = {0.5, 1.0, 2.0};
  const auto tr = simulate_sbm(u0, v0, p, {9, Stream::sbm, 0}, times);
  Field eta0(g);
  eta0.values() = v0.values() - u0.values();
  for (const auto& s : tr.snapshots) {
    const Field ref = heat_semigroup_apply(eta0, s.t, {HeatMethod::series, 1e-16});
    CHECK((s.v.values() - s.u.values() - ref.values()).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("rho = -1: u + v is conserved sitewise for flat initials") {
  const auto g = make_geometry(1, 12);
  const Field u0 = Field::constant(g, 0.3), v0 = Field::constant(g, 0.7);
  const SbmParams p = params(-1.0, SbmScheme::truncated_euler, 1.0, 1e-3);
  CounterGaussian noise({4, Stream::sbm, 0});
  double worst = 0.0;
  run_sbm(make_sbm_state(u0, v0, p), p, noise, [&](const SbmState& s) {
    worst = std::max(worst, (s.u.values().array() + s.v.values().array() - 1.0).abs().maxCoeff());
  });
  CHECK(worst <= 1e-10);
}

TEST_CASE("bounded variant keeps values in [0, N]") {
  const auto g = make_geometry(1, 8);
  SbmParams p = params(0.4, SbmScheme::truncated_euler, 1.0, 1e-2);
  p.b = 20.0;
  p.bound_N = 1.0;
  const Field u0 = Field::constant(g, 0.9), v0 = Field::constant(g, 0.8);
  std::vector<double> times;
  for (int k = 0; k <= 10; ++k) times.push_back(0.1 * k);
  const auto tr = simulate_sbm_bounded(u0, v0, p, {2, Stream::sbm, 0}, times);
  for (const auto& s : tr.snapshots) {
    CHECK(s.u.values().maxCoeff() <= 1.0);
    CHECK(s.v.values().maxCoeff() <= 1.0);
    CHECK(s.u.is_nonnegative());
  }
  p.bound_N.reset();
  CHECK_THROWS_AS(simulate_sbm_bounded(u0, v0, p, {2, Stream::sbm, 0}, times), ConfigError);
}

TEST_CASE("PAM schemes agree on the mean over a short horizon") {
  const auto g = make_geometry(1, 4);
  const Field w0 = Field::constant(g, 1.0);
  const double times[] = {0.5};
  double a = 0, b = 0;
  const int n = 400;
  for (int r = 0; r < n; ++r) {
    const StreamKey key{6, Stream::pam, static_cast<std::uint32_t>(r)};
    a += total(simulate_pam(w0, {1.0, 1e-2, 0.5, PamScheme::split_step}, key, times).snapshots.back().w);
    b += total(simulate_pam(w0, {1.0, 1e-2, 0.5, PamScheme::truncated_euler}, key, times).snapshots.back().w);
  }
  // Same noise, so the two schemes are strongly coupled.
  CHECK(std::abs(a - b) / n < 0.05);
  CHECK(std::abs(a / n - 4.0) < 0.3);
}

TEST_CASE("PAM from zero stays at zero") {
  const auto g = make_geometry(2, 3);
  const double times[] = {0.2};
  const auto tr = simulate_pam(Field(g), {1.0, 1e-2, 0.2, PamScheme::split_step},
                               {1, Stream::pam, 0}, times);
  CHECK(tr.snapshots.back().w.values().cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("b = 0 single step is the explicit Euler heat step") {
  const auto g = make_geometry(1, 10);
  SbmParams p = params(0.5, SbmScheme::truncated_euler, 1.0, 0.1);
  p.b = 0.0;
  const Field u0 = Field::point_mass(g, 2, 1.0), v0 = Field::point_mass(g, 5, 3.0);
  const CounterGaussian noise({1, Stream::sbm, 0});
  const SbmState s = step_sbm(make_sbm_state(u0, v0, p), p, noise);
  CHECK((s.u.values() - euler_heat_step(u0, 0.1).values()).cwiseAbs().maxCoeff() < 1e-15);
  CHECK((s.v.values() - euler_heat_step(v0, 0.1).values()).cwiseAbs().maxCoeff() < 1e-15);
  CHECK(s.t == doctest::Approx(0.1));
  CHECK(s.step == 1);
}

TEST_CASE("rho = 1 single step moves v - u by the Euler heat step") {
  const auto g = make_geometry(1, 10);
  const SbmParams p = params(1.0, SbmScheme::truncated_euler, 1.0, 0.05);
  Field u0(g), v0(g);
  for (Index i = 0; i < 10; ++i) {
    u0[i] = 0.5 + 0.1 * static_cast<double>(i % 4);
    v0[i] = 1.0 - 0.05 * static_cast<double>(i);
  }
  const CounterGaussian noise({8, Stream::sbm, 1});
  const SbmState s = step_sbm(make_sbm_state(u0, v0, p), p, noise);
  Field eta(g);
  eta.values() = v0.values() - u0.values();
  const Field expected = euler_heat_step(eta, 0.05);
  CHECK((s.v.values() - s.u.values() - expected.values()).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("record time 0 returns the initial state") {
  const auto g = make_geometry(1, 6);
  const Field u0 = Field::constant(g, 0.4), v0 = Field::constant(g, 0.6);
  const double times[] = {0.0};
  const auto tr = simulate_sbm(u0, v0, params(0.2, SbmScheme::split_step), {1, Stream::sbm, 0}, times);
  REQUIRE(tr.snapshots.size() == 1);
  CHECK(tr.snapshots[0].t == 0.0);
  CHECK(tr.snapshots[0].u.values() == u0.values());
  CHECK(tr.snapshots[0].v.values() == v0.values());
}

TEST_CASE("PAM mean follows the heat semigroup") {
  const auto g = make_geometry(1, 6);
  const Field w0 = Field::point_mass(g, 0, 1.0);
  const PamParams p{1.0, 1e-2, 0.5, PamScheme::split_step};
  const double times[] = {0.5};
  const int n = 3000;
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(6), sq = Eigen::VectorXd::Zero(6);
  for (int r = 0; r < n; ++r) {
    const auto w = simulate_pam(w0, p, {12, Stream::pam, static_cast<std::uint32_t>(r)}, times)
                       .snapshots.back().w.values();
    sum += w;
    sq += w.cwiseProduct(w);
  }
  const Eigen::VectorXd mean = sum / n;
  const Eigen::VectorXd se = ((sq / n - mean.cwiseProduct(mean)) / (n - 1)).cwiseSqrt();
  // The noise substep has mean one, so E w_t is the Euler heat flow at the
  // same step size.
  const Field ref = heat_semigroup_apply(w0, 0.5, {HeatMethod::euler, 1e-14, 1e-2});
  for (Index i = 0; i < 6; ++i) CHECK(std::abs(mean[i] - ref[i]) <= 3.0 * se[i]);
}

TEST_CASE("bounded variant: identical initials stay identical for rho = 1") {
  const auto g = make_geometry(1, 8);
  SbmParams p = params(1.0, SbmScheme::truncated_euler, 1.0, 1e-2);
  p.b = 5.0;
  p.bound_N = 2.0;
  Field u0(g);
  for (Index i = 0; i < 8; ++i) u0[i] = 0.2 * static_cast<double>(i % 5);
  const double times[] = {0.25, 0.5, 1.0};
  const auto tr = simulate_sbm_bounded(u0, u0, p, {4, Stream::sbm, 0}, times);
  for (const auto& s : tr.snapshots) CHECK(s.u.values() == s.v.values());
}

TEST_CASE("bounded variant with a huge bound matches the plain system") {
  const auto g = make_geometry(1, 6);
  SbmParams p = params(0.5, SbmScheme::truncated_euler, 1.0, 1e-2);
  const Field u0 = Field::constant(g, 0.5), v0 = Field::point_mass(g, 0, 2.0);
  SbmParams pb = p;
  pb.bound_N = 1e6 * 2.0;
  const double times[] = {1.0};
  const int n = 400;
  std::vector<double> plain, bounded;
  for (int r = 0; r < n; ++r) {
    plain.push_back(total(
        simulate_sbm(u0, v0, p, {21, Stream::sbm, static_cast<std::uint32_t>(r)}, times)
            .snapshots.back().u));
    bounded.push_back(total(
        simulate_sbm_bounded(u0, v0, pb, {22, Stream::sbm, static_cast<std::uint32_t>(r)}, times)
            .snapshots.back().u));
  }
  double mp = 0, mb = 0, vp = 0, vb = 0;
  for (int r = 0; r < n; ++r) {
    mp += plain[r] / n;
    mb += bounded[r] / n;
  }
  for (int r = 0; r < n; ++r) {
    vp += (plain[r] - mp) * (plain[r] - mp) / (n - 1);
    vb += (bounded[r] - mb) * (bounded[r] - mb) / (n - 1);
  }
  CHECK(std::abs(mp - mb) <= 3.0 * std::sqrt(vp / n + vb / n));
}

TEST_CASE("gamma-split: nonnegative, v - u follows the heat flow, zero is absorbing") {
  const auto g = make_geometry(1, 16);
  Field u0(g), v0(g);
  u0[0] = 2.0;
  u0[3] = 0.01;
  v0[1] = 1.0;
  v0[15] = 2.0;
  const SbmParams p = params(1.0, SbmScheme::gamma_split, 2.0, 1e-2);
  CounterGaussian noise({9, Stream::sbm, 0});
  Field eta0(g);
  eta0.values() = v0.values() - u0.values();
  run_sbm(make_sbm_state(u0, v0, p), p, noise, [&](const SbmState& s) {
    CHECK(s.u.is_nonnegative());
    CHECK(s.v.is_nonnegative());
    const Field ref = heat_semigroup_apply(eta0, s.t, {HeatMethod::series, 1e-16});
    CHECK((s.v.values() - s.u.values() - ref.values()).cwiseAbs().maxCoeff() < 1e-10);
  });
  const Field z(g);
  const double times[] = {0.5};
  const auto tr = simulate_sbm(z, v0, p, {1, Stream::sbm, 0}, times);
  CHECK(tr.snapshots.back().u.values().cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("gamma-split keeps the mean of a small population") {
  // Small u next to a large v: the regime where truncation at 0 adds mass.
  const auto g = make_geometry(1, 8);
  Field u0(g), v0(g);
  u0[0] = 0.05;
  v0[0] = 1.0;
  v0[1] = 1.0;
  const SbmParams p = params(1.0, SbmScheme::gamma_split, 5.0, 1e-2);
  const double times[] = {5.0};
  const int n = 4000;
  double m = 0, q = 0;
  for (int r = 0; r < n; ++r) {
    const auto tr = simulate_sbm(u0, v0, p, {21, Stream::sbm, static_cast<std::uint32_t>(r)}, times);
    const double x = tr.snapshots.back().u.values().sum();
    m += x;
    q += x * x;
  }
  m /= n;
  const double se = std::sqrt((q / n - m * m) / n);
  CHECK(std::abs(m - 0.05) < 4.0 * se);
}
