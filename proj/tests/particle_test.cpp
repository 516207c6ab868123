#include <doctest.h>

#include <cmath>
#include <vector>

#include "sbm/particle.hpp"

using namespace sbm;

TEST_CASE("branching rates") {
  ParticleParams p{2.0, 1.0, 10};
  CHECK(branching_rate(p, 3, 4) == doctest::Approx(24.0));
  p.rho = 0.0;
  CHECK(branching_rate(p, 3, 4) == doctest::Approx(48.0));
  p.rho = -0.5;
  CHECK(branching_rate(p, 3, 4) == doctest::Approx(12.0 + 24.0));
  CHECK(branching_rate(p, 0, 4) == 0.0);
}

TEST_CASE("total event rate counts one migration clock per particle") {
  const auto g = make_geometry(1, 4);
  ParticleState s = empty_particle_state(g);
  s.X = {1, 0, 2, 0};
  s.Y = {1, 3, 0, 0};
  const ParticleParams p{1.0, 1.0, 1};
  CHECK(total_event_rate(s, p) == doctest::Approx(1.0 + 7.0));
}

TEST_CASE("densities round to counts") {
  const auto g = make_geometry(1, 3);
  const auto s = particles_from_density(Field::constant(g, 0.26), Field::constant(g, 0.1), 10);
  CHECK(s.X == std::vector<std::int64_t>{3, 3, 3});
  CHECK(s.Y == std::vector<std::int64_t>{1, 1, 1});
  CHECK(s.total_x() == 9);
}

TEST_CASE("events follow the channel rules") {
  const auto g = make_geometry(1, 6);
  const auto init = particles_from_density(Field::constant(g, 1.0), Field::constant(g, 1.0), 5);
  for (double rho : {1.0, -1.0, 0.0}) {
    const ParticleParams p{1.0, rho, 5};
    const double times[] = {0.5};
    const auto tr = simulate_particles(init, p, 0.5, {3, Stream::particle, 0}, times, true);
    REQUIRE(!tr.events.empty());
    ParticleState s = init;
    double last = 0.0;
    for (const auto& e : tr.events) {
      CHECK(e.t >= last);
      last = e.t;
      switch (e.channel) {
        case Channel::pair:
          if (rho > 0) CHECK(e.dx == e.dy);
          else CHECK(e.dx == -e.dy);
          CHECK(std::abs(e.dx) == 1);
          break;
        case Channel::single_x: CHECK(e.dy == 0); break;
        case Channel::single_y: CHECK(e.dx == 0); break;
        case Channel::migrate_x:
        case Channel::migrate_y: {
          const auto nb = g->neighbors(e.site);
          bool adjacent = false;
          for (Index j : nb) adjacent = adjacent || j == e.target;
          CHECK(adjacent);
          break;
        }
      }
      if (rho == 1.0) CHECK(e.channel != Channel::single_x);
      if (rho == 0.0) CHECK(e.channel != Channel::pair);
      s.X[e.site] += e.dx;
      s.Y[e.site] += e.dy;
      if (e.channel == Channel::migrate_x) s.X[e.target] += 1;
      if (e.channel == Channel::migrate_y) s.Y[e.target] += 1;
      for (auto x : s.X) CHECK(x >= 0);
    }
    CHECK(s.X == tr.snapshots.back().X);
    CHECK(s.Y == tr.snapshots.back().Y);
    std::uint64_t counted = 0;
    for (auto c : tr.channel_counts) counted += c;
    CHECK(counted == tr.events_applied);
  }
}

TEST_CASE("particle runs are reproducible") {
  const auto g = make_geometry(1, 4);
  const auto init = particles_from_density(Field::constant(g, 0.5), Field::constant(g, 0.5), 8);
  const ParticleParams p{1.0, 0.5, 8};
  const double times[] = {0.2, 0.4};
  const auto a = simulate_particles(init, p, 0.4, {1, Stream::particle, 4}, times);
  const auto b = simulate_particles(init, p, 0.4, {1, Stream::particle, 4}, times);
  REQUIRE(a.snapshots.size() == b.snapshots.size());
  for (std::size_t k = 0; k < a.snapshots.size(); ++k) CHECK(a.snapshots[k].X == b.snapshots[k].X);
  CHECK(a.events_sampled == b.events_sampled);
}

TEST_CASE("extinct system stays put") {
  const auto g = make_geometry(1, 4);
  const double times[] = {1.0};
  const auto tr = simulate_particles(empty_particle_state(g), {1.0, 1.0, 1}, 1.0,
                                     {1, Stream::particle, 0}, times);
  CHECK(tr.events_sampled == 0);
  CHECK(tr.snapshots.back().total_x() == 0);
}

TEST_CASE("rate examples") {
  const auto one = make_geometry(1, 1);
  CHECK(total_event_rate(empty_particle_state(one), {1.0, 1.0, 1}) == 0.0);
  ParticleState s = empty_particle_state(one);
  s.X = {1};
  s.Y = {1};
  CHECK(total_event_rate(s, {0.7, 1.0, 1}) == doctest::Approx(0.7 + 2.0));
  s.X = {2};
  s.Y = {3};
  CHECK(total_event_rate(s, {0.7, 0.0, 1}) == doctest::Approx(2 * 0.7 * 6 + 5));
}

TEST_CASE("rho = 1, one pair: the first pair event gives (0,0) or (2,2) evenly") {
  const auto one = make_geometry(1, 1);
  ParticleState s = empty_particle_state(one);
  s.X = {1};
  s.Y = {1};
  const int n = 4000;
  int doubled = 0, seen = 0;
  for (int r = 0; r < n; ++r) {
    const double times[] = {5.0};
    const auto tr = simulate_particles(s, {1.0, 1.0, 1}, 5.0,
                                       {31, Stream::particle, static_cast<std::uint32_t>(r)},
                                       times, true);
    std::int64_t x = 1, y = 1;
    for (const auto& e : tr.events) {
      x += e.dx + (e.channel == Channel::migrate_x ? 1 : 0);
      y += e.dy + (e.channel == Channel::migrate_y ? 1 : 0);
      if (e.channel == Channel::pair) {
        ++seen;
        CHECK(((x == 0 && y == 0) || (x == 2 && y == 2)));
        doubled += x == 2;
        break;
      }
    }
  }
  REQUIRE(seen > n / 2);
  const double p = static_cast<double>(doubled) / seen;
  CHECK(std::abs(p - 0.5) <= 3.0 * std::sqrt(0.25 / seen));
}

TEST_CASE("b = 0: only migration, totals fixed") {
  const auto g = make_geometry(2, 3);
  const auto init = particles_from_density(Field::constant(g, 0.5), Field::constant(g, 0.3), 10);
  const double times[] = {0.5, 1.0};
  const auto tr = simulate_particles(init, {0.0, 0.6, 10}, 1.0, {2, Stream::particle, 0}, times, true);
  for (const auto& e : tr.events)
    CHECK((e.channel == Channel::migrate_x || e.channel == Channel::migrate_y));
  for (const auto& s : tr.snapshots) {
    CHECK(s.total_x() == init.total_x());
    CHECK(s.total_y() == init.total_y());
  }
}

TEST_CASE("rho = 1: X - Y changes only through migration") {
  const auto g = make_geometry(1, 5);
  const auto init = particles_from_density(Field::constant(g, 1.0), Field::constant(g, 0.6), 5);
  const double times[] = {1.0};
  const auto tr = simulate_particles(init, {2.0, 1.0, 5}, 1.0, {6, Stream::particle, 0}, times, true);
  for (const auto& e : tr.events)
    if (e.channel != Channel::migrate_x && e.channel != Channel::migrate_y) CHECK(e.dx == e.dy);
}

TEST_CASE("scaling bridge at T = 0 reproduces the initial moments") {
  const auto g = make_geometry(1, 4);
  BridgeConfig cfg;
  cfg.n_values = {10, 20};
  cfg.T = 0.0;
  cfg.particle_replicas = 3;
  cfg.sde_replicas = 3;
  const auto rep = scaling_bridge(Field::constant(g, 0.2), Field::constant(g, 0.1), 1.0, 1.0, cfg);
  for (const auto& row : rep.rows) {
    CHECK(row.mean_x.mean == doctest::Approx(0.8).epsilon(1e-14));
    CHECK(row.discrepancy < 1e-14);
  }
}

TEST_CASE("scaling bridge: particle means stay at the initial mass") {
  const auto g = make_geometry(1, 4);
  BridgeConfig cfg;
  cfg.n_values = {5, 20};
  cfg.T = 0.5;
  cfg.particle_replicas = 600;
  cfg.sde_replicas = 50;
  cfg.sde_dt = 1e-2;
  cfg.seed = 4;
  const auto rep = scaling_bridge(Field::constant(g, 0.4), Field::constant(g, 0.2), 1.0, 1.0, cfg);
  for (const auto& row : rep.rows)
    CHECK(std::abs(row.mean_x.mean - rep.initial_mass_u) <= 3.0 * row.mean_x.std_error);
}
