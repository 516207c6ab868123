#include "sbm/particle.hpp"

#include <algorithm>
#include <cmath>

#include "sbm/parallel.hpp"
#include "sbm/sde.hpp"

namespace sbm {

void ParticleParams::validate() const {
  if (!(b >= 0.0) || !std::isfinite(b)) throw ConfigError("particle: b must be >= 0");
  if (!(std::abs(rho) <= 1.0)) throw ConfigError("particle: |rho| must be <= 1");
  if (mass_scale < 1) throw ConfigError("particle: mass scale n must be >= 1");
}

std::int64_t ParticleState::total_x() const {
  std::int64_t s = 0;
  for (auto x : X) s += x;
  return s;
}

std::int64_t ParticleState::total_y() const {
  std::int64_t s = 0;
  for (auto y : Y) s += y;
  return s;
}

ParticleState empty_particle_state(GeometryPtr geometry) {
  const auto n = static_cast<std::size_t>(geometry->site_count());
  return {std::move(geometry), 0.0, std::vector<std::int64_t>(n, 0),
          std::vector<std::int64_t>(n, 0)};
}

ParticleState particles_from_density(const Field& x_density,
                                     const Field& y_density, std::int64_t n) {
  require_same_geometry(x_density, y_density);
  require_nonnegative(x_density, "x density");
  require_nonnegative(y_density, "y density");
  if (n < 1) throw ConfigError("mass scale n must be >= 1");
  ParticleState s = empty_particle_state(x_density.geometry_ptr());
  for (Index i = 0; i < x_density.size(); ++i) {
    s.X[i] = std::llround(static_cast<double>(n) * x_density[i]);
    s.Y[i] = std::llround(static_cast<double>(n) * y_density[i]);
  }
  return s;
}

double branching_rate(const ParticleParams& p, std::int64_t x, std::int64_t y) {
  const double xy = static_cast<double>(x) * static_cast<double>(y);
  const double a = std::abs(p.rho);
  return p.b * a * xy + 2.0 * p.b * (1.0 - a) * xy;
}

double total_event_rate(const ParticleState& state, const ParticleParams& params) {
  double r = 0.0;
  for (std::size_t k = 0; k < state.X.size(); ++k)
    r += branching_rate(params, state.X[k], state.Y[k]) +
         static_cast<double>(state.X[k] + state.Y[k]);
  return r;
}

const char* channel_name(Channel c) {
  switch (c) {
    case Channel::pair: return "pair";
    case Channel::single_x: return "single_x";
    case Channel::single_y: return "single_y";
    case Channel::migrate_x: return "migrate_x";
    case Channel::migrate_y: return "migrate_y";
  }
  return "?";
}

namespace {

// Complete binary tree of partial sums over per-site rates. Parents are
// recomputed from their children on every update, so no rounding drift
// accumulates in the root.
class RateTree {
 public:
  explicit RateTree(std::size_t n) : leaves_(1) {
    while (leaves_ < n) leaves_ *= 2;
    node_.assign(2 * leaves_, 0.0);
  }

  void set(std::size_t i, double rate) {
    std::size_t k = i + leaves_;
    node_[k] = rate;
    for (k /= 2; k >= 1; k /= 2) node_[k] = node_[2 * k] + node_[2 * k + 1];
  }

  double total() const { return node_[1]; }
  double leaf(std::size_t i) const { return node_[i + leaves_]; }

  /// Leaf whose cumulative interval contains `target` in [0, total()). Never
  /// returns a zero-rate leaf.
  std::size_t find(double target) const {
    std::size_t k = 1;
    while (k < leaves_) {
      const double left = node_[2 * k];
      if ((target < left && left > 0.0) || node_[2 * k + 1] <= 0.0) {
        k = 2 * k;
      } else {
        target -= left;
        k = 2 * k + 1;
      }
    }
    return k - leaves_;
  }

 private:
  std::size_t leaves_;
  std::vector<double> node_;
};

struct Draws {
  double wait_u;     // (0, 1]
  double site_u;     // [0, 1)
  double channel_u;  // [0, 1)
  std::uint64_t bits;
};

Draws event_draws(const StreamKey& key, std::uint64_t e) {
  const auto lo = static_cast<std::uint32_t>(e);
  const auto hi = static_cast<std::uint32_t>(e >> 32);
  const auto [a, b] = counter_bits(key, lo, 2 * hi);
  const auto [c, d] = counter_bits(key, lo, 2 * hi + 1);
  return {unit_open_closed(a), unit_closed_open(b), unit_closed_open(c), d};
}

}  // namespace

ParticleTrajectory simulate_particles(const ParticleState& init,
                                      const ParticleParams& params, double T,
                                      const StreamKey& key,
                                      std::span<const double> record_times,
                                      bool log_events) {
  params.validate();
  if (!(T >= 0.0) || !std::isfinite(T)) throw ConfigError("particle: T must be >= 0");
  if (!init.geometry) throw ConfigError("particle: state has no geometry");
  const Geometry& g = *init.geometry;
  const auto n_sites = static_cast<std::size_t>(g.site_count());
  if (init.X.size() != n_sites || init.Y.size() != n_sites)
    throw ConfigError("particle: count vectors do not match geometry");
  for (std::size_t k = 0; k < n_sites; ++k)
    if (init.X[k] < 0 || init.Y[k] < 0)
      throw ConfigError("particle: counts must be nonnegative");

  std::vector<double> record(record_times.begin(), record_times.end());
  for (double t : record)
    if (!(t >= 0.0) || t > T) throw ConfigError("particle: record time outside [0, T]");
  std::sort(record.begin(), record.end());
  record.erase(std::unique(record.begin(), record.end()), record.end());

  ParticleState s = init;
  s.t = 0.0;
  RateTree tree(n_sites);
  auto site_rate = [&](std::size_t k) {
    return branching_rate(params, s.X[k], s.Y[k]) +
           static_cast<double>(s.X[k] + s.Y[k]);
  };
  for (std::size_t k = 0; k < n_sites; ++k) tree.set(k, site_rate(k));

  ParticleTrajectory out;
  std::size_t next_record = 0;
  auto record_until = [&](double t_limit, bool inclusive) {
    while (next_record < record.size() &&
           (record[next_record] < t_limit ||
            (inclusive && record[next_record] <= t_limit))) {
      ParticleState snap = s;
      snap.t = record[next_record];
      out.snapshots.push_back(std::move(snap));
      ++next_record;
    }
  };

  const double a = std::abs(params.rho);
  const int deg = g.degree();
  for (std::uint64_t e = 0;; ++e) {
    const double R = tree.total();
    if (!(R > 0.0)) break;
    const Draws dr = event_draws(key, e);
    const double t_next = s.t - std::log(dr.wait_u) / R;
    if (t_next > T) break;
    record_until(t_next, false);
    ++out.events_sampled;
    s.t = t_next;

    const std::size_t k = tree.find(dr.site_u * R);
    const double xy = static_cast<double>(s.X[k]) * static_cast<double>(s.Y[k]);
    const double rates[kChannelCount] = {
        params.b * a * xy, params.b * (1.0 - a) * xy, params.b * (1.0 - a) * xy,
        static_cast<double>(s.X[k]), static_cast<double>(s.Y[k])};
    double target = dr.channel_u * tree.leaf(k);
    std::size_t ch = 0;
    for (; ch + 1 < kChannelCount; ++ch) {
      if (rates[ch] > 0.0 && target < rates[ch]) break;
      target -= rates[ch];
    }
    while (rates[ch] <= 0.0) --ch;  // rounding at the upper end

    const bool coin = (dr.bits >> 63) != 0;
    ParticleEvent ev{s.t, static_cast<Index>(k), static_cast<Channel>(ch), 0, 0,
                     static_cast<Index>(k)};
    switch (ev.channel) {
      case Channel::pair:
        if (params.rho >= 0) {
          ev.dx = ev.dy = coin ? 1 : -1;
        } else {
          ev.dx = coin ? 1 : -1;
          ev.dy = -ev.dx;
        }
        break;
      case Channel::single_x: ev.dx = coin ? 1 : -1; break;
      case Channel::single_y: ev.dy = coin ? 1 : -1; break;
      case Channel::migrate_x:
      case Channel::migrate_y: {
        const auto dir = static_cast<int>((dr.bits & 0xFFFFFFFFu) % static_cast<unsigned>(deg));
        ev.target = g.neighbors(static_cast<Index>(k))[dir];
        if (ev.channel == Channel::migrate_x) ev.dx = -1; else ev.dy = -1;
        break;
      }
    }
    s.X[k] += ev.dx;
    s.Y[k] += ev.dy;
    if (ev.channel == Channel::migrate_x) ++s.X[ev.target];
    if (ev.channel == Channel::migrate_y) ++s.Y[ev.target];
    tree.set(k, site_rate(k));
    if (static_cast<std::size_t>(ev.target) != k)
      tree.set(static_cast<std::size_t>(ev.target), site_rate(ev.target));
    ++out.events_applied;
    ++out.channel_counts[ch];
    if (log_events) out.events.push_back(ev);
  }
  record_until(T, true);
  return out;
}

namespace {

struct Totals {
  double x = 0, x2 = 0, y = 0, y2 = 0, site_x2 = 0;
};

McEstimate field(const std::vector<Totals>& v, double Totals::*m, std::uint64_t seed) {
  std::vector<double> xs;
  xs.reserve(v.size());
  for (const auto& t : v) xs.push_back(t.*m);
  return estimate(xs, 0.95, seed);
}

}  // namespace

BridgeReport scaling_bridge(const Field& u_density, const Field& v_density,
                            double b, double rho, const BridgeConfig& cfg) {
  require_same_geometry(u_density, v_density);
  if (cfg.particle_replicas < 2 || cfg.sde_replicas < 2)
    throw ConfigError("scaling_bridge: need at least 2 replicas");
  const double n_sites = static_cast<double>(u_density.size());
  BridgeReport rep;
  rep.initial_mass_u = total(u_density);
  rep.initial_mass_v = total(v_density);

  std::vector<Totals> sde;
  if (cfg.T == 0.0) {
    const double su = u_density.values().squaredNorm() / n_sites;
    sde.assign(cfg.sde_replicas,
               Totals{rep.initial_mass_u, rep.initial_mass_u * rep.initial_mass_u,
                      rep.initial_mass_v, rep.initial_mass_v * rep.initial_mass_v, su});
  } else {
    SbmParams p{b, rho, cfg.sde_dt, cfg.T, SbmScheme::truncated_euler, std::nullopt};
    const double times[] = {cfg.T};
    sde = parallel_replicas<Totals>(cfg.sde_replicas, [&](std::size_t r) {
      const auto tr = simulate_sbm(u_density, v_density, p,
                                   {cfg.seed, Stream::sbm, static_cast<std::uint32_t>(r)},
                                   times);
      const auto& st = tr.snapshots.back();
      const double u = total(st.u), v = total(st.v);
      return Totals{u, u * u, v, v * v, st.u.values().squaredNorm() / n_sites};
    });
  }
  rep.sde_mean_u = field(sde, &Totals::x, cfg.seed);
  rep.sde_second_u = field(sde, &Totals::x2, cfg.seed);
  rep.sde_mean_v = field(sde, &Totals::y, cfg.seed);
  rep.sde_second_v = field(sde, &Totals::y2, cfg.seed);
  rep.sde_site_second_u = field(sde, &Totals::site_x2, cfg.seed);

  for (std::size_t row = 0; row < cfg.n_values.size(); ++row) {
    const std::int64_t n = cfg.n_values[row];
    const ParticleParams pp{b, rho, n};
    const ParticleState init = particles_from_density(u_density, v_density, n);
    const double inv = 1.0 / static_cast<double>(n);
    const double times[] = {cfg.T};
    const auto offset = static_cast<std::uint32_t>(row * cfg.particle_replicas);
    auto samples = parallel_replicas<Totals>(cfg.particle_replicas, [&](std::size_t r) {
      const auto tr = simulate_particles(
          init, pp, cfg.T,
          {cfg.seed, Stream::particle, offset + static_cast<std::uint32_t>(r)}, times);
      const auto& st = tr.snapshots.back();
      const double x = static_cast<double>(st.total_x()) * inv;
      const double y = static_cast<double>(st.total_y()) * inv;
      double sx2 = 0.0;
      for (auto c : st.X) sx2 += (static_cast<double>(c) * inv) * (static_cast<double>(c) * inv);
      return Totals{x, x * x, y, y * y, sx2 / n_sites};
    });
    BridgeRow r;
    r.n = n;
    r.mean_x = field(samples, &Totals::x, cfg.seed);
    r.second_x = field(samples, &Totals::x2, cfg.seed);
    r.mean_y = field(samples, &Totals::y, cfg.seed);
    r.second_y = field(samples, &Totals::y2, cfg.seed);
    r.site_second_x = field(samples, &Totals::site_x2, cfg.seed);
    const std::pair<const McEstimate*, const McEstimate*> pairs[] = {
        {&r.mean_x, &rep.sde_mean_u}, {&r.second_x, &rep.sde_second_u},
        {&r.mean_y, &rep.sde_mean_v}, {&r.second_y, &rep.sde_second_v}};
    r.discrepancy = 0.0;
    double var = 0.0;
    for (const auto& [a, s] : pairs) {
      r.discrepancy += std::abs(a->mean - s->mean);
      const double se = combined_se(*a, *s);
      var += se * se;
    }
    r.discrepancy_se = std::sqrt(var);
    r.site_discrepancy = std::abs(r.site_second_x.mean - rep.sde_site_second_u.mean);
    r.site_discrepancy_se = combined_se(r.site_second_x, rep.sde_site_second_u);
    rep.rows.push_back(r);
  }
  return rep;
}

}  // namespace sbm
