#pragma once

// Exact (Gillespie) simulation of the two-type branching particle system
// whose mass-1/n rescaling approximates the symbiotic branching diffusion.

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "sbm/lattice.hpp"
#include "sbm/rng.hpp"
#include "sbm/stats.hpp"

namespace sbm {

struct ParticleParams {
  double b = 1.0;
  double rho = 1.0;
  /// Each particle carries mass 1/n.
  std::int64_t mass_scale = 1;

  void validate() const;
};

struct ParticleState {
  GeometryPtr geometry;
  double t = 0.0;
  std::vector<std::int64_t> X;
  std::vector<std::int64_t> Y;

  std::int64_t total_x() const;
  std::int64_t total_y() const;
};

/// Zero counts on `geometry`.
ParticleState empty_particle_state(GeometryPtr geometry);

/// Counts round(n * density) per site.
ParticleState particles_from_density(const Field& x_density,
                                     const Field& y_density, std::int64_t n);

/// b|rho| X Y + 2 b (1 - |rho|) X Y at one site.
double branching_rate(const ParticleParams& p, std::int64_t x, std::int64_t y);

/// Sum over sites of the branching rate plus one migration clock per
/// particle.
double total_event_rate(const ParticleState& state, const ParticleParams& params);

enum class Channel : std::uint8_t {
  /// One shared clock per opposite-type pair: both particles get zero or two
  /// offspring (rho > 0), or exactly one of them gets two (rho < 0).
  pair,
  /// Individual clock of a type-1 particle: zero or two offspring.
  single_x,
  single_y,
  migrate_x,
  migrate_y,
};
inline constexpr std::size_t kChannelCount = 5;
const char* channel_name(Channel c);

struct ParticleEvent {
  double t;
  Index site;
  Channel channel;
  int dx;
  int dy;
  /// Destination site of a migration; equal to `site` otherwise.
  Index target;
};

struct ParticleTrajectory {
  std::vector<ParticleState> snapshots;
  std::uint64_t events_sampled = 0;
  std::uint64_t events_applied = 0;
  std::array<std::uint64_t, kChannelCount> channel_counts{};
  /// Filled only when requested.
  std::vector<ParticleEvent> events;
};

/// Runs until T and records the state at every record time (times in
/// [0, T], sorted, duplicates removed). A pure function of its arguments.
ParticleTrajectory simulate_particles(const ParticleState& init,
                                      const ParticleParams& params, double T,
                                      const StreamKey& key,
                                      std::span<const double> record_times,
                                      bool log_events = false);

struct BridgeRow {
  std::int64_t n;
  McEstimate mean_x, second_x, mean_y, second_y;
  /// Average over sites of (X(i)/n)^2.
  McEstimate site_second_x;
  /// Sum of |particle - SDE| over the four total-mass moments.
  double discrepancy;
  /// Standard error of `discrepancy`'s terms combined in quadrature.
  double discrepancy_se;
  /// |particle - SDE| for the site-averaged second moment.
  double site_discrepancy;
  double site_discrepancy_se;
};

struct BridgeReport {
  McEstimate sde_mean_u, sde_second_u, sde_mean_v, sde_second_v;
  McEstimate sde_site_second_u;
  std::vector<BridgeRow> rows;
  double initial_mass_u;
  double initial_mass_v;
};

struct BridgeConfig {
  std::vector<std::int64_t> n_values{10, 50, 250};
  double T = 1.0;
  std::size_t particle_replicas = 2000;
  std::size_t sde_replicas = 2000;
  double sde_dt = 1e-3;
  std::uint64_t seed = 1;
};

/// Moments of the rescaled particle totals against the SDE started from the
/// same densities. Densities are rounded to counts round(n * density).
BridgeReport scaling_bridge(const Field& u_density, const Field& v_density,
                            double b, double rho, const BridgeConfig& config);

}  // namespace sbm
