#pragma once

// Time stepping for the symbiotic branching system
//   du = Delta u dt + sqrt(b u v) dW,   dv = Delta v dt + sqrt(b u v) dW'
// with d[W, W'] = rho dt, its bounded torus variant, and the parabolic
// Anderson model dw = Delta w dt + sqrt(b) w dW.

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "sbm/lattice.hpp"
#include "sbm/rng.hpp"

namespace sbm {

enum class SbmScheme {
  /// Explicit Euler-Maruyama with truncation at 0 (and N).
  truncated_euler,
  /// Exact heat flow over dt followed by an Euler-Maruyama noise substep.
  split_step,
  /// rho = 1 only, unbounded. Exact heat flow over dt, then the smaller of
  /// u and v is redrawn from the Gamma law with the noise substep's
  /// conditional mean and variance; the larger is that value plus |v - u|.
  /// Nonnegative without truncation, so the mean has no truncation bias.
  gamma_split,
};

struct SbmParams {
  double b = 1.0;
  double rho = 1.0;
  double dt = 1e-3;
  double T = 1.0;
  SbmScheme scheme = SbmScheme::truncated_euler;
  /// Upper bound N of the bounded variant; unset for the plain system.
  std::optional<double> bound_N;

  /// Throws ConfigError unless b >= 0, |rho| <= 1, 0 < dt <= min(1, T),
  /// N > 0 when set, and gamma_split has rho = 1 without N. b = 0 is
  /// accepted as the deterministic limit.
  void validate() const;
  /// Number of steps needed to reach T (T/dt rounded, within 1e-9 steps).
  std::uint64_t step_count() const;
};

struct SbmState {
  double t = 0.0;
  std::uint64_t step = 0;
  Field u;
  Field v;
  /// v - rho u, carried separately when |rho| = 1. This combination solves
  /// the heat equation without noise, and keeping it as its own field makes
  /// that property exact in floating point.
  std::optional<Field> coupled;
};

SbmState make_sbm_state(Field u0, Field v0, const SbmParams& params);

/// Advances SbmState by one step. Owns its scratch buffers, so one instance
/// must not be shared between threads.
class SbmStepper {
 public:
  SbmStepper(const SbmParams& params, const GaussianPairSource& noise);

  /// Throws NumericalBlowup on a non-finite value.
  void step(SbmState& state);

 private:
  void heat(const Geometry& g, const Eigen::VectorXd& in, Eigen::VectorXd& out);
  void gamma_step(SbmState& state);
  void finish(SbmState& state);

  SbmParams params_;
  const GaussianPairSource& noise_;
  bool unit_rho_;
  std::optional<HeatPropagator> propagator_;
  Eigen::VectorXd xi_, xi_perp_, u_h_, v_h_, c_h_;
};

/// One step from `state` (a convenience wrapper around SbmStepper).
SbmState step_sbm(const SbmState& state, const SbmParams& params,
                  const GaussianPairSource& noise);

using SbmObserver = std::function<void(const SbmState&)>;

/// Runs from t=0 to params.T, calling `observer` on the initial state and
/// after every step.
SbmState run_sbm(SbmState state, const SbmParams& params,
                 const GaussianPairSource& noise, const SbmObserver& observer);

struct SbmTrajectory {
  std::vector<SbmState> snapshots;
};

/// Maps record times to step indices by rounding t/dt to the nearest
/// integer. Throws ConfigError for times outside [0, T].
std::vector<std::uint64_t> snap_record_times(std::span<const double> times,
                                             double dt, double T);

/// Snapshots at the (snapped, de-duplicated, sorted) record times. The
/// result is a pure function of (inputs, key).
SbmTrajectory simulate_sbm(const Field& u0, const Field& v0,
                           const SbmParams& params, const StreamKey& key,
                           std::span<const double> record_times);

/// Requires params.bound_N and initial values in [0, N].
SbmTrajectory simulate_sbm_bounded(const Field& u0, const Field& v0,
                                   const SbmParams& params,
                                   const StreamKey& key,
                                   std::span<const double> record_times);

enum class PamScheme {
  /// Exact geometric noise substep, then an explicit Euler heat substep.
  split_step,
  /// Euler-Maruyama with truncation at 0.
  truncated_euler,
};

struct PamParams {
  double b = 1.0;
  double dt = 1e-3;
  double T = 1.0;
  PamScheme scheme = PamScheme::split_step;

  void validate() const;
  std::uint64_t step_count() const;
};

struct PamState {
  double t = 0.0;
  std::uint64_t step = 0;
  Field w;
};

class PamStepper {
 public:
  PamStepper(const PamParams& params, const GaussianPairSource& noise);
  void step(PamState& state);

 private:
  PamParams params_;
  const GaussianPairSource& noise_;
  Eigen::VectorXd xi_, scratch_;
};

PamState step_pam(const PamState& state, const PamParams& params,
                  const GaussianPairSource& noise);

using PamObserver = std::function<void(const PamState&)>;

PamState run_pam(PamState state, const PamParams& params,
                 const GaussianPairSource& noise, const PamObserver& observer);

struct PamTrajectory {
  std::vector<PamState> snapshots;
};

PamTrajectory simulate_pam(const Field& w0, const PamParams& params,
                           const StreamKey& key,
                           std::span<const double> record_times);

}  // namespace sbm
