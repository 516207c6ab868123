#pragma once

// Monte Carlo checks of the structural properties of the symbiotic
// branching and parabolic Anderson models.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "sbm/heat.hpp"
#include "sbm/lattice.hpp"
#include "sbm/sde.hpp"
#include "sbm/stats.hpp"

namespace sbm {

// ---------------------------------------------------------------------------
// Total mass

struct TotalMassPath {
  std::vector<double> time_grid;
  std::vector<double> u_bar;
  std::vector<double> v_bar;
  /// Running sum of squared increments of u_bar.
  std::vector<double> realized_qv;
  /// Running sum of products of the increments of u_bar and v_bar.
  std::vector<double> realized_cov;
  /// Running left-Riemann sum of b <u_s, v_s> ds.
  std::vector<double> bracket_integral;
};

/// Streaming version of total_mass_path, fed one state at a time.
class TotalMassAccumulator {
 public:
  explicit TotalMassAccumulator(double b) : b_(b) {}
  void observe(const SbmState& s);

  double u_bar() const noexcept { return u_; }
  double v_bar() const noexcept { return v_; }
  double realized_qv() const noexcept { return qv_; }
  double realized_cov() const noexcept { return cov_; }
  double bracket_integral() const noexcept { return bracket_; }

 private:
  double b_;
  bool started_ = false;
  double t_ = 0, u_ = 0, v_ = 0, uv_ = 0;
  double qv_ = 0, cov_ = 0, bracket_ = 0;
};

/// Throws ConfigError for fewer than 2 snapshots.
TotalMassPath total_mass_path(const SbmTrajectory& traj, double b);

struct MartingaleConfig {
  SbmParams params;
  std::size_t replicas = 10000;
  std::uint64_t seed = 1;
  /// Record every k-th step for the realized quantities.
  std::uint64_t record_every = 1;
  double gap_tolerance = 0.1;
};

struct MartingaleReport {
  McEstimate u_bar_T;
  double u_bar_0 = 0.0;
  double z = 0.0;
  McEstimate realized_qv;
  McEstimate bracket;
  double relative_gap = 0.0;
  /// max over replicas |realized cov - realized qv| (0 when rho = 1).
  double cov_qv_max_diff = 0.0;
  bool pass = false;
};

/// z-score of mean(u_bar_T) - u_bar_0 and the relative gap between the
/// realized quadratic variation and b int <u, v> ds.
MartingaleReport martingale_test(const Field& u0, const Field& v0,
                                 const MartingaleConfig& cfg);

/// (mean - target) / se, treating differences below rounding as 0.
double z_score(const McEstimate& e, double target);

// ---------------------------------------------------------------------------
// Self-duality of the parabolic Anderson model

struct SelfDualityConfig {
  double b = 0.5;
  double theta = 1.0;
  double t = 2.0;
  double dt = 1e-3;
  std::vector<double> lambdas{0.5, 1.0, 2.0};
  std::size_t replicas = 20000;
  std::uint64_t seed = 1;
};

struct LaplacePair {
  double lambda;
  /// E exp(-lambda <w~_t, theta 1>), w~ started from phi.
  McEstimate from_phi;
  /// E exp(-lambda <phi, w_t>), w started from theta 1.
  McEstimate from_flat;
  double combined_se;
  double z;
  bool pass;
};

struct SelfDualityReport {
  std::vector<LaplacePair> pairs;
  bool pass = false;
};

SelfDualityReport self_duality_test(const Field& phi, const SelfDualityConfig& cfg);

// ---------------------------------------------------------------------------
// Comparison with the parabolic Anderson model

enum class ConvexTest { square, exp_scaled };
const char* convex_test_name(ConvexTest c);
ConvexTest parse_convex_test(const std::string& name);

struct ComparisonConfig {
  double b = 1.0;
  double dt = 2e-3;
  std::vector<double> times{1.0, 2.0, 5.0};
  std::vector<ConvexTest> tests{ConvexTest::square, ConvexTest::exp_scaled};
  std::size_t replicas = 4000;
  std::uint64_t seed = 1;
  double slack_se = 2.0;
};

struct ComparisonRow {
  ConvexTest test;
  double t;
  /// E Phi(<u_t + v_t, 1>) for rho = 1.
  McEstimate sbm;
  /// E Phi(<w_t, 1>), w_0 = u_0 + v_0.
  McEstimate pam;
  double combined_se;
  bool pass;
};

struct ComparisonReport {
  std::vector<ComparisonRow> rows;
  /// Scale of exp_scaled: Phi(x) = exp(x / m0), m0 = <u0 + v0, 1>.
  double m0 = 0.0;
  bool pass = false;
};

ComparisonReport comparison_test(const Field& u0, const Field& v0,
                                 const ComparisonConfig& cfg);

// ---------------------------------------------------------------------------
// rho = 1 structure

struct MinDecompositionReport {
  /// max |u - (min(u, v) + (v - u)^-)|.
  double max_identity_violation = 0.0;
  /// max (min(u, v)^2 - u v)^+.
  double max_square_violation = 0.0;
  std::size_t snapshots = 0;
};

MinDecompositionReport min_decomposition_check(const SbmTrajectory& traj);
void accumulate_min_decomposition(const Field& u, const Field& v,
                                  MinDecompositionReport& rep);

/// max over snapshots and sites of |(v_t - u_t) - zeta_{v0-u0}(t)|, with
/// zeta from the series heat solver.
double eta_heat_deviation(const SbmTrajectory& traj, double series_tol = 1e-15);

// ---------------------------------------------------------------------------
// Duality functional

struct DualityConfig {
  double b = 1.0;
  double theta = 1.0;
  double eps = 0.05;
  std::vector<double> T_grid{2.0, 5.0, 10.0};
  /// Spacing of the grid on which T* is searched; must be a multiple of dt.
  double search_step = 0.05;
  double dt = 2e-3;
  std::size_t replicas = 2000;
  std::uint64_t seed = 1;
};

struct DualityRow {
  double T;
  /// E exp(-<w_{T*}, w~_{T-T*}>).
  McEstimate pairing;
  /// E exp(-theta w_bar_T).
  McEstimate flat;
  /// Paired estimate of pairing - flat.
  McEstimate gap;
  /// theta (q_bar(T) - q_bar(T*)).
  double bound;
  bool pass;
};

struct DualityReport {
  double q_inf = 0.0;
  double T_star = 0.0;
  std::vector<double> q_grid_times;
  std::vector<double> q_bar;
  std::vector<DualityRow> rows;
  bool pass = false;
};

/// Requires <u0, 1> <= <v0, 1>.
DualityReport duality_functional_experiment(const Field& u0, const Field& v0,
                                            const DualityConfig& cfg);

// ---------------------------------------------------------------------------
// Coexistence and extinction

struct CoexistenceConfig {
  SbmParams params;
  std::vector<double> T_grid{5.0, 20.0, 50.0};
  /// Absolute mass threshold.
  double eps_mass = 0.05;
  std::size_t replicas = 1000;
  std::uint64_t seed = 1;
  /// When non-empty, <u_T, window> replaces u_bar_T (flat initial data).
  std::vector<double> window;
};

struct CoexistenceRow {
  double T;
  /// P{u_bar_T > eps and v_bar_T > eps}.
  McEstimate both_alive;
  /// P{u_bar_T > eps} (or P{<u_T, window> > eps}).
  McEstimate u_alive;
  McEstimate mean_u;
  McEstimate mean_v;
  /// max over replicas |(v_bar_T - u_bar_T) - (v_bar_0 - u_bar_0)|.
  double eta_mass_max_dev;
};

struct CoexistenceReport {
  std::vector<CoexistenceRow> rows;
  double u_bar_0 = 0.0;
  double v_bar_0 = 0.0;
  /// u_alive is nonincreasing along the grid.
  bool u_alive_nonincreasing = false;
};

CoexistenceReport coexistence_estimator(const Field& u0, const Field& v0,
                                        const CoexistenceConfig& cfg);

// ---------------------------------------------------------------------------
// Uniform integrability

struct UiConfig {
  SbmParams params;
  std::vector<double> T_grid{1.0, 2.0, 5.0};
  std::vector<double> cutoffs{1.0, 2.0, 4.0};
  std::size_t replicas = 2000;
  std::uint64_t seed = 1;
};

struct UiReport {
  /// tail[t][k] estimates E[u_bar_T 1{u_bar_T > K}] for T_grid[t], cutoffs[k].
  std::vector<std::vector<McEstimate>> tail;
  bool nonincreasing_in_K = false;
};

UiReport uniform_integrability_probe(const Field& u0, const Field& v0,
                                     const UiConfig& cfg);

struct PamMomentConfig {
  int d = 3;
  int L = 10;
  double theta = 1.0;
  double b = 1.0;
  double dt = 2e-3;
  std::vector<double> T_grid{1.0, 2.0, 3.0, 4.0, 5.0};
  std::size_t replicas = 400;
  std::uint64_t seed = 1;
};

/// E[w_T(0)^2] for PAM from flat theta, averaged over sites (all sites have
/// the same law).
std::vector<McEstimate> pam_second_moment_trend(const PamMomentConfig& cfg);

// ---------------------------------------------------------------------------
// Green's function oracle

struct GreenMcConfig {
  std::uint64_t walks = 4'000'000;
  /// Walks stop once |x| >= radius; the remaining expected visits are taken
  /// from the asymptotic Green's function 3 / (2 pi |x|).
  double radius = 10.0;
  std::uint64_t seed = 1;
  std::size_t chunks = 64;
};

/// Monte Carlo estimate of g(0,0) in d = 3 from occupation counts of
/// discrete-time simple random walks on Z^3. Each return to the origin is
/// replaced by its conditional probability given the previous position,
/// which keeps the mean and cuts the per-walk variance about fivefold.
McEstimate green_occupation_mc(const GreenMcConfig& cfg);

}  // namespace sbm
