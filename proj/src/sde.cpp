#include "sbm/sde.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace sbm {

namespace {

std::uint64_t steps_to(double T, double dt) {
  const double r = T / dt;
  const double n = std::round(r);
  if (std::abs(r - n) <= 1e-9 * std::max(1.0, n))
    return static_cast<std::uint64_t>(n);
  return static_cast<std::uint64_t>(std::ceil(r));
}

void check_finite(const Eigen::VectorXd& x, std::uint64_t step) {
  for (Index i = 0; i < x.size(); ++i)
    if (!std::isfinite(x[i])) throw NumericalBlowup(step, i);
}

void check_initial(const Field& u0, const Field& v0, const SbmParams& p) {
  require_same_geometry(u0, v0);
  require_nonnegative(u0, "initial u");
  require_nonnegative(v0, "initial v");
  if (p.bound_N) {
    const double N = *p.bound_N;
    if (u0.values().maxCoeff() > N || v0.values().maxCoeff() > N)
      throw ConfigError("initial state exceeds the bound N");
  }
}

}  // namespace

void SbmParams::validate() const {
  if (!(b >= 0.0) || !std::isfinite(b)) throw ConfigError("sbm: b must be >= 0");
  if (!(std::abs(rho) <= 1.0)) throw ConfigError("sbm: |rho| must be <= 1");
  if (!(dt > 0.0) || !(T >= dt) || dt > 1.0 || !std::isfinite(T))
    throw ConfigError("sbm: need 0 < dt <= min(1, T)");
  if (bound_N && !(*bound_N > 0.0)) throw ConfigError("sbm: N must be > 0");
  if (scheme == SbmScheme::gamma_split && (rho != 1.0 || bound_N))
    throw ConfigError("sbm: gamma-split needs rho = 1 and no bound N");
}

std::uint64_t SbmParams::step_count() const { return steps_to(T, dt); }

SbmState make_sbm_state(Field u0, Field v0, const SbmParams& params) {
  params.validate();
  check_initial(u0, v0, params);
  SbmState s{0.0, 0, std::move(u0), std::move(v0), std::nullopt};
  if (std::abs(params.rho) == 1.0)
    s.coupled = Field(s.u.geometry_ptr(), s.v.values() - params.rho * s.u.values());
  return s;
}

SbmStepper::SbmStepper(const SbmParams& params, const GaussianPairSource& noise)
    : params_(params), noise_(noise), unit_rho_(std::abs(params.rho) == 1.0) {
  params_.validate();
}

void SbmStepper::heat(const Geometry& g, const Eigen::VectorXd& in,
                      Eigen::VectorXd& out) {
  out.resize(in.size());
  if (params_.scheme != SbmScheme::truncated_euler)
    propagator_->apply_into(in.data(), out.data());
  else
    euler_heat_into(g, params_.dt, in.data(), out.data());
}

void SbmStepper::step(SbmState& s) {
  const Geometry& g = s.u.geometry();
  const Index n = g.site_count();
  if (params_.scheme != SbmScheme::truncated_euler &&
      (!propagator_ || propagator_->time() != params_.dt))
    propagator_.emplace(s.u.geometry_ptr(), params_.dt);
  if (unit_rho_ && !s.coupled)
    s.coupled = Field(s.u.geometry_ptr(), s.v.values() - params_.rho * s.u.values());

  const double b = params_.b;
  const double sdt = std::sqrt(params_.dt);
  const double N = params_.bound_N.value_or(std::numeric_limits<double>::infinity());
  const bool bounded = params_.bound_N.has_value();

  if (params_.scheme == SbmScheme::gamma_split) {
    gamma_step(s);
    return;
  }

  xi_.resize(n);
  xi_perp_.resize(unit_rho_ ? 0 : n);
  noise_.fill(s.step, {xi_.data(), static_cast<std::size_t>(n)},
              {xi_perp_.data(), static_cast<std::size_t>(xi_perp_.size())});

  heat(g, s.u.values(), u_h_);
  // Split-step evaluates the noise amplitude after the heat substep; Euler
  // evaluates it at the start of the step.
  const bool after = params_.scheme == SbmScheme::split_step;
  auto sigma = [&](double u, double v) {
    double amp = b * std::max(u, 0.0) * std::max(v, 0.0);
    if (bounded)
      amp *= std::clamp((1.0 - u / N) * (1.0 - v / N), 0.0, 1.0);
    return std::sqrt(amp);
  };

  if (unit_rho_) {
    const double rho = params_.rho;
    heat(g, s.coupled->values(), c_h_);
    auto& u = s.u.values();
    auto& v = s.v.values();
    for (Index i = 0; i < n; ++i) {
      const double c = c_h_[i];
      const double amp = after ? sigma(u_h_[i], c + rho * u_h_[i]) : sigma(u[i], v[i]);
      // u and v = c + rho u must both stay in [0, N].
      double lo, hi;
      if (rho > 0) {
        lo = std::max(0.0, -c);
        hi = std::min(N, N - c);
      } else {
        lo = std::max(0.0, c - N);
        hi = std::min(N, c);
      }
      const double un = u_h_[i] + amp * sdt * xi_[i];
      const double uc = std::clamp(un, lo, std::max(lo, hi));
      u[i] = std::isnan(un) ? un : uc;
      v[i] = c + rho * u[i];
    }
    s.coupled->values().swap(c_h_);
  } else {
    heat(g, s.v.values(), v_h_);
    const double rho = params_.rho;
    const double perp = std::sqrt(1.0 - rho * rho);
    auto& u = s.u.values();
    auto& v = s.v.values();
    for (Index i = 0; i < n; ++i) {
      const double amp = after ? sigma(u_h_[i], v_h_[i]) : sigma(u[i], v[i]);
      const double un = u_h_[i] + amp * sdt * xi_[i];
      const double vn = v_h_[i] + amp * sdt * (rho * xi_[i] + perp * xi_perp_[i]);
      u[i] = std::isnan(un) ? un : std::clamp(un, 0.0, N);
      v[i] = std::isnan(vn) ? vn : std::clamp(vn, 0.0, N);
    }
  }
  finish(s);
}

void SbmStepper::finish(SbmState& s) {
  ++s.step;
  s.t = static_cast<double>(s.step) * params_.dt;
  check_finite(s.u.values(), s.step);
  check_finite(s.v.values(), s.step);
}

void SbmStepper::gamma_step(SbmState& s) {
  const Geometry& g = s.u.geometry();
  heat(g, s.u.values(), u_h_);
  heat(g, s.coupled->values(), c_h_);
  auto& u = s.u.values();
  auto& v = s.v.values();
  for (Index i = 0; i < g.site_count(); ++i) {
    const double c = c_h_[i];
    const double m = std::max(0.0, c >= 0 ? u_h_[i] : u_h_[i] + c);
    // Conditional mean m and variance b m (m + |c|) dt.
    const double scale = params_.b * (m + std::abs(c)) * params_.dt;
    double mn = m;
    if (m > 0.0 && scale > 0.0) mn = scale * noise_.gamma(s.step, static_cast<std::uint64_t>(i), m / scale);
    u[i] = c >= 0 ? mn : mn - c;
    v[i] = c + u[i];
  }
  s.coupled->values().swap(c_h_);
  finish(s);
}

SbmState step_sbm(const SbmState& state, const SbmParams& params,
                  const GaussianPairSource& noise) {
  SbmState next = state;
  SbmStepper(params, noise).step(next);
  return next;
}

SbmState run_sbm(SbmState state, const SbmParams& params,
                 const GaussianPairSource& noise, const SbmObserver& observer) {
  SbmStepper stepper(params, noise);
  const std::uint64_t steps = params.step_count();
  if (observer) observer(state);
  while (state.step < steps) {
    stepper.step(state);
    if (observer) observer(state);
  }
  return state;
}

std::vector<std::uint64_t> snap_record_times(std::span<const double> times,
                                             double dt, double T) {
  const std::uint64_t last = steps_to(T, dt);
  std::vector<std::uint64_t> out;
  out.reserve(times.size());
  for (double t : times) {
    if (!(t >= 0.0) || t > T * (1.0 + 1e-12))
      throw ConfigError("record time outside [0, T]");
    out.push_back(std::min<std::uint64_t>(
        static_cast<std::uint64_t>(std::llround(t / dt)), last));
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

SbmTrajectory simulate_sbm(const Field& u0, const Field& v0,
                           const SbmParams& params, const StreamKey& key,
                           std::span<const double> record_times) {
  SbmState state = make_sbm_state(u0, v0, params);
  const auto record = snap_record_times(record_times, params.dt, params.T);
  SbmTrajectory traj;
  if (record.empty()) return traj;
  CounterGaussian noise(key);
  SbmStepper stepper(params, noise);
  std::size_t next = 0;
  while (true) {
    if (state.step == record[next]) {
      traj.snapshots.push_back(state);
      if (++next == record.size()) break;
    }
    stepper.step(state);
  }
  return traj;
}

SbmTrajectory simulate_sbm_bounded(const Field& u0, const Field& v0,
                                   const SbmParams& params,
                                   const StreamKey& key,
                                   std::span<const double> record_times) {
  if (!params.bound_N)
    throw ConfigError("simulate_sbm_bounded: bound_N must be set");
  return simulate_sbm(u0, v0, params, key, record_times);
}

void PamParams::validate() const {
  if (!(b >= 0.0) || !std::isfinite(b)) throw ConfigError("pam: b must be >= 0");
  if (!(dt > 0.0) || !(T >= dt) || dt > 1.0 || !std::isfinite(T))
    throw ConfigError("pam: need 0 < dt <= min(1, T)");
}

std::uint64_t PamParams::step_count() const { return steps_to(T, dt); }

PamStepper::PamStepper(const PamParams& params, const GaussianPairSource& noise)
    : params_(params), noise_(noise) {
  params_.validate();
}

void PamStepper::step(PamState& s) {
  const Geometry& g = s.w.geometry();
  const Index n = g.site_count();
  const double b = params_.b;
  const double dt = params_.dt;
  xi_.resize(n);
  scratch_.resize(n);
  noise_.fill(s.step, {xi_.data(), static_cast<std::size_t>(n)}, {});
  auto& w = s.w.values();
  if (params_.scheme == PamScheme::split_step) {
    const double vol = std::sqrt(b * dt);
    const double drift = -0.5 * b * dt;
    for (Index i = 0; i < n; ++i) w[i] *= std::exp(vol * xi_[i] + drift);
    euler_heat_into(g, dt, w.data(), scratch_.data());
    w.swap(scratch_);
  } else {
    euler_heat_into(g, dt, w.data(), scratch_.data());
    const double vol = std::sqrt(b * dt);
    for (Index i = 0; i < n; ++i) {
      const double x = scratch_[i] + vol * std::abs(w[i]) * xi_[i];
      w[i] = std::isnan(x) ? x : std::max(x, 0.0);
    }
  }
  ++s.step;
  s.t = static_cast<double>(s.step) * dt;
  check_finite(w, s.step);
}

PamState step_pam(const PamState& state, const PamParams& params,
                  const GaussianPairSource& noise) {
  PamState next = state;
  PamStepper(params, noise).step(next);
  return next;
}

PamState run_pam(PamState state, const PamParams& params,
                 const GaussianPairSource& noise, const PamObserver& observer) {
  PamStepper stepper(params, noise);
  const std::uint64_t steps = params.step_count();
  if (observer) observer(state);
  while (state.step < steps) {
    stepper.step(state);
    if (observer) observer(state);
  }
  return state;
}

PamTrajectory simulate_pam(const Field& w0, const PamParams& params,
                           const StreamKey& key,
                           std::span<const double> record_times) {
  params.validate();
  require_nonnegative(w0, "initial w");
  const auto record = snap_record_times(record_times, params.dt, params.T);
  PamTrajectory traj;
  if (record.empty()) return traj;
  PamState state{0.0, 0, w0};
  CounterGaussian noise(key);
  PamStepper stepper(params, noise);
  std::size_t next = 0;
  while (true) {
    if (state.step == record[next]) {
      traj.snapshots.push_back(state);
      if (++next == record.size()) break;
    }
    stepper.step(state);
  }
  return traj;
}

}  // namespace sbm
