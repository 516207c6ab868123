#include "sbm/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace sbm {

Geometry::Geometry(int d, int L) : d_(d), L_(L), n_(1) {
  if (d < 1 || d > kMaxDim)
    throw ConfigError("geometry: dimension must be in [1, 4], got " +
                      std::to_string(d));
  if (L < 1) throw ConfigError("geometry: side length must be >= 1");
  for (int k = 0; k < d; ++k) n_ *= L;
  nbr_.resize(static_cast<std::size_t>(n_ * degree()));
  std::vector<long> c;
  for (Index s = 0; s < n_; ++s) {
    c = coords_of(s);
    for (int axis = 0; axis < d; ++axis) {
      for (int sign : {+1, -1}) {
        c[axis] += sign;
        nbr_[s * degree() + 2 * axis + (sign > 0 ? 0 : 1)] = site_of(c);
        c[axis] -= sign;
      }
    }
  }
}

Index Geometry::site_of(std::span<const long> coords) const {
  if (static_cast<int>(coords.size()) != d_)
    throw ConfigError("geometry: coordinate arity does not match dimension");
  Index s = 0;
  for (long x : coords) {
    long r = x % L_;
    if (r < 0) r += L_;
    s = s * L_ + r;
  }
  return s;
}

std::vector<long> Geometry::coords_of(Index site) const {
  std::vector<long> c(static_cast<std::size_t>(d_));
  for (int axis = d_ - 1; axis >= 0; --axis) {
    c[axis] = static_cast<long>(site % L_);
    site /= L_;
  }
  return c;
}

Index Geometry::unit(int axis, int sign) const {
  if (axis < 0 || axis >= d_) throw ConfigError("geometry: axis out of range");
  std::vector<long> c(static_cast<std::size_t>(d_), 0);
  c[axis] = sign;
  return site_of(c);
}

GeometryPtr make_geometry(int d, int L) {
  return std::make_shared<const Geometry>(d, L);
}

std::vector<double> poisson_weights(double t, double tol) {
  if (!(t >= 0.0) || !std::isfinite(t))
    throw ConfigError("poisson_weights: t must be finite and >= 0");
  if (!(tol > 0.0)) throw ConfigError("poisson_weights: tol must be > 0");
  std::vector<double> w;
  if (t == 0.0) return {1.0};
  const double log_t = std::log(t);
  for (int n = 0;; ++n) {
    w.push_back(std::exp(-t + n * log_t - std::lgamma(n + 1.0)));
    // For n + 2 > t the tail beyond n is dominated by a geometric series.
    const double next = std::exp(-t + (n + 1) * log_t - std::lgamma(n + 2.0));
    if (n + 2 > t) {
      const double tail = next / (1.0 - t / (n + 2.0));
      if (tail < tol) break;
    }
  }
  double s = 0.0;
  for (double x : w) s += x;
  for (double& x : w) x /= s;
  return w;
}

HeatPropagator::HeatPropagator(GeometryPtr geometry, double t, double tol)
    : geometry_(std::move(geometry)), t_(t), weights_(poisson_weights(t, tol)) {}

void HeatPropagator::apply_into(const double* in, double* out) const {
  const Index n = geometry_->site_count();
  scratch_a_.resize(static_cast<std::size_t>(n));
  scratch_b_.resize(static_cast<std::size_t>(n));
  double* cur = scratch_a_.data();
  double* nxt = scratch_b_.data();
  const double w0 = weights_[0];
  for (Index i = 0; i < n; ++i) {
    cur[i] = in[i];
    out[i] = w0 * in[i];
  }
  for (std::size_t k = 1; k < weights_.size(); ++k) {
    euler_heat_into(*geometry_, 1.0, cur, nxt);
    std::swap(cur, nxt);
    const double w = weights_[k];
    for (Index i = 0; i < n; ++i) out[i] += w * cur[i];
  }
}

std::vector<double> return_probabilities(int d, int max_steps) {
  if (d < 1) throw ConfigError("return_probabilities: d must be >= 1");
  if (max_steps < 0) throw ConfigError("return_probabilities: max_steps < 0");
  const auto N = static_cast<std::size_t>(max_steps);
  // One-dimensional walk: C(n, n/2) 2^{-n} for even n.
  std::vector<double> one(N + 1, 0.0);
  one[0] = 1.0;
  for (std::size_t n = 2; n <= N; n += 2)
    one[n] = one[n - 2] * static_cast<double>(n - 1) / static_cast<double>(n);
  std::vector<double> log_fact(N + 1);
  for (std::size_t n = 0; n <= N; ++n) log_fact[n] = std::lgamma(n + 1.0);

  // A walk on Z^k moves its first coordinate on a Binomial(n, 1/k) number of
  // the n steps; the rest is a walk on Z^{k-1}.
  std::vector<double> cur = one;
  for (int k = 2; k <= d; ++k) {
    const double lp = std::log(1.0 / k);
    const double lq = std::log(1.0 - 1.0 / k);
    std::vector<double> next(N + 1, 0.0);
    for (std::size_t n = 0; n <= N; n += 2) {
      double acc = 0.0;
      for (std::size_t j = 0; j <= n; j += 2) {
        const double lb = log_fact[n] - log_fact[j] - log_fact[n - j] +
                          static_cast<double>(j) * lp +
                          static_cast<double>(n - j) * lq;
        acc += std::exp(lb) * one[j] * cur[n - j];
      }
      next[n] = acc;
    }
    cur = std::move(next);
  }
  return cur;
}

namespace {

// sum_{m > M} m^{-s} by Euler-Maclaurin; accurate to O(M^{-s-5}).
double hurwitz_tail(double s, double M) {
  return std::pow(M, 1.0 - s) / (s - 1.0) - 0.5 * std::pow(M, -s) +
         s * std::pow(M, -s - 1.0) / 12.0 -
         s * (s + 1.0) * (s + 2.0) * std::pow(M, -s - 3.0) / 720.0;
}

}  // namespace

GreenResult green_origin_detailed(int d, double tail_tol) {
  if (d < 1 || d > Geometry::kMaxDim)
    throw ConfigError("green_origin: dimension must be in [1, 4]");
  if (d <= 2) throw RecurrentWalkError(d);
  if (!(tail_tol > 0.0)) throw ConfigError("green_origin: tail_tol must be > 0");

  const double s = d / 2.0;
  // Local CLT for the period-2 walk: p^{2m}(0,0) ~ 2 (d / (4 pi m))^{d/2}.
  const double lclt_c = 2.0 * std::pow(d / (4.0 * std::numbers::pi), s);
  auto lclt = [&](double m) { return lclt_c * std::pow(m, -s); };

  constexpr int kMaxSteps = 1 << 15;
  GreenResult res{};
  for (int steps = 256;; steps *= 2) {
    const std::vector<double> p = return_probabilities(d, steps);
    double head = 0.0;
    for (double x : p) head += x;
    const int M = steps / 2;
    // Relative deviation from the local CLT behaves like a/m + b/m^2.
    const double a_full = M * (p[2 * M] / lclt(M) - 1.0);
    const double a_half = (M / 2) * (p[M] / lclt(M / 2) - 1.0);
    const double tail = lclt_c * (hurwitz_tail(s, M) + a_full * hurwitz_tail(s + 1.0, M));
    const double err = 2.0 * std::abs(a_full - a_half) * lclt_c * hurwitz_tail(s + 1.0, M);
    res = GreenResult{head + tail, head, tail, err, steps};
    if (err <= tail_tol || steps >= kMaxSteps) break;
  }
  return res;
}

double green_origin(int d, double tail_tol) {
  return green_origin_detailed(d, tail_tol).value;
}

double b2(int d, double tail_tol) { return 2.0 / green_origin(d, tail_tol); }

}  // namespace sbm
