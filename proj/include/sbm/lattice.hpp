#pragma once

// Periodic box (torus) of side L in d dimensions, fields over its sites,
// the nearest-neighbour Laplacian and the rate-1 random walk semigroup.

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <memory>
#include <span>
#include <utility>
#include <vector>

#include "sbm/errors.hpp"

namespace sbm {

using Index = Eigen::Index;

class Geometry {
 public:
  static constexpr int kMaxDim = 4;

  Geometry(int d, int L);

  int dim() const noexcept { return d_; }
  int side() const noexcept { return L_; }
  Index site_count() const noexcept { return n_; }
  int degree() const noexcept { return 2 * d_; }

  /// Neighbours of `site`, ordered (+e_0, -e_0, +e_1, -e_1, ...). Entries may
  /// repeat when L <= 2.
  std::span<const Index> neighbors(Index site) const noexcept {
    return {nbr_.data() + site * degree(), static_cast<std::size_t>(degree())};
  }
  const std::vector<Index>& neighbor_table() const noexcept { return nbr_; }

  /// Row-major linearisation, coordinates taken modulo L (negatives wrap).
  Index site_of(std::span<const long> coords) const;
  std::vector<long> coords_of(Index site) const;

  Index origin() const noexcept { return 0; }
  /// Site at +-e_axis from the origin.
  Index unit(int axis, int sign = 1) const;

 private:
  int d_;
  int L_;
  Index n_;
  std::vector<Index> nbr_;
};

using GeometryPtr = std::shared_ptr<const Geometry>;

/// Throws ConfigError unless 1 <= d <= 4 and L >= 1.
GeometryPtr make_geometry(int d, int L);

template <typename Scalar>
class BasicField {
 public:
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  explicit BasicField(GeometryPtr geometry)
      : geometry_(std::move(geometry)),
        values_(Vector::Zero(geometry_->site_count())) {}

  BasicField(GeometryPtr geometry, Vector values)
      : geometry_(std::move(geometry)), values_(std::move(values)) {
    if (values_.size() != geometry_->site_count())
      throw ConfigError("field size does not match geometry site count");
  }

  static BasicField constant(GeometryPtr geometry, Scalar c) {
    const Index n = geometry->site_count();
    return BasicField(std::move(geometry), Vector::Constant(n, c));
  }

  static BasicField point_mass(GeometryPtr geometry, Index site,
                               Scalar mass = Scalar(1)) {
    BasicField f(std::move(geometry));
    f.values_[site] = mass;
    return f;
  }

  const Geometry& geometry() const noexcept { return *geometry_; }
  const GeometryPtr& geometry_ptr() const noexcept { return geometry_; }
  const Vector& values() const noexcept { return values_; }
  Vector& values() noexcept { return values_; }
  Index size() const noexcept { return values_.size(); }

  Scalar operator[](Index i) const { return values_[i]; }
  Scalar& operator[](Index i) { return values_[i]; }

  bool is_finite() const { return values_.allFinite(); }
  bool is_nonnegative() const { return (values_.array() >= Scalar(0)).all(); }

 private:
  GeometryPtr geometry_;
  Vector values_;
};

using Field = BasicField<double>;

template <typename Scalar>
void require_same_geometry(const BasicField<Scalar>& a,
                           const BasicField<Scalar>& b) {
  const auto& ga = a.geometry();
  const auto& gb = b.geometry();
  if (ga.dim() != gb.dim() || ga.side() != gb.side())
    throw ConfigError("fields live on different geometries");
}

template <typename Scalar>
void require_nonnegative(const BasicField<Scalar>& f, const char* what) {
  if (!f.is_finite() || !f.is_nonnegative())
    throw ConfigError(std::string(what) + " must be finite and nonnegative");
}

/// <phi, 1>
template <typename Scalar>
Scalar total(const BasicField<Scalar>& f) {
  return f.values().sum();
}

/// <phi, psi>
template <typename Scalar>
Scalar pairing(const BasicField<Scalar>& a, const BasicField<Scalar>& b) {
  require_same_geometry(a, b);
  return a.values().dot(b.values());
}

template <typename Scalar>
BasicField<Scalar> positive_part(const BasicField<Scalar>& f) {
  return {f.geometry_ptr(), f.values().cwiseMax(Scalar(0))};
}

template <typename Scalar>
BasicField<Scalar> negative_part(const BasicField<Scalar>& f) {
  return {f.geometry_ptr(), (-f.values()).cwiseMax(Scalar(0))};
}

// Raw kernels. `in` and `out` must not alias.

/// out = Delta in, Delta phi(i) = (1/2d) sum_{j~i} (phi(j) - phi(i)).
template <typename Scalar>
void laplacian_into(const Geometry& g, const Scalar* in, Scalar* out) {
  const int deg = g.degree();
  const Scalar inv = Scalar(1) / Scalar(deg);
  const Index* nbr = g.neighbor_table().data();
  for (Index i = 0, n = g.site_count(); i < n; ++i, nbr += deg) {
    Scalar acc(0);
    const Scalar here = in[i];
    for (int k = 0; k < deg; ++k) acc += in[nbr[k]] - here;
    out[i] = acc * inv;
  }
}

/// out = in + h * Delta in (one explicit Euler heat step; h = 1 gives the
/// one-step walk operator P = I + Delta).
template <typename Scalar>
void euler_heat_into(const Geometry& g, Scalar h, const Scalar* in,
                     Scalar* out) {
  const int deg = g.degree();
  const Scalar scale = h / Scalar(deg);
  const Index* nbr = g.neighbor_table().data();
  for (Index i = 0, n = g.site_count(); i < n; ++i, nbr += deg) {
    Scalar acc(0);
    const Scalar here = in[i];
    for (int k = 0; k < deg; ++k) acc += in[nbr[k]] - here;
    out[i] = here + scale * acc;
  }
}

template <typename Scalar>
BasicField<Scalar> laplacian(const BasicField<Scalar>& phi) {
  BasicField<Scalar> out(phi.geometry_ptr());
  laplacian_into(phi.geometry(), phi.values().data(), out.values().data());
  return out;
}

template <typename Scalar>
BasicField<Scalar> euler_heat_step(const BasicField<Scalar>& phi, Scalar h) {
  BasicField<Scalar> out(phi.geometry_ptr());
  euler_heat_into(phi.geometry(), h, phi.values().data(),
                  out.values().data());
  return out;
}

/// Poisson(t) weights w_0..w_N, truncated once the remaining tail mass is
/// below `tol` and renormalised to sum to one.
std::vector<double> poisson_weights(double t, double tol);

/// P_t for one fixed t, applied as e^{-t} sum_n t^n/n! P^n.
class HeatPropagator {
 public:
  HeatPropagator(GeometryPtr geometry, double t, double tol = 1e-17);

  double time() const noexcept { return t_; }
  std::size_t terms() const noexcept { return weights_.size(); }

  /// Not safe for concurrent use: scratch buffers are owned by the instance.
  void apply_into(const double* in, double* out) const;

 private:
  GeometryPtr geometry_;
  double t_;
  std::vector<double> weights_;
  mutable std::vector<double> scratch_a_;
  mutable std::vector<double> scratch_b_;
};

enum class HeatMethod { series, euler };

struct HeatOptions {
  HeatMethod method = HeatMethod::series;
  /// Poisson tail mass dropped by the series.
  double tol = 1e-14;
  /// Largest Euler step (must be <= 1 for stability).
  double euler_dt = 1e-3;
};

/// P_t phi(i) = E[phi(Z_t) | Z_0 = i] for the rate-1 simple random walk.
template <typename Scalar>
BasicField<Scalar> heat_semigroup_apply(const BasicField<Scalar>& phi, double t,
                                        const HeatOptions& opts = {}) {
  if (!(t >= 0.0) || !std::isfinite(t))
    throw ConfigError("heat_semigroup_apply: t must be finite and >= 0");
  if (!(opts.tol > 0.0)) throw ConfigError("heat_semigroup_apply: tol must be > 0");
  if (t == 0.0) return phi;
  const Geometry& g = phi.geometry();
  BasicField<Scalar> out(phi.geometry_ptr());
  if (opts.method == HeatMethod::euler) {
    if (!(opts.euler_dt > 0.0) || opts.euler_dt > 1.0)
      throw ConfigError("heat_semigroup_apply: euler_dt must be in (0, 1]");
    const auto steps = static_cast<std::int64_t>(std::ceil(t / opts.euler_dt));
    const Scalar h(t / static_cast<double>(steps));
    typename BasicField<Scalar>::Vector cur = phi.values();
    typename BasicField<Scalar>::Vector nxt(cur.size());
    for (std::int64_t s = 0; s < steps; ++s) {
      euler_heat_into(g, h, cur.data(), nxt.data());
      cur.swap(nxt);
    }
    out.values() = std::move(cur);
    return out;
  }
  const std::vector<double> w = poisson_weights(t, opts.tol);
  typename BasicField<Scalar>::Vector cur = phi.values();
  typename BasicField<Scalar>::Vector nxt(cur.size());
  out.values() = Scalar(w[0]) * cur;
  for (std::size_t k = 1; k < w.size(); ++k) {
    euler_heat_into(g, Scalar(1), cur.data(), nxt.data());
    cur.swap(nxt);
    out.values() += Scalar(w[k]) * cur;
  }
  return out;
}

/// Discrete-time return probabilities p^n(0,0), n = 0..max_steps, of the
/// simple random walk on Z^d.
std::vector<double> return_probabilities(int d, int max_steps);

struct GreenResult {
  double value;
  /// Exact head sum_{n <= steps} p^n(0,0).
  double head;
  /// Local-CLT estimate of the omitted tail.
  double tail;
  /// Bound on the error of `tail`.
  double tail_error;
  int steps;
};

/// g(0,0) = sum_n p^n(0,0) on Z^d, d >= 3, with the remainder after the
/// truncation replaced by its local-CLT asymptotics. The truncation grows
/// until the tail error bound is below `tail_tol`.
GreenResult green_origin_detailed(int d, double tail_tol = 1e-7);
double green_origin(int d, double tail_tol = 1e-7);

/// 2 / g(0,0): the second-moment threshold of the parabolic Anderson model.
double b2(int d, double tail_tol = 1e-7);

}  // namespace sbm
