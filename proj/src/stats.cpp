#include "sbm/stats.hpp"

#include <boost/math/distributions/normal.hpp>

#include <cmath>

#include "sbm/errors.hpp"

namespace sbm {

double pairwise_sum(std::span<const double> x) {
  constexpr std::size_t kBlock = 32;
  if (x.size() <= kBlock) {
    double s = 0.0;
    for (double v : x) s += v;
    return s;
  }
  const std::size_t half = x.size() / 2;
  return pairwise_sum(x.first(half)) + pairwise_sum(x.subspan(half));
}

void MomentAccumulator::add(double x) {
  ++n_;
  const double delta = x - mean_;
  mean_ += delta / static_cast<double>(n_);
  m2_ += delta * (x - mean_);
}

void MomentAccumulator::merge(const MomentAccumulator& other) {
  if (other.n_ == 0) return;
  if (n_ == 0) {
    *this = other;
    return;
  }
  const double na = static_cast<double>(n_);
  const double nb = static_cast<double>(other.n_);
  const double n = na + nb;
  const double delta = other.mean_ - mean_;
  mean_ += delta * nb / n;
  m2_ += other.m2_ + delta * delta * na * nb / n;
  n_ += other.n_;
}

double MomentAccumulator::variance() const noexcept {
  return n_ < 2 ? 0.0 : m2_ / static_cast<double>(n_ - 1);
}

double normal_critical_value(double level) {
  if (!(level > 0.0 && level < 1.0))
    throw ConfigError("confidence level must be in (0, 1)");
  const boost::math::normal_distribution<double> z;
  return boost::math::quantile(z, 0.5 + 0.5 * level);
}

namespace {

McEstimate finish(double mean, double variance, std::uint64_t n, double level,
                  std::uint64_t seed) {
  McEstimate e;
  e.mean = mean;
  e.variance = variance;
  e.n_replicas = n;
  e.std_error = n > 0 ? std::sqrt(variance / static_cast<double>(n)) : 0.0;
  const double half = normal_critical_value(level) * e.std_error;
  e.ci_low = mean - half;
  e.ci_high = mean + half;
  e.level = level;
  e.seed = seed;
  return e;
}

}  // namespace

McEstimate MomentAccumulator::estimate(double level, std::uint64_t seed) const {
  return finish(mean_, variance(), n_, level, seed);
}

McEstimate estimate(std::span<const double> samples, double level,
                    std::uint64_t seed) {
  const std::size_t n = samples.size();
  if (n == 0) return finish(0.0, 0.0, 0, level, seed);
  const double mean = pairwise_sum(samples) / static_cast<double>(n);
  std::vector<double> sq;
  sq.reserve(n);
  for (double x : samples) sq.push_back((x - mean) * (x - mean));
  const double var = n < 2 ? 0.0 : pairwise_sum(sq) / static_cast<double>(n - 1);
  return finish(mean, var, n, level, seed);
}

double combined_se(const McEstimate& a, const McEstimate& b) {
  return std::sqrt(a.std_error * a.std_error + b.std_error * b.std_error);
}

}  // namespace sbm
