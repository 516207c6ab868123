#pragma once

// Monte Carlo summaries: streaming moments with exact batch merging and
// normal-approximation confidence intervals.

#include <cstdint>
#include <span>
#include <vector>

namespace sbm {

struct McEstimate {
  double mean = 0.0;
  /// Unbiased sample variance.
  double variance = 0.0;
  std::uint64_t n_replicas = 0;
  double std_error = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  double level = 0.95;
  std::uint64_t seed = 0;
};

/// Sum with O(log n) rounding growth.
double pairwise_sum(std::span<const double> x);

/// Welford accumulator; merge() uses the Chan et al. update so pooling two
/// batches gives the same moments as one pass over both.
class MomentAccumulator {
 public:
  void add(double x);
  void merge(const MomentAccumulator& other);

  std::uint64_t count() const noexcept { return n_; }
  double mean() const noexcept { return mean_; }
  double m2() const noexcept { return m2_; }
  /// Unbiased variance; 0 when count() < 2.
  double variance() const noexcept;

  McEstimate estimate(double level = 0.95, std::uint64_t seed = 0) const;

 private:
  std::uint64_t n_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
};

/// Two-sided standard normal quantile for a central interval of `level`.
double normal_critical_value(double level);

/// Estimate from a complete sample (pairwise-summed mean, two-pass variance).
McEstimate estimate(std::span<const double> samples, double level = 0.95,
                    std::uint64_t seed = 0);

/// sqrt(a.se^2 + b.se^2), the standard error of a difference of independent
/// estimates.
double combined_se(const McEstimate& a, const McEstimate& b);

/// Samples f(x_k) for every sample x_k.
template <typename F>
std::vector<double> map_samples(std::span<const double> x, F&& f) {
  std::vector<double> out;
  out.reserve(x.size());
  for (double v : x) out.push_back(f(v));
  return out;
}

}  // namespace sbm
