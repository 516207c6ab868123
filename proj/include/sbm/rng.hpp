#pragma once

// Counter-based random numbers. Every draw is a pure function of
// (seed, stream, replica, step, site), so trajectories are reproducible and
// replicas can run in any order.

#include <array>
#include <cstdint>
#include <span>
#include <utility>

namespace sbm {

/// Philox4x32-10 block cipher (Salmon et al., Random123).
struct Philox4x32 {
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static Counter block(Counter ctr, Key key) noexcept {
    constexpr std::uint32_t kM0 = 0xD2511F53u, kM1 = 0xCD9E8D57u;
    constexpr std::uint32_t kW0 = 0x9E3779B9u, kW1 = 0xBB67AE85u;
    for (int r = 0; r < 10; ++r) {
      if (r > 0) {
        key[0] += kW0;
        key[1] += kW1;
      }
      const std::uint64_t p0 = static_cast<std::uint64_t>(kM0) * ctr[0];
      const std::uint64_t p1 = static_cast<std::uint64_t>(kM1) * ctr[2];
      ctr = {static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ key[0],
             static_cast<std::uint32_t>(p1),
             static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ key[1],
             static_cast<std::uint32_t>(p0)};
    }
    return ctr;
  }
};

/// Fixed stream identifiers so independent processes inside one experiment
/// never share draws.
enum class Stream : std::uint32_t {
  sbm = 1,
  pam = 2,
  pam_dual = 3,
  particle = 4,
  walk = 5,
  sbm_gamma = 6,
};

struct StreamKey {
  std::uint64_t seed = 0;
  Stream stream = Stream::sbm;
  std::uint32_t replica = 0;
};

/// Uniform on [0, 1) with 53 random bits.
inline double unit_closed_open(std::uint64_t x) noexcept {
  return static_cast<double>(x >> 11) * 0x1.0p-53;
}
/// Uniform on (0, 1].
inline double unit_open_closed(std::uint64_t x) noexcept {
  return static_cast<double>((x >> 11) + 1) * 0x1.0p-53;
}

/// Two 64-bit words from one Philox block.
std::pair<std::uint64_t, std::uint64_t> counter_bits(const StreamKey& key,
                                                     std::uint32_t a,
                                                     std::uint32_t b) noexcept;

/// Philox block with an explicit fourth counter word.
std::pair<std::uint64_t, std::uint64_t> counter_bits(const StreamKey& key,
                                                     std::uint32_t a,
                                                     std::uint32_t b,
                                                     std::uint32_t word) noexcept;

/// Source of one independent standard Gaussian pair per site per step, plus
/// one Gamma variate per site per step for the Gamma noise substep.
class GaussianPairSource {
 public:
  virtual ~GaussianPairSource() = default;
  /// Fills xi[i] (and xi_perp[i] when non-empty) for every site at `step`.
  virtual void fill(std::uint64_t step, std::span<double> xi,
                    std::span<double> xi_perp) const = 0;
  /// Gamma(shape, 1) variate for (step, site); shape > 0.
  virtual double gamma(std::uint64_t step, std::uint64_t site, double shape) const = 0;
};

/// Box-Muller on a Philox block keyed by (seed, stream, replica, step, site).
class CounterGaussian final : public GaussianPairSource {
 public:
  explicit CounterGaussian(StreamKey key) : key_(key) {}

  std::pair<double, double> pair(std::uint64_t step, std::uint64_t site) const;
  void fill(std::uint64_t step, std::span<double> xi,
            std::span<double> xi_perp) const override;
  /// Drawn from the sbm_gamma stream with the same seed and replica, so it
  /// never shares blocks with the Gaussians.
  double gamma(std::uint64_t step, std::uint64_t site, double shape) const override;

  const StreamKey& key() const noexcept { return key_; }

 private:
  StreamKey key_;
};

}  // namespace sbm
