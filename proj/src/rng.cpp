#include "sbm/rng.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include <boost/random/gamma_distribution.hpp>

namespace sbm {

std::pair<std::uint64_t, std::uint64_t> counter_bits(const StreamKey& key,
                                                     std::uint32_t a,
                                                     std::uint32_t b) noexcept {
  return counter_bits(key, a, b, static_cast<std::uint32_t>(key.stream));
}

std::pair<std::uint64_t, std::uint64_t> counter_bits(const StreamKey& key,
                                                     std::uint32_t a,
                                                     std::uint32_t b,
                                                     std::uint32_t word) noexcept {
  const Philox4x32::Counter ctr{a, b, key.replica, word};
  const Philox4x32::Key k{static_cast<std::uint32_t>(key.seed),
                          static_cast<std::uint32_t>(key.seed >> 32)};
  const auto out = Philox4x32::block(ctr, k);
  return {(static_cast<std::uint64_t>(out[0]) << 32) | out[1],
          (static_cast<std::uint64_t>(out[2]) << 32) | out[3]};
}

// noipa keeps callers that drop the sine from getting a cos-only copy:
// glibc's cos and sincos can differ in the last bit.
[[gnu::noipa]] std::pair<double, double> CounterGaussian::pair(std::uint64_t step,
                                                std::uint64_t site) const {
  const auto [x, y] = counter_bits(key_, static_cast<std::uint32_t>(site),
                                   static_cast<std::uint32_t>(step));
  const double r = std::sqrt(-2.0 * std::log(unit_open_closed(x)));
  const double a = 2.0 * std::numbers::pi * unit_closed_open(y);
  return {r * std::cos(a), r * std::sin(a)};
}

void CounterGaussian::fill(std::uint64_t step, std::span<double> xi,
                           std::span<double> xi_perp) const {
  if (step > 0xFFFFFFFFull || xi.size() > 0xFFFFFFFFull)
    throw std::out_of_range("CounterGaussian: step or site exceeds 32 bits");
  if (xi_perp.empty()) {
    // Same draws as the paired path, so xi does not depend on whether the
    // orthogonal component is requested.
    for (std::size_t i = 0; i < xi.size(); ++i) xi[i] = pair(step, i).first;
    return;
  }
  for (std::size_t i = 0; i < xi.size(); ++i) {
    const auto [a, b] = pair(step, i);
    xi[i] = a;
    xi_perp[i] = b;
  }
}

namespace {

// 64-bit words from consecutive blocks at a fixed (site, step). The block
// index goes in the upper 24 bits of the stream word.
class BlockEngine {
 public:
  using result_type = std::uint64_t;
  BlockEngine(const StreamKey& key, std::uint32_t site, std::uint32_t step)
      : key_(key), site_(site), step_(step) {}
  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }
  result_type operator()() {
    if (half_ == 0) {
      const std::uint32_t word = static_cast<std::uint32_t>(Stream::sbm_gamma) | (block_++ << 8);
      buf_ = counter_bits(key_, site_, step_, word);
      half_ = 2;
    }
    return half_-- == 2 ? buf_.first : buf_.second;
  }

 private:
  StreamKey key_;
  std::uint32_t site_, step_;
  std::uint32_t block_ = 0;
  int half_ = 0;
  std::pair<std::uint64_t, std::uint64_t> buf_{};
};

}  // namespace

double CounterGaussian::gamma(std::uint64_t step, std::uint64_t site, double shape) const {
  BlockEngine eng(key_, static_cast<std::uint32_t>(site), static_cast<std::uint32_t>(step));
  return boost::random::gamma_distribution<double>(shape, 1.0)(eng);
}

}  // namespace sbm
