#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace sbm {

/// Invalid parameters, malformed input or violated preconditions.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// The simple random walk is recurrent in d <= 2, so g(0,0) diverges.
class RecurrentWalkError : public std::domain_error {
 public:
  explicit RecurrentWalkError(int d)
      : std::domain_error("random walk in d=" + std::to_string(d) +
                          " is recurrent; the Green's function diverges"),
        dim_(d) {}
  int dim() const noexcept { return dim_; }

 private:
  int dim_;
};

class QuadratureError : public std::runtime_error {
 public:
  QuadratureError(double residual, double t, std::int64_t site)
      : std::runtime_error("compensator residual " + std::to_string(residual) +
                           " at t=" + std::to_string(t) +
                           ", site=" + std::to_string(site)),
        residual_(residual), t_(t), site_(site) {}
  double residual() const noexcept { return residual_; }
  double time() const noexcept { return t_; }
  std::int64_t site() const noexcept { return site_; }

 private:
  double residual_;
  double t_;
  std::int64_t site_;
};

class NumericalBlowup : public std::runtime_error {
 public:
  NumericalBlowup(std::uint64_t step, std::int64_t site)
      : std::runtime_error("non-finite value at step " + std::to_string(step) +
                           ", site " + std::to_string(site)),
        step_(step), site_(site) {}
  std::uint64_t step() const noexcept { return step_; }
  std::int64_t site() const noexcept { return site_; }

 private:
  std::uint64_t step_;
  std::int64_t site_;
};

}  // namespace sbm
