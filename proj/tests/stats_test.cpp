#include <doctest.h>

#include <atomic>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "sbm/parallel.hpp"
#include "sbm/stats.hpp"

using namespace sbm;

TEST_CASE("pairwise sum") {
  std::vector<double> x(1000, 0.1);
  CHECK(pairwise_sum(x) == doctest::Approx(100.0).epsilon(1e-14));
  CHECK(pairwise_sum(std::span<const double>{}) == 0.0);
}

TEST_CASE("welford matches the two-pass estimate") {
  std::vector<double> x;
  for (int i = 0; i < 257; ++i) x.push_back(std::sin(i) * 10.0 + 1e6);
  MomentAccumulator acc;
  for (double v : x) acc.add(v);
  const McEstimate e = estimate(x);
  CHECK(acc.mean() == doctest::Approx(e.mean).epsilon(1e-14));
  CHECK(acc.variance() == doctest::Approx(e.variance).epsilon(1e-9));
}

TEST_CASE("merging batches equals one pass") {
  std::vector<double> x;
  for (int i = 0; i < 100; ++i) x.push_back(std::cos(0.3 * i));
  MomentAccumulator all, a, b;
  for (int i = 0; i < 100; ++i) {
    all.add(x[i]);
    (i < 37 ? a : b).add(x[i]);
  }
  a.merge(b);
  CHECK(a.count() == 100);
  CHECK(a.mean() == doctest::Approx(all.mean()).epsilon(1e-14));
  CHECK(a.m2() == doctest::Approx(all.m2()).epsilon(1e-12));
  MomentAccumulator empty;
  empty.merge(all);
  CHECK(empty.mean() == all.mean());
}

TEST_CASE("confidence intervals") {
  CHECK(normal_critical_value(0.95) == doctest::Approx(1.959964).epsilon(1e-6));
  const std::vector<double> x{1, 2, 3, 4};
  const McEstimate e = estimate(x, 0.95, 42);
  CHECK(e.mean == 2.5);
  CHECK(e.variance == doctest::Approx(5.0 / 3.0));
  CHECK(e.std_error == doctest::Approx(std::sqrt(5.0 / 12.0)));
  CHECK(e.ci_high - e.mean == doctest::Approx(1.959964 * e.std_error).epsilon(1e-6));
  CHECK(e.seed == 42);
  CHECK(combined_se(e, e) == doctest::Approx(std::sqrt(2.0) * e.std_error));
}

TEST_CASE("parallel replicas are independent of the thread count") {
  auto fn = [](std::size_t k) { return static_cast<double>(k * k); };
  const auto one = parallel_replicas<double>(50, fn, 1);
  const auto four = parallel_replicas<double>(50, fn, 4);
  CHECK(one == four);
  CHECK(one[7] == 49.0);
}

TEST_CASE("parallel replicas rethrow the lowest failing index") {
  auto fn = [](std::size_t k) -> int {
    if (k == 3 || k == 8) throw std::runtime_error(std::to_string(k));
    return 0;
  };
  try {
    parallel_replicas<int>(10, fn, 1);
    FAIL("expected an exception");
  } catch (const std::runtime_error& e) {
    CHECK(std::string(e.what()) == "3");
  }
}
