#include <doctest.h>

#include <cmath>

#include "kccsd/errors.hpp"
#include "kccsd/mala.hpp"
#include "kccsd/models.hpp"

using namespace kccsd;

TEST_CASE("derive depends only on the parent key") {
  RandomStream a(42), b(42);
  for (int i = 0; i < 100; ++i) b.normal();
  CHECK(a.derive("x", 3).key() == b.derive("x", 3).key());
  CHECK(a.derive("x", 3).key() != a.derive("x", 4).key());
  CHECK(a.derive("x", 3).key() != a.derive("y", 3).key());
  CHECK(a.derive("x").derive("y").key() != a.derive("y").derive("x").key());
  RandomStream c = a.derive("x", 3), d = b.derive("x", 3);
  for (int i = 0; i < 10; ++i) CHECK(c.normal() == d.normal());
}

TEST_CASE("sibling streams are uncorrelated") {
  RandomStream root(7);
  for (std::uint64_t k = 0; k < 5; ++k) {
    RandomStream s = root.derive("a", k), t = root.derive("a", k + 1);
    const int n = 10000;
    double sx = 0, sy = 0, sxy = 0, sxx = 0, syy = 0;
    for (int i = 0; i < n; ++i) {
      const double x = s.normal(), y = t.normal();
      sx += x;
      sy += y;
      sxy += x * y;
      sxx += x * x;
      syy += y * y;
    }
    const double cov = sxy / n - sx / n * sy / n;
    const double rho = cov / std::sqrt((sxx / n - sx * sx / n / n) * (syy / n - sy * sy / n / n));
    CHECK(std::abs(rho) < 0.05);
  }
}

TEST_CASE("gaussian and rademacher moments") {
  RandomStream rs(3);
  Vector mean(1), var(1);
  mean << 3.0;
  var << 4.0;
  const auto draws = sample_gaussian(DiagonalGaussian(mean, var), 100000, rs);
  double s = 0, s2 = 0;
  for (const auto& v : draws) {
    s += v[0];
    s2 += v[0] * v[0];
  }
  const double m = s / draws.size();
  CHECK(std::abs(m - 3.0) < 4 * 2.0 / std::sqrt(1e5));
  CHECK(std::abs(s2 / draws.size() - m * m - 4.0) < 0.1);

  const auto signs = rademacher(100000, rs);
  long acc = 0;
  for (int e : signs) {
    CHECK((e == 1 || e == -1));
    acc += e;
  }
  CHECK(std::abs(double(acc) / 1e5) < 4.0 / std::sqrt(1e5));
}

namespace {
ScoredDensity std_normal_unnorm() {
  return unnormalized(
      1, [](const Vector& y) { return Vector(-y); },
      [](const Vector& y) { return -0.5 * y.squaredNorm(); });
}
}  // namespace

TEST_CASE("MALA targets a standard normal") {
  RandomStream rs(99);
  MalaConfig cfg{0.5, 40000, 1000};
  const MalaChain chain = mala_sample(std_normal_unnorm(), cfg, Vector::Zero(1), 20000, rs);
  REQUIRE(chain.samples.size() == 20000);
  double s = 0, s2 = 0;
  for (const auto& v : chain.samples) {
    s += v[0];
    s2 += v[0] * v[0];
  }
  const double m = s / 20000, var = s2 / 20000 - m * m;
  CHECK(std::abs(m) < 0.05);
  CHECK(std::abs(var - 1.0) < 0.1);
  // stationary acceptance for this target and step, integrated independently: 0.9209
  CHECK(std::abs(chain.acceptance_rate - 0.9209) < 0.01);
}

TEST_CASE("MALA with a vanishing step stays put") {
  RandomStream rs(1);
  Vector init(1);
  init << 5.0;
  const MalaChain chain = mala_sample(std_normal_unnorm(), {1e-10, 10, 0}, init, 10, rs);
  for (const auto& v : chain.samples) CHECK(std::abs(v[0] - 5.0) < 1e-3);
  CHECK(chain.acceptance_rate > 0.99);
}

TEST_CASE("MALA is deterministic and validates inputs") {
  RandomStream a(8), b(8);
  const auto ca = mala_sample(std_normal_unnorm(), {0.3, 20, 5}, Vector::Zero(1), 4, a);
  const auto cb = mala_sample(std_normal_unnorm(), {0.3, 20, 5}, Vector::Zero(1), 4, b);
  for (std::size_t i = 0; i < 4; ++i) CHECK(ca.samples[i] == cb.samples[i]);

  RandomStream rs(0);
  auto no_log = unnormalized(1, [](const Vector& y) { return Vector(-y); });
  CHECK_THROWS_AS(mala_sample(no_log, {}, Vector::Zero(1), 1, rs), CapabilityError);
  CHECK_THROWS_AS(mala_sample(std_normal_unnorm(), {0.5, 2, 0}, Vector::Zero(1), 3, rs),
                  ContractViolation);
  CHECK_THROWS_AS(mala_sample(std_normal_unnorm(), {-0.5, 10, 0}, Vector::Zero(1), 1, rs),
                  ContractViolation);
  Vector bad(1);
  bad << NAN;
  CHECK_THROWS_AS(mala_sample(std_normal_unnorm(), {}, bad, 1, rs), ContractViolation);
}
