#include <doctest.h>

#include <cmath>

#include "kccsd/errors.hpp"
#include "kccsd/models.hpp"
#include "oracles.hpp"

using namespace kccsd;

namespace {
Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}
}  // namespace

TEST_CASE("gaussian score examples") {
  DiagonalGaussian std1(vec({0.0}), vec({1.0}));
  CHECK(gaussian_score(std1, vec({0.0}))[0] == 0.0);

  DiagonalGaussian g(vec({1.0}), vec({4.0}));
  CHECK(gaussian_score(g, vec({3.0}))[0] == doctest::Approx(-0.5));

  DiagonalGaussian g2(vec({0.0, 0.0}), vec({1.0, 2.0}));
  const Vector s = gaussian_score(g2, vec({1.0, 1.0}));
  CHECK(s[0] == doctest::Approx(-1.0));
  CHECK(s[1] == doctest::Approx(-0.5));

  CHECK_THROWS_AS(gaussian_score(g2, vec({1.0})), ContractViolation);
}

TEST_CASE("invalid gaussians are rejected") {
  CHECK_THROWS_AS(DiagonalGaussian(vec({0.0}), vec({0.0})), ContractViolation);
  CHECK_THROWS_AS(DiagonalGaussian(vec({0.0}), vec({-1.0})), ContractViolation);
  CHECK_THROWS_AS(DiagonalGaussian(vec({0.0, 1.0}), vec({1.0})), ContractViolation);
  CHECK_THROWS_AS(DiagonalGaussian(Vector(0), Vector(0)), ContractViolation);
  CHECK_THROWS_AS(DiagonalGaussian(vec({NAN}), vec({1.0})), ContractViolation);
}

TEST_CASE("score is the gradient of the log density") {
  RandomStream rs(11);
  for (int t = 0; t < 100; ++t) {
    const Eigen::Index d = 1 + t % 4;
    Vector mean(d), var(d), y(d);
    for (Eigen::Index i = 0; i < d; ++i) {
      mean[i] = rs.uniform(-3, 3);
      var[i] = rs.uniform(0.2, 4);
      y[i] = rs.uniform(-3, 3);
    }
    DiagonalGaussian g(mean, var);
    const Vector fd = oracle::gradient(
        [&](const Vector& z) { return oracle::gaussian_log_density(mean, var, z); }, y);
    const Vector s = gaussian_score(g, y);
    CHECK((s - fd).norm() <= 1e-5 * std::max(1.0, s.norm()));
    CHECK(g.log_density(y) == doctest::Approx(oracle::gaussian_log_density(mean, var, y)));

    const ScoredDensity sd = as_scored(g);
    CHECK(sd.has_log_unnorm());
    CHECK(sd.has_sampler());
    CHECK((sd.score(y) - s).norm() == 0.0);
    const Vector fd2 = oracle::gradient(sd.log_unnorm, y);
    CHECK((fd2 - s).norm() <= 1e-5 * std::max(1.0, s.norm()));
  }
}

TEST_CASE("unnormalized density has no sampler") {
  auto sd = unnormalized(1, [](const Vector& y) { return Vector(-y); });
  CHECK_FALSE(sd.has_sampler());
  CHECK_FALSE(sd.has_log_unnorm());
  CHECK_FALSE(sd.gaussian.has_value());
  CHECK(sd.score(vec({2.0}))[0] == -2.0);
}

TEST_CASE("chi-square quantile against closed forms") {
  CHECK(chi_square_quantile(0.95, 1) == doctest::Approx(3.841458820694124).epsilon(1e-10));
  for (double p : {0.05, 0.1, 0.5, 0.9, 0.95, 0.99}) {
    CHECK(chi_square_quantile(p, 1) == doctest::Approx(oracle::chi2_quantile_dof1(p)).epsilon(1e-9));
    CHECK(chi_square_quantile(p, 2) == doctest::Approx(oracle::chi2_quantile_dof2(p)).epsilon(1e-9));
  }
  CHECK_THROWS_AS(chi_square_quantile(0.0, 1), ContractViolation);
  CHECK_THROWS_AS(chi_square_quantile(0.5, 0), ContractViolation);
}

TEST_CASE("hdr membership examples") {
  DiagonalGaussian g(vec({0.0}), vec({1.0}));
  CHECK(hdr_contains(g, vec({0.0}), 0.05));
  CHECK(hdr_contains(g, vec({1.9}), 0.05));
  CHECK_FALSE(hdr_contains(g, vec({2.5}), 0.05));
  CHECK_THROWS_AS(hdr_contains(g, vec({0.0}), 0.0), ContractViolation);
  CHECK_THROWS_AS(hdr_contains(g, vec({0.0}), 1.0), ContractViolation);
}

TEST_CASE("coverage rate examples") {
  DiagonalGaussian g(vec({0.0}), vec({1.0}));
  std::vector<Observation> at_mode{make_observation(g, vec({0.0}))};
  CHECK(coverage_rate(at_mode, 0.05) == 1.0);
  std::vector<Observation> far{make_observation(g, vec({10.0}))};
  CHECK(coverage_rate(far, 0.05) == 0.0);
  CHECK_THROWS_AS(coverage_rate(std::span<const Observation>{}, 0.05), ContractViolation);
  std::vector<Observation> no_gauss{
      {unnormalized(1, [](const Vector& y) { return Vector(-y); }), vec({0.0})}};
  CHECK_THROWS_AS(coverage_rate(no_gauss, 0.05), CapabilityError);
}

TEST_CASE("synthetic setup models") {
  SyntheticSetup lgm{Family::LGM, 0.0};
  CHECK(lgm.input_dim() == 5);
  CHECK(lgm.target_dim() == 1);
  DiagonalGaussian m = setup_model(lgm, vec({1, 0, 0, 0, 0}));
  CHECK(m.mean()[0] == doctest::Approx(1.0));
  CHECK(m.var()[0] == 1.0);
  CHECK(setup_model(SyntheticSetup{Family::LGM, 0.5}, vec({0, 0, 1, 0, 0})).mean()[0] ==
        doctest::Approx(3.5));

  SyntheticSetup qgm{Family::QGM, 1.0};
  CHECK(setup_model(qgm, vec({2.0})).mean()[0] == doctest::Approx(3.0));
  CHECK(setup_model(SyntheticSetup{Family::QGM, 0.0}, vec({2.0})).mean()[0] ==
        doctest::Approx(3.4));

  SyntheticSetup mgm{Family::MGM, 0.25, MgmShift::AllOnes};
  CHECK(mgm.target_dim() == 5);
  const Vector x = vec({0.1, 0.2, 0.3, 0.4, 0.5});
  CHECK((setup_model(mgm, x).mean() - (x.array() + 0.25).matrix()).norm() < 1e-15);
  SyntheticSetup mgm1{Family::MGM, 0.25, MgmShift::FirstCoordinate};
  Vector shifted = x;
  shifted[0] += 0.25;
  CHECK((setup_model(mgm1, x).mean() - shifted).norm() < 1e-15);
  CHECK(mgm.label() == "MGM-ones");
  CHECK(mgm1.label() == "MGM-first");

  SyntheticSetup hgm{Family::HGM, 1.0};
  const Vector c = Vector::Constant(hgm.input_dim(), 2.0 / 3.0);
  CHECK(setup_model(hgm, c).var()[0] == doctest::Approx(11.0));
  CHECK(setup_truth(hgm, c).var()[0] == doctest::Approx(1.0));
}

TEST_CASE("sample_setup is deterministic") {
  for (Family f : {Family::MGM, Family::LGM, Family::HGM, Family::QGM}) {
    SyntheticSetup s{f, 0.3};
    RandomStream a(5), b(5);
    const Dataset da = sample_setup(s, 20, a);
    const Dataset db = sample_setup(s, 20, b);
    REQUIRE(da.size() == 20);
    for (std::size_t i = 0; i < da.size(); ++i) {
      CHECK(da[i].y == db[i].y);
      CHECK(*da[i].model.gaussian == *db[i].model.gaussian);
      CHECK(da[i].y.size() == s.target_dim());
    }
  }
}

TEST_CASE("MGM residuals are shifted by -delta") {
  SyntheticSetup s{Family::MGM, 0.2, MgmShift::AllOnes};
  RandomStream rs(17);
  const std::size_t n = 20000;
  const Dataset d = sample_setup(s, n, rs);
  Vector acc = Vector::Zero(5);
  for (const auto& o : d) acc += o.y - o.model.gaussian->mean();
  acc /= static_cast<double>(n);
  for (Eigen::Index i = 0; i < 5; ++i) CHECK(std::abs(acc[i] + 0.2) < 4.0 / std::sqrt(double(n)));
}

TEST_CASE("calibrated setups cover at the nominal level") {
  for (Family f : {Family::MGM, Family::LGM, Family::HGM, Family::QGM}) {
    SyntheticSetup s{f, 0.0};
    RandomStream rs(23);
    const std::size_t n = 2000;
    const Dataset d = sample_setup(s, n, rs);
    for (double alpha : {0.05, 0.1, 0.5}) {
      const double sd = std::sqrt(alpha * (1 - alpha) / double(n));
      CHECK(std::abs(coverage_rate(d, alpha) - (1 - alpha)) <= 3.0 * sd);
    }
  }
}
