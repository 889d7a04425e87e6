#include "kccsd/models.hpp"

#include <cmath>
#include <numbers>

#include <boost/math/special_functions/gamma.hpp>
#include <boost/math/tools/roots.hpp>

#include "kccsd/errors.hpp"

namespace kccsd {

DiagonalGaussian::DiagonalGaussian(Vector mean, Vector var)
    : mean_(std::move(mean)), var_(std::move(var)) {
  detail::require(mean_.size() >= 1, "DiagonalGaussian: dimension must be at least 1");
  detail::require(mean_.size() == var_.size(),
                  "DiagonalGaussian: mean and var lengths differ");
  for (Eigen::Index i = 0; i < var_.size(); ++i) {
    detail::require(std::isfinite(var_[i]) && var_[i] > 0.0,
                    "DiagonalGaussian: variances must be positive and finite");
    detail::require(std::isfinite(mean_[i]), "DiagonalGaussian: mean must be finite");
  }
}

DiagonalGaussian DiagonalGaussian::isotropic(Vector mean, double variance) {
  Vector var = Vector::Constant(mean.size(), variance);
  return {std::move(mean), std::move(var)};
}

double DiagonalGaussian::log_density(const Vector& y) const {
  detail::require(y.size() == dim(), "log_density: dimension mismatch");
  const double quad = ((y - mean_).array().square() / var_.array()).sum();
  const double logdet = var_.array().log().sum();
  return -0.5 * (quad + logdet + static_cast<double>(dim()) * std::log(2.0 * std::numbers::pi));
}

bool DiagonalGaussian::is_isotropic() const noexcept {
  return (var_.array() == var_[0]).all();
}

Vector gaussian_score(const DiagonalGaussian& g, const Vector& y) {
  detail::require(y.size() == g.dim(), "gaussian_score: dimension mismatch");
  return (g.mean() - y).cwiseQuotient(g.var());
}

std::vector<Vector> sample_gaussian(const DiagonalGaussian& g, std::size_t n,
                                    RandomStream& stream) {
  detail::require(n >= 1, "sample_gaussian: n must be at least 1");
  const Vector sd = g.var().cwiseSqrt();
  std::vector<Vector> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    out.push_back(g.mean() + sd.cwiseProduct(standard_normal(g.dim(), stream)));
  }
  return out;
}

ScoredDensity as_scored(const DiagonalGaussian& g) {
  auto shared = std::make_shared<const DiagonalGaussian>(g);
  ScoredDensity d;
  d.dim = g.dim();
  d.score = [shared](const Vector& y) { return gaussian_score(*shared, y); };
  d.log_unnorm = [shared](const Vector& y) {
    detail::require(y.size() == shared->dim(), "log_unnorm: dimension mismatch");
    return -0.5 * ((y - shared->mean()).array().square() / shared->var().array()).sum();
  };
  d.sampler = [shared](RandomStream& s) {
    return Vector(shared->mean() +
                  shared->var().cwiseSqrt().cwiseProduct(standard_normal(shared->dim(), s)));
  };
  d.gaussian = g;
  return d;
}

ScoredDensity unnormalized(Eigen::Index dim, ScoredDensity::ScoreFn score,
                           ScoredDensity::LogDensityFn log_unnorm) {
  detail::require(dim >= 1, "unnormalized: dimension must be at least 1");
  detail::require(static_cast<bool>(score), "unnormalized: score is required");
  ScoredDensity d;
  d.dim = dim;
  d.score = std::move(score);
  d.log_unnorm = std::move(log_unnorm);
  return d;
}

Observation make_observation(const DiagonalGaussian& model, Vector y) {
  detail::require(y.size() == model.dim(), "make_observation: target dimension mismatch");
  return {as_scored(model), std::move(y)};
}

// ---------------------------------------------------------------------------
// Synthetic setups

Eigen::Index SyntheticSetup::input_dim() const noexcept {
  switch (family) {
    case Family::MGM: return 5;
    case Family::LGM: return 5;
    case Family::HGM: return 3;
    case Family::QGM: return 1;
  }
  return 0;
}

Eigen::Index SyntheticSetup::target_dim() const noexcept {
  return family == Family::MGM ? 5 : 1;
}

std::string SyntheticSetup::label() const {
  switch (family) {
    case Family::MGM: return shift == MgmShift::AllOnes ? "MGM-ones" : "MGM-first";
    case Family::LGM: return "LGM";
    case Family::HGM: return "HGM";
    case Family::QGM: return "QGM";
  }
  return "?";
}

namespace {

double linear_mean(const Vector& x) {
  double m = 0.0;
  for (Eigen::Index i = 0; i < x.size(); ++i) m += static_cast<double>(i + 1) * x[i];
  return m;
}

double hgm_variance(const Vector& x, double delta) {
  const Vector c = Vector::Constant(3, 2.0 / 3.0);
  return 1.0 + 10.0 * delta * std::exp(-(x - c).squaredNorm() / (2.0 * 0.8 * 0.8));
}

Vector scalar(double v) { return Vector::Constant(1, v); }

}  // namespace

DiagonalGaussian setup_model(const SyntheticSetup& s, const Vector& x) {
  detail::require(x.size() == s.input_dim(), "setup_model: input dimension mismatch");
  switch (s.family) {
    case Family::MGM: {
      Vector c = Vector::Zero(5);
      if (s.shift == MgmShift::AllOnes) c.setOnes();
      else c[0] = 1.0;
      return DiagonalGaussian::isotropic(x + s.delta * c, 1.0);
    }
    case Family::LGM:
      return DiagonalGaussian::isotropic(scalar(s.delta + linear_mean(x)), 1.0);
    case Family::HGM:
      return DiagonalGaussian::isotropic(scalar(x.sum()), hgm_variance(x, s.delta));
    case Family::QGM: {
      const double t = x[0];
      return DiagonalGaussian::isotropic(scalar(0.1 * (1.0 - s.delta) * t * t + t + 1.0), 1.0);
    }
  }
  throw ContractViolation("setup_model: unknown family");
}

DiagonalGaussian setup_truth(const SyntheticSetup& s, const Vector& x) {
  SyntheticSetup calibrated = s;
  calibrated.delta = 0.0;
  return setup_model(calibrated, x);
}

Dataset sample_setup(const SyntheticSetup& s, std::size_t n, RandomStream& stream) {
  detail::require(n >= 1, "sample_setup: n must be at least 1");
  detail::require(std::isfinite(s.delta) && s.delta >= 0.0,
                  "sample_setup: delta must be finite and non-negative");
  Dataset out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    Vector x(s.input_dim());
    if (s.family == Family::QGM) {
      x[0] = stream.uniform(-2.0, 2.0);
    } else {
      x = standard_normal(s.input_dim(), stream);
    }
    const DiagonalGaussian truth = setup_truth(s, x);
    Vector y = truth.mean() + truth.var().cwiseSqrt().cwiseProduct(
                                  standard_normal(truth.dim(), stream));
    out.push_back(make_observation(setup_model(s, x), std::move(y)));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Highest density regions

double chi_square_quantile(double prob, int dof) {
  detail::require(prob > 0.0 && prob < 1.0, "chi_square_quantile: prob must be in (0, 1)");
  detail::require(dof >= 1, "chi_square_quantile: dof must be at least 1");
  const double shape = 0.5 * dof;
  auto f = [&](double x) { return boost::math::gamma_p(shape, 0.5 * x) - prob; };
  double hi = static_cast<double>(dof);
  while (f(hi) < 0.0) hi *= 2.0;
  auto tol = [](double a, double b) { return std::abs(b - a) <= 1e-10; };
  std::uintmax_t max_iter = 200;
  const auto [lo_x, hi_x] = boost::math::tools::toms748_solve(f, 0.0, hi, -prob, f(hi), tol, max_iter);
  return 0.5 * (lo_x + hi_x);
}

bool hdr_contains(const DiagonalGaussian& g, const Vector& y, double alpha) {
  detail::require(alpha > 0.0 && alpha < 1.0, "hdr_contains: alpha must be in (0, 1)");
  detail::require(y.size() == g.dim(), "hdr_contains: dimension mismatch");
  const double mahalanobis = ((y - g.mean()).array().square() / g.var().array()).sum();
  return mahalanobis <= chi_square_quantile(1.0 - alpha, static_cast<int>(g.dim()));
}

double coverage_rate(std::span<const Observation> pairs, double alpha) {
  detail::require(!pairs.empty(), "coverage_rate: empty list");
  detail::require(alpha > 0.0 && alpha < 1.0, "coverage_rate: alpha must be in (0, 1)");
  std::size_t inside = 0;
  for (const auto& obs : pairs) {
    if (!obs.model.gaussian) throw CapabilityError("coverage_rate: model is not Gaussian");
    if (hdr_contains(*obs.model.gaussian, obs.y, alpha)) ++inside;
  }
  return static_cast<double>(inside) / static_cast<double>(pairs.size());
}

}  // namespace kccsd
