#include "kccsd/kernels.hpp"

#include <algorithm>
#include <cmath>

#include "kccsd/errors.hpp"

namespace kccsd {
namespace {

// Below this a heuristic bandwidth is treated as collapsed.
constexpr double kMinBandwidth = 1e-12;

void require_same_dim(const ScoredDensity& p, const ScoredDensity& q, Eigen::Index base_dim,
                      const char* who) {
  if (p.dim != q.dim || p.dim != base_dim) {
    throw ContractViolation(std::string(who) + ": dimension mismatch");
  }
}

const BaseMeasure& require_frozen(const std::optional<BaseMeasure>& base, const char* who) {
  if (!base || !base->is_frozen()) {
    throw ContractViolation(std::string(who) + ": frozen base samples required");
  }
  return *base;
}

double require_sigma(const DistributionKernel& k, const char* who) {
  if (!k.sigma) throw ContractViolation(std::string(who) + ": sigma is not set");
  return *k.sigma;
}

const ScalarKernel& require_ground(const DistributionKernel& k, const char* who) {
  if (!k.ground) throw ContractViolation(std::string(who) + ": ground kernel is not set");
  return *k.ground;
}

void require_gaussian_kernel(const ScalarKernel& l, const char* who) {
  if (l.family() != ScalarFamily::Gaussian) {
    throw UnsupportedCombination(std::string(who) + ": closed form needs a Gaussian kernel");
  }
}

double exponentiate(double sq_dist, double sigma) {
  return std::exp(-sq_dist / (2.0 * sigma * sigma));
}

// Scores at the base points, flattened to one row of length m * d.
Vector score_features(const ScoredDensity& p, const BaseMeasure& base) {
  const auto& z = base.samples();
  const Eigen::Index d = base.dim();
  Vector out(static_cast<Eigen::Index>(z.size()) * d);
  for (std::size_t a = 0; a < z.size(); ++a) {
    out.segment(static_cast<Eigen::Index>(a) * d, d) = p.score(z[a]);
  }
  return out;
}

std::vector<Vector> draw_from(const ScoredDensity& p, std::size_t m, RandomStream& stream) {
  if (!p.has_sampler()) throw CapabilityError("sampled MMD: density has no sampler");
  std::vector<Vector> out;
  out.reserve(m);
  for (std::size_t a = 0; a < m; ++a) out.push_back(p.sampler(stream));
  return out;
}

double mean_cross_kernel(const std::vector<Vector>& a, const std::vector<Vector>& b,
                         const ScalarKernel& l) {
  double acc = 0.0;
  for (const auto& x : a) {
    for (const auto& y : b) acc += l.from_squared_distance((x - y).squaredNorm());
  }
  return acc / static_cast<double>(a.size() * b.size());
}

double lower_median_inplace(std::vector<double>& values) {
  auto mid = values.begin() + static_cast<std::ptrdiff_t>((values.size() - 1) / 2);
  std::nth_element(values.begin(), mid, values.end());
  return *mid;
}

double checked_bandwidth(double gamma, const char* who) {
  if (!(gamma > kMinBandwidth) || !std::isfinite(gamma)) {
    throw DegenerateBandwidth(std::string(who) + ": median distance is zero");
  }
  return gamma;
}

template <class Draw>
double second_order_median(std::size_t n_models, std::size_t samples_per_pair,
                           RandomStream& stream, Draw&& draw) {
  detail::require(n_models >= 2, "second_order_median_heuristic: need at least 2 models");
  detail::require(samples_per_pair >= 2,
                  "second_order_median_heuristic: need at least 2 samples per pair");
  const std::size_t n_pairs = n_models * (n_models - 1) / 2;
  std::vector<double> pair_medians(n_pairs);

#pragma omp parallel for schedule(dynamic, 8)
  for (std::ptrdiff_t ii = 0; ii < static_cast<std::ptrdiff_t>(n_models); ++ii) {
    const auto i = static_cast<std::size_t>(ii);
    // Offset of row i in the packed upper triangle.
    std::size_t idx = i * n_models - i * (i + 1) / 2;
    std::vector<Vector> pts(samples_per_pair);
    std::vector<double> dists;
    dists.reserve(samples_per_pair * (samples_per_pair - 1) / 2);
    for (std::size_t j = i + 1; j < n_models; ++j, ++idx) {
      RandomStream local = stream.derive("pair", idx);
      for (auto& pt : pts) pt = draw(local.sign() > 0 ? i : j, local);
      dists.clear();
      for (std::size_t a = 0; a < pts.size(); ++a) {
        for (std::size_t b = a + 1; b < pts.size(); ++b) dists.push_back((pts[a] - pts[b]).norm());
      }
      pair_medians[idx] = lower_median_inplace(dists);
    }
  }
  return checked_bandwidth(lower_median_inplace(pair_medians), "second_order_median_heuristic");
}

}  // namespace

// ---------------------------------------------------------------------------
// ScalarKernel

ScalarKernel::ScalarKernel(ScalarFamily family, double bandwidth)
    : family_(family), bandwidth_(bandwidth) {
  detail::require(std::isfinite(bandwidth) && bandwidth > 0.0,
                  "ScalarKernel: bandwidth must be positive and finite");
}

double ScalarKernel::from_squared_distance(double r2) const noexcept {
  const double g2 = bandwidth_ * bandwidth_;
  if (family_ == ScalarFamily::Gaussian) return std::exp(-r2 / (2.0 * g2));
  return 1.0 / (1.0 + r2 / g2);
}

double ScalarKernel::operator()(const Vector& y, const Vector& yp) const {
  detail::require(y.size() == yp.size(), "ScalarKernel: dimension mismatch");
  return from_squared_distance((y - yp).squaredNorm());
}

std::string ScalarKernel::name() const {
  return family_ == ScalarFamily::Gaussian ? "gaussian" : "imq";
}

KernelBundle scalar_bundle(const ScalarKernel& l, const Vector& y, const Vector& yp) {
  detail::require(y.size() == yp.size(), "scalar_bundle: dimension mismatch");
  const Vector delta = y - yp;
  const double r2 = delta.squaredNorm();
  const double g2 = l.bandwidth() * l.bandwidth();
  const double d = static_cast<double>(y.size());

  KernelBundle b;
  if (l.family() == ScalarFamily::Gaussian) {
    b.value = std::exp(-r2 / (2.0 * g2));
    b.grad_y = -delta * (b.value / g2);
    b.grad_yp = -b.grad_y;
    b.mixed_trace = (d / g2 - r2 / (g2 * g2)) * b.value;
  } else {
    const double u = 1.0 + r2 / g2;
    b.value = 1.0 / u;
    const double slope = 2.0 / (u * u * g2);
    b.grad_y = -delta * slope;
    b.grad_yp = -b.grad_y;
    b.mixed_trace = d * slope - 8.0 * r2 / (u * u * u * g2 * g2);
  }
  return b;
}

// ---------------------------------------------------------------------------
// BaseMeasure

BaseMeasure BaseMeasure::standard_gaussian(Eigen::Index dim) {
  detail::require(dim >= 1, "BaseMeasure: dimension must be at least 1");
  return BaseMeasure(dim, {});
}

BaseMeasure BaseMeasure::frozen(std::vector<Vector> samples) {
  detail::require(!samples.empty(), "BaseMeasure: frozen sample set must be non-empty");
  const Eigen::Index d = samples.front().size();
  detail::require(d >= 1, "BaseMeasure: dimension must be at least 1");
  for (const auto& z : samples) {
    detail::require(z.size() == d, "BaseMeasure: base samples differ in dimension");
  }
  return BaseMeasure(d, std::move(samples));
}

BaseMeasure BaseMeasure::freeze(std::size_t m, RandomStream& stream) const {
  if (is_frozen()) return *this;
  detail::require(m >= 1, "BaseMeasure: m must be at least 1");
  std::vector<Vector> z;
  z.reserve(m);
  for (std::size_t i = 0; i < m; ++i) z.push_back(standard_normal(dim_, stream));
  return BaseMeasure(dim_, std::move(z));
}

// ---------------------------------------------------------------------------
// Divergences

double gfd_estimate(const ScoredDensity& p, const ScoredDensity& q, const BaseMeasure& base) {
  detail::require(base.is_frozen(), "gfd_estimate: base samples must be frozen");
  require_same_dim(p, q, base.dim(), "gfd_estimate");
  double acc = 0.0;
  for (const auto& z : base.samples()) acc += (p.score(z) - q.score(z)).squaredNorm();
  return acc / static_cast<double>(base.samples().size());
}

double gfd_gaussian_closed(const DiagonalGaussian& p, const DiagonalGaussian& q) {
  detail::require(p.dim() == q.dim(), "gfd_gaussian_closed: dimension mismatch");
  // s_p(x) - s_q(x) = A x + b with A = diag(1/var_q - 1/var_p).
  const Vector a = q.var().cwiseInverse() - p.var().cwiseInverse();
  const Vector b = p.mean().cwiseQuotient(p.var()) - q.mean().cwiseQuotient(q.var());
  return a.squaredNorm() + b.squaredNorm();
}

double kgfd_estimate(const ScoredDensity& p, const ScoredDensity& q, const BaseMeasure& base,
                     const ScalarKernel& ground) {
  detail::require(base.is_frozen(), "kgfd_estimate: base samples must be frozen");
  require_same_dim(p, q, base.dim(), "kgfd_estimate");
  const auto& z = base.samples();
  std::vector<Vector> diff;
  diff.reserve(z.size());
  for (const auto& zi : z) diff.push_back(p.score(zi) - q.score(zi));
  double acc = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    for (std::size_t j = 0; j < z.size(); ++j) acc += ground(z[i], z[j]) * diff[i].dot(diff[j]);
  }
  const double m = static_cast<double>(z.size());
  return std::max(0.0, acc / (m * m));
}

double gaussian_kernel_expectation(const DiagonalGaussian& g, const Vector& yp,
                                   const ScalarKernel& l) {
  require_gaussian_kernel(l, "gaussian_kernel_expectation");
  detail::require(yp.size() == g.dim(), "gaussian_kernel_expectation: dimension mismatch");
  const double g2 = l.bandwidth() * l.bandwidth();
  double log_scale = 0.0;
  double quad = 0.0;
  for (Eigen::Index i = 0; i < g.dim(); ++i) {
    const double s = g2 + g.var()[i];
    log_scale += 0.5 * std::log(g2 / s);
    const double diff = g.mean()[i] - yp[i];
    quad += diff * diff / s;
  }
  return std::exp(log_scale - 0.5 * quad);
}

double gaussian_kernel_expectation(const DiagonalGaussian& g, const DiagonalGaussian& gp,
                                   const ScalarKernel& l) {
  detail::require(gp.dim() == g.dim(), "gaussian_kernel_expectation: dimension mismatch");
  // z - z' ~ N(mu - mu', var + var'): same integral as against a point at mu'.
  return gaussian_kernel_expectation(DiagonalGaussian(g.mean(), g.var() + gp.var()), gp.mean(), l);
}

double wasserstein2_squared(const DiagonalGaussian& p, const DiagonalGaussian& q) {
  detail::require(p.dim() == q.dim(), "wasserstein: dimension mismatch");
  if (!p.is_isotropic() || !q.is_isotropic()) {
    throw UnsupportedCombination("exp_wasserstein: closed form needs isotropic Gaussians");
  }
  const double ds = std::sqrt(p.var()[0]) - std::sqrt(q.var()[0]);
  return (p.mean() - q.mean()).squaredNorm() + static_cast<double>(p.dim()) * ds * ds;
}

// ---------------------------------------------------------------------------
// DistributionKernel

std::string DistributionKernel::name() const {
  switch (kind) {
    case DistKind::ExpGFD: return "exp_gfd";
    case DistKind::ExpKGFD: return "exp_kgfd";
    case DistKind::ExpMMD: return mmd_mode == MmdMode::ClosedForm ? "exp_mmd" : "exp_mmd_sampled";
    case DistKind::ExpWasserstein: return "exp_wasserstein";
  }
  return "?";
}

DistributionKernel exp_gfd_kernel(std::optional<double> sigma, std::size_t m) {
  DistributionKernel k;
  k.kind = DistKind::ExpGFD;
  k.sigma = sigma;
  k.samples = m;
  return k;
}

DistributionKernel exp_kgfd_kernel(std::optional<double> sigma, std::optional<ScalarKernel> ground,
                                   std::size_t m) {
  DistributionKernel k = exp_gfd_kernel(sigma, m);
  k.kind = DistKind::ExpKGFD;
  k.ground = ground;
  return k;
}

DistributionKernel exp_mmd_kernel(std::optional<double> sigma, std::optional<ScalarKernel> ground,
                                  MmdMode mode, std::size_t m) {
  DistributionKernel k;
  k.kind = DistKind::ExpMMD;
  k.sigma = sigma;
  k.ground = ground;
  k.mmd_mode = mode;
  k.samples = m;
  return k;
}

DistributionKernel exp_wasserstein_kernel(std::optional<double> length_scale) {
  DistributionKernel k;
  k.kind = DistKind::ExpWasserstein;
  k.sigma = length_scale;
  return k;
}

double exp_gfd(const DistributionKernel& k, const ScoredDensity& p, const ScoredDensity& q) {
  detail::require(k.kind == DistKind::ExpGFD, "exp_gfd: kernel is not ExpGFD");
  return exponentiate(gfd_estimate(p, q, require_frozen(k.base, "exp_gfd")),
                      require_sigma(k, "exp_gfd"));
}

double exp_kgfd(const DistributionKernel& k, const ScoredDensity& p, const ScoredDensity& q) {
  detail::require(k.kind == DistKind::ExpKGFD, "exp_kgfd: kernel is not ExpKGFD");
  return exponentiate(kgfd_estimate(p, q, require_frozen(k.base, "exp_kgfd"),
                                    require_ground(k, "exp_kgfd")),
                      require_sigma(k, "exp_kgfd"));
}

double exp_mmd(const DistributionKernel& k, const ScoredDensity& p, const ScoredDensity& q,
               RandomStream& stream) {
  detail::require(k.kind == DistKind::ExpMMD, "exp_mmd: kernel is not ExpMMD");
  return exponentiate(squared_distance(k, p, q, stream), require_sigma(k, "exp_mmd"));
}

double exp_wasserstein(const DiagonalGaussian& p, const DiagonalGaussian& q, double length_scale) {
  detail::require(std::isfinite(length_scale) && length_scale > 0.0,
                  "exp_wasserstein: length scale must be positive");
  return exponentiate(wasserstein2_squared(p, q), length_scale);
}

double squared_distance(const DistributionKernel& k, const ScoredDensity& p,
                        const ScoredDensity& q, RandomStream& stream) {
  switch (k.kind) {
    case DistKind::ExpGFD:
      return gfd_estimate(p, q, require_frozen(k.base, "squared_distance"));
    case DistKind::ExpKGFD:
      return kgfd_estimate(p, q, require_frozen(k.base, "squared_distance"),
                           require_ground(k, "squared_distance"));
    case DistKind::ExpMMD: {
      const ScalarKernel& l = require_ground(k, "exp_mmd");
      detail::require(p.dim == q.dim, "exp_mmd: dimension mismatch");
      if (k.mmd_mode == MmdMode::ClosedForm) {
        if (!p.gaussian || !q.gaussian) {
          throw UnsupportedCombination("exp_mmd: closed form needs Gaussian densities");
        }
        const double tpp = gaussian_kernel_expectation(*p.gaussian, *p.gaussian, l);
        const double tqq = gaussian_kernel_expectation(*q.gaussian, *q.gaussian, l);
        const double tpq = gaussian_kernel_expectation(*p.gaussian, *q.gaussian, l);
        return std::max(0.0, tpp + tqq - 2.0 * tpq);
      }
      detail::require(k.samples >= 1, "exp_mmd: need at least one sample");
      const auto xs = draw_from(p, k.samples, stream);
      const auto ys = draw_from(q, k.samples, stream);
      return std::max(0.0, mean_cross_kernel(xs, xs, l) + mean_cross_kernel(ys, ys, l) -
                               2.0 * mean_cross_kernel(xs, ys, l));
    }
    case DistKind::ExpWasserstein:
      if (!p.gaussian || !q.gaussian) {
        throw UnsupportedCombination("exp_wasserstein: needs Gaussian densities");
      }
      return wasserstein2_squared(*p.gaussian, *q.gaussian);
  }
  throw ContractViolation("squared_distance: unknown kernel kind");
}

// ---------------------------------------------------------------------------
// Heuristics

double lower_median(std::vector<double> values) {
  detail::require(!values.empty(), "lower_median: empty list");
  return lower_median_inplace(values);
}

double median_heuristic(std::span<const Vector> points) {
  detail::require(points.size() >= 2, "median_heuristic: need at least 2 points");
  std::vector<double> dists;
  dists.reserve(points.size() * (points.size() - 1) / 2);
  for (std::size_t i = 0; i < points.size(); ++i) {
    for (std::size_t j = i + 1; j < points.size(); ++j) {
      detail::require(points[i].size() == points[j].size(),
                      "median_heuristic: points differ in dimension");
      dists.push_back((points[i] - points[j]).norm());
    }
  }
  return checked_bandwidth(lower_median_inplace(dists), "median_heuristic");
}

double second_order_median_heuristic(std::span<const DiagonalGaussian> models,
                                     std::size_t samples_per_pair, RandomStream& stream) {
  return second_order_median(models.size(), samples_per_pair, stream,
                             [&](std::size_t i, RandomStream& s) {
                               const auto& g = models[i];
                               return Vector(g.mean() + g.var().cwiseSqrt().cwiseProduct(
                                                            standard_normal(g.dim(), s)));
                             });
}

double second_order_median_heuristic(std::span<const ScoredDensity> models,
                                     std::size_t samples_per_pair, RandomStream& stream) {
  for (const auto& m : models) {
    if (!m.has_sampler()) throw CapabilityError("second_order_median_heuristic: no sampler");
  }
  return second_order_median(models.size(), samples_per_pair, stream,
                             [&](std::size_t i, RandomStream& s) { return models[i].sampler(s); });
}

// ---------------------------------------------------------------------------
// Gram

GramMatrix gram(const DistributionKernel& k, std::span<const ScoredDensity> models,
                RandomStream& stream) {
  detail::require(!models.empty(), "gram: no models");
  const auto n = static_cast<Eigen::Index>(models.size());
  const Eigen::Index d = models.front().dim;
  for (const auto& m : models) detail::require(m.dim == d, "gram: models differ in dimension");

  DistributionKernel resolved = k;
  const bool needs_ground = k.kind == DistKind::ExpKGFD || k.kind == DistKind::ExpMMD;
  if (needs_ground && !resolved.ground) {
    double gamma = 1.0;
    if (models.size() >= 2) {
      RandomStream s = stream.derive("ground_bandwidth");
      gamma = second_order_median_heuristic(models, 10, s);
    }
    resolved.ground = ScalarKernel::gaussian(gamma);
  }
  if (k.kind == DistKind::ExpGFD || k.kind == DistKind::ExpKGFD) {
    const BaseMeasure base = k.base ? *k.base : BaseMeasure::standard_gaussian(d);
    detail::require(base.dim() == d, "gram: base measure dimension mismatch");
    RandomStream s = stream.derive("base");
    resolved.base = base.freeze(k.samples, s);
  }

  Matrix sq = Matrix::Zero(n, n);
  switch (resolved.kind) {
    case DistKind::ExpGFD:
    case DistKind::ExpKGFD: {
      const BaseMeasure& base = *resolved.base;
      const auto m = static_cast<Eigen::Index>(base.samples().size());
      Matrix features(n, m * d);
#pragma omp parallel for schedule(static)
      for (Eigen::Index i = 0; i < n; ++i) {
        features.row(i) = score_features(models[static_cast<std::size_t>(i)], base).transpose();
      }
      Matrix ground_gram;
      if (resolved.kind == DistKind::ExpKGFD) {
        ground_gram.resize(m, m);
        for (Eigen::Index a = 0; a < m; ++a) {
          for (Eigen::Index b = 0; b < m; ++b) {
            ground_gram(a, b) = (*resolved.ground)(base.samples()[a], base.samples()[b]);
          }
        }
      }
      const bool kernelized = resolved.kind == DistKind::ExpKGFD;
#pragma omp parallel for schedule(dynamic, 4)
      for (Eigen::Index i = 0; i < n; ++i) {
        Matrix diff(d, m);
        for (Eigen::Index j = i + 1; j < n; ++j) {
          const Vector delta = (features.row(i) - features.row(j)).transpose();
          double v;
          if (kernelized) {
            diff = Eigen::Map<const Matrix>(delta.data(), d, m);
            v = std::max(0.0, ((diff * ground_gram).cwiseProduct(diff)).sum() /
                                  static_cast<double>(m * m));
          } else {
            v = delta.squaredNorm() / static_cast<double>(m);
          }
          sq(i, j) = v;
          sq(j, i) = v;
        }
      }
      break;
    }
    case DistKind::ExpMMD: {
      const ScalarKernel& l = *resolved.ground;
      if (resolved.mmd_mode == MmdMode::ClosedForm) {
        for (const auto& m : models) {
          if (!m.gaussian) throw UnsupportedCombination("exp_mmd: closed form needs Gaussians");
        }
        if (l.family() != ScalarFamily::Gaussian) {
          throw UnsupportedCombination("exp_mmd: closed form needs a Gaussian ground kernel");
        }
        Vector self(n);
        for (Eigen::Index i = 0; i < n; ++i) {
          const auto& g = *models[static_cast<std::size_t>(i)].gaussian;
          self[i] = gaussian_kernel_expectation(g, g, l);
        }
#pragma omp parallel for schedule(dynamic, 4)
        for (Eigen::Index i = 0; i < n; ++i) {
          const auto& gi = *models[static_cast<std::size_t>(i)].gaussian;
          for (Eigen::Index j = i + 1; j < n; ++j) {
            const auto& gj = *models[static_cast<std::size_t>(j)].gaussian;
            const double v =
                std::max(0.0, self[i] + self[j] - 2.0 * gaussian_kernel_expectation(gi, gj, l));
            sq(i, j) = v;
            sq(j, i) = v;
          }
        }
      } else {
        detail::require(resolved.samples >= 1, "exp_mmd: need at least one sample");
        std::vector<std::vector<Vector>> draws(models.size());
        for (std::size_t i = 0; i < models.size(); ++i) {
          RandomStream s = stream.derive("mmd_samples", i);
          draws[i] = draw_from(models[i], resolved.samples, s);
        }
        Vector self(n);
        for (Eigen::Index i = 0; i < n; ++i) {
          const auto& xi = draws[static_cast<std::size_t>(i)];
          self[i] = mean_cross_kernel(xi, xi, l);
        }
#pragma omp parallel for schedule(dynamic, 4)
        for (Eigen::Index i = 0; i < n; ++i) {
          for (Eigen::Index j = i + 1; j < n; ++j) {
            const double cross = mean_cross_kernel(draws[static_cast<std::size_t>(i)],
                                                   draws[static_cast<std::size_t>(j)], l);
            const double v = std::max(0.0, self[i] + self[j] - 2.0 * cross);
            sq(i, j) = v;
            sq(j, i) = v;
          }
        }
      }
      break;
    }
    case DistKind::ExpWasserstein: {
      for (const auto& m : models) {
        if (!m.gaussian) throw UnsupportedCombination("exp_wasserstein: needs Gaussians");
        if (!m.gaussian->is_isotropic()) {
          throw UnsupportedCombination("exp_wasserstein: closed form needs isotropic Gaussians");
        }
      }
#pragma omp parallel for schedule(dynamic, 4)
      for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = i + 1; j < n; ++j) {
          const double v = wasserstein2_squared(*models[static_cast<std::size_t>(i)].gaussian,
                                                *models[static_cast<std::size_t>(j)].gaussian);
          sq(i, j) = v;
          sq(j, i) = v;
        }
      }
      break;
    }
  }

  if (!resolved.sigma) {
    double sigma = 1.0;
    if (n >= 2) {
      std::vector<double> dists;
      dists.reserve(static_cast<std::size_t>(n * (n - 1) / 2));
      for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = i + 1; j < n; ++j) dists.push_back(std::sqrt(sq(i, j)));
      }
      sigma = checked_bandwidth(lower_median_inplace(dists), "gram: distribution bandwidth");
    }
    resolved.sigma = sigma;
  }
  detail::require(*resolved.sigma > 0.0 && std::isfinite(*resolved.sigma),
                  "gram: sigma must be positive");

  Matrix values(n, n);
  const double sigma = *resolved.sigma;
  for (Eigen::Index i = 0; i < n; ++i) {
    values(i, i) = 1.0;
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double v = exponentiate(sq(i, j), sigma);
      values(i, j) = v;
      values(j, i) = v;
    }
  }
  return {std::move(values), std::move(sq), std::move(resolved)};
}

}  // namespace kccsd
