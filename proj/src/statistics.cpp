#include "kccsd/statistics.hpp"

#include <algorithm>
#include <cmath>

#include "kccsd/errors.hpp"

namespace kccsd {

StatMatrix::StatMatrix(Matrix entries) : entries_(std::move(entries)) {
  detail::require(entries_.rows() == entries_.cols(), "StatMatrix: matrix must be square");
  detail::require(entries_.allFinite(), "StatMatrix: entries must be finite");
  const double scale = entries_.size() > 0 ? std::max(1.0, entries_.cwiseAbs().maxCoeff()) : 1.0;
  detail::require(entries_.size() == 0 ||
                      (entries_ - entries_.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * scale,
                  "StatMatrix: matrix must be symmetric");
}

// ---------------------------------------------------------------------------
// Strategies

ExpectationStrategy ExpectationStrategy::closed_form() { return {}; }

ExpectationStrategy ExpectationStrategy::exact_sampler(std::size_t m) {
  detail::require(m >= 1, "ExactSampler: m must be at least 1");
  ExpectationStrategy s;
  s.mode = ExpectationMode::ExactSampler;
  s.samples = m;
  return s;
}

ExpectationStrategy ExpectationStrategy::mala_chains(std::size_t m, MalaConfig cfg,
                                                     double init_noise, MalaInit init) {
  detail::require(m >= 1, "MALA: m must be at least 1");
  detail::require(cfg.step_size > 0.0, "MALA: step size must be positive");
  ExpectationStrategy s;
  s.mode = ExpectationMode::MALA;
  s.samples = m;
  s.mala = cfg;
  s.init_noise = init_noise;
  s.init = init;
  return s;
}

std::string ExpectationStrategy::name() const {
  switch (mode) {
    case ExpectationMode::ClosedFormGaussian: return "closed_form";
    case ExpectationMode::ExactSampler: return "sampler";
    case ExpectationMode::MALA: return "mala";
  }
  return "?";
}

std::string StatisticSpec::name() const {
  return kind == StatisticKind::KCCSD ? "KCCSD" : "SKCE-" + strategy.name();
}

// ---------------------------------------------------------------------------
// KCCSD

double h_term(const ScalarKernel& l, const ScoredDensity& p, const Vector& y,
              const ScoredDensity& pp, const Vector& yp) {
  detail::require(y.size() == p.dim && yp.size() == pp.dim && p.dim == pp.dim,
                  "h_term: dimension mismatch");
  const KernelBundle b = scalar_bundle(l, y, yp);
  const Vector s = p.score(y);
  const Vector sp = pp.score(yp);
  return b.value * s.dot(sp) + b.mixed_trace + s.dot(b.grad_yp) + sp.dot(b.grad_y);
}

double stein_kernel(const ScalarKernel& l, const double* y, const double* s, const double* yp,
                    const double* sp, Eigen::Index d) noexcept {
  double r2 = 0.0, ss = 0.0, s_delta = 0.0;
  for (Eigen::Index k = 0; k < d; ++k) {
    const double delta = y[k] - yp[k];
    r2 += delta * delta;
    ss += s[k] * sp[k];
    s_delta += (s[k] - sp[k]) * delta;
  }
  const double g2 = l.bandwidth() * l.bandwidth();
  const auto dd = static_cast<double>(d);
  if (l.family() == ScalarFamily::Gaussian) {
    const double value = std::exp(-r2 / (2.0 * g2));
    return value * (ss + dd / g2 - r2 / (g2 * g2) + s_delta / g2);
  }
  const double u = 1.0 + r2 / g2;
  const double slope = 2.0 / (u * u * g2);
  return ss / u + dd * slope - 8.0 * r2 / (u * u * u * g2 * g2) + slope * s_delta;
}

namespace {

void require_dataset(std::span<const Observation> data, const char* who) {
  detail::require(!data.empty(), std::string(who) + ": empty dataset");
  const Eigen::Index d = data.front().y.size();
  for (const auto& obs : data) {
    detail::require(obs.y.size() == d && obs.model.dim == d,
                    std::string(who) + ": dimension mismatch");
  }
}

void require_gram(const Matrix& k_gram, std::size_t n, const char* who) {
  detail::require(k_gram.rows() == static_cast<Eigen::Index>(n) && k_gram.cols() == k_gram.rows(),
                  std::string(who) + ": Gram matrix size mismatch");
}

}  // namespace

StatMatrix kccsd_matrix(const Matrix& k_gram, const ScalarKernel& l,
                        std::span<const Observation> data) {
  require_dataset(data, "kccsd_matrix");
  require_gram(k_gram, data.size(), "kccsd_matrix");
  const auto n = static_cast<Eigen::Index>(data.size());
  const Eigen::Index d = data.front().y.size();

  // Column i holds y_i (resp. s_i) so each point is contiguous.
  Matrix ys(d, n), scores(d, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& obs = data[static_cast<std::size_t>(i)];
    ys.col(i) = obs.y;
    scores.col(i) = obs.model.score(obs.y);
  }
  if (!scores.allFinite()) throw NumericalError("kccsd_matrix: non-finite score");

  Matrix h = Matrix::Zero(n, n);
#pragma omp parallel for schedule(dynamic, 8)
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double v = k_gram(i, j) * stein_kernel(l, ys.col(i).data(), scores.col(i).data(),
                                                   ys.col(j).data(), scores.col(j).data(), d);
      h(i, j) = v;
      h(j, i) = v;
    }
  }
  return StatMatrix(std::move(h));
}

double u_statistic(const StatMatrix& m) {
  const Eigen::Index n = m.n();
  detail::require(n >= 2, "u_statistic: need at least 2 data points");
  const Matrix& e = m.entries();
  double total = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    double row = 0.0;
    for (Eigen::Index j = i + 1; j < n; ++j) row += e(i, j);
    total += row;
  }
  return 2.0 * total / (static_cast<double>(n) * static_cast<double>(n - 1));
}

// ---------------------------------------------------------------------------
// SKCE

namespace {

std::vector<Vector> expectation_batch(const ScoredDensity& p, const ExpectationStrategy& strategy,
                                      RandomStream& stream) {
  switch (strategy.mode) {
    case ExpectationMode::ExactSampler: {
      if (!p.has_sampler()) throw CapabilityError("SKCE: ExactSampler needs a sampler");
      std::vector<Vector> out;
      out.reserve(strategy.samples);
      for (std::size_t a = 0; a < strategy.samples; ++a) out.push_back(p.sampler(stream));
      return out;
    }
    case ExpectationMode::MALA: {
      if (!p.has_log_unnorm()) throw CapabilityError("SKCE: MALA needs a log density");
      Vector init = strategy.init == MalaInit::ModelMean && p.gaussian ? p.gaussian->mean()
                                                                     : Vector::Zero(p.dim);
      if (strategy.init_noise != 0.0) init += strategy.init_noise * standard_normal(p.dim, stream);
      return mala_sample(p, strategy.mala, init, strategy.samples, stream).samples;
    }
    case ExpectationMode::ClosedFormGaussian: break;
  }
  throw ContractViolation("SKCE: closed form has no sample batch");
}

void require_closed_form(const ScalarKernel& l, const ScoredDensity& p) {
  if (l.family() != ScalarFamily::Gaussian) {
    throw UnsupportedCombination("SKCE: closed-form expectations need a Gaussian target kernel");
  }
  if (!p.gaussian) throw CapabilityError("SKCE: closed-form expectations need Gaussian models");
}

double mean_kernel_to_point(const ScalarKernel& l, const std::vector<Vector>& zs, const Vector& y) {
  double acc = 0.0;
  for (const auto& z : zs) acc += l.from_squared_distance((z - y).squaredNorm());
  return acc / static_cast<double>(zs.size());
}

double mean_kernel_between(const ScalarKernel& l, const std::vector<Vector>& a,
                           const std::vector<Vector>& b) {
  double acc = 0.0;
  for (const auto& x : a) {
    for (const auto& y : b) acc += l.from_squared_distance((x - y).squaredNorm());
  }
  return acc / static_cast<double>(a.size() * b.size());
}

}  // namespace

double skce_g_term(double k_dist, const ScalarKernel& l, const ScoredDensity& p, const Vector& y,
                   const ScoredDensity& pp, const Vector& yp, const ExpectationStrategy& strategy,
                   RandomStream& stream) {
  detail::require(y.size() == p.dim && yp.size() == pp.dim && p.dim == pp.dim,
                  "skce_g_term: dimension mismatch");
  const double direct = l(y, yp);
  if (strategy.mode == ExpectationMode::ClosedFormGaussian) {
    require_closed_form(l, p);
    require_closed_form(l, pp);
    return k_dist * (direct - gaussian_kernel_expectation(*p.gaussian, yp, l) -
                     gaussian_kernel_expectation(*pp.gaussian, y, l) +
                     gaussian_kernel_expectation(*p.gaussian, *pp.gaussian, l));
  }
  const auto z_p = expectation_batch(p, strategy, stream);
  const auto z_pp = expectation_batch(pp, strategy, stream);
  return k_dist * (direct - mean_kernel_to_point(l, z_p, yp) - mean_kernel_to_point(l, z_pp, y) +
                   mean_kernel_between(l, z_p, z_pp));
}

StatMatrix skce_matrix(const Matrix& k_gram, const ScalarKernel& l,
                       std::span<const Observation> data, const ExpectationStrategy& strategy,
                       RandomStream& stream) {
  require_dataset(data, "skce_matrix");
  require_gram(k_gram, data.size(), "skce_matrix");
  const auto n = static_cast<Eigen::Index>(data.size());
  Matrix g = Matrix::Zero(n, n);

  if (strategy.mode == ExpectationMode::ClosedFormGaussian) {
    for (const auto& obs : data) require_closed_form(l, obs.model);
#pragma omp parallel for schedule(dynamic, 8)
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto& oi = data[static_cast<std::size_t>(i)];
      const DiagonalGaussian& pi = *oi.model.gaussian;
      for (Eigen::Index j = i + 1; j < n; ++j) {
        const auto& oj = data[static_cast<std::size_t>(j)];
        const DiagonalGaussian& pj = *oj.model.gaussian;
        const double bracket = l.from_squared_distance((oi.y - oj.y).squaredNorm()) -
                               gaussian_kernel_expectation(pi, oj.y, l) -
                               gaussian_kernel_expectation(pj, oi.y, l) +
                               gaussian_kernel_expectation(pi, pj, l);
        const double v = k_gram(i, j) * bracket;
        g(i, j) = v;
        g(j, i) = v;
      }
    }
    return StatMatrix(std::move(g));
  }

  for (const auto& obs : data) {
    if (strategy.mode == ExpectationMode::ExactSampler && !obs.model.has_sampler()) {
      throw CapabilityError("SKCE: ExactSampler needs a sampler");
    }
    if (strategy.mode == ExpectationMode::MALA && !obs.model.has_log_unnorm()) {
      throw CapabilityError("SKCE: MALA needs a log density");
    }
  }
  std::vector<std::vector<Vector>> batches(data.size());
  // Batches are generated serially: model callbacks need not be thread safe.
  for (std::size_t i = 0; i < data.size(); ++i) {
    RandomStream s = stream.derive("expectation", i);
    batches[i] = expectation_batch(data[i].model, strategy, s);
  }
#pragma omp parallel for schedule(dynamic, 8)
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& zi = batches[static_cast<std::size_t>(i)];
    const auto& yi = data[static_cast<std::size_t>(i)].y;
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const auto& zj = batches[static_cast<std::size_t>(j)];
      const auto& yj = data[static_cast<std::size_t>(j)].y;
      const double bracket = l.from_squared_distance((yi - yj).squaredNorm()) -
                             mean_kernel_to_point(l, zi, yj) - mean_kernel_to_point(l, zj, yi) +
                             mean_kernel_between(l, zi, zj);
      const double v = k_gram(i, j) * bracket;
      g(i, j) = v;
      g(j, i) = v;
    }
  }
  return StatMatrix(std::move(g));
}

// ---------------------------------------------------------------------------
// Bootstrap

double bootstrap_quantile(std::vector<double> replicates, double alpha) {
  detail::require(!replicates.empty(), "bootstrap_quantile: no replicates");
  detail::require(alpha > 0.0 && alpha < 1.0, "bootstrap_quantile: alpha must be in (0, 1)");
  const auto b = static_cast<double>(replicates.size());
  // The epsilon keeps e.g. 0.95 * 500 from rounding up to 476.
  auto rank = static_cast<std::size_t>(std::ceil((1.0 - alpha) * b - 1e-9));
  rank = std::clamp<std::size_t>(rank, 1, replicates.size());
  auto it = replicates.begin() + static_cast<std::ptrdiff_t>(rank - 1);
  std::nth_element(replicates.begin(), it, replicates.end());
  return *it;
}

BootstrapResult wild_bootstrap(const StatMatrix& m, std::size_t n_bootstrap, double alpha,
                               RandomStream& stream) {
  detail::require(n_bootstrap >= 1, "wild_bootstrap: need at least one replicate");
  const Eigen::Index n = m.n();
  detail::require(n >= 2, "wild_bootstrap: need at least 2 data points");
  const Matrix& e = m.entries();
  const double scale = 2.0 / (static_cast<double>(n) * static_cast<double>(n - 1));
  const double statistic = u_statistic(m);

  BootstrapResult out;
  out.replicates.resize(n_bootstrap);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t b = 0; b < static_cast<std::ptrdiff_t>(n_bootstrap); ++b) {
    RandomStream s = stream.derive("bootstrap", static_cast<std::uint64_t>(b));
    Vector eps(n);
    for (Eigen::Index i = 0; i < n; ++i) eps[i] = s.sign();
    double total = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      double row = 0.0;
      for (Eigen::Index j = i + 1; j < n; ++j) row += eps[j] * e(i, j);
      total += eps[i] * row;
    }
    out.replicates[static_cast<std::size_t>(b)] = scale * total;
  }

  std::size_t exceed = 0;
  for (double r : out.replicates) exceed += r >= statistic ? 1 : 0;
  out.p_value = static_cast<double>(1 + exceed) / static_cast<double>(n_bootstrap + 1);
  out.quantile = bootstrap_quantile(out.replicates, alpha);
  return out;
}

// ---------------------------------------------------------------------------
// Test

std::vector<ScoredDensity> models_of(std::span<const Observation> data) {
  std::vector<ScoredDensity> out;
  out.reserve(data.size());
  for (const auto& obs : data) out.push_back(obs.model);
  return out;
}

std::vector<Vector> targets_of(std::span<const Observation> data) {
  std::vector<Vector> out;
  out.reserve(data.size());
  for (const auto& obs : data) out.push_back(obs.y);
  return out;
}

TestResult run_calibration_test(std::span<const Observation> data, const DistributionKernel& k,
                                const ScalarKernel& l, const StatisticSpec& statistic,
                                double alpha, std::size_t n_bootstrap, RandomStream& stream) {
  detail::require(data.size() >= 2, "run_calibration_test: need at least 2 data points");
  detail::require(alpha > 0.0 && alpha < 1.0, "run_calibration_test: alpha must be in (0, 1)");
  require_dataset(data, "run_calibration_test");

  const auto models = models_of(data);
  RandomStream gram_stream = stream.derive("gram");
  const GramMatrix kg = gram(k, models, gram_stream);

  RandomStream expectation_stream = stream.derive("expectation");
  const StatMatrix m =
      statistic.kind == StatisticKind::KCCSD
          ? kccsd_matrix(kg.values, l, data)
          : skce_matrix(kg.values, l, data, statistic.strategy, expectation_stream);

  RandomStream bootstrap_stream = stream.derive("bootstrap");
  const BootstrapResult boot = wild_bootstrap(m, n_bootstrap, alpha, bootstrap_stream);

  TestResult r;
  r.statistic = u_statistic(m);
  r.quantile = boot.quantile;
  r.p_value = boot.p_value;
  r.reject = r.statistic >= r.quantile;
  r.alpha = alpha;
  r.bootstrap_count = n_bootstrap;
  r.seed = stream.key();
  return r;
}

}  // namespace kccsd
