#include "kccsd/reference.hpp"

#include <cmath>

#include "kccsd/errors.hpp"

namespace kccsd::reference {

Matrix gram_values(const DistributionKernel& resolved, std::span<const ScoredDensity> models) {
  detail::require(resolved.sigma.has_value(), "reference::gram_values: sigma must be resolved");
  if (resolved.kind == DistKind::ExpMMD && resolved.mmd_mode == MmdMode::Sampled) {
    throw UnsupportedCombination("reference::gram_values: sampled MMD not supported");
  }
  const auto n = static_cast<Eigen::Index>(models.size());
  const double sigma = *resolved.sigma;
  RandomStream unused(0);
  Matrix out(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      const double sq = squared_distance(resolved, models[static_cast<std::size_t>(i)],
                                         models[static_cast<std::size_t>(j)], unused);
      out(i, j) = std::exp(-sq / (2.0 * sigma * sigma));
    }
  }
  return out;
}

Matrix kccsd_matrix(const Matrix& k_gram, const ScalarKernel& l, std::span<const Observation> data) {
  const auto n = static_cast<Eigen::Index>(data.size());
  detail::require(k_gram.rows() == n && k_gram.cols() == n,
                  "reference::kccsd_matrix: Gram matrix size mismatch");
  Matrix out = Matrix::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      if (i == j) continue;
      const auto& a = data[static_cast<std::size_t>(i)];
      const auto& b = data[static_cast<std::size_t>(j)];
      out(i, j) = k_gram(i, j) * h_term(l, a.model, a.y, b.model, b.y);
    }
  }
  return out;
}

double u_statistic(const Matrix& m) {
  const Eigen::Index n = m.rows();
  detail::require(n >= 2, "reference::u_statistic: need at least 2 points");
  double total = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      if (i != j) total += m(i, j);
    }
  }
  return total / (static_cast<double>(n) * static_cast<double>(n - 1));
}

BootstrapResult wild_bootstrap(const Matrix& m, std::size_t n_bootstrap, double alpha,
                               RandomStream& stream) {
  const Eigen::Index n = m.rows();
  const double statistic = u_statistic(m);
  BootstrapResult out;
  out.replicates.reserve(n_bootstrap);
  for (std::size_t b = 0; b < n_bootstrap; ++b) {
    RandomStream s = stream.derive("bootstrap", b);
    const std::vector<int> eps = rademacher(static_cast<std::size_t>(n), s);
    double total = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j < n; ++j) {
        if (i != j) total += eps[static_cast<std::size_t>(i)] * eps[static_cast<std::size_t>(j)] * m(i, j);
      }
    }
    out.replicates.push_back(total / (static_cast<double>(n) * static_cast<double>(n - 1)));
  }
  std::size_t exceed = 0;
  for (double r : out.replicates) exceed += r >= statistic ? 1 : 0;
  out.p_value = static_cast<double>(1 + exceed) / static_cast<double>(n_bootstrap + 1);
  out.quantile = bootstrap_quantile(out.replicates, alpha);
  return out;
}

}  // namespace kccsd::reference
