#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "kccsd/models.hpp"

namespace kccsd {

// ---------------------------------------------------------------------------
// Kernels on the target space

enum class ScalarFamily { Gaussian, IMQ };

/// Gaussian: exp(-|y - y'|^2 / (2 gamma^2)).
/// IMQ:      (1 + |y - y'|^2 / gamma^2)^(-1).
class ScalarKernel {
 public:
  ScalarKernel(ScalarFamily family, double bandwidth);

  static ScalarKernel gaussian(double bandwidth) { return {ScalarFamily::Gaussian, bandwidth}; }
  static ScalarKernel imq(double bandwidth) { return {ScalarFamily::IMQ, bandwidth}; }

  ScalarFamily family() const noexcept { return family_; }
  double bandwidth() const noexcept { return bandwidth_; }

  double from_squared_distance(double r2) const noexcept;
  double operator()(const Vector& y, const Vector& yp) const;

  std::string name() const;

 private:
  ScalarFamily family_;
  double bandwidth_;
};

/// Value and the derivatives of l(y, y') that enter the Stein kernel.
struct KernelBundle {
  double value = 0.0;
  Vector grad_y;       // nabla_y l
  Vector grad_yp;      // nabla_{y'} l
  double mixed_trace = 0.0;  // sum_i d^2 l / dy_i dy'_i
};

KernelBundle scalar_bundle(const ScalarKernel& l, const Vector& y, const Vector& yp);

// ---------------------------------------------------------------------------
// Base measures and score divergences

/// Either the standard Gaussian on R^d or a frozen set of points drawn from it.
class BaseMeasure {
 public:
  static BaseMeasure standard_gaussian(Eigen::Index dim);
  static BaseMeasure frozen(std::vector<Vector> samples);

  Eigen::Index dim() const noexcept { return dim_; }
  bool is_frozen() const noexcept { return !samples_.empty(); }
  const std::vector<Vector>& samples() const noexcept { return samples_; }

  /// Draws m points once. A frozen measure returns itself.
  BaseMeasure freeze(std::size_t m, RandomStream& stream) const;

 private:
  BaseMeasure(Eigen::Index dim, std::vector<Vector> samples)
      : dim_(dim), samples_(std::move(samples)) {}

  Eigen::Index dim_;
  std::vector<Vector> samples_;
};

/// (1/m) sum_i |s_p(z_i) - s_q(z_i)|^2 over the frozen base points.
double gfd_estimate(const ScoredDensity& p, const ScoredDensity& q, const BaseMeasure& base);

/// GFD between two diagonal Gaussians under the standard Gaussian base measure.
double gfd_gaussian_closed(const DiagonalGaussian& p, const DiagonalGaussian& q);

/// (1/m^2) sum_ij k(z_i, z_j) <(s_p - s_q)(z_i), (s_p - s_q)(z_j)>.
double kgfd_estimate(const ScoredDensity& p, const ScoredDensity& q, const BaseMeasure& base,
                     const ScalarKernel& ground);

/// E_{z ~ g} l(z, y') for a Gaussian l. Throws UnsupportedCombination otherwise.
double gaussian_kernel_expectation(const DiagonalGaussian& g, const Vector& yp,
                                   const ScalarKernel& l);

/// E_{z ~ g, z' ~ g'} l(z, z') for a Gaussian l.
double gaussian_kernel_expectation(const DiagonalGaussian& g, const DiagonalGaussian& gp,
                                   const ScalarKernel& l);

/// Squared 2-Wasserstein distance between isotropic Gaussians:
/// |mu - mu'|^2 + d (s - s')^2 with s, s' the standard deviations.
double wasserstein2_squared(const DiagonalGaussian& p, const DiagonalGaussian& q);

// ---------------------------------------------------------------------------
// Kernels on distributions

enum class DistKind { ExpGFD, ExpKGFD, ExpMMD, ExpWasserstein };
enum class MmdMode { ClosedForm, Sampled };

/// exp(-d(p, q)^2 / (2 sigma^2)) for one of four Hilbertian distances.
///
/// Unset `sigma` is chosen by `gram` as the median of the pairwise distances;
/// unset `ground` by the second-order median heuristic. `samples` is the
/// number of base points (GFD, KGFD) or draws per density (sampled MMD).
struct DistributionKernel {
  DistKind kind = DistKind::ExpGFD;
  std::optional<double> sigma;
  std::optional<ScalarKernel> ground;
  MmdMode mmd_mode = MmdMode::ClosedForm;
  std::size_t samples = 10;
  std::optional<BaseMeasure> base;  // defaults to the standard Gaussian

  std::string name() const;
};

DistributionKernel exp_gfd_kernel(std::optional<double> sigma = {}, std::size_t m = 10);
DistributionKernel exp_kgfd_kernel(std::optional<double> sigma = {},
                                   std::optional<ScalarKernel> ground = {}, std::size_t m = 10);
DistributionKernel exp_mmd_kernel(std::optional<double> sigma = {},
                                  std::optional<ScalarKernel> ground = {},
                                  MmdMode mode = MmdMode::ClosedForm, std::size_t m = 10);
DistributionKernel exp_wasserstein_kernel(std::optional<double> length_scale = {});

double exp_gfd(const DistributionKernel& k, const ScoredDensity& p, const ScoredDensity& q);
double exp_kgfd(const DistributionKernel& k, const ScoredDensity& p, const ScoredDensity& q);
/// Sampled mode draws `k.samples` points per density from `stream`.
double exp_mmd(const DistributionKernel& k, const ScoredDensity& p, const ScoredDensity& q,
               RandomStream& stream);
double exp_wasserstein(const DiagonalGaussian& p, const DiagonalGaussian& q, double length_scale);

// ---------------------------------------------------------------------------
// Bandwidth heuristics

/// Lower median of a non-empty list.
double lower_median(std::vector<double> values);

/// Lower median of the pairwise Euclidean distances. Throws DegenerateBandwidth
/// when the result is not a positive bandwidth.
double median_heuristic(std::span<const Vector> points);

/// Median over model pairs of the median pairwise distance between
/// `samples_per_pair` draws from the equal-weight mixture of the pair.
double second_order_median_heuristic(std::span<const DiagonalGaussian> models,
                                     std::size_t samples_per_pair, RandomStream& stream);
double second_order_median_heuristic(std::span<const ScoredDensity> models,
                                     std::size_t samples_per_pair, RandomStream& stream);

// ---------------------------------------------------------------------------
// Gram matrices

struct GramMatrix {
  Matrix values;       // exp(-sq_dist / (2 sigma^2)), unit diagonal
  Matrix sq_dist;      // squared Hilbertian distances
  DistributionKernel kernel;  // with sigma, ground and (frozen) base resolved
};

/// Gram matrix over `models`. Base points, per-density samples and heuristic
/// bandwidths are drawn once from labelled children of `stream` and shared by
/// every entry. Entries are filled in parallel.
GramMatrix gram(const DistributionKernel& k, std::span<const ScoredDensity> models,
                RandomStream& stream);

/// Squared distance of a fully resolved kernel (sigma unused) for one pair.
/// Sampled MMD draws from `stream`.
double squared_distance(const DistributionKernel& k, const ScoredDensity& p,
                        const ScoredDensity& q, RandomStream& stream);

}  // namespace kccsd
