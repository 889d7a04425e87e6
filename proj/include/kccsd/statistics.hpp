#pragma once

#include <span>
#include <string>
#include <vector>

#include "kccsd/kernels.hpp"
#include "kccsd/mala.hpp"
#include "kccsd/models.hpp"

namespace kccsd {

/// Symmetric n x n matrix of pairwise terms whose off-diagonal upper triangle
/// feeds the U-statistic. The diagonal is ignored.
class StatMatrix {
 public:
  /// Throws ContractViolation if `entries` is not square, not symmetric or
  /// holds non-finite values.
  explicit StatMatrix(Matrix entries);

  Eigen::Index n() const noexcept { return entries_.rows(); }
  const Matrix& entries() const noexcept { return entries_; }
  double operator()(Eigen::Index i, Eigen::Index j) const { return entries_(i, j); }

 private:
  Matrix entries_;
};

enum class StatisticKind { KCCSD, SKCE };
enum class ExpectationMode { ClosedFormGaussian, ExactSampler, MALA };
enum class MalaInit { ModelMean, Origin };

/// How SKCE computes the expectations over model draws.
struct ExpectationStrategy {
  ExpectationMode mode = ExpectationMode::ClosedFormGaussian;
  std::size_t samples = 1;  // draws per model (sampler / MALA)
  MalaConfig mala;
  /// MALA chains start at the model mean (origin for non-Gaussian models)
  /// or at the origin, plus init_noise * N(0, I).
  MalaInit init = MalaInit::ModelMean;
  double init_noise = 1.0;

  static ExpectationStrategy closed_form();
  static ExpectationStrategy exact_sampler(std::size_t m);
  static ExpectationStrategy mala_chains(std::size_t m, MalaConfig cfg, double init_noise = 1.0,
                                         MalaInit init = MalaInit::ModelMean);

  std::string name() const;
};

struct StatisticSpec {
  StatisticKind kind = StatisticKind::KCCSD;
  ExpectationStrategy strategy;  // SKCE only

  static StatisticSpec kccsd() { return {}; }
  static StatisticSpec skce(ExpectationStrategy s) { return {StatisticKind::SKCE, s}; }

  std::string name() const;
};

struct TestResult {
  double statistic = 0.0;
  double quantile = 0.0;
  double p_value = 1.0;
  bool reject = false;
  double alpha = 0.05;
  std::size_t bootstrap_count = 0;
  std::uint64_t seed = 0;
};

/// Stein kernel h((p, y), (p', y')) built from scalar_bundle.
double h_term(const ScalarKernel& l, const ScoredDensity& p, const Vector& y,
              const ScoredDensity& pp, const Vector& yp);

/// Same quantity from precomputed scores s = s_p(y), sp = s_{p'}(y'), fused
/// into one pass without temporaries.
double stein_kernel(const ScalarKernel& l, const double* y, const double* s, const double* yp,
                    const double* sp, Eigen::Index d) noexcept;

/// H_ij = k_gram(i, j) * h((p_i, y_i), (p_j, y_j)). Rows filled in parallel.
StatMatrix kccsd_matrix(const Matrix& k_gram, const ScalarKernel& l,
                        std::span<const Observation> data);

/// 2 / (n (n - 1)) * sum_{i<j} M_ij.
double u_statistic(const StatMatrix& m);

/// k_dist * [l(y, y') - E_z l(z, y') - E_z' l(y, z') + E_{z,z'} l(z, z')] with
/// z ~ p, z' ~ p'. Sample strategies draw fresh batches from `stream`.
double skce_g_term(double k_dist, const ScalarKernel& l, const ScoredDensity& p, const Vector& y,
                   const ScoredDensity& pp, const Vector& yp, const ExpectationStrategy& strategy,
                   RandomStream& stream);

/// SKCE pair matrix. Sample strategies draw one batch per data point from
/// stream.derive("expectation", i); the batch is independent of the targets,
/// so every entry stays unbiased.
StatMatrix skce_matrix(const Matrix& k_gram, const ScalarKernel& l,
                       std::span<const Observation> data, const ExpectationStrategy& strategy,
                       RandomStream& stream);

struct BootstrapResult {
  double quantile = 0.0;
  double p_value = 1.0;
  std::vector<double> replicates;
};

/// Rademacher wild bootstrap of the degenerate U-statistic. Replicate b uses
/// stream.derive("bootstrap", b), so the output does not depend on threads.
BootstrapResult wild_bootstrap(const StatMatrix& m, std::size_t n_bootstrap, double alpha,
                               RandomStream& stream);

/// (1 - alpha) empirical quantile: order statistic ceil((1 - alpha) B) of
/// the replicates.
double bootstrap_quantile(std::vector<double> replicates, double alpha);

/// Full test: Gram matrix (base samples drawn once), pair matrix, U-statistic,
/// bootstrap quantile, verdict reject iff statistic >= quantile.
TestResult run_calibration_test(std::span<const Observation> data, const DistributionKernel& k,
                                const ScalarKernel& l, const StatisticSpec& statistic,
                                double alpha, std::size_t n_bootstrap, RandomStream& stream);

std::vector<ScoredDensity> models_of(std::span<const Observation> data);
std::vector<Vector> targets_of(std::span<const Observation> data);

}  // namespace kccsd
