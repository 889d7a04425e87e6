#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "kccsd/random.hpp"

namespace kccsd {

/// Gaussian predictive density with diagonal covariance.
class DiagonalGaussian {
 public:
  /// Throws ContractViolation unless `mean` and `var` have the same length
  /// d >= 1 and every variance is strictly positive and finite.
  DiagonalGaussian(Vector mean, Vector var);

  /// Isotropic N(mean, variance * I).
  static DiagonalGaussian isotropic(Vector mean, double variance);

  Eigen::Index dim() const noexcept { return mean_.size(); }
  const Vector& mean() const noexcept { return mean_; }
  const Vector& var() const noexcept { return var_; }

  double log_density(const Vector& y) const;
  bool is_isotropic() const noexcept;

  friend bool operator==(const DiagonalGaussian& a, const DiagonalGaussian& b) {
    return a.mean_ == b.mean_ && a.var_ == b.var_;
  }

 private:
  Vector mean_;
  Vector var_;
};

/// Elementwise (mean - y) / var.
Vector gaussian_score(const DiagonalGaussian& g, const Vector& y);

/// n i.i.d. draws mean + sqrt(var) * xi.
std::vector<Vector> sample_gaussian(const DiagonalGaussian& g, std::size_t n,
                                    RandomStream& stream);

/// Capability record for a density known through its score.
///
/// `log_unnorm` and `sampler` are optional. When the density is a diagonal
/// Gaussian, `gaussian` holds it so closed-form paths can be used.
struct ScoredDensity {
  using ScoreFn = std::function<Vector(const Vector&)>;
  using LogDensityFn = std::function<double(const Vector&)>;
  using SamplerFn = std::function<Vector(RandomStream&)>;

  Eigen::Index dim = 0;
  ScoreFn score;
  LogDensityFn log_unnorm;
  SamplerFn sampler;
  std::optional<DiagonalGaussian> gaussian;

  bool has_log_unnorm() const noexcept { return static_cast<bool>(log_unnorm); }
  bool has_sampler() const noexcept { return static_cast<bool>(sampler); }
};

ScoredDensity as_scored(const DiagonalGaussian& g);

/// Density known only up to normalization. No sampler, no closed forms.
ScoredDensity unnormalized(Eigen::Index dim, ScoredDensity::ScoreFn score,
                           ScoredDensity::LogDensityFn log_unnorm = {});

/// One (prediction, target) pair.
struct Observation {
  ScoredDensity model;
  Vector y;
};

using Dataset = std::vector<Observation>;

Observation make_observation(const DiagonalGaussian& model, Vector y);

enum class Family { MGM, LGM, HGM, QGM };
enum class MgmShift { AllOnes, FirstCoordinate };

/// Synthetic benchmark with miscalibration degree `delta` (calibrated at 0).
struct SyntheticSetup {
  Family family = Family::LGM;
  double delta = 0.0;
  MgmShift shift = MgmShift::AllOnes;  // MGM only

  Eigen::Index input_dim() const noexcept;
  Eigen::Index target_dim() const noexcept;
  /// "MGM-ones", "MGM-first", "LGM", "HGM", "QGM".
  std::string label() const;
};

/// Predictive model P_{|x} of the setup at input x.
DiagonalGaussian setup_model(const SyntheticSetup& setup, const Vector& x);

/// True conditional law of Y given X = x.
DiagonalGaussian setup_truth(const SyntheticSetup& setup, const Vector& x);

/// n i.i.d. (model, target) pairs. Deterministic given the stream state.
Dataset sample_setup(const SyntheticSetup& setup, std::size_t n, RandomStream& stream);

/// (1 - alpha) quantile of the chi-square distribution with `dof` degrees of
/// freedom, found by bracketing on the regularized lower incomplete gamma.
double chi_square_quantile(double prob, int dof);

/// True iff y lies in the (1 - alpha) highest density region of g.
bool hdr_contains(const DiagonalGaussian& g, const Vector& y, double alpha);

/// Fraction of pairs whose target lies in the model's (1 - alpha) HDR. Every
/// model must carry a Gaussian.
double coverage_rate(std::span<const Observation> pairs, double alpha);

}  // namespace kccsd
