#pragma once

#include <vector>

#include "kccsd/models.hpp"

namespace kccsd {

/// Metropolis-adjusted Langevin sampler settings. No step size adaptation.
struct MalaConfig {
  double step_size = 0.5;    // tau
  std::size_t n_steps = 100; // steps after burn-in, split evenly between retained samples
  std::size_t burn_in = 0;
};

struct MalaChain {
  std::vector<Vector> samples;
  double acceptance_rate = 0.0;
};

/// Runs one MALA chain on `target` from `init`.
///
/// Proposal y* = y + tau * s(y) + sqrt(2 tau) * xi, accepted with probability
/// min(1, f(y*) q(y | y*) / (f(y) q(y* | y))). After `burn_in` steps the next
/// `n_steps` are split into `n_samples` equal blocks; the state at the end of
/// each block is retained.
MalaChain mala_sample(const ScoredDensity& target, const MalaConfig& cfg, const Vector& init,
                      std::size_t n_samples, RandomStream& stream);

}  // namespace kccsd
