#include "kccsd/mala.hpp"

#include <cmath>

#include "kccsd/errors.hpp"

namespace kccsd {
namespace {

// log q(to | from) up to a constant shared by both directions.
double log_proposal(const Vector& to, const Vector& from, const Vector& score_from, double tau) {
  return -(to - from - tau * score_from).squaredNorm() / (4.0 * tau);
}

}  // namespace

MalaChain mala_sample(const ScoredDensity& target, const MalaConfig& cfg, const Vector& init,
                      std::size_t n_samples, RandomStream& stream) {
  if (!target.has_log_unnorm()) {
    throw CapabilityError("mala_sample: target has no unnormalized log density");
  }
  detail::require(cfg.step_size > 0.0 && std::isfinite(cfg.step_size),
                  "mala_sample: step size must be positive");
  detail::require(n_samples >= 1, "mala_sample: n_samples must be at least 1");
  detail::require(cfg.n_steps >= n_samples, "mala_sample: n_steps must be >= n_samples");
  detail::require(init.size() == target.dim, "mala_sample: init dimension mismatch");

  const double tau = cfg.step_size;
  const double noise_scale = std::sqrt(2.0 * tau);

  Vector y = init;
  double log_f = target.log_unnorm(y);
  detail::require(std::isfinite(log_f), "mala_sample: log density not finite at init");
  Vector s = target.score(y);

  std::size_t accepted = 0;
  auto step = [&] {
    Vector proposal = y + tau * s + noise_scale * standard_normal(y.size(), stream);
    const double log_f_prop = target.log_unnorm(proposal);
    if (!std::isfinite(log_f_prop)) return;
    Vector s_prop = target.score(proposal);
    const double log_ratio = log_f_prop - log_f + log_proposal(y, proposal, s_prop, tau) -
                             log_proposal(proposal, y, s, tau);
    if (std::log(stream.uniform(0.0, 1.0)) < log_ratio) {
      y = std::move(proposal);
      s = std::move(s_prop);
      log_f = log_f_prop;
      ++accepted;
    }
  };

  for (std::size_t t = 0; t < cfg.burn_in; ++t) step();

  MalaChain chain;
  chain.samples.reserve(n_samples);
  const std::size_t block = cfg.n_steps / n_samples;
  for (std::size_t k = 0; k < n_samples; ++k) {
    for (std::size_t t = 0; t < block; ++t) step();
    chain.samples.push_back(y);
  }
  const std::size_t total = cfg.burn_in + block * n_samples;
  chain.acceptance_rate = static_cast<double>(accepted) / static_cast<double>(total);
  return chain;
}

}  // namespace kccsd
