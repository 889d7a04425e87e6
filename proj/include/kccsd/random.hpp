#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

#include <Eigen/Core>

namespace kccsd {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Seeded random stream with hierarchical derivation.
///
/// Every stream is identified by a 64-bit key. `derive(label, index)` hashes
/// the parent key with the label and index into a child key; it depends only
/// on the parent's key, never on how many numbers the parent has produced.
/// Parallel code derives one child per work item, which makes results
/// independent of the thread schedule.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed = 0);

  RandomStream derive(std::string_view label, std::uint64_t index = 0) const;

  std::uint64_t key() const noexcept { return key_; }

  double normal();
  double uniform(double lo, double hi);
  int sign();
  std::mt19937_64& engine() noexcept { return engine_; }

 private:
  std::uint64_t key_;
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

/// Vector of `d` i.i.d. standard normal draws.
Vector standard_normal(Eigen::Index d, RandomStream& stream);

/// `n` i.i.d. Rademacher signs.
std::vector<int> rademacher(std::size_t n, RandomStream& stream);

}  // namespace kccsd
