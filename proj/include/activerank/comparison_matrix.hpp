#pragma once

#include <algorithm>
#include <cstddef>
#include <numeric>
#include <sstream>
#include <utility>
#include <vector>

#include "activerank/error.hpp"

namespace activerank {

// Entries must lie in [kMinEntry, 1 - kMinEntry]; the win probabilities are
// required to be strictly inside (0, 1).
inline constexpr double kMinEntry = 1e-9;

// Borda scores: tau[i] is the probability that item i beats an opponent drawn
// uniformly from the other n - 1 items.
class ScoreVector {
 public:
  ScoreVector() = default;
  explicit ScoreVector(std::vector<double> tau) : tau_(std::move(tau)) {}

  std::size_t size() const noexcept { return tau_.size(); }
  double operator[](std::size_t i) const { return tau_[i]; }
  const std::vector<double>& values() const noexcept { return tau_; }

  double sum() const { return std::accumulate(tau_.begin(), tau_.end(), 0.0); }

  auto begin() const noexcept { return tau_.begin(); }
  auto end() const noexcept { return tau_.end(); }

 private:
  std::vector<double> tau_;
};

// n x n pairwise win probabilities. Only the strict upper triangle is stored;
// M(j, i) = 1 - M(i, j) and M(i, i) = 1/2 are derived, so skew-symmetry holds
// exactly.
class ComparisonMatrix {
 public:
  ComparisonMatrix() = default;

  // `upper` lists M_01, M_02, ..., M_{n-2,n-1} row-major.
  ComparisonMatrix(std::size_t n, std::vector<double> upper)
      : n_(n), upper_(std::move(upper)) {
    if (n_ < 2) throw ConfigError("comparison matrix needs at least 2 items");
    if (upper_.size() != n_ * (n_ - 1) / 2) {
      std::ostringstream os;
      os << "upper triangle of a " << n_ << "-item matrix has "
         << n_ * (n_ - 1) / 2 << " entries, got " << upper_.size();
      throw ConfigError(os.str());
    }
    for (std::size_t k = 0; k < upper_.size(); ++k) {
      const double v = upper_[k];
      if (!(v >= kMinEntry && v <= 1.0 - kMinEntry)) {
        std::ostringstream os;
        os << "entry " << k << " of the upper triangle is " << v
           << ", outside [" << kMinEntry << ", 1 - " << kMinEntry << "]";
        throw ConfigError(os.str());
      }
    }
  }

  // Builds from a full row-major n x n array, reading only the upper triangle.
  static ComparisonMatrix from_dense(std::size_t n, const std::vector<double>& dense) {
    if (dense.size() != n * n) throw ConfigError("dense matrix has wrong size");
    std::vector<double> upper;
    upper.reserve(n * (n - 1) / 2);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) upper.push_back(dense[i * n + j]);
    return ComparisonMatrix(n, std::move(upper));
  }

  // Every off-diagonal entry equal to 1/2.
  static ComparisonMatrix uniform(std::size_t n) {
    return ComparisonMatrix(n, std::vector<double>(n * (n - 1) / 2, 0.5));
  }

  std::size_t size() const noexcept { return n_; }
  const std::vector<double>& upper() const noexcept { return upper_; }

  double operator()(std::size_t i, std::size_t j) const {
    if (i == j) return 0.5;
    if (i < j) return upper_[upper_index(i, j)];
    return 1.0 - upper_[upper_index(j, i)];
  }

  std::size_t upper_index(std::size_t i, std::size_t j) const noexcept {
    // Row i starts after rows 0..i-1, which hold (n-1) + ... + (n-i) entries.
    return i * (2 * n_ - i - 1) / 2 + (j - i - 1);
  }

  double min_off_diagonal() const {
    double lo = 1.0;
    for (double v : upper_) lo = std::min(lo, std::min(v, 1.0 - v));
    return lo;
  }

  friend bool operator==(const ComparisonMatrix&, const ComparisonMatrix&) = default;

 private:
  std::size_t n_ = 0;
  std::vector<double> upper_;
};

}  // namespace activerank
