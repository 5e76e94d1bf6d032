#pragma once

#include <cstddef>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "activerank/error.hpp"

namespace activerank {

// Target partition of n items into L >= 2 score-ordered sets. Set l (0-based)
// holds the items ranked in positions [k_l, k_{l+1}) after sorting by score,
// with k_0 = 0 and k_L = n. `boundaries` stores k_1 < ... < k_L.
class PartitionSpec {
 public:
  PartitionSpec() = default;

  PartitionSpec(std::size_t n, std::vector<std::size_t> boundaries)
      : n_(n), boundaries_(std::move(boundaries)) {
    if (boundaries_.size() < 2)
      throw ConfigError("a partition needs at least 2 sets");
    std::size_t prev = 0;
    for (std::size_t b : boundaries_) {
      if (b <= prev) {
        std::ostringstream os;
        os << "boundaries must be strictly increasing positive integers, got "
           << to_string();
        throw ConfigError(os.str());
      }
      prev = b;
    }
    if (boundaries_.back() != n_) {
      std::ostringstream os;
      os << "last boundary must equal the item count " << n_ << ", got "
         << boundaries_.back();
      throw ConfigError(os.str());
    }
  }

  // Top-k identification: sets {top k} and {the rest}.
  static PartitionSpec top_k(std::size_t n, std::size_t k) {
    return PartitionSpec(n, {k, n});
  }

  // Full ranking: n singleton sets.
  static PartitionSpec full_ranking(std::size_t n) {
    std::vector<std::size_t> b(n);
    for (std::size_t i = 0; i < n; ++i) b[i] = i + 1;
    return PartitionSpec(n, std::move(b));
  }

  std::size_t items() const noexcept { return n_; }
  std::size_t sets() const noexcept { return boundaries_.size(); }
  const std::vector<std::size_t>& boundaries() const noexcept { return boundaries_; }

  // k_l for l in [0, L], with k_0 = 0.
  std::size_t border(std::size_t l) const { return l == 0 ? 0 : boundaries_[l - 1]; }
  std::size_t set_size(std::size_t l) const { return border(l + 1) - border(l); }

  std::string to_string() const {
    std::ostringstream os;
    for (std::size_t i = 0; i < boundaries_.size(); ++i)
      os << (i ? "," : "") << boundaries_[i];
    return os.str();
  }

 private:
  std::size_t n_ = 0;
  std::vector<std::size_t> boundaries_;
};

// Parses "2,4,6" into boundaries.
inline std::vector<std::size_t> parse_boundaries(const std::string& text) {
  std::vector<std::size_t> out;
  std::stringstream ss(text);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (tok.empty()) continue;
    std::size_t pos = 0;
    long long v = 0;
    try {
      v = std::stoll(tok, &pos);
    } catch (const std::exception&) {
      throw ConfigError("boundaries: '" + tok + "' is not an integer");
    }
    if (pos != tok.size() || v <= 0)
      throw ConfigError("boundaries: '" + tok + "' is not a positive integer");
    out.push_back(static_cast<std::size_t>(v));
  }
  return out;
}

}  // namespace activerank
