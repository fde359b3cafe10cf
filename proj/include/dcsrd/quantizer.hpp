#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <unordered_map>
#include <vector>

#include "dcsrd/common.hpp"

// Uniform scalar quantization plus the empirical (conditional) symbol-entropy
// rate accounting. Midtread convention: symbol = round(y/step), ties away
// from zero; reconstruction at bin centers.
namespace dcsrd::quantizer {

struct QuantizerSpec {
  double step = 1.0;

  void validate() const { require(step > 0, "QuantizerSpec: step must be positive"); }
};

struct SymbolStream {
  std::vector<std::int64_t> symbols;
  double step = 1.0;
};

inline SymbolStream quantize(const Eigen::VectorXd& y, const QuantizerSpec& spec) {
  spec.validate();
  SymbolStream s;
  s.step = spec.step;
  s.symbols.resize(static_cast<std::size_t>(y.size()));
  for (Eigen::Index i = 0; i < y.size(); ++i) s.symbols[i] = std::llround(y[i] / spec.step);
  return s;
}

inline Eigen::VectorXd dequantize(const SymbolStream& s) {
  Eigen::VectorXd y(static_cast<Eigen::Index>(s.symbols.size()));
  for (std::size_t i = 0; i < s.symbols.size(); ++i)
    y[static_cast<Eigen::Index>(i)] = static_cast<double>(s.symbols[i]) * s.step;
  return y;
}

namespace detail {

struct PairHash {
  std::size_t operator()(const std::pair<std::int64_t, std::int64_t>& p) const noexcept {
    std::uint64_t h = static_cast<std::uint64_t>(p.first) * 0x9e3779b97f4a7c15ULL;
    h ^= static_cast<std::uint64_t>(p.second) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    return static_cast<std::size_t>(h);
  }
};

// Entropy of a count table in bits. Keys are visited in sorted order so the
// floating-point sum does not depend on hash-map iteration order.
template <typename Map>
double entropy_bits_sorted(const Map& counts, std::uint64_t total) {
  if (total == 0) return 0.0;
  std::vector<std::pair<typename Map::key_type, std::uint64_t>> items(counts.begin(), counts.end());
  std::sort(items.begin(), items.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  const double n = static_cast<double>(total);
  double h = 0.0;
  for (const auto& [key, c] : items) {
    const double p = static_cast<double>(c) / n;
    h -= p * std::log2(p);
  }
  return h;
}

}  // namespace detail

// Occurrence counts of one symbol stream; mergeable across workers (integer
// counts, so the merge is exact and order-insensitive).
class SymbolCounter {
 public:
  void add(const SymbolStream& s) {
    for (auto sym : s.symbols) ++counts_[sym];
    total_ += s.symbols.size();
  }

  void merge(const SymbolCounter& other) {
    for (const auto& [k, c] : other.counts_) counts_[k] += c;
    total_ += other.total_;
  }

  std::uint64_t total() const { return total_; }
  std::size_t alphabet_size() const { return counts_.size(); }
  double entropy_bits() const { return detail::entropy_bits_sorted(counts_, total_); }

 private:
  std::unordered_map<std::int64_t, std::uint64_t> counts_;
  std::uint64_t total_ = 0;
};

// Joint occurrence counts of (symbol, side-symbol) pairs. The side sequence
// is binned at its own step; conditional entropy is H(joint) - H(side).
class JointSymbolCounter {
 public:
  void add(const SymbolStream& s1, const Eigen::VectorXd& y2, double side_step) {
    require(side_step > 0, "JointSymbolCounter: side_step must be positive");
    require(static_cast<std::size_t>(y2.size()) == s1.symbols.size(),
            "JointSymbolCounter: length mismatch");
    for (std::size_t i = 0; i < s1.symbols.size(); ++i) {
      const std::int64_t b = std::llround(y2[static_cast<Eigen::Index>(i)] / side_step);
      ++counts_[{s1.symbols[i], b}];
    }
    total_ += s1.symbols.size();
  }

  void merge(const JointSymbolCounter& other) {
    for (const auto& [k, c] : other.counts_) counts_[k] += c;
    total_ += other.total_;
  }

  std::uint64_t total() const { return total_; }
  std::size_t table_size() const { return counts_.size(); }

  double joint_entropy_bits() const { return detail::entropy_bits_sorted(counts_, total_); }

  double side_entropy_bits() const {
    std::unordered_map<std::int64_t, std::uint64_t> side;
    for (const auto& [k, c] : counts_) side[k.second] += c;
    return detail::entropy_bits_sorted(side, total_);
  }

  double conditional_entropy_bits() const { return joint_entropy_bits() - side_entropy_bits(); }

 private:
  std::unordered_map<std::pair<std::int64_t, std::int64_t>, std::uint64_t, detail::PairHash>
      counts_;
  std::uint64_t total_ = 0;
};

// Plug-in symbol entropy of one stream, bits per symbol.
inline double empirical_entropy(const SymbolStream& s) {
  require(!s.symbols.empty(), "empirical_entropy: empty stream");
  SymbolCounter c;
  c.add(s);
  return c.entropy_bits();
}

// Plug-in conditional symbol entropy H(S1 | Y2 binned at side_step). Always
// <= empirical_entropy(s1) by subadditivity of the plug-in estimate.
inline double empirical_conditional_entropy(const SymbolStream& s1, const Eigen::VectorXd& y2,
                                            double side_step) {
  require(!s1.symbols.empty(), "empirical_conditional_entropy: empty stream");
  JointSymbolCounter c;
  c.add(s1, y2, side_step);
  return c.conditional_entropy_bits();
}

}  // namespace dcsrd::quantizer
