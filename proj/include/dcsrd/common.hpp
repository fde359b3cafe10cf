#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

namespace dcsrd {

// 1.53 dB gap of the entropy-constrained uniform scalar quantizer.
inline constexpr double kPiEOver6 = 3.14159265358979323846 * 2.71828182845904523536 / 6.0;

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class SolverFailure : public std::runtime_error {
 public:
  SolverFailure(const std::string& what, double residual)
      : std::runtime_error(what), residual_(residual) {}
  double residual() const noexcept { return residual_; }

 private:
  double residual_;
};

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw std::invalid_argument(msg);
}

enum class Basis { Dct, Identity };

inline std::string to_string(Basis b) { return b == Basis::Dct ? "dct" : "identity"; }

inline Basis basis_from_string(const std::string& s) {
  if (s == "dct") return Basis::Dct;
  if (s == "identity") return Basis::Identity;
  throw ConfigError("unknown basis: " + s);
}

}  // namespace dcsrd
