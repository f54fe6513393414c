#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace retrial {

/// Raised by any stationary quantity requested for a model whose embedded
/// chain is not ergodic.
class UnstableModel : public std::runtime_error {
 public:
  explicit UnstableModel(double margin)
      : std::runtime_error("unstable: stability margin " + std::to_string(margin) + " <= 0"),
        margin_(margin) {}
  double margin() const noexcept { return margin_; }

 private:
  double margin_;
};

class TruncationInsufficient : public std::runtime_error {
 public:
  TruncationInsufficient(double boundary_mass, std::size_t suggested_max_orbit)
      : std::runtime_error("truncation insufficient: boundary mass " +
                           std::to_string(boundary_mass) + ", try max_orbit >= " +
                           std::to_string(suggested_max_orbit)),
        boundary_mass_(boundary_mass),
        suggested_(suggested_max_orbit) {}
  double boundary_mass() const noexcept { return boundary_mass_; }
  std::size_t suggested_max_orbit() const noexcept { return suggested_; }

 private:
  double boundary_mass_;
  std::size_t suggested_;
};

/// A numerically extracted coefficient came out clearly negative.
class NotAPgf : public std::runtime_error {
 public:
  NotAPgf(std::size_t index, double value)
      : std::runtime_error("not a PGF at this tolerance: coefficient " + std::to_string(index) +
                           " = " + std::to_string(value)),
        index_(index),
        value_(value) {}
  std::size_t index() const noexcept { return index_; }
  double value() const noexcept { return value_; }

 private:
  std::size_t index_;
  double value_;
};

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace retrial
