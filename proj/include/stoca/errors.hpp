#pragma once

#include <stdexcept>
#include <string>

namespace stoca {

// Bad rule table, non-stochastic kernel, malformed input file.
struct config_error : std::runtime_error {
  explicit config_error(const std::string& what) : std::runtime_error(what) {}
};

// Window does not fit the torus, or torus too small for the neighborhood.
struct window_error : std::runtime_error {
  explicit window_error(const std::string& what) : std::runtime_error(what) {}
};

// Out-of-range numeric parameter (eps, p, q, speeds, budgets).
struct parameter_error : std::runtime_error {
  explicit parameter_error(const std::string& what) : std::runtime_error(what) {}
};

// State or coefficient budget exceeded where the caller required exactness.
struct budget_error : std::runtime_error {
  explicit budget_error(const std::string& what) : std::runtime_error(what) {}
};

// Power iteration failed to reach the requested residual.
struct ergodicity_error : std::runtime_error {
  explicit ergodicity_error(const std::string& what) : std::runtime_error(what) {}
};

// Operation requires a specific alphabet (e.g. binary) and got another.
struct alphabet_error : std::runtime_error {
  explicit alphabet_error(const std::string& what) : std::runtime_error(what) {}
};

// Simulation ended without the event the caller asked about.
struct inconclusive_error : std::runtime_error {
  explicit inconclusive_error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace stoca
