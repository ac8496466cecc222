#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace weaksde {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
  virtual const char* kind() const noexcept { return "error"; }
};

/// Invalid noise spec, model, scheme/noise pairing or other construction input.
struct SpecError : Error {
  using Error::Error;
  const char* kind() const noexcept override { return "spec"; }
};

/// Non-finite state while simulating an SDE trajectory.
struct SimulationError : Error {
  SimulationError(const std::string& what, std::vector<double> state,
                  std::uint64_t path, std::uint64_t step)
      : Error(what), state(std::move(state)), path(path), step(step) {}
  const char* kind() const noexcept override { return "simulation"; }

  std::vector<double> state;
  std::uint64_t path;
  std::uint64_t step;
};

/// Non-finite parameter in a sampling chain.
struct DivergenceError : Error {
  DivergenceError(const std::string& what, std::vector<double> state, std::uint64_t step)
      : Error(what), state(std::move(state)), step(step) {}
  const char* kind() const noexcept override { return "divergence"; }

  std::vector<double> state;
  std::uint64_t step;
};

/// Gradient-noise variance leaves no room for the adaptive diffusion: (eps/2) v >= 1.
struct BudgetExceeded : Error {
  BudgetExceeded(const std::string& what, std::size_t component, double v)
      : Error(what), component(component), v(v) {}
  const char* kind() const noexcept override { return "budget"; }

  std::size_t component;
  double v;
};

/// Not enough rows above the Monte Carlo noise level to fit a convergence order.
struct InsufficientSignal : Error {
  using Error::Error;
  const char* kind() const noexcept override { return "insufficient_signal"; }
};

/// Stationary density cannot be normalized.
struct NormalizationError : Error {
  NormalizationError(const std::string& what, std::size_t dimension, int direction)
      : Error(what), dimension(dimension), direction(direction) {}
  const char* kind() const noexcept override { return "normalization"; }

  std::size_t dimension;
  int direction;  // +1 or -1, 0 if unknown
};

struct ConfigError : Error {
  ConfigError(const std::string& key, const std::string& what)
      : Error(key.empty() ? what : key + ": " + what), key(key) {}
  const char* kind() const noexcept override { return "config"; }

  std::string key;
};

}  // namespace weaksde
