#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "weaksde/models.hpp"
#include "weaksde/noise.hpp"
#include "weaksde/stats.hpp"

namespace weaksde {

enum class SchemeKind {
  EM,               // Gaussian increments
  SimplifiedEM,     // noise with m1 = 0, m2 = 1, m3 = 0
  SkewedEM,         // noise with m1 = 0, m2 = 1 (weak order 0.5)
  FirstMomentOnly,  // noise with m1 = 0 only; does not converge weakly
};

std::string to_string(SchemeKind kind);
SchemeKind scheme_kind_from_string(const std::string& name);

/// A stepper y + eps a(y) + sqrt(eps) B(y) nu with nu drawn i.i.d. per noise channel from `noise()`.
class Scheme {
 public:
  /// Default noise per kind: EM Gaussian, SimplifiedEM +-1, SkewedEM the {sqrt(3/2), -sqrt(2/3)}
  /// law with P = 0.4, FirstMomentOnly +-2 (variance 4).
  explicit Scheme(SchemeKind kind, std::optional<NoiseSpec> noise_override = std::nullopt);

  SchemeKind kind() const noexcept { return kind_; }
  const NoiseSpec& noise() const noexcept { return noise_; }

  static NoiseSpec default_noise(SchemeKind kind);
  /// Throws SpecError if `noise` does not satisfy the moment conditions of `kind`.
  static void check_compatible(SchemeKind kind, const NoiseSpec& noise);

 private:
  SchemeKind kind_;
  NoiseSpec noise_;
};

/// Scratch buffers for one trajectory; reuse across steps.
struct StepWorkspace {
  std::vector<double> drift;
  std::vector<double> diffusion;
  std::vector<double> nu;

  explicit StepWorkspace(const SdeModel& model)
      : drift(model.dim_state), diffusion(model.dim_state * model.dim_noise), nu(model.dim_noise) {}
};

/// y <- y + eps a(y) + sqrt(eps) B(y) nu for a given nu. Throws SimulationError on non-finite
/// coefficients or result (path/step fields are left 0).
void apply_increment(const SdeModel& model, std::span<double> y, double eps, std::span<const double> nu,
                     StepWorkspace& ws);

/// One scheme step in place, drawing nu from the scheme's noise.
void step(const Scheme& scheme, const SdeModel& model, std::span<double> y, double eps, Stream& stream,
          StepWorkspace& ws);
std::vector<double> step(const Scheme& scheme, const SdeModel& model, std::span<const double> y, double eps,
                         Stream& stream);

using TestFunction = std::function<double(std::span<const double>)>;

struct SimulationPlan {
  SdeModel model;
  Scheme scheme;
  double eps;
  double horizon = 1.0;
  std::size_t n_paths;
  std::uint64_t seed;

  /// K = T / eps; throws SpecError unless integral.
  std::size_t steps() const;
};

/// Runs n_paths trajectories (path i uses stream (seed, i)) and summarizes f(y_K).
/// Parallel over paths; the reduction is pairwise over the per-path buffer so the result is
/// bit-identical for any thread count.
SampleSummary simulate_terminal(const SimulationPlan& plan, const TestFunction& f);

/// Terminal values f(y_K) for every path, in path order.
std::vector<double> simulate_terminal_values(const SimulationPlan& plan, const TestFunction& f);

namespace reference {
/// Serial implementation kept as the ground truth for the parallel kernel.
SampleSummary simulate_terminal(const SimulationPlan& plan, const TestFunction& f);
}

}  // namespace weaksde
