#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include "weaksde/models.hpp"
#include "weaksde/noise.hpp"

namespace weaksde {

struct ChainConfig {
  TargetDensity target;
  double eps = 0.01;
  std::size_t n_steps = 0;
  std::size_t burn_in = 0;
  std::size_t thin = 1;
  std::vector<double> init;  // empty means the origin
  std::uint64_t seed = 0;
  std::uint64_t stream_index = 0;

  void validate() const;
};

/// Kept samples, row-major (n_rows x dim).
struct SampleMatrix {
  std::size_t dim = 1;
  std::vector<double> data;

  std::size_t rows() const noexcept { return dim == 0 ? 0 : data.size() / dim; }
  std::span<const double> row(std::size_t i) const { return {data.data() + i * dim, dim}; }
  /// Copy of one coordinate across rows.
  std::vector<double> column(std::size_t d) const;
};

struct UlaGaussian {};
struct UlaSimplified {
  NoiseSpec noise = NoiseSpec::two_point_symmetric(1.0);
};
struct UlaSkewed {
  NoiseSpec noise = NoiseSpec::skewed_reference();
};
using UlaVariant = std::variant<UlaGaussian, UlaSimplified, UlaSkewed>;

/// theta <- theta + eps grad log pi(theta) + sqrt(2 eps) nu. Returns post-burn-in samples, thinned.
SampleMatrix run_ula(const ChainConfig& config, const UlaVariant& variant);

/// theta <- theta + eps (grad log pi(theta) + delta), no injected diffusion.
SampleMatrix run_sgd(const ChainConfig& config, const NoisyGradientModel& gradient_noise);

struct MomentTrackers {
  std::vector<double> r;  // moving average of the stochastic gradient
  std::vector<double> v;  // moving average of its squared deviation from r
};

/// r' = g1 r + (1 - g1) grad;  v' = g2 v + (1 - g2) (grad - r')^2.  No bias correction.
MomentTrackers update_trackers(const MomentTrackers& t, std::span<const double> grad, double gamma1,
                               double gamma2);
void update_trackers_inplace(MomentTrackers& t, std::span<const double> grad, double gamma1, double gamma2);

struct SgldGaussian {};
struct SgldSkewed {
  NoiseSpec noise = NoiseSpec::skewed_reference();
};
/// Diffusion +-sqrt(1 - (eps/2) v) after burn-in; +-1 while the trackers warm up.
struct SgldAdaptiveTwoPoint {};
using SgldDiffusion = std::variant<SgldGaussian, SgldSkewed, SgldAdaptiveTwoPoint>;

struct SgldConfig {
  ChainConfig chain;
  NoisyGradientModel gradient_noise;
  SgldDiffusion diffusion = SgldGaussian{};
  double gamma1 = 0.9;
  double gamma2 = 0.999;
};

struct SgldResult {
  SampleMatrix samples;
  MomentTrackers final_trackers;
  double predicted_beta = 0.0;
};

/// theta <- theta + eps (grad log pi(theta) + delta) + sqrt(2 eps) xi.
/// Trackers (r0 = v0 = 0) run for every diffusion kind; predicted_beta substitutes the final v
/// for the gradient-noise second moment in the unified-noise formula.
SgldResult run_sgld(const SgldConfig& config);

/// Runs one chain per config across threads; chains are independent so results match sequential runs.
std::vector<SampleMatrix> run_ula_batch(std::span<const ChainConfig> configs, const UlaVariant& variant);

}  // namespace weaksde
