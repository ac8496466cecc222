#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "weaksde/models.hpp"
#include "weaksde/schemes.hpp"

namespace weaksde {

// ---------------------------------------------------------------------------
// Weak error and order fitting

enum class TestFunctionKind { Identity, Square };

std::string to_string(TestFunctionKind f);
TestFunctionKind test_function_from_string(const std::string& name);
/// f(x) = x_0 or x_0^2.
TestFunction make_test_function(TestFunctionKind f);

struct ErrorRow {
  double eps;
  double error;
  double std_error;
  std::size_t n_paths;
  double estimate;  // Monte Carlo E[f(y_K)]
  double exact;     // oracle E[f(x_T)]
};

struct ErrorTable {
  std::vector<ErrorRow> rows;
};

/// One simulate_terminal per eps (strictly decreasing), errors against the model's analytic oracle.
/// Throws ConfigError when the oracle needed for f is missing.
ErrorTable weak_error_sweep(const SdeModel& model, const Scheme& scheme, TestFunctionKind f,
                            std::span<const double> eps_list, std::size_t n_paths, std::uint64_t seed,
                            double horizon = 1.0);

struct OrderFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  std::vector<std::size_t> used_rows;
  std::vector<std::size_t> excluded_rows;  // error <= 2 std_error
};

/// Least squares of log(error) on log(eps) over rows with error > 2 std_error.
/// Throws InsufficientSignal with fewer than 3 usable rows.
OrderFit fit_order(const ErrorTable& table);

// ---------------------------------------------------------------------------
// One-step increments

struct OneStepMoments {
  std::size_t dim = 1;
  std::vector<double> mean;            // E[Delta^d]
  std::vector<double> mean_se;
  std::vector<double> second;          // E[Delta^d1 Delta^d2], row-major D x D
  std::vector<double> second_se;
  std::size_t n = 0;
};

/// Empirical moments of Delta = y_1 - y from n independent one-step draws at y.
OneStepMoments one_step_moments(const Scheme& scheme, const SdeModel& model, std::span<const double> y,
                                double eps, std::size_t n, std::uint64_t seed);

namespace reference {
OneStepMoments one_step_moments(const Scheme& scheme, const SdeModel& model, std::span<const double> y,
                                double eps, std::size_t n, std::uint64_t seed);
}

/// eps^2 a^d1 a^d2 + eps sum_m B^{d1,m} B^{d2,m}, row-major D x D.
std::vector<double> one_step_second_moment_exact(const SdeModel& model, std::span<const double> y, double eps);

// ---------------------------------------------------------------------------
// Stationary law of SGD / SGLD

struct StationaryParams {
  std::vector<double> m1;
  std::vector<double> m2;
  double eps = 0.0;
  double beta = 0.0;
  std::vector<double> bias;  // (2 / (D eps)) m1 / (m2 - m1^2)
};

/// beta = (2 / (D eps)) sum_d 1 / (m2_d - m1_d^2). Throws SpecError unless every variance is positive.
StationaryParams make_stationary_params(std::vector<double> m1, std::vector<double> m2, double eps);

/// beta from unified-noise moments, i.e. make_stationary_params(m_rho1, m_rho2, eps).beta.
double thermodynamic_beta(std::span<const double> m1, std::span<const double> m2, double eps);

struct NormalizedDensity {
  TargetDensity density;  // log_density includes -log Z when normalized
  bool normalized = false;
  double log_normalizer = 0.0;
};

/// Normalizes exp(log_density) over support_hint: adaptive Gauss-Kronrod for D = 1,
/// tensor Gauss-Legendre for D <= 3, left unnormalized (flag false) above that.
NormalizedDensity normalize(const TargetDensity& target);

/// log p = beta log pi + bias . theta - log Z (diagonal R).
/// Throws NormalizationError when the density does not decay in some direction.
NormalizedDensity stationary_density(const StationaryParams& params, const TargetDensity& target);

struct UnifiedNoiseMoments {
  std::vector<double> m_rho1;
  std::vector<double> m_rho2;
};

/// m_rho1 = m_d1 + m_x1;  m_rho2 = m_d2 + sqrt(8/eps) m_d1 m_x1 + (2/eps) m_x2, elementwise.
UnifiedNoiseMoments unified_noise_moments(std::span<const double> m_d1, std::span<const double> m_d2,
                                          std::span<const double> m_x1, std::span<const double> m_x2,
                                          double eps);

// ---------------------------------------------------------------------------
// Histograms

struct Histogram {
  std::vector<double> edges;      // n_bins + 1, uniform
  std::vector<std::size_t> counts;
  std::vector<double> densities;  // integrate to 1 over [edges.front(), edges.back()]
  std::size_t in_range = 0;
  std::size_t below = 0;
  std::size_t above = 0;

  std::size_t bins() const noexcept { return counts.size(); }
  double bin_width() const noexcept { return (edges.back() - edges.front()) / static_cast<double>(bins()); }
  std::size_t argmax() const;
};

Histogram make_histogram(std::span<const double> values, Interval range, std::size_t bins = 50);

/// Probability mass of a normalized 1-D density in each bin of h (15-point Gauss-Legendre per bin).
std::vector<double> bin_masses(const Histogram& h, const TargetDensity& density);

/// sum_b |h mass_b - integral of density over bin b|, in [0, 2]. Throws SpecError on an empty histogram.
double histogram_l1(const Histogram& h, const TargetDensity& density);

/// Grid-search argmax of a 1-D log-density on [range.lo, range.hi] with n points.
double density_argmax(const TargetDensity& density, Interval range, std::size_t n = 100001);

/// Mean and variance of a normalized 1-D density over its support_hint.
struct DensityMoments {
  double mean;
  double variance;
};
DensityMoments density_moments(const TargetDensity& density);

}  // namespace weaksde
