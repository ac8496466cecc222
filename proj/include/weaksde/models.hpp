#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "weaksde/noise.hpp"

namespace weaksde {

/// out = f(x); out has the size implied by the model (D for drift, D*M row-major for diffusion).
using VectorField = std::function<void(std::span<const double> x, std::span<double> out)>;
using MomentCurve = std::function<std::vector<double>(double t)>;

/// dx = a(x) dt + B(x) dw with x in R^D, w in R^M.
struct SdeModel {
  std::string name;
  std::size_t dim_state = 1;
  std::size_t dim_noise = 1;
  VectorField drift;
  VectorField diffusion;  // B[d * M + m]
  std::vector<double> x0;
  std::optional<MomentCurve> analytic_mean;
  std::optional<MomentCurve> analytic_second_moment;  // elementwise E[x_t^2]
};

struct Interval {
  double lo;
  double hi;
  double width() const noexcept { return hi - lo; }
};

/// Unnormalized log-density with its gradient.
struct TargetDensity {
  std::string name;
  std::size_t dim = 1;
  std::function<double(std::span<const double>)> log_density;
  VectorField grad_log_density;
  std::vector<Interval> support_hint;  // one per dimension

  double log_density_at(double x) const { return log_density(std::span<const double>(&x, 1)); }
  double grad_at(double x) const {
    double g = 0.0;
    grad_log_density(std::span<const double>(&x, 1), std::span<double>(&g, 1));
    return g;
  }
};

/// Stochastic gradient: exact gradient plus noise delta with E[delta] = m1, E[delta^2] = m2,
/// delta = m1 + sqrt(m2 - m1^2) * xi, xi drawn from `shape` (mean 0, second moment 1).
class NoisyGradientModel {
 public:
  NoisyGradientModel(TargetDensity target, std::vector<double> m1, std::vector<double> m2,
                     NoiseSpec shape = NoiseSpec::skewed_reference());

  const TargetDensity& target() const noexcept { return target_; }
  const std::vector<double>& m1() const noexcept { return m1_; }
  const std::vector<double>& m2() const noexcept { return m2_; }
  const NoiseSpec& shape() const noexcept { return shape_; }
  /// m2 - m1^2 before flooring.
  const std::vector<double>& variance() const noexcept { return variance_; }

  /// Noise scale actually applied; variance floored at 1e-12.
  const std::vector<double>& noise_scale() const noexcept { return scale_; }

 private:
  TargetDensity target_;
  std::vector<double> m1_;
  std::vector<double> m2_;
  NoiseSpec shape_;
  std::vector<double> variance_;
  std::vector<double> scale_;
};

enum class BuiltinSde { LinearMultiplicative2DNoise, LinearAdditive, TanhSech };

/// The three explicitly solvable test SDEs:
///   LinearMultiplicative2DNoise: dx = 1.5 x dt + (x/10, x/10) dw, x0 = 0.1, w in R^2
///   LinearAdditive:             dx = (x + 2) dt + 3 dw,           x0 = -1
///   TanhSech:                   dx = -tanh x (1 + sech^2 x / 2) dt + sech x dw, x0 = -1
SdeModel builtin_sde(BuiltinSde id);

/// E[x_t] of the TanhSech model: sinh(x_t) is an OU process dy = -y dt + dw,
/// so x_t = asinh(Y) with Y ~ N(sinh(x0) e^{-t}, (1 - e^{-2t})/2). Evaluated by quadrature.
double tanh_sech_mean(double t, double x0 = -1.0);

struct GumbelParams {
  double mu = 0.0;
  double beta_scale = 1.0;
};

SdeModel polynomial_sde(std::vector<double> drift_coeffs, std::vector<double> diffusion_coeffs, double x0);

TargetDensity std_gaussian_target(std::size_t dim = 1);
TargetDensity gumbel_target(GumbelParams params = {});
/// log pi(x) = -(x-3)(x-1)(x+1)(x+2)/10, support hint [-4, 5].
TargetDensity bimodal_quartic_target();
/// Gibbs density of the quartic loss L(x) = (x-3)(x-1)(x+1)(x+2)/10; same object as bimodal_quartic_target().
TargetDensity quartic_loss();
double quartic_loss_value(double theta);
/// log pi(x) = sum_k c_k x^k.
TargetDensity polynomial_target(std::vector<double> log_density_coeffs, Interval support);

/// Write grad log pi(theta) + m1 + sqrt(m2 - m1^2) * xi into out.
void stochastic_gradient(const NoisyGradientModel& model, std::span<const double> theta, Stream& stream,
                         std::span<double> out);
std::vector<double> stochastic_gradient(const NoisyGradientModel& model, std::span<const double> theta,
                                        Stream& stream);

/// Max relative (floored at 1) deviation between the gradient and central differences of the
/// log-density at `probes` evenly spread interior points of support_hint (per dimension, others at centre).
double max_gradient_fd_error(const TargetDensity& target, std::size_t probes = 20, double h = 1e-5);

/// Polynomial with ascending coefficients.
struct Polynomial {
  std::vector<double> coeffs;
  double operator()(double x) const noexcept;
  Polynomial derivative() const;
};

}  // namespace weaksde
