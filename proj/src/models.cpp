#include "weaksde/models.hpp"

#include <algorithm>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <numbers>

#include "weaksde/errors.hpp"

namespace weaksde {

double Polynomial::operator()(double x) const noexcept {
  double r = 0.0;
  for (auto it = coeffs.rbegin(); it != coeffs.rend(); ++it) r = r * x + *it;
  return r;
}

Polynomial Polynomial::derivative() const {
  Polynomial d;
  for (std::size_t k = 1; k < coeffs.size(); ++k) d.coeffs.push_back(static_cast<double>(k) * coeffs[k]);
  return d;
}

NoisyGradientModel::NoisyGradientModel(TargetDensity target, std::vector<double> m1, std::vector<double> m2,
                                       NoiseSpec shape)
    : target_(std::move(target)), m1_(std::move(m1)), m2_(std::move(m2)), shape_(std::move(shape)) {
  if (m1_.size() != target_.dim || m2_.size() != target_.dim)
    throw SpecError("gradient-noise moments must have one entry per target dimension");
  const auto& p = shape_.declared();
  if (std::abs(p.m1) > 1e-12 || std::abs(p.m2 - 1.0) > 1e-12)
    throw SpecError("gradient-noise shape must declare mean 0 and second moment 1");
  for (std::size_t d = 0; d < m1_.size(); ++d) {
    const double var = m2_[d] - m1_[d] * m1_[d];
    if (!std::isfinite(var) || var < 0.0)
      throw SpecError("gradient-noise second moment must be at least the squared mean (m2 >= m1^2)");
    variance_.push_back(var);
    scale_.push_back(std::sqrt(std::max(var, 1e-12)));
  }
}

namespace {

double tanh_sech_drift(double x) {
  const double s = 1.0 / std::cosh(x);
  return -std::tanh(x) * (1.0 + 0.5 * s * s);
}

}  // namespace

double tanh_sech_mean(double t, double x0) {
  if (t <= 0.0) return x0;
  const double mu = std::sinh(x0) * std::exp(-t);
  const double sd = std::sqrt(0.5 * (1.0 - std::exp(-2.0 * t)));
  auto integrand = [mu, sd](double z) {
    return std::asinh(mu + sd * z) * std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
  };
  return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(integrand, -14.0, 14.0, 20, 1e-15);
}

SdeModel builtin_sde(BuiltinSde id) {
  SdeModel m;
  switch (id) {
    case BuiltinSde::LinearMultiplicative2DNoise:
      m.name = "linear_multiplicative_2d_noise";
      m.dim_noise = 2;
      m.x0 = {0.1};
      m.drift = [](std::span<const double> x, std::span<double> out) { out[0] = 1.5 * x[0]; };
      m.diffusion = [](std::span<const double> x, std::span<double> out) {
        out[0] = 0.1 * x[0];
        out[1] = 0.1 * x[0];
      };
      m.analytic_mean = [](double t) { return std::vector<double>{0.1 * std::exp(1.5 * t)}; };
      // d(x^2) = (3 + 2 * 0.01) x^2 dt + martingale
      m.analytic_second_moment = [](double t) { return std::vector<double>{0.01 * std::exp(3.02 * t)}; };
      break;
    case BuiltinSde::LinearAdditive:
      m.name = "linear_additive";
      m.x0 = {-1.0};
      m.drift = [](std::span<const double> x, std::span<double> out) { out[0] = x[0] + 2.0; };
      m.diffusion = [](std::span<const double>, std::span<double> out) { out[0] = 3.0; };
      m.analytic_mean = [](double t) { return std::vector<double>{std::exp(t) - 2.0}; };
      // s' = 2 s + 4 m + 9, s(0) = 1
      m.analytic_second_moment = [](double t) {
        return std::vector<double>{5.5 * std::exp(2.0 * t) - 4.0 * std::exp(t) - 0.5};
      };
      break;
    case BuiltinSde::TanhSech:
      m.name = "tanh_sech";
      m.x0 = {-1.0};
      m.drift = [](std::span<const double> x, std::span<double> out) { out[0] = tanh_sech_drift(x[0]); };
      m.diffusion = [](std::span<const double> x, std::span<double> out) { out[0] = 1.0 / std::cosh(x[0]); };
      m.analytic_mean = [](double t) { return std::vector<double>{tanh_sech_mean(t)}; };
      break;
  }
  return m;
}

SdeModel polynomial_sde(std::vector<double> drift_coeffs, std::vector<double> diffusion_coeffs, double x0) {
  if (drift_coeffs.empty() || diffusion_coeffs.empty())
    throw SpecError("polynomial SDE needs drift and diffusion coefficients");
  SdeModel m;
  m.name = "polynomial";
  m.x0 = {x0};
  m.drift = [p = Polynomial{std::move(drift_coeffs)}](std::span<const double> x, std::span<double> out) {
    out[0] = p(x[0]);
  };
  m.diffusion = [p = Polynomial{std::move(diffusion_coeffs)}](std::span<const double> x,
                                                              std::span<double> out) { out[0] = p(x[0]); };
  return m;
}

TargetDensity std_gaussian_target(std::size_t dim) {
  if (dim == 0) throw SpecError("target dimension must be positive");
  TargetDensity t;
  t.name = "std_gaussian";
  t.dim = dim;
  t.log_density = [](std::span<const double> x) {
    double s = 0.0;
    for (double v : x) s += v * v;
    return -0.5 * s;
  };
  t.grad_log_density = [](std::span<const double> x, std::span<double> out) {
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = -x[i];
  };
  t.support_hint.assign(dim, Interval{-6.0, 6.0});
  return t;
}

TargetDensity gumbel_target(GumbelParams params) {
  if (!(params.beta_scale > 0.0)) throw SpecError("Gumbel scale must be positive");
  TargetDensity t;
  t.name = "gumbel";
  const double mu = params.mu;
  const double b = params.beta_scale;
  t.log_density = [mu, b](std::span<const double> x) {
    const double z = (x[0] - mu) / b;
    return -z - std::exp(-z);
  };
  t.grad_log_density = [mu, b](std::span<const double> x, std::span<double> out) {
    const double z = (x[0] - mu) / b;
    out[0] = (-1.0 + std::exp(-z)) / b;
  };
  t.support_hint = {Interval{mu - 3.0 * b, mu + 12.0 * b}};
  return t;
}

namespace {

// (x-3)(x-1)(x+1)(x+2) = x^4 - x^3 - 7x^2 + x + 6
const Polynomial kQuartic{{6.0, 1.0, -7.0, -1.0, 1.0}};

}  // namespace

double quartic_loss_value(double theta) { return kQuartic(theta) / 10.0; }

TargetDensity bimodal_quartic_target() {
  TargetDensity t;
  t.name = "bimodal_quartic";
  t.log_density = [](std::span<const double> x) { return -quartic_loss_value(x[0]); };
  t.grad_log_density = [d = kQuartic.derivative()](std::span<const double> x, std::span<double> out) {
    out[0] = -d(x[0]) / 10.0;
  };
  t.support_hint = {Interval{-4.0, 5.0}};
  return t;
}

TargetDensity quartic_loss() { return bimodal_quartic_target(); }

TargetDensity polynomial_target(std::vector<double> log_density_coeffs, Interval support) {
  if (log_density_coeffs.empty()) throw SpecError("polynomial target needs coefficients");
  if (!(support.hi > support.lo)) throw SpecError("support interval must have hi > lo");
  TargetDensity t;
  t.name = "polynomial";
  Polynomial p{std::move(log_density_coeffs)};
  t.grad_log_density = [d = p.derivative()](std::span<const double> x, std::span<double> out) {
    out[0] = d(x[0]);
  };
  t.log_density = [p = std::move(p)](std::span<const double> x) { return p(x[0]); };
  t.support_hint = {support};
  return t;
}

void stochastic_gradient(const NoisyGradientModel& model, std::span<const double> theta, Stream& stream,
                         std::span<double> out) {
  model.target().grad_log_density(theta, out);
  const auto& m1 = model.m1();
  const auto& scale = model.noise_scale();
  for (std::size_t d = 0; d < out.size(); ++d) out[d] += m1[d] + scale[d] * model.shape().draw(stream);
}

std::vector<double> stochastic_gradient(const NoisyGradientModel& model, std::span<const double> theta,
                                        Stream& stream) {
  std::vector<double> out(model.target().dim);
  stochastic_gradient(model, theta, stream, out);
  return out;
}

double max_gradient_fd_error(const TargetDensity& target, std::size_t probes, double h) {
  const std::size_t dim = target.dim;
  std::vector<double> centre(dim), x(dim), g(dim);
  for (std::size_t d = 0; d < dim; ++d)
    centre[d] = 0.5 * (target.support_hint[d].lo + target.support_hint[d].hi);
  double worst = 0.0;
  for (std::size_t d = 0; d < dim; ++d) {
    const auto& iv = target.support_hint[d];
    for (std::size_t i = 0; i < probes; ++i) {
      x = centre;
      x[d] = iv.lo + (static_cast<double>(i) + 0.5) * iv.width() / static_cast<double>(probes);
      target.grad_log_density(x, g);
      const double xd = x[d];
      x[d] = xd + h;
      const double up = target.log_density(x);
      x[d] = xd - h;
      const double down = target.log_density(x);
      const double fd = (up - down) / (2.0 * h);
      worst = std::max(worst, std::abs(fd - g[d]) / std::max(1.0, std::abs(g[d])));
    }
  }
  return worst;
}

}  // namespace weaksde
