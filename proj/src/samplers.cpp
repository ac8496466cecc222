#include "weaksde/samplers.hpp"

#include <cmath>
#include <optional>
#include <sstream>

#include "weaksde/analysis.hpp"
#include "weaksde/errors.hpp"
#include "weaksde/schemes.hpp"

namespace weaksde {

void ChainConfig::validate() const {
  if (!(eps > 0.0) || !std::isfinite(eps)) throw SpecError("chain step size must be positive");
  if (n_steps == 0) throw SpecError("chain needs at least one step");
  if (burn_in >= n_steps) throw SpecError("burn_in must be smaller than n_steps");
  if (thin == 0) throw SpecError("thin must be at least 1");
  if (!init.empty() && init.size() != target.dim) throw SpecError("init does not match the target dimension");
  if (target.dim == 0 || !target.grad_log_density) throw SpecError("chain target is incomplete");
}

std::vector<double> SampleMatrix::column(std::size_t d) const {
  std::vector<double> out(rows());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = data[i * dim + d];
  return out;
}

namespace {

std::vector<double> initial_state(const ChainConfig& c) {
  return c.init.empty() ? std::vector<double>(c.target.dim, 0.0) : c.init;
}

SampleMatrix reserve_samples(const ChainConfig& c) {
  SampleMatrix s;
  s.dim = c.target.dim;
  s.data.reserve(((c.n_steps - c.burn_in + c.thin - 1) / c.thin) * s.dim);
  return s;
}

void check_finite(std::span<const double> theta, std::size_t k) {
  for (double x : theta) {
    if (!std::isfinite(x)) {
      std::ostringstream os;
      os << "chain diverged at step " << k << "; try a smaller step size";
      throw DivergenceError(os.str(), std::vector<double>(theta.begin(), theta.end()), k);
    }
  }
}

// Iteration k produces theta_{k+1}; it is kept when k >= burn_in and (k - burn_in) % thin == 0.
inline bool keep(const ChainConfig& c, std::size_t k) {
  return k >= c.burn_in && (k - c.burn_in) % c.thin == 0;
}

}  // namespace

SampleMatrix run_ula(const ChainConfig& config, const UlaVariant& variant) {
  config.validate();
  const Scheme scheme = std::visit(
      [](const auto& v) -> Scheme {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, UlaGaussian>) return Scheme(SchemeKind::EM);
        else if constexpr (std::is_same_v<T, UlaSimplified>) return Scheme(SchemeKind::SimplifiedEM, v.noise);
        else return Scheme(SchemeKind::SkewedEM, v.noise);
      },
      variant);
  const NoiseSpec& noise = scheme.noise();
  const double eps = config.eps;
  const double diffusion = std::sqrt(2.0 * eps);
  const std::size_t D = config.target.dim;

  Stream stream(config.seed, config.stream_index);
  std::vector<double> theta = initial_state(config);
  std::vector<double> grad(D);
  SampleMatrix out = reserve_samples(config);
  for (std::size_t k = 0; k < config.n_steps; ++k) {
    config.target.grad_log_density(theta, grad);
    for (std::size_t d = 0; d < D; ++d) theta[d] += eps * grad[d] + diffusion * noise.draw(stream);
    check_finite(theta, k);
    if (keep(config, k)) out.data.insert(out.data.end(), theta.begin(), theta.end());
  }
  return out;
}

SampleMatrix run_sgd(const ChainConfig& config, const NoisyGradientModel& gradient_noise) {
  config.validate();
  for (double v : gradient_noise.variance())
    if (!(v > 0.0)) throw SpecError("SGD needs positive gradient-noise variance m2 - m1^2");
  const std::size_t D = config.target.dim;
  if (gradient_noise.target().dim != D) throw SpecError("gradient-noise model dimension mismatch");

  Stream stream(config.seed, config.stream_index);
  std::vector<double> theta = initial_state(config);
  std::vector<double> grad(D);
  SampleMatrix out = reserve_samples(config);
  for (std::size_t k = 0; k < config.n_steps; ++k) {
    stochastic_gradient(gradient_noise, theta, stream, grad);
    for (std::size_t d = 0; d < D; ++d) theta[d] += config.eps * grad[d];
    check_finite(theta, k);
    if (keep(config, k)) out.data.insert(out.data.end(), theta.begin(), theta.end());
  }
  return out;
}

void update_trackers_inplace(MomentTrackers& t, std::span<const double> grad, double gamma1, double gamma2) {
  for (std::size_t d = 0; d < grad.size(); ++d) {
    t.r[d] = gamma1 * t.r[d] + (1.0 - gamma1) * grad[d];
    const double dev = grad[d] - t.r[d];
    t.v[d] = gamma2 * t.v[d] + (1.0 - gamma2) * dev * dev;
  }
}

MomentTrackers update_trackers(const MomentTrackers& t, std::span<const double> grad, double gamma1,
                               double gamma2) {
  if (t.r.size() != grad.size() || t.v.size() != grad.size())
    throw SpecError("tracker dimension does not match the gradient");
  MomentTrackers out = t;
  update_trackers_inplace(out, grad, gamma1, gamma2);
  return out;
}

SgldResult run_sgld(const SgldConfig& config) {
  const ChainConfig& chain = config.chain;
  chain.validate();
  if (!(config.gamma1 > 0.0 && config.gamma1 < 1.0) || !(config.gamma2 > 0.0 && config.gamma2 < 1.0))
    throw SpecError("tracker constants gamma1, gamma2 must lie in (0, 1)");
  const std::size_t D = chain.target.dim;
  if (config.gradient_noise.target().dim != D) throw SpecError("gradient-noise model dimension mismatch");

  std::optional<NoiseSpec> fixed_noise;
  double fixed_m1 = 0.0, fixed_m2 = 1.0;
  const bool adaptive = std::holds_alternative<SgldAdaptiveTwoPoint>(config.diffusion);
  if (std::holds_alternative<SgldGaussian>(config.diffusion)) {
    fixed_noise = NoiseSpec::gaussian();
  } else if (const auto* s = std::get_if<SgldSkewed>(&config.diffusion)) {
    Scheme::check_compatible(SchemeKind::SkewedEM, s->noise);
    fixed_noise = s->noise;
    fixed_m1 = s->noise.declared().m1;
    fixed_m2 = s->noise.declared().m2;
  }

  const double eps = chain.eps;
  const double diffusion = std::sqrt(2.0 * eps);
  Stream stream(chain.seed, chain.stream_index);
  std::vector<double> theta = initial_state(chain);
  std::vector<double> grad(D);
  MomentTrackers trackers{std::vector<double>(D, 0.0), std::vector<double>(D, 0.0)};
  SgldResult result;
  result.samples = reserve_samples(chain);

  for (std::size_t k = 0; k < chain.n_steps; ++k) {
    stochastic_gradient(config.gradient_noise, theta, stream, grad);
    update_trackers_inplace(trackers, grad, config.gamma1, config.gamma2);
    for (std::size_t d = 0; d < D; ++d) {
      double xi;
      if (!adaptive) {
        xi = fixed_noise->draw(stream);
      } else {
        const double sign = (stream.next_u64() >> 63) ? 1.0 : -1.0;
        if (k < chain.burn_in) {
          xi = sign;
        } else {
          try {
            xi = sign * adaptive_amplitude(trackers.v[d], eps, d);
          } catch (const BudgetExceeded& e) {
            std::ostringstream os;
            os << e.what() << " (step " << k << ")";
            throw BudgetExceeded(os.str(), e.component, e.v);
          }
        }
      }
      theta[d] += eps * grad[d] + diffusion * xi;
    }
    check_finite(theta, k);
    if (keep(chain, k)) result.samples.data.insert(result.samples.data.end(), theta.begin(), theta.end());
  }

  // The tracker mean r estimates E[grad-hat], which is 0 at stationarity whatever the gradient
  // bias, so the prediction uses zero first moments.
  const std::vector<double> zeros(D, 0.0);
  std::vector<double> m_x2(D, fixed_m2), m_x1(D, fixed_m1);
  if (adaptive)
    for (std::size_t d = 0; d < D; ++d) m_x2[d] = std::max(0.0, 1.0 - 0.5 * eps * trackers.v[d]);
  const auto rho = unified_noise_moments(zeros, trackers.v, m_x1, m_x2, eps);
  result.predicted_beta = thermodynamic_beta(rho.m_rho1, rho.m_rho2, eps);
  result.final_trackers = std::move(trackers);
  return result;
}

std::vector<SampleMatrix> run_ula_batch(std::span<const ChainConfig> configs, const UlaVariant& variant) {
  std::vector<SampleMatrix> out(configs.size());
  std::vector<std::optional<std::string>> errors(configs.size());
#pragma omp parallel for schedule(dynamic, 1)
  for (std::size_t i = 0; i < configs.size(); ++i) {
    try {
      out[i] = run_ula(configs[i], variant);
    } catch (const std::exception& e) {
      errors[i] = e.what();
    }
  }
  for (std::size_t i = 0; i < errors.size(); ++i)
    if (errors[i]) throw Error("chain " + std::to_string(i) + ": " + *errors[i]);
  return out;
}

}  // namespace weaksde
