#include "weaksde/schemes.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "weaksde/errors.hpp"

namespace weaksde {

namespace {

constexpr double kTol = 1e-12;

bool near(double a, double b) { return std::abs(a - b) <= kTol; }

bool all_finite(std::span<const double> v) {
  for (double x : v)
    if (!std::isfinite(x)) return false;
  return true;
}

std::string state_string(std::span<const double> y) {
  std::ostringstream os;
  os.precision(17);
  os << "[";
  for (std::size_t i = 0; i < y.size(); ++i) os << (i ? ", " : "") << y[i];
  os << "]";
  return os.str();
}

}  // namespace

std::string to_string(SchemeKind kind) {
  switch (kind) {
    case SchemeKind::EM: return "em";
    case SchemeKind::SimplifiedEM: return "simplified_em";
    case SchemeKind::SkewedEM: return "skewed_em";
    case SchemeKind::FirstMomentOnly: return "first_moment_only";
  }
  return "unknown";
}

SchemeKind scheme_kind_from_string(const std::string& name) {
  if (name == "em") return SchemeKind::EM;
  if (name == "simplified_em") return SchemeKind::SimplifiedEM;
  if (name == "skewed_em") return SchemeKind::SkewedEM;
  if (name == "first_moment_only") return SchemeKind::FirstMomentOnly;
  throw SpecError("unknown scheme '" + name + "'");
}

NoiseSpec Scheme::default_noise(SchemeKind kind) {
  switch (kind) {
    case SchemeKind::EM: return NoiseSpec::gaussian();
    case SchemeKind::SimplifiedEM: return NoiseSpec::two_point_symmetric(1.0);
    case SchemeKind::SkewedEM: return NoiseSpec::skewed_reference();
    case SchemeKind::FirstMomentOnly: return NoiseSpec::two_point_symmetric(2.0);
  }
  throw SpecError("unknown scheme kind");
}

void Scheme::check_compatible(SchemeKind kind, const NoiseSpec& noise) {
  const auto& p = noise.declared();
  const std::string name = to_string(kind);
  switch (kind) {
    case SchemeKind::EM:
      if (!p.higher_constrained) throw SpecError(name + " requires the Gaussian moment profile");
      break;
    case SchemeKind::SimplifiedEM:
      if (!near(p.m1, 0.0) || !near(p.m2, 1.0) || !p.m3 || !near(*p.m3, 0.0))
        throw SpecError(name + " requires declared moments (m1, m2, m3) = (0, 1, 0)");
      break;
    case SchemeKind::SkewedEM:
      if (!near(p.m1, 0.0) || !near(p.m2, 1.0))
        throw SpecError(name + " requires declared moments (m1, m2) = (0, 1)");
      break;
    case SchemeKind::FirstMomentOnly:
      if (!near(p.m1, 0.0)) throw SpecError(name + " requires declared mean 0");
      break;
  }
}

Scheme::Scheme(SchemeKind kind, std::optional<NoiseSpec> noise_override)
    : kind_(kind), noise_(noise_override ? std::move(*noise_override) : default_noise(kind)) {
  check_compatible(kind_, noise_);
}

void apply_increment(const SdeModel& model, std::span<double> y, double eps, std::span<const double> nu,
                     StepWorkspace& ws) {
  const std::size_t D = model.dim_state;
  const std::size_t M = model.dim_noise;
  model.drift(y, ws.drift);
  model.diffusion(y, ws.diffusion);
  if (!all_finite(ws.drift) || !all_finite(ws.diffusion))
    throw SimulationError("non-finite drift or diffusion at state " + state_string(y),
                          std::vector<double>(y.begin(), y.end()), 0, 0);
  const double sq = std::sqrt(eps);
  for (std::size_t d = 0; d < D; ++d) {
    double noise = 0.0;
    for (std::size_t m = 0; m < M; ++m) noise += ws.diffusion[d * M + m] * nu[m];
    y[d] += eps * ws.drift[d] + sq * noise;
  }
  if (!all_finite(y))
    throw SimulationError("state became non-finite: " + state_string(y), std::vector<double>(y.begin(), y.end()),
                          0, 0);
}

void step(const Scheme& scheme, const SdeModel& model, std::span<double> y, double eps, Stream& stream,
          StepWorkspace& ws) {
  for (double& v : ws.nu) v = scheme.noise().draw(stream);
  apply_increment(model, y, eps, ws.nu, ws);
}

std::vector<double> step(const Scheme& scheme, const SdeModel& model, std::span<const double> y, double eps,
                         Stream& stream) {
  if (!(eps > 0.0)) throw SpecError("step size must be positive");
  std::vector<double> out(y.begin(), y.end());
  StepWorkspace ws(model);
  step(scheme, model, out, eps, stream, ws);
  return out;
}

std::size_t SimulationPlan::steps() const {
  if (!(eps > 0.0) || !(horizon > 0.0)) throw SpecError("step size and horizon must be positive");
  const double k = horizon / eps;
  const double rounded = std::round(k);
  if (rounded < 1.0 || std::abs(k - rounded) > 1e-9 * std::max(1.0, k))
    throw SpecError("horizon / eps must be an integer number of steps");
  return static_cast<std::size_t>(rounded);
}

namespace {

void check_plan(const SimulationPlan& plan) {
  if (plan.n_paths == 0) throw SpecError("n_paths must be positive");
  if (plan.model.x0.size() != plan.model.dim_state) throw SpecError("x0 does not match the state dimension");
}

double run_path(const SimulationPlan& plan, const TestFunction& f, std::size_t K, std::size_t path,
                StepWorkspace& ws, std::vector<double>& y) {
  y = plan.model.x0;
  Stream stream(plan.seed, path);
  for (std::size_t k = 0; k < K; ++k) {
    try {
      step(plan.scheme, plan.model, y, plan.eps, stream, ws);
    } catch (const SimulationError& e) {
      std::ostringstream os;
      os << e.what() << " (path " << path << ", step " << k << ")";
      throw SimulationError(os.str(), e.state, path, k);
    }
  }
  return f(y);
}

}  // namespace

std::vector<double> simulate_terminal_values(const SimulationPlan& plan, const TestFunction& f) {
  check_plan(plan);
  const std::size_t K = plan.steps();
  std::vector<double> values(plan.n_paths);
  std::optional<SimulationError> first_error;

#pragma omp parallel
  {
    StepWorkspace ws(plan.model);
    std::vector<double> y;
#pragma omp for schedule(dynamic, 64)
    for (std::size_t i = 0; i < plan.n_paths; ++i) {
      try {
        values[i] = run_path(plan, f, K, i, ws, y);
      } catch (const SimulationError& e) {
#pragma omp critical(weaksde_sim_error)
        {
          if (!first_error || e.path < first_error->path) first_error = e;
        }
      }
    }
  }
  if (first_error) throw *first_error;
  return values;
}

SampleSummary simulate_terminal(const SimulationPlan& plan, const TestFunction& f) {
  return summarize(simulate_terminal_values(plan, f));
}

namespace reference {

SampleSummary simulate_terminal(const SimulationPlan& plan, const TestFunction& f) {
  check_plan(plan);
  const std::size_t K = plan.steps();
  std::vector<double> values(plan.n_paths);
  StepWorkspace ws(plan.model);
  std::vector<double> y;
  for (std::size_t i = 0; i < plan.n_paths; ++i) values[i] = run_path(plan, f, K, i, ws, y);
  return summarize(values);
}

}  // namespace reference

}  // namespace weaksde
