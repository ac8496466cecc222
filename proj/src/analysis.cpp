#include "weaksde/analysis.hpp"

#include <algorithm>
#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <limits>
#include <sstream>

#include "weaksde/errors.hpp"
#include "weaksde/stats.hpp"

namespace weaksde {

namespace bmq = boost::math::quadrature;

std::string to_string(TestFunctionKind f) {
  return f == TestFunctionKind::Identity ? "identity" : "square";
}

TestFunctionKind test_function_from_string(const std::string& name) {
  if (name == "identity" || name == "x") return TestFunctionKind::Identity;
  if (name == "square" || name == "x2") return TestFunctionKind::Square;
  throw SpecError("unknown test function '" + name + "'");
}

TestFunction make_test_function(TestFunctionKind f) {
  if (f == TestFunctionKind::Identity) return [](std::span<const double> x) { return x[0]; };
  return [](std::span<const double> x) { return x[0] * x[0]; };
}

ErrorTable weak_error_sweep(const SdeModel& model, const Scheme& scheme, TestFunctionKind f,
                            std::span<const double> eps_list, std::size_t n_paths, std::uint64_t seed,
                            double horizon) {
  const auto& oracle = f == TestFunctionKind::Identity ? model.analytic_mean : model.analytic_second_moment;
  if (!oracle)
    throw ConfigError("test_function", "model '" + model.name + "' has no analytic oracle for f = " +
                                           to_string(f));
  if (eps_list.empty()) throw ConfigError("eps_list", "at least one step size is required");
  for (std::size_t i = 1; i < eps_list.size(); ++i)
    if (!(eps_list[i] < eps_list[i - 1])) throw ConfigError("eps_list", "step sizes must be strictly decreasing");

  const double exact = (*oracle)(horizon)[0];
  const TestFunction fn = make_test_function(f);
  ErrorTable table;
  for (double eps : eps_list) {
    SimulationPlan plan{model, scheme, eps, horizon, n_paths, seed};
    const SampleSummary s = simulate_terminal(plan, fn);
    table.rows.push_back({eps, std::abs(s.mean - exact), s.std_error, s.n, s.mean, exact});
  }
  return table;
}

OrderFit fit_order(const ErrorTable& table) {
  OrderFit fit;
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const auto& r = table.rows[i];
    if (r.error > 2.0 * r.std_error && r.error > 0.0 && r.eps > 0.0) {
      fit.used_rows.push_back(i);
      lx.push_back(std::log(r.eps));
      ly.push_back(std::log(r.error));
    } else {
      fit.excluded_rows.push_back(i);
    }
  }
  if (lx.size() < 3) {
    std::ostringstream os;
    os << "only " << lx.size() << " of " << table.rows.size()
       << " rows have error above 2 standard errors; need at least 3 to fit an order";
    throw InsufficientSignal(os.str());
  }
  const double n = static_cast<double>(lx.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    mx += lx[i];
    my += ly[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
    syy += (ly[i] - my) * (ly[i] - my);
  }
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  fit.r_squared = syy > 0.0 ? (sxy * sxy) / (sxx * syy) : 1.0;
  return fit;
}

// ---------------------------------------------------------------------------

namespace {

constexpr std::size_t kOneStepBlock = 4096;

struct OneStepBlock {
  std::vector<RunningMoments> first;
  std::vector<RunningMoments> second;
};

OneStepBlock one_step_block(const Scheme& scheme, const SdeModel& model, std::span<const double> y, double eps,
                            std::uint64_t seed, std::size_t block, std::size_t count) {
  const std::size_t D = model.dim_state;
  OneStepBlock out{std::vector<RunningMoments>(D), std::vector<RunningMoments>(D * D)};
  StepWorkspace ws(model);
  Stream stream(seed, block);
  std::vector<double> next(D), delta(D);
  for (std::size_t i = 0; i < count; ++i) {
    std::copy(y.begin(), y.end(), next.begin());
    step(scheme, model, next, eps, stream, ws);
    for (std::size_t d = 0; d < D; ++d) delta[d] = next[d] - y[d];
    for (std::size_t d = 0; d < D; ++d) {
      out.first[d].push(delta[d]);
      for (std::size_t e = 0; e < D; ++e) out.second[d * D + e].push(delta[d] * delta[e]);
    }
  }
  return out;
}

OneStepMoments finish_one_step(std::size_t D, const std::vector<OneStepBlock>& blocks) {
  OneStepMoments m;
  m.dim = D;
  std::vector<RunningMoments> first(D), second(D * D);
  for (const auto& b : blocks) {
    for (std::size_t i = 0; i < D; ++i) first[i].merge(b.first[i]);
    for (std::size_t i = 0; i < D * D; ++i) second[i].merge(b.second[i]);
  }
  for (const auto& r : first) {
    m.mean.push_back(r.mean);
    m.mean_se.push_back(r.std_error());
  }
  for (const auto& r : second) {
    m.second.push_back(r.mean);
    m.second_se.push_back(r.std_error());
  }
  m.n = first.empty() ? 0 : first[0].n;
  return m;
}

void check_one_step(const SdeModel& model, std::span<const double> y, double eps, std::size_t n) {
  if (y.size() != model.dim_state) throw SpecError("state dimension mismatch");
  if (!(eps > 0.0)) throw SpecError("step size must be positive");
  if (n < 2) throw SpecError("need at least two draws");
}

}  // namespace

OneStepMoments one_step_moments(const Scheme& scheme, const SdeModel& model, std::span<const double> y,
                                double eps, std::size_t n, std::uint64_t seed) {
  check_one_step(model, y, eps, n);
  const std::size_t n_blocks = (n + kOneStepBlock - 1) / kOneStepBlock;
  std::vector<OneStepBlock> blocks(n_blocks);
  std::optional<std::string> error;
#pragma omp parallel for schedule(dynamic, 4)
  for (std::size_t b = 0; b < n_blocks; ++b) {
    try {
      blocks[b] = one_step_block(scheme, model, y, eps, seed, b, std::min(kOneStepBlock, n - b * kOneStepBlock));
    } catch (const std::exception& e) {
#pragma omp critical(weaksde_one_step_error)
      error = e.what();
    }
  }
  if (error) throw SimulationError(*error, std::vector<double>(y.begin(), y.end()), 0, 0);
  return finish_one_step(model.dim_state, blocks);
}

namespace reference {

OneStepMoments one_step_moments(const Scheme& scheme, const SdeModel& model, std::span<const double> y,
                                double eps, std::size_t n, std::uint64_t seed) {
  check_one_step(model, y, eps, n);
  const std::size_t n_blocks = (n + kOneStepBlock - 1) / kOneStepBlock;
  std::vector<OneStepBlock> blocks;
  for (std::size_t b = 0; b < n_blocks; ++b)
    blocks.push_back(one_step_block(scheme, model, y, eps, seed, b, std::min(kOneStepBlock, n - b * kOneStepBlock)));
  return finish_one_step(model.dim_state, blocks);
}

}  // namespace reference

std::vector<double> one_step_second_moment_exact(const SdeModel& model, std::span<const double> y, double eps) {
  const std::size_t D = model.dim_state, M = model.dim_noise;
  std::vector<double> a(D), B(D * M), out(D * D);
  model.drift(y, a);
  model.diffusion(y, B);
  for (std::size_t i = 0; i < D; ++i) {
    for (std::size_t j = 0; j < D; ++j) {
      double bb = 0.0;
      for (std::size_t m = 0; m < M; ++m) bb += B[i * M + m] * B[j * M + m];
      out[i * D + j] = eps * eps * a[i] * a[j] + eps * bb;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

StationaryParams make_stationary_params(std::vector<double> m1, std::vector<double> m2, double eps) {
  if (!(eps > 0.0)) throw SpecError("step size must be positive");
  if (m1.size() != m2.size() || m1.empty()) throw SpecError("m1 and m2 must be non-empty and of equal length");
  StationaryParams p;
  const double D = static_cast<double>(m1.size());
  double trace = 0.0;
  for (std::size_t d = 0; d < m1.size(); ++d) {
    const double var = m2[d] - m1[d] * m1[d];
    if (!(var > 0.0)) throw SpecError("gradient-noise variance m2 - m1^2 must be positive");
    trace += 1.0 / var;
    p.bias.push_back(2.0 / (D * eps) * m1[d] / var);
  }
  p.beta = 2.0 / (D * eps) * trace;
  p.m1 = std::move(m1);
  p.m2 = std::move(m2);
  p.eps = eps;
  return p;
}

double thermodynamic_beta(std::span<const double> m1, std::span<const double> m2, double eps) {
  return make_stationary_params({m1.begin(), m1.end()}, {m2.begin(), m2.end()}, eps).beta;
}

namespace {

using LogDensityFn = std::function<double(std::span<const double>)>;

// Recursive tensor-product composite Gauss-Legendre over the box, coordinates [d, D) free.
double integrate_box(const LogDensityFn& logp, double shift, const std::vector<Interval>& box, std::size_t d,
                     std::vector<double>& x, std::size_t panels) {
  const auto& iv = box[d];
  const double h = iv.width() / static_cast<double>(panels);
  double total = 0.0;
  for (std::size_t p = 0; p < panels; ++p) {
    const double a = iv.lo + static_cast<double>(p) * h;
    total += bmq::gauss<double, 20>::integrate(
        [&](double xd) {
          x[d] = xd;
          if (d + 1 == box.size()) return std::exp(logp(x) - shift);
          return integrate_box(logp, shift, box, d + 1, x, panels);
        },
        a, a + h);
  }
  return total;
}

double grid_max(const LogDensityFn& logp, const std::vector<Interval>& box) {
  const std::size_t D = box.size();
  const std::size_t per_dim = D == 1 ? 4097 : (D == 2 ? 129 : 33);
  std::vector<std::size_t> idx(D, 0);
  std::vector<double> x(D);
  double best = -std::numeric_limits<double>::infinity();
  while (true) {
    for (std::size_t d = 0; d < D; ++d)
      x[d] = box[d].lo + box[d].width() * static_cast<double>(idx[d]) / static_cast<double>(per_dim - 1);
    const double v = logp(x);
    if (std::isfinite(v)) best = std::max(best, v);
    std::size_t d = 0;
    while (d < D && ++idx[d] == per_dim) idx[d++] = 0;
    if (d == D) break;
  }
  return best;
}

void check_decay(const LogDensityFn& logp, const std::vector<Interval>& box) {
  const std::size_t D = box.size();
  std::vector<double> centre(D);
  for (std::size_t d = 0; d < D; ++d) centre[d] = 0.5 * (box[d].lo + box[d].hi);
  for (std::size_t d = 0; d < D; ++d) {
    for (int dir : {-1, +1}) {
      std::vector<double> edge = centre, far = centre;
      edge[d] = dir > 0 ? box[d].hi : box[d].lo;
      far[d] = edge[d] + dir * 2.0 * box[d].width();
      const double le = logp(edge), lf = logp(far);
      if (!std::isfinite(le) || std::isnan(lf) || !(lf < le)) {
        std::ostringstream os;
        os << "stationary density does not decay toward " << (dir > 0 ? "+" : "-") << "infinity in dimension "
           << d << " (the bias term overwhelms the target's tail; the law concentrates at infinity)";
        throw NormalizationError(os.str(), d, dir);
      }
    }
  }
}

NormalizedDensity normalize_log_density(const TargetDensity& base, LogDensityFn logp, bool check_tails) {
  const auto& box = base.support_hint;
  if (box.size() != base.dim) throw SpecError("support_hint must have one interval per dimension");
  NormalizedDensity out;
  out.density = base;
  if (check_tails) check_decay(logp, box);
  if (base.dim > 3) {
    out.density.log_density = std::move(logp);
    out.normalized = false;
    return out;
  }
  const double shift = grid_max(logp, box);
  if (!std::isfinite(shift)) throw NormalizationError("log-density is not finite anywhere on the support", 0, 0);
  double integral;
  if (base.dim == 1) {
    auto f = [&](double x) { return std::exp(logp(std::span<const double>(&x, 1)) - shift); };
    integral = bmq::gauss_kronrod<double, 61>::integrate(f, box[0].lo, box[0].hi, 15, 1e-14);
    if (check_tails) {
      const double w = box[0].width();
      const double left = bmq::gauss_kronrod<double, 31>::integrate(f, box[0].lo - 2.0 * w, box[0].lo, 15, 1e-12);
      const double right = bmq::gauss_kronrod<double, 31>::integrate(f, box[0].hi, box[0].hi + 2.0 * w, 15, 1e-12);
      for (auto [mass, dir] : {std::pair{left, -1}, std::pair{right, +1}}) {
        if (!(mass <= 1e-3 * integral)) {
          std::ostringstream os;
          os << "stationary density puts " << mass / (integral + mass) << " of its mass beyond the "
             << (dir > 0 ? "upper" : "lower") << " end of the support hint";
          throw NormalizationError(os.str(), 0, dir);
        }
      }
    }
  } else {
    std::vector<double> x(base.dim);
    integral = integrate_box(logp, shift, box, 0, x, base.dim == 2 ? 32 : 12);
  }
  if (!std::isfinite(integral) || !(integral > 0.0))
    throw NormalizationError("normalization integral is not finite and positive", 0, 0);
  out.log_normalizer = shift + std::log(integral);
  out.normalized = true;
  out.density.log_density = [logp = std::move(logp), lz = out.log_normalizer](std::span<const double> x) {
    return logp(x) - lz;
  };
  return out;
}

}  // namespace

NormalizedDensity normalize(const TargetDensity& target) {
  return normalize_log_density(target, target.log_density, false);
}

NormalizedDensity stationary_density(const StationaryParams& params, const TargetDensity& target) {
  if (params.m1.size() != target.dim) throw SpecError("stationary params dimension does not match the target");
  const double beta = params.beta;
  const std::vector<double> bias = params.bias;
  auto logp = [beta, bias, base = target.log_density](std::span<const double> x) {
    double lin = 0.0;
    for (std::size_t d = 0; d < x.size(); ++d) lin += bias[d] * x[d];
    return beta * base(x) + lin;
  };
  TargetDensity shaped = target;
  shaped.name = target.name + "_stationary";
  shaped.grad_log_density = [beta, bias, grad = target.grad_log_density](std::span<const double> x,
                                                                          std::span<double> out) {
    grad(x, out);
    for (std::size_t d = 0; d < x.size(); ++d) out[d] = beta * out[d] + bias[d];
  };
  return normalize_log_density(shaped, std::move(logp), true);
}

UnifiedNoiseMoments unified_noise_moments(std::span<const double> m_d1, std::span<const double> m_d2,
                                          std::span<const double> m_x1, std::span<const double> m_x2,
                                          double eps) {
  if (!(eps > 0.0)) throw SpecError("step size must be positive");
  const std::size_t D = m_d1.size();
  if (m_d2.size() != D || m_x1.size() != D || m_x2.size() != D)
    throw SpecError("unified noise moments need vectors of equal length");
  UnifiedNoiseMoments out;
  const double cross = std::sqrt(8.0 / eps);
  for (std::size_t d = 0; d < D; ++d) {
    out.m_rho1.push_back(m_d1[d] + m_x1[d]);
    out.m_rho2.push_back(m_d2[d] + cross * m_d1[d] * m_x1[d] + (2.0 / eps) * m_x2[d]);
  }
  return out;
}

// ---------------------------------------------------------------------------

std::size_t Histogram::argmax() const {
  return static_cast<std::size_t>(std::max_element(counts.begin(), counts.end()) - counts.begin());
}

Histogram make_histogram(std::span<const double> values, Interval range, std::size_t bins) {
  if (bins == 0) throw SpecError("histogram needs at least one bin");
  if (!(range.hi > range.lo)) throw SpecError("histogram range must have hi > lo");
  Histogram h;
  h.edges.resize(bins + 1);
  for (std::size_t b = 0; b <= bins; ++b)
    h.edges[b] = range.lo + range.width() * static_cast<double>(b) / static_cast<double>(bins);
  h.counts.assign(bins, 0);
  const double scale = static_cast<double>(bins) / range.width();
  for (double v : values) {
    if (!(v >= range.lo)) {
      ++h.below;
    } else if (v > range.hi) {
      ++h.above;
    } else {
      const auto b = std::min(bins - 1, static_cast<std::size_t>((v - range.lo) * scale));
      ++h.counts[b];
      ++h.in_range;
    }
  }
  h.densities.assign(bins, 0.0);
  if (h.in_range > 0) {
    const double w = range.width() / static_cast<double>(bins);
    for (std::size_t b = 0; b < bins; ++b)
      h.densities[b] = static_cast<double>(h.counts[b]) / (static_cast<double>(h.in_range) * w);
  }
  return h;
}

std::vector<double> bin_masses(const Histogram& h, const TargetDensity& density) {
  std::vector<double> out(h.bins());
  for (std::size_t b = 0; b < h.bins(); ++b)
    out[b] = bmq::gauss<double, 15>::integrate([&](double x) { return std::exp(density.log_density_at(x)); },
                                               h.edges[b], h.edges[b + 1]);
  return out;
}

double histogram_l1(const Histogram& h, const TargetDensity& density) {
  if (h.in_range == 0) throw SpecError("histogram is empty");
  const auto masses = bin_masses(h, density);
  double l1 = 0.0;
  for (std::size_t b = 0; b < h.bins(); ++b)
    l1 += std::abs(static_cast<double>(h.counts[b]) / static_cast<double>(h.in_range) - masses[b]);
  return l1;
}

double density_argmax(const TargetDensity& density, Interval range, std::size_t n) {
  if (n < 2) throw SpecError("grid needs at least two points");
  double best_x = range.lo, best = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    const double x = range.lo + range.width() * static_cast<double>(i) / static_cast<double>(n - 1);
    const double v = density.log_density_at(x);
    if (v > best) {
      best = v;
      best_x = x;
    }
  }
  return best_x;
}

DensityMoments density_moments(const TargetDensity& density) {
  const auto& iv = density.support_hint.at(0);
  auto p = [&](double x) { return std::exp(density.log_density_at(x)); };
  const double z = bmq::gauss_kronrod<double, 61>::integrate(p, iv.lo, iv.hi, 15, 1e-13);
  const double m = bmq::gauss_kronrod<double, 61>::integrate([&](double x) { return x * p(x); }, iv.lo, iv.hi, 15,
                                                             1e-13) / z;
  const double v = bmq::gauss_kronrod<double, 61>::integrate(
                       [&](double x) { return (x - m) * (x - m) * p(x); }, iv.lo, iv.hi, 15, 1e-13) / z;
  return {m, v};
}

}  // namespace weaksde
