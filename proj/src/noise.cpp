#include "weaksde/noise.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "weaksde/errors.hpp"
#include "weaksde/stats.hpp"

namespace weaksde {

namespace {

constexpr double kMomentTol = 1e-12;
constexpr std::size_t kVerifyBlock = 1 << 16;

double double_factorial(int k) {
  double r = 1.0;
  for (int i = k; i > 1; i -= 2) r *= i;
  return r;
}

double binomial(int n, int k) {
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

void validate_profile(const MomentProfile& p) {
  if (!std::isfinite(p.m1) || !std::isfinite(p.m2) || (p.m3 && !std::isfinite(*p.m3)))
    throw SpecError("moment profile has non-finite entries");
  if (p.m2 < p.m1 * p.m1 - kMomentTol)
    throw SpecError("moment profile has negative variance: m2 < m1^2");
  if (p.higher_constrained &&
      (std::abs(p.m1) > kMomentTol || std::abs(p.m2 - 1.0) > kMomentTol || !p.m3 ||
       std::abs(*p.m3) > kMomentTol))
    throw SpecError("a fully constrained profile must be the standard Gaussian (0, 1, 0)");
}

}  // namespace

std::optional<double> MomentProfile::declared(int order) const {
  if (order < 1) throw SpecError("moment order must be positive");
  switch (order) {
    case 1: return m1;
    case 2: return m2;
    case 3: return m3;
    default:
      if (!higher_constrained) return std::nullopt;
      return order % 2 == 1 ? 0.0 : double_factorial(order - 1);
  }
}

NoiseSpec::NoiseSpec(Kind kind, MomentProfile declared)
    : kind_(std::move(kind)), declared_(declared) {
  validate_profile(declared_);
}

NoiseSpec NoiseSpec::gaussian() { return NoiseSpec(Gaussian{}, MomentProfile::gaussian()); }

NoiseSpec NoiseSpec::two_point_symmetric(double amplitude) {
  if (!(amplitude >= 0.0) || !std::isfinite(amplitude))
    throw SpecError("two-point amplitude must be finite and nonnegative");
  return NoiseSpec(TwoPointSymmetric{amplitude}, {0.0, amplitude * amplitude, 0.0, false});
}

NoiseSpec NoiseSpec::two_point(double x_plus, double x_minus, double p_plus) {
  if (!(p_plus > 0.0 && p_plus < 1.0)) throw SpecError("two-point probability must lie in (0, 1)");
  if (!std::isfinite(x_plus) || !std::isfinite(x_minus))
    throw SpecError("two-point support must be finite");
  const double q = 1.0 - p_plus;
  MomentProfile realized{p_plus * x_plus + q * x_minus,
                         p_plus * x_plus * x_plus + q * x_minus * x_minus,
                         p_plus * x_plus * x_plus * x_plus + q * x_minus * x_minus * x_minus, false};
  return NoiseSpec(TwoPointGeneral{x_plus, x_minus, p_plus}, realized);
}

NoiseSpec NoiseSpec::two_point(double x_plus, double x_minus, double p_plus, MomentProfile declared) {
  const NoiseSpec realized = two_point(x_plus, x_minus, p_plus);
  const auto& r = realized.declared_;
  if (declared.higher_constrained) throw SpecError("a two-point law cannot match every Gaussian moment");
  if (std::abs(r.m1 - declared.m1) > kMomentTol || std::abs(r.m2 - declared.m2) > kMomentTol)
    throw SpecError("two-point support does not realize the declared m1/m2");
  if (declared.m3 && std::abs(*r.m3 - *declared.m3) > kMomentTol)
    throw SpecError("two-point support does not realize the declared m3");
  return NoiseSpec(TwoPointGeneral{x_plus, x_minus, p_plus}, declared);
}

NoiseSpec NoiseSpec::standardized_two_point(double p_plus) {
  if (!(p_plus > 0.0 && p_plus < 1.0)) throw SpecError("two-point probability must lie in (0, 1)");
  const double q = 1.0 - p_plus;
  return two_point(std::sqrt(q / p_plus), -std::sqrt(p_plus / q), p_plus);
}

NoiseSpec NoiseSpec::skewed_reference() {
  return two_point(std::sqrt(1.5), -std::sqrt(2.0 / 3.0), 0.4);
}

NoiseSpec NoiseSpec::shifted(const NoiseSpec& base, double offset, double scale) {
  if (!std::isfinite(offset) || !std::isfinite(scale)) throw SpecError("shift parameters must be finite");
  const auto& b = base.declared_;
  MomentProfile d;
  if (offset == 0.0 && scale == 1.0) {
    d = b;
  } else {
    d.m1 = offset + scale * b.m1;
    d.m2 = offset * offset + 2.0 * offset * scale * b.m1 + scale * scale * b.m2;
    if (b.m3)
      d.m3 = offset * offset * offset + 3.0 * offset * offset * scale * b.m1 +
             3.0 * offset * scale * scale * b.m2 + scale * scale * scale * *b.m3;
    d.higher_constrained = false;
  }
  return NoiseSpec(Shifted{std::make_shared<const NoiseSpec>(base), offset, scale}, d);
}

double NoiseSpec::realized_moment(int order) const {
  if (order < 1 || order > 8) throw SpecError("realized moments are available for orders 1..8");
  return std::visit(
      [order](const auto& k) -> double {
        using T = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<T, Gaussian>) {
          return order % 2 == 1 ? 0.0 : double_factorial(order - 1);
        } else if constexpr (std::is_same_v<T, TwoPointSymmetric>) {
          return order % 2 == 1 ? 0.0 : std::pow(k.amplitude, order);
        } else if constexpr (std::is_same_v<T, TwoPointGeneral>) {
          return k.p_plus * std::pow(k.x_plus, order) + (1.0 - k.p_plus) * std::pow(k.x_minus, order);
        } else {
          double s = std::pow(k.offset, order);
          for (int j = 1; j <= order; ++j)
            s += binomial(order, j) * std::pow(k.offset, order - j) * std::pow(k.scale, j) *
                 k.base->realized_moment(j);
          return s;
        }
      },
      kind_);
}

double NoiseSpec::draw(Stream& stream) const {
  return std::visit(
      [&stream](const auto& k) -> double {
        using T = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<T, Gaussian>) {
          return stream.normal();
        } else if constexpr (std::is_same_v<T, TwoPointSymmetric>) {
          return (stream.next_u64() >> 63) ? k.amplitude : -k.amplitude;
        } else if constexpr (std::is_same_v<T, TwoPointGeneral>) {
          return stream.uniform() < k.p_plus ? k.x_plus : k.x_minus;
        } else {
          return k.offset + k.scale * k.base->draw(stream);
        }
      },
      kind_);
}

std::string NoiseSpec::describe() const {
  std::ostringstream os;
  os.precision(17);
  std::visit(
      [&os](const auto& k) {
        using T = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<T, Gaussian>) {
          os << "gaussian";
        } else if constexpr (std::is_same_v<T, TwoPointSymmetric>) {
          os << "two_point_symmetric(" << k.amplitude << ")";
        } else if constexpr (std::is_same_v<T, TwoPointGeneral>) {
          os << "two_point(" << k.x_plus << "," << k.x_minus << "," << k.p_plus << ")";
        } else {
          os << "shifted(" << k.base->describe() << "," << k.offset << "," << k.scale << ")";
        }
      },
      kind_);
  return os.str();
}

std::vector<double> sample(const NoiseSpec& spec, Stream& stream, std::size_t dim) {
  std::vector<double> out(dim);
  sample(spec, stream, out);
  return out;
}

void sample(const NoiseSpec& spec, Stream& stream, std::span<double> out) {
  for (double& x : out) x = spec.draw(stream);
}

namespace {

void check_verify_args(std::size_t n, std::span<const int> orders) {
  if (n < 10000) throw SpecError("verify_moments needs at least 10^4 draws");
  for (int p : orders)
    if (p < 1) throw SpecError("moment order must be positive");
}

std::vector<RunningMoments> verify_block(const NoiseSpec& spec, std::span<const int> orders,
                                         std::uint64_t seed, std::size_t block, std::size_t count) {
  std::vector<RunningMoments> acc(orders.size());
  Stream stream(seed, block);
  for (std::size_t i = 0; i < count; ++i) {
    const double x = spec.draw(stream);
    for (std::size_t j = 0; j < orders.size(); ++j) acc[j].push(std::pow(x, orders[j]));
  }
  return acc;
}

std::vector<MomentReport> finish_reports(const NoiseSpec& spec, std::span<const int> orders,
                                         const std::vector<std::vector<RunningMoments>>& blocks) {
  std::vector<MomentReport> out;
  for (std::size_t j = 0; j < orders.size(); ++j) {
    RunningMoments total;
    for (const auto& b : blocks) total.merge(b[j]);
    MomentReport r;
    r.order = orders[j];
    r.empirical = total.mean;
    r.std_error = total.std_error();
    r.declared = spec.declared().declared(orders[j]);
    if (r.declared) {
      const double diff = r.empirical - *r.declared;
      if (r.std_error > 0.0)
        r.z_score = diff / r.std_error;
      else
        r.z_score = std::abs(diff) <= kMomentTol ? 0.0 : std::numeric_limits<double>::infinity();
    }
    out.push_back(r);
  }
  return out;
}

}  // namespace

std::vector<MomentReport> verify_moments(const NoiseSpec& spec, std::size_t n,
                                         std::span<const int> orders, std::uint64_t seed) {
  check_verify_args(n, orders);
  const std::size_t n_blocks = (n + kVerifyBlock - 1) / kVerifyBlock;
  std::vector<std::vector<RunningMoments>> blocks(n_blocks);
#pragma omp parallel for schedule(dynamic, 1)
  for (std::size_t b = 0; b < n_blocks; ++b) {
    const std::size_t count = std::min(kVerifyBlock, n - b * kVerifyBlock);
    blocks[b] = verify_block(spec, orders, seed, b, count);
  }
  return finish_reports(spec, orders, blocks);
}

namespace reference {

std::vector<MomentReport> verify_moments(const NoiseSpec& spec, std::size_t n,
                                         std::span<const int> orders, std::uint64_t seed) {
  check_verify_args(n, orders);
  const std::size_t n_blocks = (n + kVerifyBlock - 1) / kVerifyBlock;
  std::vector<std::vector<RunningMoments>> blocks;
  for (std::size_t b = 0; b < n_blocks; ++b)
    blocks.push_back(verify_block(spec, orders, seed, b, std::min(kVerifyBlock, n - b * kVerifyBlock)));
  return finish_reports(spec, orders, blocks);
}

}  // namespace reference

double adaptive_amplitude(double v, double eps, std::size_t component) {
  if (!(eps > 0.0)) throw SpecError("step size must be positive");
  if (!(v >= 0.0)) throw SpecError("tracked second moment must be nonnegative");
  const double budget = 1.0 - 0.5 * eps * v;
  if (!(budget > 0.0)) {
    std::ostringstream os;
    os << "gradient-noise second moment v=" << v << " at component " << component
       << " exceeds the diffusion budget 2/eps=" << 2.0 / eps << "; use a smaller step size";
    throw BudgetExceeded(os.str(), component, v);
  }
  return std::sqrt(budget);
}

std::vector<NoiseSpec> adaptive_two_point(std::span<const double> v, double eps) {
  std::vector<NoiseSpec> out;
  out.reserve(v.size());
  for (std::size_t d = 0; d < v.size(); ++d)
    out.push_back(NoiseSpec::two_point_symmetric(adaptive_amplitude(v[d], eps, d)));
  return out;
}

}  // namespace weaksde
