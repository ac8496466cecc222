#pragma once

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "weaksde/rng.hpp"

namespace weaksde {

/// Raw moments a noise variable is declared to satisfy. Orders not listed are unconstrained,
/// except for the Gaussian profile where every order is fixed: E[x^p] = (p-1)!! for even p, 0 for odd.
struct MomentProfile {
  double m1 = 0.0;
  double m2 = 1.0;
  std::optional<double> m3;
  bool higher_constrained = false;

  static MomentProfile gaussian() { return {0.0, 1.0, 0.0, true}; }

  /// Declared value of E[x^order], or nullopt when the profile leaves it free.
  std::optional<double> declared(int order) const;
};

class NoiseSpec {
 public:
  struct Gaussian {};
  struct TwoPointSymmetric {
    double amplitude = 1.0;
  };
  struct TwoPointGeneral {
    double x_plus;
    double x_minus;
    double p_plus;
  };
  struct Shifted {
    std::shared_ptr<const NoiseSpec> base;
    double offset;
    double scale;
  };
  using Kind = std::variant<Gaussian, TwoPointSymmetric, TwoPointGeneral, Shifted>;

  static NoiseSpec gaussian();
  /// P(x = +a) = P(x = -a) = 1/2.
  static NoiseSpec two_point_symmetric(double amplitude = 1.0);
  /// Declares the realized moments (m1, m2, m3).
  static NoiseSpec two_point(double x_plus, double x_minus, double p_plus);
  /// Explicit declaration; realized m1/m2 (and m3 if declared) must match to 1e-12.
  static NoiseSpec two_point(double x_plus, double x_minus, double p_plus, MomentProfile declared);
  /// Zero-mean unit-variance two-point law with P(x_plus) = p_plus; the remaining degree of freedom.
  static NoiseSpec standardized_two_point(double p_plus);
  /// {sqrt(3/2) w.p. 0.4, -sqrt(2/3) w.p. 0.6}: mean 0, variance 1, third moment 1/sqrt(6).
  static NoiseSpec skewed_reference();
  /// offset + scale * base.
  static NoiseSpec shifted(const NoiseSpec& base, double offset, double scale);

  const Kind& kind() const noexcept { return kind_; }
  const MomentProfile& declared() const noexcept { return declared_; }

  /// Exact moment of the law (not the declaration). Orders 1..8.
  double realized_moment(int order) const;

  double draw(Stream& stream) const;

  std::string describe() const;

 private:
  NoiseSpec(Kind kind, MomentProfile declared);

  Kind kind_;
  MomentProfile declared_;
};

/// `dim` independent draws.
std::vector<double> sample(const NoiseSpec& spec, Stream& stream, std::size_t dim);
void sample(const NoiseSpec& spec, Stream& stream, std::span<double> out);

struct MomentReport {
  int order = 0;
  double empirical = 0.0;
  std::optional<double> declared;
  double std_error = 0.0;
  double z_score = 0.0;  // 0 when nothing is declared
};

/// Empirical raw moments from n draws with z-scores against the declaration.
/// Draws are split into fixed blocks, one stream per block, evaluated in parallel.
std::vector<MomentReport> verify_moments(const NoiseSpec& spec, std::size_t n,
                                         std::span<const int> orders, std::uint64_t seed = 0);

namespace reference {
std::vector<MomentReport> verify_moments(const NoiseSpec& spec, std::size_t n,
                                         std::span<const int> orders, std::uint64_t seed = 0);
}

/// Symmetric two-point diffusion with second moment 1 - (eps/2) v[d], one spec per component.
/// Throws BudgetExceeded when (eps/2) v[d] >= 1.
std::vector<NoiseSpec> adaptive_two_point(std::span<const double> v, double eps);

/// Amplitude sqrt(1 - (eps/2) v) of the adaptive two-point law for one component.
double adaptive_amplitude(double v, double eps, std::size_t component = 0);

}  // namespace weaksde
