#include <doctest.h>

#include <cmath>
#include <set>

#include "weaksde/errors.hpp"
#include "weaksde/noise.hpp"

using namespace weaksde;

namespace {
const int kOrders4[] = {1, 2, 3, 4};
const int kOrders3[] = {1, 2, 3};
}  // namespace

TEST_SUITE("noise") {

TEST_CASE("skewed reference realizes (0, 1, 1/sqrt 6)") {
  const auto s = NoiseSpec::skewed_reference();
  // closed form 0.4 (3/2)^{3/2} - 0.6 (2/3)^{3/2}
  const double m3 = 0.4 * std::pow(1.5, 1.5) - 0.6 * std::pow(2.0 / 3.0, 1.5);
  CHECK(std::abs(s.realized_moment(1)) < 1e-12);
  CHECK(std::abs(s.realized_moment(2) - 1.0) < 1e-12);
  CHECK(std::abs(s.realized_moment(3) - m3) < 1e-12);
  CHECK(std::abs(m3 - 1.0 / std::sqrt(6.0)) < 1e-12);
  CHECK(std::abs(s.realized_moment(3) - 0.408248) < 1e-6);
}

TEST_CASE("standardized two-point with p = 0.4 is the skewed reference") {
  const auto a = NoiseSpec::standardized_two_point(0.4);
  const auto b = NoiseSpec::skewed_reference();
  for (int p = 1; p <= 6; ++p) CHECK(std::abs(a.realized_moment(p) - b.realized_moment(p)) < 1e-12);
  CHECK(std::abs(a.declared().m1) < 1e-12);
  CHECK(std::abs(a.declared().m2 - 1.0) < 1e-12);
}

TEST_CASE("symmetric two-point realizes (0, 1, 0) and draws two values") {
  const auto s = NoiseSpec::two_point_symmetric();
  CHECK(s.realized_moment(1) == 0.0);
  CHECK(s.realized_moment(2) == 1.0);
  CHECK(s.realized_moment(3) == 0.0);
  Stream st(1, 0);
  std::set<double> values;
  for (int i = 0; i < 1000; ++i) values.insert(s.draw(st));
  CHECK(values == std::set<double>{-1.0, 1.0});

  const auto k = NoiseSpec::skewed_reference();
  values.clear();
  for (int i = 0; i < 1000; ++i) values.insert(k.draw(st));
  CHECK(values == std::set<double>{-std::sqrt(2.0 / 3.0), std::sqrt(1.5)});
}

TEST_CASE("gaussian sample has dim independent draws") {
  Stream st(3, 0);
  const auto v = sample(NoiseSpec::gaussian(), st, 3);
  CHECK(v.size() == 3);
  CHECK(v[0] != v[1]);
}

TEST_CASE("declared profiles") {
  const auto g = MomentProfile::gaussian();
  CHECK(*g.declared(4) == 3.0);
  CHECK(*g.declared(6) == 15.0);
  CHECK(*g.declared(5) == 0.0);
  CHECK_FALSE(NoiseSpec::two_point_symmetric().declared().declared(4).has_value());
  CHECK(*NoiseSpec::skewed_reference().declared().declared(3) ==
        doctest::Approx(1.0 / std::sqrt(6.0)).epsilon(1e-12));
}

TEST_CASE("invalid specs are rejected at construction") {
  CHECK_THROWS_AS(NoiseSpec::two_point(1.0, -1.0, 0.0), SpecError);
  CHECK_THROWS_AS(NoiseSpec::two_point(1.0, -1.0, 1.0), SpecError);
  CHECK_THROWS_AS(NoiseSpec::two_point(1.0, -1.0, 1.5), SpecError);
  CHECK_THROWS_AS(NoiseSpec::standardized_two_point(0.0), SpecError);
  CHECK_THROWS_AS(NoiseSpec::two_point_symmetric(-1.0), SpecError);
  CHECK_THROWS_AS(NoiseSpec::two_point_symmetric(std::nan("")), SpecError);
  // support realizes m2 = 2, declaration claims 1
  CHECK_THROWS_AS(NoiseSpec::two_point(std::sqrt(2.0), -std::sqrt(2.0), 0.5, {0.0, 1.0, 0.0, false}), SpecError);
  CHECK_NOTHROW(NoiseSpec::two_point(std::sqrt(1.5), -std::sqrt(2.0 / 3.0), 0.4, {0.0, 1.0, {}, false}));
}

TEST_CASE("shifted wrapper moments") {
  const auto s = NoiseSpec::shifted(NoiseSpec::skewed_reference(), 0.5, std::sqrt(2.0));
  CHECK(s.declared().m1 == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(s.declared().m2 == doctest::Approx(2.25).epsilon(1e-14));
  for (int p = 1; p <= 3; ++p) CHECK(s.realized_moment(p) == doctest::Approx(*s.declared().declared(p)).epsilon(1e-12));
  const int orders[] = {1, 2, 3};
  for (const auto& r : verify_moments(s, 1000000, orders, 11)) CHECK(std::abs(r.z_score) < 5.0);
}

TEST_CASE("verify_moments: symmetric two-point, order 4 undeclared") {
  const auto reports = verify_moments(NoiseSpec::two_point_symmetric(), 1000000, kOrders4, 1);
  REQUIRE(reports.size() == 4);
  for (int i = 0; i < 3; ++i) {
    CHECK(reports[i].declared.has_value());
    CHECK(std::abs(reports[i].z_score) < 4.0);
  }
  CHECK_FALSE(reports[3].declared.has_value());
  CHECK(reports[3].empirical == 1.0);
}

TEST_CASE("verify_moments: gaussian fourth moment is 3") {
  const int orders[] = {4};
  const auto r = verify_moments(NoiseSpec::gaussian(), 1000000, orders, 2).at(0);
  CHECK(*r.declared == 3.0);
  CHECK(std::abs(r.empirical - 3.0) < 4.0 * r.std_error);
}

TEST_CASE("verify_moments: skewed third moment") {
  const int orders[] = {3};
  const auto r = verify_moments(NoiseSpec::skewed_reference(), 1000000, orders, 3).at(0);
  CHECK(std::abs(r.empirical - 0.408248) < 4.0 * r.std_error + 1e-6);
}

TEST_CASE("every built-in spec passes its declared moments") {
  const NoiseSpec specs[] = {NoiseSpec::gaussian(), NoiseSpec::two_point_symmetric(), NoiseSpec::skewed_reference(),
                             NoiseSpec::two_point_symmetric(2.0), NoiseSpec::standardized_two_point(0.2)};
  std::uint64_t seed = 100;
  for (const auto& s : specs)
    for (const auto& r : verify_moments(s, 1000000, kOrders3, seed++)) {
      INFO(s.describe() << " order " << r.order);
      CHECK(std::abs(r.z_score) < 5.0);
    }
}

TEST_CASE("verify_moments requires 10^4 draws and matches the serial version bitwise") {
  CHECK_THROWS_AS(verify_moments(NoiseSpec::gaussian(), 9999, kOrders3), SpecError);
  const auto a = verify_moments(NoiseSpec::skewed_reference(), 300001, kOrders4, 8);
  const auto b = reference::verify_moments(NoiseSpec::skewed_reference(), 300001, kOrders4, 8);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].empirical == b[i].empirical);
    CHECK(a[i].std_error == b[i].std_error);
  }
}

TEST_CASE("adaptive two-point") {
  const double eps = 0.1;
  SUBCASE("v = 0 gives +-1") {
    const auto s = adaptive_two_point(std::vector<double>{0.0}, eps).at(0);
    CHECK(s.realized_moment(2) == 1.0);
    CHECK(adaptive_amplitude(0.0, eps) == 1.0);
  }
  SUBCASE("v = 10 gives +-sqrt(0.5)") {
    const auto s = adaptive_two_point(std::vector<double>{10.0}, eps).at(0);
    CHECK(s.realized_moment(1) == 0.0);
    CHECK(s.realized_moment(2) == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(adaptive_amplitude(10.0, eps) == doctest::Approx(std::sqrt(0.5)).epsilon(1e-14));
  }
  SUBCASE("v = 20 exhausts the budget") {
    CHECK_THROWS_AS(adaptive_two_point(std::vector<double>{20.0}, eps), BudgetExceeded);
    try {
      adaptive_two_point(std::vector<double>{1.0, 25.0}, eps);
    } catch (const BudgetExceeded& e) {
      CHECK(e.component == 1);
      CHECK(e.v == 25.0);
    }
  }
}

}
