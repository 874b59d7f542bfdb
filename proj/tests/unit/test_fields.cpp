#include <doctest.h>

#include <cmath>
#include <numbers>

#include "diracloc/error.hpp"
#include "diracloc/fields.hpp"

using namespace diracloc;
using fields::Family;

namespace {

fields::FieldProfile linear(double a, double lambda) {
  const double p[] = {a, lambda};
  return fields::make_profile(Family::linear, p);
}

}  // namespace

TEST_CASE("family evaluation") {
  const auto lin = linear(1.0, 0.5);
  CHECK(lin.A(2.0) == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(lin.V(2.0) == doctest::Approx(1.0).epsilon(1e-15));

  const double cb[] = {2.0, 0.0};
  const auto landau = fields::make_profile(Family::constant_B, cb);
  CHECK(landau.A(3.0) == doctest::Approx(3.0).epsilon(1e-14));
  CHECK(landau.V(3.0) == 0.0);

  const double pw[] = {1.0, 0.5, 0.0};
  const auto sq = fields::make_profile(Family::power, pw);
  CHECK(sq.dA(4.0) / (sq.A(4.0) * sq.A(4.0)) == doctest::Approx(0.0625).epsilon(1e-12));
}

TEST_CASE("family parameter validation") {
  const double bad[] = {1.0};
  CHECK_THROWS_AS(fields::make_profile(Family::linear, bad), PreconditionError);
  const double neg_p[] = {1.0, -1.0};
  CHECK_THROWS_AS(fields::make_profile(Family::power, neg_p), PreconditionError);
  CHECK_THROWS_AS(fields::parse_family("banana"), PreconditionError);
}

TEST_CASE("vector potential from B") {
  CHECK(fields::vector_potential_from_B([](double) { return 2.0; }, 5.0) ==
        doctest::Approx(5.0).epsilon(1e-12));
  CHECK(fields::vector_potential_from_B([](double s) { return 2.0 * s; }, 3.0) ==
        doctest::Approx(6.0).epsilon(1e-12));
  // mpmath: (1/r) int_0^1 s / (1 + s) ds at r = 1.
  CHECK(fields::vector_potential_from_B([](double s) { return 1.0 / (1.0 + s); }, 1.0) ==
        doctest::Approx(0.30685281944005469).epsilon(1e-10));
}

TEST_CASE("tabulated B reproduces the analytic potential") {
  fields::TabulatedSamples t;
  for (int i = 0; i <= 400; ++i) {
    const double r = 0.025 * i;
    t.r.push_back(r);
    t.B.push_back(2.0);
  }
  const auto p = fields::make_tabulated(t);
  for (double r : {0.5, 3.3, 9.9}) CHECK(p.A(r) == doctest::Approx(r).epsilon(1e-8));
  CHECK(p.V(1.0) == 0.0);

  fields::TabulatedSamples both = t;
  both.A = t.B;
  CHECK_THROWS_AS(fields::make_tabulated(both), PreconditionError);
}

TEST_CASE("composite sums its parts") {
  const auto c = fields::make_composite({linear(1.0, 0.0), linear(0.5, 0.25)});
  CHECK(c.A(2.0) == doctest::Approx(3.0));
  CHECK(c.V(2.0) == doctest::Approx(0.5));
  CHECK(c.dA(7.0) == doctest::Approx(1.5));
}

TEST_CASE("agmon weight") {
  const auto lin = linear(1.0, 0.0);
  CHECK(fields::agmon_weight(lin, 2.0) == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(fields::agmon_weight(lin, 3.0) == doctest::Approx(4.5).epsilon(1e-12));
  const auto lg = fields::FieldProfile::custom([](double r) { return std::log1p(r); },
                                               [](double) { return 0.0; },
                                               [](double r) { return 1.0 / (1.0 + r); });
  // mpmath: int_0^1 ln(1 + s) ds.
  CHECK(fields::agmon_weight(lg, 1.0) == doctest::Approx(0.38629436111989062).epsilon(1e-10));

  const double radii[] = {0.5, 1.0, 2.0, 4.0};
  const auto acc = fields::agmon_weight_at(lin, radii);
  for (std::size_t i = 0; i < acc.size(); ++i)
    CHECK(acc[i] == doctest::Approx(0.5 * radii[i] * radii[i]).epsilon(1e-12));
}

TEST_CASE("hypothesis probes") {
  SUBCASE("localized linear") {
    const auto rep = fields::verify_hypothesis(linear(1.0, 0.5), 10.0, 1e4, 64);
    CHECK(rep.regime == fields::Regime::localized);
    CHECK(rep.con1_limsup == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(rep.con0_pass);
  }
  SUBCASE("swapped roles") {
    const auto rep = fields::verify_hypothesis(linear(0.5, 1.0), 10.0, 1e4, 64);
    CHECK(rep.regime == fields::Regime::delocalized);
    CHECK(rep.deloc_limsup == doctest::Approx(0.5).epsilon(1e-12));
  }
  SUBCASE("con2 tail shrinks for sqrt growth") {
    const double pw[] = {1.0, 0.5, 0.0};
    const auto p = fields::make_profile(Family::power, pw);
    const auto near = fields::verify_hypothesis(p, 10.0, 1e3, 64);
    const auto far = fields::verify_hypothesis(p, 10.0, 1e6, 64);
    CHECK(far.con2_sup_tail < near.con2_sup_tail);
    CHECK(far.regime == fields::Regime::localized);
  }
  SUBCASE("vanishing A is reported, not divided by") {
    const auto rep = fields::verify_hypothesis(linear(0.0, 0.5), 10.0, 1e4, 64);
    CHECK_FALSE(rep.con0_pass);
    CHECK_FALSE(rep.skipped_probes.empty());
    CHECK(rep.regime != fields::Regime::localized);
  }
}

TEST_CASE("turning radius") {
  const auto lin = linear(1.0, 0.0);
  CHECK(fields::turning_radius(lin, 0.5, 0.5) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(fields::turning_radius(lin, 7.5, 0.5) == doctest::Approx(3.8729833462074169).epsilon(1e-12));
  const auto lg = fields::FieldProfile::custom([](double r) { return std::log1p(r); },
                                               [](double) { return 0.0; });
  // mpmath findroot of r ln(1 + r) = 1.
  CHECK(fields::turning_radius(lg, 0.5, 0.5) == doctest::Approx(1.2399778876565501).epsilon(1e-10));
  CHECK(fields::turning_radius(lin, -7.5, 0.5) == doctest::Approx(3.8729833462074169).epsilon(1e-12));

  // r |A| stays below 1, so |m| >= delta0 r |A| everywhere.
  const auto bounded = fields::FieldProfile::custom([](double r) { return 1.0 / (1.0 + r); },
                                                    [](double) { return 0.0; });
  CHECK_THROWS_WITH_AS(fields::turning_radius(bounded, 0.5, 0.1),
                       doctest::Contains("profile violates con0"), NumericalError);
  CHECK_THROWS_AS(fields::turning_radius(lin, 0.5, 1.5), PreconditionError);
}

TEST_CASE("cutoffs") {
  const auto c = fields::make_cutoffs(linear(1.0, 0.0), 0.5, 0.5);
  CHECK(c.r_j == doctest::Approx(1.0));
  CHECK(c.f(2.9) == 0.0);
  CHECK(c.f(6.1) == 1.0);
  CHECK(c.f_tilde(0.9) == 0.0);
  CHECK(c.f_tilde(2.1) == 1.0);
  const double mid = c.f(4.5);
  CHECK(mid > 0.0);
  CHECK(mid < 1.0);
  CHECK(mid + c.f_c(4.5) == 1.0);
}

TEST_CASE("smoothstep is C1 with matching derivative") {
  for (double x : {1.1, 1.37, 1.5, 1.93}) {
    const double h = 1e-6;
    const double fd = (fields::smoothstep(x + h) - fields::smoothstep(x - h)) / (2 * h);
    CHECK(fields::smoothstep_derivative(x) == doctest::Approx(fd).epsilon(1e-7));
  }
  CHECK(fields::smoothstep_derivative(1.0) == 0.0);
  CHECK(fields::smoothstep_derivative(2.0) == 0.0);
}
