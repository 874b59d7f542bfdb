#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "diracloc/dynamics.hpp"
#include "diracloc/error.hpp"

using namespace diracloc;
using dynamics::DecayModel;
using dynamics::DecaySpec;
using operators::Channel;
using operators::RadialGrid;

namespace {

fields::FieldProfile linear(double a, double lambda) {
  const double p[] = {a, lambda};
  return fields::make_profile(fields::Family::linear, p);
}

const DecaySpec kGeo{DecayModel::geometric, 0.5, 4.0};

dynamics::EigenSets solve(const fields::FieldProfile& p, const dynamics::WavePacket& wp,
                          spectral::Window I, bool filter = true) {
  dynamics::EigenSets sets;
  spectral::EigOptions opts;
  opts.filter_wall_modes = filter;
  for (const auto& c : wp.channels)
    sets.emplace(c.channel.j,
                 spectral::eigs_in_window(operators::assemble_channel_matrix(p, c.channel, wp.grid), I, 0.0, opts));
  return sets;
}

double max_diff(const dynamics::WavePacket& a, const dynamics::WavePacket& b) {
  double d = 0.0;
  for (std::size_t c = 0; c < a.channels.size(); ++c)
    for (std::size_t i = 0; i < a.channels[c].re.size(); ++i) {
      d = std::max(d, std::fabs(a.channels[c].re[i] - b.channels[c].re[i]));
      d = std::max(d, std::fabs(a.channels[c].im[i] - b.channels[c].im[i]));
    }
  return d;
}

}  // namespace

TEST_CASE("packet construction") {
  const RadialGrid g{0.05, 200};
  const auto shape = dynamics::gaussian_shell(0.0, 1.0);

  const auto one = dynamics::build_wavepacket(shape, kGeo, 2.0, 0, g);
  CHECK(one.channels.size() == 1);
  CHECK(one.kappa_moment == 0.0);

  const auto wp = dynamics::build_wavepacket(shape, kGeo, 2.0, 20, g);
  CHECK(std::fabs(wp.norm_sq() - 1.0) <= 1e-14);
  // mpmath: sum |j|^2 4^-|j| / sum 4^-|j| over |j| <= 20.
  CHECK(wp.kappa_moment == doctest::Approx(0.88888888872348212).epsilon(1e-13));
  CHECK(wp.find(-20) != nullptr);
  CHECK(wp.find(21) == nullptr);

  CHECK_THROWS_AS(dynamics::build_wavepacket(shape, {DecayModel::power, 0.5, 2.5}, 2.0, 5, g), PreconditionError);
  CHECK_THROWS_AS(dynamics::build_wavepacket(shape, {DecayModel::geometric, 1.0, 4}, 2.0, 5, g), PreconditionError);
  CHECK_THROWS_AS(dynamics::build_wavepacket([](double) { return 0.0; }, kGeo, 2.0, 1, g), PreconditionError);
}

TEST_CASE("window projection") {
  const auto p = linear(1.0, 0.3);
  const auto wp = dynamics::build_wavepacket(dynamics::gaussian_shell(1.0, 1.0), kGeo, 2.0, 2, RadialGrid{0.05, 100});

  SUBCASE("idempotent") {
    const auto sets = solve(p, wp, {-2.0, 2.0});
    const auto once = dynamics::project_window(wp, sets);
    const auto twice = dynamics::project_window(once, sets);
    CHECK(max_diff(once, twice) <= 1e-12);
    CHECK(once.norm_sq() < wp.norm_sq());
  }
  SUBCASE("complete window is the identity") {
    const auto sets = solve(p, wp, {-1e6, 1e6}, false);
    CHECK(max_diff(dynamics::project_window(wp, sets), wp) <= 1e-10);
  }
  SUBCASE("empty window annihilates") {
    const auto sets = solve(p, wp, {1e5, 1e5 + 1.0});
    CHECK(dynamics::project_window(wp, sets).norm_sq() == 0.0);
  }
  SUBCASE("missing channel is an error") {
    auto sets = solve(p, wp, {-2.0, 2.0});
    sets.erase(0);
    CHECK_THROWS_AS(dynamics::project_window(wp, sets), PreconditionError);
  }
}

TEST_CASE("windowed evolution") {
  const auto p = linear(1.0, 0.3);
  const auto raw = dynamics::build_wavepacket(dynamics::gaussian_shell(0.0, 1.0), kGeo, 2.0, 2, RadialGrid{0.02, 1000});
  const auto sets = solve(p, raw, {-2.0, 2.0});
  const auto wp = dynamics::project_window(raw, sets);

  CHECK(max_diff(dynamics::evolve(wp, sets, 0.0), wp) <= 1e-15);
  for (double t : {1.0, 10.0, 100.0})
    CHECK(std::fabs(dynamics::evolve(wp, sets, t).norm_sq() - wp.norm_sq()) <= 1e-12);

  SUBCASE("eigenstate only acquires a phase") {
    const auto& set = sets.at(1);
    REQUIRE(set.N() > 0);
    dynamics::WavePacket es = wp;
    for (auto& c : es.channels) {
      std::fill(c.re.begin(), c.re.end(), 0.0);
      std::fill(c.im.begin(), c.im.end(), 0.0);
    }
    auto& c1 = es.channels[3];
    REQUIRE(c1.channel.j == 1);
    c1.re = set.pairs[0].psi;
    const double t = 3.7, E = set.pairs[0].E;
    const auto out = dynamics::evolve(es, sets, t);
    const auto& o = out.channels[3];
    for (std::size_t i = 0; i < o.re.size(); ++i) {
      CHECK(o.re[i] == doctest::Approx(std::cos(E * t) * c1.re[i]).epsilon(1e-10).scale(1e-12));
      CHECK(std::hypot(o.re[i], o.im[i]) == doctest::Approx(std::fabs(c1.re[i])).epsilon(1e-10).scale(1e-12));
    }
    const double m0 = dynamics::moment(es, 2.0).total;
    for (double s : {0.5, 20.0, 150.0}) CHECK(dynamics::moment(dynamics::evolve(es, sets, s), 2.0).total == doctest::Approx(m0).epsilon(1e-10));
  }
}

TEST_CASE("moments") {
  const RadialGrid g{0.01, 400};
  SUBCASE("compact support inside r <= 1") {
    const auto shape = [](double r) { return r < 1.0 ? r * (1.0 - r) : 0.0; };
    const auto wp = dynamics::build_wavepacket(shape, kGeo, 3.0, 3, g);
    for (double k : {0.5, 2.0, 3.0}) CHECK(dynamics::moment(wp, k).total <= wp.norm_sq());
  }
  SUBCASE("additive over channels") {
    auto wp = dynamics::build_wavepacket(dynamics::gaussian_shell(1.0, 0.5), kGeo, 2.0, 1, g);
    const auto all = dynamics::moment(wp, 2.0);
    double sum = 0.0;
    for (const auto& c : wp.channels) {
      auto single = wp;
      single.channels = {c};
      sum += dynamics::moment(single, 2.0).total;
    }
    CHECK(all.total == doctest::Approx(sum).epsilon(1e-14));
    CHECK(all.per_channel.size() == 3);
    CHECK(all.per_channel.front().first == -1);
  }
  SUBCASE("kappa = 0 is the norm") {
    const auto wp = dynamics::build_wavepacket(dynamics::gaussian_shell(1.0, 0.5), kGeo, 0.0, 4, g);
    CHECK(dynamics::moment(wp, 0.0).total == doctest::Approx(1.0).epsilon(1e-14));
  }
}

TEST_CASE("tail bound") {
  const double Z = (1.0 + 2.0 * (0.25 - std::pow(0.25, 21)) / 0.75);
  CHECK(dynamics::tail_bound({DecayModel::compact, 0.5, 4}, 2.0, 20, 1.0, 0.5) == 0.0);
  // mpmath, 200 terms per sign: sum (6 |m_j| / delta0)^kappa 4^-|j| / Z over |j| > 20.
  CHECK(dynamics::tail_bound(kGeo, 2.0, 20, Z, 0.5) == doctest::Approx(2.3878237698235854e-08).epsilon(1e-10));
  CHECK(dynamics::tail_bound(kGeo, 2.5, 20, Z, 0.5) == doctest::Approx(3.8257001200362819e-07).epsilon(1e-10));

  double prev = INFINITY;
  for (int J = 0; J <= 40; J += 4) {
    const double t = dynamics::tail_bound(kGeo, 2.0, J, Z, 0.5);
    CHECK(t < prev);
    prev = t;
  }

  // The power model bound dominates a long direct sum.
  const DecaySpec pw{DecayModel::power, 0.5, 5.0};
  double direct = 0.0;
  for (int j = 11; j <= 200000; ++j)
    for (double m : {j + 0.5, -j + 0.5}) direct += std::pow(6.0 * std::fabs(m) / 0.5, 2.0) * std::pow(1.0 + j, -5.0);
  CHECK(dynamics::tail_bound(pw, 2.0, 10, 1.0, 0.5) >= direct);
  CHECK_THROWS_AS(dynamics::tail_bound(kGeo, 2.0, 20, Z, 1.5), PreconditionError);
}

TEST_CASE("exponent fit") {
  dynamics::MomentSeries s;
  s.times = dynamics::log_times(0.1, 200.0, 32);
  CHECK(s.times.front() == 0.1);
  CHECK(s.times.back() == 200.0);

  s.total.assign(s.times.size(), 3.0);
  dynamics::fit_exponent(s);
  CHECK(std::fabs(s.fitted_exponent) <= 0.05);
  CHECK(s.sup_proxy);

  for (std::size_t i = 0; i < s.times.size(); ++i) s.total[i] = s.times[i] * s.times[i];
  dynamics::fit_exponent(s);
  CHECK(s.fitted_exponent == doctest::Approx(2.0).epsilon(0.02));
  CHECK_FALSE(s.sup_proxy);

  dynamics::MomentSeries few;
  few.times = {1, 2, 3};
  few.total = {1, 1, 1};
  CHECK_THROWS_AS(dynamics::fit_exponent(few), PreconditionError);
}

TEST_CASE("stationary packet has zero exponent") {
  const auto p = linear(1.0, 0.3);
  const auto raw = dynamics::build_wavepacket(dynamics::gaussian_shell(0.0, 1.0), kGeo, 2.0, 0, RadialGrid{0.02, 1000});
  const auto sets = solve(p, raw, {-2.0, 2.0});
  auto es = raw;
  es.channels[0].re = sets.at(0).pairs.at(0).psi;
  const auto times = dynamics::log_times(0.1, 200.0, 16);
  const auto s = dynamics::moment_series(es, sets, times, 2.0);
  CHECK(std::fabs(s.fitted_exponent) <= 0.05);
  CHECK(s.sup_proxy);
}

TEST_CASE("density synthesis") {
  const RadialGrid g{0.02, 500};
  SUBCASE("single channel is rotation invariant") {
    const auto wp = dynamics::build_wavepacket(dynamics::gaussian_shell(1.0, 0.7), kGeo, 2.0, 0, g);
    const auto f = dynamics::synthesize_density(wp, 8);
    double var = 0.0;
    for (std::size_t i = 0; i < f.r.size(); ++i)
      for (std::size_t l = 1; l < f.n_theta(); ++l) var = std::max(var, std::fabs(f.tilde_density(i, l) - f.tilde_density(i, 0)));
    CHECK(var <= 1e-10);
  }
  SUBCASE("Parseval") {
    const auto wp = dynamics::build_wavepacket(dynamics::gaussian_shell(1.0, 0.7), kGeo, 2.0, 4, g);
    const auto f = dynamics::synthesize_density(wp, 40);
    CHECK(f.integrate([](double) { return 1.0; }) == doctest::Approx(1.0).epsilon(1e-8));
  }
  SUBCASE("two channels modulate in angle, mean is the channel sum") {
    auto wp = dynamics::build_wavepacket(dynamics::gaussian_shell(1.0, 0.7), {DecayModel::compact, 0.5, 4}, 2.0, 1, g);
    wp.channels.erase(wp.channels.begin());  // keep j = 0, 1
    const auto f = dynamics::synthesize_density(wp, 16);
    const std::size_t L = f.n_theta();
    // Angular profile of the radially integrated density.
    std::vector<double> ang(L, 0.0);
    for (std::size_t i = 0; i < f.r.size(); ++i)
      for (std::size_t l = 0; l < L; ++l) ang[l] += f.weight[i] * f.tilde_density(i, l);
    double mean = 0.0;
    for (double a : ang) mean += a / L;
    const double channel_sum = wp.channels[0].norm_sq() + wp.channels[1].norm_sq();
    CHECK(mean * 2.0 * std::numbers::pi == doctest::Approx(channel_sum).epsilon(1e-12));
    const auto [lo, hi] = std::minmax_element(ang.begin(), ang.end());
    CHECK(*hi - *lo > 1e-3 * mean);
  }
  SUBCASE("undersampled theta grid") {
    const auto wp = dynamics::build_wavepacket(dynamics::gaussian_shell(1.0, 0.7), kGeo, 2.0, 4, g);
    CHECK_THROWS_AS(dynamics::synthesize_density(wp, 19), PreconditionError);
  }
}
