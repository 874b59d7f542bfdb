#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "diracloc/error.hpp"
#include "diracloc/runner.hpp"

using namespace diracloc;
namespace rn = diracloc::runner;

namespace {

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Everything after the '#' header lines.
std::string body(const std::filesystem::path& p) {
  const auto s = slurp(p);
  std::size_t pos = 0;
  while (pos < s.size() && s[pos] == '#') pos = s.find('\n', pos) + 1;
  return s.substr(pos);
}

rn::RunContext context(const std::string& json, const std::string& dir) {
  rn::RunContext ctx;
  ctx.config = rn::parse_config(json);
  ctx.out_dir = std::filesystem::temp_directory_path() / dir;
  std::filesystem::remove_all(ctx.out_dir);
  std::filesystem::create_directories(ctx.out_dir);
  ctx.hash = rn::config_hash(ctx.config);
  ctx.jobs = 2;
  return ctx;
}

const char* kLandau = R"({
  "profile": {"family": "constant_B", "params": [1.0, 0.0]},
  "channels": {"j_min": 0, "j_max": 3},
  "grid": {"R_max": 30, "n": 3000},
  "window": [-3.0, 3.0]
})";

}  // namespace

TEST_CASE("config round trip") {
  const auto c = rn::parse_config(kLandau);
  CHECK(c.grid.n == 3000);
  CHECK(c.window.lo == -3.0);
  const auto again = rn::parse_config(rn::to_json(c));
  CHECK(rn::to_json(again) == rn::to_json(c));
  CHECK(rn::config_hash(again) == rn::config_hash(c));
  CHECK(rn::config_hash(c).size() == 64);

  auto moved = c;
  moved.output_dir = "elsewhere";
  moved.jobs = 7;
  CHECK(rn::config_hash(moved) == rn::config_hash(c));
  moved.kappa = 1.0;
  CHECK(rn::config_hash(moved) != rn::config_hash(c));
}

TEST_CASE("config diagnostics") {
  CHECK_THROWS_WITH_AS(rn::parse_config("{\n  \"kappa\": 2,\n  oops\n}"), doctest::Contains("line 3"), ConfigError);
  try {
    rn::parse_config(R"({"wavepacket": {"q": "half"}})");
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(e.field() == "wavepacket.q");
  }
  try {
    rn::parse_config(R"({"channels": {"j_min": 3, "j_max": 1}})");
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(e.field() == "channels");
  }
  CHECK_THROWS_AS(rn::parse_config(R"({"kapa": 2})"), ConfigError);
  CHECK_THROWS_AS(rn::parse_config(R"({"delta0": 1.5})"), ConfigError);
  CHECK_THROWS_AS(rn::parse_config(R"({"profile": {"family": "nope"}})"), ConfigError);
  // NaN is not valid JSON; neither is Infinity.
  CHECK_THROWS_AS(rn::parse_config(R"({"kappa": NaN})"), ConfigError);
}

TEST_CASE("overrides") {
  const auto text = rn::apply_overrides(kLandau, {"kappa=0.5", "channels.j_max=5", "grid.h=0.01",
                                                  "verify.expected_regime=any"});
  const auto c = rn::parse_config(text);
  CHECK(c.kappa == 0.5);
  CHECK(c.j_max == 5);
  CHECK(c.grid.h == 0.01);
  CHECK_FALSE(c.expected_regime.has_value());
  CHECK_THROWS_AS(rn::apply_overrides(kLandau, {"novalue"}), ConfigError);
}

TEST_CASE("worker pool") {
  std::vector<int> hit(100, 0);
  rn::parallel_for(hit.size(), 4, [&](std::size_t i) { hit[i] += static_cast<int>(i); });
  for (std::size_t i = 0; i < hit.size(); ++i) CHECK(hit[i] == static_cast<int>(i));
  CHECK_THROWS_WITH(rn::parallel_for(10, 3, [](std::size_t i) {
                      if (i == 4 || i == 7) throw Error("job " + std::to_string(i));
                    }),
                    "job 4");
  rn::RunConfig cfg;
  cfg.jobs = 3;
  CHECK(rn::resolve_jobs(5, cfg) == 5);
}

TEST_CASE("verify exit codes") {
  auto run = [](const std::string& profile, const std::string& extra = "") {
    const auto ctx = context("{\"profile\": " + profile + extra + "}", "diracloc_verify");
    return rn::cmd_verify(ctx).exit_code;
  };
  CHECK(run(R"({"family": "linear", "params": [1, 0.5]})") == 0);
  CHECK(run(R"({"family": "linear", "params": [1, 2]})") == 2);
  CHECK(run(R"({"family": "linear", "params": [1, 2]})", R"(, "verify": {"expected_regime": "delocalized"})") == 0);
  CHECK(run(R"({"family": "linear", "params": [0, 0.5]})") == 2);
}

TEST_CASE("spectrum outputs are deterministic and hashed") {
  const auto a = context(kLandau, "diracloc_spec_a");
  const auto b = context(kLandau, "diracloc_spec_b");
  auto ra = rn::cmd_spectrum(a);
  auto b1 = b;
  b1.jobs = 1;
  auto rb = rn::cmd_spectrum(b1);
  REQUIRE(ra.exit_code == 0);
  for (const auto& f : ra.outputs) {
    if (f.ends_with(".csv")) CHECK(body(a.out_dir / f) == body(b.out_dir / f));
    CHECK(slurp(a.out_dir / f).find(a.hash) != std::string::npos);
  }
  rn::update_manifest(a, "spectrum", ra, 0.1);
  const auto st = rn::cmd_selftest(a);
  CHECK(st.exit_code == 0);

  // A tampered output is caught.
  std::ofstream(a.out_dir / "eigenvalues.csv", std::ios::app) << "# config_hash: 0\n";
  {
    std::ofstream out(a.out_dir / "bargmann.csv", std::ios::trunc);
    out << "j,m\n";
  }
  CHECK(rn::cmd_selftest(a).exit_code == 1);

  // Landau levels within 1e-2 of +-sqrt(2n).
  std::istringstream csv(body(b.out_dir / "eigenvalues.csv"));
  std::string line;
  std::getline(csv, line);
  int rows = 0;
  while (std::getline(csv, line)) {
    double E = std::stod(line.substr(line.rfind(',', line.rfind(',') - 1) + 1));
    const double n = std::round(E * E / 2.0);
    CHECK(std::fabs(std::fabs(E) - std::sqrt(2.0 * n)) <= 1e-2);
    ++rows;
  }
  CHECK(rows > 0);
}

TEST_CASE("localize with kappa = 0 tracks the norm") {
  const auto ctx = context(R"({
    "profile": {"family": "linear", "params": [1.0, 0.3]},
    "grid": {"R_max": 30, "h": 0.02},
    "kappa": 0,
    "times": {"t0": 0.1, "t1": 50, "per_decade": 16},
    "wavepacket": {"J_max": 4}
  })", "diracloc_loc0");
  const auto res = rn::cmd_localize(ctx);
  REQUIRE(res.exit_code == 0);
  std::istringstream csv(body(ctx.out_dir / "moments.csv"));
  std::string line;
  std::getline(csv, line);
  while (std::getline(csv, line)) {
    std::istringstream cells(line);
    std::string t, m, n;
    std::getline(cells, t, ',');
    std::getline(cells, m, ',');
    std::getline(cells, n, ',');
    CHECK(std::stod(m) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(std::stod(n) == doctest::Approx(1.0).epsilon(1e-12));
  }
  const auto summary = slurp(ctx.out_dir / "summary.json");
  CHECK(summary.find("\"sup_proxy\": true") != std::string::npos);
}

TEST_CASE("agmon command flags under-resolved channels") {
  const auto ctx = context(R"({
    "profile": {"family": "linear", "params": [1.0, 0.3]},
    "channels": {"j_min": 0, "j_max": 20, "step": 10},
    "grid": {"R_max": 25, "h": 0.02},
    "gamma": 0.0
  })", "diracloc_agmon");
  const auto res = rn::cmd_agmon(ctx);
  CHECK(res.exit_code == 0);
  CHECK_FALSE(res.warnings.empty());
  const auto csv = slurp(ctx.out_dir / "agmon.csv");
  CHECK(csv.find("small_grid") != std::string::npos);
  CHECK(csv.find(",ok") != std::string::npos);
}
