#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <limits>
#include <map>
#include <sstream>

#include "diracloc/dynamics.hpp"
#include "diracloc/error.hpp"
#include "diracloc/runner.hpp"
#include "diracloc/simd/kernels.hpp"
#include "runner/output.hpp"

namespace diracloc::runner {

using json = nlohmann::json;
using detail::CsvTable;

namespace {

// JSON has no infinities; they are written as null.
json num(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

// Least-squares slope of y against x.
double ls_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  if (x.size() < 2) return std::numeric_limits<double>::quiet_NaN();
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  const double den = n * sxx - sx * sx;
  return den > 0.0 ? (n * sxy - sx * sy) / den : std::numeric_limits<double>::quiet_NaN();
}

std::string fmt(double x) { return detail::format_double(x); }

fields::HypothesisReport probe(const RunConfig& c, const fields::FieldProfile& prof) {
  return fields::verify_hypothesis(prof, c.verify_R_start, c.verify_R_end, c.verify_probes,
                                   c.margin);
}

int max_abs_j(const std::vector<int>& js) {
  int m = 0;
  for (int j : js) m = std::max(m, std::abs(j));
  return m;
}

// Rethrows with the channel attached so that pool failures stay traceable.
template <class F>
auto with_channel(int j, F&& f) {
  try {
    return f();
  } catch (const ConfigError&) {
    throw;
  } catch (const PreconditionError& e) {
    throw PreconditionError("channel j = " + std::to_string(j) + ": " + e.what());
  } catch (const NumericalError& e) {
    throw NumericalError("channel j = " + std::to_string(j) + ": " + e.what());
  }
}

}  // namespace

CommandResult cmd_verify(const RunContext& ctx) {
  const auto& c = ctx.config;
  const auto prof = build_profile(c.profile);
  const auto rep = probe(c, prof);

  CommandResult res;
  CsvTable probes({"r", "abs_A", "abs_V", "V_over_A", "dA_over_A2", "A_over_V"});
  for (double r : rep.probe_radii) {
    const double A = prof.A(r), V = prof.V(r), dA = prof.dA(r);
    const double inf = std::numeric_limits<double>::infinity();
    probes.row().add(r).add(std::fabs(A)).add(std::fabs(V));
    probes.add(A != 0.0 ? std::fabs(V / A) : inf).add(A != 0.0 ? std::fabs(dA / (A * A)) : inf);
    probes.add(V != 0.0 ? std::fabs(A / V) : inf);
  }
  res.outputs.push_back(probes.write(ctx, "verify", "probes.csv"));

  const std::string regime(fields::to_string(rep.regime));
  const std::string requested =
      c.expected_regime ? std::string(fields::to_string(*c.expected_regime)) : "any";
  if (rep.regime == fields::Regime::indeterminate)
    res.exit_code = 2;
  else if (c.expected_regime && *c.expected_regime != rep.regime)
    res.exit_code = 2;

  json doc{{"regime", regime},
           {"requested", requested},
           {"con0_pass", rep.con0_pass},
           {"con0_loglog_slope", num(rep.con0_loglog_slope)},
           {"con1_limsup", num(rep.con1_limsup)},
           {"con2_sup_tail", num(rep.con2_sup_tail)},
           {"deloc_limsup", num(rep.deloc_limsup)},
           {"V_unbounded", rep.V_unbounded},
           {"margin", rep.margin},
           {"R_start", c.verify_R_start},
           {"R_end", c.verify_R_end},
           {"n_probes", c.verify_probes},
           {"skipped_probes", rep.skipped_probes},
           {"profile", prof.describe()},
           {"exit_code", res.exit_code}};
  res.outputs.push_back(detail::write_json(ctx, "hypothesis.json", doc.dump()));
  if (!rep.con0_pass) res.warnings.push_back("con0 fails: |A| does not grow without bound on the probes");
  if (!rep.skipped_probes.empty())
    res.warnings.push_back(std::to_string(rep.skipped_probes.size()) + " probes skipped (A or V vanished)");
  res.summary = "regime=" + regime + " requested=" + requested +
                " con1=" + fmt(rep.con1_limsup) + " con2=" + fmt(rep.con2_sup_tail);
  return res;
}

CommandResult cmd_spectrum(const RunContext& ctx) {
  const auto& c = ctx.config;
  const auto prof = build_profile(c.profile);
  const auto js = channel_list(c);
  const auto grid = resolve_grid(c, prof, max_abs_j(js));
  const auto rep = probe(c, prof);
  const double eps = c.bargmann_eps ? *c.bargmann_eps : spectral::default_bargmann_eps(rep.con1_limsup);
  const double E = c.bargmann_E ? *c.bargmann_E : std::max(std::fabs(c.window.lo), std::fabs(c.window.hi));

  struct Job {
    spectral::EigenSet set;
    std::optional<spectral::BargmannEntry> bargmann;
    std::string bargmann_error;
  };
  std::vector<Job> jobs(js.size());
  parallel_for(js.size(), ctx.jobs, [&](std::size_t i) {
    with_channel(js[i], [&] {
      const auto ch = operators::Channel::of(js[i]);
      const auto op = operators::assemble_channel_matrix(prof, ch, grid);
      jobs[i].set = spectral::eigs_in_window(op, c.window);
      if (std::fabs(ch.m) > 1.0) {
        try {
          jobs[i].bargmann = spectral::bargmann_report(prof, op, E, eps);
        } catch (const NumericalError& e) {
          jobs[i].bargmann_error = e.what();
        }
      }
      return 0;
    });
  });

  CommandResult res;
  CsvTable eig({"j", "m", "k", "E", "residual"});
  CsvTable barg({"j", "m", "N", "bound", "ratio", "R_j", "C", "majorant"});
  std::vector<double> lx, ly;
  int walls = 0;
  for (std::size_t i = 0; i < js.size(); ++i) {
    const auto& s = jobs[i].set;
    walls += s.wall_modes_dropped;
    for (std::size_t k = 0; k < s.pairs.size(); ++k)
      eig.row().add(js[i]).add(s.channel.m).add(static_cast<long long>(k)).add(s.pairs[k].E).add(s.pairs[k].residual);
    if (const auto& b = jobs[i].bargmann) {
      barg.row().add(js[i]).add(b->channel.m).add(static_cast<long long>(b->N_numeric.value_or(-1)));
      barg.add(b->bound).add(b->ratio()).add(b->R_j).add(b->C).add(b->majorant);
      if (b->ratio() > 0.0) {
        lx.push_back(std::log(std::fabs(b->channel.m)));
        ly.push_back(std::log(b->ratio()));
      }
    } else if (!jobs[i].bargmann_error.empty()) {
      res.warnings.push_back("bargmann j = " + std::to_string(js[i]) + ": " + jobs[i].bargmann_error);
    }
  }
  const std::vector<std::string> notes{"R_max: " + fmt(grid.R_max()) + ", n: " + std::to_string(grid.n),
                                       "window: [" + fmt(c.window.lo) + ", " + fmt(c.window.hi) + "]"};
  res.outputs.push_back(eig.write(ctx, "spectrum", "eigenvalues.csv", notes));
  res.outputs.push_back(barg.write(ctx, "spectrum", "bargmann.csv",
                                   {"E: " + fmt(E), "eps: " + fmt(eps)}));
  const double slope = ls_slope(lx, ly);
  json doc{{"channels", js.size()},
           {"eigenpairs", eig.rows()},
           {"wall_modes_dropped", walls},
           {"R_max", grid.R_max()},
           {"n", grid.n},
           {"bargmann_E", E},
           {"bargmann_eps", eps},
           {"ratio_loglog_slope", num(slope)},
           {"regime", std::string(fields::to_string(rep.regime))}};
  res.outputs.push_back(detail::write_json(ctx, "spectrum_summary.json", doc.dump()));
  if (walls) res.warnings.push_back(std::to_string(walls) + " box wall modes dropped");
  res.summary = std::to_string(eig.rows()) + " eigenpairs in " + std::to_string(js.size()) +
                " channels, ratio log-log slope " + fmt(slope);
  return res;
}

CommandResult cmd_localize(const RunContext& ctx) {
  const auto& c = ctx.config;
  const auto prof = build_profile(c.profile);
  const auto rep = probe(c, prof);
  const auto grid = resolve_grid(c, prof, c.J_max);

  dynamics::DecaySpec decay{dynamics::parse_decay_model(c.decay), c.decay_q, c.decay_s};
  const auto wp = dynamics::build_wavepacket(dynamics::gaussian_shell(c.shape_center, c.shape_width),
                                             decay, c.kappa, c.J_max, grid);
  const auto times = dynamics::log_times(c.t0, c.t1, c.per_decade);

  // Per-channel jobs keep only the reduced dynamics; eigenvectors are freed
  // inside the job.
  std::vector<std::optional<dynamics::ChannelDynamics>> dyn(wp.channels.size());
  std::vector<int> walls(wp.channels.size(), 0);
  parallel_for(wp.channels.size(), ctx.jobs, [&](std::size_t i) {
    const auto& st = wp.channels[i];
    with_channel(st.channel.j, [&] {
      const auto op = operators::assemble_channel_matrix(prof, st.channel, grid);
      const auto set = spectral::eigs_in_window(op, c.window);
      walls[i] = set.wall_modes_dropped;
      dyn[i].emplace(st, set, op.radii(), c.kappa);
      return 0;
    });
  });
  std::vector<dynamics::ChannelDynamics> chans;
  double projected = 0.0;
  for (auto& d : dyn) {
    projected += d->projected_norm_sq();
    chans.push_back(std::move(*d));
  }
  if (!(projected > 0.0))
    throw NumericalError("wave packet has no weight in the window [" + fmt(c.window.lo) + ", " +
                         fmt(c.window.hi) + "]");

  auto ms = dynamics::moment_series(chans, times, c.kappa);
  ms.window = c.window;
  double tail = dynamics::tail_bound(wp, c.delta0);
  if (c.normalize_projected) {
    // Renormalise the windowed packet to unit norm; the tail, a bound for the
    // unprojected packet, is scaled alike.
    const double s = 1.0 / projected;
    for (auto& [j, col] : ms.per_channel)
      for (double& x : col) x *= s;
    for (double& x : ms.total) x *= s;
    for (double& x : ms.norm) x *= s;
    dynamics::fit_exponent(ms);
    tail *= s;
  }
  ms.tail_bound = tail;

  std::vector<std::string> cols{"t", "M_total", "norm", "time_average"};
  for (const auto& [j, col] : ms.per_channel) cols.push_back("M_j" + std::to_string(j));
  CsvTable tab(cols);
  for (std::size_t i = 0; i < ms.times.size(); ++i) {
    tab.row().add(ms.times[i]).add(ms.total[i]).add(ms.norm[i]).add(ms.time_average[i]);
    for (const auto& [j, col] : ms.per_channel) tab.add(col[i]);
  }

  CommandResult res;
  res.outputs.push_back(tab.write(ctx, "localize", "moments.csv",
                                  {"kappa: " + fmt(c.kappa), "R_max: " + fmt(grid.R_max()) +
                                                                 ", n: " + std::to_string(grid.n)}));
  double norm_drift = 0.0;
  for (double x : ms.norm) norm_drift = std::max(norm_drift, std::fabs(x - ms.norm.front()));
  int wall_total = 0;
  for (int w : walls) wall_total += w;
  const auto bulk0 = ms.total.front();
  json doc{{"kappa", c.kappa},
           {"window", {c.window.lo, c.window.hi}},
           {"J_max", c.J_max},
           {"decay", c.decay},
           {"projected_norm_sq", projected},
           {"normalized", c.normalize_projected},
           {"bulk_moment_t0", bulk0},
           {"tail_bound", num(tail)},
           {"fitted_exponent", ms.fitted_exponent},
           {"fit_T", {ms.fit_T_lo, ms.fit_T_hi}},
           {"max_early", ms.max_early},
           {"max_overall", ms.max_overall},
           {"sup_proxy", ms.sup_proxy},
           {"sup_proxy_note", "finite-horizon stand-in for sup over t >= 0"},
           {"localized_threshold", 0.3},
           {"ballistic_threshold", 1.5},
           {"norm_drift", norm_drift},
           {"wall_modes_dropped", wall_total},
           {"R_max", grid.R_max()},
           {"h", grid.h},
           {"n", grid.n},
           {"regime", std::string(fields::to_string(rep.regime))}};
  res.outputs.push_back(detail::write_json(ctx, "summary.json", doc.dump()));
  if (rep.regime == fields::Regime::indeterminate)
    res.warnings.push_back("hypothesis probe is indeterminate for this profile");
  if (projected < 0.5)
    res.warnings.push_back("window captures only " + fmt(projected) + " of the packet norm");
  res.summary = "exponent=" + fmt(ms.fitted_exponent) + " sup_proxy=" + (ms.sup_proxy ? "true" : "false") +
                " tail_bound=" + fmt(tail);
  return res;
}

CommandResult cmd_agmon(const RunContext& ctx) {
  const auto& c = ctx.config;
  const auto prof = build_profile(c.profile);
  const auto js = channel_list(c);
  const auto grid = resolve_grid(c, prof, max_abs_j(js));

  std::vector<spectral::AgmonReport> reps(js.size());
  parallel_for(js.size(), ctx.jobs, [&](std::size_t i) {
    with_channel(js[i], [&] {
      const auto ch = operators::Channel::of(js[i]);
      const auto op = operators::assemble_channel_matrix(prof, ch, grid);
      const auto set = spectral::eigs_in_window(op, c.window);
      reps[i] = spectral::agmon_check(prof, op, set, c.gamma, c.delta0, {c.allow_small_grid});
      return 0;
    });
  });

  CommandResult res;
  CsvTable tab({"j", "m", "k", "E", "gamma", "lhs", "rhs_scale", "ratio", "log_ratio", "decay_slope",
                "r_j", "flag"});
  std::vector<double> xj, ymax;
  for (std::size_t i = 0; i < js.size(); ++i) {
    const auto& r = reps[i];
    const std::string flag = r.small_grid ? "small_grid" : (r.unreliable ? "unreliable" : "ok");
    if (r.small_grid || r.unreliable)
      res.warnings.push_back("j = " + std::to_string(js[i]) + ": R_max " + fmt(r.R_max) +
                             " below 6 r_j = " + fmt(6.0 * r.r_j) + " (" + flag + ")");
    for (const auto& e : r.entries) {
      tab.row().add(js[i]).add(r.channel.m).add(e.k).add(e.E).add(e.gamma).add(e.lhs);
      tab.add(e.rhs_scale).add(e.ratio).add(e.log_ratio).add(e.decay_slope).add(r.r_j).add(flag);
    }
    if (!r.entries.empty() && !r.unreliable && std::isfinite(r.max_log_ratio)) {
      xj.push_back(js[i]);
      ymax.push_back(r.max_log_ratio);
    }
  }
  res.outputs.push_back(tab.write(ctx, "agmon", "agmon.csv",
                                  {"gamma: " + fmt(c.gamma) + ", delta0: " + fmt(c.delta0),
                                   "R_max: " + fmt(grid.R_max()) + ", n: " + std::to_string(grid.n)}));
  const double trend = ls_slope(xj, ymax);
  json doc{{"gamma", c.gamma},
           {"delta0", c.delta0},
           {"rows", tab.rows()},
           {"reliable_channels", xj.size()},
           {"max_log_ratio_trend", num(trend)},
           {"no_growth", !(trend > 0.0)},
           {"R_max", grid.R_max()},
           {"n", grid.n}};
  res.outputs.push_back(detail::write_json(ctx, "agmon_summary.json", doc.dump()));
  res.summary = std::to_string(tab.rows()) + " rows, log max-ratio trend in j " + fmt(trend);
  return res;
}

CommandResult cmd_selftest(const RunContext& ctx) {
  CommandResult res;
  json checks = json::array();
  auto record = [&](const std::string& name, bool ok, const std::string& detail) {
    checks.push_back({{"check", name}, {"pass", ok}, {"detail", detail}});
    if (!ok) {
      res.exit_code = 1;
      res.warnings.push_back(name + ": " + detail);
    }
  };

  // Manifest cross-references.
  const auto mpath = ctx.out_dir / "manifest.json";
  if (std::ifstream in(mpath); in) {
    json man = json::parse(in, nullptr, false);
    if (man.is_discarded() || !man.is_object()) {
      record("manifest", false, "manifest.json is not valid JSON");
    } else {
      const std::string h = man.value("config_hash", "");
      int files = 0;
      for (auto& [cmd, entry] : man["commands"].items()) {
        for (const auto& f : entry["outputs"]) {
          const auto p = ctx.out_dir / f.get<std::string>();
          ++files;
          if (!std::filesystem::exists(p))
            record("manifest", false, p.filename().string() + " listed by " + cmd + " is missing");
          else if (detail::recorded_hash(p) != h)
            record("manifest", false, p.filename().string() + " does not carry the manifest hash");
        }
      }
      record("manifest", res.exit_code == 0, std::to_string(files) + " outputs checked");
    }
  } else {
    checks.push_back({{"check", "manifest"}, {"pass", true}, {"detail", "no manifest yet"}});
  }

  // SIMD kernels against the scalar reference.
  {
    std::vector<double> a(1001), b(1001), w(1001);
    for (std::size_t i = 0; i < a.size(); ++i) {
      a[i] = std::sin(0.37 * i);
      b[i] = std::cos(0.11 * i) - 0.5;
      w[i] = 1.0 + 0.01 * i;
    }
    const auto& ref = simd::detail::scalar_table();
    const auto& act = simd::active();
    const double d1 = std::fabs(ref.dot(a.data(), b.data(), a.size()) - act.dot(a.data(), b.data(), a.size()));
    const double d2 = std::fabs(ref.weighted_dot(w.data(), a.data(), b.data(), a.size()) -
                                act.weighted_dot(w.data(), a.data(), b.data(), a.size()));
    record("simd", d1 <= 1e-12 && d2 <= 1e-10,
           std::string(simd::to_string(act.isa)) + " dot diff " + fmt(d1) + ", weighted " + fmt(d2));
  }

  // Lowest Landau levels in a small box.
  {
    const double p[] = {1.0, 0.0};
    const auto prof = fields::make_profile(fields::Family::constant_B, p);
    const auto op = operators::assemble_channel_matrix(prof, operators::Channel::of(0),
                                                       operators::RadialGrid{0.01, 1500});
    const auto set = spectral::eigs_in_window(op, {-0.1, 2.1});
    const double want[] = {0.0, std::sqrt(2.0), 2.0};
    bool ok = set.N() == 3;
    double err = 0.0;
    for (std::size_t k = 0; ok && k < 3; ++k) err = std::max(err, std::fabs(set.pairs[k].E - want[k]));
    ok = ok && err < 1e-2;
    record("landau", ok, std::to_string(set.N()) + " levels, max error " + fmt(err));
  }

  res.outputs.push_back(detail::write_json(ctx, "selftest.json", json{{"checks", checks}}.dump()));
  res.summary = res.exit_code == 0 ? "all checks passed" : "selftest failed";
  return res;
}

}  // namespace diracloc::runner
