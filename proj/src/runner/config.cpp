#include <openssl/evp.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <json.hpp>
#include <set>
#include <sstream>
#include <thread>

#include "diracloc/error.hpp"
#include "diracloc/runner.hpp"

namespace diracloc::runner {

using json = nlohmann::json;

namespace {

// Typed access to one JSON object with field-path diagnostics and a check
// that every key was consumed.
class Reader {
 public:
  Reader(const json& obj, std::string path) : obj_(obj), path_(std::move(path)) {
    if (!obj_.is_object()) throw ConfigError(path_.empty() ? "<root>" : path_, "expected an object");
  }

  std::string field(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  const json* find(const std::string& key) {
    auto it = obj_.find(key);
    if (it == obj_.end()) return nullptr;
    used_.insert(key);
    return &*it;
  }

  double number(const std::string& key, double def) {
    const json* v = find(key);
    if (!v) return def;
    return as_number(*v, field(key));
  }
  std::optional<double> opt_number(const std::string& key) {
    const json* v = find(key);
    if (!v || v->is_null()) return std::nullopt;
    return as_number(*v, field(key));
  }
  int integer(const std::string& key, int def) {
    const json* v = find(key);
    if (!v) return def;
    if (!v->is_number_integer()) throw ConfigError(field(key), "expected an integer");
    return v->get<int>();
  }
  bool boolean(const std::string& key, bool def) {
    const json* v = find(key);
    if (!v) return def;
    if (!v->is_boolean()) throw ConfigError(field(key), "expected true or false");
    return v->get<bool>();
  }
  std::string string(const std::string& key, const std::string& def) {
    const json* v = find(key);
    if (!v) return def;
    if (!v->is_string()) throw ConfigError(field(key), "expected a string");
    return v->get<std::string>();
  }
  std::vector<double> numbers(const std::string& key, std::vector<double> def) {
    const json* v = find(key);
    if (!v) return def;
    if (!v->is_array()) throw ConfigError(field(key), "expected an array of numbers");
    std::vector<double> out;
    for (std::size_t i = 0; i < v->size(); ++i)
      out.push_back(as_number((*v)[i], field(key) + "[" + std::to_string(i) + "]"));
    return out;
  }

  void finish() const {
    for (auto it = obj_.begin(); it != obj_.end(); ++it)
      if (!used_.count(it.key())) throw ConfigError(field(it.key()), "unknown key");
  }

  static double as_number(const json& v, const std::string& f) {
    if (!v.is_number()) throw ConfigError(f, "expected a number");
    const double x = v.get<double>();
    if (!std::isfinite(x)) throw ConfigError(f, "must be finite");
    return x;
  }

 private:
  const json& obj_;
  std::string path_;
  std::set<std::string> used_;
};

ProfileSpec read_profile(const json& j, const std::string& path) {
  Reader rd(j, path);
  ProfileSpec p;
  p.family = rd.string("family", p.family);
  p.params = rd.numbers("params", p.family == "linear" ? p.params : std::vector<double>{});
  if (const json* t = rd.find("table")) {
    Reader tr(*t, rd.field("table"));
    p.r = tr.numbers("r", {});
    p.A = tr.numbers("A", {});
    p.B = tr.numbers("B", {});
    p.V = tr.numbers("V", {});
    tr.finish();
  }
  if (const json* parts = rd.find("parts")) {
    if (!parts->is_array()) throw ConfigError(rd.field("parts"), "expected an array of profiles");
    for (std::size_t i = 0; i < parts->size(); ++i)
      p.parts.push_back(read_profile((*parts)[i], rd.field("parts") + "[" + std::to_string(i) + "]"));
  }
  rd.finish();
  try {
    (void)fields::parse_family(p.family);
  } catch (const PreconditionError& e) {
    throw ConfigError(rd.field("family"), e.what());
  }
  return p;
}

json profile_json(const ProfileSpec& p) {
  json j;
  j["family"] = p.family;
  j["params"] = p.params;
  if (!p.r.empty()) {
    json t;
    t["r"] = p.r;
    if (!p.A.empty()) t["A"] = p.A;
    if (!p.B.empty()) t["B"] = p.B;
    if (!p.V.empty()) t["V"] = p.V;
    j["table"] = t;
  }
  if (!p.parts.empty()) {
    j["parts"] = json::array();
    for (const auto& q : p.parts) j["parts"].push_back(profile_json(q));
  }
  return j;
}

void validate(const RunConfig& c) {
  if (c.j_step < 1) throw ConfigError("channels.step", "must be >= 1");
  if (c.j_min > c.j_max) throw ConfigError("channels", "empty channel range (j_min > j_max)");
  if (!c.grid.automatic) {
    if (!(c.grid.R_max > 0.0)) throw ConfigError("grid.R_max", "must be > 0");
    if (c.grid.n < 2 && !(c.grid.h > 0.0)) throw ConfigError("grid", "give n >= 2 or h > 0");
  }
  if (!(c.window.lo <= c.window.hi)) throw ConfigError("window", "needs lo <= hi");
  if (!(c.kappa >= 0.0)) throw ConfigError("kappa", "must be >= 0");
  if (!(c.delta0 > 0.0 && c.delta0 < 1.0)) throw ConfigError("delta0", "must lie in (0, 1)");
  if (!(c.gamma >= 0.0 && c.gamma < 1.0)) throw ConfigError("gamma", "must lie in [0, 1)");
  if (c.bargmann_eps && !(*c.bargmann_eps > 0.0 && *c.bargmann_eps < 1.0))
    throw ConfigError("bargmann.eps", "must lie in (0, 1)");
  if (c.bargmann_E && !(*c.bargmann_E > 0.0)) throw ConfigError("bargmann.E", "must be > 0");
  if (!(c.t0 > 0.0 && c.t1 > c.t0)) throw ConfigError("times", "needs 0 < t0 < t1");
  if (c.per_decade < 1) throw ConfigError("times.per_decade", "must be >= 1");
  if (c.J_max < 0) throw ConfigError("wavepacket.J_max", "must be >= 0");
  if (!(c.shape_width > 0.0)) throw ConfigError("wavepacket.width", "must be > 0");
  if (c.decay != "geometric" && c.decay != "power" && c.decay != "compact")
    throw ConfigError("wavepacket.decay", "expected geometric, power or compact");
  if (c.decay == "geometric" && !(c.decay_q > 0.0 && c.decay_q < 1.0))
    throw ConfigError("wavepacket.q", "must lie in (0, 1)");
  if (c.decay == "power" && !(c.decay_s > c.kappa + 1.0))
    throw ConfigError("wavepacket.s", "must exceed kappa + 1");
  if (!(c.verify_R_start > 0.0 && c.verify_R_end > c.verify_R_start))
    throw ConfigError("verify", "needs 0 < R_start < R_end");
  if (c.verify_probes < 8) throw ConfigError("verify.n_probes", "must be >= 8");
  if (!(c.margin >= 0.0 && c.margin < 1.0)) throw ConfigError("verify.margin", "must lie in [0, 1)");
}

}  // namespace

RunConfig parse_config(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    // Translate the byte offset into line and column.
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i + 1 < e.byte && i < text.size(); ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    throw ConfigError("<syntax>", "line " + std::to_string(line) + ", column " +
                                      std::to_string(col) + ": " + e.what());
  }

  RunConfig c;
  Reader rd(root, "");
  if (const json* p = rd.find("profile")) c.profile = read_profile(*p, "profile");
  if (const json* ch = rd.find("channels")) {
    Reader r(*ch, "channels");
    c.j_min = r.integer("j_min", c.j_min);
    c.j_max = r.integer("j_max", c.j_max);
    c.j_step = r.integer("step", c.j_step);
    r.finish();
  }
  if (const json* g = rd.find("grid")) {
    if (g->is_string()) {
      if (g->get<std::string>() != "auto") throw ConfigError("grid", "expected \"auto\" or an object");
      c.grid.automatic = true;
    } else {
      Reader r(*g, "grid");
      c.grid.automatic = false;
      c.grid.R_max = r.number("R_max", 0.0);
      c.grid.n = r.integer("n", 0);
      c.grid.h = r.number("h", 0.0);
      r.finish();
    }
  }
  if (rd.find("window")) {
    const auto w = rd.numbers("window", {});
    if (w.size() != 2) throw ConfigError("window", "expected [lo, hi]");
    c.window = {w[0], w[1]};
  }
  c.kappa = rd.number("kappa", c.kappa);
  c.delta0 = rd.number("delta0", c.delta0);
  c.gamma = rd.number("gamma", c.gamma);
  if (const json* b = rd.find("bargmann")) {
    Reader r(*b, "bargmann");
    c.bargmann_eps = r.opt_number("eps");
    c.bargmann_E = r.opt_number("E");
    r.finish();
  }
  if (const json* t = rd.find("times")) {
    Reader r(*t, "times");
    c.t0 = r.number("t0", c.t0);
    c.t1 = r.number("t1", c.t1);
    c.per_decade = r.integer("per_decade", c.per_decade);
    r.finish();
  }
  if (const json* w = rd.find("wavepacket")) {
    Reader r(*w, "wavepacket");
    c.decay = r.string("decay", c.decay);
    c.decay_q = r.number("q", c.decay_q);
    c.decay_s = r.number("s", c.decay_s);
    c.J_max = r.integer("J_max", c.J_max);
    c.shape_center = r.number("center", c.shape_center);
    c.shape_width = r.number("width", c.shape_width);
    c.normalize_projected = r.boolean("normalize_projected", c.normalize_projected);
    r.finish();
  }
  if (const json* v = rd.find("verify")) {
    Reader r(*v, "verify");
    c.verify_R_start = r.number("R_start", c.verify_R_start);
    c.verify_R_end = r.number("R_end", c.verify_R_end);
    c.verify_probes = r.integer("n_probes", c.verify_probes);
    c.margin = r.number("margin", c.margin);
    const std::string reg = r.string("expected_regime", "localized");
    if (reg == "any") {
      c.expected_regime.reset();
    } else {
      try {
        c.expected_regime = fields::parse_regime(reg);
      } catch (const PreconditionError& e) {
        throw ConfigError("verify.expected_regime", e.what());
      }
    }
    r.finish();
  }
  c.allow_small_grid = rd.boolean("allow_small_grid", c.allow_small_grid);
  if (const json* s = rd.find("seed")) {
    if (!s->is_number_unsigned() && !(s->is_number_integer() && s->get<long long>() >= 0))
      throw ConfigError("seed", "expected a nonnegative integer");
    c.seed = s->get<std::uint64_t>();
  }
  c.output_dir = rd.string("output_dir", c.output_dir);
  c.jobs = rd.integer("jobs", c.jobs);
  rd.finish();
  validate(c);
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("--config", "cannot read '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string to_json(const RunConfig& c, bool include_run_fields) {
  json j;
  j["profile"] = profile_json(c.profile);
  j["channels"] = {{"j_min", c.j_min}, {"j_max", c.j_max}, {"step", c.j_step}};
  if (c.grid.automatic) {
    j["grid"] = "auto";
  } else {
    json g{{"R_max", c.grid.R_max}};
    if (c.grid.n > 0) g["n"] = c.grid.n;
    if (c.grid.h > 0.0) g["h"] = c.grid.h;
    j["grid"] = g;
  }
  j["window"] = {c.window.lo, c.window.hi};
  j["kappa"] = c.kappa;
  j["delta0"] = c.delta0;
  j["gamma"] = c.gamma;
  json b = json::object();
  b["eps"] = c.bargmann_eps ? json(*c.bargmann_eps) : json(nullptr);
  b["E"] = c.bargmann_E ? json(*c.bargmann_E) : json(nullptr);
  j["bargmann"] = b;
  j["times"] = {{"t0", c.t0}, {"t1", c.t1}, {"per_decade", c.per_decade}};
  j["wavepacket"] = {{"decay", c.decay},       {"q", c.decay_q},
                     {"s", c.decay_s},         {"J_max", c.J_max},
                     {"center", c.shape_center}, {"width", c.shape_width},
                     {"normalize_projected", c.normalize_projected}};
  json v{{"R_start", c.verify_R_start},
         {"R_end", c.verify_R_end},
         {"n_probes", c.verify_probes},
         {"margin", c.margin}};
  v["expected_regime"] =
      c.expected_regime ? std::string(fields::to_string(*c.expected_regime)) : std::string("any");
  j["verify"] = v;
  j["allow_small_grid"] = c.allow_small_grid;
  j["seed"] = c.seed;
  if (include_run_fields) {
    j["output_dir"] = c.output_dir;
    j["jobs"] = c.jobs;
  }
  return j.dump(2);
}

std::string apply_overrides(const std::string& text, const std::vector<std::string>& kv) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error&) {
    // Let parse_config report the syntax error with its position.
    return text;
  }
  for (const auto& item : kv) {
    const auto eq = item.find('=');
    if (eq == std::string::npos || eq == 0)
      throw ConfigError("--override", "expected key=value, got '" + item + "'");
    const std::string key = item.substr(0, eq);
    const std::string raw = item.substr(eq + 1);
    json value = json::parse(raw, nullptr, false);
    if (value.is_discarded()) value = raw;
    json* node = &root;
    std::stringstream ks(key);
    std::string part;
    std::vector<std::string> parts;
    while (std::getline(ks, part, '.')) parts.push_back(part);
    for (std::size_t i = 0; i < parts.size(); ++i) {
      if (parts[i].empty()) throw ConfigError(key, "empty path component");
      if (node->is_null()) *node = json::object();
      if (!node->is_object()) {
        if (node->is_string() && i > 0) *node = json::object();  // e.g. grid "auto" -> object
        else throw ConfigError(key, "cannot descend into a non-object");
      }
      if (i + 1 == parts.size())
        (*node)[parts[i]] = value;
      else
        node = &(*node)[parts[i]];
    }
  }
  return root.dump(2);
}

std::string config_hash(const RunConfig& cfg) {
  const std::string canon = json::parse(to_json(cfg, false)).dump();
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_Digest(canon.data(), canon.size(), md, &len, EVP_sha256(), nullptr);
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[md[i] >> 4];
    out += hex[md[i] & 15];
  }
  return out;
}

fields::FieldProfile build_profile(const ProfileSpec& spec) {
  try {
    const auto fam = fields::parse_family(spec.family);
    if (fam == fields::Family::tabulated) {
      if (!spec.params.empty()) throw PreconditionError("tabulated profiles take no params");
      return fields::make_tabulated({spec.r, spec.A, spec.B, spec.V});
    }
    if (fam == fields::Family::composite) {
      std::vector<fields::FieldProfile> parts;
      for (const auto& p : spec.parts) parts.push_back(build_profile(p));
      return fields::make_composite(std::move(parts));
    }
    if (fam == fields::Family::custom)
      throw PreconditionError("custom profiles cannot be given in a config file");
    return fields::make_profile(fam, spec.params);
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError("profile", e.what());
  }
}

operators::RadialGrid resolve_grid(const RunConfig& cfg, const fields::FieldProfile& profile,
                                   int j_abs_max) {
  if (cfg.grid.automatic) return operators::RadialGrid::automatic(profile, j_abs_max, cfg.delta0);
  if (cfg.grid.n >= 2) return operators::RadialGrid{cfg.grid.R_max / cfg.grid.n, cfg.grid.n};
  return operators::RadialGrid::covering(cfg.grid.R_max, cfg.grid.h);
}

std::vector<int> channel_list(const RunConfig& cfg) {
  std::vector<int> out;
  for (int j = cfg.j_min; j <= cfg.j_max; j += cfg.j_step) out.push_back(j);
  if (out.empty()) throw ConfigError("channels", "empty channel range");
  return out;
}

int resolve_jobs(std::optional<int> cli_jobs, const RunConfig& cfg) {
  if (cli_jobs && *cli_jobs > 0) return *cli_jobs;
  if (const char* env = std::getenv("DIRACLOC_JOBS")) {
    const int v = std::atoi(env);
    if (v > 0) return v;
  }
  if (cfg.jobs > 0) return cfg.jobs;
  return std::max(1u, std::thread::hardware_concurrency());
}

}  // namespace diracloc::runner
