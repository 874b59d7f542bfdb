#include "runner/output.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <json.hpp>
#include <sstream>
#include <thread>

#include "diracloc/error.hpp"

namespace diracloc::runner {

using json = nlohmann::json;

namespace detail {

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

CsvTable& CsvTable::row() {
  if (n_rows_ && n_cells_ != columns_.size())
    throw Error("csv row has " + std::to_string(n_cells_) + " cells, expected " +
                std::to_string(columns_.size()));
  if (n_rows_) body_ += '\n';
  ++n_rows_;
  n_cells_ = 0;
  return *this;
}

void CsvTable::sep() {
  if (n_cells_++) body_ += ',';
}

CsvTable& CsvTable::add(double x) {
  sep();
  body_ += format_double(x);
  return *this;
}

CsvTable& CsvTable::add(long long x) {
  sep();
  body_ += std::to_string(x);
  return *this;
}

CsvTable& CsvTable::add(const std::string& s) {
  sep();
  body_ += s;
  return *this;
}

std::string CsvTable::write(const RunContext& ctx, const std::string& command,
                            const std::string& name, const std::vector<std::string>& notes) const {
  if (n_rows_ && n_cells_ != columns_.size()) throw Error("csv: incomplete last row in " + name);
  std::ofstream out(ctx.out_dir / name, std::ios::binary);
  if (!out) throw Error("cannot write " + (ctx.out_dir / name).string());
  out << "# diracloc " << DIRACLOC_VERSION << '\n';
  out << "# command: " << command << '\n';
  out << "# config_hash: " << ctx.hash << '\n';
  for (const auto& n : notes) out << "# " << n << '\n';
  for (std::size_t i = 0; i < columns_.size(); ++i) out << (i ? "," : "") << columns_[i];
  out << '\n';
  if (n_rows_) out << body_ << '\n';
  if (!out) throw Error("write failed for " + name);
  return name;
}

std::string write_json(const RunContext& ctx, const std::string& name, const std::string& text) {
  json doc = json::parse(text);
  doc["config_hash"] = ctx.hash;
  std::ofstream out(ctx.out_dir / name, std::ios::binary);
  if (!out) throw Error("cannot write " + (ctx.out_dir / name).string());
  out << doc.dump(2) << '\n';
  return name;
}

std::string recorded_hash(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) return {};
  if (file.extension() == ".json") {
    json doc = json::parse(in, nullptr, false);
    if (doc.is_discarded() || !doc.is_object() || !doc.contains("config_hash") ||
        !doc["config_hash"].is_string())
      return {};
    return doc["config_hash"].get<std::string>();
  }
  std::string line;
  const std::string key = "# config_hash: ";
  while (std::getline(in, line) && !line.empty() && line[0] == '#')
    if (line.rfind(key, 0) == 0) return line.substr(key.size());
  return {};
}

}  // namespace detail

void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn) {
  if (n == 0) return;
  std::size_t workers = jobs > 0 ? static_cast<std::size_t>(jobs)
                                 : std::max(1u, std::thread::hardware_concurrency());
  workers = std::min(workers, n);
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < n;) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  if (workers == 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

void update_manifest(const RunContext& ctx, const std::string& command,
                     const CommandResult& result, double wall_seconds) {
  const auto path = ctx.out_dir / "manifest.json";
  json doc;
  if (std::ifstream in(path); in) {
    doc = json::parse(in, nullptr, false);
    if (doc.is_discarded() || !doc.is_object() || doc.value("config_hash", "") != ctx.hash)
      doc = json();
  }
  if (doc.is_null()) {
    doc = json::object();
    doc["config_hash"] = ctx.hash;
    doc["version"] = DIRACLOC_VERSION;
    doc["config"] = json::parse(to_json(ctx.config, false));
    doc["commands"] = json::object();
  }
  doc["commands"][command] = {{"outputs", result.outputs},
                              {"warnings", result.warnings},
                              {"exit_code", result.exit_code},
                              {"summary", result.summary},
                              {"wall_seconds", wall_seconds},
                              {"jobs", ctx.jobs}};
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << doc.dump(2) << '\n';
}

}  // namespace diracloc::runner
