#pragma once

#include <cctype>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <map>
#include <numbers>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "lgqfi/models.hpp"
#include "lgqfi/report.hpp"

namespace lgqfi {

/// User or configuration error. The CLI maps it to exit code 1.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Maps JSON pointers of a document to the line where each value starts, so
/// validation errors can point at the offending line. Assumes the text has
/// already been accepted by a real parser.
class LineMap {
 public:
  LineMap() = default;
  explicit LineMap(std::string_view text) {
    struct Frame {
      bool array;
      std::string key;
      int index = 0;
    };
    std::vector<Frame> stack;
    bool expect_key = false;
    int line = 1;

    auto pointer = [&] {
      std::string p;
      for (const auto& f : stack) p += "/" + (f.array ? std::to_string(f.index) : escape(f.key));
      return p;
    };
    auto value_start = [&] { lines_.emplace(pointer(), line); };

    for (std::size_t i = 0; i < text.size(); ++i) {
      const char c = text[i];
      if (c == '\n') {
        ++line;
      } else if (c == '"') {
        std::string s;
        for (++i; i < text.size() && text[i] != '"'; ++i) {
          if (text[i] == '\\' && i + 1 < text.size()) ++i;
          s += text[i];
        }
        if (expect_key) {
          stack.back().key = s;
          expect_key = false;
        } else {
          value_start();
        }
      } else if (c == '{' || c == '[') {
        value_start();
        stack.push_back({c == '[', {}, 0});
        expect_key = c == '{';
      } else if (c == '}' || c == ']') {
        if (!stack.empty()) stack.pop_back();
        expect_key = false;
      } else if (c == ',') {
        if (!stack.empty() && stack.back().array) ++stack.back().index;
        expect_key = !stack.empty() && !stack.back().array;
      } else if (c == ':' || std::isspace(static_cast<unsigned char>(c))) {
      } else {
        value_start();
        while (i + 1 < text.size() && std::string_view(",}] \t\r\n").find(text[i + 1]) == std::string_view::npos) ++i;
      }
    }
  }

  /// Line of the value at `ptr`, or of its closest recorded ancestor.
  int line_of(std::string ptr) const {
    for (;;) {
      if (auto it = lines_.find(ptr); it != lines_.end()) return it->second;
      if (ptr.empty()) return 1;
      ptr.erase(ptr.rfind('/'));
    }
  }

  static std::string escape(const std::string& key) {
    std::string out;
    for (char c : key) {
      if (c == '~') out += "~0";
      else if (c == '/') out += "~1";
      else out += c;
    }
    return out;
  }

 private:
  std::map<std::string, int> lines_;
};

struct ModelSpec {
  std::string kind = "qubit";  // qubit | tfim | ghz | ghz_effective | custom
  double epsilon = 1.0;
  double theta = std::numbers::pi / 2;
  TfimParams tfim;
  GhzParams ghz;
  std::string observable = "default";  // default | site | collective
  std::string path;                    // custom model file
};

struct StateSpec {
  enum class Kind { thermal, pure, ghz_plus };
  Kind kind = Kind::thermal;
  double beta = kInfiniteBeta;
  int index = 0;
};

struct ProtocolSpec {
  std::uint64_t shots = 100000;
  std::vector<double> weak_dx;
  double lambda = 1.0;
  std::uint64_t seed = 1;
};

struct RunConfig {
  ModelSpec model;
  StateSpec state;
  std::vector<double> tau_grid;
  BoundOptions bounds;
  bool bounds_enabled = true;
  std::optional<ProtocolSpec> protocol;
  std::optional<std::string> output_path;
  std::optional<std::string> format;
  std::string source = "<config>";
  nlohmann::json document;  // as read, for hashing
  LineMap lines;

  [[noreturn]] void fail(const std::string& ptr, const std::string& msg) const {
    throw ConfigError(source + ":" + std::to_string(lines.line_of(ptr)) + ": " + (ptr.empty() ? "/" : ptr) + ": " +
                      msg);
  }
};

namespace detail {

class ConfigReader {
 public:
  ConfigReader(const nlohmann::json& doc, const LineMap& lines, std::string source)
      : doc_(doc), lines_(lines), source_(std::move(source)) {}

  [[noreturn]] void fail(const std::string& ptr, const std::string& msg) const {
    throw ConfigError(source_ + ":" + std::to_string(lines_.line_of(ptr)) + ": " + (ptr.empty() ? "/" : ptr) + ": " +
                      msg);
  }

  const nlohmann::json& at(const std::string& ptr) const { return doc_.at(nlohmann::json::json_pointer(ptr)); }

  bool has(const std::string& ptr) const { return doc_.contains(nlohmann::json::json_pointer(ptr)); }

  void require_object(const std::string& ptr, std::initializer_list<const char*> allowed) const {
    const auto& j = at(ptr);
    if (!j.is_object()) fail(ptr, "expected an object");
    for (const auto& [key, value] : j.items()) {
      if (!key.empty() && key[0] == '_') continue;  // annotations
      bool ok = false;
      for (const char* a : allowed) ok = ok || key == a;
      if (!ok) fail(ptr + "/" + LineMap::escape(key), "unknown field '" + key + "'");
    }
  }

  double number(const std::string& ptr) const {
    const auto& j = at(ptr);
    if (j.is_string() && (j == "inf" || j == "infinity")) return std::numeric_limits<double>::infinity();
    if (!j.is_number()) fail(ptr, "expected a number");
    return j.get<double>();
  }

  long long integer(const std::string& ptr) const {
    const auto& j = at(ptr);
    if (!j.is_number_integer()) fail(ptr, "expected an integer");
    return j.get<long long>();
  }

  std::uint64_t unsigned_integer(const std::string& ptr) const {
    const auto& j = at(ptr);
    if (j.is_number_unsigned()) return j.get<std::uint64_t>();
    if (j.is_number_integer() && j.get<long long>() >= 0) return static_cast<std::uint64_t>(j.get<long long>());
    fail(ptr, "expected a non-negative integer");
  }

  bool boolean(const std::string& ptr) const {
    const auto& j = at(ptr);
    if (!j.is_boolean()) fail(ptr, "expected true or false");
    return j.get<bool>();
  }

  std::string string(const std::string& ptr) const {
    const auto& j = at(ptr);
    if (!j.is_string()) fail(ptr, "expected a string");
    return j.get<std::string>();
  }

  std::vector<double> numbers(const std::string& ptr) const {
    const auto& j = at(ptr);
    if (!j.is_array()) fail(ptr, "expected an array of numbers");
    std::vector<double> out;
    for (std::size_t i = 0; i < j.size(); ++i) out.push_back(number(ptr + "/" + std::to_string(i)));
    return out;
  }

 private:
  const nlohmann::json& doc_;
  const LineMap& lines_;
  std::string source_;
};

inline std::vector<double> read_tau_grid(const ConfigReader& r, const std::string& ptr) {
  const auto& j = r.at(ptr);
  std::vector<double> grid;
  if (j.is_object()) {
    r.require_object(ptr, {"start", "stop", "points"});
    for (const char* k : {"start", "stop", "points"})
      if (!r.has(ptr + "/" + k)) r.fail(ptr, std::string("missing field '") + k + "'");
    const double a = r.number(ptr + "/start");
    const double b = r.number(ptr + "/stop");
    const long long n = r.integer(ptr + "/points");
    if (n < 1 || n > 1000000) r.fail(ptr + "/points", "points must lie in [1, 1e6]");
    if (n == 1) {
      grid.push_back(a);
    } else {
      for (long long i = 0; i < n; ++i) grid.push_back(a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1));
    }
    if (!(a > 0)) r.fail(ptr + "/start", "tau values must be > 0");
    if (n > 1 && !(b > a)) r.fail(ptr + "/stop", "stop must exceed start");
    return grid;
  }
  grid = r.numbers(ptr);
  if (grid.empty()) r.fail(ptr, "tau_grid must not be empty");
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const std::string p = ptr + "/" + std::to_string(i);
    if (!(grid[i] > 0) || !std::isfinite(grid[i])) r.fail(p, "tau values must be finite and > 0");
    if (i > 0 && !(grid[i] > grid[i - 1])) r.fail(p, "tau values must be strictly ascending");
  }
  return grid;
}

}  // namespace detail

/// Parses and validates a RunConfig document. Errors carry "source:line: pointer: message".
inline RunConfig parse_run_config(const std::string& text, const std::string& source = "<config>") {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    const std::size_t byte = std::min<std::size_t>(e.byte, text.size());
    int line = 1;
    std::size_t col = 1;
    for (std::size_t i = 0; i + 1 < byte; ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    std::string what = e.what();
    if (auto pos = what.find("parse error"); pos != std::string::npos) what = what.substr(pos);
    throw ConfigError(source + ":" + std::to_string(line) + ":" + std::to_string(col) + ": " + what);
  }
  RunConfig cfg;
  cfg.source = source;
  cfg.document = doc;
  cfg.lines = LineMap(text);
  const detail::ConfigReader r(doc, cfg.lines, source);

  if (!doc.is_object()) r.fail("", "config must be a JSON object");
  r.require_object("", {"model", "state", "tau_grid", "bounds", "protocol", "output"});

  // model
  if (!r.has("/model")) r.fail("", "missing field 'model'");
  r.require_object("/model", {"kind", "epsilon", "theta", "n_sites", "coupling", "field", "boundary", "site", "omega",
                              "observable", "path"});
  auto& m = cfg.model;
  if (!r.has("/model/kind")) r.fail("/model", "missing field 'kind'");
  m.kind = r.string("/model/kind");
  auto num = [&](const char* key, double& dst) {
    if (r.has(std::string("/model/") + key)) dst = r.number(std::string("/model/") + key);
  };
  auto integer = [&](const char* key, int& dst) {
    if (r.has(std::string("/model/") + key)) dst = static_cast<int>(r.integer(std::string("/model/") + key));
  };
  if (r.has("/model/observable")) m.observable = r.string("/model/observable");
  if (m.observable != "default" && m.observable != "site" && m.observable != "collective")
    r.fail("/model/observable", "observable must be one of default, site, collective");

  auto reject = [&](std::initializer_list<const char*> keys) {
    for (const char* k : keys)
      if (r.has(std::string("/model/") + k))
        r.fail(std::string("/model/") + k, "field '" + std::string(k) + "' does not apply to model kind '" + m.kind + "'");
  };
  if (m.kind == "qubit") {
    reject({"n_sites", "coupling", "field", "boundary", "site", "omega", "path"});
    num("epsilon", m.epsilon);
    num("theta", m.theta);
    if (!(m.epsilon > 0)) r.fail("/model/epsilon", "epsilon must be > 0");
    if (!(m.theta >= 0 && m.theta <= std::numbers::pi)) r.fail("/model/theta", "theta must lie in [0, pi]");
    if (m.observable == "collective") r.fail("/model/observable", "qubit has no collective observable");
  } else if (m.kind == "tfim") {
    reject({"epsilon", "theta", "omega", "path"});
    integer("n_sites", m.tfim.n_sites);
    num("coupling", m.tfim.coupling);
    num("field", m.tfim.field);
    integer("site", m.tfim.site);
    if (r.has("/model/boundary")) {
      const auto b = r.string("/model/boundary");
      if (b == "open") m.tfim.boundary = Boundary::open;
      else if (b == "periodic") m.tfim.boundary = Boundary::periodic;
      else r.fail("/model/boundary", "boundary must be 'open' or 'periodic'");
    }
    if (m.tfim.n_sites < 2 || m.tfim.n_sites > 12) r.fail("/model/n_sites", "n_sites must lie in [2, 12]");
    if (!(m.tfim.coupling > 0)) r.fail("/model/coupling", "coupling must be > 0");
    if (m.tfim.field == 0 || !std::isfinite(m.tfim.field)) r.fail("/model/field", "field must be nonzero");
    if (m.tfim.site < 0 || m.tfim.site > m.tfim.n_sites) r.fail("/model/site", "site must lie in [1, n_sites]");
  } else if (m.kind == "ghz" || m.kind == "ghz_effective") {
    reject({"epsilon", "theta", "field", "boundary", "site", "path"});
    integer("n_sites", m.ghz.n_sites);
    num("coupling", m.ghz.coupling);
    num("omega", m.ghz.omega);
    const int max_n = m.kind == "ghz" ? 12 : 1 << 20;
    if (m.ghz.n_sites < 2 || m.ghz.n_sites > max_n)
      r.fail("/model/n_sites", "n_sites must lie in [2, " + std::to_string(max_n) + "]");
    if (!(m.ghz.coupling > 0)) r.fail("/model/coupling", "coupling must be > 0");
    if (!(m.ghz.omega > 0)) r.fail("/model/omega", "omega must be > 0");
    if (m.observable == "site") r.fail("/model/observable", "GHZ models use the collective observable");
  } else if (m.kind == "custom") {
    reject({"epsilon", "theta", "n_sites", "coupling", "field", "boundary", "site", "omega"});
    if (!r.has("/model/path")) r.fail("/model", "custom model needs 'path'");
    m.path = r.string("/model/path");
    if (m.observable == "collective") r.fail("/model/observable", "custom models take Q from the file");
  } else {
    r.fail("/model/kind", "unknown model kind '" + m.kind + "' (qubit, tfim, ghz, ghz_effective, custom)");
  }

  // state
  if (r.has("/state")) {
    r.require_object("/state", {"kind", "beta", "index"});
    const std::string kind = r.has("/state/kind") ? r.string("/state/kind") : "thermal";
    if (kind == "thermal") {
      if (r.has("/state/index")) r.fail("/state/index", "index applies to pure states only");
      if (r.has("/state/beta")) cfg.state.beta = r.number("/state/beta");
      if (!(cfg.state.beta > 0)) r.fail("/state/beta", "beta must be > 0 (or \"inf\")");
    } else if (kind == "pure") {
      cfg.state.kind = StateSpec::Kind::pure;
      if (r.has("/state/beta")) r.fail("/state/beta", "beta applies to thermal states only");
      if (r.has("/state/index")) cfg.state.index = static_cast<int>(r.integer("/state/index"));
      if (cfg.state.index < 0) r.fail("/state/index", "index must be >= 0");
    } else if (kind == "ghz_plus") {
      cfg.state.kind = StateSpec::Kind::ghz_plus;
      if (m.kind != "ghz" && m.kind != "ghz_effective") r.fail("/state/kind", "ghz_plus needs a GHZ model");
      for (const char* k : {"beta", "index"})
        if (r.has(std::string("/state/") + k)) r.fail(std::string("/state/") + k, "not used by ghz_plus");
    } else {
      r.fail("/state/kind", "state kind must be thermal, pure or ghz_plus");
    }
  }

  // tau grid
  if (!r.has("/tau_grid")) r.fail("", "missing field 'tau_grid'");
  cfg.tau_grid = detail::read_tau_grid(r, "/tau_grid");

  // bounds
  if (r.has("/bounds")) {
    r.require_object("/bounds", {"enabled", "pure", "thermal", "thermal_weak", "two_time", "fsum", "kp", "collective_n"});
    auto flag = [&](const char* key, bool& dst) {
      if (r.has(std::string("/bounds/") + key)) dst = r.boolean(std::string("/bounds/") + key);
    };
    flag("enabled", cfg.bounds_enabled);
    flag("pure", cfg.bounds.pure);
    flag("thermal", cfg.bounds.thermal);
    flag("thermal_weak", cfg.bounds.thermal_weak);
    flag("two_time", cfg.bounds.two_time);
    flag("fsum", cfg.bounds.fsum);
    if (r.has("/bounds/kp")) {
      const auto& kp = r.at("/bounds/kp");
      if (!kp.is_array()) r.fail("/bounds/kp", "expected an array of integers >= 3");
      for (std::size_t i = 0; i < kp.size(); ++i) {
        const std::string p = "/bounds/kp/" + std::to_string(i);
        const long long v = r.integer(p);
        if (v < 3 || v > 1000) r.fail(p, "p must lie in [3, 1000]");
        cfg.bounds.kp.push_back(static_cast<int>(v));
      }
    }
    if (r.has("/bounds/collective_n")) {
      const long long n = r.integer("/bounds/collective_n");
      if (n < 1 || n > 1 << 20) r.fail("/bounds/collective_n", "collective_n must be >= 1");
      cfg.bounds.collective_n = static_cast<int>(n);
    }
  }

  // protocol
  if (r.has("/protocol")) {
    r.require_object("/protocol", {"shots", "weak_dx", "lambda", "seed"});
    ProtocolSpec p;
    if (r.has("/protocol/shots")) p.shots = r.unsigned_integer("/protocol/shots");
    if (p.shots < 1 || p.shots > 100000000) r.fail("/protocol/shots", "shots must lie in [1, 1e8]");
    if (r.has("/protocol/weak_dx")) p.weak_dx = r.numbers("/protocol/weak_dx");
    for (std::size_t i = 0; i < p.weak_dx.size(); ++i)
      if (!(p.weak_dx[i] >= 0) || !std::isfinite(p.weak_dx[i]))
        r.fail("/protocol/weak_dx/" + std::to_string(i), "meter width must be finite and >= 0");
    if (r.has("/protocol/lambda")) p.lambda = r.number("/protocol/lambda");
    if (!(p.lambda > 0) || !std::isfinite(p.lambda)) r.fail("/protocol/lambda", "lambda must be > 0");
    if (r.has("/protocol/seed")) p.seed = r.unsigned_integer("/protocol/seed");
    cfg.protocol = p;
  }

  // output
  if (r.has("/output")) {
    r.require_object("/output", {"path", "format"});
    if (r.has("/output/path")) cfg.output_path = r.string("/output/path");
    if (r.has("/output/format")) {
      cfg.format = r.string("/output/format");
      if (*cfg.format != "csv" && *cfg.format != "json") r.fail("/output/format", "format must be csv or json");
    }
  }

  const bool any_bound = cfg.bounds_enabled && (cfg.bounds.pure || cfg.bounds.thermal || cfg.bounds.thermal_weak ||
                                                cfg.bounds.two_time || cfg.bounds.fsum || !cfg.bounds.kp.empty());
  if (!any_bound && !cfg.protocol) r.fail("", "no task enabled: enable a bound family or add a protocol block");
  return cfg;
}

inline RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path + ": cannot open config file");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_run_config(ss.str(), path);
}

}  // namespace lgqfi
