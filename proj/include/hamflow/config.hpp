#pragma once

// Run configuration: a small TOML reader (tables, arrays of tables, strings,
// numbers, booleans, nested arrays, comments) producing nlohmann::json, and
// the typed RunConfig built from it.

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <limits>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "hamflow/boundary.hpp"
#include "hamflow/errors.hpp"
#include "hamflow/sflow.hpp"
#include "hamflow/systems.hpp"
#include "hamflow/toruscan.hpp"

namespace hamflow {

using json = nlohmann::ordered_json;

namespace detail {

class TomlReader {
 public:
  explicit TomlReader(std::string_view src) : src_(src) {}

  json parse() {
    json root = json::object();
    json* table = &root;
    while (true) {
      skip_blank_lines();
      if (eof()) break;
      if (peek() == '[') {
        table = header(root);
      } else {
        const std::string key = parse_key();
        skip_spaces();
        expect('=');
        skip_spaces();
        json value = parse_value();
        if (table->contains(key)) fail("duplicate key '" + key + "'");
        (*table)[key] = std::move(value);
      }
      end_of_line();
    }
    return root;
  }

 private:
  [[noreturn]] void fail(const std::string& what) const {
    throw ConfigError("line " + std::to_string(line_) + ": " + what);
  }
  bool eof() const { return pos_ >= src_.size(); }
  char peek() const { return eof() ? '\0' : src_[pos_]; }
  char get() {
    if (eof()) fail("unexpected end of input");
    const char c = src_[pos_++];
    if (c == '\n') ++line_;
    return c;
  }
  void expect(char c) {
    if (peek() != c) fail(std::string("expected '") + c + "'");
    get();
  }
  void skip_spaces() {
    while (!eof() && (peek() == ' ' || peek() == '\t')) get();
  }
  void skip_comment() {
    if (peek() == '#')
      while (!eof() && peek() != '\n') get();
  }
  void skip_blank_lines() {
    while (!eof()) {
      skip_spaces();
      skip_comment();
      if (peek() == '\r' || peek() == '\n') {
        get();
        continue;
      }
      break;
    }
  }
  // Whitespace, newlines and comments, allowed inside arrays.
  void skip_all() {
    while (!eof()) {
      const char c = peek();
      if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
        get();
      } else if (c == '#') {
        skip_comment();
      } else {
        break;
      }
    }
  }
  void end_of_line() {
    skip_spaces();
    skip_comment();
    if (peek() == '\r') get();
    if (!eof() && peek() != '\n') fail("unexpected trailing characters");
  }

  std::string parse_key() {
    if (peek() == '"') return parse_string();
    std::string key;
    while (!eof() && (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '_' || peek() == '-'))
      key += get();
    if (key.empty()) fail("expected a key");
    return key;
  }

  json* header(json& root) {
    get();
    const bool array = peek() == '[';
    if (array) get();
    std::vector<std::string> path;
    while (true) {
      skip_spaces();
      path.push_back(parse_key());
      skip_spaces();
      if (peek() == '.') {
        get();
        continue;
      }
      break;
    }
    expect(']');
    if (array) expect(']');
    json* node = &root;
    for (std::size_t i = 0; i + 1 < path.size(); ++i) {
      json& next = (*node)[path[i]];
      if (next.is_null()) next = json::object();
      if (next.is_array()) {
        if (next.empty()) fail("bad table path");
        node = &next.back();
      } else if (next.is_object()) {
        node = &next;
      } else {
        fail("key '" + path[i] + "' is not a table");
      }
    }
    json& leaf = (*node)[path.back()];
    std::string full;
    for (const auto& p : path) full += (full.empty() ? "" : ".") + p;
    if (array) {
      if (leaf.is_null()) leaf = json::array();
      if (!leaf.is_array()) fail("'" + full + "' is not an array of tables");
      leaf.push_back(json::object());
      return &leaf.back();
    }
    if (!defined_.insert(full).second) fail("table [" + full + "] defined twice");
    if (leaf.is_null()) leaf = json::object();
    if (!leaf.is_object()) fail("'" + full + "' is not a table");
    return &leaf;
  }

  std::string parse_string() {
    expect('"');
    std::string out;
    while (true) {
      const char c = get();
      if (c == '"') break;
      if (c == '\n') fail("unterminated string");
      if (c == '\\') {
        const char e = get();
        switch (e) {
          case 'n': out += '\n'; break;
          case 't': out += '\t'; break;
          case '"': out += '"'; break;
          case '\\': out += '\\'; break;
          default: fail(std::string("unsupported escape \\") + e);
        }
      } else {
        out += c;
      }
    }
    return out;
  }

  // Single-quoted: no escapes.
  std::string parse_literal() {
    expect('\'');
    std::string out;
    while (true) {
      const char c = get();
      if (c == '\'') break;
      if (c == '\n') fail("unterminated string");
      out += c;
    }
    return out;
  }

  json parse_number() {
    std::string tok;
    while (!eof()) {
      const char c = peek();
      if (std::isalnum(static_cast<unsigned char>(c)) || c == '+' || c == '-' || c == '.' || c == '_') {
        if (c != '_') tok += c;
        get();
      } else {
        break;
      }
    }
    if (tok == "inf" || tok == "+inf" || tok == "-inf" || tok == "nan") fail("non-finite number");
    const bool is_float = tok.find_first_of(".eE") != std::string::npos;
    const char* first = tok.data();
    const char* last = tok.data() + tok.size();
    if (!tok.empty() && tok.front() == '+') ++first;
    if (is_float) {
      double v = 0.0;
      auto [p, ec] = std::from_chars(first, last, v);
      if (ec != std::errc() || p != last) fail("malformed number '" + tok + "'");
      return v;
    }
    std::int64_t v = 0;
    auto [p, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || p != last) fail("malformed value '" + tok + "'");
    return v;
  }

  json parse_value() {
    const char c = peek();
    if (c == '"') return parse_string();
    if (c == '\'') return parse_literal();
    if (c == '[') {
      get();
      json arr = json::array();
      while (true) {
        skip_all();
        if (peek() == ']') {
          get();
          break;
        }
        arr.push_back(parse_value());
        skip_all();
        if (peek() == ',') {
          get();
          continue;
        }
        skip_all();
        expect(']');
        break;
      }
      return arr;
    }
    if (src_.substr(pos_, 4) == "true") {
      pos_ += 4;
      return true;
    }
    if (src_.substr(pos_, 5) == "false") {
      pos_ += 5;
      return false;
    }
    if (c == '+' || c == '-' || c == '.' || std::isdigit(static_cast<unsigned char>(c))) return parse_number();
    fail("expected a value");
  }

  std::string_view src_;
  std::size_t pos_ = 0;
  int line_ = 1;
  std::set<std::string> defined_;
};

}  // namespace detail

inline json parse_toml(std::string_view text) { return detail::TomlReader(text).parse(); }

inline json read_toml_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_toml(ss.str());
}

enum class AnalysisMode { Loop, Certify, Scan };

inline const char* to_string(AnalysisMode m) {
  switch (m) {
    case AnalysisMode::Loop: return "loop";
    case AnalysisMode::Certify: return "certify";
    case AnalysisMode::Scan: return "scan";
  }
  return "";
}

struct RunConfig {
  json family;  // normalized [family] table
  AnalysisMode mode = AnalysisMode::Loop;
  std::vector<std::vector<double>> waypoints;
  std::size_t coordinate = 0;  // 1-based coordinate loop; 0 when waypoints are used
  std::vector<double> base;
  std::size_t grid = 64;
  double crossing_tol = 1e-6;
  std::size_t resolution = 32;
  double tol = kRankTol;
  bool chern = true;  // scan mode: also compute the Chern vector and certificate
  double horizon = 40.0;
  double horizon_max = 320.0;
  double step = 0.05;
  double sample_step = 5e-3;
  std::size_t workers = 1;
  std::uint64_t seed = 7;
  std::string out_dir = "out";

  BoundaryOptions boundary() const {
    BoundaryOptions o;
    o.horizon = horizon;
    o.horizon_max = horizon_max;
    o.step.h0 = step;
    o.sample_step = sample_step;
    o.intersection_tol = tol;
    return o;
  }
  ScanOptions scan() const {
    ScanOptions o;
    o.boundary = boundary();
    o.search.grid = grid;
    o.search.tol = crossing_tol;
    o.workers = workers;
    return o;
  }
};

namespace detail {

inline void allow_keys(const json& table, const std::string& where, std::initializer_list<const char*> keys) {
  if (!table.is_object()) throw ConfigError("[" + where + "] must be a table");
  for (const auto& [k, v] : table.items()) {
    bool known = false;
    for (const char* a : keys) known = known || k == a;
    if (!known) throw ConfigError("unknown key '" + k + "' in [" + where + "]");
  }
}

inline double get_number(const json& t, const char* key, double def, const std::string& where,
                         bool positive = true) {
  if (!t.contains(key)) return def;
  const json& v = t.at(key);
  if (!v.is_number()) throw ConfigError(where + "." + key + " must be a number");
  const double x = v.get<double>();
  if (!std::isfinite(x) || (positive && !(x > 0.0)))
    throw ConfigError(where + "." + key + " must be " + (positive ? "positive" : "finite"));
  return x;
}

inline std::size_t get_count(const json& t, const char* key, std::size_t def, const std::string& where) {
  if (!t.contains(key)) return def;
  const json& v = t.at(key);
  if (!v.is_number_integer() || v.get<std::int64_t>() <= 0)
    throw ConfigError(where + "." + key + " must be a positive integer");
  return static_cast<std::size_t>(v.get<std::int64_t>());
}

inline std::string get_string(const json& t, const char* key, const std::string& def, const std::string& where) {
  if (!t.contains(key)) return def;
  if (!t.at(key).is_string()) throw ConfigError(where + "." + key + " must be a string");
  return t.at(key).get<std::string>();
}

inline std::vector<double> get_numbers(const json& v, const std::string& what) {
  if (!v.is_array()) throw ConfigError(what + " must be an array of numbers");
  std::vector<double> out;
  for (const auto& x : v) {
    if (!x.is_number() || !std::isfinite(x.get<double>())) throw ConfigError(what + " must hold finite numbers");
    out.push_back(x.get<double>());
  }
  return out;
}

inline Profile parse_profile(const std::string& s) {
  if (s == "arctan") return Profile::Arctan;
  if (s == "tanh") return Profile::Tanh;
  if (s == "sech") return Profile::Sech;
  if (s == "const") return Profile::Const;
  throw ConfigError("unknown profile '" + s + "' (arctan, tanh, sech, const)");
}

inline Window parse_window(const std::string& s) {
  if (s == "all") return Window::All;
  if (s == "positive") return Window::Positive;
  if (s == "negative") return Window::Negative;
  throw ConfigError("unknown window '" + s + "' (all, positive, negative)");
}

inline TermMatrix parse_term_matrix(const std::string& s) {
  if (s == "constant") return TermMatrix::Constant;
  if (s == "S") return TermMatrix::S;
  if (s == "JS") return TermMatrix::JS;
  throw ConfigError("unknown term matrix '" + s + "' (constant, S, JS)");
}

// Validates [family] and fills in defaults.
inline json normalize_family(const json& f) {
  allow_keys(f, "family", {"kind", "name", "k", "n", "term", "growth"});
  const std::string kind = get_string(f, "kind", "", "family");
  if (kind.empty()) throw ConfigError("family.kind is required");
  json out = json::object();
  out["kind"] = kind;
  out["k"] = get_count(f, "k", 1, "family");
  if (kind == "example" || kind == "compact-control") {
    if (f.contains("term") || f.contains("n")) throw ConfigError("family kind '" + kind + "' takes no terms or n");
  } else if (kind == "composed") {
    out["name"] = get_string(f, "name", "composed", "family");
    out["n"] = get_count(f, "n", 1, "family");
    if (!f.contains("term") || !f.at("term").is_array() || f.at("term").empty())
      throw ConfigError("composed family needs at least one [[family.term]]");
    json terms = json::array();
    for (const auto& t : f.at("term")) {
      allow_keys(t, "family.term",
                 {"profile", "window", "scale", "matrix", "plane", "angle_weights", "angle_offset", "entries"});
      json nt = json::object();
      nt["profile"] = get_string(t, "profile", "const", "family.term");
      parse_profile(nt["profile"]);
      nt["window"] = get_string(t, "window", "all", "family.term");
      parse_window(nt["window"]);
      nt["scale"] = get_number(t, "scale", 1.0, "family.term", false);
      nt["matrix"] = get_string(t, "matrix", "constant", "family.term");
      const TermMatrix m = parse_term_matrix(nt["matrix"]);
      if (m == TermMatrix::Constant) {
        if (!t.contains("entries")) throw ConfigError("constant term needs entries");
        nt["entries"] = get_numbers(t.at("entries"), "family.term.entries");
      } else {
        if (t.contains("plane")) {
          if (!t.at("plane").is_number_integer() || t.at("plane").get<std::int64_t>() < 0)
            throw ConfigError("family.term.plane must be a non-negative integer");
          nt["plane"] = t.at("plane").get<std::int64_t>();
        } else {
          nt["plane"] = 0;
        }
        if (!t.contains("angle_weights")) throw ConfigError("S/JS term needs angle_weights");
        nt["angle_weights"] = get_numbers(t.at("angle_weights"), "family.term.angle_weights");
        nt["angle_offset"] = get_number(t, "angle_offset", 0.0, "family.term", false);
      }
      terms.push_back(std::move(nt));
    }
    out["term"] = std::move(terms);
  } else {
    throw ConfigError("unknown family kind '" + kind + "' (example, compact-control, composed)");
  }
  if (f.contains("growth")) {
    const json& g = f.at("growth");
    allow_keys(g, "family.growth", {"p", "C", "g"});
    json ng = json::object();
    ng["p"] = get_number(g, "p", 1.0, "family.growth");
    ng["C"] = get_number(g, "C", 1.0, "family.growth", false);
    ng["g"] = get_string(g, "g", "", "family.growth");
    out["growth"] = std::move(ng);
  }
  return out;
}

}  // namespace detail

/// Builds the family described by a normalized [family] table.
inline HamiltonianFamily build_family(const json& f) {
  const std::string kind = f.at("kind");
  const auto k = f.at("k").get<std::size_t>();
  HamiltonianFamily fam;
  if (kind == "example") {
    fam = example_family(k);
  } else if (kind == "compact-control") {
    fam = compact_control_family(k);
  } else {
    const auto n = f.at("n").get<std::size_t>();
    std::vector<ComposedTerm> terms;
    for (const auto& t : f.at("term")) {
      ComposedTerm ct;
      ct.profile = detail::parse_profile(t.at("profile"));
      ct.window = detail::parse_window(t.at("window"));
      ct.scale = t.at("scale");
      ct.matrix = detail::parse_term_matrix(t.at("matrix"));
      if (ct.matrix == TermMatrix::Constant) {
        ct.entries = t.at("entries").get<std::vector<double>>();
      } else {
        ct.plane = t.at("plane");
        ct.angle_weights = t.at("angle_weights").get<std::vector<double>>();
        ct.angle_offset = t.at("angle_offset");
      }
      terms.push_back(std::move(ct));
    }
    try {
      fam = composed_family(n, k, std::move(terms), f.at("name"));
    } catch (const ValidationError& e) {
      throw ConfigError(e.what());
    }
  }
  if (f.contains("growth")) {
    const json& g = f.at("growth");
    fam.growth = GrowthMeta{g.at("p"), g.at("C"), g.at("g")};
  }
  return fam;
}

/// Typed configuration; rejects unknown keys and non-positive numerics.
inline RunConfig parse_run_config(const json& doc) {
  detail::allow_keys(doc, "root", {"family", "analysis", "numerics", "output"});
  if (!doc.contains("family")) throw ConfigError("missing [family] table");
  RunConfig rc;
  rc.family = detail::normalize_family(doc.at("family"));
  const std::size_t k = rc.family.at("k");

  const json empty = json::object();
  const json& an = doc.contains("analysis") ? doc.at("analysis") : empty;
  detail::allow_keys(an, "analysis",
                     {"mode", "waypoints", "coordinate", "base", "grid", "crossing_tol", "resolution", "tol", "chern"});
  const std::string mode = detail::get_string(an, "mode", "loop", "analysis");
  if (mode == "loop") rc.mode = AnalysisMode::Loop;
  else if (mode == "certify") rc.mode = AnalysisMode::Certify;
  else if (mode == "scan") rc.mode = AnalysisMode::Scan;
  else throw ConfigError("unknown analysis.mode '" + mode + "' (loop, certify, scan)");
  if (an.contains("waypoints") && an.contains("coordinate"))
    throw ConfigError("analysis takes either waypoints or coordinate, not both");
  if (an.contains("waypoints")) {
    if (!an.at("waypoints").is_array() || an.at("waypoints").size() < 2)
      throw ConfigError("analysis.waypoints needs at least two points");
    for (const auto& w : an.at("waypoints")) {
      auto p = detail::get_numbers(w, "analysis.waypoints entry");
      if (p.size() != k) throw ConfigError("each waypoint needs k = " + std::to_string(k) + " angles");
      rc.waypoints.push_back(std::move(p));
    }
  } else {
    rc.coordinate = detail::get_count(an, "coordinate", 1, "analysis");
    if (rc.coordinate > k) throw ConfigError("analysis.coordinate exceeds k");
  }
  rc.base = an.contains("base") ? detail::get_numbers(an.at("base"), "analysis.base") : std::vector<double>(k, 0.0);
  if (rc.base.size() != k) throw ConfigError("analysis.base needs k angles");
  rc.grid = detail::get_count(an, "grid", rc.grid, "analysis");
  if (rc.grid < 3) throw ConfigError("analysis.grid must be at least 3");
  rc.crossing_tol = detail::get_number(an, "crossing_tol", rc.crossing_tol, "analysis");
  rc.resolution = detail::get_count(an, "resolution", rc.resolution, "analysis");
  if (rc.resolution < 8) throw ConfigError("analysis.resolution must be at least 8");
  rc.tol = detail::get_number(an, "tol", rc.tol, "analysis");
  if (an.contains("chern")) {
    if (!an.at("chern").is_boolean()) throw ConfigError("analysis.chern must be a boolean");
    rc.chern = an.at("chern").get<bool>();
  }

  const json& nu = doc.contains("numerics") ? doc.at("numerics") : empty;
  detail::allow_keys(nu, "numerics", {"horizon", "horizon_max", "step", "sample_step", "workers", "seed"});
  rc.horizon = detail::get_number(nu, "horizon", rc.horizon, "numerics");
  rc.horizon_max = detail::get_number(nu, "horizon_max", rc.horizon_max, "numerics");
  if (rc.horizon_max < rc.horizon) throw ConfigError("numerics.horizon_max must be >= numerics.horizon");
  rc.step = detail::get_number(nu, "step", rc.step, "numerics");
  rc.sample_step = detail::get_number(nu, "sample_step", rc.sample_step, "numerics");
  rc.workers = detail::get_count(nu, "workers", rc.workers, "numerics");
  rc.seed = detail::get_count(nu, "seed", rc.seed, "numerics");

  const json& ou = doc.contains("output") ? doc.at("output") : empty;
  detail::allow_keys(ou, "output", {"dir"});
  rc.out_dir = detail::get_string(ou, "dir", rc.out_dir, "output");
  if (rc.out_dir.empty()) throw ConfigError("output.dir must not be empty");
  return rc;
}

inline RunConfig load_run_config(const std::string& path) { return parse_run_config(read_toml_file(path)); }

namespace detail {

inline std::string toml_number(double x) {
  std::ostringstream os;
  os << std::setprecision(17) << x;
  std::string s = os.str();
  if (s.find_first_of(".eE") == std::string::npos) s += ".0";
  return s;
}

inline std::string toml_value(const json& v) {
  if (v.is_string()) return json(v).dump();
  if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
  if (v.is_number_integer()) return std::to_string(v.get<std::int64_t>());
  if (v.is_number()) return toml_number(v.get<double>());
  std::string out = "[";
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? ", " : "") + toml_value(v[i]);
  return out + "]";
}

}  // namespace detail

/// Normalized TOML echo of a configuration, every default spelled out.
inline std::string to_toml(const RunConfig& rc) {
  std::ostringstream os;
  auto kv = [&](const std::string& key, const json& v) { os << key << " = " << detail::toml_value(v) << "\n"; };
  os << "[family]\n";
  for (const auto& [key, v] : rc.family.items())
    if (key != "term" && key != "growth") kv(key, v);
  if (rc.family.contains("term"))
    for (const auto& t : rc.family.at("term")) {
      os << "\n[[family.term]]\n";
      for (const auto& [key, v] : t.items()) kv(key, v);
    }
  if (rc.family.contains("growth")) {
    os << "\n[family.growth]\n";
    for (const auto& [key, v] : rc.family.at("growth").items()) kv(key, v);
  }
  os << "\n[analysis]\n";
  kv("mode", to_string(rc.mode));
  if (rc.waypoints.empty()) kv("coordinate", rc.coordinate);
  else kv("waypoints", rc.waypoints);
  kv("base", rc.base);
  kv("grid", rc.grid);
  kv("crossing_tol", rc.crossing_tol);
  kv("resolution", rc.resolution);
  kv("tol", rc.tol);
  kv("chern", rc.chern);
  os << "\n[numerics]\n";
  kv("horizon", rc.horizon);
  kv("horizon_max", rc.horizon_max);
  kv("step", rc.step);
  kv("sample_step", rc.sample_step);
  kv("workers", rc.workers);
  kv("seed", rc.seed);
  os << "\n[output]\n";
  kv("dir", rc.out_dir);
  return os.str();
}

}  // namespace hamflow
