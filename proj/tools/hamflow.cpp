// hamflow command-line front end.
//
//   hamflow verify-example --k 2 --out out/
//   hamflow analyze --config run.toml
//   hamflow scan --config run.toml
//   hamflow validate --config run.toml
//   hamflow selftest --seed 7
//
// Exit codes: 0 success, 1 a check failed, 2 configuration error,
// 3 numerical error (the error name is printed).

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "hamflow/config.hpp"
#include "hamflow/hamflow.hpp"
#include "hamflow/report.hpp"

namespace fs = std::filesystem;
using namespace hamflow;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitCheck = 1;
constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;

std::size_t env_workers(std::size_t fallback) {
  if (const char* w = std::getenv("HAMFLOW_WORKERS")) {
    char* end = nullptr;
    const long v = std::strtol(w, &end, 10);
    if (end == w || *end != '\0' || v <= 0) throw ConfigError("HAMFLOW_WORKERS must be a positive integer");
    return static_cast<std::size_t>(v);
  }
  return fallback;
}

// Adaptive Simpson on [a, b].
double adaptive_simpson(const std::function<double(double)>& f, double a, double b, double eps) {
  std::function<double(double, double, double, double, double, double, double, int)> rec =
      [&](double lo, double hi, double flo, double fmid, double fhi, double whole, double tol, int depth) {
        const double mid = 0.5 * (lo + hi);
        const double lm = 0.5 * (lo + mid), rm = 0.5 * (mid + hi);
        const double flm = f(lm), frm = f(rm);
        const double left = (mid - lo) / 6.0 * (flo + 4.0 * flm + fmid);
        const double right = (hi - mid) / 6.0 * (fmid + 4.0 * frm + fhi);
        if (depth <= 0 || std::abs(left + right - whole) <= 15.0 * tol)
          return left + right + (left + right - whole) / 15.0;
        return rec(lo, mid, flo, flm, fmid, left, tol / 2.0, depth - 1) +
               rec(mid, hi, fmid, frm, fhi, right, tol / 2.0, depth - 1);
      };
  // Unit-width pieces, so a peaked integrand cannot slip between the first samples.
  const int pieces = std::max(1, static_cast<int>(std::ceil(b - a)));
  const double h = (b - a) / pieces;
  double sum = 0.0;
  for (int i = 0; i < pieces; ++i) {
    const double lo = a + i * h, hi = i + 1 == pieces ? b : lo + h;
    const double flo = f(lo), fhi = f(hi), fm = f(0.5 * (lo + hi));
    sum += rec(lo, hi, flo, fm, fhi, (hi - lo) / 6.0 * (flo + 4.0 * fm + fhi), eps / pieces, 50);
  }
  return sum;
}

// Crossing form of the example family at Theta = 0 for the L2-normalized
// kernel trajectory u = sqrt(t^2+1) exp(-t atan t) e1 on [-T, T]:
// -int_0^T atan(t) |u|^2 dt / int_{-T}^T |u|^2 dt.
double example_form_oracle(double T) {
  auto w = [](double t) { return (t * t + 1.0) * std::exp(-2.0 * t * std::atan(t)); };
  const double iq = adaptive_simpson([&](double t) { return std::atan(t) * w(t); }, 0.0, T, 1e-14);
  const double norm = 2.0 * adaptive_simpson(w, 0.0, T, 1e-14);
  return -iq / norm;
}

struct Check {
  std::string name;
  bool pass = false;
  std::string detail;
};

json checks_json(const std::vector<Check>& checks) {
  json arr = json::array();
  for (const auto& c : checks) {
    json j = json::object();
    j["name"] = c.name;
    j["pass"] = c.pass;
    j["detail"] = c.detail;
    arr.push_back(std::move(j));
  }
  return arr;
}

// ---------------------------------------------------------------------------

int cmd_verify_example(std::size_t k, const fs::path& out, const std::string& family_name,
                       std::size_t resolution, std::size_t workers, double crossing_tol) {
  if (k < 1) throw ConfigError("--k must be at least 1");
  const bool control = family_name == "compact-control";
  if (!control && family_name != "example")
    throw ConfigError("--family must be 'example' or 'compact-control'");
  const HamiltonianFamily family = control ? compact_control_family(k) : example_family(k);
  if (!(crossing_tol > 0.0)) throw ConfigError("--crossing-tol must be positive");
  ScanOptions opts;
  opts.workers = workers;
  opts.search.tol = crossing_tol;

  json report = report_header("verify-example");
  report["family"] = family.name;
  report["k"] = k;
  std::vector<Check> checks;
  auto add = [&](std::string name, bool pass, std::string detail) {
    std::cout << (pass ? "PASS " : "FAIL ") << name << ": " << detail << "\n";
    checks.push_back({std::move(name), pass, std::move(detail)});
  };

  const auto loop = HomoclinicPath::coordinate_loop(family, 0, TorusPoint::origin(k), opts.boundary);
  {
    std::vector<double> s, g;
    const Domain dom = loop.domain();
    for (std::size_t i = 0; i < opts.search.grid; ++i) {
      s.push_back(dom.a + dom.length() * static_cast<double>(i) / static_cast<double>(opts.search.grid - 1));
      g.push_back(loop.gap(s.back()));
    }
    atomic_write(out / "gap_profile.dat", gap_profile_dat(s, g));
  }

  if (!control) {
    // u_*(t) = sqrt(t^2 + 1) exp(-t atan t) (1, 0) at sum(Theta) = 0.
    SampledSolution sol;
    for (int i = -10000; i <= 10000; ++i) {
      const double t = i * 1e-3;
      sol.times.push_back(t);
      sol.values.push_back({std::sqrt(t * t + 1.0) * std::exp(-t * std::atan(t)), 0.0});
    }
    const double r = residual(family, TorusPoint::origin(k), sol);
    add("residual", r <= 1e-5, "normalized residual of u_* on [-10, 10] = " + format_double(r));
    report["residual"] = r;

    const SflResult sfl = sfl_crossing(loop, opts.search);
    report["sfl"] = to_json(sfl);
    const bool one = sfl.crossings.size() == 1;
    add("crossing_location", one && std::abs(sfl.crossings[0].lambda0) <= 1e-6,
        std::to_string(sfl.crossings.size()) + " crossing(s)" +
            (one ? ", at Theta_1 = " + format_double(sfl.crossings[0].lambda0) : ""));
    if (one) {
      const Crossing& c = sfl.crossings[0];
      const double form = c.form(0, 0);
      const double oracle = example_form_oracle(opts.boundary.horizon);
      const double rel = std::abs(form - oracle) / std::abs(oracle);
      add("crossing_form", c.kernel_dim == 1 && form < 0.0 && c.regular && c.signature.value() == -1 && rel <= 1e-3,
          "form = " + format_double(form) + ", quadrature oracle " + format_double(oracle) + ", signature " +
              std::to_string(c.signature.value()));
      report["crossing_form_oracle"] = oracle;
    } else {
      add("crossing_form", false, "no unique crossing to evaluate");
    }
    add("sfl", sfl.value == -1, "sfl along the Theta_1 loop = " + std::to_string(sfl.value));

    const ChernVector cv = chern_vector(family, opts);
    report["chern"] = to_json(cv);
    bool all = true;
    for (int c : cv.components) all = all && c == -1;
    std::string comps;
    for (int c : cv.components) comps += (comps.empty() ? "" : ", ") + std::to_string(c);
    add("chern_vector", all, "(" + comps + ")");

    try {
      const Certificate cert = certify(family, opts);
      report["certificate"] = to_json(cert);
      const double sum = cert.invertible_point.sum();
      const bool at_pi = std::abs(std::abs(std::remainder(sum, 2.0 * std::numbers::pi)) - std::numbers::pi) < 1e-9;
      add("certificate", at_pi && cert.value == -1, cert.conclusion);
    } catch (const CertificateUnavailable& e) {
      report["certificate"] = nullptr;
      add("certificate", false, e.what());
    }

    if (k == 2) {
      const ScanReport scan = scan_degeneracy(family, resolution, kRankTol, opts);
      report["scan"] = to_json(scan);
      bool near = true;
      for (const auto& level : scan.levels) {
        const double h = 2.0 * std::numbers::pi / static_cast<double>(level.resolution);
        for (const ScanCell* c : level.degenerate_cells()) {
          const double dist = std::abs(std::remainder(c->angles[0] + c->angles[1], 2.0 * std::numbers::pi)) / std::sqrt(2.0);
          near = near && dist <= h;
        }
      }
      const bool dim_ok = scan.dimension_estimate && *scan.dimension_estimate >= 0.85 && *scan.dimension_estimate <= 1.15;
      add("scan", near && dim_ok,
          "dimension estimate " + (scan.dimension_estimate ? format_double(*scan.dimension_estimate) : "undefined") +
              (near ? "" : ", cells away from the diagonal set"));
      atomic_write(out / "degeneracy.csv", degeneracy_csv(scan));
      atomic_write(out / "degeneracy_map.dat", degeneracy_map_dat(scan.levels.front()));
    }
  } else {
    const std::vector<double> crossings = find_crossings(loop, opts.search);
    add("no_crossings", crossings.empty(), std::to_string(crossings.size()) + " crossing(s) on the Theta_1 loop");
    const ChernVector cv = chern_vector(family, opts);
    report["chern"] = to_json(cv);
    add("chern_zero", !cv.nonzero(), "all loop spectral flows vanish");
    try {
      const Certificate cert = certify(family, opts);
      report["certificate"] = to_json(cert);
      add("certificate_unavailable", false, "a certificate was issued for the control family");
    } catch (const CertificateUnavailable& e) {
      report["certificate"] = nullptr;
      add("certificate_unavailable", true, e.what());
    }
  }

  report["checks"] = checks_json(checks);
  bool ok = true;
  for (const auto& c : checks) ok = ok && c.pass;
  report["pass"] = ok;
  atomic_write(out / "report.json", report.dump(2) + "\n");
  if (!ok) {
    for (const auto& c : checks)
      if (!c.pass) {
        std::cerr << "check failed: " << c.name << "\n";
        break;
      }
    return kExitCheck;
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------

HomoclinicPath config_path(const HamiltonianFamily& family, const RunConfig& rc) {
  if (!rc.waypoints.empty()) {
    std::vector<TorusPoint> pts;
    for (const auto& w : rc.waypoints) pts.emplace_back(w);
    return HomoclinicPath::through(family, pts, rc.boundary());
  }
  return HomoclinicPath::coordinate_loop(family, rc.coordinate - 1, TorusPoint(rc.base), rc.boundary());
}

int run_config(RunConfig rc, const std::string& command) {
  rc.workers = env_workers(rc.workers);
  const HamiltonianFamily family = build_family(rc.family);
  try {
    validate_family(family);
  } catch (const ValidationError& e) {
    throw ConfigError(e.what());
  }
  const fs::path out = rc.out_dir;
  const ScanOptions opts = rc.scan();

  json report = report_header(command);
  report["config"] = to_toml(rc);
  report["family"] = family.name;
  report["k"] = family.k;
  report["mode"] = to_string(rc.mode);

  switch (rc.mode) {
    case AnalysisMode::Loop: {
      const HomoclinicPath path = config_path(family, rc);
      const SflResult sfl = sfl_crossing(path, opts.search);
      report["sfl"] = to_json(sfl);
      json pts = json::array();
      for (const auto& c : sfl.crossings) pts.push_back(to_json(path.point(c.lambda0)));
      report["crossing_points"] = std::move(pts);
      std::vector<double> s, g;
      const Domain dom = path.domain();
      for (std::size_t i = 0; i < rc.grid; ++i) {
        s.push_back(dom.a + dom.length() * static_cast<double>(i) / static_cast<double>(rc.grid - 1));
        g.push_back(path.gap(s.back()));
      }
      atomic_write(out / "gap_profile.dat", gap_profile_dat(s, g));
      std::cout << "sfl = " << sfl.value << " (" << sfl.crossings.size() << " crossing(s))\n";
      break;
    }
    case AnalysisMode::Certify: {
      try {
        const Certificate cert = certify(family, opts);
        report["certificate"] = to_json(cert);
        std::cout << cert.conclusion << "\n";
      } catch (const CertificateUnavailable& e) {
        report["certificate"] = nullptr;
        report["certificate_unavailable"] = e.what();
        std::cout << e.what() << "\n";
      }
      break;
    }
    case AnalysisMode::Scan: {
      ScanReport scan = scan_degeneracy(family, rc.resolution, rc.tol, opts);
      if (rc.chern) {
        scan.chern = chern_vector(family, TorusPoint(rc.base), opts);
        try {
          scan.certificate = certify(family, opts);
        } catch (const CertificateUnavailable& e) {
          scan.warnings.push_back(e.what());
        }
      }
      report["scan"] = to_json(scan);
      atomic_write(out / "degeneracy.csv", degeneracy_csv(scan));
      atomic_write(out / "degeneracy_map.dat", degeneracy_map_dat(scan.levels.front()));
      for (const auto& l : scan.levels)
        std::cout << "resolution " << l.resolution << ": " << l.degenerate_count() << " degenerate cell(s)\n";
      if (scan.dimension_estimate) std::cout << "dimension estimate " << *scan.dimension_estimate << "\n";
      for (const auto& w : scan.warnings) std::cout << "warning: " << w << "\n";
      break;
    }
  }
  atomic_write(out / "report.json", report.dump(2) + "\n");
  return kExitOk;
}

// ---------------------------------------------------------------------------

int cmd_selftest(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  int failures = 0;
  auto report = [&](const std::string& name, bool pass) {
    std::cout << (pass ? "PASS " : "FAIL ") << name << "\n";
    if (!pass) ++failures;
  };
  bool engines = true, morse = true, doubled = true, reverse = true;
  for (int i = 0; i < 20; ++i) {
    const std::size_t n = 4 + static_cast<std::size_t>(i % 5);
    const MatrixPath p = random_affine_path(n, rng);
    const int e = sfl_eigcount(p).value;
    try {
      engines = engines && sfl_crossing(p).value == e;
    } catch (const DegenerateCrossingError&) {
    } catch (const ClusteredCrossingError&) {
    }
    const int m = static_cast<int>(morse_index(p.value(-1.0))) - static_cast<int>(morse_index(p.value(1.0)));
    morse = morse && e == m;
    doubled = doubled && sfl_eigcount(p.doubled()).value == 2 * e;
    reverse = reverse && sfl_eigcount(p.reversed()).value == -e;
  }
  report("engine equivalence", engines);
  report("Morse endpoint formula", morse);
  report("doubled embedding", doubled);
  report("reversal", reverse);
  bool cx = true;
  for (int i = 0; i < 20; ++i) cx = cx && complexify_eig_check(random_symmetric(5, rng));
  report("complexification eigenvalue doubling", cx);
  const auto unit = MatrixPath({-1.0, 1.0}, [](double s) { return Matrix{{s}}; });
  report("unit crossing", sfl_eigcount(unit).value == 1 && sfl_crossing(unit).value == 1);
  return failures == 0 ? kExitOk : kExitCheck;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spectral flow and homoclinic bifurcation invariants"};
  app.require_subcommand(1);

  std::size_t k = 1, resolution = 32, workers = 1;
  double crossing_tol = CrossingSearch{}.tol;
  std::string out_dir = "out", family_name = "example";
  auto* verify = app.add_subcommand("verify-example", "Run the golden checks on the built-in example family");
  verify->add_option("--k", k, "Torus dimension")->required();
  verify->add_option("--out", out_dir, "Output directory")->required();
  verify->add_option("--family", family_name, "example or compact-control (expected-negative mode)");
  verify->add_option("--resolution", resolution, "Base scan resolution for k = 2");
  verify->add_option("--workers", workers, "Worker threads");
  verify->add_option("--crossing-tol", crossing_tol, "Gap below which a localized minimum is a crossing");

  std::string config_path;
  auto* analyze = app.add_subcommand("analyze", "Run the analysis described by a config file");
  analyze->add_option("--config", config_path, "Config file")->required();
  auto* scan = app.add_subcommand("scan", "Scan the degeneracy set of the configured family");
  scan->add_option("--config", config_path, "Config file")->required();
  auto* validate = app.add_subcommand("validate", "Validate a config file and echo its normalized form");
  validate->add_option("--config", config_path, "Config file")->required();

  std::uint64_t seed = 7;
  auto* selftest = app.add_subcommand("selftest", "Quick randomized property checks");
  selftest->add_option("--seed", seed, "Random seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (verify->parsed()) return cmd_verify_example(k, out_dir, family_name, resolution, env_workers(workers), crossing_tol);
    if (selftest->parsed()) return cmd_selftest(seed);
    RunConfig rc = load_run_config(config_path);
    if (validate->parsed()) {
      build_family(rc.family);
      std::cout << to_toml(rc);
      return kExitOk;
    }
    if (scan->parsed()) rc.mode = AnalysisMode::Scan;
    return run_config(std::move(rc), analyze->parsed() ? "analyze" : "scan");
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const Error& e) {
    std::cerr << "error [" << e.name() << "]: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumerical;
  }
}
