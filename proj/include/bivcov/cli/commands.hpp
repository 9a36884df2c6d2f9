#pragma once

// Subcommands of the bivcov tool. Each takes a RunConfig, writes its results to the
// configured output (stdout when empty) and returns the process exit code:
//
//   0  valid / success
//   1  inconclusive (the sufficient condition does not settle the model)
//   2  provably invalid
//   3  malformed input (model file, CSV, flags)
//   4  unreadable or unwritable file
//   5  numerical failure

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "bivcov/bivcov.hpp"

namespace bivcov::cli {

enum ExitCode : int {
  kValid = 0,
  kInconclusive = 1,
  kInvalid = 2,
  kBadInput = 3,
  kFileError = 4,
  kNumericalError = 5,
};

struct RunConfig {
  std::string subcommand;
  std::string model_path;
  std::string data_path;
  std::string targets_path;
  std::string points_path;
  std::string out_path;
  int dim = 1;
  std::uint64_t seed = 1;
  /// "name=lo:hi:steps" entries; curve accepts one or two.
  std::vector<std::string> sweeps;
  /// "lo:hi:steps" per axis for simulate.
  std::string grid;
  double umax = 10.0;
  int points = 200;
  std::string kind = "stable";
  int starts = 8;
  int max_evaluations = 3000;
  /// "zero" or "free".
  std::string nugget = "zero";
  /// "none" or "log": applied to the value column before fitting or kriging.
  std::string transform = "none";
  int component = 1;
  bool verbose = false;
};

/// File-system problems, mapped to kFileError.
class FileError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

struct Range {
  double lo, hi;
  int steps;
  double at(int i) const { return steps == 1 ? lo : lo + (hi - lo) * i / (steps - 1); }
};

inline Range parse_range(const std::string& text, const std::string& what) {
  Range r{};
  std::istringstream in(text);
  std::string a, b, c;
  if (!std::getline(in, a, ':') || !std::getline(in, b, ':') || !std::getline(in, c) || in.rdbuf()->in_avail()) {
    throw ParseError(what + ": expected lo:hi:steps, got '" + text + "'", 0);
  }
  try {
    std::size_t ua = 0, ub = 0, uc = 0;
    r.lo = std::stod(a, &ua);
    r.hi = std::stod(b, &ub);
    r.steps = std::stoi(c, &uc);
    if (ua != a.size() || ub != b.size() || uc != c.size()) throw std::invalid_argument("trailing");
  } catch (const std::exception&) {
    throw ParseError(what + ": expected lo:hi:steps, got '" + text + "'", 0);
  }
  if (r.steps < 1) throw ParseError(what + ": steps must be >= 1", 0);
  if (!std::isfinite(r.lo) || !std::isfinite(r.hi) || r.hi < r.lo) throw ParseError(what + ": need lo <= hi", 0);
  return r;
}

class Output {
 public:
  explicit Output(const std::string& path) {
    if (!path.empty()) {
      file_ = std::make_unique<std::ofstream>(path);
      if (!*file_) throw FileError("cannot write '" + path + "'");
    }
  }
  std::ostream& stream() { return file_ ? *file_ : std::cout; }
  void finish() {
    stream().flush();
    if (file_ && !*file_) throw FileError("write failed");
  }

 private:
  std::unique_ptr<std::ofstream> file_;
};

inline ModelSpec load_model(const std::string& path) {
  if (path.empty()) throw ParseError("a model file is required (--model)", 0);
  std::ifstream in(path);
  if (!in) throw FileError("cannot open model file '" + path + "'");
  try {
    return parse_model(in);
  } catch (const ParseError& e) {
    throw ParseError(path + ": " + e.what(), 0);
  }
}

inline FieldSample load_sample(const std::string& path, const CsvReadOptions& opt, const std::string& what) {
  if (path.empty()) throw ParseError(what + " file is required", 0);
  std::ifstream in(path);
  if (!in) throw FileError("cannot open " + what + " file '" + path + "'");
  try {
    return read_sample(in, opt);
  } catch (const ParseError& e) {
    throw ParseError(path + ": " + e.what(), 0);
  }
}

inline void apply_transform(FieldSample& s, const std::string& transform) {
  if (transform == "none") return;
  if (transform != "log") throw ParseError("unknown transform '" + transform + "'", 0);
  for (std::size_t i = 0; i < s.value.size(); ++i) {
    if (!(s.value[i] > 0.0)) throw ParseError("log transform needs positive values (row " + std::to_string(i + 1) + ")", 0);
    s.value[i] = std::log(s.value[i]);
  }
}

inline std::string fmt(double v) { return format_double(v); }

// Validity verdict of a model file with its key-value rendering.
struct Assessment {
  int exit_code = kInconclusive;
  std::vector<std::pair<std::string, std::string>> fields;
};

inline int verdict_for(const ValidityReport& rep, double rho) {
  if (rho == 0.0) return kValid;
  switch (rep.decidability) {
    case Decidability::NecessarilyZero: return kInvalid;
    case Decidability::ZeroInfimumInconclusive: return kInconclusive;
    case Decidability::SufficientBound: return std::abs(rho) <= rep.rho_bound ? kValid : kInconclusive;
  }
  return kInconclusive;
}

inline void add_report(Assessment& a, const ValidityReport& rep) {
  a.fields.emplace_back("case", to_string(rep.regime));
  a.fields.emplace_back("decidability", to_string(rep.decidability));
  a.fields.emplace_back("infimum", fmt(rep.infimum));
  a.fields.emplace_back("rho_bound_raw", fmt(rep.rho_bound_raw));
  a.fields.emplace_back("rho_bound", fmt(rep.rho_bound));
  a.fields.emplace_back("infimum_location", to_string(rep.location.where));
  if (rep.location.where == InfimumLocation::Where::Interior) a.fields.emplace_back("infimum_r", fmt(rep.location.r));
  if (!rep.note.empty()) a.fields.emplace_back("note", rep.note);
}

inline Assessment assess(const ModelSpec& spec, Dimension dim) {
  Assessment a;
  a.fields.emplace_back("kind", to_string(spec.kind));
  a.fields.emplace_back("dimension", std::to_string(dim.value()));
  switch (spec.kind) {
    case ModelKind::Stable: {
      const auto m = spec.stable();
      const auto rep = max_rho_stable(m, dim);
      add_report(a, rep);
      a.fields.emplace_back("rho", fmt(m.rho));
      a.exit_code = verdict_for(rep, m.rho);
      break;
    }
    case ModelKind::Cauchy: {
      const auto m = spec.cauchy();
      const auto rep = max_rho_cauchy(m, dim);
      add_report(a, rep);
      a.fields.emplace_back("rho", fmt(m.rho));
      a.exit_code = verdict_for(rep, m.rho);
      break;
    }
    case ModelKind::Matern: {
      // The spectral bound is exact for this family, so exceeding it is invalid.
      const auto m = spec.matern();
      const double bound = max_rho_matern(m, dim);
      a.fields.emplace_back("case", "matern-spectral");
      a.fields.emplace_back("decidability", "exact-bound");
      a.fields.emplace_back("rho_bound", fmt(bound));
      a.fields.emplace_back("rho", fmt(m.rho));
      a.exit_code = std::abs(m.rho) <= bound ? kValid : kInvalid;
      break;
    }
    case ModelKind::Spherical: {
      const auto m = spec.spherical();
      const auto v = spherical_triviality(m);
      a.fields.emplace_back("case", "spherical");
      a.fields.emplace_back("rho", fmt(m.rho));
      a.fields.emplace_back("decidability", v.valid ? "valid" : "invalid");
      if (v.witness_frequency) {
        a.fields.emplace_back("witness_frequency", fmt(*v.witness_frequency));
        a.fields.emplace_back("witness_root_index", std::to_string(v.root_index));
        a.fields.emplace_back("witness_determinant", fmt(v.determinant));
      }
      a.exit_code = v.valid ? kValid : kInvalid;
      break;
    }
    case ModelKind::Lmc: {
      spec.lmc();  // constructor checks symmetry and semidefiniteness
      a.fields.emplace_back("case", "linear-model-of-coregionalization");
      a.fields.emplace_back("decidability", "valid-by-construction");
      a.exit_code = kValid;
      break;
    }
  }
  static const char* verdicts[] = {"valid", "inconclusive", "invalid"};
  a.fields.emplace_back("verdict", verdicts[a.exit_code]);
  return a;
}

}  // namespace detail

inline int cmd_validate(const RunConfig& cfg) {
  const auto spec = detail::load_model(cfg.model_path);
  const auto a = detail::assess(spec, Dimension(cfg.dim));
  detail::Output out(cfg.out_path);
  auto& os = out.stream();
  std::string verdict, decid, bound, where, witness;
  for (const auto& [k, v] : a.fields) {
    if (k == "verdict") verdict = v;
    if (k == "decidability") decid = v;
    if (k == "rho_bound") bound = v;
    if (k == "infimum_location") where = v;
    if (k == "witness_frequency") witness = v;
  }
  os << "Model is " << verdict << " (" << decid << ")";
  if (!bound.empty()) os << "; " << (spec.kind == ModelKind::Matern ? "" : "sufficient ") << "bound |rho| <= " << bound;
  if (!where.empty()) os << ", infimum " << where;
  if (!witness.empty()) os << "; spectral inequality fails at u = " << witness;
  os << ".\n\n";
  for (const auto& [k, v] : a.fields) os << k << " = " << v << '\n';
  out.finish();
  return a.exit_code;
}

inline int cmd_curve(const RunConfig& cfg) {
  const auto spec = detail::load_model(cfg.model_path);
  if (spec.kind != ModelKind::Stable && spec.kind != ModelKind::Cauchy) {
    throw ParseError("curve supports the stable and cauchy kinds only", 0);
  }
  if (cfg.sweeps.empty() || cfg.sweeps.size() > 2) throw ParseError("curve needs one or two --sweep entries", 0);
  std::vector<std::string> names;
  std::vector<detail::Range> ranges;
  for (const auto& s : cfg.sweeps) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw ParseError("sweep: expected name=lo:hi:steps, got '" + s + "'", 0);
    const std::string name = s.substr(0, eq);
    if (name == "rho") throw ParseError("sweep: rho is the output of the curve and cannot be swept", 0);
    if (!spec.has(name) || name == "sigma1" || name == "sigma2" || name.rfind("nugget", 0) == 0 ||
        name.rfind("mean", 0) == 0) {
      throw ParseError("sweep: '" + name + "' is not a correlation parameter of this model", 0);
    }
    names.push_back(name);
    ranges.push_back(detail::parse_range(s.substr(eq + 1), "sweep " + name));
  }
  if (names.size() == 2 && names[0] == names[1]) throw ParseError("sweep: parameter given twice", 0);

  // Everything is computed before the output is opened, so a bad sweep point leaves no partial file.
  const Dimension dim(cfg.dim);
  std::ostringstream body;
  const int outer = ranges[0].steps;
  const int inner = names.size() == 2 ? ranges[1].steps : 1;
  for (int i = 0; i < outer; ++i) {
    for (int j = 0; j < inner; ++j) {
      ModelSpec s = spec;
      s.set(names[0], ranges[0].at(i));
      if (names.size() == 2) s.set(names[1], ranges[1].at(j));
      const ValidityReport rep =
          s.kind == ModelKind::Stable ? max_rho_stable(s.stable(), dim) : max_rho_cauchy(s.cauchy(), dim);
      body << detail::fmt(s.get(names[0])) << ',';
      if (names.size() == 2) body << detail::fmt(s.get(names[1])) << ',';
      const bool zero = rep.decidability != Decidability::SufficientBound;
      body << detail::fmt(rep.rho_bound) << ',' << detail::fmt(rep.rho_bound_raw) << ',' << (zero ? 1 : 0) << ','
           << to_string(rep.decidability) << '\n';
    }
  }
  detail::Output out(cfg.out_path);
  auto& os = out.stream();
  for (const auto& n : names) os << n << ',';
  os << "rho_bound,rho_bound_raw,zero_infimum,decidability\n" << body.str();
  out.finish();
  return kValid;
}

inline int cmd_spectral(const RunConfig& cfg) {
  const auto spec = detail::load_model(cfg.model_path);
  if (spec.kind == ModelKind::Lmc) throw ParseError("spectral does not support the lmc kind", 0);
  if (cfg.points < 1 || !(cfg.umax > 0.0)) throw ParseError("spectral: need --points >= 1 and --umax > 0", 0);
  const Dimension dim(cfg.dim);
  if (dim.value() == 2) throw ParseError("spectral densities are available for n = 1 and n = 3", 0);
  const auto model = *spec.covariance().bivariate();
  std::vector<double> grid(static_cast<std::size_t>(cfg.points));
  for (int i = 0; i < cfg.points; ++i) grid[static_cast<std::size_t>(i)] = cfg.umax * (i + 1) / cfg.points;
  const auto profile = spectral_profile(model, dim, grid);
  detail::Output out(cfg.out_path);
  write_csv(profile, out.stream());
  out.finish();
  return kValid;
}

inline int cmd_simulate(const RunConfig& cfg) {
  const auto spec = detail::load_model(cfg.model_path);
  FieldSample rows;
  if (!cfg.points_path.empty()) {
    if (!cfg.grid.empty()) throw ParseError("give either --grid or --points, not both", 0);
    auto pts = detail::load_sample(cfg.points_path, {false, false}, "points");
    rows = pts.component.empty() ? both_components(pts.points) : pts;
    rows.value.clear();
  } else {
    if (cfg.grid.empty()) throw ParseError("simulate needs --grid or --points", 0);
    if (cfg.dim < 1 || cfg.dim > 3) throw ParseError("dimension must be 1, 2 or 3", 0);
    const auto r = detail::parse_range(cfg.grid, "grid");
    PointSet ps;
    ps.dim = cfg.dim;
    const int ny = cfg.dim >= 2 ? r.steps : 1, nz = cfg.dim >= 3 ? r.steps : 1;
    for (int i = 0; i < r.steps; ++i) {
      for (int j = 0; j < ny; ++j) {
        for (int k = 0; k < nz; ++k) {
          ps.add({r.at(i), cfg.dim >= 2 ? r.at(j) : 0.0, cfg.dim >= 3 ? r.at(k) : 0.0});
        }
      }
    }
    rows = both_components(ps);
  }
  SimulationOptions opt;
  opt.nugget = spec.nuggets();
  auto result = simulate(spec.covariance(), rows, cfg.seed, opt);
  if (const auto mu = spec.means()) {
    for (std::size_t i = 0; i < result.sample.size(); ++i) {
      result.sample.value[i] += (*mu)[static_cast<std::size_t>(result.sample.component[i])];
    }
  }
  if (cfg.verbose && result.jitter > 0.0) std::cerr << "jitter " << detail::fmt(result.jitter) << " was needed\n";
  detail::Output out(cfg.out_path);
  write_sample(out.stream(), result.sample);
  out.finish();
  return kValid;
}

inline int cmd_fit(const RunConfig& cfg) {
  auto data = detail::load_sample(cfg.data_path, {}, "data");
  detail::apply_transform(data, cfg.transform);
  const auto kind = parse_model_kind(cfg.kind);
  if (!kind || *kind == ModelKind::Spherical) throw ParseError("fit: unsupported kind '" + cfg.kind + "'", 0);
  if (cfg.nugget != "zero" && cfg.nugget != "free") throw ParseError("fit: --nugget must be zero or free", 0);
  FitOptions opt;
  opt.starts = cfg.starts;
  opt.seed = cfg.seed;
  opt.free_nugget = cfg.nugget == "free";
  opt.simplex.max_evaluations = cfg.max_evaluations;
  if (cfg.verbose) opt.log = [](const std::string& s) { std::cerr << s << '\n'; };
  const auto r = fit_ml(data, *kind, opt);

  detail::Output out(cfg.out_path);
  auto& os = out.stream();
  os << "# nll = " << detail::fmt(r.nll) << '\n'
     << "# aic = " << detail::fmt(r.aic) << '\n'
     << "# parameters = " << r.parameters << '\n'
     << "# converged = " << (r.converged ? "true" : "false") << '\n'
     << "# evaluations = " << r.evaluations << '\n'
     << "# loo_rmse1 = " << detail::fmt(r.loo_rmse[0]) << '\n'
     << "# loo_rmse2 = " << detail::fmt(r.loo_rmse[1]) << '\n'
     << "# loo_score = " << detail::fmt(r.loo_score) << '\n';
  write_model(os, r.model);
  out.finish();
  return kValid;
}

inline int cmd_krige(const RunConfig& cfg) {
  const auto spec = detail::load_model(cfg.model_path);
  auto data = detail::load_sample(cfg.data_path, {}, "data");
  detail::apply_transform(data, cfg.transform);
  const auto targets = detail::load_sample(cfg.targets_path, {false, false}, "targets");
  if (cfg.component != 1 && cfg.component != 2) throw ParseError("--component must be 1 or 2", 0);
  if (targets.points.dim != data.points.dim) throw ParseError("targets and data differ in dimension", 0);
  const auto model = spec.covariance();
  const auto nugget = spec.nuggets();
  const auto means = spec.means() ? *spec.means() : gls_means(model, data, nugget);
  const auto k = cokrige(model, data, targets.points, cfg.component - 1, means, nugget);

  detail::Output out(cfg.out_path);
  auto& os = out.stream();
  const char* names[3] = {"x", "y", "z"};
  for (int d = 0; d < targets.points.dim; ++d) os << names[d] << ',';
  os << "prediction,variance\n";
  for (std::size_t t = 0; t < targets.size(); ++t) {
    for (int d = 0; d < targets.points.dim; ++d) os << detail::fmt(targets.points.coords[t][d]) << ',';
    os << detail::fmt(k.prediction[t]) << ',' << detail::fmt(k.variance[t]) << '\n';
  }
  out.finish();
  return kValid;
}

/// Dispatch with error-to-exit-code mapping; messages go to `err`.
inline int run(const RunConfig& cfg, std::ostream& err = std::cerr) {
  try {
    if (cfg.subcommand == "validate") return cmd_validate(cfg);
    if (cfg.subcommand == "curve") return cmd_curve(cfg);
    if (cfg.subcommand == "spectral") return cmd_spectral(cfg);
    if (cfg.subcommand == "simulate") return cmd_simulate(cfg);
    if (cfg.subcommand == "fit") return cmd_fit(cfg);
    if (cfg.subcommand == "krige") return cmd_krige(cfg);
    err << "error: unknown subcommand '" << cfg.subcommand << "'\n";
    return kBadInput;
  } catch (const FileError& e) {
    err << "error: " << e.what() << '\n';
    return kFileError;
  } catch (const ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kBadInput;
  } catch (const ParameterError& e) {
    err << "error: " << e.what() << '\n';
    return kBadInput;
  } catch (const DegenerateInput& e) {
    err << "error: " << e.what() << '\n';
    return kBadInput;
  } catch (const std::runtime_error& e) {
    err << "error: " << e.what() << '\n';
    return kNumericalError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kNumericalError;
  }
}

}  // namespace bivcov::cli
