#pragma once

// Flat key-value model files, one `name = value` per line:
//
//   kind = stable
//   sigma1 = 1
//   rho = 0.5
//   alpha11 = 0.2
//   ...
//
// '#' starts a comment. Besides the bivariate kinds (stable, cauchy, spherical, matern)
// there is an `lmc` kind with keys b1_11, b1_12, b1_22, b2_11, b2_12, b2_22, s1, s2 and
// optional alpha1, alpha2 (stable structures, default 1). Every kind accepts the optional
// fitting-layer keys nugget1, nugget2, mean1, mean2.

#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "bivcov/bimodels.hpp"
#include "bivcov/errors.hpp"

namespace bivcov {

enum class ModelKind { Stable, Cauchy, Spherical, Matern, Lmc };

inline const char* to_string(ModelKind k) {
  switch (k) {
    case ModelKind::Stable: return "stable";
    case ModelKind::Cauchy: return "cauchy";
    case ModelKind::Spherical: return "spherical";
    case ModelKind::Matern: return "matern";
    case ModelKind::Lmc: return "lmc";
  }
  return "?";
}

inline std::optional<ModelKind> parse_model_kind(const std::string& s) {
  for (auto k : {ModelKind::Stable, ModelKind::Cauchy, ModelKind::Spherical, ModelKind::Matern, ModelKind::Lmc}) {
    if (s == to_string(k)) return k;
  }
  return std::nullopt;
}

/// Either member of the two model classes, with a uniform cov(i, j, r).
class CovarianceModel {
 public:
  CovarianceModel(BivariateModel m) : m_(std::move(m)) {}  // NOLINT(google-explicit-constructor)
  CovarianceModel(LmcBivariate m) : m_(std::move(m)) {}    // NOLINT(google-explicit-constructor)

  double cov(int i, int j, double r) const {
    return std::visit([&](const auto& m) { return m.cov(i, j, r); }, m_);
  }
  const BivariateModel* bivariate() const { return std::get_if<BivariateModel>(&m_); }
  const LmcBivariate* lmc() const { return std::get_if<LmcBivariate>(&m_); }

 private:
  std::variant<BivariateModel, LmcBivariate> m_;
};

namespace detail {

inline const std::vector<std::string>& required_keys(ModelKind k) {
  static const std::vector<std::string> stable{"sigma1", "sigma2", "rho", "alpha11", "alpha22", "alpha12",
                                               "s11", "s22", "s12"};
  static const std::vector<std::string> cauchy{"sigma1", "sigma2", "rho", "alpha11", "alpha22", "alpha12",
                                               "beta11", "beta22", "beta12", "s11", "s22", "s12"};
  static const std::vector<std::string> spherical{"sigma1", "sigma2", "rho", "s11", "s22", "s12"};
  static const std::vector<std::string> matern{"sigma1", "sigma2", "rho", "nu1", "nu2", "nu12",
                                               "s11", "s22", "s12"};
  static const std::vector<std::string> lmc{"b1_11", "b1_12", "b1_22", "b2_11", "b2_12", "b2_22", "s1", "s2"};
  switch (k) {
    case ModelKind::Stable: return stable;
    case ModelKind::Cauchy: return cauchy;
    case ModelKind::Spherical: return spherical;
    case ModelKind::Matern: return matern;
    case ModelKind::Lmc: return lmc;
  }
  return stable;
}

inline const std::vector<std::string>& optional_keys(ModelKind k) {
  static const std::vector<std::string> common{"nugget1", "nugget2", "mean1", "mean2"};
  static const std::vector<std::string> lmc{"alpha1", "alpha2", "nugget1", "nugget2", "mean1", "mean2"};
  return k == ModelKind::Lmc ? lmc : common;
}

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline bool is_known_key(ModelKind k, const std::string& key) {
  for (const auto& v : required_keys(k)) if (v == key) return true;
  for (const auto& v : optional_keys(k)) if (v == key) return true;
  return false;
}

}  // namespace detail

struct ModelSpec {
  ModelKind kind = ModelKind::Stable;
  std::map<std::string, double> values;

  bool has(const std::string& key) const { return values.count(key) > 0; }

  double get(const std::string& key) const {
    auto it = values.find(key);
    if (it == values.end()) throw ParseError(std::string("missing key '") + key + "' for kind " + to_string(kind), 0);
    return it->second;
  }
  double get_or(const std::string& key, double fallback) const {
    auto it = values.find(key);
    return it == values.end() ? fallback : it->second;
  }

  /// Sets a known key; throws ParameterError for keys the kind does not have.
  void set(const std::string& key, double value) {
    if (!detail::is_known_key(kind, key)) {
      throw ParameterError(std::string("kind ") + to_string(kind) + " has no parameter '" + key + "'");
    }
    values[key] = value;
  }

  StableBivariate stable() const {
    require(ModelKind::Stable);
    StableBivariate m{get("sigma1"), get("sigma2"), get("rho"), get("alpha11"), get("alpha22"),
                      get("alpha12"), get("s11"), get("s22"), get("s12")};
    m.validate();
    return m;
  }
  CauchyBivariate cauchy() const {
    require(ModelKind::Cauchy);
    CauchyBivariate m{get("sigma1"), get("sigma2"), get("rho"), get("alpha11"), get("alpha22"), get("alpha12"),
                      get("beta11"), get("beta22"), get("beta12"), get("s11"), get("s22"), get("s12")};
    m.validate();
    return m;
  }
  SphericalBivariate spherical() const {
    require(ModelKind::Spherical);
    SphericalBivariate m{get("sigma1"), get("sigma2"), get("rho"), get("s11"), get("s22"), get("s12")};
    m.validate();
    return m;
  }
  MaternBivariate matern() const {
    require(ModelKind::Matern);
    return {get("sigma1"), get("sigma2"), get("rho"), get("nu1"), get("nu2"), get("nu12"),
            get("s11"), get("s22"), get("s12")};
  }
  LmcBivariate lmc() const {
    require(ModelKind::Lmc);
    Matrix2 b1, b2;
    b1 << get("b1_11"), get("b1_12"), get("b1_12"), get("b1_22");
    b2 << get("b2_11"), get("b2_12"), get("b2_12"), get("b2_22");
    return LmcBivariate(b1, CorrelationFamily::stable(get_or("alpha1", 1.0), get("s1")), b2,
                        CorrelationFamily::stable(get_or("alpha2", 1.0), get("s2")));
  }

  CovarianceModel covariance() const {
    switch (kind) {
      case ModelKind::Stable: return stable().model();
      case ModelKind::Cauchy: return cauchy().model();
      case ModelKind::Spherical: return spherical().model();
      case ModelKind::Matern: return matern().model();
      case ModelKind::Lmc: return lmc();
    }
    throw ParameterError("unknown model kind");
  }

  std::array<double, 2> nuggets() const { return {get_or("nugget1", 0.0), get_or("nugget2", 0.0)}; }

  std::optional<std::array<double, 2>> means() const {
    if (has("mean1") != has("mean2")) throw ParseError("mean1 and mean2 must be given together", 0);
    if (!has("mean1")) return std::nullopt;
    return std::array<double, 2>{get("mean1"), get("mean2")};
  }

 private:
  void require(ModelKind k) const {
    if (kind != k) {
      throw ParameterError(std::string("model is of kind ") + to_string(kind) + ", not " + to_string(k));
    }
  }
};

inline ModelSpec to_spec(const StableBivariate& m) {
  return {ModelKind::Stable,
          {{"sigma1", m.sigma1}, {"sigma2", m.sigma2}, {"rho", m.rho}, {"alpha11", m.alpha11},
           {"alpha22", m.alpha22}, {"alpha12", m.alpha12}, {"s11", m.s11}, {"s22", m.s22}, {"s12", m.s12}}};
}
inline ModelSpec to_spec(const CauchyBivariate& m) {
  return {ModelKind::Cauchy,
          {{"sigma1", m.sigma1}, {"sigma2", m.sigma2}, {"rho", m.rho}, {"alpha11", m.alpha11},
           {"alpha22", m.alpha22}, {"alpha12", m.alpha12}, {"beta11", m.beta11}, {"beta22", m.beta22},
           {"beta12", m.beta12}, {"s11", m.s11}, {"s22", m.s22}, {"s12", m.s12}}};
}
inline ModelSpec to_spec(const SphericalBivariate& m) {
  return {ModelKind::Spherical,
          {{"sigma1", m.sigma1}, {"sigma2", m.sigma2}, {"rho", m.rho}, {"s11", m.s11}, {"s22", m.s22},
           {"s12", m.s12}}};
}
inline ModelSpec to_spec(const MaternBivariate& m) {
  return {ModelKind::Matern,
          {{"sigma1", m.sigma1}, {"sigma2", m.sigma2}, {"rho", m.rho}, {"nu1", m.nu1}, {"nu2", m.nu2},
           {"nu12", m.nu12}, {"s11", m.s11}, {"s22", m.s22}, {"s12", m.s12}}};
}
/// LMC with stable structures only; the exponents are written when they differ from 1.
inline ModelSpec to_spec(const LmcBivariate& m) {
  const auto& p1 = std::get<StableParams>(m.psi1().params());
  const auto& p2 = std::get<StableParams>(m.psi2().params());
  ModelSpec spec{ModelKind::Lmc,
                 {{"b1_11", m.b1()(0, 0)}, {"b1_12", m.b1()(0, 1)}, {"b1_22", m.b1()(1, 1)},
                  {"b2_11", m.b2()(0, 0)}, {"b2_12", m.b2()(0, 1)}, {"b2_22", m.b2()(1, 1)},
                  {"s1", p1.scale}, {"s2", p2.scale}}};
  if (p1.alpha != 1.0) spec.values["alpha1"] = p1.alpha;
  if (p2.alpha != 1.0) spec.values["alpha2"] = p2.alpha;
  return spec;
}

inline ModelSpec parse_model(std::istream& in) {
  ModelSpec spec;
  std::optional<ModelKind> kind;
  std::map<std::string, std::size_t> seen;
  std::vector<std::pair<std::string, std::size_t>> pending;  // keys checked once the kind is known
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto hash = raw.find('#');
    const std::string line = detail::trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError("expected 'name = value'", line_no);
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string value = detail::trim(line.substr(eq + 1));
    if (key.empty()) throw ParseError("empty key", line_no);
    if (value.empty()) throw ParseError("missing value for '" + key + "'", line_no);
    if (seen.count(key)) {
      throw ParseError("duplicate key '" + key + "' (first on line " + std::to_string(seen[key]) + ")", line_no);
    }
    seen[key] = line_no;
    if (key == "kind") {
      kind = parse_model_kind(value);
      if (!kind) throw ParseError("unknown kind '" + value + "'", line_no);
      continue;
    }
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(value, &used);
    } catch (const std::exception&) {
      throw ParseError("value of '" + key + "' is not a number: '" + value + "'", line_no);
    }
    if (used != value.size()) throw ParseError("trailing characters after value of '" + key + "'", line_no);
    if (!std::isfinite(v)) throw ParseError("value of '" + key + "' is not finite", line_no);
    spec.values[key] = v;
    pending.emplace_back(key, line_no);
  }
  if (!kind) throw ParseError("missing 'kind'", 0);
  spec.kind = *kind;
  for (const auto& [key, ln] : pending) {
    if (!detail::is_known_key(spec.kind, key)) {
      throw ParseError("unknown key '" + key + "' for kind " + to_string(spec.kind), ln);
    }
  }
  for (const auto& key : detail::required_keys(spec.kind)) {
    if (!spec.has(key)) throw ParseError("missing key '" + key + "' for kind " + to_string(spec.kind), 0);
  }
  return spec;
}

inline ModelSpec parse_model(const std::string& text) {
  std::istringstream in(text);
  return parse_model(in);
}

inline ModelSpec read_model_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open model file '" + path + "'");
  return parse_model(in);
}

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

/// Canonical order: kind, required keys, optional keys present.
inline void write_model(std::ostream& out, const ModelSpec& spec) {
  out << "kind = " << to_string(spec.kind) << '\n';
  for (const auto& key : detail::required_keys(spec.kind)) out << key << " = " << format_double(spec.get(key)) << '\n';
  for (const auto& key : detail::optional_keys(spec.kind)) {
    if (spec.has(key)) out << key << " = " << format_double(spec.get(key)) << '\n';
  }
}

inline std::string to_text(const ModelSpec& spec) {
  std::ostringstream out;
  write_model(out, spec);
  return out.str();
}

}  // namespace bivcov
