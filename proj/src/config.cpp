#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "subdyn/runner.hpp"

namespace subdyn {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

const std::vector<std::string> kTopKeys = {"scenario", "model", "order", "t_grid", "eta", "seed", "output_dir",
                                           "strict", "allow_large", "swap", "cnot", "turing", "verify"};
const std::vector<std::string> kModelKeys = {"kind", "omega0", "omega", "omega_j", "g", "lambda", "bath",
                                             "fock_cutoff", "bath_cutoff", "hermitian_variant"};
const std::vector<std::string> kBathKeys = {"omega_k", "g_k"};
const std::vector<std::string> kGridKeys = {"start", "end", "steps"};
const std::vector<std::string> kSwapKeys = {"t_sw", "homogeneity_tol", "branches"};
const std::vector<std::string> kCnotKeys = {"skew", "ambient_dim"};
const std::vector<std::string> kTuringKeys = {"n_tape", "skew", "head_index", "omega", "angles"};
const std::vector<std::string> kVerifyKeys = {"samples"};

void check_keys(const json& obj, const std::vector<std::string>& valid, const std::string& where) {
  if (!obj.is_object()) throw ValidationError("config: '" + where + "' must be an object");
  for (const auto& item : obj.items()) {
    if (std::find(valid.begin(), valid.end(), item.key()) != valid.end()) continue;
    std::string msg = "config: unknown key '" + item.key() + "' in " + where;
    const std::string near = nearest_key(item.key(), valid);
    if (!near.empty()) msg += " (did you mean '" + near + "'?)";
    throw ValidationError(msg);
  }
}

double get_number(const json& obj, const std::string& key, const std::string& where, double fallback) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_number()) throw ValidationError("config: '" + where + "." + key + "' must be a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) throw ValidationError("config: '" + where + "." + key + "' must be finite");
  return x;
}

std::uint64_t get_count(const json& obj, const std::string& key, const std::string& where, std::uint64_t fallback) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (v.is_number_unsigned()) return v.get<std::uint64_t>();
  if (v.is_number_integer() && v.get<std::int64_t>() >= 0) return static_cast<std::uint64_t>(v.get<std::int64_t>());
  throw ValidationError("config: '" + where + "." + key + "' must be a non-negative integer");
}

bool get_bool(const json& obj, const std::string& key, const std::string& where, bool fallback) {
  if (!obj.contains(key)) return fallback;
  if (!obj.at(key).is_boolean()) throw ValidationError("config: '" + where + "." + key + "' must be true or false");
  return obj.at(key).get<bool>();
}

std::string get_string(const json& obj, const std::string& key, const std::string& where, const std::string& fallback) {
  if (!obj.contains(key)) return fallback;
  if (!obj.at(key).is_string()) throw ValidationError("config: '" + where + "." + key + "' must be a string");
  return obj.at(key).get<std::string>();
}

// a complex number is written as a real or as [re, im]
cplx get_complex(const json& obj, const std::string& key, const std::string& where, cplx fallback) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (v.is_number()) return {v.get<double>(), 0.0};
  if (v.is_array() && v.size() == 2 && v[0].is_number() && v[1].is_number()) {
    return {v[0].get<double>(), v[1].get<double>()};
  }
  throw ValidationError("config: '" + where + "." + key + "' must be a number or [re, im]");
}

std::vector<double> get_numbers(const json& obj, const std::string& key, const std::string& where) {
  if (!obj.contains(key)) return {};
  const json& v = obj.at(key);
  if (!v.is_array()) throw ValidationError("config: '" + where + "." + key + "' must be an array of numbers");
  std::vector<double> out;
  for (const auto& x : v) {
    if (!x.is_number()) throw ValidationError("config: '" + where + "." + key + "' must be an array of numbers");
    out.push_back(x.get<double>());
  }
  return out;
}

ModelSpec parse_model(const json& obj) {
  check_keys(obj, kModelKeys, "model");
  if (!obj.contains("kind")) throw ValidationError("config: 'model.kind' is required (diagonal, triangular, general)");
  ModelSpec spec;
  spec.kind = model_kind_from_string(get_string(obj, "kind", "model", ""));
  spec.omega0 = get_number(obj, "omega0", "model", spec.omega0);
  spec.omega = get_number(obj, "omega", "model", spec.omega);
  spec.omega_j = get_numbers(obj, "omega_j", "model");
  spec.g = get_number(obj, "g", "model", spec.g);
  spec.lambda = get_number(obj, "lambda", "model", spec.lambda);
  spec.fock_cutoff = get_count(obj, "fock_cutoff", "model", spec.fock_cutoff);
  spec.bath_cutoff = get_count(obj, "bath_cutoff", "model", spec.bath_cutoff);
  spec.hermitian_variant = get_bool(obj, "hermitian_variant", "model", spec.hermitian_variant);
  if (obj.contains("bath")) {
    if (!obj.at("bath").is_array()) throw ValidationError("config: 'model.bath' must be an array");
    std::size_t k = 0;
    for (const auto& mode : obj.at("bath")) {
      const std::string where = "model.bath[" + std::to_string(k++) + "]";
      check_keys(mode, kBathKeys, where);
      BathMode b;
      b.omega_k = get_number(mode, "omega_k", where, b.omega_k);
      b.g_k = get_number(mode, "g_k", where, b.g_k);
      spec.bath.push_back(b);
    }
  }
  return spec;
}

Order parse_order(const json& v) {
  if (v.is_string()) return order_from_string(v.get<std::string>());
  if (v.is_number_integer()) return order_from_string(std::to_string(v.get<std::int64_t>()));
  throw ValidationError("config: 'order' must be \"exact\", 1 or 2");
}

ordered_json complex_json(cplx z) { return ordered_json::array({z.real(), z.imag()}); }

}  // namespace

std::size_t edit_distance(const std::string& a, const std::string& b) {
  std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

std::string nearest_key(const std::string& key, const std::vector<std::string>& candidates) {
  std::string best;
  std::size_t best_d = std::numeric_limits<std::size_t>::max();
  for (const auto& c : candidates) {
    const std::size_t d = edit_distance(key, c);
    if (d < best_d) {
      best_d = d;
      best = c;
    }
  }
  if (best_d > std::max<std::size_t>(2, key.size() / 2)) return {};
  return best;
}

std::string to_string(Scenario scenario) {
  switch (scenario) {
    case Scenario::Classify: return "classify";
    case Scenario::Evolve: return "evolve";
    case Scenario::SwapCalibrate: return "swap-calibrate";
    case Scenario::CnotDemo: return "cnot-demo";
    case Scenario::TuringDemo: return "turing-demo";
    case Scenario::Verify: return "verify";
  }
  return "unknown";
}

const std::vector<std::string>& scenario_names() {
  static const std::vector<std::string> names = {"classify",  "evolve",      "swap-calibrate",
                                                 "cnot-demo", "turing-demo", "verify"};
  return names;
}

Scenario scenario_from_string(const std::string& text) {
  const auto& names = scenario_names();
  for (std::size_t k = 0; k < names.size(); ++k) {
    if (names[k] == text) return static_cast<Scenario>(k);
  }
  std::string msg = "unknown scenario '" + text + "'";
  const std::string near = nearest_key(text, names);
  if (!near.empty()) msg += " (did you mean '" + near + "'?)";
  throw ValidationError(msg);
}

std::size_t ScenarioConfig::dimension_cap() const {
  return allow_large ? std::numeric_limits<std::size_t>::max() : kDefaultDimensionCap;
}

PerturbationOptions ScenarioConfig::perturbation() const {
  PerturbationOptions opts;
  opts.eta = eta;
  opts.strict = strict;
  return opts;
}

ScenarioConfig load_config(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("config: parse failure: ") + e.what());
  }
  check_keys(doc, kTopKeys, "config");

  ScenarioConfig cfg;
  cfg.scenario = scenario_from_string(get_string(doc, "scenario", "config", "classify"));
  if (doc.contains("model")) cfg.model = parse_model(doc.at("model"));
  if (doc.contains("order")) cfg.order = parse_order(doc.at("order"));
  cfg.eta = get_number(doc, "eta", "config", cfg.eta);
  cfg.seed = get_count(doc, "seed", "config", cfg.seed);
  cfg.output_dir = get_string(doc, "output_dir", "config", cfg.output_dir);
  cfg.strict = get_bool(doc, "strict", "config", cfg.strict);
  cfg.allow_large = get_bool(doc, "allow_large", "config", cfg.allow_large);

  if (doc.contains("t_grid")) {
    const json& g = doc.at("t_grid");
    check_keys(g, kGridKeys, "t_grid");
    cfg.t_grid.start = get_number(g, "start", "t_grid", cfg.t_grid.start);
    cfg.t_grid.end = get_number(g, "end", "t_grid", cfg.t_grid.end);
    cfg.t_grid.steps = get_count(g, "steps", "t_grid", cfg.t_grid.steps);
  }
  if (doc.contains("swap")) {
    const json& s = doc.at("swap");
    check_keys(s, kSwapKeys, "swap");
    cfg.swap.t_sw = get_number(s, "t_sw", "swap", cfg.swap.t_sw);
    cfg.swap.homogeneity_tol = get_number(s, "homogeneity_tol", "swap", cfg.swap.homogeneity_tol);
    cfg.swap.branches = static_cast<int>(get_count(s, "branches", "swap", 0));
  }
  if (doc.contains("cnot")) {
    const json& c = doc.at("cnot");
    check_keys(c, kCnotKeys, "cnot");
    cfg.cnot.skew = get_complex(c, "skew", "cnot", cfg.cnot.skew);
    cfg.cnot.ambient_dim = get_count(c, "ambient_dim", "cnot", cfg.cnot.ambient_dim);
  }
  if (doc.contains("turing")) {
    const json& t = doc.at("turing");
    check_keys(t, kTuringKeys, "turing");
    cfg.turing.n_tape = get_count(t, "n_tape", "turing", cfg.turing.n_tape);
    cfg.turing.skew = get_complex(t, "skew", "turing", cfg.turing.skew);
    cfg.turing.head_index = get_count(t, "head_index", "turing", cfg.turing.head_index);
    cfg.turing.omega = get_number(t, "omega", "turing", cfg.turing.omega);
    cfg.turing.angles = get_numbers(t, "angles", "turing");
  }
  if (doc.contains("verify")) {
    const json& v = doc.at("verify");
    check_keys(v, kVerifyKeys, "verify");
    cfg.verify.samples = get_count(v, "samples", "verify", cfg.verify.samples);
  }
  validate(cfg);
  return cfg;
}

ScenarioConfig load_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config file '" + path.string() + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return load_config(buffer.str());
}

void validate(const ScenarioConfig& cfg) {
  if (cfg.t_grid.end < cfg.t_grid.start) throw ValidationError("config: t_grid.end must be >= t_grid.start");
  if (cfg.t_grid.steps < 1) throw ValidationError("config: t_grid.steps must be >= 1");
  if (cfg.eta < 0.0) throw ValidationError("config: eta must be >= 0");
  if (cfg.swap.homogeneity_tol <= 0.0) throw ValidationError("config: swap.homogeneity_tol must be > 0");
  if (cfg.cnot.ambient_dim < 4 || cfg.cnot.ambient_dim > 64) {
    throw ValidationError("config: cnot.ambient_dim must lie in [4, 64]");
  }
  if (cfg.turing.n_tape > 10) throw ValidationError("config: turing.n_tape must be <= 10");
  if (cfg.turing.head_index > cfg.turing.n_tape) throw ValidationError("config: turing.head_index out of range");
  if (!cfg.turing.angles.empty() && cfg.turing.angles.size() != (std::size_t{1} << cfg.turing.n_tape)) {
    throw ValidationError("config: turing.angles needs one entry per tape configuration (2^n_tape)");
  }
  if (cfg.verify.samples < 1) throw ValidationError("config: verify.samples must be >= 1");
  const bool needs_model = cfg.scenario == Scenario::Classify || cfg.scenario == Scenario::Evolve ||
                           cfg.scenario == Scenario::SwapCalibrate || cfg.scenario == Scenario::Verify;
  if (needs_model && !cfg.model) {
    throw ValidationError("config: scenario '" + to_string(cfg.scenario) + "' requires a 'model' section");
  }
  if (cfg.model) validate(*cfg.model, cfg.dimension_cap());
}

ordered_json to_json(const ModelSpec& spec) {
  ordered_json m;
  m["kind"] = to_string(spec.kind);
  m["omega0"] = spec.omega0;
  m["omega"] = spec.omega;
  m["omega_j"] = spec.omega_j;
  m["g"] = spec.g;
  m["lambda"] = spec.lambda;
  ordered_json bath = ordered_json::array();
  for (const auto& b : spec.bath) bath.push_back({{"omega_k", b.omega_k}, {"g_k", b.g_k}});
  m["bath"] = bath;
  m["fock_cutoff"] = spec.fock_cutoff;
  m["bath_cutoff"] = spec.bath_cutoff;
  m["hermitian_variant"] = spec.hermitian_variant;
  return m;
}

ordered_json to_json(const ScenarioConfig& cfg) {
  ordered_json out;
  out["scenario"] = to_string(cfg.scenario);
  out["model"] = cfg.model ? to_json(*cfg.model) : ordered_json(nullptr);
  out["order"] = to_string(cfg.order);
  out["t_grid"] = {{"start", cfg.t_grid.start}, {"end", cfg.t_grid.end}, {"steps", cfg.t_grid.steps}};
  out["eta"] = cfg.eta;
  out["seed"] = cfg.seed;
  out["strict"] = cfg.strict;
  out["allow_large"] = cfg.allow_large;
  out["swap"] = {{"t_sw", cfg.swap.t_sw}, {"homogeneity_tol", cfg.swap.homogeneity_tol}, {"branches", cfg.swap.branches}};
  out["cnot"] = {{"skew", complex_json(cfg.cnot.skew)}, {"ambient_dim", cfg.cnot.ambient_dim}};
  out["turing"] = {{"n_tape", cfg.turing.n_tape},
                   {"skew", complex_json(cfg.turing.skew)},
                   {"head_index", cfg.turing.head_index},
                   {"omega", cfg.turing.omega},
                   {"angles", cfg.turing.angles}};
  out["verify"] = {{"samples", cfg.verify.samples}};
  return out;
}

}  // namespace subdyn
