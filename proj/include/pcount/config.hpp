#pragma once

// JSON run configuration shared by the command-line tool and the tests.
// Unknown keys are rejected so typos surface as config errors.

#include "pcount/errors.hpp"
#include "pcount/estimate.hpp"
#include "pcount/hermite.hpp"
#include "pcount/latent.hpp"
#include "pcount/marginals.hpp"

#include "json.hpp"

#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace pcount {

using Json = nlohmann::ordered_json;

struct ModelConfig {
  Family family = Family::Poisson;
  LatentKind latent = LatentKind::WN;
  int period = 1;
  /// Slot name -> value for the values the config supplies.
  std::map<std::string, double> values;

  ModelLayout layout() const { return ModelLayout(family, latent, period); }

  bool complete() const {
    for (const auto& name : layout().names())
      if (!values.count(name)) return false;
    return true;
  }

  std::vector<double> vector() const {
    std::vector<double> x;
    for (const auto& name : layout().names()) {
      const auto it = values.find(name);
      if (it == values.end()) throw ConfigError("model parameter '" + name + "' is not set");
      x.push_back(it->second);
    }
    return x;
  }

  std::pair<MarginalSpec, LatentSpec> specs() const {
    try {
      return layout().decode(vector());
    } catch (const InvalidParameter& e) {
      throw ConfigError(std::string("invalid model: ") + e.what());
    }
  }
};

struct FitConfig {
  std::size_t particles = 500;
  std::uint64_t crn_seed = 1;
  std::size_t final_particles = 5000;
  int restarts = 3;
  std::uint64_t restart_seed = 12345;
  int max_iterations = 200;
  double ftol = 1e-6;
  double gtol = 1e-5;
  bool standard_errors = true;

  FitOptions options() const {
    FitOptions o;
    o.particles = particles;
    o.crn_seed = crn_seed;
    o.final_particles = final_particles;
    o.restarts = restarts;
    o.restart_seed = restart_seed;
    o.standard_errors = standard_errors;
    o.optimizer.max_iterations = max_iterations;
    o.optimizer.ftol = ftol;
    o.optimizer.gtol = gtol;
    return o;
  }
};

struct RunConfig {
  ModelConfig model;
  std::string data;
  std::string out = "out";
  bool svg = false;
  struct {
    std::size_t n = 300;
    std::uint64_t seed = 1;
  } simulate;
  FitConfig fit;
  struct {
    std::size_t particles = 500;
    std::uint64_t crn_seed = 1;
    int bins = 10;
    int max_lag = 20;
  } pit;
  struct {
    int season1 = 1;
    int season2 = 1;
    int order = kDefaultHermiteOrder;
    int grid = 41;
  } link;
  struct {
    int replicates = 20;
    std::size_t n = 300;
    std::uint64_t seed = 1;
    int workers = 1;
  } study;
};

namespace detail {

inline void check_keys(const Json& obj, const std::string& where, const std::set<std::string>& allowed) {
  if (!obj.is_object()) throw ConfigError(where + ": expected an object");
  for (const auto& item : obj.items())
    if (!allowed.count(item.key()))
      throw ConfigError(where + ": unknown key '" + item.key() + "'");
}

inline double get_number(const Json& v, const std::string& where) {
  if (!v.is_number()) throw ConfigError(where + ": expected a number");
  return v.get<double>();
}

template <class Int>
Int get_integer(const Json& v, const std::string& where, long long min_value) {
  if (!v.is_number_integer()) throw ConfigError(where + ": expected an integer");
  const auto value = v.get<long long>();
  if (value < min_value) throw ConfigError(where + ": must be >= " + std::to_string(min_value));
  return static_cast<Int>(value);
}

inline std::uint64_t get_seed(const Json& v, const std::string& where) {
  if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0))
    throw ConfigError(where + ": expected a nonnegative integer seed");
  return v.get<std::uint64_t>();
}

// A curve is either a number (constant) or {level, amplitude, phase}.
inline void read_curve(const Json& v, const std::string& name, const std::string& where, int period,
                       std::map<std::string, double>& values) {
  if (v.is_number()) {
    values[name + ".level"] = v.get<double>();
    if (period > 1) {
      values[name + ".amplitude"] = 0.0;
      values[name + ".phase"] = 0.0;
    }
    return;
  }
  check_keys(v, where, {"level", "amplitude", "phase"});
  for (const char* part : {"level", "amplitude", "phase"}) {
    if (!v.contains(part)) continue;
    const double x = get_number(v.at(part), where + "." + part);
    if (period == 1 && std::string(part) != "level") {
      if (x != 0.0 && std::string(part) == "amplitude")
        throw ConfigError(where + ".amplitude: must be 0 when period is 1");
      continue;
    }
    values[name + "." + part] = x;
  }
}

inline Json curve_json(const std::map<std::string, double>& values, const std::string& name, int period) {
  Json c = Json::object();
  for (const char* part : {"level", "amplitude", "phase"}) {
    if (period == 1 && std::string(part) != "level") continue;
    const auto it = values.find(name + "." + part);
    if (it != values.end()) c[part] = it->second;
  }
  if (period == 1 && c.contains("level")) return c["level"];
  return c;
}

}  // namespace detail

inline ModelConfig parse_model(const Json& j) {
  detail::check_keys(j, "model", {"period", "marginal", "latent"});
  ModelConfig m;
  if (!j.contains("period")) throw ConfigError("model.period is required");
  m.period = detail::get_integer<int>(j.at("period"), "model.period", 1);
  if (!j.contains("marginal")) throw ConfigError("model.marginal is required");
  const Json& mj = j.at("marginal");
  if (!mj.is_object() || !mj.contains("family") || !mj.at("family").is_string())
    throw ConfigError("model.marginal.family is required");
  m.family = parse_family(mj.at("family").get<std::string>());
  {
    std::set<std::string> allowed{"family"};
    for (const auto& c : curve_names(m.family)) allowed.insert(c);
    detail::check_keys(mj, "model.marginal", allowed);
    for (const auto& c : curve_names(m.family))
      if (mj.contains(c)) detail::read_curve(mj.at(c), c, "model.marginal." + c, m.period, m.values);
  }
  if (!j.contains("latent")) throw ConfigError("model.latent is required");
  const Json& lj = j.at("latent");
  if (!lj.is_object() || !lj.contains("kind") || !lj.at("kind").is_string())
    throw ConfigError("model.latent.kind is required");
  m.latent = parse_latent_kind(lj.at("kind").get<std::string>());
  switch (m.latent) {
    case LatentKind::WN: detail::check_keys(lj, "model.latent", {"kind"}); break;
    case LatentKind::AR1:
      detail::check_keys(lj, "model.latent", {"kind", "phi"});
      if (lj.contains("phi")) m.values["phi"] = detail::get_number(lj.at("phi"), "model.latent.phi");
      break;
    case LatentKind::PAR1:
      detail::check_keys(lj, "model.latent", {"kind", "phi"});
      if (lj.contains("phi")) detail::read_curve(lj.at("phi"), "phi", "model.latent.phi", m.period, m.values);
      break;
    case LatentKind::SAR1:
      detail::check_keys(lj, "model.latent", {"kind", "phi", "alpha"});
      for (const char* k : {"phi", "alpha"})
        if (lj.contains(k)) m.values[k] = detail::get_number(lj.at(k), std::string("model.latent.") + k);
      break;
  }
  return m;
}

inline Json model_json(const ModelConfig& m) {
  Json j;
  j["period"] = m.period;
  Json mj;
  mj["family"] = std::string(to_string(m.family));
  for (const auto& c : curve_names(m.family)) {
    Json cj = detail::curve_json(m.values, c, m.period);
    if (!(cj.is_object() && cj.empty())) mj[c] = cj;
  }
  j["marginal"] = mj;
  Json lj;
  lj["kind"] = std::string(to_string(m.latent));
  switch (m.latent) {
    case LatentKind::WN: break;
    case LatentKind::AR1:
      if (m.values.count("phi")) lj["phi"] = m.values.at("phi");
      break;
    case LatentKind::PAR1: {
      Json cj = detail::curve_json(m.values, "phi", m.period);
      if (!(cj.is_object() && cj.empty())) lj["phi"] = cj;
      break;
    }
    case LatentKind::SAR1:
      for (const char* k : {"phi", "alpha"})
        if (m.values.count(k)) lj[k] = m.values.at(k);
      break;
  }
  j["latent"] = lj;
  return j;
}

/// Model values from a parameter vector in layout order.
inline ModelConfig model_from_vector(const ModelLayout& layout, const std::vector<double>& x) {
  ModelConfig m;
  m.family = layout.family();
  m.latent = layout.latent();
  m.period = layout.period();
  const auto names = layout.names();
  for (std::size_t i = 0; i < names.size(); ++i) m.values[names[i]] = x.at(i);
  return m;
}

inline RunConfig parse_config(const Json& j) {
  using namespace detail;
  check_keys(j, "config", {"model", "data", "out", "svg", "simulate", "fit", "pit", "link", "study"});
  RunConfig c;
  if (!j.contains("model")) throw ConfigError("config: a model block is required");
  c.model = parse_model(j.at("model"));
  if (j.contains("data")) {
    if (!j.at("data").is_string()) throw ConfigError("data: expected a path string");
    c.data = j.at("data").get<std::string>();
  }
  if (j.contains("out")) {
    if (!j.at("out").is_string()) throw ConfigError("out: expected a path string");
    c.out = j.at("out").get<std::string>();
  }
  if (j.contains("svg")) {
    if (!j.at("svg").is_boolean()) throw ConfigError("svg: expected true or false");
    c.svg = j.at("svg").get<bool>();
  }
  if (j.contains("simulate")) {
    const Json& s = j.at("simulate");
    check_keys(s, "simulate", {"n", "seed"});
    if (s.contains("n")) c.simulate.n = get_integer<std::size_t>(s.at("n"), "simulate.n", 1);
    if (s.contains("seed")) c.simulate.seed = get_seed(s.at("seed"), "simulate.seed");
  }
  if (j.contains("fit")) {
    const Json& f = j.at("fit");
    check_keys(f, "fit", {"particles", "crn_seed", "final_particles", "restarts", "restart_seed",
                          "max_iterations", "ftol", "gtol", "standard_errors"});
    if (f.contains("particles")) c.fit.particles = get_integer<std::size_t>(f.at("particles"), "fit.particles", 1);
    if (f.contains("crn_seed")) c.fit.crn_seed = get_seed(f.at("crn_seed"), "fit.crn_seed");
    if (f.contains("final_particles"))
      c.fit.final_particles = get_integer<std::size_t>(f.at("final_particles"), "fit.final_particles", 0);
    if (f.contains("restarts")) c.fit.restarts = get_integer<int>(f.at("restarts"), "fit.restarts", 0);
    if (f.contains("restart_seed")) c.fit.restart_seed = get_seed(f.at("restart_seed"), "fit.restart_seed");
    if (f.contains("max_iterations"))
      c.fit.max_iterations = get_integer<int>(f.at("max_iterations"), "fit.max_iterations", 1);
    if (f.contains("ftol")) c.fit.ftol = get_number(f.at("ftol"), "fit.ftol");
    if (f.contains("gtol")) c.fit.gtol = get_number(f.at("gtol"), "fit.gtol");
    if (f.contains("standard_errors")) {
      if (!f.at("standard_errors").is_boolean()) throw ConfigError("fit.standard_errors: expected true or false");
      c.fit.standard_errors = f.at("standard_errors").get<bool>();
    }
  }
  if (j.contains("pit")) {
    const Json& p = j.at("pit");
    check_keys(p, "pit", {"particles", "crn_seed", "bins", "max_lag"});
    if (p.contains("particles")) c.pit.particles = get_integer<std::size_t>(p.at("particles"), "pit.particles", 1);
    if (p.contains("crn_seed")) c.pit.crn_seed = get_seed(p.at("crn_seed"), "pit.crn_seed");
    if (p.contains("bins")) c.pit.bins = get_integer<int>(p.at("bins"), "pit.bins", 1);
    if (p.contains("max_lag")) c.pit.max_lag = get_integer<int>(p.at("max_lag"), "pit.max_lag", 0);
  }
  if (j.contains("link")) {
    const Json& l = j.at("link");
    check_keys(l, "link", {"season1", "season2", "order", "grid"});
    if (l.contains("season1")) c.link.season1 = get_integer<int>(l.at("season1"), "link.season1", 1);
    if (l.contains("season2")) c.link.season2 = get_integer<int>(l.at("season2"), "link.season2", 1);
    if (l.contains("order")) c.link.order = get_integer<int>(l.at("order"), "link.order", 1);
    if (l.contains("grid")) c.link.grid = get_integer<int>(l.at("grid"), "link.grid", 2);
    if (c.link.season1 > c.model.period || c.link.season2 > c.model.period)
      throw ConfigError("link: seasons must lie in 1..period");
  }
  if (j.contains("study")) {
    const Json& s = j.at("study");
    check_keys(s, "study", {"replicates", "n", "seed", "workers"});
    if (s.contains("replicates")) c.study.replicates = get_integer<int>(s.at("replicates"), "study.replicates", 1);
    if (s.contains("n")) c.study.n = get_integer<std::size_t>(s.at("n"), "study.n", 2);
    if (s.contains("seed")) c.study.seed = get_seed(s.at("seed"), "study.seed");
    if (s.contains("workers")) c.study.workers = get_integer<int>(s.at("workers"), "study.workers", 1);
  }
  return c;
}

/// Parses JSON text; syntax errors report the line and column.
inline Json parse_json_text(const std::string& text, const std::string& source) {
  try {
    return Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i + 1 < e.byte && i < text.size(); ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    throw ConfigError(source + ":" + std::to_string(line) + ":" + std::to_string(col) + ": invalid JSON");
  }
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  const Json j = parse_json_text(ss.str(), path);
  try {
    return parse_config(j);
  } catch (const ConfigError& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

inline Json config_json(const RunConfig& c) {
  Json j;
  j["model"] = model_json(c.model);
  if (!c.data.empty()) j["data"] = c.data;
  j["out"] = c.out;
  j["svg"] = c.svg;
  j["simulate"] = {{"n", c.simulate.n}, {"seed", c.simulate.seed}};
  j["fit"] = {{"particles", c.fit.particles},       {"crn_seed", c.fit.crn_seed},
              {"final_particles", c.fit.final_particles}, {"restarts", c.fit.restarts},
              {"restart_seed", c.fit.restart_seed}, {"max_iterations", c.fit.max_iterations},
              {"ftol", c.fit.ftol},                 {"gtol", c.fit.gtol},
              {"standard_errors", c.fit.standard_errors}};
  j["pit"] = {{"particles", c.pit.particles}, {"crn_seed", c.pit.crn_seed}, {"bins", c.pit.bins},
              {"max_lag", c.pit.max_lag}};
  j["link"] = {{"season1", c.link.season1}, {"season2", c.link.season2}, {"order", c.link.order},
               {"grid", c.link.grid}};
  j["study"] = {{"replicates", c.study.replicates}, {"n", c.study.n}, {"seed", c.study.seed},
                {"workers", c.study.workers}};
  return j;
}

/// Defaults with the Poisson / PAR(1) example model (T = 10).
inline RunConfig default_config() {
  RunConfig c;
  c.model.family = Family::Poisson;
  c.model.latent = LatentKind::PAR1;
  c.model.period = 10;
  c.model.values = {{"lambda.level", 10.0}, {"lambda.amplitude", 5.0}, {"lambda.phase", 5.0},
                    {"phi.level", 0.5},     {"phi.amplitude", 0.2},    {"phi.phase", 5.0}};
  return c;
}

}  // namespace pcount
