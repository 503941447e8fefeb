#pragma once

// Scenario documents (strict JSON), CSV and SVG serialization, atomic file output.

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "ecolab/continuous.hpp"
#include "ecolab/core.hpp"
#include "ecolab/discrete.hpp"
#include "ecolab/epidemic.hpp"
#include "ecolab/selection.hpp"

namespace ecolab {

inline constexpr int schema_version = 1;

/// Malformed document text or structure (syntax, unknown field, wrong type).
class ParseError : public InvalidInput {
 public:
  using InvalidInput::InvalidInput;
};

struct EpidemicDocument {
  std::string name;
  GraphSpec graph;
  EpidemicKind model = EpidemicKind::SIS;
  double beta = 0.1;
  double gamma = 1.0;
  std::vector<std::size_t> initial_infected{0};
  double horizon = 200.0;
  double sample_dt = 1.0;
  std::size_t runs = 100;
  double beta_low = 0.0;
  double beta_high = 1.0;
  std::size_t bisections = 8;

  bool operator==(const EpidemicDocument&) const = default;
};

struct SelectionDocument {
  std::string name;
  SelectionState state;
  /// Gradients as M * means + offset.
  Mat3 natural_matrix{};
  Vec3 natural_offset{};
  Mat3 sexual_matrix{};
  Vec3 sexual_offset{};
  std::size_t steps = 100;

  bool operator==(const SelectionDocument&) const = default;
};

struct DiscreteDocument {
  std::string name;
  NBParams params;
  double host0 = 1.0;
  double parasitoid0 = 1.0;
  std::size_t generations = 50;
  double extinction_epsilon = 1e-9;

  bool operator==(const DiscreteDocument&) const = default;
};

struct MimicryDocument {
  std::string name;
  MimicryParams params;  // n_mimic unused; the grid below replaces it
  std::vector<double> n_mimic;

  bool operator==(const MimicryDocument&) const = default;
};

using ScenarioDocument = std::variant<Scenario, EpidemicDocument, SelectionDocument, DiscreteDocument, MimicryDocument>;

inline constexpr std::string_view valid_kinds = "community, epidemic, selection, discrete, mimicry";

namespace detail {

using ojson = nlohmann::ordered_json;

// Object reader that records which keys were consumed so leftovers can be
// reported as unknown fields.
class Fields {
 public:
  Fields(const ojson& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j.is_object()) throw ParseError(where() + ": expected an object");
  }

  const std::string& path() const { return path_; }

  const ojson* find(std::string_view key) {
    auto it = j_.find(std::string(key));
    if (it == j_.end()) return nullptr;
    used_.emplace_back(key);
    return &*it;
  }

  const ojson& need(std::string_view key) {
    if (const auto* v = find(key)) return *v;
    // a misspelling of the missing key is the likelier mistake; name it
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (std::find(used_.begin(), used_.end(), it.key()) == used_.end() && edit_distance(it.key(), key) <= 2)
        throw ParseError("unknown field '" + it.key() + "' at " + where() + " (did you mean '" + std::string(key) +
                         "'?)");
    throw ParseError(where() + ": missing required field '" + std::string(key) + "'");
  }

  double number(std::string_view key, std::optional<double> fallback = std::nullopt) {
    const auto* v = fallback ? find(key) : &need(key);
    if (!v) return *fallback;
    return as_number(*v, child(key));
  }

  std::size_t count(std::string_view key, std::optional<std::size_t> fallback = std::nullopt) {
    const auto* v = fallback ? find(key) : &need(key);
    if (!v) return *fallback;
    return as_count(*v, child(key));
  }

  std::string text(std::string_view key, std::optional<std::string> fallback = std::nullopt) {
    const auto* v = fallback ? find(key) : &need(key);
    if (!v) return *fallback;
    if (!v->is_string()) throw ParseError(child(key) + ": expected a string");
    return v->get<std::string>();
  }

  std::string child(std::string_view key) const { return path_ + "/" + std::string(key); }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (std::find(used_.begin(), used_.end(), it.key()) == used_.end())
        throw ParseError("unknown field '" + it.key() + "' at " + where());
  }

  static std::size_t edit_distance(std::string_view a, std::string_view b) {
    std::vector<std::size_t> row(b.size() + 1);
    for (std::size_t j = 0; j <= b.size(); ++j) row[j] = j;
    for (std::size_t i = 1; i <= a.size(); ++i) {
      std::size_t diag = row[0];
      row[0] = i;
      for (std::size_t j = 1; j <= b.size(); ++j) {
        const std::size_t up = row[j];
        row[j] = std::min({row[j] + 1, row[j - 1] + 1, diag + (a[i - 1] == b[j - 1] ? 0 : 1)});
        diag = up;
      }
    }
    return row[b.size()];
  }

  static double as_number(const ojson& v, const std::string& at) {
    if (!v.is_number()) throw ParseError(at + ": expected a number");
    return v.get<double>();
  }

  static std::size_t as_count(const ojson& v, const std::string& at) {
    if (!v.is_number_unsigned()) throw ParseError(at + ": expected a non-negative integer");
    return v.get<std::size_t>();
  }

 private:
  std::string where() const { return path_.empty() ? "/" : path_; }

  const ojson& j_;
  std::string path_;
  std::vector<std::string> used_;
};

inline const ojson& array_at(const ojson& v, const std::string& at) {
  if (!v.is_array()) throw ParseError(at + ": expected an array");
  return v;
}

inline Vec3 vec3(const ojson& v, const std::string& at) {
  if (!v.is_array() || v.size() != 3) throw ParseError(at + ": expected an array of 3 numbers");
  Vec3 out{};
  for (std::size_t i = 0; i < 3; ++i) out[i] = Fields::as_number(v[i], at + "/" + std::to_string(i));
  return out;
}

inline Mat3 mat3(const ojson& v, const std::string& at) {
  if (!v.is_array() || v.size() != 3) throw ParseError(at + ": expected a 3x3 array");
  Mat3 out{};
  for (std::size_t i = 0; i < 3; ++i) out[i] = vec3(v[i], at + "/" + std::to_string(i));
  return out;
}

inline std::pair<std::size_t, std::size_t> line_column(std::string_view text, std::size_t byte) {
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i < std::min(byte, text.size()); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

inline ojson parse_json(std::string_view text) {
  try {
    return ojson::parse(text.begin(), text.end());
  } catch (const ojson::parse_error& e) {
    // nlohmann reports the byte just past the offending character
    const auto [line, col] = line_column(text, e.byte == 0 ? 0 : e.byte - 1);
    std::string what = e.what();
    if (auto p = what.find("syntax error"); p != std::string::npos) what = what.substr(p);
    throw ParseError("JSON syntax error at line " + std::to_string(line) + ", column " + std::to_string(col) + ": " +
                     what);
  }
}

// ---- community ----

inline FunctionalResponse parse_response(const ojson& j, const std::string& at) {
  Fields f(j, at);
  const auto type = f.text("type");
  FunctionalResponse out;
  if (type == "linear") out = LinearLV{f.number("a")};
  else if (type == "holling_ii") out = HollingII{f.number("a"), f.number("h")};
  else if (type == "ivlev") out = IvlevSaturating{f.number("a"), f.number("b")};
  else throw ParseError(f.child("type") + ": unknown response type '" + type + "' (valid: linear, holling_ii, ivlev)");
  f.finish();
  return out;
}

inline ojson dump_response(const FunctionalResponse& fr) {
  return std::visit(
      [](const auto& v) {
        using T = std::decay_t<decltype(v)>;
        ojson o;
        if constexpr (std::is_same_v<T, LinearLV>) {
          o["type"] = "linear";
          o["a"] = v.a;
        } else if constexpr (std::is_same_v<T, HollingII>) {
          o["type"] = "holling_ii";
          o["a"] = v.a;
          o["h"] = v.h;
        } else {
          o["type"] = "ivlev";
          o["a"] = v.a;
          o["b"] = v.b;
        }
        return o;
      },
      fr);
}

inline IntegratorMethod method_from(const std::string& s, const std::string& at) {
  if (s == "rk4") return IntegratorMethod::rk4_fixed;
  if (s == "rk45") return IntegratorMethod::rk45_adaptive;
  throw ParseError(at + ": unknown integrator method '" + s + "' (valid: rk4, rk45)");
}

inline Scenario parse_community(Fields& top) {
  Scenario s;
  s.name = top.text("name", "");
  const auto& species = array_at(top.need("species"), "/species");
  for (std::size_t i = 0; i < species.size(); ++i) {
    Fields f(species[i], "/species/" + std::to_string(i));
    SpeciesSpec sp;
    sp.id = f.text("id");
    sp.name = f.text("name", sp.id);
    const auto role = f.text("role");
    if (role == "producer") sp.role = Role::producer;
    else if (role == "consumer") sp.role = Role::consumer;
    else throw ParseError(f.child("role") + ": unknown role '" + role + "' (valid: producer, consumer)");
    sp.trophic_level = static_cast<unsigned>(f.count("trophic_level", sp.role == Role::producer ? 0u : 1u));
    sp.growth_rate = f.number("growth_rate");
    sp.self_limitation = f.number("self_limitation", 0.0);
    f.finish();
    s.species.push_back(std::move(sp));
  }
  if (const auto* inter = top.find("interactions")) {
    array_at(*inter, "/interactions");
    for (std::size_t k = 0; k < inter->size(); ++k) {
      Fields f((*inter)[k], "/interactions/" + std::to_string(k));
      InteractionEntry e;
      e.first = f.text("first");
      e.second = f.text("second");
      if (const auto* c = f.find("continuum")) {
        Fields cf(*c, f.child("continuum"));
        e.continuum = ContinuumSource{cf.number("alpha"), cf.number("strength")};
        cf.finish();
      } else {
        const auto kind = f.text("kind");
        const auto k2 = interaction_kind_from(kind);
        if (!k2)
          throw ParseError(f.child("kind") + ": unknown interaction kind '" + kind +
                           "' (valid: predation, parasitism, competition, symbiosis, cooperation, sexual)");
        e.kind = *k2;
        e.coef_first = f.number("coef_first", 0.0);
        e.coef_second = f.number("coef_second", 0.0);
        if (const auto* r = f.find("response")) e.response = parse_response(*r, f.child("response"));
      }
      f.finish();
      s.interactions.push_back(std::move(e));
    }
  }
  {
    Fields f(top.need("initial"), "/initial");
    const auto& obj = top.need("initial");
    for (auto it = obj.begin(); it != obj.end(); ++it) s.initial_densities[it.key()] = f.number(it.key());
    f.finish();
  }
  if (const auto* integ = top.find("integrator")) {
    Fields f(*integ, "/integrator");
    IntegratorConfig c;
    c.method = method_from(f.text("method", "rk4"), f.child("method"));
    c.step = f.number("step", c.step);
    c.rel_tol = f.number("rel_tol", c.rel_tol);
    c.abs_tol = f.number("abs_tol", c.abs_tol);
    c.extinction_epsilon = f.number("extinction_epsilon", c.extinction_epsilon);
    f.finish();
    s.integrator = c;
  }
  s.horizon = top.number("horizon");
  validate_scenario(s);
  return s;
}

inline void dump_community(ojson& o, const Scenario& s) {
  o["name"] = s.name;
  ojson species = ojson::array();
  for (const auto& sp : s.species) {
    ojson j;
    j["id"] = sp.id;
    j["name"] = sp.name;
    j["role"] = to_string(sp.role);
    j["trophic_level"] = sp.trophic_level;
    j["growth_rate"] = sp.growth_rate;
    j["self_limitation"] = sp.self_limitation;
    species.push_back(std::move(j));
  }
  o["species"] = std::move(species);
  ojson inter = ojson::array();
  for (const auto& e : s.interactions) {
    ojson j;
    j["first"] = e.first;
    j["second"] = e.second;
    if (e.continuum) {
      j["continuum"] = {{"alpha", e.continuum->alpha}, {"strength", e.continuum->strength}};
    } else {
      j["kind"] = to_string(e.kind);
      j["coef_first"] = e.coef_first;
      j["coef_second"] = e.coef_second;
      j["response"] = dump_response(e.response);
    }
    inter.push_back(std::move(j));
  }
  o["interactions"] = std::move(inter);
  ojson init = ojson::object();
  for (const auto& sp : s.species)
    if (auto it = s.initial_densities.find(sp.id); it != s.initial_densities.end()) init[sp.id] = it->second;
  o["initial"] = std::move(init);
  const auto& c = s.integrator;
  o["integrator"] = {{"method", c.method == IntegratorMethod::rk4_fixed ? "rk4" : "rk45"},
                     {"step", c.step},
                     {"rel_tol", c.rel_tol},
                     {"abs_tol", c.abs_tol},
                     {"extinction_epsilon", c.extinction_epsilon}};
  o["horizon"] = s.horizon;
}

// ---- epidemic ----

inline EpidemicDocument parse_epidemic(Fields& top) {
  EpidemicDocument d;
  d.name = top.text("name", "");
  {
    Fields f(top.need("graph"), "/graph");
    const auto gen = f.text("generator");
    auto& g = d.graph;
    if (gen == "complete") {
      g.generator = GraphGenerator::complete;
      g.n = f.count("n");
    } else if (gen == "erdos_renyi") {
      g.generator = GraphGenerator::erdos_renyi;
      g.n = f.count("n");
      g.p = f.number("p");
      g.seed = f.count("seed", 0);
    } else if (gen == "barabasi_albert") {
      g.generator = GraphGenerator::barabasi_albert;
      g.n = f.count("n");
      g.m = f.count("m");
      g.seed = f.count("seed", 0);
    } else if (gen == "explicit") {
      g.generator = GraphGenerator::explicit_edges;
      g.n = f.count("n");
      const auto& edges = array_at(f.need("edges"), f.child("edges"));
      for (std::size_t i = 0; i < edges.size(); ++i) {
        const auto at = f.child("edges") + "/" + std::to_string(i);
        if (!edges[i].is_array() || edges[i].size() != 2) throw ParseError(at + ": expected a pair of node indices");
        g.edges.emplace_back(Fields::as_count(edges[i][0], at + "/0"), Fields::as_count(edges[i][1], at + "/1"));
      }
    } else {
      throw ParseError(f.child("generator") + ": unknown generator '" + gen +
                       "' (valid: complete, erdos_renyi, barabasi_albert, explicit)");
    }
    f.finish();
  }
  const auto model = top.text("model", "SIS");
  if (model == "SIS") d.model = EpidemicKind::SIS;
  else if (model == "SIR") d.model = EpidemicKind::SIR;
  else throw ParseError("/model: unknown epidemic model '" + model + "' (valid: SIS, SIR)");
  d.beta = top.number("beta");
  d.gamma = top.number("gamma", d.gamma);
  if (const auto* inf = top.find("initial_infected")) {
    array_at(*inf, "/initial_infected");
    d.initial_infected.clear();
    for (std::size_t i = 0; i < inf->size(); ++i)
      d.initial_infected.push_back(Fields::as_count((*inf)[i], "/initial_infected/" + std::to_string(i)));
  }
  d.horizon = top.number("horizon", d.horizon);
  d.sample_dt = top.number("sample_dt", d.sample_dt);
  d.runs = top.count("runs", d.runs);
  if (const auto* th = top.find("threshold")) {
    Fields f(*th, "/threshold");
    d.beta_low = f.number("beta_low", d.beta_low);
    d.beta_high = f.number("beta_high", d.beta_high);
    d.bisections = f.count("bisections", d.bisections);
    f.finish();
  }
  std::vector<Issue> issues;
  auto bad = [&](std::string m) { issues.push_back({IssueCode::invalid_model, std::move(m)}); };
  if (d.graph.n == 0) bad("graph must have at least one node");
  if (!(d.beta >= 0.0) || !std::isfinite(d.beta)) bad("beta must be finite and >= 0");
  if (!(d.gamma > 0.0) || !std::isfinite(d.gamma)) bad("gamma must be finite and > 0");
  if (!(d.horizon > 0.0) || !std::isfinite(d.horizon)) bad("horizon must be > 0");
  if (!(d.sample_dt > 0.0) || !std::isfinite(d.sample_dt)) bad("sample_dt must be > 0");
  if (d.runs == 0) bad("runs must be >= 1");
  if (!(d.beta_low >= 0.0) || !(d.beta_high > d.beta_low)) bad("threshold range must satisfy 0 <= beta_low < beta_high");
  if (d.initial_infected.empty()) bad("initial_infected must not be empty");
  for (auto v : d.initial_infected)
    if (v >= d.graph.n) bad("initial infected node " + std::to_string(v) + " outside graph");
  if (!issues.empty()) throw ValidationError(std::move(issues));
  return d;
}

inline void dump_epidemic(ojson& o, const EpidemicDocument& d) {
  o["name"] = d.name;
  ojson g;
  g["generator"] = d.graph.generator == GraphGenerator::explicit_edges ? "explicit" : to_string(d.graph.generator);
  g["n"] = d.graph.n;
  switch (d.graph.generator) {
    case GraphGenerator::complete: break;
    case GraphGenerator::erdos_renyi:
      g["p"] = d.graph.p;
      g["seed"] = d.graph.seed;
      break;
    case GraphGenerator::barabasi_albert:
      g["m"] = d.graph.m;
      g["seed"] = d.graph.seed;
      break;
    case GraphGenerator::explicit_edges: {
      ojson edges = ojson::array();
      for (const auto& [u, v] : d.graph.edges) edges.push_back({u, v});
      g["edges"] = std::move(edges);
      break;
    }
  }
  o["graph"] = std::move(g);
  o["model"] = to_string(d.model);
  o["beta"] = d.beta;
  o["gamma"] = d.gamma;
  o["initial_infected"] = d.initial_infected;
  o["horizon"] = d.horizon;
  o["sample_dt"] = d.sample_dt;
  o["runs"] = d.runs;
  o["threshold"] = {{"beta_low", d.beta_low}, {"beta_high", d.beta_high}, {"bisections", d.bisections}};
}

// ---- selection ----

inline SelectionDocument parse_selection(Fields& top) {
  SelectionDocument d;
  d.name = top.text("name", "");
  d.state.means = vec3(top.need("means"), "/means");
  {
    Fields f(top.need("G"), "/G");
    auto& g = d.state.G;
    g.var_d = f.number("var_d");
    g.var_p = f.number("var_p");
    g.var_f = f.number("var_f");
    g.cov_pd = f.number("cov_pd", 0.0);
    g.cov_fd = f.number("cov_fd", 0.0);
    g.cov_fp = f.number("cov_fp", 0.0);
    f.finish();
  }
  if (const auto* u = top.find("mutation")) d.state.mutation = vec3(*u, "/mutation");
  auto gradient = [&](std::string_view key, Mat3& m, Vec3& off) {
    const auto* g = top.find(key);
    if (!g) return;
    Fields f(*g, top.child(key));
    if (const auto* mm = f.find("matrix")) m = mat3(*mm, f.child("matrix"));
    if (const auto* oo = f.find("offset")) off = vec3(*oo, f.child("offset"));
    f.finish();
  };
  gradient("natural", d.natural_matrix, d.natural_offset);
  gradient("sexual", d.sexual_matrix, d.sexual_offset);
  d.steps = top.count("steps", d.steps);
  check_selection_state(d.state);
  return d;
}

inline void dump_selection(ojson& o, const SelectionDocument& d) {
  o["name"] = d.name;
  o["means"] = d.state.means;
  const auto& g = d.state.G;
  o["G"] = {{"var_d", g.var_d}, {"var_p", g.var_p}, {"var_f", g.var_f},
            {"cov_pd", g.cov_pd}, {"cov_fd", g.cov_fd}, {"cov_fp", g.cov_fp}};
  o["mutation"] = d.state.mutation;
  o["natural"] = {{"matrix", d.natural_matrix}, {"offset", d.natural_offset}};
  o["sexual"] = {{"matrix", d.sexual_matrix}, {"offset", d.sexual_offset}};
  o["steps"] = d.steps;
}

// ---- discrete ----

inline DiscreteDocument parse_discrete(Fields& top) {
  DiscreteDocument d;
  d.name = top.text("name", "");
  const auto model = top.text("model", "nicholson_bailey");
  if (model != "nicholson_bailey") throw ParseError("/model: unknown discrete model '" + model + "' (valid: nicholson_bailey)");
  d.params.R = top.number("R");
  d.params.a = top.number("a");
  d.params.c = top.number("c");
  {
    Fields f(top.need("initial"), "/initial");
    d.host0 = f.number("host");
    d.parasitoid0 = f.number("parasitoid");
    f.finish();
  }
  d.generations = top.count("generations", d.generations);
  d.extinction_epsilon = top.number("extinction_epsilon", d.extinction_epsilon);
  check_nb_params(d.params);
  if (!(d.host0 >= 0.0) || !(d.parasitoid0 >= 0.0))
    throw ValidationError({{IssueCode::negative_density, "negative density in /initial"}});
  return d;
}

inline void dump_discrete(ojson& o, const DiscreteDocument& d) {
  o["name"] = d.name;
  o["model"] = "nicholson_bailey";
  o["R"] = d.params.R;
  o["a"] = d.params.a;
  o["c"] = d.params.c;
  o["initial"] = {{"host", d.host0}, {"parasitoid", d.parasitoid0}};
  o["generations"] = d.generations;
  o["extinction_epsilon"] = d.extinction_epsilon;
}

// ---- mimicry ----

inline MimicryDocument parse_mimicry(Fields& top) {
  MimicryDocument d;
  d.name = top.text("name", "");
  auto& p = d.params;
  p.n_model = top.number("n_model");
  p.venom_cost = top.number("venom_cost");
  p.prey_value = top.number("prey_value");
  p.signal_cost_mimic = top.number("signal_cost_mimic", 0.0);
  p.weapon_cost_model = top.number("weapon_cost_model");
  const auto& grid = array_at(top.need("n_mimic"), "/n_mimic");
  for (std::size_t i = 0; i < grid.size(); ++i)
    d.n_mimic.push_back(Fields::as_number(grid[i], "/n_mimic/" + std::to_string(i)));
  p.n_mimic = 0.0;
  check_mimicry_params(p);
  for (double v : d.n_mimic) {
    auto q = p;
    q.n_mimic = v;
    check_mimicry_params(q);
  }
  return d;
}

inline void dump_mimicry(ojson& o, const MimicryDocument& d) {
  o["name"] = d.name;
  o["n_model"] = d.params.n_model;
  o["venom_cost"] = d.params.venom_cost;
  o["prey_value"] = d.params.prey_value;
  o["signal_cost_mimic"] = d.params.signal_cost_mimic;
  o["weapon_cost_model"] = d.params.weapon_cost_model;
  o["n_mimic"] = d.n_mimic;
}

}  // namespace detail

/// Parses and validates a scenario document. Unknown fields are errors.
inline ScenarioDocument parse_scenario(std::string_view text) {
  const auto j = detail::parse_json(text);
  detail::Fields top(j, "");
  const auto version = top.count("schema_version");
  if (version != schema_version)
    throw ParseError("unsupported schema_version " + std::to_string(version) + " (expected " +
                     std::to_string(schema_version) + ")");
  const auto kind = top.text("kind");
  ScenarioDocument doc;
  if (kind == "community") doc = detail::parse_community(top);
  else if (kind == "epidemic") doc = detail::parse_epidemic(top);
  else if (kind == "selection") doc = detail::parse_selection(top);
  else if (kind == "discrete") doc = detail::parse_discrete(top);
  else if (kind == "mimicry") doc = detail::parse_mimicry(top);
  else throw ParseError("unknown kind '" + kind + "' (valid kinds: " + std::string(valid_kinds) + ")");
  top.finish();
  return doc;
}

inline std::string_view kind_of(const ScenarioDocument& doc) {
  static constexpr std::string_view names[] = {"community", "epidemic", "selection", "discrete", "mimicry"};
  return names[doc.index()];
}

inline nlohmann::ordered_json to_json(const ScenarioDocument& doc) {
  nlohmann::ordered_json o;
  o["schema_version"] = schema_version;
  o["kind"] = kind_of(doc);
  std::visit(
      [&](const auto& d) {
        using T = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<T, Scenario>) detail::dump_community(o, d);
        else if constexpr (std::is_same_v<T, EpidemicDocument>) detail::dump_epidemic(o, d);
        else if constexpr (std::is_same_v<T, SelectionDocument>) detail::dump_selection(o, d);
        else if constexpr (std::is_same_v<T, DiscreteDocument>) detail::dump_discrete(o, d);
        else detail::dump_mimicry(o, d);
      },
      doc);
  return o;
}

/// Pretty-printed document with every field explicit.
inline std::string serialize(const ScenarioDocument& doc) { return to_json(doc).dump(2) + "\n"; }

/// FNV-1a 64 over the compact canonical serialization, as 16 hex digits.
inline std::string scenario_digest(const ScenarioDocument& doc) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : to_json(doc).dump()) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

// ---- CSV ----

/// Shortest decimal that reads back to the same double.
inline std::string format_double(double v) {
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

/// Column-oriented results that are not trajectories (signed values, non-time keys).
struct Table {
  std::string key = "time";
  std::vector<std::string> names;
  std::vector<double> keys;
  std::vector<std::vector<double>> rows;
};

inline std::string write_csv(const Table& t) {
  std::string out = t.key;
  for (const auto& n : t.names) out += "," + n;
  out += "\n";
  for (std::size_t i = 0; i < t.keys.size(); ++i) {
    out += format_double(t.keys[i]);
    for (double v : t.rows[i]) out += "," + format_double(v);
    out += "\n";
  }
  return out;
}

inline std::string write_csv(const Trajectory& tr) {
  std::string out = "time";
  for (const auto& n : tr.names()) out += "," + n;
  out += "\n";
  for (std::size_t i = 0; i < tr.size(); ++i) {
    out += format_double(tr.times()[i]);
    for (double v : tr.row(i)) out += "," + format_double(v);
    out += "\n";
  }
  return out;
}

inline Trajectory read_csv(std::string_view text) {
  auto next_line = [&](std::string_view& rest) {
    const auto nl = rest.find('\n');
    auto line = rest.substr(0, nl);
    rest = nl == std::string_view::npos ? std::string_view{} : rest.substr(nl + 1);
    return line;
  };
  auto split = [](std::string_view line) {
    std::vector<std::string_view> cells;
    for (std::size_t start = 0;;) {
      const auto c = line.find(',', start);
      cells.push_back(line.substr(start, c == std::string_view::npos ? std::string_view::npos : c - start));
      if (c == std::string_view::npos) break;
      start = c + 1;
    }
    return cells;
  };
  std::string_view rest = text;
  const auto header = split(next_line(rest));
  if (header.empty() || header[0] != "time") throw ParseError("CSV header must start with 'time'");
  std::vector<std::string> names(header.begin() + 1, header.end());
  Trajectory tr(names);
  std::vector<double> row(names.size());
  for (std::size_t lineno = 2; !rest.empty(); ++lineno) {
    const auto line = next_line(rest);
    if (line.empty()) continue;
    const auto cells = split(line);
    if (cells.size() != header.size()) throw ParseError("CSV line " + std::to_string(lineno) + ": wrong column count");
    double t = 0.0;
    auto parse = [&](std::string_view c, double& out) {
      const auto r = std::from_chars(c.data(), c.data() + c.size(), out);
      if (r.ec != std::errc{} || r.ptr != c.data() + c.size())
        throw ParseError("CSV line " + std::to_string(lineno) + ": bad number '" + std::string(c) + "'");
    };
    parse(cells[0], t);
    for (std::size_t k = 1; k < cells.size(); ++k) parse(cells[k], row[k - 1]);
    tr.append(t, row);
  }
  return tr;
}

// ---- SVG ----

struct SvgOptions {
  int width = 800;
  int height = 480;
  std::string title;
  std::string x_label = "time";
  std::string y_label = "density";
};

namespace detail {

inline std::string xml_escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&apos;"; break;
      default: out += c;
    }
  }
  return out;
}

// Fixed-precision formatting keeps SVG output independent of locale and stream state.
inline std::string fixed(double v, int digits = 2) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::fixed, digits);
  return std::string(buf, r.ptr);
}

inline std::string tick_label(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 4);
  return std::string(buf, r.ptr);
}

inline std::vector<double> nice_ticks(double lo, double hi, int target = 5) {
  if (!(hi > lo)) return {lo};
  const double raw = (hi - lo) / target;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  const double norm = raw / mag;
  const double step = (norm < 1.5 ? 1.0 : norm < 3.0 ? 2.0 : norm < 7.0 ? 5.0 : 10.0) * mag;
  std::vector<double> ticks;
  for (double t = std::ceil(lo / step) * step; t <= hi + step * 1e-9; t += step)
    ticks.push_back(std::abs(t) < step * 1e-9 ? 0.0 : t);
  return ticks;
}

inline constexpr std::string_view palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                               "#9467bd", "#8c564b", "#e377c2", "#17becf"};

}  // namespace detail

/// Single-panel line chart, one polyline per variable.
inline std::string render_svg(const Trajectory& tr, const SvgOptions& opt = {}) {
  if (tr.size() < 2) throw InvalidInput("render_svg: trajectory needs at least 2 samples");
  const double left = 70, right = 150, top = 40, bottom = 50;
  const double pw = opt.width - left - right, ph = opt.height - top - bottom;
  const double t0 = tr.times().front(), t1 = tr.times().back();
  double ymax = 0.0;
  for (std::size_t i = 0; i < tr.size(); ++i)
    for (double v : tr.row(i)) ymax = std::max(ymax, v);
  if (ymax == 0.0) ymax = 1.0;
  ymax *= 1.05;
  auto X = [&](double t) { return left + (t - t0) / (t1 - t0) * pw; };
  auto Y = [&](double v) { return top + ph - v / ymax * ph; };
  using detail::fixed;

  std::string s;
  s += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  s += "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" + std::to_string(opt.width) +
       "\" height=\"" + std::to_string(opt.height) + "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  s += "<rect x=\"0\" y=\"0\" width=\"" + std::to_string(opt.width) + "\" height=\"" + std::to_string(opt.height) +
       "\" fill=\"white\"/>\n";
  if (!opt.title.empty())
    s += "<text x=\"" + fixed(left + pw / 2) + "\" y=\"24\" text-anchor=\"middle\" font-size=\"14\">" +
         detail::xml_escape(opt.title) + "</text>\n";
  s += "<g class=\"axes\" stroke=\"black\" fill=\"none\">\n";
  s += "<line x1=\"" + fixed(left) + "\" y1=\"" + fixed(top + ph) + "\" x2=\"" + fixed(left + pw) + "\" y2=\"" +
       fixed(top + ph) + "\"/>\n";
  s += "<line x1=\"" + fixed(left) + "\" y1=\"" + fixed(top) + "\" x2=\"" + fixed(left) + "\" y2=\"" + fixed(top + ph) +
       "\"/>\n";
  s += "</g>\n<g class=\"ticks\" font-size=\"10\">\n";
  for (double t : detail::nice_ticks(t0, t1)) {
    const auto x = fixed(X(t));
    s += "<line x1=\"" + x + "\" y1=\"" + fixed(top + ph) + "\" x2=\"" + x + "\" y2=\"" + fixed(top + ph + 5) +
         "\" stroke=\"black\"/>\n";
    s += "<text x=\"" + x + "\" y=\"" + fixed(top + ph + 18) + "\" text-anchor=\"middle\">" + detail::tick_label(t) +
         "</text>\n";
  }
  for (double v : detail::nice_ticks(0.0, ymax)) {
    const auto y = fixed(Y(v));
    s += "<line x1=\"" + fixed(left - 5) + "\" y1=\"" + y + "\" x2=\"" + fixed(left) + "\" y2=\"" + y +
         "\" stroke=\"black\"/>\n";
    s += "<text x=\"" + fixed(left - 8) + "\" y=\"" + fixed(Y(v) + 3) + "\" text-anchor=\"end\">" +
         detail::tick_label(v) + "</text>\n";
  }
  s += "</g>\n";
  s += "<text x=\"" + fixed(left + pw / 2) + "\" y=\"" + fixed(opt.height - 10.0) + "\" text-anchor=\"middle\">" +
       detail::xml_escape(opt.x_label) + "</text>\n";
  s += "<text x=\"16\" y=\"" + fixed(top + ph / 2) + "\" text-anchor=\"middle\" transform=\"rotate(-90 16 " +
       fixed(top + ph / 2) + ")\">" + detail::xml_escape(opt.y_label) + "</text>\n";
  for (std::size_t k = 0; k < tr.width(); ++k) {
    const auto color = std::string(detail::palette[k % std::size(detail::palette)]);
    s += "<polyline fill=\"none\" stroke=\"" + color + "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < tr.size(); ++i) {
      if (i) s += ' ';
      s += fixed(X(tr.times()[i])) + "," + fixed(Y(tr.at(i, k)));
    }
    s += "\"/>\n";
  }
  s += "<g class=\"legend\">\n";
  for (std::size_t k = 0; k < tr.width(); ++k) {
    const double y = top + 10 + 18.0 * static_cast<double>(k);
    const auto color = std::string(detail::palette[k % std::size(detail::palette)]);
    s += "<line x1=\"" + fixed(left + pw + 15) + "\" y1=\"" + fixed(y) + "\" x2=\"" + fixed(left + pw + 35) +
         "\" y2=\"" + fixed(y) + "\" stroke=\"" + color + "\" stroke-width=\"2\"/>\n";
    s += "<text x=\"" + fixed(left + pw + 40) + "\" y=\"" + fixed(y + 4) + "\">" + detail::xml_escape(tr.names()[k]) +
         "</text>\n";
  }
  s += "</g>\n</svg>\n";
  return s;
}

// ---- files ----

inline std::string read_text_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw InvalidInput("cannot open file '" + p.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Writes to a sibling temporary file, then renames it over the target.
inline void write_file_atomic(const std::filesystem::path& p, std::string_view content) {
  auto tmp = p;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw RuntimeFailure("cannot write '" + tmp.string() + "'");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw RuntimeFailure("write failed for '" + tmp.string() + "'");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, p, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw RuntimeFailure("cannot move output into place at '" + p.string() + "'");
  }
}

struct RunReport {
  std::string digest;
  std::string kind;
  std::optional<Trajectory> trajectory;
  std::vector<Extinction> extinctions;
  std::vector<std::string> warnings;
  std::chrono::duration<double> wall_clock{};
};

}  // namespace ecolab
