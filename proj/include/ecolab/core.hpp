#pragma once

// Shared domain types for community simulations: species, interaction entries,
// functional responses, integrator settings and the Trajectory container.
//
// Time and density are dimensionless throughout.

#include <cmath>
#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <type_traits>
#include <unordered_set>
#include <variant>
#include <vector>

namespace ecolab {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid user input (bad parameters, malformed documents, broken invariants).
class InvalidInput : public Error {
 public:
  using Error::Error;
};

/// Failure while running an otherwise valid model (non-finite values, step underflow).
class RuntimeFailure : public Error {
 public:
  using Error::Error;
};

enum class IssueCode {
  duplicate_id,
  dangling_reference,
  negative_density,
  self_interaction,
  duplicate_pair,
  missing_density,
  invalid_species,
  invalid_interaction,
  invalid_integrator,
  invalid_horizon,
  invalid_model,
};

struct Issue {
  IssueCode code;
  std::string message;
  bool operator==(const Issue&) const = default;
};

/// Carries every violation found by validation, not just the first.
class ValidationError : public InvalidInput {
 public:
  explicit ValidationError(std::vector<Issue> issues)
      : InvalidInput(join(issues)), issues_(std::move(issues)) {}

  const std::vector<Issue>& issues() const noexcept { return issues_; }

 private:
  static std::string join(const std::vector<Issue>& issues) {
    std::string out = "scenario validation failed:";
    for (const auto& i : issues) out += "\n  - " + i.message;
    return out;
  }
  std::vector<Issue> issues_;
};

enum class Role { producer, consumer };

inline std::string_view to_string(Role r) { return r == Role::producer ? "producer" : "consumer"; }

struct SpeciesSpec {
  std::string id;
  std::string name;
  Role role = Role::producer;
  unsigned trophic_level = 0;
  /// Magnitude of intrinsic growth (producers) or decline (consumers).
  double growth_rate = 0.0;
  /// Logistic self-limitation s in -s*x^2; 0 gives classical Lotka-Volterra.
  double self_limitation = 0.0;

  bool operator==(const SpeciesSpec&) const = default;
};

enum class InteractionKind { predation, parasitism, competition, symbiosis, cooperation, sexual };

inline std::string_view to_string(InteractionKind k) {
  switch (k) {
    case InteractionKind::predation: return "predation";
    case InteractionKind::parasitism: return "parasitism";
    case InteractionKind::competition: return "competition";
    case InteractionKind::symbiosis: return "symbiosis";
    case InteractionKind::cooperation: return "cooperation";
    case InteractionKind::sexual: return "sexual";
  }
  return "?";
}

inline std::optional<InteractionKind> interaction_kind_from(std::string_view s) {
  for (auto k : {InteractionKind::predation, InteractionKind::parasitism, InteractionKind::competition,
                 InteractionKind::symbiosis, InteractionKind::cooperation, InteractionKind::sexual})
    if (to_string(k) == s) return k;
  return std::nullopt;
}

/// (+ to aggressor, - to victim)
constexpr bool is_antagonistic(InteractionKind k) {
  return k == InteractionKind::predation || k == InteractionKind::parasitism;
}

constexpr bool is_mutualistic(InteractionKind k) {
  return k == InteractionKind::symbiosis || k == InteractionKind::cooperation;
}

// Functional responses: per-aggressor consumption as a function of victim density.
struct LinearLV {
  double a = 0.0;
  bool operator==(const LinearLV&) const = default;
};
struct HollingII {
  double a = 0.0;
  double h = 0.0;  // handling time
  bool operator==(const HollingII&) const = default;
};
struct IvlevSaturating {
  double a = 0.0;
  double b = 0.0;  // saturation rate
  bool operator==(const IvlevSaturating&) const = default;
};

using FunctionalResponse = std::variant<LinearLV, HollingII, IvlevSaturating>;

inline double encounter_rate(const FunctionalResponse& fr) {
  return std::visit([](const auto& v) { return v.a; }, fr);
}

inline bool response_parameters_valid(const FunctionalResponse& fr) {
  auto ok = [](double v) { return std::isfinite(v) && v >= 0.0; };
  return std::visit(
      [&](const auto& v) {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, LinearLV>) return ok(v.a);
        else if constexpr (std::is_same_v<T, HollingII>) return ok(v.a) && ok(v.h);
        else return ok(v.a) && ok(v.b);
      },
      fr);
}

/// A pair interaction whose sign structure slides from parasitism (alpha=-1)
/// to mutualism (alpha=+1). Expanded into a concrete entry by continuum_community.
struct ContinuumSource {
  double alpha = 0.0;
  double strength = 0.0;
  bool operator==(const ContinuumSource&) const = default;
};

/// One entry of the community matrix.
///
/// For predation/parasitism `first` is the aggressor and `second` the victim:
/// the victim loses FR(x_victim) * x_aggressor and the aggressor gains
/// coef_first * FR(x_victim) / a * x_aggressor, so with a LinearLV response
/// coef_first plays the role of the conversion rate a'. coef_second must be 0.
///
/// For competition both species lose coef * x_first * x_second, for
/// symbiosis/cooperation both gain it (coef_first applies to `first`).
struct InteractionEntry {
  std::string first;
  std::string second;
  InteractionKind kind = InteractionKind::competition;
  double coef_first = 0.0;
  double coef_second = 0.0;
  FunctionalResponse response = LinearLV{};
  std::optional<ContinuumSource> continuum;

  bool operator==(const InteractionEntry&) const = default;
};

using CommunityMatrix = std::vector<InteractionEntry>;

enum class IntegratorMethod { rk4_fixed, rk45_adaptive };

struct IntegratorConfig {
  IntegratorMethod method = IntegratorMethod::rk4_fixed;
  /// Fixed step, or the initial step for the adaptive method.
  double step = 0.01;
  double rel_tol = 1e-8;
  double abs_tol = 1e-10;
  /// Densities below this are clamped to exactly zero and reported as extinct.
  double extinction_epsilon = 1e-9;

  bool operator==(const IntegratorConfig&) const = default;
};

struct Scenario {
  std::string name;
  std::vector<SpeciesSpec> species;
  CommunityMatrix interactions;
  std::map<std::string, double> initial_densities;
  IntegratorConfig integrator;
  double horizon = 1.0;

  bool operator==(const Scenario&) const = default;

  std::optional<std::size_t> index_of(std::string_view id) const {
    for (std::size_t i = 0; i < species.size(); ++i)
      if (species[i].id == id) return i;
    return std::nullopt;
  }

  /// Initial state in declaration order.
  std::vector<double> initial_state() const {
    std::vector<double> x;
    x.reserve(species.size());
    for (const auto& s : species) {
      auto it = initial_densities.find(s.id);
      x.push_back(it == initial_densities.end() ? 0.0 : it->second);
    }
    return x;
  }

  std::vector<std::string> species_ids() const {
    std::vector<std::string> ids;
    for (const auto& s : species) ids.push_back(s.id);
    return ids;
  }
};

/// Time-indexed nonnegative values, one column per variable.
/// Invariants are enforced on every append.
class Trajectory {
 public:
  Trajectory() = default;
  explicit Trajectory(std::vector<std::string> names) : names_(std::move(names)) {}

  void append(double t, std::span<const double> row) {
    if (row.size() != names_.size())
      throw InvalidInput("trajectory row has " + std::to_string(row.size()) + " values, expected " +
                         std::to_string(names_.size()));
    if (!std::isfinite(t)) throw InvalidInput("trajectory time is not finite");
    if (times_.empty() ? t != 0.0 : !(t > times_.back()))
      throw InvalidInput(times_.empty() ? "trajectory must start at time 0"
                                        : "trajectory times must be strictly increasing");
    for (double v : row)
      if (!(v >= 0.0) || !std::isfinite(v)) throw InvalidInput("trajectory values must be finite and >= 0");
    times_.push_back(t);
    values_.insert(values_.end(), row.begin(), row.end());
  }

  std::size_t size() const noexcept { return times_.size(); }
  bool empty() const noexcept { return times_.empty(); }
  std::size_t width() const noexcept { return names_.size(); }
  const std::vector<std::string>& names() const noexcept { return names_; }
  const std::vector<double>& times() const noexcept { return times_; }

  std::span<const double> row(std::size_t i) const { return {values_.data() + i * width(), width()}; }
  double at(std::size_t i, std::size_t var) const { return values_[i * width() + var]; }

  std::vector<double> column(std::size_t var) const {
    std::vector<double> c;
    c.reserve(size());
    for (std::size_t i = 0; i < size(); ++i) c.push_back(at(i, var));
    return c;
  }

  std::span<const double> back() const { return row(size() - 1); }

  bool operator==(const Trajectory&) const = default;

 private:
  std::vector<std::string> names_;
  std::vector<double> times_;
  std::vector<double> values_;
};

/// Lists every invariant violation in `s`; empty means valid.
inline std::vector<Issue> check_scenario(const Scenario& s) {
  std::vector<Issue> out;
  auto add = [&](IssueCode c, std::string m) { out.push_back({c, std::move(m)}); };

  std::unordered_set<std::string> ids;
  for (const auto& sp : s.species) {
    if (sp.id.empty()) add(IssueCode::invalid_species, "species with empty id");
    if (!ids.insert(sp.id).second) add(IssueCode::duplicate_id, "duplicate species id '" + sp.id + "'");
    if (sp.role == Role::producer && sp.trophic_level != 0)
      add(IssueCode::invalid_species, "producer '" + sp.id + "' must have trophic_level 0");
    if (!std::isfinite(sp.growth_rate)) add(IssueCode::invalid_species, "species '" + sp.id + "' has non-finite growth_rate");
    if (!std::isfinite(sp.self_limitation) || sp.self_limitation < 0.0)
      add(IssueCode::invalid_species, "species '" + sp.id + "' has negative or non-finite self_limitation");
  }

  std::unordered_set<std::string> pairs;
  for (std::size_t k = 0; k < s.interactions.size(); ++k) {
    const auto& e = s.interactions[k];
    const std::string where = "interaction " + std::to_string(k);
    bool refs_ok = true;
    for (const auto* id : {&e.first, &e.second}) {
      if (!ids.contains(*id)) {
        add(IssueCode::dangling_reference, where + ": dangling reference to unknown species '" + *id + "'");
        refs_ok = false;
      }
    }
    if (e.first == e.second) {
      add(IssueCode::self_interaction, where + ": self-interaction entry for '" + e.first + "'");
      continue;
    }
    const auto key = e.first < e.second ? e.first + '\x1f' + e.second : e.second + '\x1f' + e.first;
    if (!pairs.insert(key).second)
      add(IssueCode::duplicate_pair, where + ": more than one entry for pair (" + e.first + ", " + e.second + ")");
    if (e.kind == InteractionKind::sexual)
      add(IssueCode::invalid_interaction, where + ": sexual interactions are within-species and not part of a community");
    if (!std::isfinite(e.coef_first) || !std::isfinite(e.coef_second) || e.coef_first < 0.0 || e.coef_second < 0.0)
      add(IssueCode::invalid_interaction, where + ": coefficients must be finite and >= 0");
    if (is_antagonistic(e.kind) && e.coef_second != 0.0)
      add(IssueCode::invalid_interaction,
          where + ": coef_second is unused for " + std::string(to_string(e.kind)) + " and must be 0");
    if (!response_parameters_valid(e.response))
      add(IssueCode::invalid_interaction, where + ": functional response parameters must be finite and >= 0");
    if (e.continuum) {
      const auto& c = *e.continuum;
      if (!(c.alpha >= -1.0 && c.alpha <= 1.0))
        add(IssueCode::invalid_interaction, where + ": continuum alpha must lie in [-1, 1]");
      if (!(c.strength > 0.0) || !std::isfinite(c.strength))
        add(IssueCode::invalid_interaction, where + ": continuum strength must be > 0");
      if (refs_ok) {
        for (const auto* id : {&e.first, &e.second}) {
          const auto& sp = s.species[*s.index_of(*id)];
          if (!(sp.self_limitation > 0.0))
            add(IssueCode::invalid_interaction,
                where + ": continuum interaction requires self_limitation > 0 for '" + *id + "'");
        }
      }
    }
  }

  for (const auto& sp : s.species)
    if (!s.initial_densities.contains(sp.id))
      add(IssueCode::missing_density, "species '" + sp.id + "' has no initial density");
  for (const auto& [id, v] : s.initial_densities) {
    if (!ids.contains(id)) add(IssueCode::dangling_reference, "initial density for unknown species '" + id + "' (dangling reference)");
    if (!(v >= 0.0) || !std::isfinite(v))
      add(IssueCode::negative_density, "negative density for '" + id + "'");
  }

  const auto& ic = s.integrator;
  if (!(ic.step > 0.0) || !std::isfinite(ic.step)) add(IssueCode::invalid_integrator, "integrator step must be > 0");
  if (!(ic.rel_tol > 0.0) || !(ic.abs_tol > 0.0)) add(IssueCode::invalid_integrator, "integrator tolerances must be > 0");
  if (!(ic.extinction_epsilon >= 0.0)) add(IssueCode::invalid_integrator, "extinction_epsilon must be >= 0");
  if (!(s.horizon > 0.0) || !std::isfinite(s.horizon)) add(IssueCode::invalid_horizon, "horizon must be > 0");
  return out;
}

/// Returns `s` unchanged if it satisfies every invariant, otherwise throws a
/// ValidationError listing all violations.
inline const Scenario& validate_scenario(const Scenario& s) {
  if (auto issues = check_scenario(s); !issues.empty()) throw ValidationError(std::move(issues));
  return s;
}

}  // namespace ecolab
