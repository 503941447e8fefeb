#pragma once

// Continuous-time community dynamics: the two-species Lotka-Volterra system,
// the generalized multi-species form over InteractionKind, functional
// responses, the mutualism-parasitism continuum and the ODE integrators.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "ecolab/core.hpp"

namespace ecolab {

/// Classical predator-prey parameters:
///   dx/dt = r x - a y x,   dy/dt = -r' y + a' x y
struct LVParams {
  double r = 1.0;        // prey growth
  double r_prime = 1.0;  // predator decline
  double a = 1.0;        // encounter coefficient, prey side
  double a_prime = 1.0;  // conversion coefficient, predator side

  bool operator==(const LVParams&) const = default;
};

inline void check_lv_params(const LVParams& p) {
  for (double v : {p.r, p.r_prime, p.a, p.a_prime})
    if (!(v > 0.0) || !std::isfinite(v)) throw InvalidInput("LVParams: all parameters must be finite and > 0");
}

inline std::array<double, 2> lv_derivative(double x, double y, const LVParams& p) {
  if (!std::isfinite(x) || !std::isfinite(y)) throw InvalidInput("lv_derivative: non-finite density");
  if (x < 0.0 || y < 0.0) throw InvalidInput("lv_derivative: negative density");
  return {p.r * x - p.a * y * x, -p.r_prime * y + p.a_prime * x * y};
}

/// Interior equilibrium (r'/a', r/a).
inline std::array<double, 2> lv_equilibrium(const LVParams& p) { return {p.r_prime / p.a_prime, p.r / p.a}; }

/// Conserved quantity V = a' x - r' ln x + a y - r ln y of the classical system.
inline double lv_first_integral(double x, double y, const LVParams& p) {
  if (!(x > 0.0) || !(y > 0.0)) throw InvalidInput("lv_first_integral: densities must be > 0");
  return p.a_prime * x - p.r_prime * std::log(x) + p.a * y - p.r * std::log(y);
}

/// Small-amplitude oscillation period 2*pi/sqrt(r r').
inline double lv_linear_period(const LVParams& p) { return 2.0 * std::numbers::pi / std::sqrt(p.r * p.r_prime); }

/// Per-aggressor consumption rate at victim density x.
inline double functional_response_eval(const FunctionalResponse& fr, double x) {
  if (!(x >= 0.0)) throw InvalidInput("functional_response_eval: negative or NaN density");
  return std::visit(
      [x](const auto& v) -> double {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, LinearLV>) return v.a * x;
        else if constexpr (std::is_same_v<T, HollingII>) return v.a * x / (1.0 + v.a * v.h * x);
        else return v.a * (1.0 - std::exp(-v.b * x));
      },
      fr);
}

namespace detail {

// FR(x) / a, evaluated without the division.
inline double response_shape(const FunctionalResponse& fr, double x) {
  return std::visit(
      [x](const auto& v) -> double {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, LinearLV>) return x;
        else if constexpr (std::is_same_v<T, HollingII>) return x / (1.0 + v.a * v.h * x);
        else return 1.0 - std::exp(-v.b * x);
      },
      fr);
}

}  // namespace detail

/// Parameters for one pair on the mutualism-parasitism continuum.
struct ContinuumParams {
  double alpha = 1.0;  // +1 mutualism, -1 parasitism
  double base_strength = 1.0;
  double self_limitation_i = 1.0;
  double self_limitation_j = 1.0;
};

struct ContinuumFragment {
  InteractionKind kind = InteractionKind::symbiosis;
  double coef_first = 0.0;
  double coef_second = 0.0;
  FunctionalResponse response = LinearLV{};
  /// Signed per-capita coupling felt by each species: (+s, alpha*s).
  double benefit_first = 0.0;
  double benefit_second = 0.0;

  InteractionEntry to_entry(std::string first, std::string second) const {
    return {std::move(first), std::move(second), kind, coef_first, coef_second, response, std::nullopt};
  }
};

/// The first species always benefits by base_strength; the second species'
/// benefit slides linearly from +base_strength (alpha=1) to -base_strength (alpha=-1).
inline ContinuumFragment continuum_community(const ContinuumParams& p) {
  if (!(p.alpha >= -1.0 && p.alpha <= 1.0)) throw InvalidInput("continuum alpha must lie in [-1, 1]");
  if (!(p.base_strength > 0.0) || !std::isfinite(p.base_strength))
    throw InvalidInput("continuum base_strength must be > 0");
  if (!(p.self_limitation_i > 0.0) || !(p.self_limitation_j > 0.0))
    throw InvalidInput("continuum interaction requires strictly positive self-limitation");
  const double s = p.base_strength;
  ContinuumFragment f;
  f.benefit_first = s;
  f.benefit_second = p.alpha * s;
  f.coef_first = s;
  if (p.alpha >= 0.0) {
    f.kind = InteractionKind::symbiosis;
    f.coef_second = p.alpha * s;
  } else {
    f.kind = InteractionKind::parasitism;
    f.coef_second = 0.0;
    f.response = LinearLV{-p.alpha * s};
  }
  return f;
}

/// Scenario with index-resolved interactions, ready for repeated evaluation.
class CommunityModel {
 public:
  explicit CommunityModel(const Scenario& s) {
    validate_scenario(s);
    for (const auto& sp : s.species) {
      growth_.push_back(sp.role == Role::producer ? sp.growth_rate : -sp.growth_rate);
      self_.push_back(sp.self_limitation);
    }
    for (const auto& e : s.interactions) {
      Coupling c;
      c.first = *s.index_of(e.first);
      c.second = *s.index_of(e.second);
      if (e.continuum) {
        const auto frag = continuum_community({e.continuum->alpha, e.continuum->strength,
                                               s.species[c.first].self_limitation,
                                               s.species[c.second].self_limitation});
        c.kind = frag.kind;
        c.coef_first = frag.coef_first;
        c.coef_second = frag.coef_second;
        c.response = frag.response;
      } else {
        c.kind = e.kind;
        c.coef_first = e.coef_first;
        c.coef_second = e.coef_second;
        c.response = e.response;
      }
      couplings_.push_back(c);
    }
  }

  std::size_t dimension() const noexcept { return growth_.size(); }

  void operator()(std::span<const double> x, std::span<double> dx) const {
    const std::size_t n = dimension();
    for (std::size_t i = 0; i < n; ++i) {
      double d = growth_[i] >= 0.0 ? growth_[i] * x[i] : -(-growth_[i] * x[i]);
      if (self_[i] != 0.0) d -= self_[i] * x[i] * x[i];
      dx[i] = d;
    }
    for (const auto& c : couplings_) {
      const double xf = x[c.first];
      const double xs = x[c.second];
      if (is_antagonistic(c.kind)) {
        // first = aggressor, second = victim
        if (const auto* lin = std::get_if<LinearLV>(&c.response)) {
          dx[c.second] -= lin->a * xf * xs;
          dx[c.first] += c.coef_first * xs * xf;
        } else {
          dx[c.second] -= functional_response_eval(c.response, xs) * xf;
          dx[c.first] += c.coef_first * detail::response_shape(c.response, xs) * xf;
        }
      } else if (c.kind == InteractionKind::competition) {
        dx[c.first] -= c.coef_first * xf * xs;
        dx[c.second] -= c.coef_second * xf * xs;
      } else if (is_mutualistic(c.kind)) {
        dx[c.first] += c.coef_first * xf * xs;
        dx[c.second] += c.coef_second * xf * xs;
      }
    }
  }

  std::vector<double> derivative(std::span<const double> x) const {
    if (x.size() != dimension())
      throw InvalidInput("state has " + std::to_string(x.size()) + " entries, community has " +
                         std::to_string(dimension()) + " species");
    std::vector<double> dx(x.size());
    (*this)(x, dx);
    return dx;
  }

 private:
  struct Coupling {
    std::size_t first = 0;
    std::size_t second = 0;
    InteractionKind kind = InteractionKind::competition;
    double coef_first = 0.0;
    double coef_second = 0.0;
    FunctionalResponse response;
  };
  std::vector<double> growth_;
  std::vector<double> self_;
  std::vector<Coupling> couplings_;
};

/// Generalized Lotka-Volterra right-hand side for the scenario's community.
inline std::vector<double> glv_derivative(std::span<const double> state, const Scenario& s) {
  if (state.size() != s.species.size())
    throw InvalidInput("glv_derivative: dimension mismatch (" + std::to_string(state.size()) + " vs " +
                       std::to_string(s.species.size()) + ")");
  for (double v : state)
    if (!(v >= 0.0)) throw InvalidInput("glv_derivative: state must be nonnegative");
  return CommunityModel(s).derivative(state);
}

/// Two-species predator-prey scenario that reduces exactly to lv_derivative.
inline Scenario lv_scenario(const LVParams& p, double prey0, double predator0, double horizon = 100.0,
                            double step = 0.01) {
  check_lv_params(p);
  Scenario s;
  s.name = "lv-classic";
  s.species = {{"prey", "prey", Role::producer, 0, p.r, 0.0}, {"predator", "predator", Role::consumer, 1, p.r_prime, 0.0}};
  s.interactions = {{"predator", "prey", InteractionKind::predation, p.a_prime, 0.0, LinearLV{p.a}, std::nullopt}};
  s.initial_densities = {{"prey", prey0}, {"predator", predator0}};
  s.integrator.step = step;
  s.horizon = horizon;
  return s;
}

/// Recognizes the classical two-species configuration and recovers its parameters.
inline std::optional<LVParams> as_classic_lv(const Scenario& s) {
  if (s.species.size() != 2 || s.interactions.size() != 1) return std::nullopt;
  const auto& e = s.interactions.front();
  if (e.continuum || e.kind != InteractionKind::predation) return std::nullopt;
  const auto* lin = std::get_if<LinearLV>(&e.response);
  if (!lin) return std::nullopt;
  const auto ia = s.index_of(e.first);
  const auto iv = s.index_of(e.second);
  if (!ia || !iv) return std::nullopt;
  const auto& prey = s.species[*iv];
  const auto& pred = s.species[*ia];
  if (prey.role != Role::producer || pred.role != Role::consumer) return std::nullopt;
  if (prey.self_limitation != 0.0 || pred.self_limitation != 0.0) return std::nullopt;
  LVParams p{prey.growth_rate, pred.growth_rate, lin->a, e.coef_first};
  for (double v : {p.r, p.r_prime, p.a, p.a_prime})
    if (!(v > 0.0)) return std::nullopt;
  return p;
}

struct Extinction {
  std::string id;
  double time = 0.0;
  bool operator==(const Extinction&) const = default;
};

struct IntegrationResult {
  Trajectory trajectory;
  std::vector<Extinction> extinctions;
  std::vector<std::string> warnings;
  bool diverged = false;
};

/// Densities above this abort integration with a divergence report.
inline constexpr double divergence_limit = 1e12;

namespace detail {

inline std::string describe_state(double t, std::span<const double> x) {
  std::ostringstream os;
  os.precision(17);
  os << "t=" << t << ", state=(";
  for (std::size_t i = 0; i < x.size(); ++i) os << (i ? ", " : "") << x[i];
  os << ")";
  return os.str();
}

template <class F>
void eval_checked(const F& f, double t, std::span<const double> x, std::span<double> dx) {
  f(x, dx);
  for (double v : dx)
    if (!std::isfinite(v)) throw RuntimeFailure("non-finite derivative at " + describe_state(t, x));
}

struct Recorder {
  const Scenario& scenario;
  IntegrationResult& result;

  // Clamps sub-epsilon (and negative) densities to zero; returns false on divergence.
  bool accept(double t, std::vector<double>& x, std::vector<bool>& alive) {
    const double eps = scenario.integrator.extinction_epsilon;
    for (std::size_t i = 0; i < x.size(); ++i) {
      if (x[i] < eps || x[i] < 0.0) {
        if (x[i] < 0.0 && alive[i])
          result.warnings.push_back("negative density for '" + scenario.species[i].id + "' clamped to 0 at t=" +
                                    std::to_string(t));
        x[i] = 0.0;
      }
      if (alive[i] && x[i] == 0.0) {
        alive[i] = false;
        result.extinctions.push_back({scenario.species[i].id, t});
      }
    }
    result.trajectory.append(t, x);
    for (std::size_t i = 0; i < x.size(); ++i) {
      if (x[i] > divergence_limit) {
        result.diverged = true;
        result.warnings.push_back("divergence: '" + scenario.species[i].id + "' exceeded " +
                                  std::to_string(divergence_limit) + " at t=" + std::to_string(t));
        return false;
      }
    }
    return true;
  }
};

template <class F>
void integrate_rk4(const Scenario& s, const F& f, std::vector<double> x, Recorder& rec, std::vector<bool>& alive) {
  const std::size_t n = x.size();
  const double h = s.integrator.step;
  std::vector<double> k1(n), k2(n), k3(n), k4(n), tmp(n);
  double t = 0.0;
  for (std::size_t step = 1; t < s.horizon; ++step) {
    double t_next = static_cast<double>(step) * h;
    if (t_next > s.horizon || s.horizon - t_next < 1e-9 * h) t_next = s.horizon;
    const double dt = t_next - t;
    eval_checked(f, t, x, k1);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = std::max(0.0, x[i] + 0.5 * dt * k1[i]);
    eval_checked(f, t + 0.5 * dt, tmp, k2);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = std::max(0.0, x[i] + 0.5 * dt * k2[i]);
    eval_checked(f, t + 0.5 * dt, tmp, k3);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = std::max(0.0, x[i] + dt * k3[i]);
    eval_checked(f, t + dt, tmp, k4);
    for (std::size_t i = 0; i < n; ++i) x[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    t = t_next;
    if (!rec.accept(t, x, alive)) return;
  }
}

// Dormand-Prince 5(4) with PI step-size control.
template <class F>
void integrate_rk45(const Scenario& s, const F& f, std::vector<double> x, Recorder& rec, std::vector<bool>& alive) {
  static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
  static constexpr double a21 = 1.0 / 5;
  static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
  static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                          a65 = -5103.0 / 18656;
  static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784, b6 = 11.0 / 84;
  static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                          e6 = 22.0 / 525, e7 = -1.0 / 40;

  const std::size_t n = x.size();
  const auto& cfg = s.integrator;
  std::vector<double> k1(n), k2(n), k3(n), k4(n), k5(n), k6(n), k7(n), tmp(n), xn(n);
  double t = 0.0;
  double h = std::min(cfg.step, s.horizon);
  double err_prev = 1.0;

  auto stage = [&](std::span<double> out, double tt) {
    for (auto& v : tmp) v = std::max(0.0, v);
    eval_checked(f, tt, tmp, out);
  };

  eval_checked(f, t, x, k1);
  while (t < s.horizon) {
    if (h < 16.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(t)))
      throw RuntimeFailure("step-size underflow at " + describe_state(t, x));
    bool last = false;
    if (t + h >= s.horizon || s.horizon - (t + h) < 1e-12 * s.horizon) {
      h = s.horizon - t;
      last = true;
    }
    for (std::size_t i = 0; i < n; ++i) tmp[i] = x[i] + h * a21 * k1[i];
    stage(k2, t + c2 * h);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = x[i] + h * (a31 * k1[i] + a32 * k2[i]);
    stage(k3, t + c3 * h);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = x[i] + h * (a41 * k1[i] + a42 * k2[i] + a43 * k3[i]);
    stage(k4, t + c4 * h);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = x[i] + h * (a51 * k1[i] + a52 * k2[i] + a53 * k3[i] + a54 * k4[i]);
    stage(k5, t + c5 * h);
    for (std::size_t i = 0; i < n; ++i)
      tmp[i] = x[i] + h * (a61 * k1[i] + a62 * k2[i] + a63 * k3[i] + a64 * k4[i] + a65 * k5[i]);
    stage(k6, t + h);
    for (std::size_t i = 0; i < n; ++i)
      xn[i] = x[i] + h * (b1 * k1[i] + b3 * k3[i] + b4 * k4[i] + b5 * k5[i] + b6 * k6[i]);
    bool negative = false;
    for (double v : xn)
      if (v < -cfg.extinction_epsilon || !std::isfinite(v)) negative = true;
    if (negative) {
      h *= 0.5;
      continue;
    }
    eval_checked(f, t + h, xn, k7);

    double err = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double e = h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] + e7 * k7[i]);
      const double sc = cfg.abs_tol + cfg.rel_tol * std::max(std::abs(x[i]), std::abs(xn[i]));
      err += (e / sc) * (e / sc);
    }
    err = n ? std::sqrt(err / static_cast<double>(n)) : 0.0;

    if (err <= 1.0) {
      t = last ? s.horizon : t + h;
      x = xn;
      const bool clamped = std::any_of(x.begin(), x.end(), [&](double v) { return v < cfg.extinction_epsilon && v != 0.0; });
      if (!rec.accept(t, x, alive)) return;
      if (clamped) eval_checked(f, t, x, k1);
      else k1 = k7;
      const double e = std::max(err, 1e-10);
      const double factor = 0.9 * std::pow(e, -0.7 / 5.0) * std::pow(err_prev, 0.4 / 5.0);
      h *= std::clamp(factor, 0.2, 5.0);
      err_prev = e;
    } else {
      h *= std::max(0.2, 0.9 * std::pow(err, -1.0 / 5.0));
    }
  }
}

}  // namespace detail

/// Integrates an autonomous system `f(x, dx)` over the scenario's horizon,
/// starting from its initial densities. Deterministic for identical inputs.
template <class F>
IntegrationResult integrate(const Scenario& scenario, const F& f) {
  validate_scenario(scenario);
  IntegrationResult result{Trajectory(scenario.species_ids()), {}, {}, false};
  detail::Recorder rec{scenario, result};
  auto x = scenario.initial_state();
  std::vector<bool> alive(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) alive[i] = x[i] > 0.0;
  if (!rec.accept(0.0, x, alive)) return result;
  if (scenario.integrator.method == IntegratorMethod::rk4_fixed)
    detail::integrate_rk4(scenario, f, std::move(x), rec, alive);
  else
    detail::integrate_rk45(scenario, f, std::move(x), rec, alive);
  return result;
}

inline IntegrationResult simulate(const Scenario& scenario) { return integrate(scenario, CommunityModel(scenario)); }

/// Mean spacing of linearly interpolated upcrossings of `level` by column
/// `var`; nullopt when fewer than two upcrossings occur.
inline std::optional<double> measure_period(const Trajectory& tr, std::size_t var, double level) {
  std::vector<double> ups;
  const auto& t = tr.times();
  for (std::size_t i = 1; i < tr.size(); ++i) {
    const double a = tr.at(i - 1, var);
    const double b = tr.at(i, var);
    if (a < level && b >= level) ups.push_back(t[i - 1] + (level - a) / (b - a) * (t[i] - t[i - 1]));
  }
  if (ups.size() < 2) return std::nullopt;
  return (ups.back() - ups.front()) / static_cast<double>(ups.size() - 1);
}

}  // namespace ecolab
