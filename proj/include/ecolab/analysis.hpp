#pragma once

// Fixed points, local stability and parameter sweeps over community scenarios
// (and epidemic persistence sweeps).

#include <algorithm>
#include <charconv>
#include <cmath>
#include <complex>
#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ecolab/continuous.hpp"
#include "ecolab/core.hpp"
#include "ecolab/epidemic.hpp"
#include "ecolab/linalg.hpp"
#include "ecolab/parallel.hpp"

namespace ecolab {

enum class Stability { stable_node, stable_focus, center_like, unstable_node, unstable_focus, saddle, undetermined };

inline std::string_view to_string(Stability s) {
  switch (s) {
    case Stability::stable_node: return "stable_node";
    case Stability::stable_focus: return "stable_focus";
    case Stability::center_like: return "center_like";
    case Stability::unstable_node: return "unstable_node";
    case Stability::unstable_focus: return "unstable_focus";
    case Stability::saddle: return "saddle";
    case Stability::undetermined: return "undetermined";
  }
  return "?";
}

inline constexpr double default_classify_tol = 1e-7;

/// Classifies a fixed point from its Jacobian eigenvalues. A purely imaginary
/// spectrum is reported as center_like: finite precision cannot tell a true
/// center from a weak focus.
inline Stability classify(std::span<const std::complex<double>> eigs, double tol = default_classify_tol) {
  if (eigs.empty()) throw InvalidInput("classify: empty eigenvalue list");
  bool any_pos = false, any_neg = false, any_osc = false, neutral_real = false;
  for (const auto& e : eigs) {
    if (e.real() > tol) any_pos = true;
    else if (e.real() < -tol) any_neg = true;
    else if (std::abs(e.imag()) <= tol) neutral_real = true;
    if (std::abs(e.imag()) > tol) any_osc = true;
  }
  const bool any_neutral = std::any_of(eigs.begin(), eigs.end(), [&](auto e) { return std::abs(e.real()) <= tol; });
  if (any_pos && any_neg) return Stability::saddle;
  if (any_pos) return any_osc ? Stability::unstable_focus : Stability::unstable_node;
  if (!any_neutral) return any_osc ? Stability::stable_focus : Stability::stable_node;
  // Max real part within tol of zero.
  return neutral_real ? Stability::undetermined : Stability::center_like;
}

inline Stability classify(const std::vector<std::complex<double>>& eigs, double tol = default_classify_tol) {
  return classify(std::span<const std::complex<double>>(eigs), tol);
}

/// Central finite-difference Jacobian of an autonomous system f(x, dx),
/// with per-axis step fd_step * max(1, |x_i|).
template <class F>
Matrix jacobian_at(const F& f, std::span<const double> point, double fd_step = 1e-5) {
  const std::size_t n = point.size();
  Matrix J(n, n);
  std::vector<double> xp(point.begin(), point.end()), xm(point.begin(), point.end()), fp(n), fm(n);
  for (std::size_t j = 0; j < n; ++j) {
    const double h = fd_step * std::max(1.0, std::abs(point[j]));
    xp[j] = point[j] + h;
    xm[j] = point[j] - h;
    f(std::span<const double>(xp), std::span<double>(fp));
    f(std::span<const double>(xm), std::span<double>(fm));
    for (std::size_t i = 0; i < n; ++i) {
      J(i, j) = (fp[i] - fm[i]) / (xp[j] - xm[j]);
      if (!std::isfinite(J(i, j))) throw RuntimeFailure("jacobian_at: non-finite derivative evaluation");
    }
    xp[j] = xm[j] = point[j];
  }
  return J;
}

inline Matrix jacobian_at(const Scenario& s, std::span<const double> point, double fd_step = 1e-5) {
  if (point.size() != s.species.size()) throw InvalidInput("jacobian_at: point dimension does not match species count");
  return jacobian_at(CommunityModel(s), point, fd_step);
}

struct StabilityReport {
  std::vector<double> fixed_point;
  Matrix jacobian;
  std::vector<std::complex<double>> eigenvalues;
  Stability classification = Stability::undetermined;
};

inline StabilityReport stability_at(const Scenario& s, std::vector<double> point, double fd_step = 1e-5,
                                    double tol = default_classify_tol) {
  StabilityReport r;
  r.jacobian = jacobian_at(s, point, fd_step);
  r.eigenvalues = eigenvalues(r.jacobian);
  r.classification = classify(r.eigenvalues, tol);
  r.fixed_point = std::move(point);
  return r;
}

struct FixedPointOptions {
  double residual_tol = 1e-10;
  double dedup_tol = 1e-8;
  std::size_t max_iterations = 50;
  double fd_step = 1e-7;
};

struct FixedPointResult {
  std::vector<std::vector<double>> points;
  std::vector<std::string> warnings;
};

namespace detail {

inline double norm2(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

// Damped Newton with a halving line search on the residual norm.
inline std::optional<std::vector<double>> newton(const CommunityModel& f, std::vector<double> x,
                                                 const FixedPointOptions& opt) {
  const std::size_t n = x.size();
  std::vector<double> fx(n), trial(n), ft(n);
  f(x, fx);
  double res = norm2(fx);
  // Keeps iterating past the tolerance while the residual still shrinks, so
  // accepted roots are polished to rounding level.
  for (std::size_t it = 0; it < opt.max_iterations && res > 0.0; ++it) {
    if (!std::isfinite(res)) return std::nullopt;
    Matrix J;
    try {
      J = jacobian_at(f, std::span<const double>(x), opt.fd_step);
    } catch (const RuntimeFailure&) {
      return std::nullopt;
    }
    auto step = solve(J, fx);
    if (!step) return std::nullopt;
    double lambda = 1.0;
    bool improved = false;
    for (int k = 0; k < 40; ++k, lambda *= 0.5) {
      for (std::size_t i = 0; i < n; ++i) trial[i] = x[i] - lambda * (*step)[i];
      f(trial, ft);
      const double r = norm2(ft);
      if (std::isfinite(r) && r < res) {
        x = trial;
        fx = ft;
        res = r;
        improved = true;
        break;
      }
    }
    if (!improved) break;
  }
  if (res < opt.residual_tol) return x;
  return std::nullopt;
}

inline std::vector<std::vector<double>> start_lattice(const Scenario& s) {
  const std::size_t n = s.species.size();
  const auto x0 = s.initial_state();
  std::vector<double> scale(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& sp = s.species[i];
    const double carrying = sp.self_limitation > 0.0 ? sp.growth_rate / sp.self_limitation : 0.0;
    scale[i] = std::max({1.0, x0[i], carrying});
  }
  static constexpr double factors[] = {0.0, 0.1, 1.0, 10.0};
  std::vector<std::vector<double>> starts;
  if (n <= 6) {
    std::size_t total = 1;
    for (std::size_t i = 0; i < n; ++i) total *= 4;
    for (std::size_t code = 0; code < total; ++code) {
      std::vector<double> p(n);
      std::size_t c = code;
      for (std::size_t i = 0; i < n; ++i, c /= 4) p[i] = factors[c % 4] * scale[i];
      starts.push_back(std::move(p));
    }
  } else {
    for (double f : factors) {
      std::vector<double> p(n);
      for (std::size_t i = 0; i < n; ++i) p[i] = f * scale[i];
      starts.push_back(p);
      if (f == 0.0) continue;
      for (std::size_t k = 0; k < n; ++k) {
        auto q = p;
        q[k] = 0.0;
        starts.push_back(std::move(q));
      }
    }
  }
  return starts;
}

inline bool all_linear(const Scenario& s) {
  return std::all_of(s.interactions.begin(), s.interactions.end(), [](const InteractionEntry& e) {
    return e.continuum || std::holds_alternative<LinearLV>(e.response);
  });
}

// With linear couplings dx_i = x_i (r_i + sum_j A_ij x_j). Every equilibrium
// solves A_SS x_S = -r_S on its support S; returns one candidate per
// nonsingular support. A and r are read off the Jacobian at x = 1, which
// central differences give exactly up to rounding for a quadratic field.
inline std::vector<std::vector<double>> support_candidates(const CommunityModel& f, std::size_t n) {
  const std::vector<double> ones(n, 1.0);
  const Matrix J = jacobian_at(f, std::span<const double>(ones), 1e-3);
  const auto f1 = f.derivative(ones);
  Matrix A(n, n);
  std::vector<double> r(n);
  for (std::size_t i = 0; i < n; ++i) {
    double row = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      A(i, j) = i == j ? J(i, i) - f1[i] : J(i, j);
      row += A(i, j);
    }
    r[i] = f1[i] - row;
  }
  std::vector<std::vector<double>> out;
  for (std::size_t mask = 0; mask < (std::size_t{1} << n); ++mask) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < n; ++i)
      if (mask >> i & 1) idx.push_back(i);
    std::vector<double> x(n, 0.0);
    if (!idx.empty()) {
      Matrix sub(idx.size(), idx.size());
      std::vector<double> rhs(idx.size());
      for (std::size_t a = 0; a < idx.size(); ++a) {
        rhs[a] = -r[idx[a]];
        for (std::size_t b = 0; b < idx.size(); ++b) sub(a, b) = A(idx[a], idx[b]);
      }
      const auto sol = solve(sub, rhs);
      if (!sol) continue;
      for (std::size_t a = 0; a < idx.size(); ++a) x[idx[a]] = (*sol)[a];
    }
    out.push_back(std::move(x));
  }
  return out;
}

inline constexpr std::size_t max_support_enumeration = 12;

}  // namespace detail

/// Nonnegative equilibria of the scenario's community. The classical
/// two-species predator-prey configuration is answered analytically.
inline FixedPointResult find_fixed_points(const Scenario& s, const FixedPointOptions& opt = {}) {
  validate_scenario(s);
  FixedPointResult out;
  if (auto lv = as_classic_lv(s)) {
    const auto prey = *s.index_of(s.interactions.front().second);
    const auto pred = *s.index_of(s.interactions.front().first);
    const auto eq = lv_equilibrium(*lv);
    std::vector<double> interior(2);
    interior[prey] = eq[0];
    interior[pred] = eq[1];
    out.points = {{0.0, 0.0}, interior};
    return out;
  }
  const CommunityModel f(s);
  auto starts = detail::start_lattice(s);
  const std::size_t n = s.species.size();
  if (detail::all_linear(s) && n <= detail::max_support_enumeration) {
    auto exact = detail::support_candidates(f, n);
    starts.insert(starts.begin(), exact.begin(), exact.end());
  }
  for (const auto& start : starts) {
    auto root = detail::newton(f, start, opt);
    if (!root) continue;
    bool negative = false;
    for (auto& v : *root) {
      if (v < 0.0 && v > -opt.dedup_tol) v = 0.0;
      if (v < 0.0) negative = true;
    }
    if (negative) continue;
    const bool dup = std::any_of(out.points.begin(), out.points.end(), [&](const auto& p) {
      for (std::size_t i = 0; i < p.size(); ++i)
        if (std::abs(p[i] - (*root)[i]) > opt.dedup_tol * std::max(1.0, std::abs(p[i]))) return false;
      return true;
    });
    if (!dup) out.points.push_back(std::move(*root));
  }
  std::sort(out.points.begin(), out.points.end());
  if (out.points.empty()) out.warnings.push_back("Newton iteration did not converge from any start point");
  return out;
}

/// The equilibrium with the most species present (ties: largest total density).
inline std::optional<std::size_t> coexistence_index(const std::vector<std::vector<double>>& points) {
  std::optional<std::size_t> best;
  auto key = [](const std::vector<double>& p) {
    std::size_t present = 0;
    double total = 0.0;
    for (double v : p) {
      present += v > 0.0;
      total += v;
    }
    return std::pair{present, total};
  };
  for (std::size_t i = 0; i < points.size(); ++i)
    if (!best || key(points[i]) > key(points[*best])) best = i;
  return best;
}

/// Assigns `value` to the scenario field addressed by `path`:
///   species.<id>.growth_rate | species.<id>.self_limitation
///   interactions.<k>.coef_first | coef_second | alpha | strength | response.a | response.h | response.b
///   initial.<id> | horizon
inline void set_parameter(Scenario& s, std::string_view path, double value) {
  auto fail = [&]() -> void { throw InvalidInput("unresolvable parameter path '" + std::string(path) + "'"); };
  std::vector<std::string_view> parts;
  for (std::size_t start = 0;;) {
    const auto dot = path.find('.', start);
    parts.push_back(path.substr(start, dot == std::string_view::npos ? std::string_view::npos : dot - start));
    if (dot == std::string_view::npos) break;
    start = dot + 1;
  }
  if (parts.size() == 1 && parts[0] == "horizon") {
    s.horizon = value;
    return;
  }
  if (parts.size() == 2 && parts[0] == "initial") {
    if (!s.index_of(parts[1])) fail();
    s.initial_densities[std::string(parts[1])] = value;
    return;
  }
  if (parts.size() == 3 && parts[0] == "species") {
    const auto idx = s.index_of(parts[1]);
    if (!idx) fail();
    auto& sp = s.species[*idx];
    if (parts[2] == "growth_rate") sp.growth_rate = value;
    else if (parts[2] == "self_limitation") sp.self_limitation = value;
    else fail();
    return;
  }
  if ((parts.size() == 3 || parts.size() == 4) && parts[0] == "interactions") {
    std::size_t k = 0;
    const auto r = std::from_chars(parts[1].data(), parts[1].data() + parts[1].size(), k);
    if (r.ec != std::errc{} || r.ptr != parts[1].data() + parts[1].size() || k >= s.interactions.size()) fail();
    auto& e = s.interactions[k];
    if (parts.size() == 3) {
      if (parts[2] == "coef_first" && !e.continuum) e.coef_first = value;
      else if (parts[2] == "coef_second" && !e.continuum) e.coef_second = value;
      else if (parts[2] == "alpha" && e.continuum) e.continuum->alpha = value;
      else if (parts[2] == "strength" && e.continuum) e.continuum->strength = value;
      else fail();
      return;
    }
    if (parts[2] != "response" || e.continuum) fail();
    bool done = false;
    std::visit(
        [&](auto& fr) {
          using T = std::decay_t<decltype(fr)>;
          if (parts[3] == "a") {
            fr.a = value;
            done = true;
          }
          if constexpr (std::is_same_v<T, HollingII>)
            if (parts[3] == "h") fr.h = value, done = true;
          if constexpr (std::is_same_v<T, IvlevSaturating>)
            if (parts[3] == "b") fr.b = value, done = true;
        },
        e.response);
    if (!done) fail();
    return;
  }
  fail();
}

struct SweepPoint {
  double value = 0.0;
  /// What transitions are detected on (classification name, extinction set, ...).
  std::string label;
  std::optional<Stability> classification;
  std::vector<double> fixed_point;
  std::vector<double> final_densities;
  std::vector<std::string> extinct;
  std::optional<double> metric;
};

struct Transition {
  std::size_t index = 0;  // between grid points index and index + 1
  double from_value = 0.0;
  double to_value = 0.0;
  std::string from_label;
  std::string to_label;
};

struct SweepReport {
  std::string parameter;
  std::vector<double> grid;
  std::vector<SweepPoint> points;
  std::vector<Transition> transitions;
};

/// Per-point evaluation of a modified scenario.
using SweepMetric = std::function<SweepPoint(const Scenario&)>;

/// Label = classification of the coexistence equilibrium.
inline SweepPoint classification_metric(const Scenario& s) {
  SweepPoint p;
  const auto fp = find_fixed_points(s);
  const auto best = coexistence_index(fp.points);
  if (!best) {
    p.label = std::string(to_string(Stability::undetermined));
    p.classification = Stability::undetermined;
    return p;
  }
  const auto rep = stability_at(s, fp.points[*best]);
  p.classification = rep.classification;
  p.label = std::string(to_string(rep.classification));
  p.fixed_point = rep.fixed_point;
  return p;
}

/// Label = set of species extinct at the horizon.
inline SweepPoint extinction_metric(const Scenario& s) {
  SweepPoint p;
  const auto run = simulate(s);
  const auto last = run.trajectory.back();
  p.final_densities.assign(last.begin(), last.end());
  for (std::size_t i = 0; i < last.size(); ++i)
    if (last[i] == 0.0) p.extinct.push_back(s.species[i].id);
  if (run.diverged) p.label = "diverged";
  else if (p.extinct.empty()) p.label = "none";
  else
    for (std::size_t i = 0; i < p.extinct.size(); ++i) p.label += (i ? "," : "") + p.extinct[i];
  return p;
}

namespace detail {

inline void check_grid(std::span<const double> grid) {
  if (grid.empty()) throw InvalidInput("sweep grid is empty");
  const bool up = grid.size() < 2 || grid[1] > grid[0];
  for (std::size_t i = 1; i < grid.size(); ++i)
    if (up ? !(grid[i] > grid[i - 1]) : !(grid[i] < grid[i - 1]))
      throw InvalidInput("sweep grid must be strictly monotone");
}

inline SweepReport run_sweep(std::string parameter, std::vector<double> grid,
                             const std::function<SweepPoint(double)>& eval) {
  check_grid(grid);
  SweepReport rep;
  rep.parameter = std::move(parameter);
  rep.points.resize(grid.size());
  parallel_for(grid.size(), [&](std::size_t i) {
    rep.points[i] = eval(grid[i]);
    rep.points[i].value = grid[i];
  });
  for (std::size_t i = 0; i + 1 < grid.size(); ++i)
    if (rep.points[i].label != rep.points[i + 1].label)
      rep.transitions.push_back({i, grid[i], grid[i + 1], rep.points[i].label, rep.points[i + 1].label});
  rep.grid = std::move(grid);
  return rep;
}

}  // namespace detail

/// Evenly spaced grid from `from` to `to` inclusive.
inline std::vector<double> linear_grid(double from, double to, std::size_t points) {
  if (points < 2) return {from};
  std::vector<double> g(points);
  for (std::size_t i = 0; i < points; ++i)
    g[i] = i + 1 == points ? to : from + (to - from) * static_cast<double>(i) / static_cast<double>(points - 1);
  return g;
}

/// Re-validates and re-analyzes the scenario at each grid value. Results are
/// ordered by grid index regardless of worker scheduling.
inline SweepReport sweep(const Scenario& base, const std::string& path, std::vector<double> grid,
                         const SweepMetric& metric = classification_metric) {
  {
    Scenario probe = base;
    set_parameter(probe, path, grid.empty() ? 0.0 : grid.front());
  }
  return detail::run_sweep(path, std::move(grid), [&](double v) {
    Scenario s = base;
    set_parameter(s, path, v);
    validate_scenario(s);
    return metric(s);
  });
}

/// Sweeps beta or gamma of an epidemic; the metric is the persistence
/// fraction and the label is "persistent" when it reaches 0.5.
inline SweepReport sweep_epidemic(const Graph& g, double beta, double gamma, const std::string& path,
                                  std::vector<double> grid, PersistenceConfig cfg) {
  if (path != "beta" && path != "gamma") throw InvalidInput("unresolvable parameter path '" + path + "'");
  // persistence_fraction parallelizes over runs; keep grid points sequential.
  detail::check_grid(grid);
  SweepReport rep;
  rep.parameter = path;
  for (double v : grid) {
    SweepPoint p;
    p.value = v;
    const double frac = persistence_fraction(g, path == "beta" ? v : beta, path == "gamma" ? v : gamma, cfg);
    p.metric = frac;
    p.label = frac >= 0.5 ? "persistent" : "dies_out";
    rep.points.push_back(std::move(p));
  }
  for (std::size_t i = 0; i + 1 < grid.size(); ++i)
    if (rep.points[i].label != rep.points[i + 1].label)
      rep.transitions.push_back({i, grid[i], grid[i + 1], rep.points[i].label, rep.points[i + 1].label});
  rep.grid = std::move(grid);
  return rep;
}

}  // namespace ecolab
