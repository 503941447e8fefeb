#pragma once

// Non-antagonistic and informational interactions: the multivariate
// selection-response recursion for male display (D), female preference (P)
// and residual fitness (F), Hamilton's rule, and a frequency-dependent
// Batesian mimicry payoff model.

#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "ecolab/core.hpp"
#include "ecolab/linalg.hpp"

namespace ecolab {

using Vec3 = std::array<double, 3>;
using Mat3 = std::array<Vec3, 3>;

// Trait order in every Vec3/Mat3 below: display D, preference P, residual fitness F.

/// Symmetric 3x3 variance-covariance matrix built from its six distinct entries.
struct GMatrix {
  double var_d = 0.0;
  double var_p = 0.0;
  double var_f = 0.0;
  double cov_pd = 0.0;
  double cov_fd = 0.0;
  double cov_fp = 0.0;

  Mat3 full() const {
    return {{{var_d, cov_pd, cov_fd}, {cov_pd, var_p, cov_fp}, {cov_fd, cov_fp, var_f}}};
  }

  bool operator==(const GMatrix&) const = default;
};

/// Tolerance on the smallest eigenvalue of G.
inline constexpr double psd_floor = -1e-10;

struct SelectionState {
  Vec3 means{};
  GMatrix G;
  Vec3 b_natural{};
  Vec3 b_sexual{};
  Vec3 mutation{};

  bool operator==(const SelectionState&) const = default;
};

inline double min_eigenvalue(const GMatrix& g) {
  const auto m = g.full();
  Matrix a(3, 3);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j) a(i, j) = m[i][j];
  double lo = std::numeric_limits<double>::infinity();
  for (const auto& ev : eigenvalues(a)) lo = std::min(lo, ev.real());
  return lo;
}

inline void check_selection_state(const SelectionState& s) {
  auto finite = [](const Vec3& v) { return std::isfinite(v[0]) && std::isfinite(v[1]) && std::isfinite(v[2]); };
  const auto& g = s.G;
  for (double v : {g.var_d, g.var_p, g.var_f, g.cov_pd, g.cov_fd, g.cov_fp})
    if (!std::isfinite(v)) throw InvalidInput("G has a non-finite entry");
  if (!finite(s.means) || !finite(s.b_natural) || !finite(s.b_sexual) || !finite(s.mutation))
    throw InvalidInput("selection state has a non-finite entry");
  if (const double lo = min_eigenvalue(g); lo < psd_floor)
    throw InvalidInput("G is not positive semi-definite (smallest eigenvalue " + std::to_string(lo) + ")");
}

struct SelectionStepResult {
  Vec3 delta{};
  SelectionState next;
};

/// delta = G (b_n + b_s) + u; the returned state has means advanced by delta
/// and everything else unchanged.
inline SelectionStepResult selection_step(const SelectionState& s) {
  check_selection_state(s);
  const auto G = s.G.full();
  Vec3 b{};
  for (std::size_t i = 0; i < 3; ++i) b[i] = s.b_natural[i] + s.b_sexual[i];
  SelectionStepResult r{{}, s};
  for (std::size_t i = 0; i < 3; ++i) {
    r.delta[i] = G[i][0] * b[0] + G[i][1] * b[1] + G[i][2] * b[2] + s.mutation[i];
    r.next.means[i] += r.delta[i];
  }
  return r;
}

/// Selection gradient as a function of the current trait means.
using GradientFn = std::function<Vec3(const Vec3& means)>;

inline GradientFn constant_gradient(Vec3 v) {
  return [v](const Vec3&) { return v; };
}

/// b(means) = M * means + offset
inline GradientFn linear_gradient(Mat3 m, Vec3 offset = {}) {
  return [m, offset](const Vec3& x) {
    Vec3 out = offset;
    for (std::size_t i = 0; i < 3; ++i)
      for (std::size_t j = 0; j < 3; ++j) out[i] += m[i][j] * x[j];
    return out;
  };
}

/// Iterates the recursion, refreshing both gradients from the means before
/// every step. Row k of the result holds the means after k steps.
inline std::vector<Vec3> run_selection(SelectionState s, const GradientFn& natural, const GradientFn& sexual,
                                       std::size_t steps) {
  std::vector<Vec3> path{s.means};
  path.reserve(steps + 1);
  for (std::size_t k = 0; k < steps; ++k) {
    s.b_natural = natural(s.means);
    s.b_sexual = sexual(s.means);
    s = selection_step(s).next;
    path.push_back(s.means);
  }
  return path;
}

struct KinSelectionParams {
  double relatedness = 0.0;  // r in [0, 1]
  double benefit = 0.0;      // b, to the receiver
  double cost = 0.0;         // c, to the donor
};

/// Hamilton's rule r b > c (ties are not favored).
inline bool hamilton_favored(const KinSelectionParams& p) {
  if (!(p.relatedness >= 0.0 && p.relatedness <= 1.0)) throw InvalidInput("relatedness must lie in [0, 1]");
  if (!(p.benefit >= 0.0) || !(p.cost >= 0.0)) throw InvalidInput("benefit and cost must be >= 0");
  return p.relatedness * p.benefit > p.cost;
}

struct MimicryParams {
  double n_model = 1.0;  // defended model density, > 0
  double n_mimic = 0.0;
  double venom_cost = 1.0;  // predator's cost of attacking a model
  double prey_value = 1.0;  // predator's gain from eating a mimic
  double signal_cost_mimic = 0.0;
  double weapon_cost_model = 1.0;

  bool operator==(const MimicryParams&) const = default;
};

struct MimicryPayoffs {
  double mimic_frequency = 0.0;
  double attack_probability = 0.0;
  double mimic_net_payoff = 0.0;
  double model_net_payoff = 0.0;
  double predator_expected_payoff = 0.0;
};

inline void check_mimicry_params(const MimicryParams& p) {
  for (double v : {p.n_model, p.n_mimic, p.venom_cost, p.prey_value, p.signal_cost_mimic, p.weapon_cost_model})
    if (!std::isfinite(v)) throw InvalidInput("mimicry parameters must be finite");
  if (!(p.n_model > 0.0)) throw InvalidInput("n_model must be > 0");
  if (p.n_mimic < 0.0 || p.signal_cost_mimic < 0.0) throw InvalidInput("n_mimic and signal_cost_mimic must be >= 0");
  if (!(p.venom_cost > 0.0) || !(p.prey_value > 0.0) || !(p.weapon_cost_model > 0.0))
    throw InvalidInput("venom_cost, prey_value and weapon_cost_model must be > 0");
}

/// A predator facing the shared warning signal attacks iff its expected
/// payoff f*prey_value - (1-f)*venom_cost is strictly positive.
inline MimicryPayoffs mimicry_payoffs(const MimicryParams& p) {
  check_mimicry_params(p);
  MimicryPayoffs out;
  const double f = p.n_mimic / (p.n_mimic + p.n_model);
  out.mimic_frequency = f;
  out.predator_expected_payoff = f * p.prey_value - (1.0 - f) * p.venom_cost;
  out.attack_probability = out.predator_expected_payoff > 0.0 ? 1.0 : 0.0;
  const double survival = (1.0 - out.attack_probability) * p.prey_value;
  out.mimic_net_payoff = survival - p.signal_cost_mimic;
  out.model_net_payoff = survival - p.weapon_cost_model;
  return out;
}

/// Mimic frequency at which the predator is indifferent to attacking.
inline double mimicry_indifference_frequency(const MimicryParams& p) {
  return p.venom_cost / (p.venom_cost + p.prey_value);
}

}  // namespace ecolab
