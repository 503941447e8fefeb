#pragma once

// Discrete-generation host-parasitoid dynamics (classical Nicholson-Bailey)
// and a generic map iteration driver producing Trajectory output.

#include <array>
#include <cmath>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "ecolab/core.hpp"

namespace ecolab {

struct NBParams {
  double R = 2.0;  // host growth factor per generation
  double a = 0.1;  // parasitoid search efficiency
  double c = 1.0;  // parasitoids produced per parasitized host

  bool operator==(const NBParams&) const = default;
};

inline void check_nb_params(const NBParams& p) {
  for (double v : {p.R, p.a, p.c})
    if (!(v > 0.0) || !std::isfinite(v)) throw InvalidInput("NBParams: R, a, c must be finite and > 0");
}

///   H' = R H exp(-a P),   P' = c H (1 - exp(-a P))
inline std::array<double, 2> nicholson_bailey_step(double host, double parasitoid, const NBParams& p) {
  if (!std::isfinite(host) || !std::isfinite(parasitoid)) throw InvalidInput("nicholson_bailey_step: non-finite input");
  if (host < 0.0 || parasitoid < 0.0) throw InvalidInput("nicholson_bailey_step: negative density");
  const double escape = std::exp(-p.a * parasitoid);
  // -expm1 keeps 1 - e^{-aP} accurate for small aP
  return {p.R * host * escape, p.c * host * -std::expm1(-p.a * parasitoid)};
}

/// Coexistence fixed point; requires R > 1.
inline std::array<double, 2> nicholson_bailey_equilibrium(const NBParams& p) {
  check_nb_params(p);
  if (!(p.R > 1.0)) throw InvalidInput("Nicholson-Bailey equilibrium exists only for R > 1");
  const double lnR = std::log(p.R);
  return {p.R * lnR / (p.a * p.c * (p.R - 1.0)), lnR / p.a};
}

/// Iterates `step(state) -> next state` for n generations. Times are the
/// generation indices 0..n. Values below extinction_epsilon are set to 0.
template <class Step>
Trajectory iterate_map(const Step& step, std::vector<double> state, std::size_t generations,
                       std::vector<std::string> names, double extinction_epsilon = 0.0) {
  if (names.size() != state.size()) throw InvalidInput("iterate_map: names/state size mismatch");
  auto clamp = [&](std::vector<double>& s) {
    for (auto& v : s)
      if (v < extinction_epsilon) v = 0.0;
  };
  Trajectory tr(std::move(names));
  clamp(state);
  tr.append(0.0, state);
  for (std::size_t g = 1; g <= generations; ++g) {
    std::vector<double> next = step(std::as_const(state));
    if (next.size() != state.size())
      throw RuntimeFailure("iterate_map: step changed the state dimension at generation " + std::to_string(g));
    for (double v : next)
      if (!std::isfinite(v)) throw RuntimeFailure("iterate_map: non-finite value at generation " + std::to_string(g));
    clamp(next);
    state = std::move(next);
    tr.append(static_cast<double>(g), state);
  }
  return tr;
}

inline Trajectory run_nicholson_bailey(const NBParams& p, double host0, double parasitoid0, std::size_t generations,
                                       double extinction_epsilon = 1e-9) {
  check_nb_params(p);
  return iterate_map(
      [&](const std::vector<double>& s) {
        const auto n = nicholson_bailey_step(s[0], s[1], p);
        return std::vector<double>{n[0], n[1]};
      },
      {host0, parasitoid0}, generations, {"host", "parasitoid"}, extinction_epsilon);
}

/// Strict local maxima of a series, stopping at its first zero (extinction).
inline std::vector<double> oscillation_peaks(const std::vector<double>& series) {
  std::vector<double> peaks;
  std::size_t end = series.size();
  for (std::size_t i = 0; i < series.size(); ++i)
    if (series[i] == 0.0) {
      end = i;
      break;
    }
  for (std::size_t i = 1; i + 1 < end; ++i)
    if (series[i] > series[i - 1] && series[i] >= series[i + 1]) peaks.push_back(series[i]);
  return peaks;
}

}  // namespace ecolab
