#pragma once

// Pathogen spread on contact graphs: graph generators, an exact event-driven
// SIS/SIR simulator, and transmission-threshold estimates (degree-based mean
// field and Monte Carlo bisection).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <istream>
#include <limits>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "ecolab/core.hpp"
#include "ecolab/parallel.hpp"
#include "ecolab/random.hpp"

namespace ecolab {

using Edge = std::pair<std::size_t, std::size_t>;

enum class GraphGenerator { complete, erdos_renyi, barabasi_albert, explicit_edges };

inline std::string_view to_string(GraphGenerator g) {
  switch (g) {
    case GraphGenerator::complete: return "complete";
    case GraphGenerator::erdos_renyi: return "erdos_renyi";
    case GraphGenerator::barabasi_albert: return "barabasi_albert";
    case GraphGenerator::explicit_edges: return "explicit";
  }
  return "?";
}

/// Undirected simple graph on nodes [0, n).
class Graph {
 public:
  Graph() = default;

  Graph(std::size_t n, std::vector<Edge> edges, GraphGenerator tag = GraphGenerator::explicit_edges)
      : n_(n), tag_(tag) {
    if (n == 0) throw InvalidInput("graph must have at least one node");
    for (auto& [u, v] : edges) {
      if (u >= n || v >= n)
        throw InvalidInput("edge (" + std::to_string(u) + ", " + std::to_string(v) + ") outside node range [0, " +
                           std::to_string(n) + ")");
      if (u == v) throw InvalidInput("self-loop on node " + std::to_string(u));
      if (u > v) std::swap(u, v);
    }
    std::sort(edges.begin(), edges.end());
    if (auto it = std::adjacent_find(edges.begin(), edges.end()); it != edges.end())
      throw InvalidInput("duplicate edge (" + std::to_string(it->first) + ", " + std::to_string(it->second) + ")");
    edges_ = std::move(edges);
    adjacency_.assign(n, {});
    for (const auto& [u, v] : edges_) {
      adjacency_[u].push_back(v);
      adjacency_[v].push_back(u);
    }
  }

  std::size_t node_count() const noexcept { return n_; }
  std::size_t edge_count() const noexcept { return edges_.size(); }
  const std::vector<Edge>& edges() const noexcept { return edges_; }
  const std::vector<std::size_t>& neighbors(std::size_t v) const { return adjacency_[v]; }
  std::size_t degree(std::size_t v) const { return adjacency_[v].size(); }
  GraphGenerator generator() const noexcept { return tag_; }

  std::size_t max_degree() const {
    std::size_t m = 0;
    for (const auto& a : adjacency_) m = std::max(m, a.size());
    return m;
  }

  double mean_degree() const { return 2.0 * static_cast<double>(edges_.size()) / static_cast<double>(n_); }

 private:
  std::size_t n_ = 0;
  std::vector<Edge> edges_;
  std::vector<std::vector<std::size_t>> adjacency_;
  GraphGenerator tag_ = GraphGenerator::explicit_edges;
};

struct GraphSpec {
  GraphGenerator generator = GraphGenerator::complete;
  std::size_t n = 0;
  double p = 0.0;          // erdos_renyi
  std::size_t m = 1;       // barabasi_albert
  std::vector<Edge> edges;  // explicit
  std::uint64_t seed = 0;

  bool operator==(const GraphSpec&) const = default;
};

inline Graph complete_graph(std::size_t n) {
  std::vector<Edge> e;
  e.reserve(n * (n - 1) / 2);
  for (std::size_t u = 0; u < n; ++u)
    for (std::size_t v = u + 1; v < n; ++v) e.emplace_back(u, v);
  return Graph(n, std::move(e), GraphGenerator::complete);
}

inline Graph erdos_renyi_graph(std::size_t n, double p, std::uint64_t seed) {
  if (!(p >= 0.0 && p <= 1.0)) throw InvalidInput("erdos_renyi: p must lie in [0, 1]");
  Rng rng(seed);
  std::vector<Edge> e;
  for (std::size_t u = 0; u < n; ++u)
    for (std::size_t v = u + 1; v < n; ++v)
      if (rng.uniform() < p) e.emplace_back(u, v);
  return Graph(n, std::move(e), GraphGenerator::erdos_renyi);
}

/// Preferential attachment: a clique on nodes 0..m, then each new node links to
/// m distinct existing nodes drawn proportionally to degree.
inline Graph barabasi_albert_graph(std::size_t n, std::size_t m, std::uint64_t seed) {
  if (m < 1 || m >= n) throw InvalidInput("barabasi_albert: need 1 <= m < n");
  Rng rng(seed);
  std::vector<Edge> e;
  std::vector<std::size_t> stubs;  // node repeated once per incident edge end
  for (std::size_t u = 0; u <= m; ++u)
    for (std::size_t v = u + 1; v <= m; ++v) {
      e.emplace_back(u, v);
      stubs.push_back(u);
      stubs.push_back(v);
    }
  std::vector<std::size_t> chosen;
  for (std::size_t v = m + 1; v < n; ++v) {
    chosen.clear();
    while (chosen.size() < m) {
      const std::size_t t = stubs[rng.index(stubs.size())];
      if (std::find(chosen.begin(), chosen.end(), t) == chosen.end()) chosen.push_back(t);
    }
    for (std::size_t t : chosen) {
      e.emplace_back(t, v);
      stubs.push_back(t);
      stubs.push_back(v);
    }
  }
  return Graph(n, std::move(e), GraphGenerator::barabasi_albert);
}

inline Graph build_graph(const GraphSpec& spec) {
  switch (spec.generator) {
    case GraphGenerator::complete:
      if (spec.n == 0) throw InvalidInput("complete graph needs n >= 1");
      return complete_graph(spec.n);
    case GraphGenerator::erdos_renyi:
      if (spec.n == 0) throw InvalidInput("erdos_renyi graph needs n >= 1");
      return erdos_renyi_graph(spec.n, spec.p, spec.seed);
    case GraphGenerator::barabasi_albert: return barabasi_albert_graph(spec.n, spec.m, spec.seed);
    case GraphGenerator::explicit_edges: return Graph(spec.n, spec.edges, GraphGenerator::explicit_edges);
  }
  throw InvalidInput("unknown graph generator");
}

/// Parses "u v" lines (0-indexed). Blank lines and lines starting with '#' are
/// skipped. Node count is max index + 1 unless `n` is given.
inline Graph read_edge_list(std::istream& in, std::optional<std::size_t> n = std::nullopt) {
  std::vector<Edge> edges;
  std::size_t max_node = 0;
  std::string line;
  for (std::size_t lineno = 1; std::getline(in, line); ++lineno) {
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream ls(line);
    long long u = -1, v = -1;
    std::string rest;
    if (!(ls >> u >> v) || u < 0 || v < 0 || (ls >> rest))
      throw InvalidInput("edge list line " + std::to_string(lineno) + ": expected two non-negative integers");
    edges.emplace_back(static_cast<std::size_t>(u), static_cast<std::size_t>(v));
    max_node = std::max({max_node, static_cast<std::size_t>(u), static_cast<std::size_t>(v)});
  }
  const std::size_t nodes = n ? *n : (edges.empty() ? 0 : max_node + 1);
  return Graph(nodes, std::move(edges), GraphGenerator::explicit_edges);
}

inline std::string write_edge_list(const Graph& g) {
  std::string out;
  for (const auto& [u, v] : g.edges()) out += std::to_string(u) + ' ' + std::to_string(v) + '\n';
  return out;
}

enum class EpidemicKind { SIS, SIR };

inline std::string_view to_string(EpidemicKind k) { return k == EpidemicKind::SIS ? "SIS" : "SIR"; }

struct EpidemicModel {
  Graph graph;
  EpidemicKind kind = EpidemicKind::SIS;
  double beta = 0.0;   // infection rate per S-I edge
  double gamma = 1.0;  // recovery rate per infected node
  std::vector<std::size_t> initial_infected;
  std::uint64_t seed = 0;
};

inline void validate_model(const EpidemicModel& m) {
  std::vector<Issue> issues;
  auto bad = [&](std::string msg) { issues.push_back({IssueCode::invalid_model, std::move(msg)}); };
  if (!(m.beta >= 0.0) || !std::isfinite(m.beta)) bad("beta must be finite and >= 0");
  if (!(m.gamma > 0.0) || !std::isfinite(m.gamma)) bad("gamma must be finite and > 0");
  if (m.initial_infected.empty()) bad("initial_infected must not be empty");
  std::set<std::size_t> seen;
  for (auto v : m.initial_infected) {
    if (v >= m.graph.node_count()) bad("initial infected node " + std::to_string(v) + " outside graph");
    if (!seen.insert(v).second) bad("initial infected node " + std::to_string(v) + " listed twice");
  }
  if (!issues.empty()) throw ValidationError(std::move(issues));
}

struct PrevalenceTrajectory {
  EpidemicKind kind = EpidemicKind::SIS;
  std::vector<double> times;
  std::vector<double> infected_fraction;
  std::vector<double> recovered_fraction;  // SIR only
  std::optional<double> extinction_time;

  bool persists() const { return !extinction_time.has_value(); }

  Trajectory to_trajectory() const {
    const bool sir = kind == EpidemicKind::SIR;
    Trajectory tr(sir ? std::vector<std::string>{"infected", "recovered"} : std::vector<std::string>{"infected"});
    for (std::size_t i = 0; i < times.size(); ++i) {
      if (sir) tr.append(times[i], std::vector<double>{infected_fraction[i], recovered_fraction[i]});
      else tr.append(times[i], std::vector<double>{infected_fraction[i]});
    }
    return tr;
  }

  bool operator==(const PrevalenceTrajectory&) const = default;
};

/// Exact continuous-time simulation. Infection attempts are drawn at rate
/// beta * (sum of infected degrees) along a random edge of a degree-weighted
/// infected node; attempts that hit a non-susceptible node are null events.
inline PrevalenceTrajectory simulate_epidemic(const EpidemicModel& model, double horizon, double sample_dt) {
  validate_model(model);
  if (!(horizon > 0.0) || !(sample_dt > 0.0)) throw InvalidInput("horizon and sample_dt must be > 0");
  enum : unsigned char { S, I, R };
  const auto& g = model.graph;
  const std::size_t n = g.node_count();
  const double inv_n = 1.0 / static_cast<double>(n);
  const auto max_deg = static_cast<double>(g.max_degree());
  Rng rng(model.seed);

  std::vector<unsigned char> state(n, S);
  std::vector<std::size_t> infected;
  std::vector<std::size_t> pos(n, 0);
  double infected_degree = 0.0;
  std::size_t recovered = 0;

  auto infect = [&](std::size_t v) {
    state[v] = I;
    pos[v] = infected.size();
    infected.push_back(v);
    infected_degree += static_cast<double>(g.degree(v));
  };
  auto cure = [&](std::size_t idx) {
    const std::size_t v = infected[idx];
    infected[idx] = infected.back();
    pos[infected[idx]] = idx;
    infected.pop_back();
    infected_degree -= static_cast<double>(g.degree(v));
    if (model.kind == EpidemicKind::SIS) {
      state[v] = S;
    } else {
      state[v] = R;
      ++recovered;
    }
  };
  for (auto v : model.initial_infected) infect(v);

  PrevalenceTrajectory out;
  out.kind = model.kind;
  const auto samples = static_cast<std::size_t>(std::floor(horizon / sample_dt + 1e-9)) + 1;
  std::size_t k = 0;
  auto record_until = [&](double t_exclusive) {
    for (; k < samples; ++k) {
      const double ts = static_cast<double>(k) * sample_dt;
      if (!(ts < t_exclusive)) break;
      out.times.push_back(ts);
      out.infected_fraction.push_back(static_cast<double>(infected.size()) * inv_n);
      if (model.kind == EpidemicKind::SIR) out.recovered_fraction.push_back(static_cast<double>(recovered) * inv_n);
    }
  };

  double t = 0.0;
  while (true) {
    if (infected.empty()) {
      out.extinction_time = t;
      record_until(std::numeric_limits<double>::infinity());
      break;
    }
    const double infection_rate = model.beta * infected_degree;
    const double recovery_rate = model.gamma * static_cast<double>(infected.size());
    const double total = infection_rate + recovery_rate;
    const double t_event = t + rng.exponential(total);
    if (t_event > horizon) {
      record_until(std::numeric_limits<double>::infinity());
      break;
    }
    record_until(t_event);
    t = t_event;
    if (rng.uniform() * total < recovery_rate) {
      cure(rng.index(infected.size()));
    } else {
      std::size_t src = 0;
      do {
        src = infected[rng.index(infected.size())];
      } while (rng.uniform() * max_deg >= static_cast<double>(g.degree(src)));
      const auto& nb = g.neighbors(src);
      const std::size_t target = nb[rng.index(nb.size())];
      if (state[target] == S) infect(target);
    }
  }
  return out;
}

/// Degree-based mean-field threshold gamma * <k> / <k^2>.
inline double meanfield_threshold(const Graph& g, double gamma) {
  if (g.edge_count() == 0) throw InvalidInput("meanfield_threshold: graph has no edges");
  double k1 = 0.0, k2 = 0.0;
  for (std::size_t v = 0; v < g.node_count(); ++v) {
    const auto k = static_cast<double>(g.degree(v));
    k1 += k;
    k2 += k * k;
  }
  const auto n = static_cast<double>(g.node_count());
  return gamma * (k1 / n) / (k2 / n);
}

/// Monte Carlo persistence experiment shared by threshold estimation and sweeps.
struct PersistenceConfig {
  EpidemicKind kind = EpidemicKind::SIS;
  std::size_t runs = 100;
  double horizon = 200.0;
  std::uint64_t seed = 0;
  /// Fixed initial set; when empty a random `initial_fraction` of nodes (>= 1) is drawn per run.
  std::vector<std::size_t> initial_infected;
  double initial_fraction = 0.1;
};

/// Fraction of runs with infected nodes remaining at the horizon. Run i uses
/// seed derive_seed(config.seed, i) whatever the worker schedule.
inline double persistence_fraction(const Graph& g, double beta, double gamma, const PersistenceConfig& cfg) {
  if (cfg.runs == 0) throw InvalidInput("persistence experiment needs at least one run");
  std::vector<unsigned char> alive(cfg.runs, 0);
  parallel_for(cfg.runs, [&](std::size_t i) {
    const std::uint64_t run_seed = derive_seed(cfg.seed, i);
    EpidemicModel m;
    m.graph = g;
    m.kind = cfg.kind;
    m.beta = beta;
    m.gamma = gamma;
    m.seed = derive_seed(run_seed, 1);
    if (!cfg.initial_infected.empty()) {
      m.initial_infected = cfg.initial_infected;
    } else {
      const std::size_t n = g.node_count();
      const auto k = std::clamp<std::size_t>(
          static_cast<std::size_t>(std::llround(cfg.initial_fraction * static_cast<double>(n))), 1, n);
      std::vector<std::size_t> nodes(n);
      for (std::size_t v = 0; v < n; ++v) nodes[v] = v;
      Rng pick(derive_seed(run_seed, 0));
      for (std::size_t j = 0; j < k; ++j) std::swap(nodes[j], nodes[j + pick.index(n - j)]);
      m.initial_infected.assign(nodes.begin(), nodes.begin() + static_cast<std::ptrdiff_t>(k));
    }
    alive[i] = simulate_epidemic(m, cfg.horizon, cfg.horizon).persists() ? 1 : 0;
  });
  std::size_t count = 0;
  for (auto a : alive) count += a;
  return static_cast<double>(count) / static_cast<double>(cfg.runs);
}

class BracketError : public RuntimeFailure {
 public:
  using RuntimeFailure::RuntimeFailure;
};

struct ThresholdEstimate {
  double estimate = 0.0;
  double bracket_low = 0.0;
  double bracket_high = 0.0;
  double bracket_width() const { return bracket_high - bracket_low; }
  /// (beta, persistence fraction) for every evaluated point, in evaluation order.
  std::vector<std::pair<double, double>> evaluations;
};

/// Bisection on beta against "persistence fraction >= 0.5". The range must
/// bracket the transition: fraction < 0.1 at the low end and > 0.9 at the high end.
inline ThresholdEstimate estimate_threshold_empirical(const Graph& g, double gamma, double beta_low, double beta_high,
                                                      const PersistenceConfig& cfg, std::size_t bisections = 8) {
  if (!(gamma > 0.0)) throw InvalidInput("gamma must be > 0");
  if (!(beta_low >= 0.0) || !(beta_high > beta_low)) throw InvalidInput("beta range must satisfy 0 <= low < high");
  ThresholdEstimate est;
  auto eval = [&](double beta) {
    const double f = persistence_fraction(g, beta, gamma, cfg);
    est.evaluations.emplace_back(beta, f);
    return f;
  };
  const double f_low = eval(beta_low);
  const double f_high = eval(beta_high);
  if (!(f_low < 0.1) || !(f_high > 0.9)) {
    std::ostringstream os;
    os << "threshold bracket failure: persistence " << f_low << " at beta=" << beta_low << " and " << f_high
       << " at beta=" << beta_high << " (need < 0.1 and > 0.9)";
    throw BracketError(os.str());
  }
  double lo = beta_low, hi = beta_high;
  for (std::size_t i = 0; i < bisections; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (eval(mid) >= 0.5) hi = mid;
    else lo = mid;
  }
  est.bracket_low = lo;
  est.bracket_high = hi;
  est.estimate = 0.5 * (lo + hi);
  return est;
}

}  // namespace ecolab
