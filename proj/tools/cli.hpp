#pragma once

#include <chrono>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <iostream>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include <CLI11.hpp>

#include "ecolab.hpp"
#include "ecolab_demos.hpp"  // generated: embedded_demos[] = {name, json text}

namespace ecolab::cli {

struct Options {
  std::uint64_t seed = 0;
  bool quiet = false;
  std::string csv;
  std::string svg;
};

inline std::optional<std::string_view> find_demo(std::string_view name) {
  for (const auto& d : embedded_demos)
    if (d.name == name) return d.text;
  return std::nullopt;
}

inline std::string demo_names() {
  std::string out;
  for (const auto& d : embedded_demos) out += (out.empty() ? "" : ", ") + std::string(d.name);
  return out;
}

inline ScenarioDocument load_document(const std::string& path) {
  if (!std::filesystem::exists(path)) throw InvalidInput("scenario file not found: '" + path + "'");
  try {
    return parse_scenario(read_text_file(path));
  } catch (const ValidationError&) {
    throw;
  } catch (const InvalidInput& e) {
    throw InvalidInput(path + ": " + e.what());
  }
}

inline Graph graph_for(const EpidemicDocument& d, std::uint64_t seed) {
  GraphSpec spec = d.graph;
  // --seed selects the random graph; the file's seed picks a stream within it
  spec.seed = derive_seed(seed, spec.seed);
  return build_graph(spec);
}

inline PersistenceConfig persistence_config(const EpidemicDocument& d, std::uint64_t seed) {
  PersistenceConfig cfg;
  cfg.kind = d.model;
  cfg.runs = d.runs;
  cfg.horizon = d.horizon;
  cfg.seed = seed;
  cfg.initial_infected = d.initial_infected;
  return cfg;
}

inline void emit_outputs(const Options& o, const std::optional<Trajectory>& tr, const std::optional<Table>& table,
                         const std::string& title) {
  if (!o.csv.empty()) {
    if (tr) write_file_atomic(o.csv, write_csv(*tr));
    else write_file_atomic(o.csv, write_csv(*table));
  }
  if (!o.svg.empty()) {
    if (!tr) throw InvalidInput("SVG output needs a nonnegative time series; use --csv for this document kind");
    SvgOptions so;
    so.title = title;
    write_file_atomic(o.svg, render_svg(*tr, so));
  }
}

inline int run_document(const ScenarioDocument& doc, const Options& o, std::ostream& out, std::ostream& err) {
  const auto started = std::chrono::steady_clock::now();
  RunReport rep;
  rep.digest = scenario_digest(doc);
  rep.kind = std::string(kind_of(doc));
  std::optional<Table> table;
  std::string title;
  bool diverged = false;

  if (const auto* s = std::get_if<Scenario>(&doc)) {
    title = s->name;
    auto r = simulate(*s);
    rep.trajectory = std::move(r.trajectory);
    rep.extinctions = std::move(r.extinctions);
    rep.warnings = std::move(r.warnings);
    diverged = r.diverged;
  } else if (const auto* e = std::get_if<EpidemicDocument>(&doc)) {
    title = e->name;
    EpidemicModel m{graph_for(*e, o.seed), e->model, e->beta, e->gamma, e->initial_infected, o.seed};
    const auto p = simulate_epidemic(m, e->horizon, e->sample_dt);
    rep.trajectory = p.to_trajectory();
    if (p.extinction_time) rep.extinctions.push_back({"infected", *p.extinction_time});
  } else if (const auto* sel = std::get_if<SelectionDocument>(&doc)) {
    title = sel->name;
    const auto path = run_selection(sel->state, linear_gradient(sel->natural_matrix, sel->natural_offset),
                                    linear_gradient(sel->sexual_matrix, sel->sexual_offset), sel->steps);
    Table t{"step", {"D", "P", "F"}, {}, {}};
    for (std::size_t k = 0; k < path.size(); ++k) {
      t.keys.push_back(static_cast<double>(k));
      t.rows.push_back({path[k][0], path[k][1], path[k][2]});
    }
    try {
      Trajectory tr(t.names);
      for (std::size_t k = 0; k < path.size(); ++k) tr.append(t.keys[k], t.rows[k]);
      rep.trajectory = std::move(tr);
    } catch (const InvalidInput&) {
      table = std::move(t);  // negative means: CSV only
    }
  } else if (const auto* d = std::get_if<DiscreteDocument>(&doc)) {
    title = d->name;
    rep.trajectory = run_nicholson_bailey(d->params, d->host0, d->parasitoid0, d->generations, d->extinction_epsilon);
    const auto& tr = *rep.trajectory;
    for (std::size_t v = 0; v < tr.width(); ++v)
      for (std::size_t i = 0; i < tr.size(); ++i)
        if (tr.at(i, v) == 0.0) {
          rep.extinctions.push_back({tr.names()[v], tr.times()[i]});
          break;
        }
  } else {
    const auto& mm = std::get<MimicryDocument>(doc);
    title = mm.name;
    Table t{"n_mimic",
            {"mimic_frequency", "attack_probability", "mimic_net_payoff", "model_net_payoff", "predator_expected_payoff"},
            {},
            {}};
    for (double n : mm.n_mimic) {
      auto p = mm.params;
      p.n_mimic = n;
      const auto r = mimicry_payoffs(p);
      t.keys.push_back(n);
      t.rows.push_back({r.mimic_frequency, r.attack_probability, r.mimic_net_payoff, r.model_net_payoff,
                        r.predator_expected_payoff});
    }
    if (!o.quiet) {
      out << "indifference_frequency=" << format_double(mimicry_indifference_frequency(mm.params)) << "\n";
      out << write_csv(t);
    }
    table = std::move(t);
  }
  rep.wall_clock = std::chrono::steady_clock::now() - started;

  emit_outputs(o, rep.trajectory, table, title);
  if (!o.quiet) {
    out << "kind=" << rep.kind << "\n";
    out << "digest=" << rep.digest << "\n";
    if (rep.trajectory) {
      const auto& tr = *rep.trajectory;
      out << "samples=" << tr.size() << "\n";
      out << "final_time=" << format_double(tr.times().back()) << "\n";
      for (std::size_t v = 0; v < tr.width(); ++v) out << "final." << tr.names()[v] << "=" << format_double(tr.back()[v]) << "\n";
    }
    for (const auto& x : rep.extinctions) out << "extinction." << x.id << "=" << format_double(x.time) << "\n";
    out << "wall_clock_s=" << rep.wall_clock.count() << "\n";
  }
  for (const auto& w : rep.warnings) err << "warning: " << w << "\n";
  if (diverged) {
    err << "error: integration diverged (a density exceeded " << divergence_limit << ")\n";
    return 2;
  }
  return 0;
}

inline int sweep_document(const ScenarioDocument& doc, const Options& o, const std::string& param, double from,
                          double to, std::size_t points, const std::string& metric, std::ostream& out) {
  const auto grid = linear_grid(from, to, points);
  SweepReport rep;
  if (const auto* s = std::get_if<Scenario>(&doc)) {
    if (metric == "classification") rep = sweep(*s, param, grid, classification_metric);
    else if (metric == "extinctions") rep = sweep(*s, param, grid, extinction_metric);
    else throw InvalidInput("unknown metric '" + metric + "' (valid: classification, extinctions)");
  } else if (const auto* e = std::get_if<EpidemicDocument>(&doc)) {
    if (metric != "classification" && metric != "persistence")
      throw InvalidInput("unknown metric '" + metric + "' for epidemic sweeps (valid: persistence)");
    rep = sweep_epidemic(graph_for(*e, o.seed), e->beta, e->gamma, param, grid, persistence_config(*e, o.seed));
  } else {
    throw InvalidInput("sweep needs a community or epidemic document");
  }
  Table t{param, {"metric"}, {}, {}};
  if (!o.quiet) out << "value,label,metric\n";
  for (const auto& p : rep.points) {
    t.keys.push_back(p.value);
    t.rows.push_back({p.metric.value_or(std::nan(""))});
    if (!o.quiet)
      out << format_double(p.value) << "," << p.label << "," << (p.metric ? format_double(*p.metric) : "") << "\n";
  }
  if (!o.quiet)
    for (const auto& tr : rep.transitions)
      out << "transition: " << tr.from_label << " -> " << tr.to_label << " in [" << format_double(tr.from_value)
          << ", " << format_double(tr.to_value) << "]\n";
  if (!o.csv.empty()) {
    std::string csv = param + ",label,metric\n";
    for (const auto& p : rep.points)
      csv += format_double(p.value) + "," + p.label + "," + (p.metric ? format_double(*p.metric) : "") + "\n";
    write_file_atomic(o.csv, csv);
  }
  return 0;
}

inline int stability_document(const ScenarioDocument& doc, const Options& o, std::ostream& out) {
  const auto* s = std::get_if<Scenario>(&doc);
  if (!s) throw InvalidInput("stability needs a community document");
  const auto fp = find_fixed_points(*s);
  if (o.quiet) return 0;
  out << "fixed_points=" << fp.points.size() << "\n";
  for (const auto& p : fp.points) {
    const auto r = stability_at(*s, p);
    out << "point=(";
    for (std::size_t i = 0; i < p.size(); ++i) out << (i ? ", " : "") << s->species[i].id << "=" << format_double(p[i]);
    out << ") classification=" << to_string(r.classification) << " eigenvalues=[";
    for (std::size_t i = 0; i < r.eigenvalues.size(); ++i) {
      const auto& e = r.eigenvalues[i];
      out << (i ? ", " : "") << format_double(e.real()) << (e.imag() < 0 ? "-" : "+") << format_double(std::abs(e.imag()))
          << "i";
    }
    out << "]\n";
  }
  for (const auto& w : fp.warnings) out << "warning: " << w << "\n";
  return 0;
}

inline int threshold_document(const ScenarioDocument& doc, const Options& o, bool empirical, std::ostream& out) {
  const auto* e = std::get_if<EpidemicDocument>(&doc);
  if (!e) throw InvalidInput("threshold needs an epidemic document");
  const auto g = graph_for(*e, o.seed);
  out << "meanfield_beta_c=" << format_double(meanfield_threshold(g, e->gamma)) << "\n";
  if (empirical) {
    auto cfg = persistence_config(*e, o.seed);
    cfg.initial_infected.clear();  // random 10% per run
    const auto est = estimate_threshold_empirical(g, e->gamma, e->beta_low, e->beta_high, cfg, e->bisections);
    out << "empirical_beta_c=" << format_double(est.estimate) << "\n";
    out << "bracket=[" << format_double(est.bracket_low) << ", " << format_double(est.bracket_high) << "]\n";
    if (!o.quiet)
      for (const auto& [b, f] : est.evaluations) out << "  beta=" << format_double(b) << " persistence=" << format_double(f) << "\n";
  }
  return 0;
}

/// Entry point shared by the executable and the tests.
inline int cli_main(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"ecolab: ecological interaction models for cyber-ecosystems", "ecolab"};
  app.require_subcommand(1);
  Options o;
  app.add_option("--seed", o.seed, "Master seed for every random draw")->default_val(0);
  app.add_flag("--quiet", o.quiet, "Suppress the summary on stdout");

  std::string file, param, metric = "classification", demo;
  double from = 0, to = 0;
  std::size_t points = 11;
  bool empirical = false, emit = false;

  auto add_outputs = [&](CLI::App* sub) {
    sub->add_option("--csv", o.csv, "Write CSV output to this path");
    sub->add_option("--svg", o.svg, "Write SVG plot to this path");
  };
  auto* run = app.add_subcommand("run", "Run a scenario file");
  run->add_option("file", file)->required();
  add_outputs(run);
  auto* sw = app.add_subcommand("sweep", "Sweep one parameter over an evenly spaced grid");
  sw->add_option("file", file)->required();
  sw->add_option("--param", param, "Parameter path, e.g. interactions.0.alpha")->required();
  sw->add_option("--from", from)->required();
  sw->add_option("--to", to)->required();
  sw->add_option("--points", points)->check(CLI::Range(std::size_t{2}, std::size_t{100000}));
  sw->add_option("--metric", metric, "classification | extinctions | persistence");
  sw->add_option("--csv", o.csv, "Write the sweep table to this path");
  auto* st = app.add_subcommand("stability", "Fixed points and their local stability");
  st->add_option("file", file)->required();
  auto* th = app.add_subcommand("threshold", "Epidemic transmission threshold");
  th->add_option("file", file)->required();
  th->add_flag("--empirical", empirical, "Also estimate the threshold by simulation");
  auto* dm = app.add_subcommand("demo", "Run or print a built-in scenario");
  dm->add_option("name", demo, "One of: " + demo_names())->required();
  dm->add_flag("--emit", emit, "Print the scenario JSON instead of running it");
  add_outputs(dm);
  app.fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    app.exit(e, out, err);
    return 0;
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return 1;
  }

  try {
    if (*dm) {
      const auto text = find_demo(demo);
      if (!text) throw InvalidInput("unknown demo '" + demo + "' (available: " + demo_names() + ")");
      if (emit) {
        out << *text;
        return 0;
      }
      return run_document(parse_scenario(*text), o, out, err);
    }
    const auto doc = load_document(file);
    if (*run) return run_document(doc, o, out, err);
    if (*sw) return sweep_document(doc, o, param, from, to, points, metric, out);
    if (*st) return stability_document(doc, o, out);
    return threshold_document(doc, o, empirical, out);
  } catch (const InvalidInput& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  } catch (const RuntimeFailure& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }
}

}  // namespace ecolab::cli
