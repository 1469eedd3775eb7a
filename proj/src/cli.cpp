#include "vkcone/cli.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <functional>
#include <iostream>
#include <stdexcept>
#include <thread>

#include "vkcone/constructions.hpp"
#include "vkcone/io.hpp"
#include "vkcone/scaling.hpp"

namespace vkcone {

json to_json(const RunConfig& c) {
  return {{"command", c.command},
          {"h", c.h},
          {"delta", c.delta},
          {"cells", c.cells},
          {"tol", c.tol},
          {"max_iter", c.max_iter},
          {"seed", c.seed},
          {"jobs", c.jobs},
          {"kind", c.kind},
          {"field", c.field_in},
          {"json", c.json_out},
          {"field_out", c.field_out},
          {"construct_out", c.construct_out},
          {"grid_out", c.grid_out},
          {"grid_n", c.grid_n},
          {"quad_points", c.quad_points},
          {"refine", c.refine},
          {"h_list", c.h_list},
          {"delta_list", c.delta_list},
          {"out", c.sweep_out},
          {"summary", c.summary_out},
          {"resume", c.resume},
          {"config", c.config_path}};
}

namespace {

void emit_json(const json& j, const std::string& path, std::ostream& out) {
  if (path.empty()) {
    out << j.dump(2) << '\n';
    return;
  }
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open " + path + " for writing");
  os << j.dump(2) << '\n';
}

void write_field(const RadialField& f, const std::string& path, std::ostream& out) {
  if (path.empty() || path == "-") {
    write_field_csv(out, f);
  } else {
    write_field_csv(path, f);
  }
}

int cmd_evaluate(const RunConfig& c, std::ostream& out) {
  const auto field = read_field_csv(c.field_in);
  const Params p{c.h, c.delta_given ? c.delta : 1.0 - field.w_end()};
  p.validate();
  const auto e = energy(field, p);
  json j = {{"config", to_json(c)}, {"params", to_json(p)}, {"breakdown", to_json(e)}};
  emit_json(j, c.json_out, out);
  return e.diverged ? kExitNumerical : kExitOk;
}

int cmd_construct(const RunConfig& c, std::ostream& out) {
  const Params p{c.h, c.delta};
  p.validate();
  const Grid grid = make_grid(c.cells, p.h);
  RadialField f = c.kind == "invert" ? construct_invert(p, grid) : construct_flatten(p, grid);
  const auto e = energy(f, p);
  if (c.construct_out.empty() || c.construct_out == "-") {
    write_field_csv(out, f);
  } else {
    write_field_csv(c.construct_out, f);
    emit_json({{"config", to_json(c)}, {"params", to_json(p)}, {"breakdown", to_json(e)}}, c.json_out, out);
  }
  return kExitOk;
}

int cmd_minimize(const RunConfig& c, std::ostream& out) {
  const Params p{c.h, c.delta};
  p.validate();
  const Grid grid = make_grid(c.cells, p.h);
  MinimizeOptions o;
  o.tol = c.tol;
  o.max_iter = c.max_iter;
  o.seed = c.seed;
  o.jobs = c.jobs;
  const auto r = minimize(p, grid, o);
  json j = to_json(r);
  j["config"] = to_json(c);
  j["params"] = to_json(p);
  j["tau"] = well_exit_radius(r.field);
  j["field_csv"] = c.field_out;
  if (!c.field_out.empty()) write_field(r.field, c.field_out, out);
  emit_json(j, c.json_out, out);
  return r.converged ? kExitOk : kExitNumerical;
}

int cmd_pyramid(const RunConfig& c, std::ostream& out) {
  if (!(c.h > 0.0 && c.h <= pyramid_h_max())) {
    throw std::invalid_argument("pyramid: h must lie in (0, " + format_double(pyramid_h_max()) + "]");
  }
  PyramidOptions o;
  o.quadrature.points = c.quad_points;
  o.quadrature.refine = c.refine;
  o.jobs = c.jobs;
  const auto r = pyramid_energy(c.h, o);
  json j = to_json(r);
  j["config"] = to_json(c);
  j["scaled_total"] = r.total / std::pow(c.h, 5.0 / 3.0);
  if (!c.grid_out.empty()) {
    std::ofstream os(c.grid_out);
    if (!os) throw std::runtime_error("cannot open " + c.grid_out + " for writing");
    write_grid_csv(os, pyramid_w_grid(c.h, c.grid_n));
  }
  emit_json(j, c.json_out, out);
  return r.converged ? kExitOk : kExitNumerical;
}

int cmd_sweep(const RunConfig& c, std::ostream& out) {
  if (c.h_list.empty() || c.delta_list.empty()) throw std::invalid_argument("sweep: --h-list and --delta-list are required");
  SweepConfig s;
  s.h_list = c.h_list;
  s.delta_list = c.delta_list;
  s.cells = c.cells;
  s.minimize.tol = c.tol;
  s.minimize.max_iter = c.max_iter;
  s.minimize.seed = c.seed;
  s.jobs = c.jobs;
  s.output = c.sweep_out;
  s.resume = c.resume;
  for (double h : s.h_list) {
    for (double d : s.delta_list) Params{h, d}.validate();
    make_grid(s.cells, h);
  }
  const auto records = sweep(s);
  if (!c.summary_out.empty()) {
    std::ofstream os(c.summary_out);
    if (!os) throw std::runtime_error("cannot open " + c.summary_out + " for writing");
    write_summary_csv(os, records);
  }
  int failed = 0;
  for (const auto& r : records) failed += !r.error.empty();
  json j = {{"config", to_json(c)}, {"records", records.size()}, {"failed", failed}};
  emit_json(j, c.json_out, out);
  return failed ? kExitNumerical : kExitOk;
}

int cmd_diagnose(const RunConfig& c, std::ostream& out) {
  const auto field = read_field_csv(c.field_in);
  const Params p{c.h, c.delta_given ? c.delta : 1.0 - field.w_end()};
  p.validate();
  const auto e = energy(field, p);
  SweepRecord rec;
  rec.params = p;
  rec.cells = field.grid.n_cells();
  rec.e_min = e.total;
  rec.tau = well_exit_radius(field);
  rec.diagnostics = diagnostics(field, p, e.total);
  rec.converged = true;
  json j = {{"config", to_json(c)},
            {"params", to_json(p)},
            {"breakdown", to_json(e)},
            {"tau", rec.tau},
            {"regime", classify_regime(rec).value_or("")},
            {"strain_floor", strain_floor(field)},
            {"diagnostics", rec.diagnostics}};
  emit_json(j, c.json_out, out);
  return kExitOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  RunConfig c;
  const unsigned hw = std::thread::hardware_concurrency();
  c.jobs = hw > 0 ? static_cast<int>(hw) : 1;

  auto add_h = [&](CLI::App& s) { s.add_option("--h", c.h, "Thickness h in (0, 1/2]")->check(CLI::PositiveNumber); };
  auto add_delta = [&](CLI::App& s, const char* what) {
    s.add_option_function<double>("--delta", [&](const double& v) { c.delta = v; c.delta_given = true; }, what)
        ->default_str(format_double(c.delta));
  };
  auto add_cells = [&](CLI::App& s) { s.add_option("--cells", c.cells, "Radial grid cells")->check(CLI::Range(16, 1 << 24)); };
  auto add_solver = [&](CLI::App& s) {
    s.add_option("--tol", c.tol, "Relative convergence tolerance")->check(CLI::PositiveNumber);
    s.add_option("--max-iter", c.max_iter, "Iteration cap per start")->check(CLI::PositiveNumber);
    s.add_option("--seed", c.seed, "Seed of the perturbed start");
  };
  auto add_jobs = [&](CLI::App& s) { s.add_option("--jobs", c.jobs, "Worker threads")->check(CLI::PositiveNumber); };
  auto add_json = [&](CLI::App& s) { s.add_option("--json", c.json_out, "JSON output file (standard output if empty)"); };

  struct Command {
    const char* name;
    const char* about;
    std::function<void(CLI::App&)> define;
    std::function<int(const RunConfig&, std::ostream&)> run;
  };
  const std::vector<Command> commands = {
      {"evaluate", "Energy breakdown of a field CSV",
       [&](CLI::App& a) {
         a.add_option("--field", c.field_in, "Field CSV (r,u,w,wp)")->required()->check(CLI::ExistingFile);
         add_h(a);
         add_delta(a, "Indentation (default 1 - w(1) of the field)");
         add_json(a);
       },
       cmd_evaluate},
      {"construct", "Closed-form inversion or flattening field",
       [&](CLI::App& a) {
         a.add_option("--kind", c.kind, "invert or flatten")->check(CLI::IsMember({"invert", "flatten"}));
         add_h(a);
         add_delta(a, "Indentation delta in [0, 1]");
         add_cells(a);
         a.add_option("--out", c.construct_out, "Field CSV path (standard output if empty)");
         add_json(a);
       },
       cmd_construct},
      {"minimize", "Multi-start minimization of the radial energy",
       [&](CLI::App& a) {
         add_h(a);
         add_delta(a, "Indentation delta in [0, 1]");
         add_cells(a);
         add_solver(a);
         add_jobs(a);
         a.add_option("--field-out", c.field_out, "Minimizer field CSV path (not written if empty)");
         add_json(a);
       },
       cmd_minimize},
      {"pyramid", "Energy of the ridged pyramid",
       [&](CLI::App& a) {
         add_h(a);
         a.add_option("--quad-points", c.quad_points, "Gauss points per cell")
             ->check(CLI::IsMember({4, 6, 8, 10, 12, 16, 20}));
         a.add_option("--refine", c.refine, "Base patch refinement level")->check(CLI::Range(1, 64));
         a.add_option("--grid-out", c.grid_out, "W samples CSV (x,y,w; skipped if empty)");
         a.add_option("--grid-n", c.grid_n, "Samples per axis of the W grid")->check(CLI::Range(2, 8192));
         add_jobs(a);
         add_json(a);
       },
       cmd_pyramid},
      {"sweep", "Parameter sweep with JSON-lines records",
       [&](CLI::App& a) {
         a.add_option("--h-list", c.h_list, "Thickness values")->delimiter(',')->check(CLI::PositiveNumber);
         a.add_option("--delta-list", c.delta_list, "Indentation values")->delimiter(',')->check(CLI::Range(0.0, 1.0));
         add_cells(a);
         add_solver(a);
         add_jobs(a);
         a.add_option("--out", c.sweep_out, "JSON-lines record file (appended)");
         a.add_option("--summary", c.summary_out, "Summary CSV (skipped if empty)");
         a.add_flag("--resume", c.resume, "Skip points already present in --out");
         add_json(a);
       },
       cmd_sweep},
      {"diagnose", "Well exit radius, regime and excess diagnostics of a field CSV",
       [&](CLI::App& a) {
         a.add_option("--field", c.field_in, "Field CSV (r,u,w,wp)")->required()->check(CLI::ExistingFile);
         add_h(a);
         add_delta(a, "Indentation (default 1 - w(1) of the field)");
         add_json(a);
       },
       cmd_diagnose},
  };

  auto parse = [&](CLI::App& app, int n, const char* const* args) -> int {
    try {
      app.parse(n, args);
    } catch (const CLI::ParseError& e) {
      const int code = app.exit(e, out, err);
      return code == 0 ? 0 : kExitValidation;
    }
    return -1;
  };

  const Command* chosen = nullptr;
  if (argc >= 2) {
    for (const auto& cmd : commands) {
      if (std::string(argv[1]) == cmd.name) chosen = &cmd;
    }
  }
  if (chosen == nullptr) {
    CLI::App root{"Indented-cone von Karman energies: radial minimization and the pyramid construction"};
    root.set_help_flag("--help", "Print this help message and exit");
    root.require_subcommand(1);
    for (const auto& cmd : commands) root.add_subcommand(cmd.name, cmd.about);
    const int code = parse(root, argc, argv);
    return code < 0 ? kExitValidation : code;
  }

  // Each command parses as its own application so that --config applies to
  // its options directly.
  CLI::App app{chosen->about, std::string(argc > 0 ? argv[0] : "vkcone") + " " + chosen->name};
  app.set_help_flag("--help", "Print this help message and exit");
  app.option_defaults()->always_capture_default();
  app.set_config("--config", "", "Flat key = value file; flags override it");
  chosen->define(app);
  if (const int code = parse(app, argc - 1, argv + 1); code >= 0) return code;

  c.command = chosen->name;
  if (auto* opt = app.get_option("--config"); opt->count() > 0) c.config_path = opt->as<std::string>();

  try {
    return chosen->run(c, out);
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const std::exception& e) {
    err << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  }
}

}  // namespace vkcone
