#pragma once

#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "sg/runner.hpp"

namespace sg {

// Command-line front end. Exit codes: 0 success, 1 configuration/validation
// error, 2 numerical failure.
inline int run_cli(std::vector<std::string> args,
                   std::ostream& out = std::cout,
                   std::ostream& err = std::cerr) {
  CLI::App app{"semigeostrophic dual-variable solver"};
  app.require_subcommand(1);

  std::string config_path, resume_path, traj_path, report_path, out_dir;
  double velocity_tol = 1e-5, displacement_tol = 1e-4;

  auto* run = app.add_subcommand("run", "integrate the dual system");
  run->add_option("--config", config_path, "run config JSON")->required();
  run->add_option("--resume", resume_path, "checkpoint to resume from");

  auto* ot = app.add_subcommand("ot-solve", "single transport solve");
  ot->add_option("--config", config_path, "run config JSON")->required();

  auto* rec = app.add_subcommand("recover", "Eulerian reconstruction");
  rec->add_option("--config", config_path, "run config JSON (domain)")->required();
  rec->add_option("--trajectory", traj_path, "trajectory CSV")->required();
  rec->add_option("--out", out_dir, "output directory")->required();

  auto* decay = app.add_subcommand("decay-lab", "decay-bound verification");
  decay->add_option("--config", config_path, "decay config JSON")->required();

  auto* rep = app.add_subcommand("report", "render a run report to CSV");
  rep->add_option("--input", report_path, "report JSON")->required();
  rep->add_option("--out", out_dir, "output directory")->required();

  auto* steady = app.add_subcommand("steady-check", "steady-state suite");
  steady->add_option("--config", config_path, "run config JSON")->required();
  steady->add_option("--velocity-tol", velocity_tol, "max |U| threshold");
  steady->add_option("--displacement-tol", displacement_tol,
                     "max displacement threshold");

  std::vector<const char*> argv;
  argv.push_back("sgdual");
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }

  try {
    if (run->parsed()) {
      workflow_run(load_run_config(config_path), resume_path, out);
    } else if (ot->parsed()) {
      workflow_ot_solve(load_run_config(config_path), out);
    } else if (rec->parsed()) {
      const RunConfig cfg = load_run_config(config_path);
      workflow_recover(*cfg.domain, traj_path, out_dir, out);
    } else if (decay->parsed()) {
      if (!workflow_decay_lab(parse_decay_config(load_json_file(config_path)),
                              out))
        return 2;
    } else if (rep->parsed()) {
      workflow_report(report_path, out_dir, out);
    } else if (steady->parsed()) {
      if (!workflow_steady_check(load_run_config(config_path), out, velocity_tol,
                                 displacement_tol))
        return 2;
    }
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << "\n";
    return 2;
  }
  return 0;
}

}  // namespace sg
