#pragma once

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <map>
#include <memory>
#include <ostream>
#include <string>

#include "sg/checkpoint.hpp"
#include "sg/csv.hpp"
#include "sg/diagnostics.hpp"
#include "sg/recovery.hpp"

namespace sg {

namespace detail {

inline void ensure_dir(const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw ConfigError("cannot create output directory: " + dir);
}

inline void write_trajectory_row(CsvWriter& w, std::size_t step,
                                 const StateRecord& rec,
                                 const std::vector<double>& masses) {
  for (std::size_t i = 0; i < rec.positions.size(); ++i) {
    w.field(static_cast<long long>(step));
    w.field(rec.t);
    w.field(static_cast<long long>(i));
    w.field(rec.positions[i].x());
    w.field(rec.positions[i].y());
    w.field(rec.positions[i].z());
    w.field(masses[i]);
    w.field(rec.psi[i]);
    w.field(rec.barycenters[i].x());
    w.field(rec.barycenters[i].y());
    w.field(rec.barycenters[i].z());
    w.field(rec.velocities[i].x());
    w.field(rec.velocities[i].y());
    w.field(rec.velocities[i].z());
    w.end_row();
  }
}

inline const std::vector<std::string> kTrajectoryHeader = {
    "step", "t",  "id", "y1", "y2", "y3", "mass",
    "psi",  "b1", "b2", "b3", "u1", "u2", "u3"};

inline void write_summary(const DiagnosticsReport& rep, const std::string& path) {
  CsvWriter w(path);
  w.header({"t", "velocity_bound_margin", "vertical_drift", "ot_residual",
            "min_cell_volume", "energy", "loglog_bdot_k1", "loglog_bdot_k2",
            "loglog_hess_k1", "loglog_hess_k2", "energy_quadratic",
            "energy_flux"});
  for (const auto& s : rep.steps) {
    w.field(s.t);
    w.field(s.velocity_bound_margin);
    w.field(s.vertical_drift);
    w.field(s.ot_residual);
    w.field(s.min_cell_volume);
    w.field(s.energy);
    w.field(s.loglog_bdot_k1);
    w.field(s.loglog_bdot_k2);
    w.field(s.loglog_hess_k1);
    w.field(s.loglog_hess_k2);
    w.field(s.energy_quadratic);
    w.field(s.energy_flux);
    w.end_row();
  }
}

inline void write_final_state(const DualState& state, const std::string& path) {
  CsvWriter w(path);
  w.header({"id", "y1", "y2", "y3", "mass", "psi"});
  for (std::size_t i = 0; i < state.cloud.size(); ++i) {
    w.field(static_cast<long long>(i));
    w.field(state.cloud.positions[i].x());
    w.field(state.cloud.positions[i].y());
    w.field(state.cloud.positions[i].z());
    w.field(state.cloud.masses[i]);
    w.field(state.potentials.psi[i]);
    w.end_row();
  }
}

inline void write_report_json(const DiagnosticsReport& rep,
                              const std::string& path) {
  Json j;
  j["seed"] = rep.seed;
  j["n"] = rep.n;
  j["dt"] = rep.dt;
  j["scheme"] = rep.scheme;
  Json steps = Json::array();
  for (const auto& s : rep.steps) {
    Json row;
    row["t"] = s.t;
    row["velocity_bound_margin"] = s.velocity_bound_margin;
    row["vertical_drift"] = s.vertical_drift;
    row["ot_residual"] = s.ot_residual;
    row["min_cell_volume"] = s.min_cell_volume;
    row["energy"] = s.energy;
    row["loglog_bdot_k1"] = s.loglog_bdot_k1;
    row["loglog_bdot_k2"] = s.loglog_bdot_k2;
    row["loglog_hess_k1"] = s.loglog_hess_k1;
    row["loglog_hess_k2"] = s.loglog_hess_k2;
    row["energy_quadratic"] = s.energy_quadratic;
    row["energy_flux"] = s.energy_flux;
    steps.push_back(std::move(row));
  }
  j["steps"] = std::move(steps);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write report: " + path);
  out << j.dump(1) << "\n";
}

}  // namespace detail

// Full simulation workflow: quantize (or resume), integrate, write the
// trajectory, summary, final state, report and checkpoints.
inline void workflow_run(const RunConfig& cfg, const std::string& resume_path,
                         std::ostream& log) {
  detail::ensure_dir(cfg.output_dir);
  const std::uint64_t cfg_hash = fnv1a_hash(cfg.raw);

  DualState initial;
  std::size_t step0 = 0;
  if (resume_path.empty()) {
    WeightedPointCloud cloud = quantize(cfg.density, cfg.n, cfg.seed, cfg.quantize);
    initial = make_consistent(*cfg.domain, std::move(cloud), 0.0,
                              cfg.flow.accept_tol, cfg.flow.max_newton);
  } else {
    const Checkpoint cp = load_checkpoint(resume_path);
    if (cp.config_hash != cfg_hash)
      throw ConfigError("checkpoint was produced by a different config");
    initial = state_from_checkpoint(*cfg.domain, cp, cfg.flow);
    step0 = cp.step;
  }

  const std::string dir = cfg.output_dir + "/";
  CsvWriter traj_csv(dir + (resume_path.empty() ? "trajectory.csv"
                                                : "trajectory_resumed.csv"));
  traj_csv.header(detail::kTrajectoryHeader);
  const std::vector<double> masses = initial.cloud.masses;

  Trajectory traj;
  traj.dt = cfg.dt;
  traj.scheme = cfg.scheme;
  const double remaining = cfg.t_final - initial.t;
  traj = run_flow(
      *cfg.domain, std::move(initial), cfg.dt, remaining, cfg.scheme, cfg.flow,
      [&](std::size_t k, const StateRecord& rec, const DualState& st) {
        const std::size_t step = step0 + k;
        if (step % static_cast<std::size_t>(cfg.output_cadence) == 0)
          detail::write_trajectory_row(traj_csv, step, rec, masses);
        if (cfg.checkpoint_cadence > 0 && step > step0 &&
            step % static_cast<std::size_t>(cfg.checkpoint_cadence) == 0) {
          char name[64];
          std::snprintf(name, sizeof name, "checkpoint_%06zu.json", step);
          save_checkpoint(make_checkpoint(st, step, cfg.seed, cfg_hash),
                          dir + name);
        }
      });

  // final state + checkpoint + diagnostics
  DualState final_state = make_consistent(
      *cfg.domain, WeightedPointCloud{traj.records.back().positions, masses},
      traj.records.back().t, cfg.flow.accept_tol, cfg.flow.max_newton,
      DualPotentials{traj.records.back().psi});
  detail::write_final_state(final_state, dir + "final_state.csv");
  save_checkpoint(make_checkpoint(final_state, step0 + traj.records.size() - 1,
                                  cfg.seed, cfg_hash),
                  dir + "checkpoint_final.json");

  const DiagnosticsReport rep =
      build_diagnostics(*cfg.domain, traj, masses, cfg.seed,
                        traj.records.size() >= 2);
  detail::write_summary(rep, dir + "summary.csv");
  detail::write_report_json(rep, dir + "report.json");
  log << "run complete: " << traj.records.size() << " states, t = "
      << traj.records.back().t << "\n";
}

// One transport solve: quantize the density and report the converged diagram.
inline void workflow_ot_solve(const RunConfig& cfg, std::ostream& log) {
  detail::ensure_dir(cfg.output_dir);
  WeightedPointCloud cloud = quantize(cfg.density, cfg.n, cfg.seed, cfg.quantize);
  OTSolution sol = solve_weights(*cfg.domain, cloud,
                                 OTSettings{cfg.flow.accept_tol, cfg.flow.max_newton});
  CsvWriter w(cfg.output_dir + "/cells.csv");
  w.header({"id", "y1", "y2", "y3", "mass", "psi", "volume", "b1", "b2", "b3"});
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    w.field(static_cast<long long>(i));
    w.field(cloud.positions[i].x());
    w.field(cloud.positions[i].y());
    w.field(cloud.positions[i].z());
    w.field(cloud.masses[i]);
    w.field(sol.potentials.psi[i]);
    w.field(sol.diagram.volumes[i]);
    w.field(sol.diagram.barycenters[i].x());
    w.field(sol.diagram.barycenters[i].y());
    w.field(sol.diagram.barycenters[i].z());
    w.end_row();
  }
  Json j;
  j["residual"] = sol.residual;
  j["iterations"] = sol.iterations;
  std::ofstream out(cfg.output_dir + "/ot_report.json", std::ios::binary);
  out << j.dump(1) << "\n";
  log << "ot solve: residual " << sol.residual << " in " << sol.iterations
      << " iterations\n";
}

inline Trajectory read_trajectory_csv(const std::string& path,
                                      std::vector<double>& masses) {
  const CsvTable t = read_csv(path);
  const int c_step = t.column("step"), c_t = t.column("t"), c_id = t.column("id");
  const int c_y[3] = {t.column("y1"), t.column("y2"), t.column("y3")};
  const int c_mass = t.column("mass"), c_psi = t.column("psi");
  const int c_b[3] = {t.column("b1"), t.column("b2"), t.column("b3")};

  std::map<long, StateRecord> by_step;
  std::map<long, std::vector<double>> mass_by_step;
  for (const auto& row : t.rows) {
    const long step = std::lround(parse_double(row[c_step]));
    StateRecord& rec = by_step[step];
    rec.t = parse_double(row[c_t]);
    const std::size_t id = static_cast<std::size_t>(std::lround(parse_double(row[c_id])));
    auto grow = [&](auto& v) { if (v.size() <= id) v.resize(id + 1); };
    grow(rec.positions);
    grow(rec.psi);
    grow(rec.barycenters);
    auto& mv = mass_by_step[step];
    grow(mv);
    rec.positions[id] = Vec3(parse_double(row[c_y[0]]), parse_double(row[c_y[1]]),
                             parse_double(row[c_y[2]]));
    rec.psi[id] = parse_double(row[c_psi]);
    rec.barycenters[id] = Vec3(parse_double(row[c_b[0]]), parse_double(row[c_b[1]]),
                               parse_double(row[c_b[2]]));
    mv[id] = parse_double(row[c_mass]);
  }
  if (by_step.empty()) throw ConfigError("empty trajectory: " + path);

  Trajectory traj;
  for (auto& [step, rec] : by_step) traj.records.push_back(std::move(rec));
  masses = mass_by_step.begin()->second;
  if (traj.records.size() >= 2)
    traj.dt = traj.records[1].t - traj.records[0].t;
  return traj;
}

// Eulerian reconstruction workflow: reads a written trajectory, rebuilds the
// diagrams, fits the fields and writes per-time CSVs plus the residual report.
inline void workflow_recover(const ConvexDomain& domain,
                             const std::string& traj_path,
                             const std::string& out_dir, std::ostream& log,
                             int battery_size = 12) {
  detail::ensure_dir(out_dir);
  std::vector<double> masses;
  Trajectory traj = read_trajectory_csv(traj_path, masses);
  const double T = traj.records.back().t;

  std::vector<RecoverySnapshot> snaps;
  for (std::size_t k = 0; k < traj.records.size(); ++k)
    snaps.push_back(build_snapshot(domain, traj, masses, k));

  CsvWriter w(out_dir + "/eulerian.csv");
  w.header({"t", "id", "y1", "y2", "y3", "bdot1", "bdot2", "bdot3", "h11", "h12",
            "h13", "h22", "h23", "h33", "low_confidence"});
  for (const auto& s : snaps)
    for (std::size_t i = 0; i < s.positions.size(); ++i) {
      if (!s.diagram.nonempty[i]) continue;
      const CellField& f = s.fields[i];
      w.field(s.t);
      w.field(static_cast<long long>(i));
      w.field(s.positions[i].x());
      w.field(s.positions[i].y());
      w.field(s.positions[i].z());
      w.field(f.bdot.x());
      w.field(f.bdot.y());
      w.field(f.bdot.z());
      w.field(f.hessian(0, 0));
      w.field(f.hessian(0, 1));
      w.field(f.hessian(0, 2));
      w.field(f.hessian(1, 1));
      w.field(f.hessian(1, 2));
      w.field(f.hessian(2, 2));
      w.field(static_cast<long long>(f.low_confidence ? 1 : 0));
      w.end_row();
    }

  auto battery = default_battery(domain, std::max(T, traj.dt));
  if (battery_size < static_cast<int>(battery.size()))
    battery.resize(std::max(1, battery_size));
  Json members = Json::array();
  const std::size_t mid = snaps.size() / 2;
  for (const auto& phi : battery) {
    Json row;
    row["sg2"] = residual_sg2(domain, snaps[mid], phi.space);
    row["sg1"] = snaps.size() >= 2 ? residual_sg1(domain, snaps, phi) : 0.0;
    row["change_of_variables_gap"] =
        change_of_variables_check(domain, snaps[mid], phi.space).gap;
    members.push_back(std::move(row));
  }
  Json j;
  j["members"] = std::move(members);
  std::ofstream out(out_dir + "/residuals.json", std::ios::binary);
  out << j.dump(1) << "\n";
  log << "recover complete: " << snaps.size() << " snapshots, "
      << battery.size() << " test functions\n";
}

// Decay-lab workflow: per-bound CSV with verdicts. Returns true if all pass.
inline bool workflow_decay_lab(const DecayConfig& cfg, std::ostream& log) {
  if (!cfg.output_dir.empty()) detail::ensure_dir(cfg.output_dir);
  const auto checks =
      verify_lemma33(cfg.field, *cfg.density, cfg.bounds, cfg.times, cfg.samples);
  bool all_pass = true;
  std::unique_ptr<CsvWriter> w;
  if (!cfg.output_dir.empty()) {
    w = std::make_unique<CsvWriter>(cfg.output_dir + "/bounds.csv");
    w->header({"time", "bound", "region", "samples", "max_violation", "verdict"});
  }
  for (const auto& c : checks) {
    all_pass = all_pass && c.pass;
    if (w) {
      w->field(c.t);
      w->field(to_string(c.bound));
      w->field(c.region);
      w->field(static_cast<long long>(c.samples));
      w->field(c.max_violation);
      w->field(std::string(c.pass ? "PASS" : "FAIL"));
      w->end_row();
    }
    log << "bound " << to_string(c.bound) << " at t=" << c.t << ": "
        << (c.pass ? "PASS" : "FAIL") << " (max violation " << c.max_violation
        << ")\n";
  }
  return all_pass;
}

// Renders the run report JSON back into the summary CSV table.
inline void workflow_report(const std::string& report_path,
                            const std::string& out_dir, std::ostream& log) {
  detail::ensure_dir(out_dir);
  const Json j = load_json_file(report_path);
  DiagnosticsReport rep;
  try {
    for (const auto& row : j.at("steps")) {
      StepDiagnostics s;
      s.t = row.at("t").get<double>();
      s.velocity_bound_margin = row.at("velocity_bound_margin").get<double>();
      s.vertical_drift = row.at("vertical_drift").get<double>();
      s.ot_residual = row.at("ot_residual").get<double>();
      s.min_cell_volume = row.at("min_cell_volume").get<double>();
      s.energy = row.at("energy").get<double>();
      s.loglog_bdot_k1 = row.at("loglog_bdot_k1").get<double>();
      s.loglog_bdot_k2 = row.at("loglog_bdot_k2").get<double>();
      s.loglog_hess_k1 = row.at("loglog_hess_k1").get<double>();
      s.loglog_hess_k2 = row.at("loglog_hess_k2").get<double>();
      s.energy_quadratic = row.at("energy_quadratic").get<double>();
      s.energy_flux = row.at("energy_flux").get<double>();
      rep.steps.push_back(s);
    }
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("malformed report: ") + e.what());
  }
  detail::write_summary(rep, out_dir + "/summary.csv");
  log << "report rendered: " << rep.steps.size() << " steps\n";
}

// Steady-state suite: centroidal quantization of the uniform measure must sit
// still. Returns true (and prints PASS) when both thresholds hold.
inline bool workflow_steady_check(const RunConfig& cfg, std::ostream& log,
                                  double velocity_tol = 1e-5,
                                  double displacement_tol = 1e-4) {
  detail::ensure_dir(cfg.output_dir);
  WeightedPointCloud cloud = quantize(cfg.density, cfg.n, cfg.seed, cfg.quantize);
  const std::vector<Vec3> start = cloud.positions;
  DualState st = make_consistent(*cfg.domain, std::move(cloud), 0.0,
                                 cfg.flow.accept_tol, cfg.flow.max_newton);
  double max_u = 0.0;
  for (const Vec3& u : velocity(st)) max_u = std::max(max_u, u.norm());

  const Trajectory traj =
      run_flow(*cfg.domain, std::move(st), cfg.dt, cfg.t_final, cfg.scheme,
               cfg.flow);
  double max_disp = 0.0;
  for (std::size_t i = 0; i < start.size(); ++i)
    max_disp = std::max(
        max_disp, (traj.records.back().positions[i] - start[i]).norm());

  const bool pass = max_u <= velocity_tol && max_disp <= displacement_tol;
  log << (pass ? "PASS" : "FAIL") << ": max |U| = " << max_u
      << ", max displacement over T = " << cfg.t_final << " is " << max_disp
      << "\n";
  return pass;
}

}  // namespace sg
