// Command-line front end: power flow, simulation, linearization, eigen and
// participation analysis, singular-value sweeps, Prony fits, and the two
// shipped end-to-end case studies.

#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "sso/analysis.hpp"
#include "sso/artifacts.hpp"
#include "sso/config.hpp"
#include "sso/prony.hpp"
#include "sso/simulate.hpp"

namespace fs = std::filesystem;
using namespace sso;

namespace {

constexpr int kExitSchema = 2;
constexpr int kExitNumerical = 3;

struct CommonOpts {
  std::string config_path;
  std::string framework;  // "", "spc", "qpc"
  std::string out_dir = ".";
  std::string format = "csv";  // csv | svg (svg implies csv too)
  int seed = 0;                // documented no-op
};

struct LoadedCase {
  CaseDefinition def;
  Framework fw = Framework::SPC;
  Provenance prov;
};

LoadedCase load(const CommonOpts& opts, const std::string& command) {
  LoadedCase lc;
  lc.def = load_case(opts.config_path);
  lc.fw = lc.def.default_framework;
  if (opts.framework == "spc") lc.fw = Framework::SPC;
  else if (opts.framework == "qpc") lc.fw = Framework::QPC;
  else if (!opts.framework.empty())
    throw ConfigError("config: --framework must be 'spc' or 'qpc'");
  lc.prov.config_hash = config_hash(lc.def);
  lc.prov.command = command + " " + opts.config_path +
                    (opts.framework.empty() ? "" : " --framework " + opts.framework);
  fs::create_directories(opts.out_dir);
  return lc;
}

struct ReadyModel {
  SystemModel model;
  OperatingPoint op;
};

ReadyModel prepare(const LoadedCase& lc, Framework fw) {
  ReadyModel rm;
  rm.model = build_system(lc.def, fw);
  const PowerFlowRecord pf = run_case_power_flow(lc.def, rm.model);
  rm.op = initialize(rm.model, pf);
  return rm;
}

std::string join(const fs::path& dir, const std::string& file) { return (dir / file).string(); }

void write_powerflow_csv(const LoadedCase& lc, const SystemModel& m, const PowerFlowRecord& pf,
                         const std::string& path) {
  CsvWriter csv(path, {"bus", "v_mag_pu", "v_ang_rad", "p_inj_pu", "q_inj_pu"}, lc.prov);
  for (int i = 0; i < m.topology.node_count(); ++i)
    csv.row(std::vector<std::string>{m.topology.node_names[static_cast<std::size_t>(i)],
                                     format_double(std::abs(pf.v(i))),
                                     format_double(std::arg(pf.v(i))),
                                     format_double(pf.s_inj(i).real()),
                                     format_double(pf.s_inj(i).imag())});
}

LinearModel linearize_model(const ReadyModel& rm) {
  const SystemModel& m = rm.model;
  VectorFn f = [&m](const RealVector& x, const RealVector& u) { return vector_field(m, x, u); };
  VectorFn g = [&m](const RealVector& x, const RealVector& u) {
    return record_channels(m, x, u);
  };
  LinearModel lm = linearize(f, g, rm.op.x0, rm.op.u0);
  lm.state_labels = m.state_labels;
  lm.input_labels = m.input_labels;
  lm.output_labels = m.output_channels;
  return lm;
}

void write_matrix_csv(const RealMatrix& a, const std::vector<std::string>& row_labels,
                      const std::vector<std::string>& col_labels, const std::string& path,
                      const Provenance& prov) {
  std::vector<std::string> header{"row"};
  header.insert(header.end(), col_labels.begin(), col_labels.end());
  CsvWriter csv(path, header, prov);
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    std::vector<std::string> row{row_labels[static_cast<std::size_t>(i)]};
    for (Eigen::Index j = 0; j < a.cols(); ++j) row.push_back(format_double(a(i, j)));
    csv.row(row);
  }
}

void write_modes_csv(const EigenReport& rep, const std::string& path, const Provenance& prov) {
  CsvWriter csv(path,
                {"re_lambda", "im_lambda", "f_hz", "zeta_pct", "top_state_1", "top_state_2"},
                prov);
  for (const auto& m : rep.modes) {
    if (m.lambda.imag() < 0.0) continue;  // one row per conjugate pair
    csv.row(std::vector<std::string>{
        format_double(m.lambda.real()), format_double(m.lambda.imag()),
        format_double(m.frequency_hz), format_double(100.0 * m.damping_ratio),
        rep.state_labels[static_cast<std::size_t>(m.top_states[0])],
        rep.state_labels[static_cast<std::size_t>(m.top_states[1])]});
  }
}

const Mode* most_critical_mode(const EigenReport& rep) {
  // The oscillatory mode with the largest real part (representative with
  // positive imaginary part); used when no explicit mode is selected.
  const Mode* best = nullptr;
  for (const auto& m : rep.modes)
    if (m.lambda.imag() > 0.0 && (!best || m.lambda.real() > best->lambda.real())) best = &m;
  return best;
}

void write_pfactors_csv(const EigenReport& rep, const Mode& mode, const std::string& path,
                        const Provenance& prov) {
  CsvWriter csv(path, {"state", "participation", "shape_angle_deg"}, prov);
  for (int k : mode.top_states)
    csv.row(std::vector<std::string>{rep.state_labels[static_cast<std::size_t>(k)],
                                     format_double(mode.participation(k)),
                                     format_double(mode.shape_angle_deg(k))});
}

void write_sigma_csv(const SigmaSweep& sw, const std::string& path, const Provenance& prov) {
  CsvWriter csv(path, {"f_hz", "sigma_max", "sigma_max_db"}, prov);
  for (Eigen::Index i = 0; i < sw.f_hz.size(); ++i)
    csv.row(std::vector<double>{sw.f_hz(i), sw.sigma_max(i), 20.0 * std::log10(sw.sigma_max(i))});
}

void write_timeseries_csv(const SimResult& res, const std::string& path,
                          const Provenance& prov) {
  std::vector<std::string> header{"time_s"};
  header.insert(header.end(), res.channel_names.begin(), res.channel_names.end());
  CsvWriter csv(path, header, prov);
  for (Eigen::Index i = 0; i < res.time.size(); ++i) {
    std::vector<double> row{res.time(i)};
    for (Eigen::Index j = 0; j < res.channels.cols(); ++j) row.push_back(res.channels(i, j));
    csv.row(row);
  }
}

SimConfig sim_config_for(const CaseDefinition& def, Framework fw) {
  SimConfig cfg;
  cfg.t_end = def.sim.t_end;
  cfg.dt = fw == Framework::SPC ? def.sim.dt_spc : def.sim.dt_qpc;
  cfg.method = def.sim.method == "trapezoidal" ? IntegrationMethod::TrapezoidalImplicit
                                               : IntegrationMethod::RK4Fixed;
  if (fw == Framework::QPC) cfg.method = IntegrationMethod::TrapezoidalImplicit;
  cfg.disturbance = def.sim.disturbance;
  cfg.record = def.sim.record;
  cfg.decimation = def.sim.decimation;
  return cfg;
}

void plot_timeseries(const SimResult& res, const std::string& path, const std::string& title) {
  SvgPlot plot;
  plot.title = title;
  plot.x_label = "time, s";
  plot.y_label = "channel value, pu";
  for (std::size_t j = 0; j < res.channel_names.size(); ++j) {
    SvgSeries s;
    s.label = res.channel_names[j];
    s.x = res.time;
    s.y = res.channels.col(static_cast<Eigen::Index>(j));
    plot.series.push_back(std::move(s));
  }
  write_svg(path, plot);
}

PronyResult prony_of_run(const CaseDefinition& def, const SimResult& res, int channel) {
  const double t0 = def.analysis.prony_window_begin;
  const double t1 = std::min(def.analysis.prony_window_end,
                             res.time.size() ? res.time(res.time.size() - 1) : 0.0);
  std::vector<double> win;
  double dt = 0.0, t_prev = 0.0;
  for (Eigen::Index i = 0; i < res.time.size(); ++i) {
    if (res.time(i) < t0 || res.time(i) > t1) continue;
    if (!win.empty() && dt == 0.0) dt = res.time(i) - t_prev;
    t_prev = res.time(i);
    win.push_back(res.channels(i, channel));
  }
  if (win.size() < 16) throw NumericalError("prony: analysis window has too few samples");
  RealVector y = Eigen::Map<RealVector>(win.data(), static_cast<Eigen::Index>(win.size()));
  return prony_fit(y, dt, def.analysis.prony_order);
}

void write_prony_csv(const PronyResult& fit, const std::string& path, const Provenance& prov) {
  CsvWriter csv(path, {"f_hz", "sigma_1_per_s", "zeta_pct", "amplitude", "phase_rad", "energy"},
                prov);
  for (const auto& t : fit.terms)
    csv.row(std::vector<double>{t.frequency_hz, t.lambda.real(), 100.0 * t.damping_ratio,
                                std::abs(t.amplitude), std::arg(t.amplitude), t.energy});
}

// ---------------------------------------------------------------------------
// Case study pipeline
// ---------------------------------------------------------------------------

void run_casestudy(const LoadedCase& lc, const CommonOpts& opts, int which) {
  const fs::path dir(opts.out_dir);
  std::ofstream report(join(dir, "report.txt"));
  report.precision(6);
  report << "Case study " << which << " (" << lc.def.name << ")\n";
  report << "=============================================\n\n";

  struct FwResult {
    std::string name;
    double f_hz = 0.0, zeta_pct = 0.0;
    bool unstable = false;
  };
  std::vector<FwResult> rows;
  double spc_mode_f = 0.0;

  for (Framework fw : {Framework::SPC, Framework::QPC}) {
    const std::string tag = framework_name(fw);
    ReadyModel rm = prepare(lc, fw);
    write_powerflow_csv(lc, rm.model, rm.op.pf, join(dir, "powerflow_" + tag + ".csv"));
    report << "[" << tag << "] power flow: tie flow " << rm.op.pf.tie_flow
           << " pu, equilibrium residual " << rm.op.residual << "\n";

    const LinearModel lm = linearize_model(rm);
    const EigenReport rep = eigen_analysis(lm.a, lm.state_labels);
    write_modes_csv(rep, join(dir, "modes_" + tag + ".csv"), lc.prov);

    const auto unstable = unstable_modes(rep);
    FwResult r;
    r.name = tag;
    r.unstable = !unstable.empty();
    if (!unstable.empty()) {
      const Mode& m = unstable.front();
      r.f_hz = m.frequency_hz;
      r.zeta_pct = 100.0 * m.damping_ratio;
      write_pfactors_csv(rep, m, join(dir, "pfactors_" + tag + ".csv"), lc.prov);
      report << "[" << tag << "] unstable mode: f = " << m.frequency_hz
             << " Hz, zeta = " << 100.0 * m.damping_ratio << " %\n";
      report << "[" << tag << "] top participants: "
             << rep.state_labels[static_cast<std::size_t>(m.top_states[0])] << ", "
             << rep.state_labels[static_cast<std::size_t>(m.top_states[1])] << "\n";
      if (fw == Framework::SPC) spc_mode_f = m.frequency_hz;
    } else {
      report << "[" << tag << "] no unstable modes (largest Re lambda = "
             << rep.modes.front().lambda.real() << " 1/s)\n";
    }
    rows.push_back(r);

    const SigmaSweep sw =
        sigma_max_sweep(lm, lc.def.analysis.f_min, lc.def.analysis.f_max, lc.def.analysis.n_points);
    write_sigma_csv(sw, join(dir, "sigma_" + tag + ".csv"), lc.prov);
    SvgPlot plot;
    plot.title = "Maximum singular value (" + tag + ")";
    plot.x_label = "frequency, Hz";
    plot.y_label = "sigma_max";
    plot.log_x = true;
    plot.log_y = true;
    plot.series.push_back({tag, sw.f_hz, sw.sigma_max});
    write_svg(join(dir, "sigma_" + tag + ".svg"), plot);
  }

  // Time-domain comparison and the Prony fit of the SPC ringdown.
  ReadyModel spc = prepare(lc, Framework::SPC);
  SimResult res = integrate(spc.model, spc.op, sim_config_for(lc.def, Framework::SPC));
  write_timeseries_csv(res, join(dir, "timeseries_spc.csv"), lc.prov);
  plot_timeseries(res, join(dir, "timeseries_spc.svg"), "SPC time-domain response");
  const PronyResult fit = prony_of_run(lc.def, res, 1);
  write_prony_csv(fit, join(dir, "prony_spc.csv"), lc.prov);
  const auto band = prony_terms_in_band(fit, 5.0, 200.0);
  report << "\n[spc] time-domain Prony";
  if (!band.empty())
    report << ": dominant oscillation f = " << band.front().frequency_hz
           << " Hz, zeta = " << 100.0 * band.front().damping_ratio << " %\n";
  else
    report << ": no oscillatory term found\n";

  ReadyModel qpc = prepare(lc, Framework::QPC);
  SimResult res_q = integrate(qpc.model, qpc.op, sim_config_for(lc.def, Framework::QPC));
  write_timeseries_csv(res_q, join(dir, "timeseries_qpc.csv"), lc.prov);
  plot_timeseries(res_q, join(dir, "timeseries_qpc.svg"), "QPC time-domain response");

  const double ref_f = which == 2 ? 43.33 : 43.135;
  const double ref_z = which == 2 ? 0.0 : -2.11;
  report << "\nComparison (reference values from the benchmark study)\n";
  report << "approach        f, Hz      zeta, %\n";
  report << "reference       " << ref_f << "     " << (which == 2 ? std::string("n/a") :
                                                       std::to_string(ref_z)) << "\n";
  for (const auto& r : rows) {
    report << r.name << " (linearized)";
    if (r.unstable)
      report << "  " << r.f_hz << "    " << r.zeta_pct << "\n";
    else
      report << "  stable, no unstable mode\n";
  }
  if (!band.empty())
    report << "spc (prony)     " << band.front().frequency_hz << "    "
           << 100.0 * band.front().damping_ratio << "\n";
  (void)spc_mode_f;
  std::cout << "case study " << which << " artifacts written to " << opts.out_dir << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Space-phasor vs quasistationary power-system analysis toolkit"};
  app.require_subcommand(1);

  CommonOpts opts;
  int casestudy_id = 1;
  int prony_channel = 1;
  std::string mode_select;

  auto add_common = [&](CLI::App* sub, bool needs_config = true) {
    if (needs_config)
      sub->add_option("config", opts.config_path, "configuration file")->required();
    sub->add_option("--framework", opts.framework, "spc or qpc (default: config)");
    sub->add_option("--out", opts.out_dir, "output directory");
    sub->add_option("--format", opts.format, "csv or svg")
        ->check(CLI::IsMember({"csv", "svg"}));
    sub->add_option("--seed", opts.seed,
                    "random seed (no-op; reserved for future stochastic features)");
  };

  CLI::App* c_pf = app.add_subcommand("powerflow", "solve the power flow");
  CLI::App* c_sim = app.add_subcommand("simulate", "time-domain simulation");
  CLI::App* c_lin = app.add_subcommand("linearize", "emit the linearized state space");
  CLI::App* c_eig = app.add_subcommand("eigs", "eigenvalues with frequency and damping");
  CLI::App* c_pf2 = app.add_subcommand("pfactors", "participation factors of a mode");
  CLI::App* c_sig = app.add_subcommand("sigma", "maximum singular value sweep");
  CLI::App* c_pro = app.add_subcommand("prony", "Prony fit of a simulated response");
  CLI::App* c_cs = app.add_subcommand("casestudy", "full pipeline for a shipped case");
  for (CLI::App* sub : {c_pf, c_sim, c_lin, c_eig, c_pf2, c_sig, c_pro}) add_common(sub);
  c_pf2->add_option("--mode", mode_select,
                    "mode selector: 'unstable' (default) or index into the mode table");
  c_pro->add_option("--channel", prony_channel, "output channel index to fit (default 1)");
  c_cs->add_option("case", casestudy_id, "1 (SG + 3 GFCs) or 2 (4 GFCs)")
      ->required()
      ->check(CLI::Range(1, 2));
  add_common(c_cs);

  CLI11_PARSE(app, argc, argv);

  std::string command;
  for (int i = 1; i < argc; ++i) command += std::string(i > 1 ? " " : "") + argv[i];

  try {
    const fs::path dir(opts.out_dir);
    if (c_pf->parsed()) {
      LoadedCase lc = load(opts, "powerflow");
      SystemModel m = build_system(lc.def, lc.fw);
      const PowerFlowRecord pf = run_case_power_flow(lc.def, m);
      write_powerflow_csv(lc, m, pf, join(dir, "powerflow.csv"));
      std::cout << "converged in " << pf.iterations << " iterations, tie flow " << pf.tie_flow
                << " pu\n";
    } else if (c_sim->parsed()) {
      LoadedCase lc = load(opts, "simulate");
      ReadyModel rm = prepare(lc, lc.fw);
      SimResult res = integrate(rm.model, rm.op, sim_config_for(lc.def, lc.fw));
      write_timeseries_csv(res, join(dir, "timeseries.csv"), lc.prov);
      if (opts.format == "svg")
        plot_timeseries(res, join(dir, "timeseries.svg"), lc.def.name + " time-domain response");
      for (const auto& ev : res.events)
        std::cout << "event at t = " << ev.t << ": " << ev.what << "\n";
      std::cout << res.time.size() << " samples written\n";
      if (res.truncated) return kExitNumerical;
    } else if (c_lin->parsed()) {
      LoadedCase lc = load(opts, "linearize");
      ReadyModel rm = prepare(lc, lc.fw);
      const LinearModel lm = linearize_model(rm);
      write_matrix_csv(lm.a, lm.state_labels, lm.state_labels, join(dir, "a_matrix.csv"),
                       lc.prov);
      write_matrix_csv(lm.b, lm.state_labels, lm.input_labels, join(dir, "b_matrix.csv"),
                       lc.prov);
      write_matrix_csv(lm.c, lm.output_labels, lm.state_labels, join(dir, "c_matrix.csv"),
                       lc.prov);
      write_matrix_csv(lm.d, lm.output_labels, lm.input_labels, join(dir, "d_matrix.csv"),
                       lc.prov);
      std::cout << "n = " << lm.a.rows() << ", p = " << lm.b.cols() << ", q = " << lm.c.rows()
                << ", worst step-halving disagreement " << lm.max_richardson_error << "\n";
    } else if (c_eig->parsed()) {
      LoadedCase lc = load(opts, "eigs");
      ReadyModel rm = prepare(lc, lc.fw);
      const LinearModel lm = linearize_model(rm);
      const EigenReport rep = eigen_analysis(lm.a, lm.state_labels);
      write_modes_csv(rep, join(dir, "modes.csv"), lc.prov);
      const auto unstable = unstable_modes(rep);
      for (const auto& m : unstable)
        if (m.lambda.imag() >= 0.0)
          std::cout << "unstable mode: f = " << m.frequency_hz
                    << " Hz, zeta = " << 100.0 * m.damping_ratio << " %\n";
      if (unstable.empty()) std::cout << "all modes stable\n";
    } else if (c_pf2->parsed()) {
      LoadedCase lc = load(opts, "pfactors");
      ReadyModel rm = prepare(lc, lc.fw);
      const LinearModel lm = linearize_model(rm);
      const EigenReport rep = eigen_analysis(lm.a, lm.state_labels);
      const Mode* mode = nullptr;
      const auto unstable = unstable_modes(rep);
      if (mode_select.empty() || mode_select == "unstable") {
        mode = unstable.empty() ? most_critical_mode(rep) : &unstable.front();
      } else {
        const std::size_t idx = static_cast<std::size_t>(std::stoul(mode_select));
        if (idx >= rep.modes.size()) throw ConfigError("config: --mode index out of range");
        mode = &rep.modes[idx];
      }
      if (!mode) throw NumericalError("pfactors: no oscillatory mode found");
      write_pfactors_csv(rep, *mode, join(dir, "pfactors.csv"), lc.prov);
      std::cout << "mode f = " << mode->frequency_hz << " Hz, zeta = "
                << 100.0 * mode->damping_ratio << " %\n";
    } else if (c_sig->parsed()) {
      LoadedCase lc = load(opts, "sigma");
      ReadyModel rm = prepare(lc, lc.fw);
      const LinearModel lm = linearize_model(rm);
      const SigmaSweep sw = sigma_max_sweep(lm, lc.def.analysis.f_min, lc.def.analysis.f_max,
                                            lc.def.analysis.n_points);
      write_sigma_csv(sw, join(dir, "sigma.csv"), lc.prov);
      if (opts.format == "svg") {
        SvgPlot plot;
        plot.title = lc.def.name + " maximum singular value";
        plot.x_label = "frequency, Hz";
        plot.y_label = "sigma_max";
        plot.log_x = true;
        plot.log_y = true;
        plot.series.push_back({framework_name(lc.fw), sw.f_hz, sw.sigma_max});
        write_svg(join(dir, "sigma.svg"), plot);
      }
      std::cout << sw.f_hz.size() << " frequency points written\n";
    } else if (c_pro->parsed()) {
      LoadedCase lc = load(opts, "prony");
      ReadyModel rm = prepare(lc, lc.fw);
      SimResult res = integrate(rm.model, rm.op, sim_config_for(lc.def, lc.fw));
      if (prony_channel < 0 || prony_channel >= static_cast<int>(res.channel_names.size()))
        throw ConfigError("config: --channel index out of range");
      const PronyResult fit = prony_of_run(lc.def, res, prony_channel);
      write_prony_csv(fit, join(dir, "prony.csv"), lc.prov);
      std::cout << "fitted " << fit.terms.size() << " terms on channel "
                << res.channel_names[static_cast<std::size_t>(prony_channel)]
                << ", rms residual " << fit.rms_residual << "\n";
    } else if (c_cs->parsed()) {
      LoadedCase lc = load(opts, "casestudy " + std::to_string(casestudy_id));
      run_casestudy(lc, opts, casestudy_id);
    }
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitSchema;
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitSchema;
  } catch (const NumericalError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumerical;
  }
  return 0;
}
