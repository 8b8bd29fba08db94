// Command-line front end: scenario presets or key=value files in, CSV and a
// JSON manifest out.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <thread>

#include "CLI11.hpp"
#include "json.hpp"

#include "cqed/scenario.hpp"
#include "cqed/weakfield.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace cqed;

namespace {

constexpr const char* kVersion = "0.1.0";

class Csv {
 public:
  Csv(const fs::path& path, const std::string& header) : out_(path) {
    if (!out_) throw ConfigError("cannot write " + path.string());
    out_ << header << '\n';
  }
  template <class... T>
  void row(const T&... values) {
    bool first = true;
    ((out_ << (first ? "" : ",") << format(values), first = false), ...);
    out_ << '\n';
  }

 private:
  static std::string format(double v) {
    if (std::isnan(v)) return "nan";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
  }
  static std::string format(const std::string& v) { return v; }
  static std::string format(const char* v) { return v; }
  template <class I>
    requires std::is_integral_v<I>
  static std::string format(I v) { return std::to_string(v); }

  std::ofstream out_;
};

json params_json(const SystemParams& p) {
  return json{{"g", p.g},         {"kappa", p.kappa}, {"gamma", p.gamma},     {"epsilon", p.epsilon},
              {"n_atoms", p.n_atoms}, {"n_max", p.n_max}, {"r", p.r},         {"theta", p.theta},
              {"gamma_bw", p.gamma_bw}, {"eta", p.eta}};
}

json derived_json(const SystemParams& p) {
  const DerivedParams d = derived_params(p);
  json out{{"C1", d.c1}, {"n0", d.n0}, {"C", d.c}, {"C1_prime", d.c1_prime}, {"Y", d.big_y},
           {"emission_ratio_2NC1", emission_ratio(p)}};
  try {
    const WeakFieldConstants k = weak_field_constants(p);
    out["weak_field"] = json{{"alpha", k.alpha},
                             {"beta", k.beta},
                             {"alpha_beta", k.alpha * k.beta},
                             {"zeta_cavity", k.zeta_cavity},
                             {"zeta_spont", k.zeta_spont},
                             {"Omega_MHz", k.omega_mhz()},
                             {"envelope_rate_per_us", k.damping}};
  } catch (const DomainError&) {
    out["weak_field"] = nullptr;  // overdamped: no vacuum-Rabi oscillation
  }
  return out;
}

json steady_json(const SteadyMoments& m) {
  return json{{"field_re", m.field.real()}, {"field_im", m.field.imag()}, {"n_bar", m.n_bar},
              {"n_inc", m.n_inc},          {"X", m.big_x},               {"flux_per_us", m.flux}};
}

void write_h(const fs::path& path, const CorrelationSeries& h) {
  Csv csv(path, h.stderr_h.empty() ? "tau_us,h" : "tau_us,h,stderr");
  for (std::size_t k = 0; k < h.tau.size(); ++k) {
    if (h.stderr_h.empty()) csv.row(h.tau[k], h.h[k]);
    else csv.row(h.tau[k], h.h[k], h.stderr_h[k]);
  }
}

void write_spectrum(const fs::path& path, const SpectrumSeries& s) {
  Csv csv(path, "nu_MHz,S");
  for (std::size_t k = 0; k < s.nu.size(); ++k) csv.row(s.nu[k], s.s[k]);
}

struct Run {
  Scenario scenario;
  fs::path out;
  json manifest;
  std::vector<std::string> files;

  fs::path file(const std::string& name) {
    files.push_back(name);
    return out / name;
  }
};

void run_params(Run& run) {
  const SystemParams p = resolve_params(run.scenario);
  run.manifest["params"] = params_json(p);
  run.manifest["derived"] = derived_json(p);
  const Model model(p);
  run.manifest["steady_state"] = steady_json(moments(steady_state(model), model));
}

void run_qrt_mode(Run& run) {
  const SystemParams p = resolve_params(run.scenario);
  const std::vector<double> nu = nu_grid(run.scenario);
  const QrtRun q = run_qrt(p, nu);
  run.manifest["params"] = params_json(p);
  run.manifest["derived"] = derived_json(p);
  run.manifest["steady_state"] = steady_json(q.moments);
  write_h(run.file("h_qrt.csv"), q.h);
  write_spectrum(run.file("spectrum_qrt.csv"), q.spectrum);
  try {
    run.manifest["fwhm_zero_peak_MHz"] = fwhm_zero_peak(q.spectrum);
  } catch (const DomainError&) {
    run.manifest["fwhm_zero_peak_MHz"] = nullptr;
  }
}

void run_correlate(Run& run) {
  const Scenario& s = run.scenario;
  const SystemParams p = resolve_params(s);
  const std::vector<double> nu = nu_grid(s);
  CorrelatorSettings cs;
  cs.starts = s.starts;
  cs.tau_max = s.tau_max > 0.0 ? s.tau_max : 2.0 * envelope_window(p);
  cs.spectrum_window = s.spectrum_window;
  cs.duration = s.duration;
  cs.seed = s.seed;
  cs.workers = s.workers;
  const bool photocount = s.trajectory == TrajectoryMode::photocount;
  const CorrelateRun c = photocount ? run_photocount_correlator(p, cs, nu)
                                    : run_homodyne_correlator(p, cs, nu);
  run.manifest["params"] = params_json(p);
  run.manifest["derived"] = derived_json(p);
  run.manifest["steady_state"] = steady_json(c.moments);
  json corr{{"route", photocount ? "photocount conditioned field" : "homodyne photocurrent"},
            {"trajectories", c.trajectories},
            {"segments", c.average.segments},
            {"n_starts_effective", c.average.n_starts},
            {"tau_max_us", cs.tau_max},
            {"large_bandwidth", large_bandwidth(p)}};
  if (!photocount) {
    const double band = envelope_window(p);
    try {
      const ShotNoiseFit fit = shot_noise_check(c.h, p, band);
      corr["shot_noise"] = json{{"band_start_us", band},
                                {"rate_per_us", fit.rate},
                                {"amplitude", fit.amplitude},
                                {"expected_rate_per_us", Rates::from(p).gamma_bw},
                                {"expected_amplitude", expected_shot_noise(p, c.average.n_starts, c.h.lambda)}};
    } catch (const DomainError& e) {
      corr["shot_noise"] = e.what();
    }
    corr["max_asymmetry"] = max_asymmetry(c.h);
  }
  run.manifest["correlator"] = corr;
  write_h(run.file(photocount ? "field_traj.csv" : "h_traj.csv"), c.h);
  write_spectrum(run.file("spectrum_traj.csv"), c.spectrum);
}

void run_dump(Run& run) {
  const Scenario& s = run.scenario;
  const SystemParams p = resolve_params(s);
  EngineOptions opt;
  const bool photocount = s.trajectory == TrajectoryMode::photocount;
  opt.record_field = photocount;
  const TrajectoryEngine engine(p, opt);
  const std::vector<TrajectoryRecord> recs =
      run_batch(engine, s.seed, s.trajectories, s.duration, s.trajectory, s.workers);
  run.manifest["params"] = params_json(p);
  run.manifest["derived"] = derived_json(p);
  run.manifest["trajectory"] = json{{"mode", photocount ? "photocount" : "homodyne"},
                                    {"trajectories", s.trajectories},
                                    {"duration_us", s.duration},
                                    {"dt_us", engine.dt()},
                                    {"sample_us", engine.dt_s()}};
  Csv events(run.file("events.csv"), "trajectory,time_us,kind,atom");
  Csv samples(run.file("samples.csv"), photocount ? "trajectory,t_us,field" : "trajectory,t_us,current,field");
  for (std::size_t i = 0; i < recs.size(); ++i) {
    for (const TrajectoryEvent& e : recs[i].events) {
      events.row(i, e.time, e.kind == EventKind::cavity_count ? "cavity" : "spontaneous", e.atom);
    }
    for (std::size_t k = 0; k < recs[i].cond_field.size(); ++k) {
      const double t = static_cast<double>(k) * recs[i].dt_s;
      if (photocount) samples.row(i, t, recs[i].cond_field[k]);
      else samples.row(i, t, recs[i].current[k], recs[i].cond_field[k]);
    }
  }
}

void run_fwhm(Run& run) {
  const Scenario& s = run.scenario;
  const std::vector<double> nu = nu_grid(s);
  const std::vector<FwhmPoint> pts = fwhm_scan(s.params, s.gammas, s.drives, nu, s.auto_nmax);
  run.manifest["params"] = params_json(s.params);
  run.manifest["derived"] = derived_json(s.params);
  Csv csv(run.file("fwhm.csv"), "gamma_MHz,eps_over_kappa,X,n_max,fwhm_MHz,fwhm_over_kappa,fwhm_over_gamma");
  for (const FwhmPoint& pt : pts) {
    csv.row(pt.gamma, pt.eps_over_kappa, pt.big_x, pt.n_max, pt.fwhm, pt.fwhm / s.params.kappa,
            pt.fwhm / pt.gamma);
  }
}

// Refuses to touch a non-empty directory unless forced.
void prepare_output(const fs::path& out, bool force) {
  if (fs::exists(out) && !fs::is_directory(out)) throw ConfigError(out.string() + " exists and is not a directory");
  if (fs::exists(out) && !fs::is_empty(out) && !force) {
    throw ConfigError(out.string() + " is not empty; pass --force to overwrite");
  }
  fs::create_directories(out);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cavity QED wave-particle correlator"};
  std::string scenario_arg;
  std::string mode_arg;
  std::string out_arg;
  std::uint64_t seed = 1;
  int workers = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  std::size_t starts = 0;
  double duration = 0.0;
  int nmax = -1;
  bool force = false;
  std::vector<std::string> settings;
  app.add_option("--scenario", scenario_arg, "preset (fig5 fig7 fig8 fig9 fig10 fig12 fig13) or config file")
      ->required();
  app.add_option("--mode", mode_arg, "qrt, correlate, trajectory-dump, fwhm-scan or params");
  app.add_option("--seed", seed, "base seed");
  app.add_option("--workers", workers, "worker threads");
  app.add_option("--out", out_arg, "output directory (default out/<scenario>)");
  app.add_option("--starts", starts, "start clicks to accumulate (correlate)");
  app.add_option("--duration", duration, "trajectory length in microseconds");
  app.add_option("--nmax", nmax, "photon truncation; 0 picks it by convergence");
  app.add_option("--set", settings, "extra key=value setting, repeatable");
  app.add_flag("--force", force, "overwrite a non-empty output directory");
  app.set_version_flag("--version", kVersion);
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  Run run;
  try {
    Scenario& s = run.scenario;
    s = load_scenario(scenario_arg);
    for (const std::string& kv : settings) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + kv + "'");
      apply_setting(s, kv.substr(0, eq), kv.substr(eq + 1));
    }
    if (!mode_arg.empty()) apply_setting(s, "mode", mode_arg);
    if (app.count("--seed")) s.seed = seed;
    s.workers = workers;
    if (app.count("--starts")) s.starts = starts;
    if (app.count("--duration")) s.duration = duration;
    if (nmax >= 0) apply_setting(s, "n_max", std::to_string(nmax));
    s.validate();

    run.out = out_arg.empty() ? fs::path("out") / s.name : fs::path(out_arg);
    prepare_output(run.out, force);
    run.manifest = json{{"scenario", s.name},
                        {"mode", mode_name(s.mode)},
                        {"seed", s.seed},
                        {"workers", s.workers},
                        {"versions", json{{"cqed", kVersion},
                                          {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." +
                                                        std::to_string(EIGEN_MAJOR_VERSION) + "." +
                                                        std::to_string(EIGEN_MINOR_VERSION)},
                                          {"compiler", __VERSION__}}}};
    switch (s.mode) {
      case RunMode::params: run_params(run); break;
      case RunMode::qrt: run_qrt_mode(run); break;
      case RunMode::correlate: run_correlate(run); break;
      case RunMode::trajectory_dump: run_dump(run); break;
      case RunMode::fwhm_scan: run_fwhm(run); break;
    }
    run.manifest["files"] = run.files;
    std::ofstream(run.out / "manifest.json") << run.manifest.dump(2) << '\n';
    std::cout << "wrote " << (run.out / "manifest.json").string() << '\n';
    return 0;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const ConvergenceError& e) {
    std::cerr << "convergence error: " << e.what()
              << "\nhint: raise n_max (--nmax), extend the tau window, or shrink the step\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
