#include "cqed/scenario.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace cqed {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double to_double(const std::string& key, const std::string& v) {
  double out = 0.0;
  const char* end = v.data() + v.size();
  auto [ptr, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc() || ptr != end) throw ConfigError("bad number for " + key + ": '" + v + "'");
  return out;
}

long to_long(const std::string& key, const std::string& v) {
  long out = 0;
  const char* end = v.data() + v.size();
  auto [ptr, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc() || ptr != end) throw ConfigError("bad integer for " + key + ": '" + v + "'");
  return out;
}

std::vector<double> to_list(const std::string& key, const std::string& v) {
  std::vector<double> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(to_double(key, trim(item)));
  if (out.empty()) throw ConfigError("empty list for " + key);
  return out;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError("bad boolean for " + key + ": '" + v + "'");
}

RunMode to_mode(const std::string& v) {
  if (v == "qrt") return RunMode::qrt;
  if (v == "correlate") return RunMode::correlate;
  if (v == "trajectory-dump") return RunMode::trajectory_dump;
  if (v == "fwhm-scan") return RunMode::fwhm_scan;
  if (v == "params") return RunMode::params;
  throw ConfigError("unknown mode '" + v + "'");
}

// Caption parameter sets.
SystemParams one_atom() { return SystemParams{}; }

SystemParams two_atoms() {
  SystemParams p;
  p.n_atoms = 2;
  p.g = 38.0 / std::sqrt(2.0);
  return p;
}

}  // namespace

void Scenario::validate() const {
  SystemParams p = params;
  if (auto_nmax) p.n_max = std::max(p.n_max, 2);
  p.validate();
  if (mode == RunMode::fwhm_scan) {
    if (drives.empty()) throw ConfigError("fwhm-scan needs a drives list");
    for (double d : drives) {
      if (!(d > 0.0)) throw ConfigError("drives must be positive");
    }
    for (double g : gammas) {
      if (!(g > 0.0)) throw ConfigError("gammas must be positive");
    }
  } else if (target_x.has_value() == explicit_epsilon) {
    throw ConfigError("give exactly one of target_x and epsilon");
  }
  if (target_x && !(*target_x > 0.0)) throw ConfigError("target_x must be positive");
  if (mode == RunMode::correlate && starts == 0) throw ConfigError("correlate needs starts > 0");
  if (!(duration > 0.0)) throw ConfigError("duration must be positive");
  if (trajectories == 0) throw ConfigError("trajectories must be positive");
  if (tau_max < 0.0 || spectrum_window < 0.0) throw ConfigError("windows must be non-negative");
  if (!(nu_max > 0.0) || !(nu_step > 0.0) || nu_step > nu_max) throw ConfigError("bad frequency grid");
  if (workers < 1) throw ConfigError("workers must be at least 1");
}

std::vector<std::string> preset_names() {
  return {"fig5", "fig7", "fig8", "fig9", "fig10", "fig12", "fig13"};
}

Scenario preset(const std::string& name) {
  Scenario s;
  s.name = name;
  if (name == "fig5") {
    s.mode = RunMode::correlate;
    s.params = one_atom();
    s.params.gamma_bw = 100.0;
    s.params.r = 0.5;
    s.target_x = 2.99e-4;
    s.starts = 55000;
    s.tau_max = 1.0;
  } else if (name == "fig7") {
    s.mode = RunMode::qrt;
    s.params = two_atoms();
    s.target_x = 1.36;
  } else if (name == "fig8") {
    s.mode = RunMode::qrt;
    s.params = one_atom();
    s.target_x = 104.0;
  } else if (name == "fig9") {
    s.mode = RunMode::qrt;
    s.params = two_atoms();
    s.target_x = 18.1;
  } else if (name == "fig10") {
    s.mode = RunMode::correlate;
    s.params = two_atoms();
    s.target_x = 18.1;
    s.trajectory = TrajectoryMode::photocount;
    s.starts = 5000;
    s.duration = 100.0;
  } else if (name == "fig12") {
    s.mode = RunMode::fwhm_scan;
    s.params = one_atom();
    s.drives = {1.5, 1.75, 2.0, 2.25, 2.5};
  } else if (name == "fig13") {
    s.mode = RunMode::fwhm_scan;
    s.params = two_atoms();
    s.gammas = {3.0, 1.0, 0.5};
    s.drives = {1.0, 1.1, 1.25, 1.5};
  } else {
    std::string known;
    for (const std::string& n : preset_names()) known += " " + n;
    throw ConfigError("unknown preset '" + name + "' (known:" + known + ")");
  }
  return s;
}

void apply_setting(Scenario& s, const std::string& key, const std::string& value) {
  SystemParams& p = s.params;
  if (key == "mode") s.mode = to_mode(value);
  else if (key == "g") p.g = to_double(key, value);
  else if (key == "kappa") p.kappa = to_double(key, value);
  else if (key == "gamma") p.gamma = to_double(key, value);
  else if (key == "gamma_bw") p.gamma_bw = to_double(key, value);
  else if (key == "epsilon") {
    p.epsilon = to_double(key, value);
    s.explicit_epsilon = true;
    s.target_x.reset();
  } else if (key == "target_x") {
    s.target_x = to_double(key, value);
    s.explicit_epsilon = false;
  } else if (key == "n_atoms") p.n_atoms = static_cast<int>(to_long(key, value));
  else if (key == "n_max") {
    p.n_max = static_cast<int>(to_long(key, value));
    s.auto_nmax = p.n_max == 0;
    if (s.auto_nmax) p.n_max = 3;
  } else if (key == "r") p.r = to_double(key, value);
  else if (key == "theta") p.theta = to_double(key, value);
  else if (key == "eta") p.eta = to_double(key, value);
  else if (key == "trajectory") {
    if (value == "homodyne") s.trajectory = TrajectoryMode::homodyne;
    else if (value == "photocount") s.trajectory = TrajectoryMode::photocount;
    else throw ConfigError("trajectory must be homodyne or photocount");
  } else if (key == "starts") {
    const long v = to_long(key, value);
    if (v < 0) throw ConfigError("starts must be non-negative");
    s.starts = static_cast<std::size_t>(v);
  } else if (key == "duration") s.duration = to_double(key, value);
  else if (key == "trajectories") {
    const long v = to_long(key, value);
    if (v < 1) throw ConfigError("trajectories must be positive");
    s.trajectories = static_cast<std::size_t>(v);
  } else if (key == "tau_max") s.tau_max = to_double(key, value);
  else if (key == "spectrum_window") s.spectrum_window = to_double(key, value);
  else if (key == "drives") s.drives = to_list(key, value);
  else if (key == "gammas") s.gammas = to_list(key, value);
  else if (key == "nu_max") s.nu_max = to_double(key, value);
  else if (key == "nu_step") s.nu_step = to_double(key, value);
  else if (key == "auto_nmax") s.auto_nmax = to_bool(key, value);
  else if (key == "seed") {
    const long v = to_long(key, value);
    if (v < 0) throw ConfigError("seed must be non-negative");
    s.seed = static_cast<std::uint64_t>(v);
  } else if (key == "workers") s.workers = static_cast<int>(to_long(key, value));
  else throw ConfigError("unknown key '" + key + "'");
}

Scenario parse_scenario(std::istream& in, const std::string& name) {
  Scenario s;
  s.name = name;
  std::string line;
  int lineno = 0;
  bool any = false;
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(line.substr(0, line.find('#')));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key == "preset") {
      if (any) throw ConfigError("line " + std::to_string(lineno) + ": preset must come first");
      s = preset(value);
      s.name = name;
    } else {
      apply_setting(s, key, value);
    }
    any = true;
  }
  return s;
}

Scenario load_scenario(const std::string& preset_or_path) {
  const auto names = preset_names();
  if (std::find(names.begin(), names.end(), preset_or_path) != names.end()) return preset(preset_or_path);
  std::ifstream in(preset_or_path);
  if (!in) throw ConfigError("'" + preset_or_path + "' is neither a preset nor a readable file");
  std::string stem = preset_or_path.substr(preset_or_path.find_last_of('/') + 1);
  stem = stem.substr(0, stem.find('.'));
  return parse_scenario(in, stem);
}

std::string mode_name(RunMode mode) {
  switch (mode) {
    case RunMode::qrt: return "qrt";
    case RunMode::correlate: return "correlate";
    case RunMode::trajectory_dump: return "trajectory-dump";
    case RunMode::fwhm_scan: return "fwhm-scan";
    case RunMode::params: return "params";
  }
  return "?";
}

int auto_nmax(const SystemParams& p) { return converge_nmax(p, steady_photon_number); }

SystemParams resolve_params(const Scenario& s) {
  SystemParams p = s.params;
  if (s.auto_nmax) p.n_max = 3;
  if (!s.target_x) {
    if (s.auto_nmax) p.n_max = auto_nmax(p);
    return p;
  }
  for (int round = 0; round < 8; ++round) {
    p.epsilon = calibrate_drive(p, *s.target_x);
    if (!s.auto_nmax) return p;
    const int n = auto_nmax(p);
    if (n == p.n_max) return p;
    p.n_max = n;
  }
  throw ConvergenceError("drive and n_max did not settle; set n_max explicitly");
}

std::vector<double> nu_grid(const Scenario& s) {
  const int count = static_cast<int>(std::lround(s.nu_max / s.nu_step)) + 1;
  return linspace(0.0, s.nu_step * (count - 1), count);
}

double envelope_window(const SystemParams& p) {
  const Rates w = Rates::from(p);
  return 12.0 / ((w.kappa + 0.5 * w.gamma) / 2.0);
}

QrtRun run_qrt(const SystemParams& p, std::span<const double> nu) {
  QrtRun out;
  out.params = p;
  const Model model(p);
  const DensityOperator rho = steady_state(model);
  out.moments = moments(rho, model);
  const LiouvillePropagator prop(model.liouvillian());
  out.h = qrt_correlation(rho, model, prop, p.theta, default_tau_grid(p));
  out.spectrum = spectrum(out.h, out.moments.flux, nu);
  return out;
}

CorrelateRun run_homodyne_correlator(const SystemParams& p, const CorrelatorSettings& settings,
                                     std::span<const double> nu) {
  CorrelateRun out;
  out.params = p;
  const TrajectoryEngine engine(p);
  const Model& model = engine.model();
  out.moments = moments(steady_state(model), model);
  const int m = static_cast<int>(std::lround(settings.tau_max / engine.dt_s()));
  if (m < 1) throw ConfigError("tau_max is shorter than one current sample");

  SegmentAverage total(m, engine.dt_s());
  // Effective starts per trigger are not known in advance; grow the batch in
  // rounds sized from the ratio observed so far.
  double per_trajectory = static_cast<double>(settings.triggers_each);
  while (true) {
    const double have = total.segments() > 0 ? total.result().n_starts : 0.0;
    if (have >= static_cast<double>(settings.starts)) break;
    const double missing = static_cast<double>(settings.starts) - have;
    const auto batch = static_cast<std::size_t>(std::ceil(missing / per_trajectory));
    total.merge(triggered_average(engine, settings.seed, batch, settings.triggers_each, m,
                                  settings.workers, out.trajectories));
    out.trajectories += batch;
    per_trajectory = total.result().n_starts / static_cast<double>(out.trajectories);
  }
  out.average = total.result();
  out.h = h_from_current(out.average, std::abs(out.moments.field), p);
  const double window = settings.spectrum_window > 0.0 ? settings.spectrum_window : envelope_window(p);
  out.spectrum = symmetrize_and_transform(out.h, out.moments.flux, nu, std::min(window, settings.tau_max));
  return out;
}

CorrelateRun run_photocount_correlator(const SystemParams& p, const CorrelatorSettings& settings,
                                       std::span<const double> nu) {
  CorrelateRun out;
  out.params = p;
  EngineOptions opt;
  opt.record_field = true;
  const TrajectoryEngine engine(p, opt);
  const Model& model = engine.model();
  const DensityOperator rho = steady_state(model);
  out.moments = moments(rho, model);
  const double level = rho.expect(model.quadrature(p.theta)).real();
  if (!(std::abs(level) > 0.0)) throw DomainError("steady quadrature vanishes; h is undefined");
  const int m = static_cast<int>(std::lround(settings.tau_max / engine.dt_s()));
  if (m < 1) throw ConfigError("tau_max is shorter than one sample");
  const double context = (m + 1) * engine.dt_s();

  std::vector<TrajectoryRecord> records;
  std::vector<StartClickSet> starts;
  std::size_t have = 0;
  while (have < settings.starts) {
    const double rate = out.trajectories > 0 ? static_cast<double>(have) / out.trajectories : 0.0;
    const std::size_t batch =
        rate > 0.0 ? static_cast<std::size_t>(std::ceil((settings.starts - have) / rate))
                   : static_cast<std::size_t>(std::max(1, settings.workers));
    std::vector<TrajectoryRecord> more = run_batch(engine, settings.seed, batch, settings.duration,
                                                   TrajectoryMode::photocount, settings.workers,
                                                   out.trajectories);
    out.trajectories += batch;
    for (TrajectoryRecord& rec : more) {
      StartClickSet set;
      try {
        set = collect_starts(rec, context);
      } catch (const DomainError&) {
        continue;  // no click with full context in this record
      }
      const std::size_t take = std::min(set.size(), settings.starts - have);
      if (take == 0) break;
      set.times.resize(take);
      have += take;
      rec.current.clear();
      records.push_back(std::move(rec));
      starts.push_back(std::move(set));
    }
    if (out.trajectories > 1000000) throw ConvergenceError("too few cavity clicks; raise duration");
  }
  out.average = average_field(records, starts, m);
  out.h.source = SeriesSource::trajectory;
  out.h.lambda = level;
  out.h.tau = out.average.tau;
  for (std::size_t k = 0; k < out.average.mean.size(); ++k) {
    out.h.h.push_back(out.average.mean[k] / level);
    out.h.stderr_h.push_back(out.average.stderr_mean[k] / std::abs(level));
  }
  const double window = settings.spectrum_window > 0.0 ? settings.spectrum_window : envelope_window(p);
  out.spectrum = symmetrize_and_transform(out.h, out.moments.flux, nu, std::min(window, settings.tau_max));
  return out;
}

std::vector<FwhmPoint> fwhm_scan(const SystemParams& base, std::span<const double> gammas,
                                 std::span<const double> drives, std::span<const double> nu,
                                 bool choose_nmax) {
  std::vector<FwhmPoint> out;
  const std::vector<double> own{base.gamma};
  const std::span<const double> gs = gammas.empty() ? std::span<const double>(own) : gammas;
  for (double g : gs) {
    for (double d : drives) {
      SystemParams p = base;
      p.gamma = g;
      p.epsilon = d * p.kappa;
      if (choose_nmax) p.n_max = auto_nmax(p);
      const QrtRun run = run_qrt(p, nu);
      FwhmPoint pt{g, d, run.moments.big_x, p.n_max, std::numeric_limits<double>::quiet_NaN()};
      try {
        pt.fwhm = fwhm_zero_peak(run.spectrum);
      } catch (const DomainError&) {
      }
      out.push_back(pt);
    }
  }
  return out;
}

}  // namespace cqed
