#pragma once

#include <cstdint>
#include <istream>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cqed/correlator.hpp"
#include "cqed/spectrum.hpp"
#include "cqed/steady_state.hpp"
#include "cqed/trajectory.hpp"

namespace cqed {

enum class RunMode { qrt, correlate, trajectory_dump, fwhm_scan, params };

struct Scenario {
  std::string name = "custom";
  RunMode mode = RunMode::params;
  SystemParams params;
  // Exactly one of target_x / params.epsilon sets the drive, except in
  // fwhm-scan mode where `drives` does.
  std::optional<double> target_x;
  bool explicit_epsilon = false;
  TrajectoryMode trajectory = TrajectoryMode::homodyne;
  std::size_t starts = 0;          // correlate: start clicks to accumulate
  double duration = 1.0;           // µs per trajectory
  std::size_t trajectories = 1;    // trajectory-dump
  double tau_max = 0.0;            // correlation half-window (µs); 0 = 12 envelope times
  double spectrum_window = 0.0;    // |τ| kept for the transform (µs); 0 = 12 envelope times
  std::vector<double> drives;      // fwhm-scan: ε/κ grid
  std::vector<double> gammas;      // fwhm-scan: γ values (MHz); empty = params.gamma
  double nu_max = 80.0;            // MHz
  double nu_step = 0.1;            // MHz
  bool auto_nmax = true;           // choose n_max by convergence of ⟨a†a⟩
  std::uint64_t seed = 1;
  int workers = 1;

  // Throws ConfigError.
  void validate() const;
};

std::vector<std::string> preset_names();
// Throws ConfigError for an unknown name.
Scenario preset(const std::string& name);

// One `key = value` setting; keys mirror the Scenario and SystemParams
// field names. Throws ConfigError.
void apply_setting(Scenario& s, const std::string& key, const std::string& value);

// Flat key = value text, '#' starts a comment. A `preset` key, if present,
// must come first and seeds the remaining settings.
Scenario parse_scenario(std::istream& in, const std::string& name);

// A preset name or the path of a config file.
Scenario load_scenario(const std::string& preset_or_path);

std::string mode_name(RunMode mode);

// Drive (from target_x when given) and n_max resolved together: with
// auto_nmax the truncation follows the calibrated drive until both settle.
SystemParams resolve_params(const Scenario& s);

// n_max for a fixed drive, by convergence of the photon number.
int auto_nmax(const SystemParams& p);

std::vector<double> nu_grid(const Scenario& s);

// 12 envelope times 12/((κ+γ/2)/2), in µs.
double envelope_window(const SystemParams& p);

struct QrtRun {
  SystemParams params;
  SteadyMoments moments;
  CorrelationSeries h;
  SpectrumSeries spectrum;
};

QrtRun run_qrt(const SystemParams& p, std::span<const double> nu);

struct CorrelatorSettings {
  std::size_t starts = 55000;
  double tau_max = 1.0;           // µs
  double spectrum_window = 0.0;   // µs; 0 = envelope_window
  std::size_t triggers_each = 1000;
  double duration = 50.0;         // photocount: µs per trajectory
  std::uint64_t seed = 1;
  int workers = 1;
};

struct CorrelateRun {
  SystemParams params;
  SteadyMoments moments;
  AveragedCurrent average;   // current (homodyne) or conditioned field (photocount)
  CorrelationSeries h;
  SpectrumSeries spectrum;
  std::size_t trajectories = 0;
};

// Homodyne route with virtual start clicks, extended trajectory by trajectory
// until the effective start count reaches settings.starts.
CorrelateRun run_homodyne_correlator(const SystemParams& p, const CorrelatorSettings& settings,
                                     std::span<const double> nu);

// Photocount route: conditioned field ⟨A_θ⟩_c/λ averaged over the first
// settings.starts cavity clicks with full context.
CorrelateRun run_photocount_correlator(const SystemParams& p, const CorrelatorSettings& settings,
                                       std::span<const double> nu);

struct FwhmPoint {
  double gamma;           // MHz
  double eps_over_kappa;
  double big_x;
  int n_max;
  double fwhm;            // MHz; NaN when no zero-frequency peak exists
};

std::vector<FwhmPoint> fwhm_scan(const SystemParams& base, std::span<const double> gammas,
                                 std::span<const double> drives, std::span<const double> nu,
                                 bool choose_nmax);

}  // namespace cqed
