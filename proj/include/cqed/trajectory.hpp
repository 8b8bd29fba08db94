#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <vector>

#include "cqed/hilbert.hpp"

namespace cqed {

enum class EventKind { cavity_count, spontaneous };

struct TrajectoryEvent {
  EventKind kind;
  int atom = 0;  // 1-based for spontaneous emissions, 0 for cavity counts
  double time;   // µs
};

// Cavity count or spontaneous emission of atom j.
struct Channel {
  EventKind kind;
  int atom = 0;
};

struct JumpProbabilities {
  double count;               // 2κr⟨a†a⟩dt
  std::vector<double> spont;  // γ⟨σ₊ʲσ₋ʲ⟩dt, one per atom

  double total() const;
};

enum class TrajectoryMode { homodyne, photocount };

// Conditioned field after one event in photocount mode, sampled on a uniform
// grid until the window ends or the next event occurs.
struct EventWindow {
  std::size_t event;            // index into TrajectoryRecord::events
  double field_before;          // ⟨A_θ⟩_c just before the event
  std::vector<double> field;    // ⟨A_θ⟩_c(t_event + k·dt_s), k = 0..
};

struct TrajectoryRecord {
  TrajectoryMode mode = TrajectoryMode::homodyne;
  std::uint64_t seed = 0;
  SystemParams params;
  double duration = 0.0;
  double dt_s = 0.0;                 // sample spacing of current / cond_field
  std::vector<TrajectoryEvent> events;
  std::vector<double> current;       // homodyne: i(k·dt_s)
  std::vector<double> cond_field;    // ⟨A_θ⟩_c(k·dt_s); photocount only with record_field
  std::vector<EventWindow> windows;  // photocount: per-event conditioned field
  Vector final_state;
};

struct EngineOptions {
  double dt = 0.0;            // integration step (µs); 0 selects 1/(10Γ)
  int sample_every = 1;       // current samples every `sample_every` steps
  double burn_in = -1.0;      // µs discarded before recording; < 0 selects 10/κ
  double window = 0.0;        // photocount: length of each EventWindow (µs)
  std::size_t max_events = 0; // photocount: stop after this many events (0: no limit)
  bool record_field = false;  // photocount: also sample ⟨A_θ⟩_c into cond_field
  // The printed photocurrent equation carries −dW while the state update
  // carries +dW. By default the current is the filtered record the state is
  // conditioned on (+dW); true reproduces the printed sign.
  bool printed_current_sign = false;
};

// One independent stream per trajectory: mt19937_64 seeded through
// std::seed_seq{low(base), high(base), low(index), high(index)}.
std::mt19937_64 trajectory_rng(std::uint64_t base_seed, std::uint64_t index);

// A single weighted current segment around a (real or virtual) start click:
// samples at τ = (k − m)·dt_s, k = 0..2m.
using SegmentSink = std::function<void(double weight, std::span<const double> segment)>;

class TrajectoryEngine {
 public:
  TrajectoryEngine(const SystemParams& p, EngineOptions options = {});

  const Model& model() const { return model_; }
  const EngineOptions& options() const { return options_; }
  double dt() const { return dt_; }
  double dt_s() const { return dt_ * options_.sample_every; }

  // Throws DomainError if any channel probability exceeds 0.01.
  JumpProbabilities jump_probabilities(const Vector& psi, double dt) const;
  // Throws DomainError on a zero-norm result.
  Vector apply_collapse(const Vector& psi, Channel channel) const;
  // One exponential-Euler step of the conditioned Schrödinger equation,
  // normalized. Throws ConvergenceError if the norm collapses below 1e-8.
  Vector drift_step(const Vector& psi, double dw) const;
  // Photocurrent filter advanced by one step with the same dW as drift_step.
  double photocurrent_step(double i, const Vector& psi, double dw) const;

  double quadrature_mean(const Vector& psi) const;  // ⟨A_θ⟩
  double photon_number(const Vector& psi) const;    // ⟨a†a⟩

  // Dominant eigenvector of the steady-state density operator.
  Vector initial_state() const;

  TrajectoryRecord run(std::uint64_t seed, double duration, TrajectoryMode mode,
                       std::uint64_t index = 0) const;

  // Homodyne run with virtual start clicks every 2m+1 samples: the past m
  // samples come from the running trajectory, the future m from a clone
  // collapsed by a at the trigger, and the segment is weighted by the click
  // intensity ⟨a†a⟩_c at the trigger. Emits `triggers` segments.
  void run_triggered(std::uint64_t seed, std::uint64_t index, std::size_t triggers, int m,
                     const SegmentSink& sink) const;

 private:
  struct State {
    Vector psi;
    double current;
    Vector work;  // scratch, same size as psi
    Vector apsi;  // a·psi from the latest step
  };
  State make_state(const Vector& psi) const;
  void apply_a(const Vector& psi, Vector& out) const;
  double excited_population(const Vector& psi, int atom) const;
  struct Noise {
    std::mt19937_64 rng;
    std::normal_distribution<double> normal;
    std::uniform_real_distribution<double> uniform{0.0, 1.0};
  };
  Noise noise(std::uint64_t seed, std::uint64_t index) const;
  void homodyne_step(State& s, Noise& noise, double t, std::vector<TrajectoryEvent>* events) const;
  State burned_in(Noise& noise) const;
  TrajectoryRecord run_photocount(TrajectoryRecord rec, Noise& noise) const;
  Channel choose_channel(const JumpProbabilities& p, double u) const;

  Model model_;
  EngineOptions options_;
  double dt_;
  double c_homodyne_;  // √(2κ(1−r))
  double signal_;      // √(8κ(1−r))
  double decay_;       // e^{−Γdt}
  double noise_sign_;
  Complex lo_phase_;   // e^{−iθ}
  Vector initial_;
  Matrix h_eff_;
  Matrix step_;        // e^{−iH_eff dt}
  Matrix n_op_;
  Matrix quad_;
  std::vector<Matrix> excited_;
  std::vector<std::vector<int>> excited_index_;  // basis states with atom j excited
  // Split real/imaginary row-major copy of step_ and √(n+1) factors of a,
  // for the fused homodyne kernel.
  std::vector<double> step_re_, step_im_, a_factor_;
};

}  // namespace cqed
