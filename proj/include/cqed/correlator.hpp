#pragma once

#include <atomic>
#include <cstdint>
#include <exception>
#include <limits>
#include <optional>
#include <span>
#include <thread>
#include <vector>

#include "cqed/qrt.hpp"
#include "cqed/spectrum.hpp"
#include "cqed/trajectory.hpp"

namespace cqed {

// Cavity-count times with at least τ_max of recorded current (or, without
// one, conditioned field) on both sides.
struct StartClickSet {
  std::vector<double> times;
  std::size_t size() const { return times.size(); }
};

// Throws DomainError when no click qualifies.
StartClickSet collect_starts(const TrajectoryRecord& record, double tau_max);

// Weighted mean of current segments on τ = (k − m)·dt_s, k = 0..2m.
struct AveragedCurrent {
  std::vector<double> tau;
  std::vector<double> mean;
  std::vector<double> stderr_mean;
  double n_starts = 0.0;  // effective count (Σw)²/Σw²; equals the count for unit weights
  std::size_t segments = 0;
};

class SegmentAverage {
 public:
  SegmentAverage(int m, double dt_s);

  void add(double weight, std::span<const double> segment);
  // Appends another accumulator; callers merge in a fixed order.
  void merge(const SegmentAverage& other);
  AveragedCurrent result() const;
  std::size_t segments() const { return segments_; }

 private:
  int m_;
  double dt_s_;
  std::size_t segments_ = 0;
  double sw_ = 0.0, sw2_ = 0.0;
  std::vector<double> swx_, sw2x_, sw2xx_;
};

// Nearest-sample segments of each record's current around its start clicks.
// Throws DomainError when a segment would leave the record.
AveragedCurrent average_current(std::span<const TrajectoryRecord> records,
                                std::span<const StartClickSet> starts, int m);

// Same average over the conditioned field ⟨A_θ⟩_c (photocount records with
// record_field, or homodyne records).
AveragedCurrent average_field(std::span<const TrajectoryRecord> records,
                              std::span<const StartClickSet> starts, int m);
// h_θ(τ) = ℋ(τ)/(λ√(8κ(1−r))). Throws DomainError for λ ≤ 0.
CorrelationSeries h_from_current(const AveragedCurrent& current, double lambda,
                                 const SystemParams& p);

// Γ at least five times the larger of κ and g√N, where the photocurrent
// conversion holds.
bool large_bandwidth(const SystemParams& p);

struct ShotNoiseFit {
  double rate;       // rad/µs
  double amplitude;  // autocorrelation of h − 1 at zero lag
  double sigma() const;
};

// Fits A·e^{−kτ} to the autocorrelation of h − 1 restricted to |τ| ≥ band_start
// (each side separately, lags up to 0.2/Γ and at least two, log-linear least
// squares). Longer lag ranges add variance without reducing bias. Throws
// DomainError when the band spans fewer than 20/Γ.
ShotNoiseFit shot_noise_check(const CorrelationSeries& h, const SystemParams& p, double band_start);

// Γ/(16ηN_s|⟨b⟩|²) with |⟨b⟩|² = κ(1−r)λ², the stationary variance of the
// filtered shot noise after N_s averages and conversion to h.
double expected_shot_noise(const SystemParams& p, double n_starts, double lambda);

// (h(τ) + h(−τ))/2 restricted to |τ| ≤ tau_window, then the cosine transform.
// The tail criterion is off by default since trajectory series carry shot noise.
SpectrumSeries symmetrize_and_transform(const CorrelationSeries& h, double flux,
                                        std::span<const double> nu, double tau_window,
                                        double tail_tol = std::numeric_limits<double>::infinity());

// max_τ |h(τ) − h(−τ)|.
double max_asymmetry(const CorrelationSeries& h);

// Runs fn(0..count-1) on `workers` threads and returns the results in index
// order. The first exception thrown by any call is rethrown.
template <class T, class F>
std::vector<T> ordered_parallel(std::size_t count, int workers, F fn) {
  std::vector<std::optional<T>> slots(count);
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr failure;
  auto work = [&] {
    for (std::size_t i = next++; i < count && !failed; i = next++) {
      try {
        slots[i].emplace(fn(i));
      } catch (...) {
        if (!failed.exchange(true)) failure = std::current_exception();
      }
    }
  };
  const int n_workers = static_cast<int>(std::max<std::size_t>(1, std::min<std::size_t>(std::max(workers, 1), count)));
  std::vector<std::thread> pool;
  for (int t = 1; t < n_workers; ++t) pool.emplace_back(work);
  work();
  for (std::thread& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
  std::vector<T> out;
  out.reserve(count);
  for (auto& slot : slots) out.push_back(std::move(*slot));
  return out;
}

// Virtual-trigger batch: `trajectories` independent runs (indices from
// `first_index`) of `triggers_each` segments each, spread over `workers`
// threads and reduced in trajectory order.
SegmentAverage triggered_average(const TrajectoryEngine& engine, std::uint64_t seed,
                                 std::size_t trajectories, std::size_t triggers_each, int m,
                                 int workers, std::uint64_t first_index = 0);

// Independent records with indices first_index.., in index order.
std::vector<TrajectoryRecord> run_batch(const TrajectoryEngine& engine, std::uint64_t seed,
                                        std::size_t trajectories, double duration,
                                        TrajectoryMode mode, int workers,
                                        std::uint64_t first_index = 0);

}  // namespace cqed
