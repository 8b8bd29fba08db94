#include "cqed/correlator.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <optional>
#include <thread>

namespace cqed {

StartClickSet collect_starts(const TrajectoryRecord& record, double tau_max) {
  StartClickSet out;
  const std::size_t samples = record.current.empty() ? record.cond_field.size() : record.current.size();
  const double end = (static_cast<double>(samples) - 1.0) * record.dt_s;
  for (const TrajectoryEvent& e : record.events) {
    if (e.kind == EventKind::cavity_count && e.time >= tau_max && e.time + tau_max <= end) {
      out.times.push_back(e.time);
    }
  }
  if (out.times.empty()) throw DomainError("no cavity click with full context in the record");
  return out;
}

SegmentAverage::SegmentAverage(int m, double dt_s)
    : m_(m), dt_s_(dt_s), swx_(2 * m + 1), sw2x_(2 * m + 1), sw2xx_(2 * m + 1) {}

void SegmentAverage::add(double weight, std::span<const double> segment) {
  if (segment.size() != swx_.size()) throw DomainError("segment length does not match the accumulator");
  ++segments_;
  sw_ += weight;
  sw2_ += weight * weight;
  const double w2 = weight * weight;
  for (std::size_t k = 0; k < segment.size(); ++k) {
    const double x = segment[k];
    swx_[k] += weight * x;
    sw2x_[k] += w2 * x;
    sw2xx_[k] += w2 * x * x;
  }
}

void SegmentAverage::merge(const SegmentAverage& other) {
  if (other.swx_.size() != swx_.size()) throw DomainError("accumulator shapes differ");
  segments_ += other.segments_;
  sw_ += other.sw_;
  sw2_ += other.sw2_;
  for (std::size_t k = 0; k < swx_.size(); ++k) {
    swx_[k] += other.swx_[k];
    sw2x_[k] += other.sw2x_[k];
    sw2xx_[k] += other.sw2xx_[k];
  }
}

AveragedCurrent SegmentAverage::result() const {
  if (segments_ == 0 || !(sw_ > 0.0)) throw DomainError("no segments accumulated");
  AveragedCurrent out;
  out.segments = segments_;
  out.n_starts = sw_ * sw_ / sw2_;
  const std::size_t n = swx_.size();
  out.tau.resize(n);
  out.mean.resize(n);
  out.stderr_mean.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double mean = swx_[k] / sw_;
    // Σw²(x − mean)² / (Σw)², with a small-sample correction.
    const double ss = std::max(0.0, sw2xx_[k] - 2.0 * mean * sw2x_[k] + mean * mean * sw2_);
    const double correction = segments_ > 1 ? segments_ / (segments_ - 1.0) : 0.0;
    out.tau[k] = (static_cast<double>(k) - m_) * dt_s_;
    out.mean[k] = mean;
    out.stderr_mean[k] = std::sqrt(correction * ss) / sw_;
  }
  return out;
}

namespace {

AveragedCurrent average_series(std::span<const TrajectoryRecord> records,
                               std::span<const StartClickSet> starts, int m,
                               std::vector<double> TrajectoryRecord::*series) {
  if (records.size() != starts.size()) throw DomainError("one start set per record is required");
  if (records.empty()) throw DomainError("no records");
  SegmentAverage acc(m, records.front().dt_s);
  for (std::size_t r = 0; r < records.size(); ++r) {
    const TrajectoryRecord& rec = records[r];
    const std::vector<double>& data = rec.*series;
    const long size = static_cast<long>(data.size());
    for (double t : starts[r].times) {
      const long centre = std::lround(t / rec.dt_s);
      if (centre - m < 0 || centre + m >= size) throw DomainError("tau grid extends beyond the recorded series");
      acc.add(1.0, std::span<const double>(data).subspan(centre - m, 2 * m + 1));
    }
  }
  return acc.result();
}

}  // namespace

AveragedCurrent average_current(std::span<const TrajectoryRecord> records,
                                std::span<const StartClickSet> starts, int m) {
  return average_series(records, starts, m, &TrajectoryRecord::current);
}

AveragedCurrent average_field(std::span<const TrajectoryRecord> records,
                              std::span<const StartClickSet> starts, int m) {
  return average_series(records, starts, m, &TrajectoryRecord::cond_field);
}

CorrelationSeries h_from_current(const AveragedCurrent& current, double lambda, const SystemParams& p) {
  if (!(lambda > 0.0)) throw DomainError("conversion needs a positive mean field");
  const Rates w = Rates::from(p);
  const double scale = lambda * std::sqrt(8.0 * w.kappa * (1.0 - p.r));
  if (!(scale > 0.0)) throw DomainError("no light reaches the homodyne detector (r = 1)");
  CorrelationSeries out;
  out.source = SeriesSource::trajectory;
  out.lambda = lambda;
  out.tau = current.tau;
  out.h.resize(current.mean.size());
  out.stderr_h.resize(current.mean.size());
  for (std::size_t k = 0; k < current.mean.size(); ++k) {
    out.h[k] = current.mean[k] / scale;
    out.stderr_h[k] = current.stderr_mean[k] / scale;
  }
  return out;
}

bool large_bandwidth(const SystemParams& p) {
  return p.gamma_bw >= 5.0 * std::max(p.kappa, p.g * std::sqrt(static_cast<double>(p.n_atoms)));
}

double ShotNoiseFit::sigma() const { return std::sqrt(std::max(0.0, amplitude)); }

ShotNoiseFit shot_noise_check(const CorrelationSeries& h, const SystemParams& p, double band_start) {
  const Rates w = Rates::from(p);
  const std::size_t c = h.center();
  const std::size_t half = h.tau.size() - 1 - c;
  if (half < 2) throw DomainError("correlation series too short");
  const double step = h.tau[c + 1] - h.tau[c];
  const std::size_t first = static_cast<std::size_t>(std::ceil(band_start / step - 1e-9));
  if (first >= half || (half - first) * step < 20.0 / w.gamma_bw) {
    throw DomainError("signal-free band shorter than 20 correlation times; extend tau_max");
  }
  const std::size_t band = half - first + 1;
  const std::size_t lags = std::max<std::size_t>(3, static_cast<std::size_t>(std::lround(0.2 / (w.gamma_bw * step))) + 1);

  std::vector<double> r(lags, 0.0);
  for (int side : {-1, 1}) {
    auto x = [&](std::size_t k) { return h.h[c + side * static_cast<long>(first + k)] - 1.0; };
    for (std::size_t l = 0; l < lags; ++l) {
      double acc = 0.0;
      for (std::size_t k = 0; k + l < band; ++k) acc += x(k) * x(k + l);
      r[l] += 0.5 * acc / static_cast<double>(band - l);
    }
  }
  // log R(l) = log A − k·l·step, least squares over lags with R > 0.
  double sx = 0, sy = 0, sxx = 0, sxy = 0, n = 0;
  for (std::size_t l = 0; l < lags; ++l) {
    if (!(r[l] > 0.0)) break;
    const double t = l * step, y = std::log(r[l]);
    sx += t;
    sy += y;
    sxx += t * t;
    sxy += t * y;
    n += 1.0;
  }
  if (n < 2) return ShotNoiseFit{0.0, r[0]};
  const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  const double intercept = (sy - slope * sx) / n;
  return ShotNoiseFit{-slope, std::exp(intercept)};
}

double expected_shot_noise(const SystemParams& p, double n_starts, double lambda) {
  const Rates w = Rates::from(p);
  return w.gamma_bw / (16.0 * p.eta * n_starts * w.kappa * (1.0 - p.r) * lambda * lambda);
}

SpectrumSeries symmetrize_and_transform(const CorrelationSeries& h, double flux,
                                        std::span<const double> nu, double tau_window,
                                        double tail_tol) {
  const std::size_t c = h.center();
  const std::size_t half = h.tau.size() - 1 - c;
  std::size_t keep = half;
  while (keep > 0 && h.tau[c + keep] > tau_window * (1.0 + 1e-12)) --keep;
  CorrelationSeries sym;
  sym.source = h.source;
  sym.lambda = h.lambda;
  sym.n_inc = h.n_inc;
  for (long k = -static_cast<long>(keep); k <= static_cast<long>(keep); ++k) {
    const std::size_t a = c + std::abs(k), b = c - std::abs(k);
    sym.tau.push_back(h.tau[c + k]);
    sym.h.push_back(0.5 * (h.h[a] + h.h[b]));
  }
  return spectrum(sym, flux, nu, tail_tol);
}

double max_asymmetry(const CorrelationSeries& h) {
  const std::size_t c = h.center();
  double worst = 0.0;
  for (std::size_t k = 1; k + c < h.h.size() && k <= c; ++k) worst = std::max(worst, std::abs(h.h[c + k] - h.h[c - k]));
  return worst;
}

SegmentAverage triggered_average(const TrajectoryEngine& engine, std::uint64_t seed,
                                 std::size_t trajectories, std::size_t triggers_each, int m,
                                 int workers, std::uint64_t first_index) {
  const std::vector<SegmentAverage> parts = ordered_parallel<SegmentAverage>(
      trajectories, workers, [&](std::size_t i) {
        SegmentAverage acc(m, engine.dt_s());
        engine.run_triggered(seed, first_index + i, triggers_each, m,
                             [&acc](double weight, std::span<const double> seg) { acc.add(weight, seg); });
        return acc;
      });
  SegmentAverage total(m, engine.dt_s());
  for (const SegmentAverage& part : parts) total.merge(part);
  return total;
}

std::vector<TrajectoryRecord> run_batch(const TrajectoryEngine& engine, std::uint64_t seed,
                                        std::size_t trajectories, double duration,
                                        TrajectoryMode mode, int workers, std::uint64_t first_index) {
  return ordered_parallel<TrajectoryRecord>(trajectories, workers, [&](std::size_t i) {
    return engine.run(seed, duration, mode, first_index + i);
  });
}

}  // namespace cqed
