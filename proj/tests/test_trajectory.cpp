#include <cmath>
#include <numeric>

#include <unsupported/Eigen/MatrixFunctions>

#include "doctest.h"
#include "fixtures.hpp"

#include "cqed/correlator.hpp"
#include "cqed/trajectory.hpp"
#include "cqed/weakfield.hpp"

using namespace cqed;

namespace {

Vector basis_state(const Model& m, int photons, int bits) {
  Vector v = Vector::Zero(m.dim());
  v(m.space().index(photons, bits)) = 1.0;
  return v;
}

// Mean and batch-means standard error.
std::pair<double, double> batch_stats(const std::vector<double>& x, int batches) {
  const std::size_t len = x.size() / batches;
  std::vector<double> means;
  for (int b = 0; b < batches; ++b) {
    means.push_back(std::accumulate(x.begin() + b * len, x.begin() + (b + 1) * len, 0.0) / len);
  }
  const double mean = std::accumulate(means.begin(), means.end(), 0.0) / batches;
  double var = 0.0;
  for (double m : means) var += (m - mean) * (m - mean);
  return {mean, std::sqrt(var / (batches - 1) / batches)};
}

}  // namespace

TEST_CASE("jump probabilities") {
  SystemParams p = test::fig5_params(1);
  p.r = 1.0;
  p.epsilon = 0.1;
  const TrajectoryEngine eng(p);
  const Model& m = eng.model();
  const double dt = 1e-5;
  const Rates& w = m.rates();

  const JumpProbabilities vac = eng.jump_probabilities(basis_state(m, 0, 0), dt);
  CHECK(vac.count == 0.0);
  CHECK(vac.spont[0] == 0.0);
  const JumpProbabilities one = eng.jump_probabilities(basis_state(m, 1, 0), dt);
  CHECK(one.count == doctest::Approx(2.0 * w.kappa * dt));
  CHECK(one.spont[0] == 0.0);
  const JumpProbabilities exc = eng.jump_probabilities(basis_state(m, 0, 1), dt);
  CHECK(exc.count == 0.0);
  CHECK(exc.spont[0] == doctest::Approx(w.gamma * dt));
  CHECK_THROWS_AS(eng.jump_probabilities(basis_state(m, 3, 0), 1e-2), DomainError);
}

TEST_CASE("collapses") {
  const SystemParams p = test::calibrated(1, 1e-6);
  const TrajectoryEngine eng(p);
  const Model& m = eng.model();
  const Vector after = eng.apply_collapse(basis_state(m, 1, 0), {EventKind::cavity_count, 0});
  CHECK(std::abs(after(m.space().index(0, 0)) - 1.0) < 1e-15);
  CHECK_THROWS_AS(eng.apply_collapse(basis_state(m, 0, 0), {EventKind::cavity_count, 0}), DomainError);

  const double lambda = moments(steady_state(m), m).field.real();
  const Vector psi = equilibrium_state(m, lambda);
  const WeakFieldConstants k = weak_field_constants(p);
  const Vector cav = eng.apply_collapse(psi, {EventKind::cavity_count, 0});
  const Vector sp = eng.apply_collapse(psi, {EventKind::spontaneous, 1});
  CHECK(std::abs(cav.norm() - 1.0) < 1e-12);
  CHECK(eng.quadrature_mean(cav) / lambda == doctest::Approx(k.alpha * k.beta).epsilon(1e-3));
  CHECK(eng.quadrature_mean(sp) / lambda == doctest::Approx(k.beta).epsilon(1e-3));
}

TEST_CASE("drift step limits") {
  // Without drive the vacuum is dark for any coupling.
  SystemParams p = test::fig5_params(2);
  p.epsilon = 0.0;
  {
    const TrajectoryEngine eng(p);
    const Vector vac = basis_state(eng.model(), 0, 0);
    for (double dw : {-0.3, 0.0, 0.05}) CHECK((eng.drift_step(vac, dw) - vac).norm() < 1e-14);
  }
  p = test::fig5_params(1);
  p.epsilon = 2.0;
  p.r = 1.0;
  const TrajectoryEngine eng(p);
  std::mt19937_64 rng(3);
  Vector psi = test::random_density(eng.model().dim(), rng).col(0);
  psi /= psi.norm();
  Matrix h_eff = eng.model().hamiltonian();
  const Rates& w = eng.model().rates();
  const Matrix& a = eng.model().a();
  h_eff -= kI * w.kappa * (a.adjoint() * a);
  h_eff -= kI * (0.5 * w.gamma) * (eng.model().sigma_lower(1).adjoint() * eng.model().sigma_lower(1));
  Vector expected = (-kI * eng.dt() * h_eff).exp() * psi;
  expected /= expected.norm();
  CHECK((eng.drift_step(psi, 0.0) - expected).norm() < 1e-12);
  CHECK((eng.drift_step(psi, 0.7) - expected).norm() < 1e-12);
}

TEST_CASE("photocurrent filter relaxes to the signal level") {
  SystemParams p = test::fig5_params(1);
  p.epsilon = 1.0;
  const TrajectoryEngine eng(p);
  const Vector psi = eng.initial_state();
  double i = 0.0;
  for (int k = 0; k < 400; ++k) i = eng.photocurrent_step(i, psi, 0.0);
  const double level = std::sqrt(8.0 * eng.model().rates().kappa * (1.0 - p.r)) * eng.quadrature_mean(psi);
  CHECK(i == doctest::Approx(level).epsilon(1e-12));
}

TEST_CASE("blocked signal leaves Ornstein-Uhlenbeck shot noise") {
  SystemParams p = test::fig5_params(1);
  p.g = 1e-9;
  p.epsilon = 0.0;
  const TrajectoryEngine eng(p);
  const TrajectoryRecord rec = eng.run(11, 200.0, TrajectoryMode::homodyne);
  const double gamma_bw = eng.model().rates().gamma_bw;
  double var = 0.0, lag = 0.0;
  const std::size_t n = rec.current.size();
  for (std::size_t k = 0; k + 1 < n; ++k) {
    var += rec.current[k] * rec.current[k];
    lag += rec.current[k] * rec.current[k + 1];
  }
  const double rate = -std::log(lag / var) / rec.dt_s;
  var /= static_cast<double>(n - 1);
  CHECK(var == doctest::Approx(gamma_bw / 2.0).epsilon(0.05));
  CHECK(rate == doctest::Approx(gamma_bw).epsilon(0.05));
}

TEST_CASE("trajectories are reproducible") {
  SystemParams p = test::fig5_params(1);
  p.epsilon = 0.5 * p.kappa;
  p.n_max = 5;
  const TrajectoryEngine eng(p);
  const TrajectoryRecord a = eng.run(5, 2.0, TrajectoryMode::homodyne);
  const TrajectoryRecord b = eng.run(5, 2.0, TrajectoryMode::homodyne);
  const TrajectoryRecord c = eng.run(6, 2.0, TrajectoryMode::homodyne);
  REQUIRE(a.events.size() == b.events.size());
  for (std::size_t k = 0; k < a.events.size(); ++k) {
    CHECK(a.events[k].time == b.events[k].time);
    CHECK(a.events[k].kind == b.events[k].kind);
  }
  CHECK(a.current == b.current);
  CHECK(a.current != c.current);
  for (std::size_t k = 1; k < a.events.size(); ++k) CHECK(a.events[k].time > a.events[k - 1].time);

  const TrajectoryRecord empty = eng.run(5, 0.0, TrajectoryMode::homodyne);
  CHECK(empty.events.empty());
  CHECK(empty.current.size() == 1);
  CHECK((empty.final_state - eng.initial_state()).norm() == 0.0);
  CHECK(eng.run(5, 0.0, TrajectoryMode::photocount).events.empty());
}

TEST_CASE("homodyne trajectories reproduce master-equation moments") {
  SystemParams p = test::fig5_params(1);
  p.epsilon = 0.5 * p.kappa;
  p.n_max = 6;
  const TrajectoryEngine eng(p);
  const Model& m = eng.model();
  const SteadyMoments ss = moments(steady_state(m), m);
  std::vector<double> field;
  std::size_t counts = 0;
  double duration = 0.0;
  for (std::uint64_t idx = 0; idx < 4; ++idx) {
    const TrajectoryRecord rec = eng.run(21, 60.0, TrajectoryMode::homodyne, idx);
    field.insert(field.end(), rec.cond_field.begin(), rec.cond_field.end());
    for (const TrajectoryEvent& e : rec.events) counts += e.kind == EventKind::cavity_count;
    duration += rec.duration;
  }
  const auto [mean, se] = batch_stats(field, 40);
  CHECK(std::abs(mean - ss.field.real()) <= 3.0 * se);

  const double rate = 2.0 * m.rates().kappa * p.r * ss.n_bar;
  const double expected = rate * duration;
  CHECK(std::abs(counts - expected) <= 3.0 * std::sqrt(expected));
}

TEST_CASE("photocount field record reproduces the steady-state field") {
  SystemParams p = test::fig5_params(1);
  p.epsilon = 0.5 * p.kappa;
  p.n_max = 6;
  EngineOptions opt;
  opt.record_field = true;
  const TrajectoryEngine eng(p, opt);
  const Model& m = eng.model();
  const SteadyMoments ss = moments(steady_state(m), m);
  const TrajectoryRecord rec = eng.run(8, 200.0, TrajectoryMode::photocount);
  REQUIRE(rec.cond_field.size() == static_cast<std::size_t>(std::floor(200.0 / rec.dt_s + 1e-9)) + 1);
  const auto [mean, se] = batch_stats(rec.cond_field, 40);
  CHECK(std::abs(mean - ss.field.real()) <= 3.0 * se);
  // Starts found from the field record alone.
  const StartClickSet starts = collect_starts(rec, 0.05);
  const int m_half = static_cast<int>(std::lround(0.05 / rec.dt_s)) - 1;
  const AveragedCurrent avg = average_field(std::span(&rec, 1), std::span(&starts, 1), m_half);
  CHECK(avg.segments == starts.size());
}

TEST_CASE("photocount mode follows the weak-field regression") {
  const SystemParams p = test::calibrated(1, 1e-6);
  EngineOptions opt;
  opt.window = 0.2;
  opt.max_events = 400;
  const TrajectoryEngine eng(p, opt);
  const Model& m = eng.model();
  const double lambda = moments(steady_state(m), m).field.real();
  const WeakFieldConstants k = weak_field_constants(p);
  const TrajectoryRecord rec = eng.run(8, 1e12, TrajectoryMode::photocount);
  CHECK(rec.params.r == doctest::Approx(1.0 - 1e-6));
  REQUIRE(rec.events.size() == 400);

  int cavity = 0;
  for (const EventWindow& win : rec.windows) {
    if (rec.events[win.event].kind != EventKind::cavity_count) continue;
    ++cavity;
    std::vector<double> tau;
    const std::size_t limit = std::min<std::size_t>(win.field.size(),
                                                    static_cast<std::size_t>(3.0 / k.damping / rec.dt_s) + 1);
    for (std::size_t i = 0; i < limit; ++i) tau.push_back(i * rec.dt_s);
    const RegressionWaveform wave = waveform(k, EmissionKind::cavity, tau);
    double worst = 0.0;
    for (std::size_t i = 0; i < limit; ++i) worst = std::max(worst, std::abs(win.field[i] / lambda - wave.values[i]));
    CHECK(worst <= 0.02 * std::abs(k.alpha * k.beta));
  }
  CHECK(cavity >= 1);
}

TEST_CASE("two atoms: spontaneous emission then cavity click lifts the field") {
  SystemParams p = test::fig5_params(2);
  p.n_max = 4;
  p.epsilon = calibrate_drive(p, 18.1, 1e-4);
  EngineOptions opt;
  opt.window = 0.01;
  opt.max_events = 3000;
  const TrajectoryEngine eng(p, opt);
  const TrajectoryRecord rec = eng.run(4, 1e9, TrajectoryMode::photocount);
  int sequences = 0, lifted = 0;
  for (std::size_t k = 1; k < rec.windows.size(); ++k) {
    const TrajectoryEvent& prev = rec.events[rec.windows[k - 1].event];
    const TrajectoryEvent& cur = rec.events[rec.windows[k].event];
    if (prev.kind == EventKind::spontaneous && cur.kind == EventKind::cavity_count && cur.time - prev.time < 0.02) {
      ++sequences;
      lifted += rec.windows[k].field.front() > rec.windows[k].field_before;
    }
  }
  MESSAGE("spontaneous->cavity sequences: " << sequences << ", field raised by the click: " << lifted);
  CHECK(sequences > 0);
  CHECK(lifted > 0);
}
