#include "cqed/trajectory.hpp"

#include <algorithm>
#include <cmath>

#include <unsupported/Eigen/MatrixFunctions>

#include "cqed/steady_state.hpp"

namespace cqed {

namespace {

constexpr double kMaxStepProbability = 0.01;
constexpr double kNormFloor = 1e-8;
// Photocount mode keeps a vanishing homodyne tap so that r < 1 stays valid;
// its diffusive term is dropped entirely.
constexpr double kPhotocountTap = 1e-6;

// Exact no-jump evolution e^{−iH_eff t} through the eigenbasis of H_eff.
class NoJumpEvolution {
 public:
  explicit NoJumpEvolution(const Matrix& h_eff) {
    Eigen::ComplexEigenSolver<Matrix> es(h_eff);
    if (es.info() != Eigen::Success) return;
    vecs_ = es.eigenvectors();
    rates_ = -kI * es.eigenvalues();
    lu_.compute(vecs_);
    gram_ = vecs_.adjoint() * vecs_;
    const Matrix check = vecs_ * lu_.solve(Matrix::Identity(h_eff.rows(), h_eff.cols()));
    ok_ = (check - Matrix::Identity(h_eff.rows(), h_eff.cols())).cwiseAbs().maxCoeff() < 1e-9;
  }

  bool ok() const { return ok_; }
  Vector coefficients(const Vector& psi) const { return lu_.solve(psi); }

  Vector evolve(const Vector& coeffs, double t) const {
    Vector scaled(coeffs.size());
    for (Eigen::Index m = 0; m < coeffs.size(); ++m) scaled(m) = coeffs(m) * std::exp(rates_(m) * t);
    return vecs_ * scaled;
  }

  double norm2(const Vector& coeffs, double t) const {
    Vector scaled(coeffs.size());
    for (Eigen::Index m = 0; m < coeffs.size(); ++m) scaled(m) = coeffs(m) * std::exp(rates_(m) * t);
    return (scaled.adjoint() * gram_ * scaled)(0).real();
  }

 private:
  bool ok_ = false;
  Matrix vecs_;
  Vector rates_;
  Matrix gram_;
  Eigen::PartialPivLU<Matrix> lu_;
};

Complex inner(const Vector& psi, const Matrix& op) { return psi.dot(op * psi); }

}  // namespace

double JumpProbabilities::total() const {
  double t = count;
  for (double s : spont) t += s;
  return t;
}

std::mt19937_64 trajectory_rng(std::uint64_t base_seed, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(base_seed), static_cast<std::uint32_t>(base_seed >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
  return std::mt19937_64(seq);
}

TrajectoryEngine::TrajectoryEngine(const SystemParams& p, EngineOptions options)
    : model_(p), options_(options) {
  const Rates& w = model_.rates();
  dt_ = options_.dt > 0.0 ? options_.dt : 1.0 / (10.0 * w.gamma_bw);
  if (options_.sample_every < 1) throw ConfigError("sample_every must be >= 1");
  c_homodyne_ = std::sqrt(2.0 * w.kappa * (1.0 - p.r));
  signal_ = std::sqrt(8.0 * w.kappa * (1.0 - p.r));
  decay_ = std::exp(-w.gamma_bw * dt_);
  noise_sign_ = options_.printed_current_sign ? -1.0 : 1.0;
  lo_phase_ = std::polar(1.0, -p.theta);

  const Matrix& a = model_.a();
  n_op_ = a.adjoint() * a;
  quad_ = model_.quadrature(p.theta);
  h_eff_ = model_.hamiltonian() - kI * w.kappa * n_op_;
  for (int j = 1; j <= p.n_atoms; ++j) {
    const Matrix& s = model_.sigma_lower(j);
    excited_.push_back(s.adjoint() * s);
    h_eff_ -= kI * (0.5 * w.gamma) * excited_.back();
    std::vector<int> idx;
    for (int i = 0; i < model_.dim(); ++i) {
      if (model_.space().excited(i, j)) idx.push_back(i);
    }
    excited_index_.push_back(std::move(idx));
  }
  step_ = (-kI * dt_ * h_eff_).exp();
  const int d = model_.dim();
  step_re_.resize(d * d);
  step_im_.resize(d * d);
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) {
      step_re_[i * d + j] = step_(i, j).real();
      step_im_[i * d + j] = step_(i, j).imag();
    }
  }
  a_factor_.assign(d, 0.0);
  for (int i = 0; i < d; ++i) {
    const int n = model_.space().photons(i);
    if (n < model_.space().n_max()) a_factor_[i] = std::sqrt(static_cast<double>(n + 1));
  }

  const DensityOperator rho = steady_state(model_);
  Eigen::SelfAdjointEigenSolver<Matrix> es(rho.matrix());
  initial_ = es.eigenvectors().col(es.eigenvalues().size() - 1);
  // Fix the global phase so that the vacuum amplitude is real and positive.
  const Complex v = initial_(0);
  if (std::abs(v) > 0.0) initial_ *= std::conj(v) / std::abs(v);
  initial_ /= initial_.norm();
}

TrajectoryEngine::Noise TrajectoryEngine::noise(std::uint64_t seed, std::uint64_t index) const {
  return Noise{trajectory_rng(seed, index), std::normal_distribution<double>(0.0, std::sqrt(dt_))};
}

double TrajectoryEngine::quadrature_mean(const Vector& psi) const {
  return inner(psi, quad_).real() / psi.squaredNorm();
}

double TrajectoryEngine::photon_number(const Vector& psi) const {
  return inner(psi, n_op_).real() / psi.squaredNorm();
}

JumpProbabilities TrajectoryEngine::jump_probabilities(const Vector& psi, double dt) const {
  const Rates& w = model_.rates();
  const double norm2 = psi.squaredNorm();
  JumpProbabilities out;
  out.count = 2.0 * w.kappa * model_.params().r * inner(psi, n_op_).real() / norm2 * dt;
  for (const Matrix& e : excited_) out.spont.push_back(w.gamma * inner(psi, e).real() / norm2 * dt);
  if (out.count > kMaxStepProbability ||
      std::any_of(out.spont.begin(), out.spont.end(), [](double v) { return v > kMaxStepProbability; })) {
    throw DomainError("jump probability per step exceeds 0.01; shrink dt");
  }
  return out;
}

Vector TrajectoryEngine::apply_collapse(const Vector& psi, Channel channel) const {
  const Matrix& op = channel.kind == EventKind::cavity_count ? model_.a() : model_.sigma_lower(channel.atom);
  Vector out = op * psi;
  const double norm = out.norm();
  if (!(norm > 0.0)) throw DomainError("collapse produced a zero-norm state");
  return out / norm;
}

Vector TrajectoryEngine::drift_step(const Vector& psi, double dw) const {
  Vector next = psi;
  if (c_homodyne_ > 0.0) {
    const double dy = signal_ * quadrature_mean(psi) * dt_ + dw;
    next += (c_homodyne_ * dy) * lo_phase_ * (model_.a() * psi);
  }
  next = step_ * next;
  const double norm = next.norm();
  if (!(norm > kNormFloor)) throw ConvergenceError("state norm collapsed during a step; shrink dt");
  return next / norm;
}

double TrajectoryEngine::photocurrent_step(double i, const Vector& psi, double dw) const {
  // Exact for a signal held constant over the step: the filter e^{−Γt}
  // applied to s dt + dW.
  return decay_ * i + (1.0 - decay_) * (signal_ * quadrature_mean(psi) + noise_sign_ * dw / dt_);
}

TrajectoryEngine::State TrajectoryEngine::make_state(const Vector& psi) const {
  return State{psi, signal_ * quadrature_mean(psi), Vector(psi.size()), Vector(psi.size())};
}

void TrajectoryEngine::apply_a(const Vector& psi, Vector& out) const {
  const int block = model_.space().atom_states();
  const int n_max = model_.space().n_max();
  for (int n = 0; n < n_max; ++n) {
    const double amp = std::sqrt(static_cast<double>(n + 1));
    for (int b = 0; b < block; ++b) out(n * block + b) = amp * psi((n + 1) * block + b);
  }
  for (int b = 0; b < block; ++b) out(n_max * block + b) = 0.0;
}

double TrajectoryEngine::excited_population(const Vector& psi, int atom) const {
  double p = 0.0;
  for (int i : excited_index_[atom - 1]) p += std::norm(psi(i));
  return p;
}

Vector TrajectoryEngine::initial_state() const { return initial_; }

Channel TrajectoryEngine::choose_channel(const JumpProbabilities& p, double u) const {
  double acc = p.count;
  const double target = u * p.total();
  if (target < acc) return {EventKind::cavity_count, 0};
  for (std::size_t j = 0; j < p.spont.size(); ++j) {
    acc += p.spont[j];
    if (target < acc) return {EventKind::spontaneous, static_cast<int>(j) + 1};
  }
  return {EventKind::spontaneous, static_cast<int>(p.spont.size())};
}

void TrajectoryEngine::homodyne_step(State& s, Noise& n, double t,
                                     std::vector<TrajectoryEvent>* events) const {
  // Same arithmetic as jump_probabilities, photocurrent_step and drift_step,
  // fused over raw (re, im) pairs; ψ is normalized on entry.
  const double dw = n.normal(n.rng);
  const double u = n.uniform(n.rng);
  const Rates& w = model_.rates();
  const int d = model_.dim();
  const int block = model_.space().atom_states();
  double* x = reinterpret_cast<double*>(s.psi.data());
  double* ap = reinterpret_cast<double*>(s.apsi.data());
  double* wk = reinterpret_cast<double*>(s.work.data());

  double photons = 0.0, lam_re = 0.0, lam_im = 0.0;
  for (int i = 0; i < d; ++i) {
    const double f = a_factor_[i];
    const double re = i + block < d ? f * x[2 * (i + block)] : 0.0;
    const double im = i + block < d ? f * x[2 * (i + block) + 1] : 0.0;
    ap[2 * i] = re;
    ap[2 * i + 1] = im;
    photons += re * re + im * im;
    lam_re += x[2 * i] * re + x[2 * i + 1] * im;
    lam_im += x[2 * i] * im - x[2 * i + 1] * re;
  }
  const double quad = lo_phase_.real() * lam_re - lo_phase_.imag() * lam_im;

  const int n_atoms = model_.params().n_atoms;
  const double count = 2.0 * w.kappa * model_.params().r * photons * dt_;
  double spont[2] = {0.0, 0.0};
  double total = count;
  bool too_large = count > kMaxStepProbability;
  for (int j = 0; j < n_atoms; ++j) {
    spont[j] = w.gamma * excited_population(s.psi, j + 1) * dt_;
    too_large |= spont[j] > kMaxStepProbability;
    total += spont[j];
  }
  if (too_large) throw DomainError("jump probability per step exceeds 0.01; shrink dt");

  s.current = decay_ * s.current + (1.0 - decay_) * (signal_ * quad + noise_sign_ * dw / dt_);

  const Complex kick = c_homodyne_ * (signal_ * quad * dt_ + dw) * lo_phase_;
  for (int i = 0; i < d; ++i) {
    wk[2 * i] = x[2 * i] + kick.real() * ap[2 * i] - kick.imag() * ap[2 * i + 1];
    wk[2 * i + 1] = x[2 * i + 1] + kick.real() * ap[2 * i + 1] + kick.imag() * ap[2 * i];
  }
  double norm2 = 0.0;
  for (int i = 0; i < d; ++i) {
    const double* ur = &step_re_[i * d];
    const double* ui = &step_im_[i * d];
    double re = 0.0, im = 0.0;
    for (int j = 0; j < d; ++j) {
      re += ur[j] * wk[2 * j] - ui[j] * wk[2 * j + 1];
      im += ur[j] * wk[2 * j + 1] + ui[j] * wk[2 * j];
    }
    x[2 * i] = re;
    x[2 * i + 1] = im;
    norm2 += re * re + im * im;
  }
  const double norm = std::sqrt(norm2);
  if (!(norm > kNormFloor)) throw ConvergenceError("state norm collapsed during a step; shrink dt");
  const double inv = 1.0 / norm;
  for (int i = 0; i < 2 * d; ++i) x[i] *= inv;

  if (u < total) {
    const JumpProbabilities p{count, std::vector<double>(spont, spont + n_atoms)};
    const Channel c = choose_channel(p, n.uniform(n.rng));
    s.psi = apply_collapse(s.psi, c);
    if (events) events->push_back({c.kind, c.atom, t + dt_});
  }
}

TrajectoryEngine::State TrajectoryEngine::burned_in(Noise& n) const {
  State s = make_state(initial_);
  const double burn = options_.burn_in >= 0.0 ? options_.burn_in : 10.0 / model_.rates().kappa;
  const long steps = std::lround(burn / dt_);
  for (long k = 0; k < steps; ++k) homodyne_step(s, n, 0.0, nullptr);
  return s;
}

TrajectoryRecord TrajectoryEngine::run(std::uint64_t seed, double duration, TrajectoryMode mode,
                                       std::uint64_t index) const {
  if (duration < 0.0) throw DomainError("duration must be non-negative");
  Noise n = noise(seed, index);
  TrajectoryRecord rec;
  rec.mode = mode;
  rec.seed = seed;
  rec.params = model_.params();
  rec.duration = duration;
  rec.dt_s = dt_s();
  if (mode == TrajectoryMode::photocount) return run_photocount(std::move(rec), n);

  State s = duration > 0.0 ? burned_in(n) : make_state(initial_);
  const long samples = static_cast<long>(std::floor(duration / rec.dt_s + 1e-9));
  rec.current.reserve(samples + 1);
  rec.cond_field.reserve(samples + 1);
  rec.current.push_back(s.current);
  rec.cond_field.push_back(quadrature_mean(s.psi));
  double t = 0.0;
  for (long k = 0; k < samples; ++k) {
    for (int j = 0; j < options_.sample_every; ++j) {
      homodyne_step(s, n, t, &rec.events);
      t += dt_;
    }
    rec.current.push_back(s.current);
    rec.cond_field.push_back(quadrature_mean(s.psi));
  }
  rec.final_state = s.psi;
  return rec;
}

TrajectoryRecord TrajectoryEngine::run_photocount(TrajectoryRecord rec, Noise& n) const {
  const Rates& w = model_.rates();
  const double r = 1.0 - kPhotocountTap;
  rec.params.r = r;
  const NoJumpEvolution evo(h_eff_);
  if (!evo.ok()) throw ConvergenceError("no-jump evolution has an ill-conditioned eigenbasis");

  const double sample = rec.dt_s;
  const int window_samples = options_.window > 0.0 ? static_cast<int>(std::floor(options_.window / sample)) + 1 : 0;

  Vector psi = initial_state();
  double t = 0.0;
  // Uniform samples of ⟨A_θ⟩_c at k·dt_s, filled interval by interval.
  long next_sample = 0;
  auto record_until = [&](const Vector& coeffs, double start, double end) {
    if (!options_.record_field) return;
    for (; next_sample * sample < end; ++next_sample) {
      Vector v = evo.evolve(coeffs, next_sample * sample - start);
      rec.cond_field.push_back(quadrature_mean(v / v.norm()));
    }
  };
  auto rates_of = [&](const Vector& v) {
    JumpProbabilities p;
    const double n = photon_number(v);
    p.count = 2.0 * w.kappa * r * n;
    for (const Matrix& e : excited_) p.spont.push_back(w.gamma * inner(v, e).real() / v.squaredNorm());
    return std::pair{p, 2.0 * w.kappa * (1.0 - r) * n};
  };

  while (options_.max_events == 0 || rec.events.size() < options_.max_events) {
    const Vector coeffs = evo.coefficients(psi);
    const double u = n.uniform(n.rng);
    const double remaining = rec.duration - t;
    if (remaining <= 0.0) {
      record_until(coeffs, t, rec.duration + 0.5 * sample);
      break;
    }
    if (evo.norm2(coeffs, remaining) > u) {
      record_until(coeffs, t, rec.duration + 0.5 * sample);
      t = rec.duration;
      psi = evo.evolve(coeffs, remaining);
      psi /= psi.norm();
      break;
    }
    // ‖ψ̃(τ)‖² decreases monotonically, so bisect for the waiting time.
    double lo = 0.0, hi = remaining;
    for (int it = 0; it < 200 && hi - lo > 1e-13 * std::max(1.0, hi); ++it) {
      const double mid = 0.5 * (lo + hi);
      (evo.norm2(coeffs, mid) > u ? lo : hi) = mid;
    }
    const double wait = 0.5 * (lo + hi);
    record_until(coeffs, t, t + wait);
    Vector before = evo.evolve(coeffs, wait);
    before /= before.norm();
    const auto [p, lost] = rates_of(before);
    const double pick = n.uniform(n.rng) * (p.total() + lost);
    t += wait;
    if (pick >= p.total()) {  // undetected loss through the vanishing homodyne tap
      psi = apply_collapse(before, {EventKind::cavity_count, 0});
      continue;
    }
    const Channel c = choose_channel(p, pick / p.total());
    psi = apply_collapse(before, c);
    rec.events.push_back({c.kind, c.atom, t});
    if (window_samples > 0) {
      EventWindow win{rec.events.size() - 1, quadrature_mean(before), {}};
      const Vector after = evo.coefficients(psi);
      win.field.reserve(window_samples);
      for (int k = 0; k < window_samples; ++k) {
        const Vector v = evo.evolve(after, k * sample);
        win.field.push_back(quadrature_mean(v));
      }
      rec.windows.push_back(std::move(win));
    }
  }
  // Windows run past the next event only in the absence of one; trim them.
  for (EventWindow& win : rec.windows) {
    const std::size_t next = win.event + 1;
    if (next < rec.events.size()) {
      const double span = rec.events[next].time - rec.events[win.event].time;
      const std::size_t keep = static_cast<std::size_t>(std::floor(span / sample)) + 1;
      if (keep < win.field.size()) win.field.resize(keep);
    }
  }
  rec.final_state = psi;
  return rec;
}

void TrajectoryEngine::run_triggered(std::uint64_t seed, std::uint64_t index, std::size_t triggers,
                                     int m, const SegmentSink& sink) const {
  if (m < 1) throw DomainError("segment half-length must be positive");
  Noise n = noise(seed, index);
  State main = burned_in(n);
  std::vector<double> segment(2 * m + 1);
  auto advance = [&](State& s) {
    for (int j = 0; j < options_.sample_every; ++j) homodyne_step(s, n, 0.0, nullptr);
  };
  for (std::size_t n = 0; n < triggers; ++n) {
    if (n > 0) advance(main);
    segment[0] = main.current;
    for (int k = 1; k <= m; ++k) {
      advance(main);
      segment[k] = main.current;
    }
    const double weight = photon_number(main.psi);
    State clone = make_state(apply_collapse(main.psi, {EventKind::cavity_count, 0}));
    clone.current = main.current;
    for (int k = 1; k <= m; ++k) {
      advance(clone);
      segment[m + k] = clone.current;
    }
    sink(weight, segment);
  }
}

}  // namespace cqed
