#include "cqed/spectrum.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace cqed {

std::vector<double> linspace(double lo, double hi, int count) {
  std::vector<double> out(count);
  for (int k = 0; k < count; ++k) {
    out[k] = count == 1 ? lo : lo + (hi - lo) * k / (count - 1);
  }
  return out;
}

SpectrumSeries spectrum(const CorrelationSeries& h, double flux, std::span<const double> nu,
                        double tail_tol) {
  const std::size_t c = h.center();
  const std::size_t n = h.tau.size() - c;
  if (n < 3) throw DomainError("correlation series too short for a transform");

  const std::size_t tail_start = c + n - std::max<std::size_t>(1, n / 10);
  double tail = 0.0;
  for (std::size_t k = tail_start; k < h.tau.size(); ++k) tail = std::max(tail, std::abs(h.h[k] - 1.0));
  if (tail > tail_tol) {
    std::ostringstream msg;
    msg << "insufficient tail decay: |h-1| reaches " << tail << " in the last 10% of the grid"
        << " (tolerance " << tail_tol << "); extend tau_max";
    throw DomainError(msg.str());
  }

  SpectrumSeries out;
  out.flux = flux;
  out.nu.assign(nu.begin(), nu.end());
  out.s.resize(nu.size());
  for (std::size_t j = 0; j < nu.size(); ++j) {
    const double w = kTwoPi * nu[j];
    double acc = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      const double weight = (k == 0 || k == n - 1) ? 0.5 : 1.0;
      const double tau_k = h.tau[c + k];
      const double dtau = k + 1 < n ? h.tau[c + k + 1] - tau_k : tau_k - h.tau[c + k - 1];
      acc += weight * dtau * std::cos(w * tau_k) * (h.h[c + k] - 1.0);
    }
    out.s[j] = 4.0 * flux * acc;
  }
  return out;
}

double fwhm_zero_peak(const SpectrumSeries& s) {
  if (s.s.size() < 3 || s.nu.front() != 0.0) throw DomainError("spectrum must start at nu = 0");
  if (!(s.s[0] > 0.0) || !(s.s[0] > s.s[1])) throw DomainError("no zero-frequency peak");
  const double baseline = *std::min_element(s.s.begin(), s.s.end());
  const double half = baseline + 0.5 * (s.s[0] - baseline);
  for (std::size_t k = 1; k < s.s.size(); ++k) {
    if (s.s[k] <= half) {
      const double frac = (s.s[k - 1] - half) / (s.s[k - 1] - s.s[k]);
      return 2.0 * (s.nu[k - 1] + frac * (s.nu[k] - s.nu[k - 1]));
    }
  }
  throw DomainError("zero-frequency peak does not fall to half height within the grid");
}

double oscillation_frequency(std::span<const double> tau, std::span<const double> y,
                             double floor) {
  double peak = 0.0;
  for (std::size_t k = 0; k < y.size(); ++k) {
    if (tau[k] >= 0.0) peak = std::max(peak, std::abs(y[k]));
  }
  std::vector<double> crossings;
  for (std::size_t k = 1; k < y.size(); ++k) {
    if (tau[k - 1] < 0.0) continue;
    if (std::max(std::abs(y[k - 1]), std::abs(y[k])) < floor * peak) break;
    if ((y[k - 1] < 0.0) != (y[k] < 0.0)) {
      const double frac = y[k - 1] / (y[k - 1] - y[k]);
      crossings.push_back(tau[k - 1] + frac * (tau[k] - tau[k - 1]));
    }
  }
  if (crossings.size() < 3) throw DomainError("fewer than three zero crossings");
  // Least-squares slope of crossing time against crossing number: half a period.
  const double n = static_cast<double>(crossings.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t k = 0; k < crossings.size(); ++k) {
    sx += k;
    sy += crossings[k];
    sxx += static_cast<double>(k) * k;
    sxy += k * crossings[k];
  }
  const double half_period = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  return 1.0 / (2.0 * half_period);
}

}  // namespace cqed
