#pragma once

#include <span>
#include <vector>

#include "cqed/qrt.hpp"

namespace cqed {

struct SpectrumSeries {
  std::vector<double> nu;  // MHz
  std::vector<double> s;   // vacuum level 0
  double flux = 0.0;       // photons per µs
};

std::vector<double> linspace(double lo, double hi, int count);

// S(ν) = 4F ∫₀^∞ cos(2πντ)[h(τ) − 1] dτ by the trapezoidal rule over τ ≥ 0.
// Throws DomainError when max|h − 1| over the last 10% of the grid exceeds
// `tail_tol`.
SpectrumSeries spectrum(const CorrelationSeries& h, double flux, std::span<const double> nu,
                        double tail_tol = 1e-4);

// Full width at half height of the ν = 0 peak, measured from the minimum of
// S over the grid, with linear interpolation. Requires S(0) > 0 and a local
// maximum at ν = 0; throws DomainError otherwise.
double fwhm_zero_peak(const SpectrumSeries& s);

// Oscillation frequency (MHz) from the spacing of successive zero crossings
// of y(τ) for τ ≥ 0, least-squares over all crossings where |y| has not yet
// decayed below `floor`·max|y|.
double oscillation_frequency(std::span<const double> tau, std::span<const double> y,
                             double floor = 1e-6);

}  // namespace cqed
