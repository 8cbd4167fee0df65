#pragma once

#include <array>
#include <vector>

#include "bihap/harness/signal.h"

namespace bihap::harness {

/// Second-order section, a0 normalized to 1, direct form II transposed.
struct Biquad {
  double b0 = 1.0, b1 = 0.0, b2 = 0.0;
  double a1 = 0.0, a2 = 0.0;

  double DcGain() const { return (b0 + b1 + b2) / (1.0 + a1 + a2); }
};

/// Digital Butterworth low-pass as cascaded sections (bilinear transform
/// with prewarping). Sections are ordered by increasing Q; an odd order adds
/// a first-order section (b2 = a2 = 0) first.
std::vector<Biquad> DesignButterworthLowpass(int order, double cutoff_hz,
                                             double sample_rate);

/// Single causal pass. @p state holds two delay values per section.
std::vector<double> SosFilter(const std::vector<Biquad>& sections,
                              const std::vector<double>& x,
                              std::vector<std::array<double, 2>>& state);

/// Steady-state section states for a unit step input.
std::vector<std::array<double, 2>> SosSteadyState(const std::vector<Biquad>& sections);

/// Forward-backward filtering with odd-extension padding and steady-state
/// initial conditions, so the output has zero phase lag.
std::vector<double> SosFiltFilt(const std::vector<Biquad>& sections,
                                const std::vector<double>& x);

/// Zero-phase Butterworth low-pass. Throws std::invalid_argument when the
/// cutoff is not below Nyquist.
Signal Lowpass(const Signal& signal, double cutoff_hz = 5.0, int order = 4);

}  // namespace bihap::harness
