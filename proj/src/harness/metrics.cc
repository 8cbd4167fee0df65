#include "bihap/harness/metrics.h"

#include <algorithm>
#include <cmath>
#include <complex>
#include <memory>

#include <fftw3.h>
#include <fmt/format.h>

#include "bihap/angles.h"

namespace bihap::harness {

namespace {

void RequireComparable(const Signal& a, const Signal& b) {
  if (a.size() != b.size() || a.sample_rate != b.sample_rate) {
    throw MetricError(MetricErrorCode::kLengthMismatch,
                      fmt::format("signals differ: {} samples @ {} Hz vs {} samples @ {} Hz",
                                  a.size(), a.sample_rate, b.size(), b.sample_rate));
  }
  if (a.size() == 0) {
    throw MetricError(MetricErrorCode::kLengthMismatch, "signals are empty");
  }
}

struct FftwFree {
  void operator()(void* p) const { fftw_free(p); }
};

/// Half spectrum (bins 0..N/2) of a real signal.
std::vector<std::complex<double>> RealSpectrum(const std::vector<double>& x) {
  const int n = static_cast<int>(x.size());
  const int bins = n / 2 + 1;
  std::unique_ptr<double, FftwFree> in(static_cast<double*>(fftw_malloc(sizeof(double) * n)));
  std::unique_ptr<fftw_complex, FftwFree> out(
      static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * bins)));
  fftw_plan plan = fftw_plan_dft_r2c_1d(n, in.get(), out.get(), FFTW_ESTIMATE);
  std::copy(x.begin(), x.end(), in.get());
  fftw_execute(plan);
  fftw_destroy_plan(plan);

  std::vector<std::complex<double>> spectrum(bins);
  for (int k = 0; k < bins; ++k) {
    spectrum[k] = {out.get()[k][0], out.get()[k][1]};
  }
  return spectrum;
}

}  // namespace

const char* ToString(MetricErrorCode code) {
  switch (code) {
    case MetricErrorCode::kLengthMismatch: return "LengthMismatch";
    case MetricErrorCode::kNotPeriodic: return "NotPeriodic";
    case MetricErrorCode::kNoTransition: return "NoTransition";
    case MetricErrorCode::kNoPeak: return "NoPeak";
  }
  return "?";
}

double Rmse(const Signal& actual, const Signal& desired) {
  RequireComparable(actual, desired);
  double sum = 0.0;
  for (std::size_t i = 0; i < actual.size(); ++i) {
    const double e = actual.samples[i] - desired.samples[i];
    sum += e * e;
  }
  return std::sqrt(sum / static_cast<double>(actual.size()));
}

LatencyEstimate EstimateLatency(const Signal& actual, const Signal& desired) {
  RequireComparable(actual, desired);
  if (desired.size() < 4) {
    throw MetricError(MetricErrorCode::kNotPeriodic, "too few samples for a spectrum");
  }
  const auto d = RealSpectrum(desired.samples);
  const auto a = RealSpectrum(actual.samples);

  std::vector<double> magnitude(d.size() - 1);
  std::size_t best = 1;
  for (std::size_t k = 1; k < d.size(); ++k) {
    magnitude[k - 1] = std::abs(d[k]);
    if (std::abs(d[k]) > std::abs(d[best])) { best = k; }
  }
  auto mid = magnitude.begin() + static_cast<std::ptrdiff_t>(magnitude.size() / 2);
  std::nth_element(magnitude.begin(), mid, magnitude.end());
  const double median = *mid;
  const double peak = std::abs(d[best]);
  if (!(peak > 0.0) || peak < 3.0 * median) {
    throw MetricError(MetricErrorCode::kNotPeriodic,
                      fmt::format("dominant bin {} magnitude {} is below 3x median {}",
                                  best, peak, median));
  }

  LatencyEstimate out;
  out.bin = best;
  out.frequency_hz = static_cast<double>(best) * desired.sample_rate /
                     static_cast<double>(desired.size());
  // A delay tau rotates the bin by -2*pi*f*tau under the exp(-i...)
  // transform convention, so lag shows up as phi_d - phi_a.
  const double phase = WrapPi(std::arg(d[best]) - std::arg(a[best]));
  out.latency = phase / (kTwoPi * out.frequency_hz);
  return out;
}

double OvershootPercent(double peak, double amplitude) {
  if (!(amplitude > 0.0)) {
    throw std::invalid_argument("OvershootPercent: amplitude must be > 0");
  }
  return (peak - amplitude) / amplitude * 100.0;
}

std::size_t FirstExtremumIndex(const Signal& actual, double transition_time,
                               int direction, std::size_t end_index) {
  const std::size_t n = std::min(actual.size(), end_index);
  const double position = (transition_time - actual.start_time) * actual.sample_rate;
  if (!(position >= 0.0) || position >= static_cast<double>(actual.size())) {
    throw std::invalid_argument(fmt::format(
        "transition time {} s is outside the signal span", transition_time));
  }
  // Index of the last sample at or before the transition.
  const auto base = static_cast<std::size_t>(std::floor(position + 1e-9));
  const auto& x = actual.samples;
  for (std::size_t m = base + 1; m + 1 < n; ++m) {
    const bool is_max = x[m] > x[m - 1] && x[m] >= x[m + 1];
    const bool is_min = x[m] < x[m - 1] && x[m] <= x[m + 1];
    if ((direction >= 0 && is_max) || (direction <= 0 && is_min)) { return m; }
  }
  throw MetricError(MetricErrorCode::kNoPeak,
                    fmt::format("no extremum after t={} s", transition_time));
}

double PeakTime(const Signal& actual, double transition_time, int direction) {
  const std::size_t m = FirstExtremumIndex(actual, transition_time, direction);
  return actual.TimeAt(m) - transition_time;
}

std::vector<Transition> FindTransitions(const Signal& desired) {
  std::vector<Transition> out;
  for (std::size_t i = 1; i < desired.size(); ++i) {
    const int before = Sign(desired.samples[i - 1]);
    const int after = Sign(desired.samples[i]);
    if (after != 0 && before != after) {
      out.push_back({i, desired.TimeAt(i), after});
    }
  }
  return out;
}

SquareResponse AnalyzeSquareResponse(const Signal& actual, const Signal& desired,
                                     double amplitude) {
  RequireComparable(actual, desired);
  const auto transitions = FindTransitions(desired);
  SquareResponse out;
  for (std::size_t t = 0; t < transitions.size(); ++t) {
    const Transition& tr = transitions[t];
    const std::size_t end =
        t + 1 < transitions.size() ? transitions[t + 1].index : actual.size();
    std::size_t m = 0;
    try {
      m = FirstExtremumIndex(actual, tr.time, tr.direction, end);
    } catch (const MetricError&) {
      continue;
    }
    TransitionResponse r;
    r.transition = tr;
    r.peak = tr.direction * actual.samples[m];
    r.peak_time = actual.TimeAt(m) - tr.time;
    r.overshoot_percent = OvershootPercent(r.peak, amplitude);
    out.transitions.push_back(r);
  }
  if (out.transitions.empty()) {
    throw MetricError(MetricErrorCode::kNoTransition, "no transition with a measurable peak");
  }
  double sum = 0.0;
  out.max_overshoot_percent = out.transitions.front().overshoot_percent;
  for (const auto& r : out.transitions) {
    sum += r.peak_time;
    out.max_overshoot_percent = std::max(out.max_overshoot_percent, r.overshoot_percent);
  }
  out.mean_peak_time = sum / static_cast<double>(out.transitions.size());
  return out;
}

}  // namespace bihap::harness
