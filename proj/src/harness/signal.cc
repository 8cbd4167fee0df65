#include "bihap/harness/signal.h"

#include <cmath>
#include <stdexcept>

#include <fmt/format.h>

#include "bihap/angles.h"

namespace bihap::harness {

void Signal::Validate() const {
  if (!std::isfinite(sample_rate) || sample_rate <= 0.0) {
    throw std::invalid_argument(fmt::format("Signal: sample_rate must be > 0 (got {})", sample_rate));
  }
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (!std::isfinite(samples[i])) {
      throw std::invalid_argument(fmt::format("Signal: sample {} is not finite", i));
    }
  }
}

double SinusoidValue(double alpha, double omega, double t) {
  return alpha * std::sin(omega * t);
}

double SquareValue(double amplitude, double t) {
  double phase = std::fmod(5.0 * t, kTwoPi);
  if (phase < 0.0) { phase += kTwoPi; }
  return phase < kPi ? amplitude : -amplitude;
}

std::size_t SampleCount(double rate, double duration) {
  if (!std::isfinite(rate) || rate <= 0.0) {
    throw std::invalid_argument(fmt::format("rate must be > 0 (got {})", rate));
  }
  if (!std::isfinite(duration) || duration <= 0.0) {
    throw std::invalid_argument(fmt::format("duration must be > 0 (got {})", duration));
  }
  return static_cast<std::size_t>(std::llround(rate * duration));
}

Signal GenSinusoid(double alpha, double omega, double rate, double duration) {
  Signal s;
  s.sample_rate = rate;
  s.samples.resize(SampleCount(rate, duration));
  for (std::size_t i = 0; i < s.samples.size(); ++i) {
    s.samples[i] = SinusoidValue(alpha, omega, static_cast<double>(i) / rate);
  }
  return s;
}

Signal GenSquare(double amplitude, double rate, double duration) {
  Signal s;
  s.sample_rate = rate;
  s.samples.resize(SampleCount(rate, duration));
  for (std::size_t i = 0; i < s.samples.size(); ++i) {
    s.samples[i] = SquareValue(amplitude, static_cast<double>(i) / rate);
  }
  return s;
}

}  // namespace bihap::harness
