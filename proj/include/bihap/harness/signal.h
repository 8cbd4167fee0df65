#pragma once

#include <cstddef>
#include <vector>

namespace bihap::harness {

/// Uniformly sampled real signal.
struct Signal {
  std::vector<double> samples;
  double sample_rate = 1.0;  // Hz
  double start_time = 0.0;   // s

  std::size_t size() const { return samples.size(); }
  double TimeAt(std::size_t i) const {
    return start_time + static_cast<double>(i) / sample_rate;
  }
  /// Throws std::invalid_argument if the rate is not positive or any sample
  /// is non-finite.
  void Validate() const;
};

double SinusoidValue(double alpha, double omega, double t);

/// +A while (5t mod 2pi) < pi, else -A.
double SquareValue(double amplitude, double t);

/// Number of samples a generator emits for @p duration at @p rate.
std::size_t SampleCount(double rate, double duration);

Signal GenSinusoid(double alpha, double omega, double rate, double duration);
Signal GenSquare(double amplitude, double rate, double duration);

}  // namespace bihap::harness
