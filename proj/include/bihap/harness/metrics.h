#pragma once

/// @file
///
/// Tracking metrics for the bench experiments.

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "bihap/harness/signal.h"

namespace bihap::harness {

enum class MetricErrorCode : uint8_t {
  kLengthMismatch,
  kNotPeriodic,
  kNoTransition,
  kNoPeak,
};

const char* ToString(MetricErrorCode code);

class MetricError : public std::runtime_error {
 public:
  MetricError(MetricErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  MetricErrorCode code() const { return code_; }

 private:
  MetricErrorCode code_;
};

/// Root mean square of (actual - desired). Signals must have equal length
/// and sample rate.
double Rmse(const Signal& actual, const Signal& desired);

struct LatencyEstimate {
  double latency = 0.0;       // s, positive when actual lags desired
  double frequency_hz = 0.0;  // dominant bin frequency
  std::size_t bin = 0;
};

/// Phase difference at the desired signal's dominant DFT bin, converted to
/// time. Throws MetricError(kNotPeriodic) when that bin is below three times
/// the median bin magnitude.
LatencyEstimate EstimateLatency(const Signal& actual, const Signal& desired);

/// (peak - amplitude) / amplitude * 100.
double OvershootPercent(double peak, double amplitude);

/// Signed-direction search for the first local extremum strictly after
/// @p transition_time. @p direction +1 looks for a maximum, -1 for a
/// minimum, 0 for whichever comes first. Returns the sample index.
/// Throws MetricError(kNoPeak) when the tail is monotone.
std::size_t FirstExtremumIndex(const Signal& actual, double transition_time,
                               int direction = 0, std::size_t end_index = SIZE_MAX);

/// Time from @p transition_time to the first local extremum.
double PeakTime(const Signal& actual, double transition_time, int direction = 0);

struct Transition {
  std::size_t index = 0;  // first sample at the new level
  double time = 0.0;
  int direction = 0;      // sign of the new level
};

/// Sign changes of the desired signal.
std::vector<Transition> FindTransitions(const Signal& desired);

struct TransitionResponse {
  Transition transition;
  double peak = 0.0;           // |peak| in the direction of the new level
  double peak_time = 0.0;      // s
  double overshoot_percent = 0.0;
};

struct SquareResponse {
  std::vector<TransitionResponse> transitions;
  double max_overshoot_percent = 0.0;
  double mean_peak_time = 0.0;
};

/// Overshoot and peak time at each transition of a square goal. Throws
/// MetricError(kNoTransition) if no transition yields a peak.
SquareResponse AnalyzeSquareResponse(const Signal& actual, const Signal& desired,
                                     double amplitude);

}  // namespace bihap::harness
