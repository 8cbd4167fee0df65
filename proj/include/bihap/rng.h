#pragma once

#include <cstdint>
#include <random>

namespace bihap {

/// One independent, seeded random stream. Every consumer (each sensor, the
/// link, the surrogate) owns its own stream derived from the run seed and a
/// fixed stream id, so adding a consumer never perturbs existing ones.
class RngStream {
 public:
  RngStream(uint64_t seed, uint64_t stream_id)
      : engine_(MakeEngine(seed, stream_id)) {}

  double Normal(double stddev) {
    if (stddev == 0.0) { return 0.0; }
    return normal_(engine_) * stddev;
  }

  double Uniform(double lo, double hi) {
    return lo + (hi - lo) * unit_(engine_);
  }

  bool Bernoulli(double p) {
    if (p <= 0.0) { return false; }
    if (p >= 1.0) { return true; }
    return unit_(engine_) < p;
  }

  std::mt19937_64& engine() { return engine_; }

 private:
  static std::mt19937_64 MakeEngine(uint64_t seed, uint64_t stream_id) {
    std::seed_seq seq{
        static_cast<uint32_t>(seed), static_cast<uint32_t>(seed >> 32),
        static_cast<uint32_t>(stream_id),
        static_cast<uint32_t>(stream_id >> 32), 0xB14A'0001u};
    return std::mt19937_64(seq);
  }

  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::uniform_real_distribution<double> unit_{0.0, 1.0};
};

/// Stream ids. Append only.
namespace stream {
inline constexpr uint64_t kTorqueSensor = 1;
inline constexpr uint64_t kImu = 2;
inline constexpr uint64_t kLinkDown = 3;
inline constexpr uint64_t kLinkUp = 4;
inline constexpr uint64_t kSurrogate = 5;
inline constexpr uint64_t kOperator = 6;
inline constexpr uint64_t kTargets = 7;
inline constexpr uint64_t kFailures = 8;
}  // namespace stream

}  // namespace bihap
