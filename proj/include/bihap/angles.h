#pragma once

#include <cmath>
#include <numbers>

namespace bihap {

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

constexpr double DegToRad(double deg) { return deg * kPi / 180.0; }
constexpr double RadToDeg(double rad) { return rad * 180.0 / kPi; }

/// Wraps to [-pi, pi).
inline double WrapPi(double angle) {
  double wrapped = std::fmod(angle + kPi, kTwoPi);
  if (wrapped < 0.0) { wrapped += kTwoPi; }
  wrapped -= kPi;
  // fmod can land exactly on +pi after the shift for inputs just below -pi.
  if (wrapped >= kPi) { wrapped -= kTwoPi; }
  return wrapped;
}

/// Wraps to [0, 2pi).
inline double WrapTwoPi(double angle) {
  double wrapped = std::fmod(angle, kTwoPi);
  if (wrapped < 0.0) { wrapped += kTwoPi; }
  if (wrapped >= kTwoPi) { wrapped = 0.0; }
  return wrapped;
}

inline int Sign(double value) { return (value > 0.0) - (value < 0.0); }

}  // namespace bihap
