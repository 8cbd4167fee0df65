#pragma once

/// Orientation-error bands shared by the feedback strategy and the game's
/// zone display. Both read these constants, so they cannot disagree.

namespace bihap::bands {

/// |error| below this is "on target" (the white zone).
inline constexpr double kReachedDeg = 1.6;
/// |error| from kReachedDeg up to (not including) this is the warning zone.
inline constexpr double kWarnDeg = 3.2;
/// Time the operator must keep moving away in the far zone before torque.
inline constexpr double kFarDwellS = 3.0;
/// Hold required before a refresh scores.
inline constexpr double kHoldS = 1.6;

}  // namespace bihap::bands
