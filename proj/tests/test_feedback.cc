#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "bihap/angles.h"
#include "bihap/feedback.h"
#include "feedback_oracle.h"

namespace bihap {
namespace {

TEST(Impedance, Examples) {
  const ImpedanceGains g;
  EXPECT_EQ(ImpedanceTorque({0.3, 0.1, 0.0}, {0.3, 0.1, 0.0}, g), 0.0);
  EXPECT_NEAR(ImpedanceTorque({0.1, -0.05, 0.0}, {0.0, 0.0, 0.0}, g), 0.20, 1e-12);
  const double eps = 1e-3;
  const double a = ImpedanceTorque({kPi - eps, 0, 0}, {0, 0, 0}, g);
  const double b = ImpedanceTorque({-kPi + eps, 0, 0}, {0, 0, 0}, g);
  EXPECT_NEAR(a, -b, 1e-12);
  EXPECT_THROW(ImpedanceTorque({NAN, 0, 0}, {}, g), std::invalid_argument);
}

TEST(Impedance, LinearInEachGain) {
  const Kinematics d{0.2, 0.3, 0.4};
  const Kinematics a{-0.1, 0.05, -0.2};
  const double k = ImpedanceTorque(d, a, {1.0, 0.0, 0.0});
  const double b = ImpedanceTorque(d, a, {0.0, 1.0, 0.0});
  const double m = ImpedanceTorque(d, a, {0.0, 0.0, 1.0});
  EXPECT_NEAR(ImpedanceTorque(d, a, {3.0, 0.0, 0.0}), 3.0 * k, 1e-12);
  EXPECT_NEAR(ImpedanceTorque(d, a, {0.0, 7.0, 0.0}), 7.0 * b, 1e-12);
  EXPECT_NEAR(ImpedanceTorque(d, a, {0.0, 0.0, 2.0}), 2.0 * m, 1e-12);
  EXPECT_NEAR(ImpedanceTorque(d, a, {3.0, 7.0, 2.0}), 3 * k + 7 * b + 2 * m, 1e-12);
}

TEST(Vibration, Signal) {
  EXPECT_EQ(VibrationSignal(0.02, kTwoPi * 40.0, 0.0), 0.0);
  EXPECT_NEAR(VibrationSignal(0.02, kTwoPi * 40.0, 1.0 / 160.0), 0.02, 1e-12);
  for (double t = 0.0; t < 1.0; t += 0.013) {
    EXPECT_EQ(VibrationSignal(0.0, kTwoPi * 40.0, t), 0.0);
  }
}

OrientationSample YawSample(double yaw, double rate, int64_t t_us) {
  OrientationSample s;
  s.yaw = yaw;
  s.angular_rate = {0.0, 0.0, rate};
  s.timestamp_us = t_us;
  return s;
}

TEST(Kinematics, ConstantAngle) {
  KinematicsEstimator e;
  for (int i = 0; i < 6; ++i) { e.Push(YawSample(0.4, 0.0, i * 5000)); }
  const auto k = e.Estimate();
  EXPECT_FALSE(k.degraded);
  EXPECT_DOUBLE_EQ(k.kinematics.theta, 0.4);
  EXPECT_EQ(k.kinematics.theta_dot, 0.0);
  EXPECT_EQ(k.kinematics.theta_ddot, 0.0);
}

TEST(Kinematics, LinearRamp) {
  KinematicsEstimator e;
  for (int i = 0; i < 6; ++i) { e.Push(YawSample(0.5 * i * 0.005, 0.5, i * 5000)); }
  const auto k = e.Estimate();
  EXPECT_NEAR(k.kinematics.theta_dot, 0.5, 1e-12);
  EXPECT_NEAR(k.kinematics.theta_ddot, 0.0, 1e-9);
}

TEST(Kinematics, TwoSamplesDegraded) {
  KinematicsEstimator e;
  e.Push(YawSample(0.0, 0.0, 0));
  e.Push(YawSample(0.0, 1.0, 5000));
  const auto k = e.Estimate();
  EXPECT_TRUE(k.degraded);
  EXPECT_EQ(k.kinematics.theta_ddot, 0.0);
}

TEST(Classify, PaperExamples) {
  EXPECT_EQ(Classify(0.5, {}, 0, true, 0.02).scenario, Scenario::kTargetReached);
  EXPECT_EQ(Classify(2.0, {}, 0, true, 0.02).scenario, Scenario::kNormal);

  FeedbackState s;
  for (int i = 0; i < 175; ++i) { s = Classify(5.0, s, +1, true, 0.02); }
  EXPECT_EQ(s.scenario, Scenario::kFarFromTarget);
  EXPECT_NEAR(s.dwell_timer, 3.5, 1e-9);
  EXPECT_TRUE(FarTorqueGateOpen(s));
}

TEST(Classify, ExhaustiveSweepMatchesScenarioTable) {
  const double dt = 0.02;
  int64_t checked = 0;
  int64_t mismatches = 0;
  testing::ForEachClassifyCase([&](double err, const FeedbackState& s, int v, bool ok) {
    const FeedbackState got = Classify(err, s, v, ok, dt);
    const testing::ExpectedScenario want = testing::ScenarioOracle(err, s, v, ok, dt);
    const bool match = got.scenario == want.scenario && got.dwell_timer == want.dwell &&
                       FarTorqueGateOpen(got) ==
                           (want.scenario == Scenario::kFarFromTarget && want.dwell >= 3.0);
    if (!match && mismatches++ < 5) {
      ADD_FAILURE() << "err=" << err << " crossed=" << s.crossed_target
                    << " approach=" << s.approach_sign << " ok=" << ok << " v=" << v;
    }
    ++checked;
  });
  EXPECT_EQ(mismatches, 0);
  EXPECT_EQ(checked, testing::kClassifyCases);
}

TEST(Zone, BandEdges) {
  EXPECT_EQ(ZoneOf(0.0, true), Zone::kWhite);
  EXPECT_EQ(ZoneOf(1.6, true), Zone::kBlue);
  EXPECT_EQ(ZoneOf(-3.2, true), Zone::kGreen);
  EXPECT_EQ(ZoneOf(10.0, true), Zone::kGreen);
  EXPECT_EQ(ZoneOf(0.0, false), Zone::kFail);
}

StrategyInput At(double desired, double actual, double dt = 0.02) {
  StrategyInput in;
  in.desired.theta = desired;
  in.actual.theta = actual;
  in.dt = dt;
  return in;
}

TEST(Strategy, DingExactlyOnceOnEntry) {
  FeedbackStrategy s;
  int dings = 0;
  for (int i = 0; i < 50; ++i) {
    if (s.Step(At(0.01, 0.0)).command.audio_cue == AudioCue::kDing) { ++dings; }
  }
  EXPECT_EQ(dings, 1);
}

TEST(Strategy, OvershotTorqueTowardTarget) {
  FeedbackState s;
  s.scenario = Scenario::kTargetReached;
  s.crossed_target = true;
  s.approach_sign = -1;
  const StrategyOutput out = StrategyStep(s, At(0.1, 0.0), StrategyConfig{});
  EXPECT_EQ(out.state.scenario, Scenario::kOvershot);
  EXPECT_NEAR(out.command.torque, 0.25, 1e-12);
  EXPECT_EQ(out.command.visual_zone, Zone::kGreen);
}

TEST(Strategy, FailureVibrationClamped) {
  StrategyConfig c;
  c.gains = {0.5, 0.0, 0.0};
  StrategyInput in = At(0.1, 0.0);
  in.object_ok = false;
  const StrategyOutput out = StrategyStep({}, in, c);
  ASSERT_TRUE(out.command.vibration.has_value());
  EXPECT_NEAR(out.command.vibration->amplitude, 0.03, 1e-15);
  EXPECT_EQ(out.command.torque, 0.0);
  EXPECT_EQ(out.command.audio_cue, AudioCue::kAlarm);
  EXPECT_EQ(out.command.visual_zone, Zone::kFail);
}

TEST(Strategy, TargetReachedNeverRendersAndTorqueAlwaysPointsAtTarget) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> angle(-kPi, kPi);
  std::uniform_real_distribution<double> small(-0.05, 0.05);
  std::uniform_int_distribution<int> pick(0, 4);
  for (int i = 0; i < 200000; ++i) {
    FeedbackState s;
    s.scenario = static_cast<Scenario>(pick(rng));
    s.crossed_target = pick(rng) % 2 == 0;
    s.approach_sign = pick(rng) % 3 - 1;
    s.dwell_timer = 3.0 * (pick(rng) / 2.0);
    const double actual = angle(rng);
    const double desired = actual + (i % 2 ? small(rng) : angle(rng));
    StrategyInput in = At(desired, actual);
    in.saturation_mode = pick(rng) == 0 ? OutputMode::kVibration : OutputMode::kTorque;
    const StrategyOutput out = StrategyStep(s, in, StrategyConfig{});
    const FeedbackCommand& c = out.command;
    ASSERT_FALSE(c.torque != 0.0 && c.vibration.has_value());
    if (out.state.scenario == Scenario::kTargetReached) {
      ASSERT_EQ(c.torque, 0.0);
      ASSERT_FALSE(c.vibration.has_value());
    }
    if (c.torque != 0.0) {
      ASSERT_EQ(Sign(c.torque), Sign(WrapPi(desired - actual)));
    }
  }
}

TEST(Strategy, DwellGateHoldsTorqueForThreeSeconds) {
  // Error grows from 5 deg at 1 deg/s: always moving away.
  FeedbackStrategy s;
  const double dt = 0.02;
  for (int i = 0; i < 250; ++i) {
    const double t = i * dt;
    StrategyInput in = At(DegToRad(5.0 + t), 0.0, dt);
    in.desired.theta_dot = DegToRad(1.0);
    in.t = t;
    const StrategyOutput& out = s.Step(in);
    ASSERT_EQ(out.state.scenario, Scenario::kFarFromTarget);
    const double accumulated = (i + 1) * dt;
    if (accumulated < 3.0 - 1e-9) {
      ASSERT_EQ(out.command.torque, 0.0) << "t=" << t;
    } else {
      ASSERT_GT(out.command.torque, 0.0) << "t=" << t;
    }
  }
}

TEST(Strategy, SaturationSubstitutesVibration) {
  FeedbackState s;
  s.scenario = Scenario::kTargetReached;
  s.crossed_target = true;
  s.approach_sign = +1;
  StrategyConfig c;
  c.saturation_vibration_gain = 0.2;
  StrategyInput in = At(0.0, 0.03);
  in.saturation_mode = OutputMode::kVibration;
  const StrategyOutput out = StrategyStep(s, in, c);
  ASSERT_EQ(out.state.scenario, Scenario::kOvershot);
  EXPECT_EQ(out.command.torque, 0.0);
  ASSERT_TRUE(out.command.vibration.has_value());
  EXPECT_NEAR(out.command.vibration->amplitude, 0.2 * 2.5 * 0.03, 1e-12);
  EXPECT_NEAR(out.command.vibration->angular_frequency, kTwoPi * 40.0, 1e-9);
}

TEST(Strategy, TorqueAblationKeepsZones) {
  StrategyConfig c;
  c.torque_feedback = false;
  FeedbackState s;
  s.scenario = Scenario::kTargetReached;
  s.crossed_target = true;
  s.approach_sign = -1;
  const StrategyOutput out = StrategyStep(s, At(0.1, 0.0), c);
  EXPECT_EQ(out.state.scenario, Scenario::kOvershot);
  EXPECT_EQ(out.command.torque, 0.0);
  EXPECT_EQ(out.command.visual_zone, Zone::kGreen);
}

}  // namespace
}  // namespace bihap
