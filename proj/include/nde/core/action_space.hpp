#pragma once

#include <array>
#include <cmath>
#include <stdexcept>
#include <string>

namespace nde {

// Action space: index 0 is a left lane change, 1..31 are longitudinal
// accelerations from -4.0 to +2.0 m/s^2 in 0.2 steps, 32 is a right lane change.
inline constexpr int kNumActions = 33;
inline constexpr int kLaneChangeLeft = 0;
inline constexpr int kLaneChangeRight = 32;
inline constexpr int kFirstAccel = 1;
inline constexpr int kLastAccel = 31;
inline constexpr int kNumAccels = 31;
inline constexpr double kMinAccel = -4.0;
inline constexpr double kMaxAccel = 2.0;
inline constexpr double kAccelResolution = 0.2;
// Index of the zero-acceleration action.
inline constexpr int kZeroAccel = 21;

using ActionPmf = std::array<double, kNumActions>;

enum class ActionKind { LaneChangeLeft, Accelerate, LaneChangeRight };

struct Action {
  ActionKind kind = ActionKind::Accelerate;
  double accel = 0.0;  // zero for lane changes

  bool is_lane_change() const { return kind != ActionKind::Accelerate; }
};

inline bool is_lane_change(int index) {
  return index == kLaneChangeLeft || index == kLaneChangeRight;
}

inline bool is_accel_index(int index) {
  return index >= kFirstAccel && index <= kLastAccel;
}

inline double accel_value(int index) {
  if (!is_accel_index(index)) {
    throw std::out_of_range("action index " + std::to_string(index) +
                            " is not a longitudinal action (1..31)");
  }
  return kMinAccel + kAccelResolution * static_cast<double>(index - kFirstAccel);
}

inline Action action_to_accel(int index) {
  if (index == kLaneChangeLeft) return {ActionKind::LaneChangeLeft, 0.0};
  if (index == kLaneChangeRight) return {ActionKind::LaneChangeRight, 0.0};
  if (!is_accel_index(index)) {
    throw std::out_of_range("action index " + std::to_string(index) +
                            " outside 0..32");
  }
  return {ActionKind::Accelerate, accel_value(index)};
}

// Nearest grid acceleration; values outside [-4, 2] clamp to the end points.
inline int accel_to_action(double accel) {
  if (!std::isfinite(accel)) {
    throw std::invalid_argument("acceleration is not finite");
  }
  const double k = std::round((accel - kMinAccel) / kAccelResolution);
  const int idx = kFirstAccel + static_cast<int>(k);
  if (idx < kFirstAccel) return kFirstAccel;
  if (idx > kLastAccel) return kLastAccel;
  return idx;
}

enum class Direction { Left = 0, Right = 1 };

inline int lane_change_action(Direction d) {
  return d == Direction::Left ? kLaneChangeLeft : kLaneChangeRight;
}

inline const char* to_string(Direction d) {
  return d == Direction::Left ? "left" : "right";
}

}  // namespace nde
