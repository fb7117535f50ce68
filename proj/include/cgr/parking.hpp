#pragma once

#include <array>

#include "cgr/env.hpp"

namespace cgr {

struct ParkingState {
  double x = 0.0;
  double y = 0.0;
  double heading = 0.0;  // (-pi, pi]
  double velocity = 0.0;
  double angular_velocity = 0.0;
  double goal_x = 0.0;
  double goal_y = 0.0;
  double goal_heading = 0.0;
};

/// Kinematic and reward constants of the parking lot.
struct ParkingParams {
  double dt = 0.1;
  double max_speed = 5.0;
  double max_turn_rate = 1.0;
  double half_width = 15.0;   // lot spans x in [-15, 15]
  double half_height = 10.0;  // and y in [-10, 10]
  double heading_weight = 0.3;
  double position_tolerance = 0.5;
  double heading_tolerance = 0.15;
  int max_steps = 100;

  double diagonal() const;
};

inline constexpr int kParkingSpots = 30;
inline constexpr int kParkingFeatureWidth = 10;
inline constexpr int kParkingGoalWidth = 4;

/// Wraps an angle to (-pi, pi].
double wrap_angle(double a);

/// Centre and facing direction of spot `index` in [0, 30): two rows of 15,
/// the upper row facing +y, the lower row facing -y.
std::array<double, 3> parking_spot(int index);

/// Goal-conditioned parking lot with unicycle kinematics.
///
/// Features: x, y, velocity, cos(heading), sin(heading), angular velocity,
/// goal x, goal y, cos(goal heading), sin(goal heading). The last four form
/// the goal; the achieved goal has the same layout.
class ParkingEnv final : public Environment, public GoalSpec {
 public:
  explicit ParkingEnv(ParkingParams params = {});

  std::string name() const override { return "parking"; }
  int state_width() const override { return kParkingFeatureWidth; }
  ActionSpace action_space() const override { return {ActionKind::continuous, 2}; }
  int max_steps() const override { return params_.max_steps; }
  ScoreReference score_reference() const override;
  const GoalSpec* goal_spec() const override { return this; }
  Vector achieved_goal() const override;

  int goal_width() const override { return kParkingGoalWidth; }
  double compute_reward(const Vector& achieved, const Vector& goal) const override;
  bool goal_reached(const Vector& achieved, const Vector& goal) const override;

  const ParkingParams& params() const { return params_; }
  const ParkingState& state() const { return state_; }
  int goal_spot() const { return goal_spot_; }
  /// Overrides the pose mid-episode; the goal is left unchanged.
  void set_pose(double x, double y, double heading);

  Vector features() const;
  /// Reward for a pose relative to the goal: -(|dp| / D + w |dtheta| / pi).
  double pose_reward(double x, double y, double heading) const;

 protected:
  Vector do_reset(std::uint64_t seed) override;
  Outcome do_step(const Action& action) override;

 private:
  ParkingParams params_;
  ParkingState state_;
  int goal_spot_ = 0;
  double initial_reward_ = 0.0;
};

}  // namespace cgr
