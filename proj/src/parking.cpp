#include "cgr/parking.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace cgr {

double ParkingParams::diagonal() const {
  return std::hypot(2.0 * half_width, 2.0 * half_height);
}

double wrap_angle(double a) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  a = std::fmod(a, two_pi);
  if (a <= -std::numbers::pi) a += two_pi;
  if (a > std::numbers::pi) a -= two_pi;
  return a;
}

std::array<double, 3> parking_spot(int index) {
  if (index < 0 || index >= kParkingSpots) throw ContractError("parking spot index out of range");
  const int column = index % 15;
  const bool upper = index < 15;
  const double x = -14.0 + 2.0 * column;
  const double y = upper ? 8.0 : -8.0;
  const double heading = upper ? std::numbers::pi / 2.0 : -std::numbers::pi / 2.0;
  return {x, y, heading};
}

ParkingEnv::ParkingEnv(ParkingParams params) : params_(params) {}

Vector ParkingEnv::do_reset(std::uint64_t seed) {
  Rng rng(derive_seed(seed, 0x7061726bULL));
  goal_spot_ = static_cast<int>(uniform_index(rng, kParkingSpots));
  const auto spot = parking_spot(goal_spot_);
  state_ = ParkingState{};
  state_.heading = wrap_angle(std::numbers::pi * (1.0 - 2.0 * uniform01(rng)));
  state_.goal_x = spot[0];
  state_.goal_y = spot[1];
  state_.goal_heading = spot[2];
  initial_reward_ = pose_reward(state_.x, state_.y, state_.heading);
  return features();
}

Environment::Outcome ParkingEnv::do_step(const Action& action) {
  const Vector* a = std::get_if<Vector>(&action);
  if (!a || a->size() != 2) throw ContractError("parking: action must be a 2-vector");
  const double speed_cmd = std::clamp((*a)(0), -1.0, 1.0);
  const double steer_cmd = std::clamp((*a)(1), -1.0, 1.0);
  state_.velocity = speed_cmd * params_.max_speed;
  state_.angular_velocity = steer_cmd * params_.max_turn_rate;
  state_.x += state_.velocity * std::cos(state_.heading) * params_.dt;
  state_.y += state_.velocity * std::sin(state_.heading) * params_.dt;
  state_.heading = wrap_angle(state_.heading + state_.angular_velocity * params_.dt);

  Outcome out;
  out.reward = pose_reward(state_.x, state_.y, state_.heading);
  out.terminal = goal_reached(achieved_goal(), features().tail(kParkingGoalWidth));
  out.success = out.terminal;
  out.next_state = features();
  return out;
}

void ParkingEnv::set_pose(double x, double y, double heading) {
  state_.x = x;
  state_.y = y;
  state_.heading = wrap_angle(heading);
}

Vector ParkingEnv::features() const {
  Vector f(kParkingFeatureWidth);
  f << state_.x, state_.y, state_.velocity, std::cos(state_.heading), std::sin(state_.heading),
      state_.angular_velocity, state_.goal_x, state_.goal_y, std::cos(state_.goal_heading),
      std::sin(state_.goal_heading);
  return f;
}

Vector ParkingEnv::achieved_goal() const {
  Vector g(kParkingGoalWidth);
  g << state_.x, state_.y, std::cos(state_.heading), std::sin(state_.heading);
  return g;
}

double ParkingEnv::pose_reward(double x, double y, double heading) const {
  const double dp = std::hypot(x - state_.goal_x, y - state_.goal_y);
  const double dh = std::abs(wrap_angle(heading - state_.goal_heading));
  return -(dp / params_.diagonal() + params_.heading_weight * dh / std::numbers::pi);
}

namespace {

struct PoseError {
  double position;
  double heading;
};

PoseError pose_error(const Vector& achieved, const Vector& goal) {
  if (achieved.size() != kParkingGoalWidth || goal.size() != kParkingGoalWidth)
    throw DimensionError("parking: goal vectors must have width 4");
  const double dp = std::hypot(achieved(0) - goal(0), achieved(1) - goal(1));
  const double ha = std::atan2(achieved(3), achieved(2));
  const double hg = std::atan2(goal(3), goal(2));
  return {dp, std::abs(wrap_angle(ha - hg))};
}

}  // namespace

double ParkingEnv::compute_reward(const Vector& achieved, const Vector& goal) const {
  const auto e = pose_error(achieved, goal);
  return -(e.position / params_.diagonal() + params_.heading_weight * e.heading / std::numbers::pi);
}

bool ParkingEnv::goal_reached(const Vector& achieved, const Vector& goal) const {
  const auto e = pose_error(achieved, goal);
  return e.position < params_.position_tolerance && e.heading < params_.heading_tolerance;
}

ScoreReference ParkingEnv::score_reference() const {
  // Standing still for the whole episode is the uninformed baseline.
  return {0.0, initial_reward_ * params_.max_steps};
}

}  // namespace cgr
