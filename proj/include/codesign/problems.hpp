#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "codesign/spec.hpp"
#include "codesign/surrogate.hpp"

namespace codesign {

// Racing drone. Units: weight kg, thrust N, length/size m, current A,
// voltage V, capacity Ah, fps 1/s, focal length px, cost $.
struct DroneParams {
  double rho = 1.2;      // air density
  double c_d = 1.3;      // drag coefficient
  double g = 9.81;
  double r_bar = 2.0;    // minimum thrust-weight ratio
  double b_bar = 1000.0; // budget
  double t_bar = 5.0;    // minimum flight time, minutes
  double alpha = 0.8;    // usable battery fraction
  double delta_u = 30.0; // pixel displacement bound
  double d = 5.0;        // feature distance, m
  double motor_count = 4.0;

  void validate() const;
  // Sets a parameter by name; throws LookupError for unknown names.
  void set(std::string_view name, double value);
  static const std::vector<std::string>& names();
};

inline constexpr const char* kDroneModules[] = {"motor", "frame", "camera", "computer", "battery"};

// Objective: exact top speed with the speed-lower-bound surrogate.
// Constraints: budget, flight_time (surrogate), thrust_ratio, power,
// size_<module>, frame_rate (surrogate), vin_rate. Cost: total price.
DesignSpec build_drone_spec(const DesignSpace& space, const DroneParams& params);

DroneSurrogateContext drone_surrogate_context(const DesignSpace& space, const DroneParams& params);

// vmax expression over the design; undefined (DomainError) when the total
// thrust does not exceed the weight.
Expr drone_vmax_expr(const DesignSpace& space, const DroneParams& params);

double exact_vmax(const DesignSpace& space, const DesignVector& x, const DroneParams& params);

// Closed form from per-motor thrust, frame length and total mass (kg).
double exact_vmax(double motor_thrust, double frame_length, double total_mass,
                  const DroneParams& params);

// Collective transport team.
struct TransportParams {
  double object_weight = 10.0;    // same unit as push and weights
  double object_radius = 0.5;     // m
  double min_frame_radius = 0.0;  // m; 0 takes the smallest catalog frame
  double coverage_threshold = 0.5;
  // 0: the team's summed coverage meets the threshold; 1: every active
  // robot meets it on its own.
  double coverage_per_robot = 0.0;
  double symmetry_breaking = 1.0;
  double team_size_pin = 0.0;     // > 0 forces exactly this many active robots
  double max_team = 0.0;          // > 0 caps K below the geometric bound

  void validate() const;
  void set(std::string_view name, double value);
  static const std::vector<std::string>& names();
};

int max_team_size(double object_radius, double min_frame_radius);

// Module ids "r<k>.slot", "r<k>.frame", "r<k>.motor", "r<k>.battery",
// "r<k>.sensor" for k = 1..K. Catalog features: frame {weight, radius,
// area}, sensor {weight, coverage, power, area}, motor {weight, push, power,
// area}, battery {weight, power, area}.
DesignSpec build_transport_spec(const FeatureMatrix& frame, const FeatureMatrix& sensor,
                                const FeatureMatrix& motor, const FeatureMatrix& battery,
                                const TransportParams& params);

int transport_team_size(const DesignSpec& spec);  // K of a built spec

struct RobotConfig {
  int index = 0;  // 1-based robot number
  std::string frame, motor, battery, sensor;  // sensor empty when none
};

// Active robots of a transport design.
std::vector<RobotConfig> transport_robots(const DesignSpace& space, const DesignVector& x);

}  // namespace codesign
