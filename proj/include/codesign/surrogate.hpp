#pragma once

#include <cstddef>

#include "codesign/lower.hpp"

namespace codesign {

// Module indices and physical constants the drone surrogates depend on.
// Feature names: motor {thrust, weight, current}, frame {length, weight},
// camera {fps, focal_length, weight, current}, computer {weight, current},
// battery {capacity, weight}.
struct DroneSurrogateContext {
  std::size_t motor = 0;
  std::size_t frame = 1;
  std::size_t camera = 2;
  std::size_t computer = 3;
  std::size_t battery = 4;
  double rho = 1.2;
  double c_d = 1.3;
  double g = 9.81;
  double r_bar = 2.0;
  double alpha = 0.8;
  double t_bar_hours = 5.0 / 60.0;
  double delta_u = 30.0;
  double d = 5.0;
  double motor_count = 4.0;
};

struct SurrogateResult {
  Expr expr;   // objective, or constraint lhs with sense <=
  double rhs = 0.0;
  Exactness exactness = Exactness::kConservative;
};

// (64 (r^2 - 1) / (rho^2 c_d^2))^(1/4): vmax >= kappa sqrt(T_m) / L_f once
// 4 T_m >= r g M.
double speed_kappa(double r_bar, double rho, double c_d);

// log(4 / (delta_u^4 d^4 rho^2 c_d^2)); the focal length stays per camera.
double ic4_beta(const DroneSurrogateContext& ctx);

// Throws LookupError for a missing feature, DomainError when a log argument
// is nonpositive on some component, LoweringError when the flight-time
// current bound (camera + computer <= 2 motor) does not hold on the catalog.
SurrogateResult apply_surrogate(SurrogateKind kind, const DesignSpace& space,
                                const DroneSurrogateContext& ctx);

}  // namespace codesign
