#include "codesign/surrogate.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "codesign/error.hpp"

namespace codesign {

double speed_kappa(double r_bar, double rho, double c_d) {
  if (!(r_bar > 1.0)) throw DomainError("speed surrogate needs r_bar > 1");
  return std::pow(64.0 * (r_bar * r_bar - 1.0) / (rho * rho * c_d * c_d), 0.25);
}

double ic4_beta(const DroneSurrogateContext& ctx) {
  return std::log(4.0 / (std::pow(ctx.delta_u, 4) * std::pow(ctx.d, 4) * ctx.rho * ctx.rho *
                         ctx.c_d * ctx.c_d));
}

namespace {

Expr feat(const DesignSpace& space, std::size_t module, const char* feature, double mult = 1.0) {
  return Expr::feature(module, space.module(module).require_feature(feature), mult);
}

void require_positive(const DesignSpace& space, std::size_t module, const char* feature) {
  const auto& m = space.module(module);
  std::size_t f = m.require_feature(feature);
  for (std::size_t j = 0; j < m.num_components(); ++j) {
    if (!(m.value(j, f) > 0.0)) {
      std::ostringstream msg;
      msg << "surrogate needs a positive '" << feature << "' but module '" << m.module_id()
          << "', component '" << m.component_names()[j] << "' has " << m.value(j, f);
      throw DomainError(msg.str());
    }
  }
}

double extreme(const DesignSpace& space, std::size_t module, const char* feature, bool max) {
  auto row = space.module(module).row(space.module(module).require_feature(feature));
  return max ? *std::max_element(row.begin(), row.end()) : *std::min_element(row.begin(), row.end());
}

}  // namespace

SurrogateResult apply_surrogate(SurrogateKind kind, const DesignSpace& space,
                                const DroneSurrogateContext& ctx) {
  switch (kind) {
    case SurrogateKind::kSpeedLowerBound: {
      require_positive(space, ctx.motor, "thrust");
      require_positive(space, ctx.frame, "length");
      double kappa = speed_kappa(ctx.r_bar, ctx.rho, ctx.c_d);
      Expr e = Expr::constant(kappa) * Expr::power(feat(space, ctx.motor, "thrust"), 1, 2) /
               feat(space, ctx.frame, "length");
      return {e, 0.0, Exactness::kConservative};
    }
    case SurrogateKind::kIc4UpperBound: {
      require_positive(space, ctx.motor, "thrust");
      require_positive(space, ctx.frame, "length");
      require_positive(space, ctx.camera, "fps");
      require_positive(space, ctx.camera, "focal_length");
      // All five modules carry weight; motors count four times.
      std::size_t mods[] = {ctx.motor, ctx.frame, ctx.camera, ctx.computer, ctx.battery};
      double n = 5.0;
      std::vector<Expr> terms;
      terms.push_back(4.0 * Expr::log(feat(space, ctx.motor, "thrust", ctx.motor_count)));
      terms.push_back(-4.0 * Expr::log(feat(space, ctx.frame, "length")));
      for (std::size_t i : mods) {
        require_positive(space, i, "weight");
        double omega = i == ctx.motor ? ctx.motor_count : 1.0;
        terms.push_back((-2.0 / n) * Expr::log(feat(space, i, "weight", ctx.g * omega)));
      }
      terms.push_back(Expr::constant(-2.0 * std::log(n)));
      terms.push_back(-4.0 * Expr::log(feat(space, ctx.camera, "fps")));
      terms.push_back(4.0 * Expr::log(feat(space, ctx.camera, "focal_length")));
      terms.push_back(Expr::constant(ic4_beta(ctx)));
      return {Expr::sum(std::move(terms)), 0.0, Exactness::kConservative};
    }
    case SurrogateKind::kFlightTimeUpperBound: {
      require_positive(space, ctx.motor, "current");
      require_positive(space, ctx.battery, "capacity");
      if (!(ctx.alpha > 0.0) || !(ctx.t_bar_hours > 0.0)) {
        throw DomainError("flight-time surrogate needs alpha > 0 and T_bar > 0");
      }
      double worst = extreme(space, ctx.camera, "current", true) +
                     extreme(space, ctx.computer, "current", true);
      double least = 2.0 * extreme(space, ctx.motor, "current", false);
      if (worst > least) {
        std::ostringstream msg;
        msg << "flight-time surrogate assumes camera + computer current <= 2 x motor current; "
               "catalog worst case "
            << worst << " > " << least;
        throw LoweringError(msg.str());
      }
      // log(6 A_m) - log(alpha Q_b) + log(T_bar) <= 0
      double six = ctx.motor_count + 2.0;
      Expr e = Expr::log(feat(space, ctx.motor, "current", six)) -
               Expr::log(feat(space, ctx.battery, "capacity", ctx.alpha)) +
               Expr::constant(std::log(ctx.t_bar_hours));
      return {e, 0.0, Exactness::kConservative};
    }
  }
  throw LoweringError("unknown surrogate kind");
}

}  // namespace codesign
