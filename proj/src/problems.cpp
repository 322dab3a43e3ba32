#include "codesign/problems.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "codesign/error.hpp"

namespace codesign {

namespace {

template <typename P>
double* param_slot(P& p, std::string_view name);

template <>
double* param_slot(DroneParams& p, std::string_view name) {
  if (name == "rho") return &p.rho;
  if (name == "c_d") return &p.c_d;
  if (name == "g") return &p.g;
  if (name == "r_bar") return &p.r_bar;
  if (name == "b_bar") return &p.b_bar;
  if (name == "t_bar") return &p.t_bar;
  if (name == "alpha") return &p.alpha;
  if (name == "delta_u") return &p.delta_u;
  if (name == "d") return &p.d;
  if (name == "motor_count") return &p.motor_count;
  return nullptr;
}

template <>
double* param_slot(TransportParams& p, std::string_view name) {
  if (name == "object_weight" || name == "weight") return &p.object_weight;
  if (name == "object_radius") return &p.object_radius;
  if (name == "min_frame_radius") return &p.min_frame_radius;
  if (name == "coverage_threshold") return &p.coverage_threshold;
  if (name == "coverage_per_robot") return &p.coverage_per_robot;
  if (name == "symmetry_breaking") return &p.symmetry_breaking;
  if (name == "team_size_pin") return &p.team_size_pin;
  if (name == "max_team") return &p.max_team;
  return nullptr;
}

void require_positive(double v, const char* name) {
  if (!(v > 0.0) || !std::isfinite(v)) {
    throw SchemaError(std::string("parameter '") + name + "' must be positive and finite");
  }
}

}  // namespace

void DroneParams::validate() const {
  require_positive(rho, "rho");
  require_positive(c_d, "c_d");
  require_positive(g, "g");
  require_positive(b_bar, "b_bar");
  require_positive(t_bar, "t_bar");
  require_positive(alpha, "alpha");
  require_positive(delta_u, "delta_u");
  require_positive(d, "d");
  require_positive(motor_count, "motor_count");
  if (!(r_bar > 1.0)) throw SchemaError("parameter 'r_bar' must exceed 1");
  if (alpha > 1.0) throw SchemaError("parameter 'alpha' must lie in (0, 1]");
}

void DroneParams::set(std::string_view name, double value) {
  double* slot = param_slot(*this, name);
  if (slot == nullptr) throw LookupError("unknown drone parameter '" + std::string(name) + "'");
  *slot = value;
}

const std::vector<std::string>& DroneParams::names() {
  static const std::vector<std::string> n = {"rho", "c_d", "g", "r_bar", "b_bar", "t_bar",
                                             "alpha", "delta_u", "d", "motor_count"};
  return n;
}

DroneSurrogateContext drone_surrogate_context(const DesignSpace& space, const DroneParams& p) {
  DroneSurrogateContext ctx;
  ctx.motor = space.require_module("motor");
  ctx.frame = space.require_module("frame");
  ctx.camera = space.require_module("camera");
  ctx.computer = space.require_module("computer");
  ctx.battery = space.require_module("battery");
  ctx.rho = p.rho;
  ctx.c_d = p.c_d;
  ctx.g = p.g;
  ctx.r_bar = p.r_bar;
  ctx.alpha = p.alpha;
  ctx.t_bar_hours = p.t_bar / 60.0;
  ctx.delta_u = p.delta_u;
  ctx.d = p.d;
  ctx.motor_count = p.motor_count;
  return ctx;
}

namespace {

struct DroneIds {
  std::size_t m, f, s, c, b;
  std::vector<std::size_t> all() const { return {m, f, s, c, b}; }
};

DroneIds drone_ids(const DesignSpace& space) {
  return {space.require_module("motor"), space.require_module("frame"),
          space.require_module("camera"), space.require_module("computer"),
          space.require_module("battery")};
}

Expr feat(const DesignSpace& space, std::size_t module, const char* feature, double mult = 1.0) {
  return Expr::feature(module, space.module(module).require_feature(feature), mult);
}

double omega(const DroneIds& ids, std::size_t i, const DroneParams& p) {
  return i == ids.m ? p.motor_count : 1.0;
}

// g * sum_i omega_i W_i
Expr weight_force(const DesignSpace& space, const DroneIds& ids, const DroneParams& p) {
  std::vector<Expr> terms;
  for (std::size_t i : ids.all()) terms.push_back(feat(space, i, "weight", p.g * omega(ids, i, p)));
  return Expr::sum(std::move(terms));
}

// 4/(rho^2 c_d^2) (4T)^2 L^-4 ((4T)^2 (gM)^-2 - 1)  ==  vmax^4
Expr vmax4_expr(const DesignSpace& space, const DroneIds& ids, const DroneParams& p) {
  Expr thrust = feat(space, ids.m, "thrust", p.motor_count);
  Expr length = feat(space, ids.f, "length");
  Expr ratio2 = Expr::power(thrust, 2) * Expr::power(weight_force(space, ids, p), -2);
  return Expr::product({Expr::constant(4.0 / (p.rho * p.rho * p.c_d * p.c_d)),
                        Expr::power(thrust, 2), Expr::power(length, -4),
                        ratio2 - Expr::constant(1.0)});
}

}  // namespace

Expr drone_vmax_expr(const DesignSpace& space, const DroneParams& params) {
  return Expr::power(vmax4_expr(space, drone_ids(space), params), 1, 4);
}

double exact_vmax(const DesignSpace& space, const DesignVector& x, const DroneParams& params) {
  return evaluate(drone_vmax_expr(space, params), space, x);
}

double exact_vmax(double motor_thrust, double frame_length, double total_mass,
                  const DroneParams& p) {
  double t = p.motor_count * motor_thrust;
  double w = p.g * total_mass;
  double bracket = (t * t) / (w * w) - 1.0;
  if (!(bracket >= 0.0)) throw DomainError("total thrust does not exceed the weight");
  double v4 = 4.0 * t * t / (p.rho * p.rho * p.c_d * p.c_d * std::pow(frame_length, 4)) * bracket;
  return std::pow(v4, 0.25);
}

DesignSpec build_drone_spec(const DesignSpace& space, const DroneParams& p) {
  p.validate();
  DroneIds ids = drone_ids(space);
  DroneSurrogateContext ctx = drone_surrogate_context(space, p);
  for (std::size_t i : ids.all()) {
    if (space.module(i).optional()) {
      throw SchemaError("drone module '" + space.module(i).module_id() + "' cannot be optional");
    }
  }
  DesignSpec spec;
  spec.space = space;

  Objective speed{"top_speed", drone_vmax_expr(space, p), std::nullopt};
  speed.surrogate = ObjectiveSurrogate{SurrogateKind::kSpeedLowerBound,
                                       apply_surrogate(SurrogateKind::kSpeedLowerBound, space, ctx).expr};
  spec.objectives.push_back(std::move(speed));

  std::vector<Expr> cost;
  for (std::size_t i : ids.all()) cost.push_back(feat(space, i, "cost", omega(ids, i, p)));
  spec.cost = Expr::sum(cost);
  spec.constraints.push_back(
      Constraint{"budget", Expr::sum(cost), Sense::kLessEqual, p.b_bar, ConstraintClass::kSystem, std::nullopt});

  // alpha Q_b / (4 A_m + A_s + A_c) >= T_bar, hours
  {
    Expr draw = Expr::sum({feat(space, ids.m, "current", p.motor_count),
                           feat(space, ids.s, "current"), feat(space, ids.c, "current")});
    Expr hours = Expr::quotient(feat(space, ids.b, "capacity", p.alpha), draw);
    auto sur = apply_surrogate(SurrogateKind::kFlightTimeUpperBound, space, ctx);
    spec.constraints.push_back(Constraint{
        "flight_time", -hours, Sense::kLessEqual, -p.t_bar / 60.0, ConstraintClass::kSystem,
        ConstraintSurrogate{SurrogateKind::kFlightTimeUpperBound, sur.expr, sur.rhs}});
  }

  spec.constraints.push_back(Constraint{
      "thrust_ratio", p.r_bar * weight_force(space, ids, p) - feat(space, ids.m, "thrust", p.motor_count),
      Sense::kLessEqual, 0.0, ConstraintClass::kImplicit, std::nullopt});

  {
    auto power = [&](std::size_t i, double w) {
      return Expr::product({feat(space, i, "current", w), feat(space, i, "voltage")});
    };
    Expr lhs = Expr::sum({power(ids.m, p.motor_count), power(ids.s, 1.0), power(ids.c, 1.0),
                          -power(ids.b, 1.0)});
    spec.constraints.push_back(
        Constraint{"power", lhs, Sense::kLessEqual, 0.0, ConstraintClass::kImplicit, std::nullopt});
  }

  for (std::size_t i : {ids.m, ids.s, ids.c, ids.b}) {
    spec.constraints.push_back(Constraint{"size_" + space.module(i).module_id(),
                                          feat(space, i, "size") - feat(space, ids.f, "length"),
                                          Sense::kLessEqual, 0.0, ConstraintClass::kImplicit,
                                          std::nullopt});
  }

  // FPS^4 >= 4 f^4 / (delta^4 d^4 rho^2 c_d^2) (4T)^2 / L^4 (bracket)
  {
    double scale = std::pow(p.delta_u * p.d, -4.0);
    Expr rhs4 = Expr::product({Expr::constant(scale), Expr::power(feat(space, ids.s, "focal_length"), 4),
                               vmax4_expr(space, ids, p)});
    Expr lhs = rhs4 - Expr::power(feat(space, ids.s, "fps"), 4);
    auto sur = apply_surrogate(SurrogateKind::kIc4UpperBound, space, ctx);
    spec.constraints.push_back(
        Constraint{"frame_rate", lhs, Sense::kLessEqual, 0.0, ConstraintClass::kImplicit,
                   ConstraintSurrogate{SurrogateKind::kIc4UpperBound, sur.expr, sur.rhs}});
  }

  spec.constraints.push_back(Constraint{"vin_rate",
                                        feat(space, ids.s, "fps") - feat(space, ids.c, "vin_fps"),
                                        Sense::kLessEqual, 0.0, ConstraintClass::kImplicit,
                                        std::nullopt});
  spec.validate();
  return spec;
}

void TransportParams::validate() const {
  if (!(object_weight >= 0.0) || !std::isfinite(object_weight)) {
    throw SchemaError("parameter 'object_weight' must be >= 0");
  }
  if (!(object_radius >= 0.0) || !std::isfinite(object_radius)) {
    throw SchemaError("parameter 'object_radius' must be >= 0");
  }
  if (!(min_frame_radius >= 0.0)) throw SchemaError("parameter 'min_frame_radius' must be >= 0");
  if (!(coverage_threshold >= 0.0 && coverage_threshold <= 1.0)) {
    throw SchemaError("parameter 'coverage_threshold' must lie in [0, 1]");
  }
  if (!(team_size_pin >= 0.0) || !(max_team >= 0.0)) {
    throw SchemaError("team size parameters must be >= 0");
  }
}

void TransportParams::set(std::string_view name, double value) {
  double* slot = param_slot(*this, name);
  if (slot == nullptr) throw LookupError("unknown transport parameter '" + std::string(name) + "'");
  *slot = value;
}

const std::vector<std::string>& TransportParams::names() {
  static const std::vector<std::string> n = {
      "object_weight", "object_radius", "min_frame_radius", "coverage_threshold",
      "coverage_per_robot", "symmetry_breaking", "team_size_pin", "max_team"};
  return n;
}

int max_team_size(double object_radius, double min_frame_radius) {
  if (!(min_frame_radius > 0.0)) throw DomainError("frame radius must be positive");
  if (!(object_radius >= 0.0)) throw DomainError("object radius must be nonnegative");
  double k = std::floor(std::numbers::pi * (object_radius + min_frame_radius) / min_frame_radius);
  if (k > 1e6) throw DomainError("team size bound is unreasonably large");
  return static_cast<int>(k);
}

namespace {

FeatureMatrix renamed(const FeatureMatrix& m, const std::string& id) {
  std::vector<std::vector<double>> columns;
  for (std::size_t j = 0; j < m.num_components(); ++j) {
    auto c = m.column(j);
    columns.emplace_back(c.begin(), c.end());
  }
  return FeatureMatrix(id, m.features(), m.component_names(), columns, true);
}

void require_features(const FeatureMatrix& m, std::initializer_list<const char*> names) {
  for (const char* n : names) m.require_feature(n);
}

}  // namespace

DesignSpec build_transport_spec(const FeatureMatrix& frame, const FeatureMatrix& sensor,
                                const FeatureMatrix& motor, const FeatureMatrix& battery,
                                const TransportParams& p) {
  p.validate();
  require_features(frame, {"weight", "radius", "area"});
  require_features(sensor, {"weight", "coverage", "power", "area"});
  require_features(motor, {"weight", "push", "power", "area"});
  require_features(battery, {"weight", "power", "area"});

  double r_min = p.min_frame_radius;
  if (r_min == 0.0) {
    auto radii = frame.row(frame.require_feature("radius"));
    r_min = *std::min_element(radii.begin(), radii.end());
  }
  int k_max = max_team_size(p.object_radius, r_min);
  if (p.max_team > 0.0) k_max = std::min(k_max, static_cast<int>(p.max_team));
  if (k_max <= 0) throw SchemaError("team size bound K is zero");

  std::vector<FeatureMatrix> modules;
  for (int k = 1; k <= k_max; ++k) {
    std::string r = "r" + std::to_string(k) + ".";
    modules.emplace_back(r + "slot", std::vector<Feature>{{"active", ""}},
                         std::vector<std::string>{"on"}, std::vector<std::vector<double>>{{1.0}}, true);
    modules.push_back(renamed(frame, r + "frame"));
    modules.push_back(renamed(motor, r + "motor"));
    modules.push_back(renamed(battery, r + "battery"));
    modules.push_back(renamed(sensor, r + "sensor"));
  }
  DesignSpec spec;
  spec.space = DesignSpace(std::move(modules));
  const auto& space = spec.space;
  auto idx = [&](int k, const char* what) {
    return space.require_module("r" + std::to_string(k) + "." + what);
  };
  auto all = [&](int k, const char* what, double mult = 1.0) {
    std::size_t i = idx(k, what);
    std::vector<std::size_t> s(space.module(i).num_components());
    for (std::size_t j = 0; j < s.size(); ++j) s[j] = j;
    return Expr::selector(i, s, mult);
  };
  auto feat = [&](int k, const char* what, const char* f, double mult = 1.0) {
    std::size_t i = idx(k, what);
    return Expr::feature(i, space.module(i).require_feature(f), mult);
  };
  auto add = [&](std::string label, Expr lhs, Sense sense, double rhs, ConstraintClass klass) {
    spec.constraints.push_back(Constraint{std::move(label), std::move(lhs), sense, rhs, klass, std::nullopt});
  };
  // weight minus push of robot k
  auto net_weight = [&](int k) {
    return Expr::sum({feat(k, "frame", "weight"), feat(k, "motor", "weight"),
                      feat(k, "battery", "weight"), feat(k, "sensor", "weight"),
                      -feat(k, "motor", "push")});
  };

  std::vector<Expr> slots;
  for (int k = 1; k <= k_max; ++k) slots.push_back(all(k, "slot"));
  spec.objectives.push_back(Objective{"team_size", -Expr::sum(slots), std::nullopt});
  // an empty team carries nothing
  add("team_nonempty", -Expr::sum(slots), Sense::kLessEqual, -1.0, ConstraintClass::kSystem);

  std::vector<Expr> team_net;
  for (int k = 1; k <= k_max; ++k) team_net.push_back(net_weight(k));
  add("push_total", Expr::sum(team_net), Sense::kLessEqual, -p.object_weight, ConstraintClass::kSystem);

  std::vector<Expr> coverage;
  for (int k = 1; k <= k_max; ++k) {
    std::string r = "r" + std::to_string(k) + "_";
    add(r + "push_self", net_weight(k), Sense::kLessEqual, 0.0, ConstraintClass::kSystem);
    if (p.coverage_per_robot != 0.0) {
      add(r + "coverage", p.coverage_threshold * all(k, "slot") - feat(k, "sensor", "coverage"),
          Sense::kLessEqual, 0.0, ConstraintClass::kSystem);
    } else {
      coverage.push_back(feat(k, "sensor", "coverage"));
    }
    add(r + "one_frame", all(k, "frame") - all(k, "slot"), Sense::kEqual, 0.0, ConstraintClass::kImplicit);
    add(r + "one_motor", all(k, "motor") - all(k, "slot"), Sense::kEqual, 0.0, ConstraintClass::kImplicit);
    add(r + "one_battery", all(k, "battery") - all(k, "slot"), Sense::kEqual, 0.0, ConstraintClass::kImplicit);
    add(r + "sensor_gate", all(k, "sensor") - all(k, "slot"), Sense::kLessEqual, 0.0, ConstraintClass::kImplicit);
    add(r + "power", feat(k, "motor", "power") + feat(k, "sensor", "power") - feat(k, "battery", "power"),
        Sense::kLessEqual, 0.0, ConstraintClass::kImplicit);
    add(r + "area",
        Expr::sum({feat(k, "motor", "area"), feat(k, "sensor", "area"), feat(k, "battery", "area"),
                   -feat(k, "frame", "area")}),
        Sense::kLessEqual, 0.0, ConstraintClass::kImplicit);
  }
  if (p.coverage_per_robot == 0.0) {
    add("coverage", -Expr::sum(coverage), Sense::kLessEqual, -p.coverage_threshold, ConstraintClass::kSystem);
  }
  if (p.symmetry_breaking != 0.0) {
    for (int k = 1; k < k_max; ++k) {
      add("symmetry_" + std::to_string(k), all(k + 1, "slot") - all(k, "slot"), Sense::kLessEqual, 0.0,
          ConstraintClass::kImplicit);
    }
  }
  if (p.team_size_pin > 0.0) {
    add("team_size_pin", Expr::sum(slots), Sense::kEqual, std::round(p.team_size_pin), ConstraintClass::kSystem);
  }
  spec.validate();
  return spec;
}

int transport_team_size(const DesignSpec& spec) {
  int k = 0;
  while (spec.space.module_index("r" + std::to_string(k + 1) + ".slot")) ++k;
  return k;
}

std::vector<RobotConfig> transport_robots(const DesignSpace& space, const DesignVector& x) {
  std::vector<RobotConfig> out;
  for (int k = 1;; ++k) {
    std::string r = "r" + std::to_string(k) + ".";
    auto slot = space.module_index(r + "slot");
    if (!slot) break;
    if (!x.selected(*slot)) continue;
    auto name = [&](const char* what) -> std::string {
      std::size_t i = space.require_module(r + what);
      if (!x.selected(i)) return "";
      return space.module(i).component_names()[static_cast<std::size_t>(x.choice(i))];
    };
    out.push_back(RobotConfig{k, name("frame"), name("motor"), name("battery"), name("sensor")});
  }
  return out;
}

}  // namespace codesign
