// Python bindings. JSON-producing calls return the same text as the CLI;
// the package wrapper decodes it.

#include <fstream>
#include <map>
#include <sstream>

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "codesign/error.hpp"
#include "codesign/lp_format.hpp"
#include "codesign/problems.hpp"
#include "codesign/report.hpp"

namespace py = pybind11;
using namespace codesign;

namespace {

using Params = std::map<std::string, double>;

Problem load(const std::string& path, const Params& params) {
  ParamOverrides o(params.begin(), params.end());
  return load_problem(path, o);
}

SolverConfig config(bool deterministic, std::optional<double> time_limit,
                    std::optional<std::uint64_t> node_limit) {
  SolverConfig cfg;
  cfg.deterministic = deterministic;
  if (time_limit) cfg.time_limit = *time_limit;
  if (node_limit) cfg.node_limit = *node_limit;
  return cfg;
}

py::tuple solve_file(const std::string& path, const Params& params, bool deterministic,
                     std::optional<double> time_limit, std::optional<std::uint64_t> node_limit,
                     bool oracle) {
  Problem p = load(path, params);
  SolveOutcome out;
  std::optional<OracleCheck> check;
  {
    py::gil_scoped_release release;
    out = solve_problem(p, config(deterministic, time_limit, node_limit));
    if (oracle) check = oracle_check(p, out, deterministic, enumeration_cap_from_env());
  }
  std::string text = solution_json(p, out, check ? &*check : nullptr, !deterministic);
  return py::make_tuple(text, to_string(out.solution.status));
}

std::string validate_file(const std::string& path, const Params& params, std::size_t lifting_cap) {
  Problem p = load(path, params);
  LoweringOptions lo;
  lo.lifting_cap = lifting_cap;
  return lowering_json(p, lower(p.spec, lo).report);
}

std::string sweep_file(const std::string& path, const Params& params,
                       std::optional<std::uint64_t> sample, std::uint64_t seed,
                       std::optional<std::uint64_t> cap) {
  Problem p = load(path, params);
  SweepOptions opt;
  opt.cap = cap ? *cap : enumeration_cap_from_env();
  opt.sample = sample;
  opt.seed = seed;
  std::ostringstream out;
  write_sweep_csv(p.spec, opt, out);
  return out.str();
}

std::string export_lp(const std::string& path, const Params& params) {
  Problem p = load(path, params);
  return write_lp(lower(p.spec).instance);
}

py::tuple solve_lp_text(const std::string& text, bool deterministic) {
  BlpInstance inst = read_lp(text);
  BlpSolution sol;
  {
    py::gil_scoped_release release;
    sol = solve(inst, config(deterministic, std::nullopt, std::nullopt));
  }
  return py::make_tuple(lp_solution_json(inst, sol, !deterministic), to_string(sol.status));
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "catalog co-design core";

  auto base = py::register_exception<Error>(m, "CodesignError", PyExc_RuntimeError);
  py::register_exception<SchemaError>(m, "SchemaError", base.ptr());
  py::register_exception<LookupError>(m, "LookupError", base.ptr());
  py::register_exception<DomainError>(m, "DomainError", base.ptr());
  py::register_exception<LoweringError>(m, "LoweringError", base.ptr());
  py::register_exception<CapacityError>(m, "CapacityError", base.ptr());
  py::register_exception<ParseError>(m, "ParseError", base.ptr());

  m.def("solve_file", &solve_file, py::arg("path"), py::arg("params") = Params{},
        py::arg("deterministic") = true, py::arg("time_limit") = std::nullopt,
        py::arg("node_limit") = std::nullopt, py::arg("oracle") = false);
  m.def("validate_file", &validate_file, py::arg("path"), py::arg("params") = Params{},
        py::arg("lifting_cap") = kDefaultLiftingCap);
  m.def("sweep_file", &sweep_file, py::arg("path"), py::arg("params") = Params{},
        py::arg("sample") = std::nullopt, py::arg("seed") = 0, py::arg("cap") = std::nullopt);
  m.def("export_lp", &export_lp, py::arg("path"), py::arg("params") = Params{});
  m.def("solve_lp_text", &solve_lp_text, py::arg("text"), py::arg("deterministic") = true);

  m.def("max_team_size", &max_team_size, py::arg("object_radius"), py::arg("min_frame_radius"));
  m.def("speed_kappa", &speed_kappa, py::arg("r_bar"), py::arg("rho"), py::arg("c_d"));
  m.def(
      "exact_vmax",
      [](double thrust, double length, double mass, const Params& params) {
        DroneParams p;
        for (const auto& [k, v] : params) p.set(k, v);
        return exact_vmax(thrust, length, mass, p);
      },
      py::arg("thrust"), py::arg("length"), py::arg("mass"), py::arg("params") = Params{});
}
