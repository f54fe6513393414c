#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "retrial/analytic.hpp"
#include "retrial/cli.hpp"
#include "retrial/errors.hpp"
#include "retrial/io.hpp"
#include "retrial/optimizer.hpp"
#include "retrial/oracles.hpp"
#include "retrial/simulator.hpp"

namespace py = pybind11;
using namespace retrial;
using io::json;

// Models and problems cross the boundary as JSON text; the Python wrapper
// converts dicts with json.dumps / json.loads.

namespace {

ModelSpec model(const std::string& text) { return io::model_from_json(io::parse(text, "<model>")); }

std::string analyze(const std::string& text, int pmf_max) {
  if (pmf_max < 0) throw ConfigError("pmf_max must be >= 0");
  return io::to_json(stationary_report(model(text), static_cast<std::size_t>(pmf_max))).dump();
}

std::string simulate(const std::string& text, std::uint64_t departures, std::uint64_t warmup, unsigned reps,
                     std::uint64_t seed, unsigned threads, std::size_t pmf_max) {
  const ModelSpec m = model(text);
  sim::SimConfig cfg;
  cfg.measured_departures = departures;
  cfg.warmup_departures = warmup;
  cfg.replications = reps;
  cfg.seed = seed;
  cfg.threads = threads;
  cfg.pmf_max = pmf_max;
  cfg.validate();
  sim::SimEstimates est;
  {
    py::gil_scoped_release release;
    est = sim::run(m, cfg);
  }
  return io::to_json(est).dump();
}

py::dict evaluate(const std::string& problem_text, const opt::Q& q) {
  const opt::AdmissionProblem p = io::problem_from_json(io::parse(problem_text, "<problem>"));
  const opt::Evaluation e = opt::evaluate(p, q);
  py::dict d;
  d["TH"] = e.TH;
  d["EX"] = e.EX;
  d["margin"] = e.margin;
  d["stable"] = e.stable;
  d["feasible"] = e.feasible;
  return d;
}

std::string optimize(const std::string& problem_text, unsigned restarts, std::uint64_t seed, unsigned threads) {
  const opt::AdmissionProblem p = io::problem_from_json(io::parse(problem_text, "<problem>"));
  opt::SolveOptions o;
  o.threads = threads;
  opt::AdmissionSolution s;
  {
    py::gil_scoped_release release;
    s = opt::solve(p, restarts, seed, o);
  }
  return io::to_json(s).dump();
}

std::vector<double> departure_orbit_pmf(const std::string& text, int n_max) {
  const ModelSpec m = model(text);
  if (!is_stable(m)) throw UnstableModel(stability_margin(m));
  return oracles::pgf_to_pmf([&](cplx z) { return embedded_pgf(m, z); }, n_max);
}

std::vector<double> truncated_chain(const std::string& text, std::size_t max_orbit, double tolerance) {
  return oracles::embedded_stationary_truncated(model(text), {max_orbit, tolerance});
}

py::tuple run_cli(const std::vector<std::string>& args) {
  std::vector<std::string> full{"retrialq"};
  full.insert(full.end(), args.begin(), args.end());
  std::vector<const char*> argv;
  for (const auto& a : full) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return py::make_tuple(code, out.str(), err.str());
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Bindings for the retrial-queue library; see the retrialq package for the dict-based API.";
  m.attr("__version__") = RETRIAL_VERSION;

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<UnstableModel>(m, "UnstableModel", PyExc_ArithmeticError);
  py::register_exception<TruncationInsufficient>(m, "TruncationInsufficient", PyExc_RuntimeError);
  py::register_exception<NotAPgf>(m, "NotAPgf", PyExc_ArithmeticError);

  m.def("stability_margin", [](const std::string& text) { return stability_margin(model(text)); },
        py::arg("model_json"));
  m.def("analyze", &analyze, py::arg("model_json"), py::arg("pmf_max") = 0);
  m.def("simulate", &simulate, py::arg("model_json"), py::arg("departures"), py::arg("warmup"), py::arg("reps"),
        py::arg("seed"), py::arg("threads") = 1, py::arg("pmf_max") = 64);
  m.def("evaluate", &evaluate, py::arg("problem_json"), py::arg("q"));
  m.def("optimize", &optimize, py::arg("problem_json"), py::arg("restarts") = 16, py::arg("seed") = 1,
        py::arg("threads") = 1);
  m.def("departure_orbit_pmf", &departure_orbit_pmf, py::arg("model_json"), py::arg("n_max"));
  m.def("truncated_chain", &truncated_chain, py::arg("model_json"), py::arg("max_orbit"),
        py::arg("tolerance") = 1e-10);
  m.def("run_cli", &run_cli, py::arg("args"), "Runs the command-line tool in-process: (exit, stdout, stderr).");
}
