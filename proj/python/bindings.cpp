#include "srbvol/acceptance.hpp"
#include "srbvol/error.hpp"
#include "srbvol/format.hpp"
#include "srbvol/lyapunov.hpp"
#include "srbvol/manifold.hpp"
#include "srbvol/srb.hpp"
#include "srbvol/systems.hpp"
#include "srbvol/volume.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>

namespace py = pybind11;
using namespace srbvol;

namespace {

// Results cross the boundary as JSON text; the Python side loads it.
std::string dump(const json& j) { return j.dump(); }

std::optional<NormedSpace> maybe_space(const std::optional<std::string>& s) {
  if (!s) return std::nullopt;
  return NormedSpace::parse(*s);
}

SmoothSystem build(const std::string& system, const std::optional<std::string>& space) {
  auto sys = parse_system(system, maybe_space(space));
  validate_system(sys);
  return sys;
}

MonteCarloOptions mc(std::uint64_t seed, double rel_err, int workers) {
  MonteCarloOptions o;
  o.seed = seed;
  o.target_rel_err = rel_err;
  o.workers = workers;
  return o;
}

}  // namespace

PYBIND11_MODULE(_srbvol, m) {
  m.doc() = "Induced volumes, Lyapunov exponents and SRB densities";

  static py::exception<Error> base(m, "SrbvolError", PyExc_RuntimeError);
  static py::exception<InputError> input(m, "InputError", base.ptr());
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const InputError& e) {
      PyErr_SetString(input.ptr(), e.what());
    } catch (const Error& e) {
      PyErr_SetString(base.ptr(), (std::string(to_string(e.kind())) + ": " + e.what()).c_str());
    }
  });

  m.def("norm", [](const std::string& space, const Vector& v) { return NormedSpace::parse(space).norm(v); },
        py::arg("space"), py::arg("v"));

  m.def("unit_ball_coord_volume",
        [](const std::string& space, const Matrix& basis, std::uint64_t seed, double rel_err, int workers) {
          const auto v = unit_ball_coord_volume(Frame(NormedSpace::parse(space), basis), mc(seed, rel_err, workers));
          return py::make_tuple(v.value, v.std_error);
        },
        py::arg("space"), py::arg("basis"), py::arg("seed") = 1, py::arg("rel_err") = 1e-3, py::arg("workers") = 1);

  m.def("parallelepiped_volume",
        [](const std::string& space, const Matrix& basis, std::uint64_t seed, double rel_err, int workers) {
          const auto v =
              induced_volume_parallelepiped(Frame(NormedSpace::parse(space), basis), mc(seed, rel_err, workers));
          return py::make_tuple(v.value, v.std_error);
        },
        py::arg("space"), py::arg("basis"), py::arg("seed") = 1, py::arg("rel_err") = 1e-3, py::arg("workers") = 1);

  m.def("det",
        [](const std::string& space, const Matrix& a, const Matrix& basis, std::uint64_t seed, double rel_err) {
          const auto d = det_restricted(LinearMap::dense(a), Frame(NormedSpace::parse(space), basis),
                                        mc(seed, rel_err, 1));
          return py::make_tuple(d.value, d.std_error_log);
        },
        py::arg("space"), py::arg("a"), py::arg("basis"), py::arg("seed") = 1, py::arg("rel_err") = 1e-3);

  m.def("_lyapunov",
        [](const std::string& system, std::optional<std::string> space, long steps, std::uint64_t seed) {
          const auto sys = build(system, space);
          LyapunovOptions o;
          o.n_steps = steps;
          o.seed = seed;
          return dump(lyapunov_spectrum(sys, sys.attractor_point(), o).to_json());
        },
        py::arg("system"), py::arg("space") = py::none(), py::arg("steps") = 100000, py::arg("seed") = 1);

  m.def("_srb_density",
        [](const std::string& system, std::optional<std::string> space, int index, long points, int bins,
           std::uint64_t seed) {
          const auto sys = build(system, space);
          const auto orbit = split_orbit(sys, sys.attractor_point(), index + 10, 1, 80, seed);
          ManifoldOptions mo;
          mo.min_depth = std::min(100, index - 1);
          const auto man = local_unstable_manifold(sys, orbit, index, mo);
          const auto q = srb_density(sys, man.leaf(), distortion_table(sys, man, orbit));
          const auto masses = predicted_bin_masses(sys, man.leaf(), q, bins);
          json out = {{"profile", q.to_json()}, {"predicted", masses}};
          if (points > 0) {
            EmpiricalOptions eo;
            eo.n_orbit = points;
            eo.bins = bins;
            eo.seed = seed;
            out["empirical"] = empirical_conditional(sys, man.leaf(), eo, &masses).to_json();
          }
          return dump(out);
        },
        py::arg("system") = "solenoid", py::arg("space") = py::none(), py::arg("index") = 150,
        py::arg("points") = 0, py::arg("bins") = 64, py::arg("seed") = 1);

  m.def("_entropy_check",
        [](const std::string& system, std::optional<std::string> space, long steps, std::uint64_t seed) {
          const auto sys = build(system, space);
          LyapunovOptions o;
          o.n_steps = steps;
          o.seed = seed;
          EntropyOptions eo;
          eo.seed = seed;
          return dump(entropy_formula_report(sys, lyapunov_spectrum(sys, sys.attractor_point(), o), eo).to_json());
        },
        py::arg("system"), py::arg("space") = py::none(), py::arg("steps") = 100000, py::arg("seed") = 1);

  m.def("_suite",
        [](const std::string& level, std::uint64_t seed, int workers) {
          SuiteOptions o{level, seed, workers};
          py::gil_scoped_release release;
          const auto r = run_suite(o);
          return std::make_pair(r.all_pass(), to_json_text(r.to_json()));
        },
        py::arg("level") = "quick", py::arg("seed") = 42, py::arg("workers") = 1);
}
