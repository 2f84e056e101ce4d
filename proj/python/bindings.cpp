#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cmath>
#include <sstream>

#include "cpl/cluster.hpp"
#include "cpl/errors.hpp"
#include "cpl/harness.hpp"
#include "cpl/iso.hpp"
#include "cpl/samplers.hpp"
#include "cpl/walk.hpp"

namespace py = pybind11;
using namespace cpl;

namespace {

Point to_point(const std::vector<std::int64_t>& v) {
  if (v.empty() || v.size() > static_cast<std::size_t>(kMaxDim)) throw UsageError("point dimension out of range");
  Point p(static_cast<int>(v.size()));
  for (std::size_t a = 0; a < v.size(); ++a) p[static_cast<int>(a)] = v[a];
  return p;
}

py::array_t<std::int64_t> points_array(const Window& w, std::span<const std::size_t> sites) {
  py::array_t<std::int64_t> out({static_cast<py::ssize_t>(sites.size()), static_cast<py::ssize_t>(w.dim())});
  auto m = out.mutable_unchecked<2>();
  for (std::size_t i = 0; i < sites.size(); ++i) {
    const Point p = w.point(sites[i]);
    for (int a = 0; a < w.dim(); ++a) m(static_cast<py::ssize_t>(i), a) = p[a];
  }
  return out;
}

SiteSet site_set(const Config& c, const std::vector<std::vector<std::int64_t>>& pts) {
  std::vector<Point> p;
  p.reserve(pts.size());
  for (const auto& v : pts) p.push_back(to_point(v));
  return make_site_set(c, p);
}

py::dict report_dict(const RunReport& r) {
  py::dict d;
  d["spec_hash"] = r.spec_hash;
  d["version"] = r.version;
  d["passed"] = r.passed();
  d["failed_stage"] = r.failed_stage;
  d["error"] = r.error;
  py::list checks;
  for (const auto& c : r.checks) {
    py::dict e;
    e["name"] = c.name;
    e["status"] = c.status == CheckStatus::pass ? "pass" : c.status == CheckStatus::fail ? "fail" : "skipped";
    py::dict m;
    for (const auto& [k, v] : c.measured) m[py::str(k)] = v;
    e["measured"] = m;
    e["note"] = c.note;
    checks.append(e);
  }
  d["checks"] = checks;
  py::dict t;
  for (const auto& [k, v] : r.timings_ms) t[py::str(k)] = v;
  d["timings_ms"] = t;
  return d;
}

ExperimentSpec spec_from(const py::dict& kv) {
  ExperimentSpec s;
  for (const auto& [k, v] : kv) {
    std::string value;
    if (py::isinstance<py::bool_>(v)) {
      value = v.cast<bool>() ? "1" : "0";
    } else if (py::isinstance<py::list>(v) || py::isinstance<py::tuple>(v)) {
      std::ostringstream os;
      bool first = true;
      for (const auto& item : v) {
        os << (first ? "" : ",") << py::str(item).cast<std::string>();
        first = false;
      }
      value = os.str();
    } else {
      value = py::str(v).cast<std::string>();
    }
    set_spec_key(s, py::str(k).cast<std::string>(), value);
  }
  return s;
}

}  // namespace

PYBIND11_MODULE(_cpl, m) {
  m.doc() = "Percolation cluster isoperimetry and random walk core";
  py::register_exception<UsageError>(m, "UsageError", PyExc_ValueError);
  py::register_exception<ParameterError>(m, "ParameterError", PyExc_ValueError);
  py::register_exception<ContractViolation>(m, "ContractViolation", PyExc_RuntimeError);
  py::register_exception<SolverError>(m, "SolverError", PyExc_RuntimeError);
  py::register_exception<StageError>(m, "StageError", PyExc_RuntimeError);

  py::class_<Config>(m, "Config")
      .def_property_readonly("dim", &Config::dim)
      .def_property_readonly("side", [](const Config& c) { return c.window().side(); })
      .def_property_readonly("low", [](const Config& c) { return c.window().low(); })
      .def_property_readonly("wrap", [](const Config& c) { return c.window().wrap(); })
      .def("count", &Config::count)
      .def("occupied", [](const Config& c, const std::vector<std::int64_t>& p) { return c.occupied(to_point(p)); })
      .def("occupancy", [](const Config& c) {
        std::vector<py::ssize_t> shape(static_cast<std::size_t>(c.dim()), static_cast<py::ssize_t>(c.window().side()));
        py::array_t<std::uint8_t> out(shape);
        std::copy(c.occupancy().begin(), c.occupancy().end(), out.mutable_data());
        return out;
      }, "Occupancy as a d-dimensional uint8 array; axis 0 is the first coordinate.");

  m.def("sample", [](const std::string& model, int d, std::int64_t N, double u, std::uint64_t seed, bool wrap,
                     std::int64_t low) {
    ModelSpec s;
    s.kind = parse_model_kind(model);
    s.u = u;
    s.window = Window(d, N, wrap, low);
    s.seed = seed;
    return sample(s);
  }, py::arg("model") = "bernoulli", py::arg("d") = 2, py::arg("N") = 64, py::arg("u") = 0.75, py::arg("seed") = 1,
        py::arg("wrap") = false, py::arg("low") = 0);

  m.def("largest_component", [](const Config& c) {
    const auto lc = largest_component(c, std::nullopt);
    return py::make_tuple(points_array(c.window(), lc.sites), lc.unique);
  }, "Sites of the largest cluster and whether it is unique.");
  m.def("ball_component", [](const Config& c, std::int64_t R) {
    return points_array(c.window(), ball_component(c, R));
  }, "Largest cluster of S inside B(0, R).");
  m.def("chemical_distance", [](const Config& c, const std::vector<std::int64_t>& x,
                                const std::vector<std::int64_t>& y) -> py::object {
    const auto r = chemical_distance(c, to_point(x), to_point(y));
    if (r.infinite()) return py::float_(INFINITY);
    return py::int_(*r.value);
  });
  m.def("edge_boundary", [](const Config& c, const std::vector<std::vector<std::int64_t>>& pts) {
    return edge_boundary(c, site_set(c, pts));
  });

  m.def("heuristic_profile", [](const Config& c, std::int64_t R, double theta_iso, std::size_t budget,
                                std::uint64_t seed) {
    ProfileOptions o;
    o.floor = size_floor(R, theta_iso);
    o.budget = budget;
    o.seed = seed;
    const auto rep = heuristic_profile(c, ball_component(c, R), o);
    py::dict d;
    d["min_ratio"] = rep.min_ratio;
    d["candidates"] = rep.candidates;
    d["floor"] = rep.floor;
    d["argmin"] = points_array(c.window(), rep.argmin);
    d["method"] = rep.best.method;
    return d;
  }, py::arg("config"), py::arg("R"), py::arg("theta_iso") = 0.5, py::arg("budget") = 60, py::arg("seed") = 0);

  m.def("simulate_walk", [](const Config& c, const std::vector<std::int64_t>& x0, std::int64_t n, std::uint64_t seed) {
    const auto path = simulate_walk(c, to_point(x0), n, seed);
    py::array_t<std::int64_t> out({static_cast<py::ssize_t>(path.sites.size()), static_cast<py::ssize_t>(c.dim())});
    auto v = out.mutable_unchecked<2>();
    for (std::size_t i = 0; i < path.sites.size(); ++i) {
      for (int a = 0; a < c.dim(); ++a) v(static_cast<py::ssize_t>(i), a) = path.sites[i][a];
    }
    return out;
  }, "Unwrapped positions X_0..X_n.");
  m.def("return_probability", [](const Config& c, const std::vector<std::int64_t>& x, std::int64_t n_max) {
    const auto r = return_probability(c, to_point(x), n_max);
    return py::make_tuple(py::array_t<double>(static_cast<py::ssize_t>(r.p.size()), r.p.data()), r.horizon, r.truncated);
  }, "P_x[X_k = x] for k = 0..horizon, the horizon and the truncation flag.");
  m.def("estimate_corrector", [](const Config& c, const std::vector<std::int64_t>& anchor, std::int64_t radius,
                                 double tol) {
    const Point a = to_point(anchor);
    const auto f = estimate_corrector(c, linf_ball(a, static_cast<double>(radius)), a, tol);
    py::array_t<std::int64_t> sites({static_cast<py::ssize_t>(f.sites.size()), static_cast<py::ssize_t>(f.d)});
    auto s = sites.mutable_unchecked<2>();
    for (std::size_t i = 0; i < f.sites.size(); ++i) {
      for (int k = 0; k < f.d; ++k) s(static_cast<py::ssize_t>(i), k) = f.sites[i][k];
    }
    py::array_t<double> chi({static_cast<py::ssize_t>(f.sites.size()), static_cast<py::ssize_t>(f.d)});
    std::copy(f.chi.begin(), f.chi.end(), chi.mutable_data());
    return py::make_tuple(sites, chi, f.residual);
  }, py::arg("config"), py::arg("anchor"), py::arg("radius"), py::arg("tol") = 1e-8);

  m.def("spec_keys", &spec_keys);
  m.def("run_experiment", [](const py::dict& spec) { return report_dict(run_experiment(spec_from(spec))); },
        "Runs the pipeline for a dict of spec keys and returns the report as a dict.");
  m.def("format_spec", [](const py::dict& spec) {
    std::ostringstream os;
    write_spec(os, spec_from(spec));
    return os.str();
  });
}
