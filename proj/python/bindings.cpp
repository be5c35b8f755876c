#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "mvlab/errors.hpp"
#include "mvlab/experiment.hpp"
#include "mvlab/linalg.hpp"
#include "mvlab/measure.hpp"
#include "mvlab/presets.hpp"
#include "mvlab/simulate.hpp"

namespace py = pybind11;
using namespace mvlab;

namespace {

const char* assumption_name(Dissipativity d) {
  switch (d) {
    case Dissipativity::E: return "E";
    case Dissipativity::F: return "F";
    default: return "none";
  }
}

py::dict preset_dict(const PresetInfo& p) {
  py::dict d;
  d["name"] = p.name;
  d["description"] = p.description;
  d["dim"] = p.dim;
  d["noise_dim"] = p.noise_dim;
  d["lambda"] = p.lambda;
  d["l"] = p.l;
  d["assumption"] = assumption_name(p.assumption);
  d["theta1"] = p.theta1;
  d["theta2"] = p.theta2;
  if (p.assumption != Dissipativity::None) d["theoretical_rate"] = p.theoretical_rate();
  d["parameters"] = p.parameters;
  return d;
}

py::dict result_dict(const RunResult& r) {
  py::list checks;
  for (const auto& c : r.manifest.checks) {
    py::dict item;
    item["name"] = c.name;
    item["pass"] = c.pass;
    item["detail"] = c.detail;
    checks.append(item);
  }
  py::dict d;
  d["passed"] = r.all_pass();
  d["checks"] = checks;
  d["fitted"] = r.manifest.fitted;
  d["warnings"] = r.manifest.warnings;
  d["config_hash"] = r.manifest.config_hash;
  d["wall_time"] = r.manifest.wall_time;
  d["csv_path"] = r.csv_path;
  d["manifest_path"] = r.manifest_path;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Compiled core of mvlab";

  static py::exception<Error> base(m, "MvlabError", PyExc_RuntimeError);
  static py::exception<ConfigInvalid> config_invalid(m, "ConfigInvalid", base.ptr());
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const ConfigInvalid& e) {
      py::set_error(config_invalid, e.what());
    } catch (const Error& e) {
      py::set_error(base, e.what());
    }
  });

  m.def("code_version", &code_version);
  m.def("list_presets", &list_presets, "Text catalogue of presets and config defaults.");
  m.def("presets", [] {
    py::list out;
    for (const auto& p : preset_catalogue()) out.append(preset_dict(p));
    return out;
  });

  m.def("resolve_config", [](const std::string& json_text) {
    return config_to_json(resolve_config(parse_config(json_text)));
  }, py::arg("config_json"), "Fills the defaults of a JSON config and returns it as JSON.");
  m.def("config_hash", [](const std::string& json_text) {
    return hash_hex(config_hash(resolve_config(parse_config(json_text))));
  }, py::arg("config_json"));
  m.def("run", [](const std::string& json_text) {
    RunResult r;
    {
      py::gil_scoped_release release;
      r = run(parse_config(json_text));
    }
    return result_dict(r);
  }, py::arg("config_json"), "Runs one experiment from a JSON config; returns checks and output paths.");

  m.def("psd_sqrt", [](const Mat& a) { return psd_sqrt(SymMatrix(a)).matrix(); }, py::arg("a"));
  m.def("decompose_noise", [](const Mat& a, double lambda) { return decompose_noise(SymMatrix(a), lambda).matrix(); },
        py::arg("a"), py::arg("lam"));
  m.def("matrix_exp", &matrix_exp, py::arg("A"), py::arg("t"));
  m.def("kalman_rank_index", &kalman_rank_index, py::arg("A"), py::arg("M"));
  m.def("gramian", [](const Mat& A, const Mat& M, double t) { return gramian(A, M, t).matrix(); },
        py::arg("A"), py::arg("M"), py::arg("t"));
  m.def("gramian_inverse_norm_slope", [](const Mat& A, const Mat& M, int l, const std::vector<double>& t) {
    const auto s = gramian_inverse_norm_slope(A, M, l, t);
    py::dict d;
    d["t"] = s.t;
    d["inverse_norm"] = s.inverse_norm;
    d["slope"] = s.fit.slope;
    d["bound_slope"] = s.bound_slope;
    d["within_bound"] = s.within_bound;
    return d;
  }, py::arg("A"), py::arg("M"), py::arg("l"), py::arg("t_grid"));

  m.def("wasserstein", [](const RowMat& x, const RowMat& y, double k) {
    return wasserstein_k(EmpiricalMeasure(x), EmpiricalMeasure(y), k);
  }, py::arg("x"), py::arg("y"), py::arg("k") = 2.0, "W_k between uniform point clouds (one point per row).");
  m.def("gaussian_kl", [](const Vec& m1, const Mat& c1, const Vec& m2, const Mat& c2) {
    return gaussian_kl({m1, SymMatrix(c1)}, {m2, SymMatrix(c2)});
  }, py::arg("mean_p"), py::arg("cov_p"), py::arg("mean_q"), py::arg("cov_q"));
  m.def("gaussian_w2_squared", [](const Vec& m1, const Mat& c1, const Vec& m2, const Mat& c2) {
    return gaussian_w2_squared({m1, SymMatrix(c1)}, {m2, SymMatrix(c2)});
  }, py::arg("mean_p"), py::arg("cov_p"), py::arg("mean_q"), py::arg("cov_q"));
  m.def("knn_relative_entropy", [](const RowMat& p, const RowMat& q, int k, std::uint64_t seed) {
    return knn_relative_entropy(p, q, k, seed);
  }, py::arg("sample_p"), py::arg("sample_q"), py::arg("k_nn") = 5, py::arg("seed") = 0);

  m.def("simulate", [](const std::string& preset, const RowMat& initial, double T, double h, std::uint64_t seed) {
    const auto model = make_preset(preset);
    LawFlow flow;
    {
      py::gil_scoped_release release;
      flow = simulate_law_flow(*model, EmpiricalMeasure(initial), T, h, initial.rows(), seed);
    }
    return flow.final_states();
  }, py::arg("preset"), py::arg("initial"), py::arg("T"), py::arg("h"), py::arg("seed") = 0,
     "Particle system of a preset from the given cloud; returns the states at time T.");
}
