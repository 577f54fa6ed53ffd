// Python bindings for the core operations: graph generation, Green
// operators, field sampling, extremal statistics, comparison sums, and the
// full pipelines (config json in, report json out).

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "gffx/comparison.hpp"
#include "gffx/error.hpp"
#include "gffx/extremes.hpp"
#include "gffx/gff.hpp"
#include "gffx/graphgen.hpp"
#include "gffx/green.hpp"
#include "gffx/pipeline.hpp"
#include "gffx/rng.hpp"

namespace py = pybind11;
using namespace gffx;

namespace {

gff::FieldKind kind_from_string(const std::string& s) {
  if (s == "tree") return gff::FieldKind::tree;
  if (s == "graph") return gff::FieldKind::graph;
  if (s == "iid") return gff::FieldKind::iid;
  fail(ErrorKind::invalid_parameters, "unknown field kind '" + s + "'");
}

std::string run_pipeline_json(const std::string& config_text) {
  auto c = pipeline::parse_config(config_text);
  pipeline::RunReport rep = c.mode == pipeline::Mode::graph
                                ? pipeline::run_graph_pipeline(c)
                                : pipeline::run_tree_pipeline(c);
  pipeline::write_outputs(rep);
  return pipeline::report_to_json(rep);
}

std::string run_comparison_json(const std::string& config_text) {
  auto c = pipeline::parse_config(config_text);
  pipeline::RunReport rep = pipeline::run_comparison_suite(c);
  pipeline::write_outputs(rep);
  return pipeline::report_to_json(rep);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Gaussian free field extremes on regular trees and random regular graphs";

  py::register_exception<Error>(m, "GffxError");

  py::class_<graphgen::RegularGraph>(m, "Graph")
      .def_property_readonly("n", [](const graphgen::RegularGraph& g) { return g.n_vertices; })
      .def_property_readonly("r", [](const graphgen::RegularGraph& g) { return g.degree; })
      .def("neighbors",
           [](const graphgen::RegularGraph& g, std::uint32_t x) {
             auto span = g.neighbors(x);
             return std::vector<std::uint32_t>(span.begin(), span.end());
           })
      .def("edges", [](const graphgen::RegularGraph& g) {
        std::vector<std::pair<std::uint32_t, std::uint32_t>> out;
        for (std::uint32_t x = 0; x < g.n_vertices; ++x)
          for (std::uint32_t y : g.neighbors(x))
            if (x < y) out.emplace_back(x, y);
        return out;
      });

  m.def("generate_graph",
        [](std::uint32_t n, std::uint32_t r, std::uint64_t seed) {
          return graphgen::generate_simple(n, r, seed).graph;
        },
        py::arg("n"), py::arg("r"), py::arg("seed"),
        "Uniform random r-regular simple graph by rejection from the matching model");
  m.def("petersen_graph", &graphgen::petersen_graph);
  m.def("complete_graph_k4", &graphgen::complete_graph_k4);

  m.def("vertex_census",
        [](const graphgen::RegularGraph& g, std::uint32_t ell) {
          auto census = graphgen::vertex_census(g, ell);
          return py::make_tuple(census.good_flags, census.bad_count);
        },
        py::arg("graph"), py::arg("ell"),
        "Per-vertex tree-like flags and the count of cycle-touched vertices");

  m.def("tree_green", &green::tree_green, py::arg("r"), py::arg("d"),
        "Green function of the walk on the infinite r-regular tree");
  m.def("green_matrix",
        [](const graphgen::RegularGraph& g) { return green::zero_average_green(g).matrix; },
        py::arg("graph"), "Zero-average Green operator as a dense matrix");
  m.def("heat_kernel_deviation",
        [](const graphgen::RegularGraph& g, double t) {
          auto d = green::heat_kernel_max_deviation(g, t);
          return py::make_tuple(d.deviation, d.bound, d.kappa, d.within_bound);
        },
        py::arg("graph"), py::arg("t"));

  m.def("sample_tree",
        [](std::uint32_t n, std::uint32_t r, std::uint64_t seed, std::uint64_t stream) {
          auto t = gff::build_subtree(n, r);
          auto rng = Rng::for_stream(seed, stream);
          return gff::sample_tree_gff(t, rng).values;
        },
        py::arg("n"), py::arg("r"), py::arg("seed"), py::arg("stream") = 1);
  m.def("sample_graph",
        [](const graphgen::RegularGraph& g, std::uint64_t seed, std::uint64_t stream) {
          auto G = green::zero_average_green(g);
          auto f = gff::factor_green(G);
          auto rng = Rng::for_stream(seed, stream);
          return gff::sample_graph_gff(f, rng).values;
        },
        py::arg("graph"), py::arg("seed"), py::arg("stream") = 1);
  m.def("sample_iid",
        [](std::uint32_t n, std::uint64_t seed, std::uint64_t stream) {
          auto rng = Rng::for_stream(seed, stream);
          return gff::sample_iid_field(n, rng).values;
        },
        py::arg("n"), py::arg("seed"), py::arg("stream") = 1);

  m.def("rescaling_constants",
        [](std::uint32_t n, std::uint32_t r) {
          auto c = extremes::rescaling_constants(n, r);
          py::dict d;
          d["n"] = c.n;
          d["r"] = c.degree;
          d["sigma_r"] = c.sigma_r;
          d["a_n"] = c.a_n;
          d["b_n"] = c.b_n;
          return d;
        },
        py::arg("n"), py::arg("r"));
  m.def("extract_points",
        [](const Eigen::VectorXd& values, std::uint32_t r, const std::string& kind) {
          gff::FieldSample s;
          s.kind = kind_from_string(kind);
          s.values = values;
          auto c = extremes::rescaling_constants(
              static_cast<std::uint32_t>(values.size()), r);
          return extremes::extract_process(s, c).points;
        },
        py::arg("values"), py::arg("r"), py::arg("kind") = "graph",
        "Rescaled field values in decreasing order");
  m.def("gumbel_cdf", &extremes::gumbel_cdf, py::arg("t"));

  m.def("h_function", &comparison::h_function, py::arg("rho"), py::arg("a"),
        "Pair bound (1-rho^2)^{-1/2} exp(-a^2/(1+rho))");
  m.def("bivariate_bound",
        [](double rho, double u, std::pair<double, double> window) {
          return comparison::bivariate_bound(rho, u, {window.first, window.second});
        },
        py::arg("rho"), py::arg("u"), py::arg("window"));
  m.def("comparison_sum_tree",
        [](std::uint32_t n, std::uint32_t r) {
          auto s = comparison::comparison_sum_tree(n, r);
          py::dict d;
          d["n"] = s.n_vertices;
          d["exact_sum"] = s.exact_sum;
          d["monotone_bound"] = s.monotone_bound;
          d["c_tilde"] = s.c_tilde;
          d["fitted_exponent"] = s.fitted_exponent;
          return d;
        },
        py::arg("n"), py::arg("r"));

  m.def("run_pipeline", &run_pipeline_json, py::arg("config"),
        "Run the tree/iid/graph pipeline for a config (text or json); returns report json");
  m.def("run_comparison_suite", &run_comparison_json, py::arg("config"),
        "Run the comparison verification suite; returns report json");
  m.def("default_config",
        [](const std::string& mode) {
          pipeline::ExperimentConfig c;
          c.mode = pipeline::mode_from_string(mode);
          return pipeline::config_to_json(c);
        },
        py::arg("mode") = "tree");
}
