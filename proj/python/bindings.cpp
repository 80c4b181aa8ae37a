#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "citywalk/config.hpp"
#include "citywalk/evalkit.hpp"
#include "citywalk/planner.hpp"
#include "citywalk/runtime.hpp"
#include "citywalk/spatial.hpp"

namespace py = pybind11;
using namespace citywalk;

namespace {

using Coords = std::vector<std::pair<double, double>>;  // (longitude, latitude)

std::vector<GeoPoint> points_of(const Coords& coords) {
  std::vector<GeoPoint> out;
  for (const auto& [lon, lat] : coords) out.emplace_back(lon, lat);
  return out;
}

SAParams sa_params(double t_init, double t_min, double alpha, std::size_t max_iters, std::uint64_t seed) {
  SAParams p;
  p.t_init = t_init;
  p.t_min = t_min;
  p.alpha = alpha;
  p.max_iters = max_iters;
  p.seed = seed;
  p.validate();
  return p;
}

py::tuple solution(const TourSolution& s) { return py::make_tuple(s.order, s.cost); }

std::string plan_json(const std::string& request, const std::string& city,
                      const std::optional<std::string>& config_path, const std::string& variant_name,
                      const std::string& style, const std::map<std::string, std::string>& overrides) {
  const auto variant = parse_variant(variant_name);
  if (!variant) throw std::invalid_argument("unknown variant '" + variant_name + "'");
  Config config = load_config(config_path ? std::optional<std::filesystem::path>(*config_path) : std::nullopt);
  auto gateway = make_gateway(config);
  const auto prompts = make_prompts(config);
  auto store = load_store(config);
  ensure_embeddings(store, *gateway);
  PlanRequest req{request, city, style, overrides};
  py::gil_scoped_release release;
  return to_json(plan(req, store, *gateway, prompts, config, *variant), config.emit_timings).dump();
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Native core of the citywalk itinerary planner";

  static py::exception<PlanError> plan_error(m, "PlanError");
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const PlanError& e) {
      py::set_error(plan_error, e.to_json().dump().c_str());
    } catch (const ConfigError& e) {
      PyErr_SetString(PyExc_ValueError, e.what());
    }
  });

  m.def("haversine", [](double lon1, double lat1, double lon2, double lat2) {
    return haversine_distance(GeoPoint(lon1, lat1), GeoPoint(lon2, lat2));
  }, py::arg("lon1"), py::arg("lat1"), py::arg("lon2"), py::arg("lat2"),
        "Great-circle distance in meters.");

  m.def("distance_matrix", [](const Coords& coords) {
    const auto d = build_distance_matrix(points_of(coords));
    std::vector<std::vector<double>> rows;
    for (std::size_t i = 0; i < d.size(); ++i) rows.emplace_back(d.row(i).begin(), d.row(i).end());
    return rows;
  }, py::arg("coords"));

  m.def("solve_tsp_sa", [](const std::vector<std::vector<double>>& rows, double t_init, double t_min,
                           double alpha, std::size_t max_iters, std::uint64_t seed) {
    return solution(solve_tsp_sa(DistanceMatrix::from_rows(rows), sa_params(t_init, t_min, alpha, max_iters, seed)));
  }, py::arg("matrix"), py::arg("t_init") = 5000.0, py::arg("t_min") = 1e-3, py::arg("alpha") = 0.99,
        py::arg("max_iters") = 200000, py::arg("seed") = 0,
        "Closed tour by simulated annealing. Returns (order, cost).");

  m.def("solve_path_fixed_endpoints", [](const std::vector<std::vector<double>>& rows, std::size_t start,
                                         std::size_t end) {
    return solution(solve_path_fixed_endpoints(DistanceMatrix::from_rows(rows), start, end));
  }, py::arg("matrix"), py::arg("start"), py::arg("end"),
        "Exact shortest Hamiltonian path between two fixed nodes. Returns (order, cost).");

  m.def("average_margin", [](const std::vector<std::vector<double>>& rows) {
    const auto r = average_margin(DistanceMatrix::from_rows(rows));
    py::dict out;
    out["meters_per_poi"] = r.meters_per_poi;
    out["route_m"] = r.route_m;
    out["optimal_m"] = r.optimal_m;
    out["approximate"] = r.approximate;
    return out;
  }, py::arg("matrix"), "Excess length per POI of the order 0..n-1 over the best open path.");

  m.def("overlaps", [](const Coords& coords) { return count_self_intersections(points_of(coords)); },
        py::arg("coords"), "Self-intersections of the polyline through the points.");

  m.def("recall_rate", [](const std::vector<PoiId>& generated, const std::vector<PoiId>& truth) {
    return recall_rate(generated, truth);
  }, py::arg("generated"), py::arg("truth"));

  m.def("stub_embed", [](const std::string& text, std::size_t dim) { return stub_embed(text, dim); },
        py::arg("text"), py::arg("dim") = 256);

  m.def("default_config", [] { return render_config(Config{}); }, "Every config key with its default, as INI.");

  m.def("plan_json", &plan_json, py::arg("request"), py::arg("city"), py::arg("config") = py::none(),
        py::arg("variant") = "full", py::arg("style") = "",
        py::arg("overrides") = std::map<std::string, std::string>{},
        "Runs the planner with the given config file and returns the response document as JSON text.");
}
