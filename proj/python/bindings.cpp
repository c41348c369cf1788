#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "dcitl/common/error.hpp"
#include "dcitl/dba/weights.hpp"
#include "dcitl/experiments/config.hpp"
#include "dcitl/experiments/metrics.hpp"
#include "dcitl/experiments/report.hpp"
#include "dcitl/experiments/runner.hpp"
#include "dcitl/experiments/synthetic.hpp"

namespace py = pybind11;
using namespace dcitl;

namespace {

nn::Tensor to_tensor(const std::vector<std::vector<double>>& rows) {
  if (rows.empty()) throw std::invalid_argument("empty batch");
  nn::Tensor t({rows.size(), rows[0].size()});
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != rows[0].size()) throw std::invalid_argument("ragged batch");
    std::copy(rows[i].begin(), rows[i].end(), t.data().begin() + static_cast<std::ptrdiff_t>(i * rows[0].size()));
  }
  return t;
}

py::dict row_dict(const experiments::ResultRow& r) {
  py::dict d;
  d["method"] = r.method;
  d["source"] = r.source;
  d["target"] = r.target;
  d["ratio"] = r.ratio;
  d["seed"] = r.seed;
  d["status"] = r.status;
  for (std::size_t k = 0; k < r.metrics.size(); ++k) {
    if (r.metrics[k])
      d[experiments::kMetricColumns[k]] = *r.metrics[k];
    else
      d[experiments::kMetricColumns[k]] = py::none();
  }
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Distance-based domain adaptation for imbalanced sentiment classification";

  py::register_exception<StageError>(m, "StageError", PyExc_RuntimeError);

  m.def(
      "evaluate",
      [](const std::vector<int>& predictions, const std::vector<int>& gold, const std::string& context) {
        const auto report = experiments::evaluate(predictions, gold, experiments::context_from_string(context));
        return nlohmann::json(report).dump();
      },
      py::arg("predictions"), py::arg("gold"), py::arg("context") = "In",
      "Binary metrics as a JSON string (0 = negative, 1 = positive).");

  m.def(
      "instance_weights",
      [](const std::vector<std::vector<double>>& target, const std::vector<std::vector<double>>& source,
         const std::string& metric, double epsilon, const std::string& reference) {
        dba::WeightingConfig cfg;
        cfg.metric = dba::metric_from_string(metric);
        cfg.epsilon = epsilon;
        cfg.reference = dba::reference_from_string(reference);
        const auto w = dba::instance_weights(to_tensor(target), to_tensor(source), cfg);
        return py::make_tuple(w.weights, w.distances);
      },
      py::arg("target"), py::arg("source"), py::arg("metric") = "cosine", py::arg("epsilon") = 1e-6,
      py::arg("reference") = "source_batch_centroid", "Distance-based weights and the distances they came from.");

  m.def(
      "class_ratio_weights",
      [](const std::vector<int>& labels, std::size_t n_positive, std::size_t n_negative) {
        return dba::class_ratio_weights(labels, n_positive, n_negative);
      },
      py::arg("labels"), py::arg("n_positive"), py::arg("n_negative"));

  m.def("default_config", [] { return nlohmann::json(experiments::RunConfig{}).dump(); });
  m.def("config_hash", [](const std::string& config_json) {
    return experiments::config_hash(nlohmann::json::parse(config_json).get<experiments::RunConfig>());
  });

  m.def(
      "write_synthetic_domains",
      [](const std::filesystem::path& dir, const std::vector<std::string>& domains, std::uint64_t seed) {
        std::filesystem::create_directories(dir);
        experiments::SyntheticTextConfig cfg;
        for (const auto& d : domains)
          text::save_tsv(experiments::make_synthetic_reviews(cfg, d, seed), dir / (d + ".tsv"));
      },
      py::arg("data_dir"), py::arg("domains"), py::arg("seed") = 0);

  m.def(
      "run_grid",
      [](const std::string& config_json, const std::filesystem::path& out_dir) {
        auto config = nlohmann::json::parse(config_json).get<experiments::RunConfig>();
        config.validate();
        std::vector<experiments::ResultRow> rows;
        {
          py::gil_scoped_release release;
          experiments::Workspace ws(config, out_dir);
          rows = experiments::to_rows(experiments::run_grid(ws));
          experiments::emit_report(out_dir, rows, experiments::ReportFormat::csv);
          experiments::write_manifest(out_dir, {"grid", experiments::config_hash(config), config.seeds});
        }
        py::list out;
        for (const auto& r : rows) out.append(row_dict(r));
        return out;
      },
      py::arg("config_json"), py::arg("out_dir"), "Runs the grid; writes results.csv and the manifest.");

  m.def("read_results", [](const std::filesystem::path& path) {
    py::list out;
    for (const auto& r : experiments::read_results_csv(path)) out.append(row_dict(r));
    return out;
  });

  m.def(
      "emit_report",
      [](const std::filesystem::path& dir, const std::string& format) {
        const auto rows = experiments::read_results_csv(dir / "results.csv");
        return experiments::emit_report(dir, rows, experiments::report_format_from_string(format));
      },
      py::arg("out_dir"), py::arg("format"), "Writes a report from <out_dir>/results.csv; returns its path.");
}
