#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "rbf/analyze.hpp"
#include "rbf/errors.hpp"
#include "rbf/long_csv.hpp"
#include "rbf/mem.hpp"
#include "rbf/model_space.hpp"
#include "rbf/oracle.hpp"
#include "rbf/prior.hpp"
#include "rbf/report.hpp"
#include "rbf/rng.hpp"
#include "rbf/simulate.hpp"

namespace py = pybind11;
using namespace rbf;

namespace {

Dataset make_dataset_py(const std::vector<double>& primary,
                        const std::vector<std::vector<double>>& supplements,
                        const std::map<std::string, std::vector<double>>& characteristics,
                        const std::map<std::string, std::vector<std::vector<double>>>& parameters) {
  Dataset dataset;
  dataset.primary = SourceData::from_samples(primary);
  for (const auto& samples : supplements) {
    dataset.supplements.push_back(SourceData::from_samples(samples));
  }
  dataset.characteristics = characteristics;
  dataset.parameters = parameters;
  dataset.validate();
  return dataset;
}

} // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Multisource exchangeability models with distance-embedded priors";
#ifdef RBF_VERSION
  m.attr("__version__") = RBF_VERSION;
#endif

  py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);
  py::register_exception<CapacityError>(m, "CapacityError", PyExc_ValueError);
  py::register_exception<OracleFailure>(m, "OracleFailure", PyExc_RuntimeError);

  py::class_<SourceSummary>(m, "SourceSummary")
      .def(py::init<int, double, double>(), py::arg("n"), py::arg("mean"), py::arg("sd"))
      .def_readonly("n", &SourceSummary::n)
      .def_readonly("mean", &SourceSummary::mean)
      .def_readonly("sd", &SourceSummary::sd)
      .def("precision", &SourceSummary::precision)
      .def("mean_variance", &SourceSummary::mean_variance)
      .def("__repr__", [](const SourceSummary& s) {
        return "SourceSummary(n=" + std::to_string(s.n) + ", mean=" + format_double(s.mean) +
               ", sd=" + format_double(s.sd) + ")";
      });

  py::class_<ModelConfiguration>(m, "ModelConfiguration")
      .def(py::init<std::uint32_t, int>(), py::arg("index"), py::arg("num_supplements"))
      .def_readonly("index", &ModelConfiguration::index)
      .def_readonly("num_supplements", &ModelConfiguration::num_supplements)
      .def("includes", &ModelConfiguration::includes)
      .def("count", &ModelConfiguration::count)
      .def("inclusion", &ModelConfiguration::inclusion);

  py::class_<Dataset>(m, "Dataset")
      .def(py::init(&make_dataset_py), py::arg("primary"), py::arg("supplements"),
           py::arg("characteristics") = std::map<std::string, std::vector<double>>{},
           py::arg("parameters") = std::map<std::string, std::vector<std::vector<double>>>{})
      .def_property_readonly("num_supplements", &Dataset::num_supplements)
      .def("source_means", &Dataset::source_means)
      .def_property_readonly("primary_summary",
                             [](const Dataset& d) { return d.primary.summary; })
      .def("supplement_summaries", &Dataset::supplement_summaries);

  py::enum_<WeightScheme>(m, "WeightScheme")
      .value("SD_RATIO", WeightScheme::kSdRatio)
      .value("INVERSE_VARIANCE", WeightScheme::kInverseVariance);

  py::enum_<ParameterMode>(m, "ParameterMode")
      .value("COLLAPSE", ParameterMode::kCollapse)
      .value("JEFFREYS", ParameterMode::kJeffreys);

  py::class_<RbfConfig>(m, "RbfConfig")
      .def(py::init<>())
      .def_readwrite("a", &RbfConfig::a)
      .def_readwrite("rho", &RbfConfig::rho)
      .def_readwrite("weight_scheme", &RbfConfig::weight_scheme)
      .def_readwrite("parameter_mode", &RbfConfig::parameter_mode);

  py::class_<MixtureComponent>(m, "MixtureComponent")
      .def_readonly("weight", &MixtureComponent::weight)
      .def_readonly("mean", &MixtureComponent::mean)
      .def_readonly("variance", &MixtureComponent::variance);

  py::class_<PosteriorMixture>(m, "PosteriorMixture")
      .def_readonly("components", &PosteriorMixture::components);

  m.def("sufficient_stats",
        [](const std::vector<double>& samples) { return sufficient_stats(samples); },
        py::arg("samples"));
  m.def("enumerate_models", &enumerate_models, py::arg("num_supplements"),
        py::arg("max_supplements") = kDefaultMaxSupplements);
  m.def("flat_prior", &flat_prior, py::arg("num_supplements"));
  m.def("log_marginal_likelihood",
        [](const SourceSummary& primary, const std::vector<SourceSummary>& supplements,
           const ModelConfiguration& model) {
          return log_marginal_likelihood(primary, supplements, model);
        },
        py::arg("primary"), py::arg("supplements"), py::arg("model"));
  m.def("posterior_weights",
        [](const SourceSummary& primary, const std::vector<SourceSummary>& supplements,
           const PriorVector& prior) { return posterior_weights(primary, supplements, prior); },
        py::arg("primary"), py::arg("supplements"), py::arg("prior"));
  m.def("conditional_posterior",
        [](const SourceSummary& primary, const std::vector<SourceSummary>& supplements,
           const ModelConfiguration& model) {
          const Moments moments = conditional_posterior(primary, supplements, model);
          return std::make_pair(moments.mean, moments.variance);
        },
        py::arg("primary"), py::arg("supplements"), py::arg("model"));
  m.def("posterior_mixture",
        [](const SourceSummary& primary, const std::vector<SourceSummary>& supplements,
           const PriorVector& prior) { return posterior_mixture(primary, supplements, prior); },
        py::arg("primary"), py::arg("supplements"), py::arg("prior"));
  m.def("mixture_moments",
        [](const PosteriorMixture& mixture) {
          const Moments moments = mixture_moments(mixture);
          return std::make_pair(moments.mean, moments.variance);
        },
        py::arg("mixture"));
  m.def("esss", &esss, py::arg("posterior_variance"), py::arg("primary"));

  m.def("pooled_minmax_normalize",
        [](const std::vector<double>& values) {
          bool degenerate = false;
          auto out = pooled_minmax_normalize(values, degenerate);
          return std::make_pair(out, degenerate);
        },
        py::arg("values"));
  m.def("sed_distance", &sed_distance, py::arg("eta_primary"), py::arg("eta_supplement"));
  m.def("jeffreys_divergence",
        [](double mean_p, double sd_p, double mean_h, double sd_h) {
          return jeffreys_divergence(GaussianFit{mean_p, sd_p}, GaussianFit{mean_h, sd_h});
        },
        py::arg("mean_p"), py::arg("sd_p"), py::arg("mean_h"), py::arg("sd_h"));
  m.def("collapse_parameter",
        [](const std::vector<std::vector<double>>& samples) { return collapse_parameter(samples); },
        py::arg("samples"));
  m.def("pearson_correlation",
        [](const std::vector<double>& x, const std::vector<double>& y) {
          return pearson_correlation(x, y);
        },
        py::arg("x"), py::arg("y"));
  m.def("mixed_prior", &mixed_prior, py::arg("distance_prior"), py::arg("a"));
  m.def("build_rbf_prior", &build_rbf_prior, py::arg("dataset"), py::arg("config"));

  py::enum_<Method>(m, "Method")
      .value("MEM", Method::kMem)
      .value("RBF", Method::kRbf)
      .value("NAIVE", Method::kNaive);

  py::enum_<Truncation>(m, "Truncation")
      .value("NONE", Truncation::kNone)
      .value("PRIMARY_ABOVE", Truncation::kPrimaryAbove)
      .value("PRIMARY_BELOW", Truncation::kPrimaryBelow)
      .value("SUPP_UNIF", Truncation::kSuppUnif)
      .value("SUPP_MIXED", Truncation::kSuppMixed);

  py::enum_<BaseDist>(m, "BaseDist")
      .value("NORMAL", BaseDist::kNormal)
      .value("EXPONENTIAL", BaseDist::kExponential);

  py::class_<ScenarioConfig>(m, "ScenarioConfig")
      .def(py::init<>())
      .def_readwrite("scenario", &ScenarioConfig::scenario)
      .def_readwrite("num_exchangeable", &ScenarioConfig::num_exchangeable)
      .def_readwrite("num_nonexchangeable", &ScenarioConfig::num_nonexchangeable)
      .def_readwrite("n_primary", &ScenarioConfig::n_primary)
      .def_readwrite("supp_size_min", &ScenarioConfig::supp_size_min)
      .def_readwrite("supp_size_max", &ScenarioConfig::supp_size_max)
      .def_readwrite("correlations", &ScenarioConfig::correlations)
      .def_readwrite("base_dist", &ScenarioConfig::base_dist)
      .def_readwrite("correlation_matrix", &ScenarioConfig::correlation_matrix)
      .def_readwrite("truncation", &ScenarioConfig::truncation)
      .def_readwrite("rbf", &ScenarioConfig::rbf)
      .def_readwrite("reps", &ScenarioConfig::reps)
      .def_readwrite("seed", &ScenarioConfig::seed);

  py::class_<RepMetrics>(m, "RepMetrics")
      .def_readonly("method", &RepMetrics::method)
      .def_readonly("posterior_mean", &RepMetrics::posterior_mean)
      .def_readonly("posterior_variance", &RepMetrics::posterior_variance)
      .def_readonly("bias", &RepMetrics::bias)
      .def_readonly("squared_error", &RepMetrics::squared_error)
      .def_readonly("correct_model_weight", &RepMetrics::correct_model_weight)
      .def_readonly("esss", &RepMetrics::esss);

  py::class_<ReplicationRecord>(m, "ReplicationRecord")
      .def_readonly("rep", &ReplicationRecord::rep)
      .def_readonly("metrics", &ReplicationRecord::metrics);

  m.def("run_scenario", &run_scenario, py::arg("config"), py::arg("num_threads") = 1,
        py::call_guard<py::gil_scoped_release>());
  m.def("run_replication", &run_replication, py::arg("dataset"), py::arg("method"),
        py::arg("rbf_config"), py::arg("ground_truth"), py::arg("correct_model_index"));
  m.def("summary_json",
        [](const std::vector<ReplicationRecord>& records) {
          return summary_json(aggregate(records)).dump();
        },
        py::arg("records"), "Aggregate replications and return the summary as a JSON string");
  m.def("rep_csv", [](const std::vector<ReplicationRecord>& records) {
    return rep_csv_string(records);
  });

  py::class_<AnalyzeConfig>(m, "AnalyzeConfig")
      .def(py::init<>())
      .def_readwrite("data_path", &AnalyzeConfig::data_path)
      .def_readwrite("primary_id", &AnalyzeConfig::primary_id)
      .def_readwrite("subsample_n", &AnalyzeConfig::subsample_n)
      .def_readwrite("whole_supplements", &AnalyzeConfig::whole_supplements)
      .def_readwrite("reps", &AnalyzeConfig::reps)
      .def_readwrite("seed", &AnalyzeConfig::seed)
      .def_readwrite("rbf", &AnalyzeConfig::rbf);

  py::class_<AnalyzeResult>(m, "AnalyzeResult")
      .def_readonly("source_ids", &AnalyzeResult::source_ids)
      .def_readonly("primaries", &AnalyzeResult::primaries)
      .def_readonly("record_labels", &AnalyzeResult::record_labels)
      .def_readonly("records", &AnalyzeResult::records)
      .def_readonly("mem_borrow_weights", &AnalyzeResult::mem_borrow_weights)
      .def_readonly("rbf_borrow_weights", &AnalyzeResult::rbf_borrow_weights);

  m.def("run_analyze", &run_analyze, py::arg("config"), py::arg("num_threads") = 1,
        py::call_guard<py::gil_scoped_release>());
  m.def("load_long_csv", &load_long_csv, py::arg("path"));
  m.def("make_dataset", &make_dataset, py::arg("pool"), py::arg("primary_id"));

  py::class_<SourcePool>(m, "SourcePool")
      .def_readonly("source_ids", &SourcePool::source_ids)
      .def_readonly("targets", &SourcePool::targets);

  py::class_<QuadratureSpec>(m, "QuadratureSpec")
      .def(py::init<>())
      .def_readwrite("lower", &QuadratureSpec::lower)
      .def_readwrite("upper", &QuadratureSpec::upper)
      .def_readwrite("nodes", &QuadratureSpec::nodes);

  m.def("auto_quadrature_spec",
        [](const SourceSummary& primary, const std::vector<SourceSummary>& supplements) {
          return auto_quadrature_spec(primary, supplements);
        },
        py::arg("primary"), py::arg("supplements"));
  m.def("marginal_likelihood_quadrature",
        [](const SourceSummary& primary, const std::vector<SourceSummary>& supplements,
           const ModelConfiguration& model, const QuadratureSpec& spec) {
          return marginal_likelihood_quadrature(primary, supplements, model, spec);
        },
        py::arg("primary"), py::arg("supplements"), py::arg("model"), py::arg("spec"));
  m.def("posterior_grid",
        [](const SourceSummary& primary, const std::vector<SourceSummary>& supplements,
           const PriorVector& prior, const QuadratureSpec& spec) {
          const Moments moments = posterior_grid(primary, supplements, prior, spec);
          return std::make_pair(moments.mean, moments.variance);
        },
        py::arg("primary"), py::arg("supplements"), py::arg("prior"), py::arg("spec"));
}
