#include <cstdint>
#include <string>
#include <vector>

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "crowd_al/active.hpp"
#include "crowd_al/bandit.hpp"
#include "crowd_al/crowd.hpp"
#include "crowd_al/error.hpp"
#include "crowd_al/experiment.hpp"
#include "crowd_al/features.hpp"
#include "crowd_al/mechanism.hpp"
#include "crowd_al/model.hpp"

#include <nlohmann/json.hpp>

namespace py = pybind11;
using namespace crowd_al;

namespace {

TransformSpec make_spec(const std::string& kind, const Matrix& centers, double scale) {
  TransformSpec spec;
  spec.kind = parse_transform_kind(kind);
  spec.centers = centers;
  spec.scale = scale;
  return spec;
}

ExperimentConfig config_from_dict(const py::dict& d) {
  const std::string text = py::module_::import("json").attr("dumps")(d).cast<std::string>();
  return config_from_json(nlohmann::json::parse(text));
}

py::dict record_to_dict(const RoundRecord& r) {
  py::dict d;
  d["rep"] = r.rep;
  d["round"] = r.round;
  d["instance"] = r.instance;
  d["annotator"] = r.annotator;
  d["label"] = r.label;
  d["accepted"] = r.accepted;
  d["rmse"] = r.rmse;
  d["regret"] = r.regret;
  d["discarded"] = r.discarded;
  d["payment"] = r.payment;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Bayesian crowd regression with active learning and Robust-UCB annotator selection";

  py::register_exception<InvalidInput>(m, "InvalidInput", PyExc_ValueError);
  py::register_exception<NumericalFailure>(m, "NumericalFailure", PyExc_ArithmeticError);
  py::register_exception<PoolExhausted>(m, "PoolExhausted", PyExc_LookupError);
  py::register_exception<FormatError>(m, "FormatError", PyExc_ValueError);
  py::register_exception<IoError>(m, "IoError", PyExc_OSError);

  py::class_<WeightPosterior>(m, "WeightPosterior")
      .def(py::init([](const Vector& mean, const Matrix& precision) {
             WeightPosterior w{mean, precision};
             w.validate();
             return w;
           }),
           py::arg("mean"), py::arg("precision"))
      .def_static("standard", &WeightPosterior::standard, py::arg("dim"))
      .def_readwrite("mean", &WeightPosterior::mean)
      .def_readwrite("precision", &WeightPosterior::precision);

  py::class_<PrecisionPosterior>(m, "PrecisionPosterior")
      .def(py::init([](double shape, double rate) {
             PrecisionPosterior p{shape, rate};
             p.validate();
             return p;
           }),
           py::arg("shape") = 1.0, py::arg("rate") = 1.0)
      .def_readwrite("shape", &PrecisionPosterior::shape)
      .def_readwrite("rate", &PrecisionPosterior::rate)
      .def_property_readonly("expected", &expected_precision);

  py::class_<CrowdDataset>(m, "CrowdDataset")
      .def(py::init<std::size_t, std::size_t>(), py::arg("dim"), py::arg("annotators"))
      .def("add_instance", &CrowdDataset::add_instance, py::arg("x"))
      .def("add_label", &CrowdDataset::add_label, py::arg("instance"), py::arg("annotator"),
           py::arg("y"))
      .def_property_readonly("dim", &CrowdDataset::dim)
      .def_property_readonly("annotators", &CrowdDataset::annotators)
      .def_property_readonly("instances", &CrowdDataset::instances)
      .def("label_count", py::overload_cast<>(&CrowdDataset::label_count, py::const_));

  m.def(
      "fit_variational",
      [](const CrowdDataset& data, const WeightPosterior& prior,
         const std::vector<PrecisionPosterior>& priors, double tolerance, std::size_t max_sweeps,
         bool uncorrected) {
        VariationalOptions opt;
        opt.tolerance = tolerance;
        opt.max_sweeps = max_sweeps;
        opt.uncorrected_gamma_update = uncorrected;
        const FitResult r = fit_variational(data, prior, priors, opt);
        return py::make_tuple(r.weights, r.precisions, r.report.iterations, r.report.converged);
      },
      py::arg("data"), py::arg("prior"), py::arg("precision_priors"), py::arg("tolerance") = 1e-6,
      py::arg("max_sweeps") = 200, py::arg("uncorrected_gamma_update") = false,
      "Returns (weights, precisions, sweeps, converged).");

  m.def(
      "predictive",
      [](const Vector& x, const WeightPosterior& w) {
        const Predictive p = predictive(x, w);
        return py::make_tuple(p.mean, p.variance);
      },
      py::arg("x"), py::arg("weights"));

  m.def("instance_score", py::overload_cast<const Vector&, const WeightPosterior&>(&instance_score),
        py::arg("x"), py::arg("weights"));
  m.def(
      "select_instance",
      [](const Matrix& pool, const WeightPosterior& w) {
        std::vector<PoolEntry> entries;
        for (Eigen::Index i = 0; i < pool.rows(); ++i) {
          entries.push_back({static_cast<std::size_t>(i), pool.row(i).transpose()});
        }
        return select_instance(entries, w);
      },
      py::arg("pool"), py::arg("weights"), "Row index of the highest-scoring candidate.");
  m.def("det_shrinkage", &det_shrinkage, py::arg("weights"), py::arg("x"), py::arg("beta"));
  m.def(
      "error_contraction_bounds",
      [](const WeightPosterior& w, const Vector& x, double beta) {
        const auto b = error_contraction_bounds(w, x, beta);
        return py::make_tuple(b.lower, b.upper);
      },
      py::arg("weights"), py::arg("x"), py::arg("beta"));

  py::enum_<DeltaPolicy>(m, "DeltaPolicy")
      .value("fixed_horizon", DeltaPolicy::fixed_horizon)
      .value("anytime", DeltaPolicy::anytime);

  m.def(
      "truncation_threshold",
      [](double u, double t, double log_inv_delta) { return truncation_threshold(u, t, log_inv_delta); },
      py::arg("u"), py::arg("t"), py::arg("log_inv_delta"));
  m.def(
      "truncated_mean",
      [](const std::vector<double>& samples, double threshold) {
        const auto r = truncated_mean(samples, threshold);
        return py::make_tuple(r.mean, r.accepted);
      },
      py::arg("samples"), py::arg("threshold"), "Returns (mean, accepted).");
  m.def(
      "regret_bound",
      [](const std::vector<double>& gaps, double u, double horizon) {
        return regret_bound(gaps, u, horizon);
      },
      py::arg("gaps"), py::arg("u"), py::arg("horizon"));

  py::class_<BanditState>(m, "BanditState")
      .def(py::init([](std::size_t arms, double u, DeltaPolicy policy, std::size_t horizon) {
             return BanditState(arms, BanditConfig{u, policy, horizon});
           }),
           py::arg("arms"), py::arg("u"), py::arg("policy") = DeltaPolicy::anytime,
           py::arg("horizon") = 0)
      .def_property_readonly("arms", &BanditState::arms)
      .def_property_readonly("round", &BanditState::round)
      .def_property_readonly("threshold", &BanditState::threshold)
      .def_property_readonly("discarded", &BanditState::discarded)
      .def_property_readonly("excluded", &BanditState::excluded)
      .def("pulls", &BanditState::pulls, py::arg("arm"))
      .def("truncated_mean", py::overload_cast<std::size_t>(&BanditState::truncated_mean, py::const_),
           py::arg("arm"))
      .def("ucb_index", &BanditState::ucb_index, py::arg("arm"))
      .def("select", &BanditState::select)
      .def("record", &BanditState::record, py::arg("arm"), py::arg("residual_sq"));

  py::class_<PaymentScheme>(m, "PaymentScheme")
      .def(py::init([](double budget, double lo, double hi) {
             PaymentScheme s{budget, lo, hi};
             s.validate();
             return s;
           }),
           py::arg("budget"), py::arg("beta_lower"), py::arg("beta_upper"))
      .def_readonly("budget", &PaymentScheme::budget)
      .def_readonly("beta_lower", &PaymentScheme::beta_lower)
      .def_readonly("beta_upper", &PaymentScheme::beta_upper);

  m.def("payment", &payment, py::arg("beta_hat"), py::arg("scheme"));
  m.def(
      "optimal_effort",
      [](double best_precision, const std::string& cost_kind, double a, double b, double knee,
         const PaymentScheme& scheme, std::size_t grid) {
        AnnotatorProfile p;
        p.best_precision = best_precision;
        p.cost = CostFunction::make(parse_cost_kind(cost_kind), a, b, knee);
        p.strategic = true;
        const auto e = optimal_effort(p, scheme, grid);
        return py::make_tuple(e.effort, e.participates);
      },
      py::arg("best_precision"), py::arg("cost_kind"), py::arg("a"), py::arg("b") = 0.0,
      py::arg("knee") = 0.0, py::arg("scheme"), py::arg("grid") = 1000,
      "Returns (effort, participates) for a strategic annotator.");

  m.def("rmse", &rmse, py::arg("predicted"), py::arg("truth"));

  m.def(
      "normalize",
      [](const Matrix& rows) {
        const auto n = normalize(rows);
        return py::make_tuple(n.rows, n.params.mean, n.params.scale);
      },
      py::arg("rows"), "Returns (normalized rows, column means, column scales).");
  m.def(
      "fit_centers",
      [](const Matrix& rows, std::size_t k, std::uint64_t seed) { return fit_centers(rows, k, seed); },
      py::arg("rows"), py::arg("k"), py::arg("seed"));
  m.def(
      "transform",
      [](const Matrix& rows, const std::string& kind, const Matrix& centers, double scale) {
        return transform(rows, make_spec(kind, centers, scale));
      },
      py::arg("rows"), py::arg("kind") = "sigmoid", py::arg("centers") = Matrix(),
      py::arg("scale") = 1.0);

  m.def(
      "run_experiment",
      [](const py::dict& config) {
        const auto result = run_experiment(config_from_dict(config));
        py::list records;
        for (const auto& r : result.records) records.append(record_to_dict(r));
        return records;
      },
      py::arg("config"), "Runs the configured experiment and returns one dict per round.");
  m.def(
      "run_fit",
      [](const py::dict& config) {
        const auto c = config_from_dict(config);
        std::vector<double> out;
        for (const auto& f : run_fit(c, load_dataset(c))) out.push_back(f.rmse);
        return out;
      },
      py::arg("config"), "Full-pool test RMSE per repetition.");
}
