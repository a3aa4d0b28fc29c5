#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "blqr/chain_format.hpp"
#include "blqr/cli.hpp"
#include "blqr/gibbs.hpp"
#include "blqr/manifest.hpp"
#include "blqr/model_fit.hpp"
#include "blqr/panel.hpp"
#include "blqr/priors.hpp"
#include "blqr/stats_kernel.hpp"
#include "blqr/synthetic.hpp"

namespace py = pybind11;
using namespace blqr;

namespace {

// Exceptions cross the boundary as Python types: config/usage -> ValueError,
// data -> ValueError, numeric -> ArithmeticError.
void translate_error(std::exception_ptr p) {
  try {
    if (p) std::rethrow_exception(p);
  } catch (const NumericError& e) {
    PyErr_SetString(PyExc_ArithmeticError, e.what());
  } catch (const Error& e) {
    PyErr_SetString(PyExc_ValueError, e.what());
  }
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Bayesian mixed-effects mean and quantile regression for balanced panels";

  py::register_exception_translator(&translate_error);

  m.def("ihs", &ihs, py::arg("x"), "Inverse hyperbolic sine transform");
  m.def("check_loss", &check_loss, py::arg("u"), py::arg("p"));
  m.def(
      "al_params",
      [](double p) {
        QuantileParams qp = al_params(p);
        return py::make_tuple(qp.theta, qp.tau);
      },
      py::arg("p"), "Asymmetric-Laplace mixture coefficients (theta, tau) for level p");
  m.def("al_log_density", &al_log_density, py::arg("y"), py::arg("mu"), py::arg("h"),
        py::arg("p"));

  py::class_<SpdMatrix>(m, "SpdMatrix")
      .def(py::init<const Eigen::MatrixXd&>(), py::arg("matrix"))
      .def_property_readonly("matrix", &SpdMatrix::mat)
      .def_property_readonly("dim", &SpdMatrix::dim);

  py::class_<PriorSpec>(m, "PriorSpec")
      .def_static("defaults", &PriorSpec::defaults, py::arg("k"), py::arg("l"))
      .def_readwrite("beta0", &PriorSpec::beta0)
      .def_readwrite("B0", &PriorSpec::B0)
      .def_readwrite("nu0", &PriorSpec::nu0)
      .def_readwrite("D0", &PriorSpec::D0)
      .def_readwrite("c0", &PriorSpec::c0)
      .def_readwrite("d0", &PriorSpec::d0);

  py::class_<PanelDataset>(m, "PanelDataset")
      .def(py::init<Eigen::Index, Eigen::Index, Eigen::VectorXd, Eigen::MatrixXd,
                    Eigen::MatrixXd, std::vector<std::string>, std::vector<std::string>,
                    std::vector<std::string>>(),
           py::arg("n"), py::arg("T"), py::arg("y"), py::arg("X"), py::arg("S"),
           py::arg("fixed_names") = std::vector<std::string>{},
           py::arg("random_names") = std::vector<std::string>{},
           py::arg("ids") = std::vector<std::string>{})
      .def_property_readonly("n", &PanelDataset::n)
      .def_property_readonly("T", &PanelDataset::T)
      .def_property_readonly("k", &PanelDataset::k)
      .def_property_readonly("l", &PanelDataset::l)
      .def_property_readonly("y", &PanelDataset::y)
      .def_property_readonly("X", &PanelDataset::X)
      .def_property_readonly("S", &PanelDataset::S)
      .def_property_readonly("fixed_names", &PanelDataset::fixed_names)
      .def_property_readonly("random_names", &PanelDataset::random_names)
      .def_property_readonly("ids", &PanelDataset::ids);

  py::class_<RunConfig>(m, "RunConfig")
      .def(py::init<>())
      .def_readwrite("iterations", &RunConfig::iterations)
      .def_readwrite("burn_in", &RunConfig::burn_in)
      .def_readwrite("seed", &RunConfig::seed)
      .def_readwrite("thin", &RunConfig::thin)
      .def_readwrite("include_random_effects", &RunConfig::include_random_effects)
      .def_readwrite("thread_count", &RunConfig::thread_count)
      .def("stored_draws", &RunConfig::stored_draws);

  py::class_<ChainResult>(m, "ChainResult")
      .def_readonly("model", &ChainResult::model)
      .def_readonly("p", &ChainResult::p)
      .def_readonly("n", &ChainResult::n)
      .def_readonly("T", &ChainResult::T)
      .def_readonly("k", &ChainResult::k)
      .def_readonly("l", &ChainResult::l)
      .def_readonly("include_random_effects", &ChainResult::include_random_effects)
      .def_readonly("fixed_names", &ChainResult::fixed_names)
      .def_readonly("random_names", &ChainResult::random_names)
      .def_readonly("beta", &ChainResult::beta)
      .def_readonly("h", &ChainResult::h)
      .def_readonly("sigma", &ChainResult::sigma)
      .def_readonly("alpha", &ChainResult::alpha)
      .def_readonly("nu", &ChainResult::nu)
      .def_readonly("elapsed_seconds", &ChainResult::elapsed_seconds)
      .def("draw_count", &ChainResult::draw_count);

  m.def(
      "run_mean_gibbs",
      [](const PanelDataset& data, const PriorSpec& priors, const RunConfig& config) {
        Rng rng(config.seed, kMeanChainSalt);
        return run_mean_gibbs(data, priors, config, rng);
      },
      py::arg("data"), py::arg("priors"), py::arg("config"),
      py::call_guard<py::gil_scoped_release>());
  m.def(
      "run_quantile_gibbs",
      [](const PanelDataset& data, const PriorSpec& priors, double p, const RunConfig& config) {
        Rng rng(config.seed, quantile_chain_salt(p));
        return run_quantile_gibbs(data, priors, p, config, rng);
      },
      py::arg("data"), py::arg("priors"), py::arg("p"), py::arg("config"),
      py::call_guard<py::gil_scoped_release>());

  py::class_<SummaryRow>(m, "SummaryRow")
      .def_readonly("name", &SummaryRow::name)
      .def_readonly("mean", &SummaryRow::mean)
      .def_readonly("std", &SummaryRow::std)
      .def("__repr__", [](const SummaryRow& r) {
        std::ostringstream s;
        s << "SummaryRow(" << r.name << ", mean=" << r.mean << ", std=" << r.std << ")";
        return s.str();
      });
  m.def(
      "summarize", [](const ChainResult& chain) { return summarize(chain).rows; },
      py::arg("chain"), "Posterior mean/std rows: coefficients, h, scale block");
  m.def("summary_series", &summary_series, py::arg("chain"), py::arg("row_name"));

  py::class_<FitReport>(m, "FitReport")
      .def_readonly("log_l", &FitReport::log_l)
      .def_readonly("caic", &FitReport::caic)
      .def_readonly("cbic", &FitReport::cbic)
      .def_readonly("df", &FitReport::df);
  m.def("fit_report", &fit_report, py::arg("chain"), py::arg("data"));
  m.def("cond_loglik_mean", &cond_loglik_mean, py::arg("data"), py::arg("beta"),
        py::arg("alpha"), py::arg("h"));
  m.def("cond_loglik_quant", &cond_loglik_quant, py::arg("data"), py::arg("beta"),
        py::arg("alpha"), py::arg("h"), py::arg("p"));

  py::class_<TruthSpec>(m, "TruthSpec")
      .def(py::init<>())
      .def_readwrite("beta_true", &TruthSpec::beta_true)
      .def_readwrite("Sigma_true", &TruthSpec::Sigma_true)
      .def_readwrite("h_true", &TruthSpec::h_true)
      .def_readwrite("n", &TruthSpec::n)
      .def_readwrite("T", &TruthSpec::T)
      .def_readwrite("p", &TruthSpec::p);
  m.def(
      "gen_mean_panel",
      [](const TruthSpec& truth, std::uint64_t seed) {
        return gen_mean_panel(truth, Rng(seed, kSimChainSalt)).data;
      },
      py::arg("truth"), py::arg("seed"));
  m.def(
      "gen_quant_panel",
      [](const TruthSpec& truth, std::uint64_t seed) {
        return gen_quant_panel(truth, Rng(seed, kSimChainSalt)).data;
      },
      py::arg("truth"), py::arg("seed"));

  m.def(
      "grid_posterior_oracle",
      [](const PanelDataset& data, const PriorSpec& priors, const std::string& model, double p) {
        OracleModel om = model == "mean" ? OracleModel::Mean : OracleModel::Quantile;
        OracleResult r = grid_posterior_oracle(data, priors, om, p);
        return py::make_tuple(r.mean, r.variance);
      },
      py::arg("data"), py::arg("priors"), py::arg("model"), py::arg("p") = 0.5,
      "Brute-force posterior (mean, variance) of the scalar coefficient");

  m.def(
      "write_chain",
      [](const std::string& path, const ChainResult& chain) { write_chain(path, chain); },
      py::arg("path"), py::arg("chain"));
  m.def(
      "read_chain",
      [](const std::string& path) {
        LoadedChain lc = read_chain(path);
        return py::make_tuple(lc.chain, hash_hex(lc.manifest_hash), lc.manifest_echo);
      },
      py::arg("path"), "Returns (chain, manifest_hash_hex, manifest_echo)");

  m.def(
      "run_cli",
      [](const std::vector<std::string>& args) {
        std::ostringstream out, err;
        int code = run_cli(args, out, err);
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("args"), "Invoke the command-line front end; returns (exit_code, stdout, stderr)");
}
