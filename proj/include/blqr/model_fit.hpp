#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "blqr/gibbs.hpp"
#include "blqr/panel.hpp"

namespace blqr {

struct SummaryRow {
  std::string name;
  double mean;
  double std;  // sample convention (n-1)
};

// Reporting table: one row per fixed coefficient, then h, then the derived
// scale entries sqrt(sigma_ii) and correlations rho_ij computed per draw.
struct SummaryTable {
  std::vector<SummaryRow> rows;
};

SummaryTable summarize(const ChainResult& chain);

// Per-draw series backing one summary row (used for trace export).
Eigen::VectorXd summary_series(const ChainResult& chain, const std::string& row_name);

// Gaussian conditional log-likelihood given realized individual effects:
// sum over (i,t) of log N(y | x'beta + s'alpha_i, 1/h).
double cond_loglik_mean(const PanelDataset& data, const Eigen::VectorXd& beta,
                        const Eigen::MatrixXd& alpha, double h);

// Asymmetric-Laplace counterpart at quantile level p.
double cond_loglik_quant(const PanelDataset& data, const Eigen::VectorXd& beta,
                         const Eigen::MatrixXd& alpha, double h, double p);

struct FitReport {
  double log_l = 0.0;
  double caic = 0.0;
  double cbic = 0.0;
  double df = 0.0;
  std::string evaluated_at = "posterior mean";
};

// df = k + 1 + (with_re ? n*l + l(l+1)/2 : 0); caic = -2 logL + 2 df,
// cbic = -2 logL + ln(nT) df.
FitReport information_criteria(double log_l, Eigen::Index k, Eigen::Index n, Eigen::Index l,
                               bool with_re, Eigen::Index T);

// Posterior means of (beta, alpha, h) from the chain, then the conditional
// log-likelihood on `data` and the criteria above.
FitReport fit_report(const ChainResult& chain, const PanelDataset& data);

}  // namespace blqr
