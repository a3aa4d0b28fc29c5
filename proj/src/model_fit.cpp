#include "blqr/model_fit.hpp"

#include <cmath>

#include "blqr/error.hpp"
#include "blqr/stats_kernel.hpp"

namespace blqr {

namespace {

constexpr double kLogTwoPi = 1.8378770664093454836;

void mean_std(const Eigen::VectorXd& v, double& mean, double& sd) {
  const Eigen::Index D = v.size();
  mean = v.mean();
  if (D < 2) {
    sd = 0.0;
    return;
  }
  sd = std::sqrt((v.array() - mean).square().sum() / static_cast<double>(D - 1));
}

// Derived per-draw series for the variance block.
Eigen::VectorXd sigma_sqrt_series(const ChainResult& chain, Eigen::Index i) {
  Eigen::Index col = packed_sigma_index(i, i);
  return chain.sigma.col(col).array().sqrt();
}

Eigen::VectorXd rho_series(const ChainResult& chain, Eigen::Index i, Eigen::Index j) {
  Eigen::ArrayXd sij = chain.sigma.col(packed_sigma_index(i, j)).array();
  Eigen::ArrayXd sii = chain.sigma.col(packed_sigma_index(i, i)).array();
  Eigen::ArrayXd sjj = chain.sigma.col(packed_sigma_index(j, j)).array();
  return sij / (sii * sjj).sqrt();
}

std::string sigma_sqrt_name(Eigen::Index i) {
  return "sqrt_sigma_" + std::to_string(i + 1) + std::to_string(i + 1);
}

std::string rho_name(Eigen::Index i, Eigen::Index j) {
  return "rho_" + std::to_string(j + 1) + std::to_string(i + 1);
}

}  // namespace

SummaryTable summarize(const ChainResult& chain) {
  if (chain.draw_count() == 0) throw DataError("summarize: chain holds no draws");
  SummaryTable table;
  for (Eigen::Index c = 0; c < chain.k; ++c) {
    SummaryRow row;
    row.name = chain.fixed_names.empty() ? "beta_" + std::to_string(c + 1)
                                         : chain.fixed_names[static_cast<std::size_t>(c)];
    mean_std(chain.beta.col(c), row.mean, row.std);
    table.rows.push_back(std::move(row));
  }
  {
    SummaryRow row;
    row.name = "h";
    mean_std(chain.h, row.mean, row.std);
    table.rows.push_back(std::move(row));
  }
  for (Eigen::Index i = 0; i < chain.l; ++i) {
    SummaryRow row;
    row.name = sigma_sqrt_name(i);
    mean_std(sigma_sqrt_series(chain, i), row.mean, row.std);
    table.rows.push_back(std::move(row));
  }
  for (Eigen::Index i = 0; i < chain.l; ++i)
    for (Eigen::Index j = 0; j < i; ++j) {
      SummaryRow row;
      row.name = rho_name(i, j);
      mean_std(rho_series(chain, i, j), row.mean, row.std);
      table.rows.push_back(std::move(row));
    }
  return table;
}

Eigen::VectorXd summary_series(const ChainResult& chain, const std::string& row_name) {
  for (Eigen::Index c = 0; c < chain.k; ++c) {
    std::string name = chain.fixed_names.empty()
                           ? "beta_" + std::to_string(c + 1)
                           : chain.fixed_names[static_cast<std::size_t>(c)];
    if (name == row_name) return chain.beta.col(c);
  }
  if (row_name == "h") return chain.h;
  for (Eigen::Index i = 0; i < chain.l; ++i)
    if (row_name == sigma_sqrt_name(i)) return sigma_sqrt_series(chain, i);
  for (Eigen::Index i = 0; i < chain.l; ++i)
    for (Eigen::Index j = 0; j < i; ++j)
      if (row_name == rho_name(i, j)) return rho_series(chain, i, j);
  throw DataError("no summary row named '" + row_name + "'");
}

double cond_loglik_mean(const PanelDataset& data, const Eigen::VectorXd& beta,
                        const Eigen::MatrixXd& alpha, double h) {
  if (!(h > 0.0)) throw DomainError("cond_loglik_mean: h must be positive");
  const Eigen::Index n = data.n(), T = data.T(), l = data.l();
  double out = 0.5 * static_cast<double>(n * T) * (std::log(h) - kLogTwoPi);
  for (Eigen::Index i = 0; i < n; ++i) {
    Stacked s = stack(data, i);
    Eigen::VectorXd resid = s.y - s.X * beta;
    if (l > 0 && alpha.size() > 0) resid -= s.S * alpha.row(i).transpose();
    out -= 0.5 * h * resid.squaredNorm();
  }
  return out;
}

double cond_loglik_quant(const PanelDataset& data, const Eigen::VectorXd& beta,
                         const Eigen::MatrixXd& alpha, double h, double p) {
  if (!(h > 0.0)) throw DomainError("cond_loglik_quant: h must be positive");
  const Eigen::Index n = data.n(), T = data.T(), l = data.l();
  double out = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    Stacked s = stack(data, i);
    Eigen::VectorXd mu = s.X * beta;
    if (l > 0 && alpha.size() > 0) mu += s.S * alpha.row(i).transpose();
    for (Eigen::Index t = 0; t < T; ++t) out += al_log_density(s.y(t), mu(t), h, p);
  }
  return out;
}

FitReport information_criteria(double log_l, Eigen::Index k, Eigen::Index n, Eigen::Index l,
                               bool with_re, Eigen::Index T) {
  if (k < 1 || n < 1 || T < 1 || (with_re && l < 1))
    throw DomainError("information_criteria: shape fields must be positive");
  FitReport rep;
  rep.log_l = log_l;
  double df = static_cast<double>(k) + 1.0;
  if (with_re) df += static_cast<double>(n * l) + static_cast<double>(l * (l + 1)) / 2.0;
  rep.df = df;
  rep.caic = -2.0 * log_l + 2.0 * df;
  rep.cbic = -2.0 * log_l + std::log(static_cast<double>(n * T)) * df;
  return rep;
}

FitReport fit_report(const ChainResult& chain, const PanelDataset& data) {
  if (chain.draw_count() == 0) throw DataError("fit_report: chain holds no draws");
  if (chain.n != data.n() || chain.T != data.T() || chain.k != data.k())
    throw DataError("fit_report: chain and dataset dimensions disagree");
  Eigen::VectorXd beta_hat = chain.beta.colwise().mean();
  double h_hat = chain.h.mean();
  Eigen::MatrixXd alpha_hat(chain.n, chain.l);
  if (chain.l > 0) {
    Eigen::VectorXd flat = chain.alpha.colwise().mean();
    for (Eigen::Index i = 0; i < chain.n; ++i)
      for (Eigen::Index j = 0; j < chain.l; ++j) alpha_hat(i, j) = flat(i * chain.l + j);
  }
  const bool with_re = chain.include_random_effects && chain.l > 0;
  // The chain's design may carry fewer random columns than the dataset (the
  // no-individual-effects variant); evaluate accordingly.
  double log_l;
  if (chain.model == "mean") {
    log_l = with_re ? cond_loglik_mean(data, beta_hat, alpha_hat, h_hat)
                    : cond_loglik_mean(data, beta_hat, Eigen::MatrixXd::Zero(data.n(), 0), h_hat);
  } else {
    log_l = with_re ? cond_loglik_quant(data, beta_hat, alpha_hat, h_hat, chain.p)
                    : cond_loglik_quant(data, beta_hat, Eigen::MatrixXd::Zero(data.n(), 0),
                                        h_hat, chain.p);
  }
  return information_criteria(log_l, chain.k, chain.n, chain.l, with_re, chain.T);
}

}  // namespace blqr
