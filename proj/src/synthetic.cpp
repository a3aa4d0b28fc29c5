#include "blqr/synthetic.hpp"

#include <cmath>
#include <string>
#include <vector>

#include "blqr/error.hpp"
#include "blqr/stats_kernel.hpp"

namespace blqr {

void TruthSpec::validate(bool need_p) const {
  if (k() < 1) throw DomainError("TruthSpec: beta_true must have at least one entry");
  if (n < 1 || T < 1) throw DomainError("TruthSpec: need n >= 1 and T >= 1");
  if (!(h_true > 0.0)) throw DomainError("TruthSpec: h_true must be positive");
  if (l() > k()) throw DomainError("TruthSpec: random design cannot be wider than fixed");
  if (need_p && !(p > 0.0 && p < 1.0))
    throw DomainError("TruthSpec: quantile level must lie in (0,1)");
}

namespace {

struct DesignDraw {
  Eigen::MatrixXd X, S, alpha;
  std::vector<std::string> fixed_names, random_names;
};

DesignDraw draw_design(const TruthSpec& truth, const Rng& master) {
  const Eigen::Index n = truth.n, T = truth.T, k = truth.k(), l = truth.l();
  DesignDraw d;
  d.X.resize(n * T, k);
  d.S.resize(n * T, l);
  d.fixed_names.push_back("intercept");
  for (Eigen::Index j = 1; j < k; ++j) d.fixed_names.push_back("x" + std::to_string(j));
  for (Eigen::Index j = 0; j < l; ++j)
    d.random_names.push_back(j == 0 ? "intercept" : "x" + std::to_string(j));
  for (Eigen::Index row = 0; row < n * T; ++row) {
    Rng r = step_stream(master, StepId::dgp_design, 0, static_cast<std::uint64_t>(row) + 1);
    d.X(row, 0) = 1.0;
    for (Eigen::Index j = 1; j < k; ++j) d.X(row, j) = r.normal();
    for (Eigen::Index j = 0; j < l; ++j) d.S(row, j) = d.X(row, j);
  }
  d.alpha.resize(n, l);
  if (l > 0) {
    for (Eigen::Index i = 0; i < n; ++i) {
      Rng r = step_stream(master, StepId::dgp_alpha, 0, static_cast<std::uint64_t>(i) + 1);
      Eigen::VectorXd z(l);
      for (Eigen::Index j = 0; j < l; ++j) z(j) = r.normal();
      d.alpha.row(i) = (truth.Sigma_true.llt().matrixL() * z).transpose();
    }
  }
  return d;
}

SyntheticPanel assemble(const TruthSpec& truth, const DesignDraw& d, const Eigen::VectorXd& eps) {
  const Eigen::Index n = truth.n, T = truth.T;
  Eigen::VectorXd y(n * T);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index t = 0; t < T; ++t) {
      Eigen::Index row = i * T + t;
      double mu = d.X.row(row).dot(truth.beta_true);
      if (truth.l() > 0) mu += d.S.row(row).dot(d.alpha.row(i));
      y(row) = mu + eps(row);
    }
  return SyntheticPanel{PanelDataset(n, T, std::move(y), d.X, d.S, d.fixed_names,
                                     d.random_names),
                        truth};
}

}  // namespace

SyntheticPanel gen_mean_panel(const TruthSpec& truth, const Rng& master) {
  truth.validate(false);
  DesignDraw d = draw_design(truth, master);
  const double sd = 1.0 / std::sqrt(truth.h_true);
  Eigen::VectorXd eps(truth.n * truth.T);
  for (Eigen::Index row = 0; row < eps.size(); ++row) {
    Rng r = step_stream(master, StepId::dgp_noise, 0, static_cast<std::uint64_t>(row) + 1);
    eps(row) = sd * r.normal();
  }
  return assemble(truth, d, eps);
}

SyntheticPanel gen_quant_panel(const TruthSpec& truth, const Rng& master) {
  truth.validate(true);
  DesignDraw d = draw_design(truth, master);
  QuantileParams qp = al_params(truth.p);
  Eigen::VectorXd eps(truth.n * truth.T);
  for (Eigen::Index row = 0; row < eps.size(); ++row) {
    Rng r = step_stream(master, StepId::dgp_noise, 0, static_cast<std::uint64_t>(row) + 1);
    eps(row) = sample_al_mixture(qp, truth.h_true, r);
  }
  return assemble(truth, d, eps);
}

namespace detail {

double log_gamma_integral_quadrature(double a, double b, int points) {
  // integrand in u = log h:  exp(a u - b e^u); peak at u* = log(a/b),
  // curvature a, so +-(16/sqrt(a) + 2) covers the mass to far below any
  // tolerance of interest. Trapezoid on a doubly decaying smooth integrand
  // converges spectrally.
  double ustar = std::log(a / b);
  double half = 16.0 / std::sqrt(a) + 2.0;
  double lo = ustar - half, hi = ustar + half;
  double du = (hi - lo) / static_cast<double>(points - 1);
  double fmax = a * ustar - a;  // value at the peak
  double acc = 0.0;
  for (int j = 0; j < points; ++j) {
    double u = lo + du * static_cast<double>(j);
    double f = a * u - b * std::exp(u);
    double w = (j == 0 || j == points - 1) ? 0.5 : 1.0;
    acc += w * std::exp(f - fmax);
  }
  return fmax + std::log(acc) + std::log(du);
}

}  // namespace detail

namespace {

// log p(y | beta) with h integrated out by quadrature (up to beta-free
// constants).
double log_marginal_lik(const PanelDataset& data, const PriorSpec& priors, OracleModel model,
                        double p, double beta, int h_points) {
  const Eigen::Index N = data.rows();
  double a, b;
  if (model == OracleModel::Mean) {
    double ssr = (data.y() - data.X().col(0) * beta).squaredNorm();
    a = 0.5 * priors.c0 + 0.5 * static_cast<double>(N);
    b = 0.5 * (priors.d0 + ssr);
  } else {
    double loss = 0.0;
    for (Eigen::Index r = 0; r < N; ++r)
      loss += check_loss(data.y()(r) - data.X()(r, 0) * beta, p);
    a = 0.5 * priors.c0 + static_cast<double>(N);
    b = 0.5 * priors.d0 + loss;
  }
  return detail::log_gamma_integral_quadrature(a, b, h_points);
}

struct GridMoments {
  double mean, variance, boundary_mass;
};

GridMoments beta_grid_pass(const PanelDataset& data, const PriorSpec& priors,
                           OracleModel model, double p, double center, double halfwidth,
                           const GridSpec& grid) {
  const double b0 = priors.beta0(0);
  const double B0 = priors.B0.mat()(0, 0);
  const int J = grid.beta_points;
  std::vector<double> lp(static_cast<std::size_t>(J));
  double step = 2.0 * halfwidth / static_cast<double>(J - 1);
  double lmax = -std::numeric_limits<double>::infinity();
  for (int j = 0; j < J; ++j) {
    double beta = center - halfwidth + step * static_cast<double>(j);
    double lprior = -0.5 * (beta - b0) * (beta - b0) / B0;
    lp[static_cast<std::size_t>(j)] =
        lprior + log_marginal_lik(data, priors, model, p, beta, grid.h_points);
    lmax = std::max(lmax, lp[static_cast<std::size_t>(j)]);
  }
  double wsum = 0.0, mean_acc = 0.0;
  std::vector<double> w(static_cast<std::size_t>(J));
  for (int j = 0; j < J; ++j) {
    double tw = (j == 0 || j == J - 1) ? 0.5 : 1.0;
    double wj = tw * std::exp(lp[static_cast<std::size_t>(j)] - lmax);
    w[static_cast<std::size_t>(j)] = wj;
    wsum += wj;
    mean_acc += wj * (center - halfwidth + step * static_cast<double>(j));
  }
  GridMoments m;
  m.mean = mean_acc / wsum;
  double var_acc = 0.0;
  for (int j = 0; j < J; ++j) {
    double beta = center - halfwidth + step * static_cast<double>(j);
    var_acc += w[static_cast<std::size_t>(j)] * (beta - m.mean) * (beta - m.mean);
  }
  m.variance = var_acc / wsum;
  m.boundary_mass = (w.front() + w.back()) / wsum;
  return m;
}

}  // namespace

OracleResult grid_posterior_oracle(const PanelDataset& data, const PriorSpec& priors,
                                   OracleModel model, double p, const GridSpec& grid) {
  if (data.k() != 1 || data.l() != 0)
    throw DomainError("grid_posterior_oracle: needs k = 1 and l = 0");
  if (data.rows() > 8)
    throw DomainError("grid_posterior_oracle: needs n*T <= 8");
  if (model == OracleModel::Quantile && !(p > 0.0 && p < 1.0))
    throw DomainError("grid_posterior_oracle: quantile level must lie in (0,1)");
  if (grid.beta_points < 9 || grid.h_points < 9)
    throw DomainError("grid_posterior_oracle: grid too coarse");
  priors.validate(1, 0);

  // First pass over the prior's range, then two recentering passes at
  // +-beta_halfwidth_sd posterior std.
  double prior_sd = std::sqrt(priors.B0.mat()(0, 0));
  GridMoments m = beta_grid_pass(data, priors, model, p, priors.beta0(0),
                                 grid.beta_halfwidth_sd * prior_sd, grid);
  for (int pass = 0; pass < 2; ++pass) {
    if (!(m.variance > 0.0))
      throw NumericError("grid_posterior_oracle: degenerate grid pass");
    m = beta_grid_pass(data, priors, model, p, m.mean,
                       grid.beta_halfwidth_sd * std::sqrt(m.variance), grid);
  }
  if (m.boundary_mass > 1e-6)
    throw NumericError("grid_posterior_oracle: grid too narrow, boundary mass " +
                       std::to_string(m.boundary_mass));
  return OracleResult{m.mean, m.variance};
}

}  // namespace blqr
