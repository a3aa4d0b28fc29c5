#pragma once

#include <Eigen/Dense>
#include <limits>

#include "blqr/gibbs.hpp"
#include "blqr/panel.hpp"
#include "blqr/priors.hpp"
#include "blqr/rng.hpp"

namespace blqr {

// Ground-truth description for the generators. Covariate law: leading
// intercept plus independent standard-normal columns; the random-effect
// design is the intercept plus the first l-1 covariate columns.
struct TruthSpec {
  Eigen::VectorXd beta_true;  // length k
  SpdMatrix Sigma_true;       // l x l; leave default for l = 0
  double h_true = 1.0;
  Eigen::Index n = 0, T = 0;
  double p = std::numeric_limits<double>::quiet_NaN();  // quantile DGP only

  Eigen::Index k() const { return beta_true.size(); }
  Eigen::Index l() const { return Sigma_true.dim(); }
  void validate(bool need_p) const;
};

struct SyntheticPanel {
  PanelDataset data;
  TruthSpec truth;
};

// y = x'beta + s'alpha_i + eps with alpha_i ~ N(0, Sigma_true) and
// eps ~ N(0, 1/h_true).
SyntheticPanel gen_mean_panel(const TruthSpec& truth, const Rng& master);

// Same linear predictor with asymmetric-Laplace errors, so the conditional
// p-quantile of y equals x'beta + s'alpha_i exactly.
SyntheticPanel gen_quant_panel(const TruthSpec& truth, const Rng& master);

enum class OracleModel { Mean, Quantile };

struct GridSpec {
  int beta_points = 4001;
  int h_points = 2001;
  double beta_halfwidth_sd = 12.0;  // grid halfwidth in posterior std units
};

struct OracleResult {
  double mean;
  double variance;
};

// Brute-force posterior moments of the scalar coefficient for tiny datasets
// (k = 1, l = 0, nT <= 8). The scale h is integrated out numerically on a
// log grid; the quantile model uses the exact AL likelihood, with no latent
// augmentation.
OracleResult grid_posterior_oracle(const PanelDataset& data, const PriorSpec& priors,
                                   OracleModel model, double p = 0.5,
                                   const GridSpec& grid = GridSpec());

namespace detail {
// log integral over h of  h^(a-1) * exp(-b h)  by trapezoid on the log-h
// grid; exposed for the quadrature cross-check against lgamma.
double log_gamma_integral_quadrature(double a, double b, int points);
}  // namespace detail

}  // namespace blqr
