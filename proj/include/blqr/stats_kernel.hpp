#pragma once

#include <Eigen/Dense>

#include "blqr/rng.hpp"
#include "blqr/spd.hpp"

namespace blqr {

// Asymmetric-Laplace auxiliary parameters for a quantile level p.
struct QuantileParams {
  double p;
  double theta;  // (1-2p)/(p(1-p))
  double tau;    // sqrt(2/(p(1-p)))
};

// Quantile check loss u * (p - 1{u<0}).
double check_loss(double u, double p);

QuantileParams al_params(double p);

// Log density of the asymmetric Laplace law with location mu, inverse scale
// h and quantile level p: log(p(1-p)h) - h * check_loss(y-mu, p).
double al_log_density(double y, double mu, double h, double p);

// One draw of the AL(0, 1/h, p) error via its normal-exponential mixture:
// eps = theta*w/h + tau*sqrt(w)*u/h with w ~ Exp(1), u ~ N(0,1).
double sample_al_mixture(const QuantileParams& params, double h, Rng& rng);

// Gamma draw in the shape-rate convention (mean = shape/rate).
double sample_gamma(double shape, double rate, Rng& rng);

double sample_chisq(double df, Rng& rng);

// Generalized inverse Gaussian with index 1/2: density on x > 0 proportional
// to x^{-1/2} * exp(-(a/x + b*x)/2). a = 0 degenerates to Gamma(1/2, b/2).
double sample_gig_half(double a, double b, Rng& rng);

// Wishart draw via the Bartlett construction; density convention has
// E[W] = nu * scale. Requires nu > dim - 1.
SpdMatrix sample_wishart(double nu, const SpdMatrix& scale, Rng& rng);

// Multivariate normal given a covariance matrix.
Eigen::VectorXd sample_mvn(const Eigen::VectorXd& mean, const SpdMatrix& cov, Rng& rng);

// Multivariate normal given the Cholesky factorization of the *precision*
// matrix, the form both posteriors arrive in.
Eigen::VectorXd sample_mvn_precision(const Eigen::VectorXd& mean,
                                     const Eigen::LLT<Eigen::MatrixXd>& precision_llt,
                                     Rng& rng);

}  // namespace blqr
