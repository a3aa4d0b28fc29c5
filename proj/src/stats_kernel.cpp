#include "blqr/stats_kernel.hpp"

#include <cmath>
#include <string>

#include "blqr/error.hpp"

namespace blqr {

namespace {

void require_quantile(double p) {
  if (!(p > 0.0 && p < 1.0))
    throw DomainError("quantile level must lie in (0,1), got " + std::to_string(p));
}

// Michael-Schucany-Haas inverse Gaussian draw, mean mu, shape lambda.
double sample_inverse_gaussian(double mu, double lambda, Rng& rng) {
  double z = rng.normal();
  double y = z * z;
  double x = mu + mu * mu * y / (2.0 * lambda) -
             mu / (2.0 * lambda) * std::sqrt(4.0 * mu * lambda * y + mu * mu * y * y);
  if (rng.u01() <= mu / (mu + x)) return x;
  return mu * mu / x;
}

}  // namespace

double check_loss(double u, double p) {
  require_quantile(p);
  return u * (p - (u < 0.0 ? 1.0 : 0.0));
}

QuantileParams al_params(double p) {
  require_quantile(p);
  double pq = p * (1.0 - p);
  return QuantileParams{p, (1.0 - 2.0 * p) / pq, std::sqrt(2.0 / pq)};
}

double al_log_density(double y, double mu, double h, double p) {
  if (!(h > 0.0)) throw DomainError("al_log_density: h must be positive");
  require_quantile(p);
  return std::log(p * (1.0 - p) * h) - h * check_loss(y - mu, p);
}

double sample_al_mixture(const QuantileParams& params, double h, Rng& rng) {
  if (!(h > 0.0)) throw DomainError("sample_al_mixture: h must be positive");
  double w = rng.exponential();
  double u = rng.normal();
  return (params.theta * w + params.tau * std::sqrt(w) * u) / h;
}

double sample_gamma(double shape, double rate, Rng& rng) {
  if (!(shape > 0.0) || !(rate > 0.0))
    throw DomainError("sample_gamma: shape and rate must be positive");
  // Marsaglia-Tsang squeeze; shape < 1 boosted via the power trick.
  double boost = 1.0;
  double a = shape;
  if (a < 1.0) {
    boost = std::pow(rng.open01(), 1.0 / a);
    a += 1.0;
  }
  double d = a - 1.0 / 3.0;
  double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x, v;
    do {
      x = rng.normal();
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    double u = rng.open01();
    double x2 = x * x;
    if (u < 1.0 - 0.0331 * x2 * x2) return boost * d * v / rate;
    if (std::log(u) < 0.5 * x2 + d * (1.0 - v + std::log(v))) return boost * d * v / rate;
  }
}

double sample_chisq(double df, Rng& rng) { return sample_gamma(0.5 * df, 0.5, rng); }

double sample_gig_half(double a, double b, Rng& rng) {
  if (a < 0.0 || b < 0.0) throw DomainError("sample_gig_half: a and b must be nonnegative");
  if (!(b > 0.0)) throw DomainError("sample_gig_half: b must be positive");
  // a = 0 (or small enough that the a/x factor is flat over the support) is
  // the Gamma(1/2, b/2) limit; also dodges overflow in sqrt(b/a).
  if (a < 1e-200) return sample_gamma(0.5, 0.5 * b, rng);
  // X ~ GIG(1/2, a, b)  <=>  1/X ~ InverseGaussian(mu = sqrt(b/a), lambda = b).
  double y = sample_inverse_gaussian(std::sqrt(b / a), b, rng);
  return 1.0 / y;
}

SpdMatrix sample_wishart(double nu, const SpdMatrix& scale, Rng& rng) {
  Eigen::Index l = scale.dim();
  if (!(nu > static_cast<double>(l) - 1.0))
    throw DomainError("sample_wishart: need nu > dim - 1");
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(l, l);
  for (Eigen::Index i = 0; i < l; ++i) {
    A(i, i) = std::sqrt(sample_chisq(nu - static_cast<double>(i), rng));
    for (Eigen::Index j = 0; j < i; ++j) A(i, j) = rng.normal();
  }
  Eigen::MatrixXd L = scale.llt().matrixL();
  Eigen::MatrixXd LA = L * A;
  return SpdMatrix(LA * LA.transpose());
}

Eigen::VectorXd sample_mvn(const Eigen::VectorXd& mean, const SpdMatrix& cov, Rng& rng) {
  if (mean.size() != cov.dim()) throw DomainError("sample_mvn: dimension mismatch");
  Eigen::VectorXd z(mean.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = rng.normal();
  return mean + cov.llt().matrixL() * z;
}

Eigen::VectorXd sample_mvn_precision(const Eigen::VectorXd& mean,
                                     const Eigen::LLT<Eigen::MatrixXd>& precision_llt,
                                     Rng& rng) {
  if (mean.size() != precision_llt.matrixLLT().rows())
    throw DomainError("sample_mvn_precision: dimension mismatch");
  Eigen::VectorXd z(mean.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = rng.normal();
  // Precision P = L L'; solving L' x = z gives Cov(x) = P^{-1}.
  return mean + precision_llt.matrixU().solve(z);
}

}  // namespace blqr
