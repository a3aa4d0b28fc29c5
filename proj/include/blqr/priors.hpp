#pragma once

#include <Eigen/Dense>

#include "blqr/error.hpp"
#include "blqr/spd.hpp"

namespace blqr {

// Hyperparameters: beta ~ N(beta0, B0), Sigma^{-1} ~ Wishart(nu0, D0),
// h ~ Gamma(c0/2, d0/2) in the shape-rate convention.
struct PriorSpec {
  Eigen::VectorXd beta0;
  SpdMatrix B0;
  double nu0 = 5.0;
  SpdMatrix D0;  // dim 0 row marker not allowed; use defaults(k, 0) for l = 0
  double c0 = 10.0;
  double d0 = 9.0;

  // Moderately diffuse defaults: beta0 = 0, B0 = 100 I, nu0 = 5, D0 = 10 I,
  // c0 = 10, d0 = 9.
  static PriorSpec defaults(Eigen::Index k, Eigen::Index l) {
    PriorSpec p;
    p.beta0 = Eigen::VectorXd::Zero(k);
    p.B0 = SpdMatrix::scaled_identity(k, 100.0);
    if (l > 0) p.D0 = SpdMatrix::scaled_identity(l, 10.0);
    return p;
  }

  void validate(Eigen::Index k, Eigen::Index l) const {
    if (beta0.size() != k) throw ConfigError("prior beta0 has wrong length");
    if (B0.dim() != k) throw ConfigError("prior B0 has wrong dimension");
    if (l > 0) {
      if (D0.dim() != l) throw ConfigError("prior D0 has wrong dimension");
      if (!(nu0 > static_cast<double>(l) - 1.0))
        throw ConfigError("prior nu0 must exceed l - 1");
    }
    if (!(c0 > 0.0) || !(d0 > 0.0)) throw ConfigError("prior c0 and d0 must be positive");
  }
};

}  // namespace blqr
