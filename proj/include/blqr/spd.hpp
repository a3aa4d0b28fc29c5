#pragma once

#include <Eigen/Dense>
#include <string>

#include "blqr/error.hpp"

namespace blqr {

// Symmetric positive definite matrix. Construction validates symmetry and
// runs a Cholesky factorization, so holders can rely on both.
class SpdMatrix {
 public:
  SpdMatrix() = default;

  explicit SpdMatrix(const Eigen::MatrixXd& m, double sym_tol = 1e-10) {
    if (m.rows() != m.cols()) throw DomainError("SpdMatrix: matrix is not square");
    if (m.rows() == 0) throw DomainError("SpdMatrix: empty matrix");
    double scale = m.cwiseAbs().maxCoeff();
    if ((m - m.transpose()).cwiseAbs().maxCoeff() > sym_tol * std::max(1.0, scale))
      throw DomainError("SpdMatrix: matrix is not symmetric");
    mat_ = 0.5 * (m + m.transpose());
    Eigen::LLT<Eigen::MatrixXd> llt(mat_);
    if (llt.info() != Eigen::Success)
      throw DomainError("SpdMatrix: matrix is not positive definite");
  }

  static SpdMatrix identity(Eigen::Index dim) {
    return SpdMatrix(Eigen::MatrixXd::Identity(dim, dim));
  }
  static SpdMatrix scaled_identity(Eigen::Index dim, double c) {
    return SpdMatrix(Eigen::MatrixXd::Identity(dim, dim) * c);
  }

  Eigen::Index dim() const { return mat_.rows(); }
  const Eigen::MatrixXd& mat() const { return mat_; }

  Eigen::LLT<Eigen::MatrixXd> llt() const { return Eigen::LLT<Eigen::MatrixXd>(mat_); }

  // Solve M x = b without forming the inverse.
  Eigen::MatrixXd solve(const Eigen::MatrixXd& b) const { return llt().solve(b); }

  Eigen::MatrixXd inverse() const {
    return llt().solve(Eigen::MatrixXd::Identity(dim(), dim()));
  }

 private:
  Eigen::MatrixXd mat_;
};

// Cholesky of a plain matrix that is expected to be SPD; throws a numeric
// error naming `what` when the factorization fails.
inline Eigen::LLT<Eigen::MatrixXd> checked_llt(const Eigen::MatrixXd& m, const std::string& what) {
  Eigen::LLT<Eigen::MatrixXd> llt(m);
  if (llt.info() != Eigen::Success)
    throw NumericError("Cholesky factorization failed: " + what);
  return llt;
}

}  // namespace blqr
