#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <string>
#include <vector>

#include "blqr/error.hpp"

namespace blqr {

// Inverse hyperbolic sine, ln(x + sqrt(x^2 + 1)); defined for all reals,
// odd, monotone.
inline double ihs(double x) { return std::log(x + std::sqrt(x * x + 1.0)); }

// Balanced panel: n individuals, T periods each, stored i-major with periods
// ascending within an individual. X is the fixed-effect design (leading
// intercept column), S the random-effect design. l may be zero for models
// without individual effects.
class PanelDataset {
 public:
  PanelDataset(Eigen::Index n, Eigen::Index T, Eigen::VectorXd y, Eigen::MatrixXd X,
               Eigen::MatrixXd S, std::vector<std::string> fixed_names,
               std::vector<std::string> random_names,
               std::vector<std::string> ids = {})
      : n_(n), T_(T), y_(std::move(y)), X_(std::move(X)), S_(std::move(S)),
        fixed_names_(std::move(fixed_names)), random_names_(std::move(random_names)),
        ids_(std::move(ids)) {
    if (n_ < 1 || T_ < 1) throw DataError("panel must have n >= 1 and T >= 1");
    Eigen::Index rows = n_ * T_;
    if (y_.size() != rows || X_.rows() != rows || S_.rows() != rows)
      throw DataError("panel arrays disagree on n*T row count");
    if (X_.cols() < 1) throw DataError("panel needs at least one fixed-effect column");
    if (fixed_names_.size() != static_cast<std::size_t>(X_.cols()) ||
        random_names_.size() != static_cast<std::size_t>(S_.cols()))
      throw DataError("column name count does not match design width");
    if (!y_.allFinite() || !X_.allFinite() || (S_.size() > 0 && !S_.allFinite()))
      throw DataError("panel contains non-finite values");
    if (ids_.empty()) {
      ids_.reserve(static_cast<std::size_t>(n_));
      for (Eigen::Index i = 0; i < n_; ++i) ids_.push_back(std::to_string(i + 1));
    }
    if (ids_.size() != static_cast<std::size_t>(n_))
      throw DataError("id label count does not match n");
  }

  Eigen::Index n() const { return n_; }
  Eigen::Index T() const { return T_; }
  Eigen::Index k() const { return X_.cols(); }
  Eigen::Index l() const { return S_.cols(); }
  Eigen::Index rows() const { return n_ * T_; }

  const Eigen::VectorXd& y() const { return y_; }
  const Eigen::MatrixXd& X() const { return X_; }
  const Eigen::MatrixXd& S() const { return S_; }
  const std::vector<std::string>& fixed_names() const { return fixed_names_; }
  const std::vector<std::string>& random_names() const { return random_names_; }
  const std::vector<std::string>& ids() const { return ids_; }

 private:
  Eigen::Index n_, T_;
  Eigen::VectorXd y_;
  Eigen::MatrixXd X_, S_;
  std::vector<std::string> fixed_names_, random_names_;
  std::vector<std::string> ids_;
};

// Read-only views of individual i's block (0-based index).
struct Stacked {
  Eigen::VectorBlock<const Eigen::VectorXd> y;
  Eigen::Block<const Eigen::MatrixXd> X;
  Eigen::Block<const Eigen::MatrixXd> S;
};

inline Stacked stack(const PanelDataset& d, Eigen::Index i) {
  if (i < 0 || i >= d.n())
    throw DomainError("stack: individual index " + std::to_string(i) + " out of range");
  Eigen::Index lo = i * d.T();
  return Stacked{d.y().segment(lo, d.T()), d.X().middleRows(lo, d.T()),
                 d.S().middleRows(lo, d.T())};
}

}  // namespace blqr
