#pragma once

#include <Eigen/Dense>
#include <bit>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "blqr/panel.hpp"
#include "blqr/priors.hpp"
#include "blqr/rng.hpp"
#include "blqr/stats_kernel.hpp"

namespace blqr {

// Substream step identifiers; combined with (sweep, unit) they key every
// random draw, so results do not depend on execution order or thread count.
enum class StepId : std::uint64_t {
  init_alpha = 1,
  mean_beta = 2,
  mean_alpha = 3,
  sigma = 4,
  mean_h = 5,
  quant_beta = 6,
  quant_alpha = 7,
  quant_nu = 8,
  quant_h = 9,
  dgp_design = 16,
  dgp_alpha = 17,
  dgp_noise = 18,
};

inline Rng step_stream(const Rng& master, StepId step, std::uint64_t sweep,
                       std::uint64_t unit = 0) {
  return master.substream(static_cast<std::uint64_t>(step), sweep, unit);
}

// Chain salts: one independent chain per model/quantile for a given seed.
inline constexpr std::uint64_t kMeanChainSalt = 0x6d65616eull;  // "mean"
inline constexpr std::uint64_t kSimChainSalt = 0x646770ull;     // "dgp"
inline std::uint64_t quantile_chain_salt(double p) { return std::bit_cast<std::uint64_t>(p); }

struct MeanState {
  Eigen::VectorXd beta;   // k
  Eigen::MatrixXd alpha;  // n x l
  SpdMatrix Sigma;        // l x l
  double h = 1.0;
};

struct QuantState {
  Eigen::VectorXd beta;
  Eigen::MatrixXd alpha;
  SpdMatrix Sigma;
  double h = 1.0;
  Eigen::MatrixXd nu;  // n x T, all positive
  QuantileParams qp{0.5, 0.0, 0.0};
};

struct RunConfig {
  std::int64_t iterations = 12000;
  std::int64_t burn_in = 3000;
  std::uint64_t seed = 0;
  std::int64_t thin = 1;
  bool include_random_effects = true;
  int thread_count = 1;

  void validate() const;
  std::int64_t stored_draws() const {
    return iterations == 0 ? 0 : (iterations - burn_in) / thin;
  }
};

// Post-burn-in draws plus provenance. Draw d of alpha is flattened with
// individual-major layout (column i*l + j); nu likewise (column i*T + t).
// Sigma rows hold the packed lower triangle (0,0),(1,0),(1,1),(2,0),...
struct ChainResult {
  std::string model;  // "mean" | "quantile"
  double p = std::numeric_limits<double>::quiet_NaN();
  Eigen::Index n = 0, T = 0, k = 0, l = 0;
  bool include_random_effects = true;
  RunConfig config;
  PriorSpec priors;
  std::vector<std::string> fixed_names, random_names;

  Eigen::MatrixXd beta;   // D x k
  Eigen::VectorXd h;      // D
  Eigen::MatrixXd sigma;  // D x l(l+1)/2
  Eigen::MatrixXd alpha;  // D x n*l
  Eigen::MatrixXd nu;     // D x n*T (quantile model only)

  double acceptance_rate = 1.0;
  double elapsed_seconds = 0.0;    // bookkeeping only; never serialized
  double seconds_per_sweep = 0.0;  // bookkeeping only; never serialized

  Eigen::Index draw_count() const { return beta.rows(); }
};

inline Eigen::Index packed_sigma_size(Eigen::Index l) { return l * (l + 1) / 2; }
inline Eigen::Index packed_sigma_index(Eigen::Index i, Eigen::Index j) {
  return i * (i + 1) / 2 + j;  // requires j <= i
}

namespace detail {

// Gaussian full-conditional parameters in precision form.
struct GaussianPosterior {
  Eigen::VectorXd mean;
  Eigen::MatrixXd precision;
};

// Fixed-coefficient posterior, individual effects integrated out:
// Psi_i = S_i Sigma S_i' + I/h (Sigma term absent when l = 0).
GaussianPosterior mean_beta_posterior(const PanelDataset& data, const SpdMatrix& Sigma,
                                      double h, const PriorSpec& priors, int threads = 1);

// Quantile counterpart with Omega_i = S_i Sigma S_i' + diag(tau^2 nu_it / h)
// and working response y - theta*nu.
GaussianPosterior quant_beta_posterior(const PanelDataset& data, const SpdMatrix& Sigma,
                                       const QuantileParams& qp, double h,
                                       const Eigen::MatrixXd& nu, const PriorSpec& priors,
                                       int threads = 1);

// Individual-effect conditionals for one i.
GaussianPosterior mean_alpha_posterior(const PanelDataset& data, const Eigen::VectorXd& beta,
                                       const Eigen::MatrixXd& Sigma_inv, double h,
                                       Eigen::Index i);
GaussianPosterior quant_alpha_posterior(const PanelDataset& data, const Eigen::VectorXd& beta,
                                        const Eigen::MatrixXd& Sigma_inv,
                                        const QuantileParams& qp, double h,
                                        const Eigen::MatrixXd& nu, Eigen::Index i);

// Gamma full-conditional parameters (shape-rate on the draw, i.e. the
// sampled value is Ga(c1/2, d1/2)).
void mean_h_params(const PanelDataset& data, const Eigen::VectorXd& beta,
                   const Eigen::MatrixXd& alpha, const PriorSpec& priors, double& c1,
                   double& d1);
void quant_h_params(const PanelDataset& data, const Eigen::VectorXd& beta,
                    const Eigen::MatrixXd& alpha, const QuantileParams& qp,
                    const Eigen::MatrixXd& nu, const PriorSpec& priors, double& c1,
                    double& d1);

// Wishart update for the individual-effect precision.
void sigma_inv_params(const Eigen::MatrixXd& alpha, const PriorSpec& priors, double& nu1,
                      SpdMatrix& D1);

}  // namespace detail

// One conditional draw per block. Each takes the stream dedicated to its
// step; per-individual and per-cell draws split it further by unit, so any
// thread count yields the same numbers.
Eigen::VectorXd mean_step_beta(const MeanState& state, const PanelDataset& data,
                               const PriorSpec& priors, Rng& rng, int threads = 1);
Eigen::MatrixXd mean_step_alpha(const MeanState& state, const PanelDataset& data,
                                const Rng& step_rng, int threads = 1);
SpdMatrix step_sigma_inv(const Eigen::MatrixXd& alpha, const PriorSpec& priors, Rng& rng);
double mean_step_h(const MeanState& state, const PanelDataset& data, const PriorSpec& priors,
                   Rng& rng);

Eigen::VectorXd quant_step_beta(const QuantState& state, const PanelDataset& data,
                                const PriorSpec& priors, Rng& rng, int threads = 1);
Eigen::MatrixXd quant_step_alpha(const QuantState& state, const PanelDataset& data,
                                 const Rng& step_rng, int threads = 1);
Eigen::MatrixXd quant_step_nu(const QuantState& state, const PanelDataset& data,
                              const Rng& step_rng, int threads = 1);
double quant_step_h(const QuantState& state, const PanelDataset& data,
                    const PriorSpec& priors, Rng& rng);

// Full sweeps in listing order (used by the chain runners and by the
// prior-preservation checks).
void mean_sweep(MeanState& state, const PanelDataset& data, const PriorSpec& priors,
                std::uint64_t sweep, const Rng& master, int threads = 1);
void quant_sweep(QuantState& state, const PanelDataset& data, const PriorSpec& priors,
                 std::uint64_t sweep, const Rng& master, int threads = 1);

MeanState init_mean_state(const PanelDataset& data, const Rng& master);
QuantState init_quant_state(const PanelDataset& data, double p, const Rng& master);

// Chain runners. The rng carries (seed, chain salt); config.seed is recorded
// as provenance and is expected to match rng.seed(). With
// include_random_effects = false the individual-effect and Sigma draws are
// skipped and their terms drop from every conditional (alpha identically 0).
ChainResult run_mean_gibbs(const PanelDataset& data, const PriorSpec& priors,
                           const RunConfig& config, const Rng& rng);
ChainResult run_quantile_gibbs(const PanelDataset& data, const PriorSpec& priors, double p,
                               const RunConfig& config, const Rng& rng);

}  // namespace blqr
