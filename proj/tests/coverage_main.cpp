// Repeated-sampling check: pooled 95% central credible intervals for the
// fixed coefficients should cover the generating values at close to the
// nominal rate. Exits nonzero when pooled coverage drops below 85%.

#include <algorithm>
#include <cmath>
#include <iostream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "blqr/gibbs.hpp"
#include "blqr/priors.hpp"
#include "blqr/rng.hpp"
#include "blqr/synthetic.hpp"

namespace {

using namespace blqr;

double empirical_quantile(Eigen::VectorXd draws, double q) {
  std::vector<double> v(draws.data(), draws.data() + draws.size());
  std::sort(v.begin(), v.end());
  double pos = q * (double(v.size()) - 1.0);
  std::size_t lo = std::size_t(pos);
  std::size_t hi = std::min(lo + 1, v.size() - 1);
  double w = pos - double(lo);
  return (1.0 - w) * v[lo] + w * v[hi];
}

TruthSpec coverage_truth() {
  TruthSpec truth;
  truth.beta_true.resize(2);
  truth.beta_true << 1.0, -0.7;
  truth.Sigma_true = SpdMatrix::scaled_identity(1, 0.5);
  truth.h_true = 2.0;
  truth.n = 200;
  truth.T = 4;
  return truth;
}

struct PooledCoverage {
  int covered = 0;
  int total = 0;
  double rate() const { return total == 0 ? 0.0 : double(covered) / double(total); }
};

template <typename RunFit>
PooledCoverage pooled_coverage(bool quantile_dgp, double p, RunFit run_fit, int reps) {
  PooledCoverage pc;
  for (int r = 1; r <= reps; ++r) {
    TruthSpec truth = coverage_truth();
    if (quantile_dgp) truth.p = p;
    Rng dgp_rng(9000 + std::uint64_t(r), kSimChainSalt);
    SyntheticPanel sp = quantile_dgp ? gen_quant_panel(truth, dgp_rng) : gen_mean_panel(truth, dgp_rng);
    ChainResult chain = run_fit(sp, 9000 + std::uint64_t(r));
    for (Eigen::Index j = 0; j < truth.k(); ++j) {
      double lo = empirical_quantile(chain.beta.col(j), 0.025);
      double hi = empirical_quantile(chain.beta.col(j), 0.975);
      pc.covered += (truth.beta_true(j) >= lo && truth.beta_true(j) <= hi) ? 1 : 0;
      ++pc.total;
    }
  }
  return pc;
}

}  // namespace

int main() {
  const int reps = 50;
  const double p = 0.3;
  PriorSpec priors = PriorSpec::defaults(2, 1);
  RunConfig cfg;
  cfg.iterations = 2000;
  cfg.burn_in = 500;

  PooledCoverage mean_cov = pooled_coverage(
      false, 0.0,
      [&](const SyntheticPanel& sp, std::uint64_t seed) {
        RunConfig c = cfg;
        c.seed = seed;
        return run_mean_gibbs(sp.data, priors, c, Rng(seed, kMeanChainSalt));
      },
      reps);
  std::cout << "mean model: " << mean_cov.covered << "/" << mean_cov.total
            << " intervals cover the truth (" << 100.0 * mean_cov.rate() << "%)" << std::endl;

  PooledCoverage quant_cov = pooled_coverage(
      true, p,
      [&](const SyntheticPanel& sp, std::uint64_t seed) {
        RunConfig c = cfg;
        c.seed = seed;
        return run_quantile_gibbs(sp.data, priors, p, c, Rng(seed, quantile_chain_salt(p)));
      },
      reps);
  std::cout << "quantile model (p=" << p << "): " << quant_cov.covered << "/" << quant_cov.total
            << " intervals cover the truth (" << 100.0 * quant_cov.rate() << "%)" << std::endl;

  bool ok = mean_cov.rate() >= 0.85 && quant_cov.rate() >= 0.85;
  std::cout << (ok ? "coverage acceptable" : "coverage too low") << std::endl;
  return ok ? 0 : 1;
}
