#include "blqr/gibbs.hpp"

#include <cassert>
#include <chrono>
#include <cmath>
#include <mutex>
#include <optional>
#include <thread>

#include "blqr/error.hpp"

namespace blqr {

namespace {

// Run chunk_fn over [0, count) split into contiguous chunks. Work items
// write only to their own slots, so the split never affects results.
template <typename Fn>
void parallel_for(Eigen::Index count, int threads, Fn&& chunk_fn) {
  if (threads <= 1 || count < 2) {
    chunk_fn(Eigen::Index(0), count);
    return;
  }
  int nthreads = static_cast<int>(std::min<Eigen::Index>(threads, count));
  Eigen::Index chunk = (count + nthreads - 1) / nthreads;
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(nthreads));
  std::exception_ptr failure;
  std::mutex failure_mu;
  for (int w = 0; w < nthreads; ++w) {
    Eigen::Index lo = w * chunk;
    Eigen::Index hi = std::min(count, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([&chunk_fn, &failure, &failure_mu, lo, hi] {
      try {
        chunk_fn(lo, hi);
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mu);
        if (!failure) failure = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

Eigen::MatrixXd sigma_inverse(const SpdMatrix& Sigma) {
  return Sigma.llt().solve(Eigen::MatrixXd::Identity(Sigma.dim(), Sigma.dim()));
}

PanelDataset strip_random_columns(const PanelDataset& data) {
  return PanelDataset(data.n(), data.T(), data.y(), data.X(),
                      Eigen::MatrixXd(data.rows(), 0), data.fixed_names(), {}, data.ids());
}

}  // namespace

void RunConfig::validate() const {
  if (iterations < 0 || burn_in < 0) throw ConfigError("iterations and burn_in must be nonnegative");
  if (iterations == 0) {
    if (burn_in != 0) throw ConfigError("burn_in must be 0 when iterations is 0");
  } else if (burn_in >= iterations) {
    throw ConfigError("burn_in must be smaller than iterations");
  }
  if (thin < 1) throw ConfigError("thin must be a positive integer");
  if (iterations > 0 && (iterations - burn_in) % thin != 0)
    throw ConfigError("thin must divide iterations - burn_in exactly");
  if (thread_count < 1) throw ConfigError("thread_count must be a positive integer");
}

namespace detail {

GaussianPosterior mean_beta_posterior(const PanelDataset& data, const SpdMatrix& Sigma,
                                      double h, const PriorSpec& priors, int threads) {
  const Eigen::Index n = data.n(), T = data.T(), k = data.k(), l = data.l();
  std::vector<Eigen::MatrixXd> G(static_cast<std::size_t>(n));
  std::vector<Eigen::VectorXd> g(static_cast<std::size_t>(n));
  parallel_for(n, threads, [&](Eigen::Index lo, Eigen::Index hi) {
    for (Eigen::Index i = lo; i < hi; ++i) {
      Stacked s = stack(data, i);
      Eigen::MatrixXd Psi = Eigen::MatrixXd::Identity(T, T) / h;
      if (l > 0) Psi += s.S * Sigma.mat() * s.S.transpose();
      Eigen::LLT<Eigen::MatrixXd> llt(Psi);
      if (llt.info() != Eigen::Success)
        throw NumericError("marginal covariance not positive definite for individual " +
                           data.ids()[static_cast<std::size_t>(i)]);
      Eigen::MatrixXd rhs(T, k + 1);
      rhs.leftCols(k) = s.X;
      rhs.col(k) = s.y;
      Eigen::MatrixXd solved = llt.solve(rhs);
      G[static_cast<std::size_t>(i)] = s.X.transpose() * solved.leftCols(k);
      g[static_cast<std::size_t>(i)] = s.X.transpose() * solved.col(k);
    }
  });
  Eigen::MatrixXd B0_inv = priors.B0.inverse();
  Eigen::MatrixXd prec = B0_inv;
  Eigen::VectorXd r = B0_inv * priors.beta0;
  for (Eigen::Index i = 0; i < n; ++i) {
    prec += G[static_cast<std::size_t>(i)];
    r += g[static_cast<std::size_t>(i)];
  }
  GaussianPosterior out;
  out.precision = 0.5 * (prec + prec.transpose());
  out.mean = checked_llt(out.precision, "fixed-coefficient posterior precision").solve(r);
  return out;
}

GaussianPosterior quant_beta_posterior(const PanelDataset& data, const SpdMatrix& Sigma,
                                       const QuantileParams& qp, double h,
                                       const Eigen::MatrixXd& nu, const PriorSpec& priors,
                                       int threads) {
  const Eigen::Index n = data.n(), T = data.T(), k = data.k(), l = data.l();
  const double tau2 = qp.tau * qp.tau;
  std::vector<Eigen::MatrixXd> G(static_cast<std::size_t>(n));
  std::vector<Eigen::VectorXd> g(static_cast<std::size_t>(n));
  parallel_for(n, threads, [&](Eigen::Index lo, Eigen::Index hi) {
    for (Eigen::Index i = lo; i < hi; ++i) {
      Stacked s = stack(data, i);
      Eigen::MatrixXd Omega = (tau2 / h * nu.row(i).transpose()).asDiagonal();
      if (l > 0) Omega += s.S * Sigma.mat() * s.S.transpose();
      Eigen::LLT<Eigen::MatrixXd> llt(Omega);
      if (llt.info() != Eigen::Success)
        throw NumericError("working covariance not positive definite for individual " +
                           data.ids()[static_cast<std::size_t>(i)]);
      Eigen::MatrixXd rhs(T, k + 1);
      rhs.leftCols(k) = s.X;
      rhs.col(k) = s.y - qp.theta * nu.row(i).transpose();
      Eigen::MatrixXd solved = llt.solve(rhs);
      G[static_cast<std::size_t>(i)] = s.X.transpose() * solved.leftCols(k);
      g[static_cast<std::size_t>(i)] = s.X.transpose() * solved.col(k);
    }
  });
  Eigen::MatrixXd B0_inv = priors.B0.inverse();
  Eigen::MatrixXd prec = B0_inv;
  Eigen::VectorXd r = B0_inv * priors.beta0;
  for (Eigen::Index i = 0; i < n; ++i) {
    prec += G[static_cast<std::size_t>(i)];
    r += g[static_cast<std::size_t>(i)];
  }
  GaussianPosterior out;
  out.precision = 0.5 * (prec + prec.transpose());
  out.mean = checked_llt(out.precision, "fixed-coefficient posterior precision").solve(r);
  return out;
}

GaussianPosterior mean_alpha_posterior(const PanelDataset& data, const Eigen::VectorXd& beta,
                                       const Eigen::MatrixXd& Sigma_inv, double h,
                                       Eigen::Index i) {
  Stacked s = stack(data, i);
  GaussianPosterior out;
  out.precision = h * s.S.transpose() * s.S + Sigma_inv;
  out.precision = 0.5 * (out.precision + out.precision.transpose());
  Eigen::VectorXd r = h * s.S.transpose() * (s.y - s.X * beta);
  out.mean = checked_llt(out.precision, "individual-effect posterior precision").solve(r);
  return out;
}

GaussianPosterior quant_alpha_posterior(const PanelDataset& data, const Eigen::VectorXd& beta,
                                        const Eigen::MatrixXd& Sigma_inv,
                                        const QuantileParams& qp, double h,
                                        const Eigen::MatrixXd& nu, Eigen::Index i) {
  Stacked s = stack(data, i);
  const double tau2 = qp.tau * qp.tau;
  Eigen::VectorXd w = (h / tau2) * nu.row(i).transpose().cwiseInverse();  // D^{-2} diagonal
  GaussianPosterior out;
  out.precision = s.S.transpose() * w.asDiagonal() * s.S + Sigma_inv;
  out.precision = 0.5 * (out.precision + out.precision.transpose());
  Eigen::VectorXd resid = s.y - s.X * beta - qp.theta * nu.row(i).transpose();
  Eigen::VectorXd r = s.S.transpose() * (w.asDiagonal() * resid);
  out.mean = checked_llt(out.precision, "individual-effect posterior precision").solve(r);
  return out;
}

void mean_h_params(const PanelDataset& data, const Eigen::VectorXd& beta,
                   const Eigen::MatrixXd& alpha, const PriorSpec& priors, double& c1,
                   double& d1) {
  const Eigen::Index n = data.n(), T = data.T(), l = data.l();
  double ssr = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    Stacked s = stack(data, i);
    Eigen::VectorXd resid = s.y - s.X * beta;
    if (l > 0) resid -= s.S * alpha.row(i).transpose();
    ssr += resid.squaredNorm();
  }
  c1 = priors.c0 + static_cast<double>(n * T);
  d1 = priors.d0 + ssr;
}

void quant_h_params(const PanelDataset& data, const Eigen::VectorXd& beta,
                    const Eigen::MatrixXd& alpha, const QuantileParams& qp,
                    const Eigen::MatrixXd& nu, const PriorSpec& priors, double& c1,
                    double& d1) {
  const Eigen::Index n = data.n(), T = data.T(), l = data.l();
  const double tau2 = qp.tau * qp.tau;
  double acc = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    Stacked s = stack(data, i);
    Eigen::VectorXd resid = s.y - s.X * beta;
    if (l > 0) resid -= s.S * alpha.row(i).transpose();
    for (Eigen::Index t = 0; t < T; ++t) {
      double v = nu(i, t);
      double e = resid(t) - qp.theta * v;
      acc += 2.0 * v + e * e / (tau2 * v);
    }
  }
  c1 = priors.c0 + 3.0 * static_cast<double>(n * T);
  d1 = priors.d0 + acc;
}

void sigma_inv_params(const Eigen::MatrixXd& alpha, const PriorSpec& priors, double& nu1,
                      SpdMatrix& D1) {
  nu1 = priors.nu0 + static_cast<double>(alpha.rows());
  Eigen::MatrixXd D1_inv = priors.D0.inverse() + alpha.transpose() * alpha;
  D1 = SpdMatrix(checked_llt(0.5 * (D1_inv + D1_inv.transpose()),
                             "individual-effect scale update")
                     .solve(Eigen::MatrixXd::Identity(alpha.cols(), alpha.cols())));
}

}  // namespace detail

Eigen::VectorXd mean_step_beta(const MeanState& state, const PanelDataset& data,
                               const PriorSpec& priors, Rng& rng, int threads) {
  auto post = detail::mean_beta_posterior(data, state.Sigma, state.h, priors, threads);
  return sample_mvn_precision(post.mean,
                              checked_llt(post.precision, "fixed-coefficient precision"), rng);
}

Eigen::MatrixXd mean_step_alpha(const MeanState& state, const PanelDataset& data,
                                const Rng& step_rng, int threads) {
  const Eigen::Index n = data.n(), l = data.l();
  Eigen::MatrixXd Sigma_inv = sigma_inverse(state.Sigma);
  Eigen::MatrixXd alpha(n, l);
  parallel_for(n, threads, [&](Eigen::Index lo, Eigen::Index hi) {
    for (Eigen::Index i = lo; i < hi; ++i) {
      auto post = detail::mean_alpha_posterior(data, state.beta, Sigma_inv, state.h, i);
      Rng r = step_rng.with_unit(static_cast<std::uint64_t>(i) + 1);
      alpha.row(i) = sample_mvn_precision(
          post.mean, checked_llt(post.precision, "individual-effect precision"), r);
    }
  });
  return alpha;
}

SpdMatrix step_sigma_inv(const Eigen::MatrixXd& alpha, const PriorSpec& priors, Rng& rng) {
  double nu1;
  SpdMatrix D1;
  detail::sigma_inv_params(alpha, priors, nu1, D1);
  return sample_wishart(nu1, D1, rng);
}

double mean_step_h(const MeanState& state, const PanelDataset& data, const PriorSpec& priors,
                   Rng& rng) {
  double c1, d1;
  detail::mean_h_params(data, state.beta, state.alpha, priors, c1, d1);
  return sample_gamma(0.5 * c1, 0.5 * d1, rng);
}

Eigen::VectorXd quant_step_beta(const QuantState& state, const PanelDataset& data,
                                const PriorSpec& priors, Rng& rng, int threads) {
  auto post = detail::quant_beta_posterior(data, state.Sigma, state.qp, state.h, state.nu,
                                           priors, threads);
  return sample_mvn_precision(post.mean,
                              checked_llt(post.precision, "fixed-coefficient precision"), rng);
}

Eigen::MatrixXd quant_step_alpha(const QuantState& state, const PanelDataset& data,
                                 const Rng& step_rng, int threads) {
  const Eigen::Index n = data.n(), l = data.l();
  Eigen::MatrixXd Sigma_inv = sigma_inverse(state.Sigma);
  Eigen::MatrixXd alpha(n, l);
  parallel_for(n, threads, [&](Eigen::Index lo, Eigen::Index hi) {
    for (Eigen::Index i = lo; i < hi; ++i) {
      auto post = detail::quant_alpha_posterior(data, state.beta, Sigma_inv, state.qp,
                                                state.h, state.nu, i);
      Rng r = step_rng.with_unit(static_cast<std::uint64_t>(i) + 1);
      alpha.row(i) = sample_mvn_precision(
          post.mean, checked_llt(post.precision, "individual-effect precision"), r);
    }
  });
  return alpha;
}

Eigen::MatrixXd quant_step_nu(const QuantState& state, const PanelDataset& data,
                              const Rng& step_rng, int threads) {
  const Eigen::Index n = data.n(), T = data.T(), l = data.l();
  const double tau2 = state.qp.tau * state.qp.tau;
  const double eta = state.h * (state.qp.theta * state.qp.theta / tau2 + 2.0);
  Eigen::MatrixXd nu(n, T);
  parallel_for(n, threads, [&](Eigen::Index lo, Eigen::Index hi) {
    for (Eigen::Index i = lo; i < hi; ++i) {
      Stacked s = stack(data, i);
      Eigen::VectorXd resid = s.y - s.X * state.beta;
      if (l > 0) resid -= s.S * state.alpha.row(i).transpose();
      for (Eigen::Index t = 0; t < T; ++t) {
        double lambda = state.h * resid(t) * resid(t) / tau2;
        Rng r = step_rng.with_unit(static_cast<std::uint64_t>(i * T + t) + 1);
        nu(i, t) = sample_gig_half(lambda, eta, r);
        assert(nu(i, t) > 0.0);
      }
    }
  });
  return nu;
}

double quant_step_h(const QuantState& state, const PanelDataset& data,
                    const PriorSpec& priors, Rng& rng) {
  double c1, d1;
  detail::quant_h_params(data, state.beta, state.alpha, state.qp, state.nu, priors, c1, d1);
  return sample_gamma(0.5 * c1, 0.5 * d1, rng);
}

void mean_sweep(MeanState& state, const PanelDataset& data, const PriorSpec& priors,
                std::uint64_t sweep, const Rng& master, int threads) {
  {
    Rng r = step_stream(master, StepId::mean_beta, sweep);
    state.beta = mean_step_beta(state, data, priors, r, threads);
  }
  if (data.l() > 0) {
    Rng ra = step_stream(master, StepId::mean_alpha, sweep);
    state.alpha = mean_step_alpha(state, data, ra, threads);
    Rng rs = step_stream(master, StepId::sigma, sweep);
    SpdMatrix Sigma_inv = step_sigma_inv(state.alpha, priors, rs);
    state.Sigma = SpdMatrix(Sigma_inv.inverse());
  }
  {
    Rng r = step_stream(master, StepId::mean_h, sweep);
    state.h = mean_step_h(state, data, priors, r);
    assert(state.h > 0.0);
  }
}

void quant_sweep(QuantState& state, const PanelDataset& data, const PriorSpec& priors,
                 std::uint64_t sweep, const Rng& master, int threads) {
  {
    Rng r = step_stream(master, StepId::quant_beta, sweep);
    state.beta = quant_step_beta(state, data, priors, r, threads);
  }
  if (data.l() > 0) {
    Rng ra = step_stream(master, StepId::quant_alpha, sweep);
    state.alpha = quant_step_alpha(state, data, ra, threads);
  }
  {
    Rng rn = step_stream(master, StepId::quant_nu, sweep);
    state.nu = quant_step_nu(state, data, rn, threads);
  }
  if (data.l() > 0) {
    Rng rs = step_stream(master, StepId::sigma, sweep);
    SpdMatrix Sigma_inv = step_sigma_inv(state.alpha, priors, rs);
    state.Sigma = SpdMatrix(Sigma_inv.inverse());
  }
  {
    Rng r = step_stream(master, StepId::quant_h, sweep);
    state.h = quant_step_h(state, data, priors, r);
    assert(state.h > 0.0);
  }
}

MeanState init_mean_state(const PanelDataset& data, const Rng& master) {
  MeanState st;
  st.beta = Eigen::VectorXd::Zero(data.k());
  st.h = 1.0;
  const Eigen::Index n = data.n(), l = data.l();
  st.alpha = Eigen::MatrixXd::Zero(n, l);
  if (l > 0) {
    st.Sigma = SpdMatrix::identity(l);
    for (Eigen::Index i = 0; i < n; ++i) {
      Rng r = step_stream(master, StepId::init_alpha, 0, static_cast<std::uint64_t>(i) + 1);
      for (Eigen::Index j = 0; j < l; ++j) st.alpha(i, j) = r.normal();
    }
  }
  return st;
}

QuantState init_quant_state(const PanelDataset& data, double p, const Rng& master) {
  QuantState st;
  st.qp = al_params(p);
  st.beta = Eigen::VectorXd::Zero(data.k());
  st.h = 1.0;
  st.nu = Eigen::MatrixXd::Ones(data.n(), data.T());
  const Eigen::Index n = data.n(), l = data.l();
  st.alpha = Eigen::MatrixXd::Zero(n, l);
  if (l > 0) {
    st.Sigma = SpdMatrix::identity(l);
    for (Eigen::Index i = 0; i < n; ++i) {
      Rng r = step_stream(master, StepId::init_alpha, 0, static_cast<std::uint64_t>(i) + 1);
      for (Eigen::Index j = 0; j < l; ++j) st.alpha(i, j) = r.normal();
    }
  }
  return st;
}

namespace {

template <typename State, typename SweepFn, typename RecordFn>
void run_chain(const RunConfig& config, State& state, SweepFn&& do_sweep,
               RecordFn&& record) {
  std::int64_t stored = 0;
  for (std::int64_t sweep = 1; sweep <= config.iterations; ++sweep) {
    do_sweep(state, static_cast<std::uint64_t>(sweep));
    if (sweep > config.burn_in && (sweep - config.burn_in) % config.thin == 0)
      record(state, stored++);
  }
}

void fill_common(ChainResult& res, const PanelDataset& data, const PriorSpec& priors,
                 const RunConfig& config) {
  res.n = data.n();
  res.T = data.T();
  res.k = data.k();
  res.l = data.l();
  res.config = config;
  res.priors = priors;
  res.fixed_names = data.fixed_names();
  res.random_names = data.random_names();
  std::int64_t D = config.stored_draws();
  res.beta.resize(D, res.k);
  res.h.resize(D);
  res.sigma.resize(D, packed_sigma_size(res.l));
  res.alpha.resize(D, res.n * res.l);
}

void record_sigma_row(ChainResult& res, const SpdMatrix& Sigma, std::int64_t d) {
  for (Eigen::Index i = 0; i < res.l; ++i)
    for (Eigen::Index j = 0; j <= i; ++j)
      res.sigma(d, packed_sigma_index(i, j)) = Sigma.mat()(i, j);
}

}  // namespace

ChainResult run_mean_gibbs(const PanelDataset& data, const PriorSpec& priors,
                           const RunConfig& config, const Rng& rng) {
  config.validate();
  const bool with_re = config.include_random_effects && data.l() > 0;
  std::optional<PanelDataset> stripped;
  if (!with_re && data.l() > 0) stripped.emplace(strip_random_columns(data));
  const PanelDataset& d = stripped ? *stripped : data;
  priors.validate(d.k(), d.l());

  ChainResult res;
  res.model = "mean";
  res.include_random_effects = with_re;
  fill_common(res, d, priors, config);

  auto t0 = std::chrono::steady_clock::now();
  MeanState state = init_mean_state(d, rng);
  run_chain(
      config, state,
      [&](MeanState& st, std::uint64_t sweep) {
        mean_sweep(st, d, priors, sweep, rng, config.thread_count);
      },
      [&](const MeanState& st, std::int64_t drow) {
        res.beta.row(drow) = st.beta;
        res.h(drow) = st.h;
        if (d.l() > 0) {
          record_sigma_row(res, st.Sigma, drow);
          for (Eigen::Index i = 0; i < d.n(); ++i)
            for (Eigen::Index j = 0; j < d.l(); ++j)
              res.alpha(drow, i * d.l() + j) = st.alpha(i, j);
        }
      });
  auto t1 = std::chrono::steady_clock::now();
  res.elapsed_seconds = std::chrono::duration<double>(t1 - t0).count();
  if (config.iterations > 0)
    res.seconds_per_sweep = res.elapsed_seconds / static_cast<double>(config.iterations);
  return res;
}

ChainResult run_quantile_gibbs(const PanelDataset& data, const PriorSpec& priors, double p,
                               const RunConfig& config, const Rng& rng) {
  config.validate();
  al_params(p);  // validates the quantile level
  const bool with_re = config.include_random_effects && data.l() > 0;
  std::optional<PanelDataset> stripped;
  if (!with_re && data.l() > 0) stripped.emplace(strip_random_columns(data));
  const PanelDataset& d = stripped ? *stripped : data;
  priors.validate(d.k(), d.l());

  ChainResult res;
  res.model = "quantile";
  res.p = p;
  res.include_random_effects = with_re;
  fill_common(res, d, priors, config);
  res.nu.resize(config.stored_draws(), d.n() * d.T());

  auto t0 = std::chrono::steady_clock::now();
  QuantState state = init_quant_state(d, p, rng);
  run_chain(
      config, state,
      [&](QuantState& st, std::uint64_t sweep) {
        quant_sweep(st, d, priors, sweep, rng, config.thread_count);
      },
      [&](const QuantState& st, std::int64_t drow) {
        res.beta.row(drow) = st.beta;
        res.h(drow) = st.h;
        if (d.l() > 0) {
          record_sigma_row(res, st.Sigma, drow);
          for (Eigen::Index i = 0; i < d.n(); ++i)
            for (Eigen::Index j = 0; j < d.l(); ++j)
              res.alpha(drow, i * d.l() + j) = st.alpha(i, j);
        }
        for (Eigen::Index i = 0; i < d.n(); ++i)
          for (Eigen::Index t = 0; t < d.T(); ++t)
            res.nu(drow, i * d.T() + t) = st.nu(i, t);
      });
  auto t1 = std::chrono::steady_clock::now();
  res.elapsed_seconds = std::chrono::duration<double>(t1 - t0).count();
  if (config.iterations > 0)
    res.seconds_per_sweep = res.elapsed_seconds / static_cast<double>(config.iterations);
  return res;
}

}  // namespace blqr
