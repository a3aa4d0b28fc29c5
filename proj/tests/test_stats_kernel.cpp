#include <cmath>
#include <vector>

#include "blqr/error.hpp"
#include "blqr/stats_kernel.hpp"
#include "doctest.h"

using namespace blqr;

TEST_CASE("check loss branches and reflection identity") {
  CHECK(check_loss(0.0, 0.37) == 0.0);
  CHECK(check_loss(1.0, 0.25) == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(check_loss(-1.0, 0.25) == doctest::Approx(0.75).epsilon(1e-12));
  for (double u : {-3.2, -1.0, -0.1, 0.0, 0.4, 2.7})
    for (double p : {0.05, 0.2, 0.5, 0.8, 0.95})
      CHECK(check_loss(u, p) == doctest::Approx(check_loss(-u, 1.0 - p)).epsilon(1e-12));
}

TEST_CASE("asymmetric-Laplace mixture coefficients") {
  QuantileParams q5 = al_params(0.5);
  CHECK(q5.theta == doctest::Approx(0.0));
  CHECK(q5.tau == doctest::Approx(2.8284271247461903).epsilon(1e-12));
  QuantileParams q25 = al_params(0.25);
  CHECK(q25.theta == doctest::Approx(2.666667).epsilon(1e-6));
  CHECK(q25.tau == doctest::Approx(3.265986).epsilon(1e-6));
  QuantileParams q8 = al_params(0.8);
  CHECK(q8.theta == doctest::Approx(-3.75).epsilon(1e-12));
  CHECK(q8.tau == doctest::Approx(3.535534).epsilon(1e-6));
  for (double p : {0.1, 0.25, 0.4, 0.45}) {
    QuantileParams a = al_params(p), b = al_params(1.0 - p);
    CHECK(a.theta == doctest::Approx(-b.theta).epsilon(1e-12));
    CHECK(a.tau == doctest::Approx(b.tau).epsilon(1e-12));
  }
  CHECK_THROWS_AS(al_params(0.0), DomainError);
  CHECK_THROWS_AS(al_params(1.0), DomainError);
}

TEST_CASE("asymmetric-Laplace log density") {
  CHECK(al_log_density(3.0, 3.0, 1.0, 0.5) == doctest::Approx(std::log(0.25)).epsilon(1e-12));
  CHECK(al_log_density(5.0, 3.0, 1.0, 0.5) ==
        doctest::Approx(std::log(0.25) - 1.0).epsilon(1e-12));

  // The exponentiated density must integrate to one. The grid is split at
  // the kink so each half is smooth under the trapezoid rule; each half
  // extends far enough for its own exponential decay rate.
  for (auto [h, p] : std::vector<std::pair<double, double>>{{1.0, 0.3}, {0.7, 0.8}}) {
    auto integrate = [&](double lo, double hi, int steps) {
      double dx = (hi - lo) / steps;
      double acc = 0.5 * (std::exp(al_log_density(lo, 0.0, h, p)) +
                          std::exp(al_log_density(hi, 0.0, h, p)));
      for (int i = 1; i < steps; ++i)
        acc += std::exp(al_log_density(lo + i * dx, 0.0, h, p));
      return acc * dx;
    };
    double lo = -80.0 / (h * (1.0 - p)), hi = 80.0 / (h * p);
    double total = integrate(lo, 0.0, 600000) + integrate(0.0, hi, 600000);
    CHECK(total == doctest::Approx(1.0).epsilon(1e-6));
  }
}

TEST_CASE("asymmetric-Laplace mixture draws") {
  const int N = 1000000;
  for (double p : {0.2, 0.5, 0.8}) {
    QuantileParams qp = al_params(p);
    const double h = 1.3;
    Rng rng = Rng(99).substream(1, 0, static_cast<std::uint64_t>(p * 1000));
    double sum = 0.0, sumsq = 0.0;
    int below = 0;
    for (int i = 0; i < N; ++i) {
      double e = sample_al_mixture(qp, h, rng);
      sum += e;
      sumsq += e * e;
      if (e <= 0.0) ++below;
    }
    double mean = sum / N;
    double var = sumsq / N - mean * mean;
    double true_mean = qp.theta / h;
    double true_var = (qp.theta * qp.theta + qp.tau * qp.tau) / (h * h);
    CHECK(static_cast<double>(below) / N == doctest::Approx(p).epsilon(0.03));
    CHECK(std::abs(static_cast<double>(below) / N - p) < 0.005);
    if (p == 0.5)
      CHECK(std::abs(mean) < 5.0 * std::sqrt(true_var / N));
    else
      CHECK(mean == doctest::Approx(true_mean).epsilon(0.01));
    CHECK(var == doctest::Approx(true_var).epsilon(0.01));
  }
}

TEST_CASE("gamma sampler in the shape-rate convention") {
  const int N = 1000000;
  Rng rng(2024);
  double sum = 0.0, sumsq = 0.0;
  for (int i = 0; i < N; ++i) {
    double x = sample_gamma(5.0, 2.0, rng);
    sum += x;
    sumsq += x * x;
  }
  double mean = sum / N;
  double var = sumsq / N - mean * mean;
  CHECK(mean == doctest::Approx(2.5).epsilon(0.01));
  CHECK(var == doctest::Approx(5.0 / 4.0).epsilon(0.02));

  Rng rng2(2025);
  int below = 0;
  for (int i = 0; i < N; ++i)
    if (sample_gamma(1.0, 1.0, rng2) <= 1.0) ++below;
  CHECK(static_cast<double>(below) / N ==
        doctest::Approx(1.0 - std::exp(-1.0)).epsilon(0.008));

  // shape < 1 goes through the power-boost branch
  Rng rng3(2026);
  double s3 = 0.0;
  for (int i = 0; i < N; ++i) s3 += sample_gamma(0.5, 2.0, rng3);
  CHECK(s3 / N == doctest::Approx(0.25).epsilon(0.02));

  Rng rng4(2027);
  double s4 = 0.0;
  for (int i = 0; i < 100000; ++i) s4 += sample_chisq(3.0, rng4);
  CHECK(s4 / 100000 == doctest::Approx(3.0).epsilon(0.02));

  Rng rng5(1);
  CHECK_THROWS_AS(sample_gamma(0.0, 1.0, rng5), DomainError);
  CHECK_THROWS_AS(sample_gamma(1.0, 0.0, rng5), DomainError);
}

TEST_CASE("generalized inverse Gaussian with index one half") {
  const int N = 1000000;
  struct Case {
    double a, b;
  };
  for (Case c : {Case{1.0, 1.0}, Case{4.0, 1.0}, Case{0.25, 9.0}}) {
    Rng rng = Rng(7).substream(2, 0, static_cast<std::uint64_t>(c.a * 100 + c.b));
    double sum = 0.0, suminv = 0.0;
    for (int i = 0; i < N; ++i) {
      double x = sample_gig_half(c.a, c.b, rng);
      REQUIRE(x > 0.0);
      sum += x;
      suminv += 1.0 / x;
    }
    double want_mean = std::sqrt(c.a / c.b) + 1.0 / c.b;
    double want_inv = std::sqrt(c.b / c.a);
    CHECK(sum / N == doctest::Approx(want_mean).epsilon(0.01));
    CHECK(suminv / N == doctest::Approx(want_inv).epsilon(0.01));
  }

  // Mode of the (1,1) case: (-0.5 + sqrt(1.25)) ~ 0.618, located by a
  // histogram peak with parabolic refinement.
  {
    Rng rng(31337);
    const double binw = 0.02;
    std::vector<double> hist(150, 0.0);
    for (int i = 0; i < N; ++i) {
      double x = sample_gig_half(1.0, 1.0, rng);
      auto bin = static_cast<std::size_t>(x / binw);
      if (bin < hist.size()) hist[bin] += 1.0;
    }
    std::size_t arg = 1;
    for (std::size_t i = 1; i + 1 < hist.size(); ++i)
      if (hist[i] > hist[arg]) arg = i;
    double ym = hist[arg - 1], y0 = hist[arg], yp = hist[arg + 1];
    double shift = 0.5 * (ym - yp) / (ym - 2.0 * y0 + yp);
    double peak = (static_cast<double>(arg) + 0.5 + shift) * binw;
    CHECK(peak == doctest::Approx(-0.5 + std::sqrt(1.25)).epsilon(0.05));
  }

  // Zero first parameter degenerates to Gamma(1/2, b/2).
  {
    Rng rng(99);
    double sum = 0.0;
    for (int i = 0; i < N; ++i) sum += sample_gig_half(0.0, 2.0, rng);
    CHECK(sum / N == doctest::Approx(0.5).epsilon(0.02));
  }

  Rng rng(1);
  CHECK_THROWS_AS(sample_gig_half(-1.0, 1.0, rng), DomainError);
  CHECK_THROWS_AS(sample_gig_half(1.0, 0.0, rng), DomainError);
}

TEST_CASE("wishart moments and positive definiteness") {
  const int N = 100000;
  Rng rng(555);
  SpdMatrix scale = SpdMatrix::identity(2);
  Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(2, 2);
  for (int i = 0; i < N; ++i) acc += sample_wishart(5.0, scale, rng).mat();
  acc /= N;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      CHECK(std::abs(acc(i, j) - (i == j ? 5.0 : 0.0)) < 0.1);  // 2% of nu

  Rng rng1(556);
  double s = 0.0;
  for (int i = 0; i < N; ++i) s += sample_wishart(2.0, SpdMatrix::identity(1), rng1).mat()(0, 0);
  CHECK(s / N == doctest::Approx(2.0).epsilon(0.02));

  // Construction already runs a Cholesky; a throw here would fail the test.
  Rng rng2(557);
  SpdMatrix d1(Eigen::MatrixXd{{2.0, 0.6}, {0.6, 1.0}});
  for (int i = 0; i < 1000; ++i) (void)sample_wishart(3.5, d1, rng2);

  Rng rng3(558);
  CHECK_THROWS_AS(sample_wishart(0.5, SpdMatrix::identity(2), rng3), DomainError);
}

TEST_CASE("multivariate normal, covariance and precision forms") {
  const int N = 500000;
  Rng rng(777);
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(2);
  SpdMatrix cov = SpdMatrix::identity(2);
  Eigen::VectorXd msum = Eigen::VectorXd::Zero(2);
  Eigen::VectorXd vsum = Eigen::VectorXd::Zero(2);
  for (int i = 0; i < N; ++i) {
    Eigen::VectorXd x = sample_mvn(mean, cov, rng);
    msum += x;
    vsum += x.cwiseProduct(x);
  }
  for (int j = 0; j < 2; ++j) {
    CHECK(std::abs(msum(j) / N) < 0.005);
    CHECK(vsum(j) / N == doctest::Approx(1.0).epsilon(0.01));
  }

  Rng rng2(778);
  SpdMatrix cov2(Eigen::MatrixXd{{4.0, 0.0}, {0.0, 1.0}});
  Eigen::MatrixXd second = Eigen::MatrixXd::Zero(2, 2);
  for (int i = 0; i < N; ++i) {
    Eigen::VectorXd x = sample_mvn(mean, cov2, rng2);
    second += x * x.transpose();
  }
  second /= N;
  CHECK(second(0, 0) == doctest::Approx(4.0).epsilon(0.02));
  CHECK(second(1, 1) == doctest::Approx(1.0).epsilon(0.02));
  CHECK(std::abs(second(0, 1)) < 0.08);

  Rng rng3(779);
  Eigen::VectorXd m3(2);
  m3 << 3.0, -1.5;
  Eigen::VectorXd x3 = sample_mvn(m3, SpdMatrix::scaled_identity(2, 1e-12), rng3);
  CHECK((x3 - m3).cwiseAbs().maxCoeff() < 1e-5);

  // Precision form agrees with the covariance form in distribution.
  Rng rng4(780);
  Eigen::MatrixXd prec{{2.0, -0.8}, {-0.8, 1.0}};
  Eigen::LLT<Eigen::MatrixXd> llt(prec);
  Eigen::MatrixXd cov_want = prec.inverse();
  Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(2, 2);
  Eigen::VectorXd macc = Eigen::VectorXd::Zero(2);
  for (int i = 0; i < N; ++i) {
    Eigen::VectorXd x = sample_mvn_precision(m3, llt, rng4);
    macc += x;
    acc += (x - m3) * (x - m3).transpose();
  }
  macc /= N;
  acc /= N;
  CHECK((macc - m3).cwiseAbs().maxCoeff() < 0.01);
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      CHECK(acc(i, j) == doctest::Approx(cov_want(i, j)).epsilon(0.03));
}
