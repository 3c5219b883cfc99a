#include <gtest/gtest.h>

#include <boost/math/distributions/chi_squared.hpp>

#include "safex/estimator.hpp"

using namespace safex;

namespace {

/// Episodes of length 20 from x0 = 0 with i.i.d. uniform actions in [-1, 1]^d'.
TrainingData uniform_data(const LinearGaussianModel& m, Index n, std::uint64_t seed) {
  Rng rng(seed);
  EpisodeLog log;
  const Index dp = m.action_dim();
  const Policy p = [dp](const Vector&, int, Rng& r) {
    Vector u(dp);
    for (Index i = 0; i < dp; ++i) u[i] = r.uniform(-1.0, 1.0);
    return u;
  };
  while (static_cast<Index>(log.triple_count()) < n)
    log.append(run_episode(m, Vector::Zero(m.state_dim()), p, 20, rng));
  return log.training_data();
}

}  // namespace

TEST(FitLeastSquares, NoiselessRecoveryIsExact) {
  const auto m = random_stable_model(5, 2, 0.9, 3, 0.0);
  const Theta fit = fit_least_squares(uniform_data(m, 500, 1));
  EXPECT_LE(frobenius_distance(fit, m.theta()), 1e-8);
}

TEST(FitLeastSquares, DuplicatedDataGivesSameFit) {
  const auto m = random_stable_model(3, 2, 0.8, 4, 0.05);
  const TrainingData d = uniform_data(m, 300, 2);
  TrainingData dd;
  dd.X.resize(2 * d.X.rows(), d.X.cols());
  dd.Y.resize(2 * d.Y.rows(), d.Y.cols());
  dd.X << d.X, d.X;
  dd.Y << d.Y, d.Y;
  EXPECT_LE(frobenius_distance(fit_least_squares(d), fit_least_squares(dd)), 1e-10);
}

TEST(FitLeastSquares, ActionRotationEquivariance) {
  const auto m = random_stable_model(3, 2, 0.8, 5, 0.05);
  TrainingData d = uniform_data(m, 400, 3);
  const double th = 0.7;
  Matrix R(2, 2);
  R << std::cos(th), -std::sin(th), std::sin(th), std::cos(th);
  const Theta base = fit_least_squares(d);
  d.X.rightCols(2) = d.X.rightCols(2) * R.transpose();  // u_i -> R u_i
  const Theta rot = fit_least_squares(d);
  EXPECT_LE((rot.B() - base.B() * R.transpose()).norm(), 1e-8);
  EXPECT_LE((rot.A() - base.A()).norm(), 1e-8);
}

TEST(FitLeastSquares, RankDeficientThrows) {
  const auto m = random_stable_model(2, 1, 0.5, 1, 0.0);
  Rng rng(1);
  EpisodeLog log;
  for (int e = 0; e < 5; ++e) log.append(run_episode(m, Vector::Zero(2), constant_policy(Vector::Ones(1)), 10, rng));
  // noiseless constant input from a fixed start: regressors lie in a low-dimensional set
  TrainingData d = log.training_data();
  d.X.col(0) = d.X.col(2);
  EXPECT_THROW(fit_least_squares(d), EstimationError);
}

TEST(FitLeastSquares, TooFewSamplesThrows) {
  const TrainingData d{Matrix::Ones(5, 7), Matrix::Zero(5, 5)};
  EXPECT_THROW(fit_least_squares(d), EstimationError);
}

TEST(EstimateSigma, ZeroResiduals) {
  const auto m = random_stable_model(3, 2, 0.9, 1, 0.0);
  const TrainingData d = uniform_data(m, 100, 1);
  EXPECT_NEAR(estimate_sigma(d, m.theta()), 0.0, 1e-12);
}

TEST(EstimateSigma, ConstantScalarResidual) {
  Rng rng(4);
  const Index n = 50;
  TrainingData d{Matrix(n, 2), Matrix(n, 1)};
  const Theta theta(Matrix::Constant(1, 1, 0.3), Matrix::Constant(1, 1, -1.2));
  const double r = 0.25;
  for (Index i = 0; i < n; ++i) {
    d.X(i, 0) = rng.normal();
    d.X(i, 1) = rng.normal();
    d.Y(i, 0) = 0.3 * d.X(i, 0) - 1.2 * d.X(i, 1) + r;
  }
  EXPECT_NEAR(estimate_sigma(d, theta), r * std::sqrt(static_cast<double>(n) / (n - 2)), 1e-12);
}

TEST(EstimateSigma, ConsistentAtTwentyThousand) {
  const auto m = random_stable_model(5, 2, 0.9, 1, 0.01);
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const ModelEstimate est = estimate_model(uniform_data(m, 20000, seed));
    EXPECT_GE(est.sigma_hat, 0.0095);
    EXPECT_LE(est.sigma_hat, 0.0105);
  }
}

TEST(EstimateModel, SecondMomentSummaries) {
  const auto m = random_stable_model(4, 2, 0.9, 2, 0.01);
  const ModelEstimate est = estimate_model(uniform_data(m, 400, 9));
  EXPECT_LE((est.Q_hat - est.Q_hat.transpose()).cwiseAbs().maxCoeff(), 1e-10);
  Eigen::SelfAdjointEigenSolver<Matrix> es(est.Q_hat);
  EXPECT_NEAR(est.lambda_min, es.eigenvalues().minCoeff(), 1e-14);
  EXPECT_GT(est.n, est.state_dim() + est.action_dim());
  EXPECT_EQ(est.n, 400);
}

TEST(EpsilonBound, FormulaOracle) {
  const auto m = random_stable_model(5, 2, 0.9, 1, 0.01);
  const ModelEstimate est = estimate_model(uniform_data(m, 2000, 4));
  boost::math::chi_squared_distribution<double> chi(7);
  const double q = boost::math::quantile(chi, 0.99);
  const double expect = 0.01 * std::sqrt(5.0 * q / (2000.0 * est.lambda_min));
  EXPECT_NEAR(epsilon_bound(est, 0.05, 0.01).epsilon, expect, 1e-12 * expect);
}

TEST(EpsilonBound, ScalingLaws) {
  ModelEstimate est;
  est.theta_hat = Theta(Matrix::Zero(3, 3), Matrix::Zero(3, 1));
  est.n = 1000;
  est.lambda_min = 0.3;
  est.Q_hat = Matrix::Identity(4, 4);
  const double base = epsilon_bound(est, 0.05, 0.1).epsilon;

  ModelEstimate twice = est;
  twice.n = 2000;
  EXPECT_NEAR(epsilon_bound(twice, 0.05, 0.1).epsilon, base / std::sqrt(2.0), 1e-14);
  EXPECT_EQ(epsilon_bound(est, 0.05, 0.0).epsilon, 0.0);

  ModelEstimate more_lambda = est;
  more_lambda.lambda_min = 0.6;
  EXPECT_LE(epsilon_bound(more_lambda, 0.05, 0.1).epsilon, base);
  EXPECT_GE(epsilon_bound(est, 0.05, 0.2).epsilon, base);

  ModelEstimate bigger = est;
  bigger.theta_hat = Theta(Matrix::Zero(4, 4), Matrix::Zero(4, 1));
  bigger.Q_hat = Matrix::Identity(5, 5);
  EXPECT_GE(epsilon_bound(bigger, 0.05, 0.1).epsilon, base);
}

TEST(EpsilonBound, SingularSecondMomentThrows) {
  ModelEstimate est;
  est.theta_hat = Theta(Matrix::Zero(2, 2), Matrix::Zero(2, 1));
  est.n = 10;
  est.lambda_min = 0.0;
  EXPECT_THROW(epsilon_bound(est, 0.05, 0.1), EstimationError);
  est.lambda_min = 1.0;
  EXPECT_THROW(epsilon_bound(est, 1.5, 0.1), ValidationError);
}

TEST(RowEllipsoid, ZeroDeviationAlwaysInside) {
  const auto m = random_stable_model(3, 2, 0.9, 3, 0.01);
  const ModelEstimate est = estimate_model(uniform_data(m, 500, 5));
  for (double alpha : {0.001, 0.1, 0.9})
    EXPECT_TRUE(row_ellipsoid_check(est, est.theta_hat.row(1), 1, alpha, 0.01));
}

TEST(RowEllipsoid, QuadraticFormMatchesLoop) {
  const auto m = random_stable_model(3, 2, 0.9, 3, 0.01);
  const ModelEstimate est = estimate_model(uniform_data(m, 500, 6));
  const RowVector star = m.theta().row(2);
  double q = 0.0;
  for (Index i = 0; i < 5; ++i)
    for (Index j = 0; j < 5; ++j)
      q += (est.theta_hat.row(2)[i] - star[i]) * est.Q_hat(i, j) * (est.theta_hat.row(2)[j] - star[j]);
  q *= static_cast<double>(est.n) / (0.01 * 0.01);
  EXPECT_NEAR(row_ellipsoid_statistic(est, star, 2, 0.01), q, 1e-9 * q);
}

TEST(RowEllipsoid, CoverageAtAlphaPointOne) {
  // 200 fits; coverage should be about 0.9, binomial sd sqrt(200 * 0.9 * 0.1) ~ 4.2.
  const auto m = random_stable_model(3, 2, 0.9, 7, 0.01);
  int inside = 0;
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const ModelEstimate est = estimate_model(uniform_data(m, 2000, 1000 + seed));
    inside += row_ellipsoid_check(est, m.theta().row(0), 0, 0.1, 0.01);
  }
  EXPECT_GE(inside, 180 - 3 * 4.25);
}

TEST(EpsilonBound, FrobeniusCoverage) {
  const auto m = random_stable_model(5, 2, 0.9, 1, 0.01);
  int covered = 0;
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    const ModelEstimate est = estimate_model(uniform_data(m, 2000, 500 + seed));
    covered += frobenius_distance(est.theta_hat, m.theta()) < epsilon_bound(est, 0.05, 0.01).epsilon;
  }
  EXPECT_GE(covered, 38);
}
