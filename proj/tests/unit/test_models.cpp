#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "opvi/models.hpp"
#include "oracles.hpp"

namespace opvi {
namespace {

constexpr double kGradTol = 1e-5;

Vector random_vector(std::mt19937_64& gen, Eigen::Index n, double sd = 1.0) {
  std::normal_distribution<double> nd(0.0, sd);
  Vector v(n);
  for (auto& x : v) x = nd(gen);
  return v;
}

void expect_prior_and_lik_grads(const TargetModel& m, std::mt19937_64& gen, int probes, double sd) {
  for (int p = 0; p < probes; ++p) {
    const Vector w = random_vector(gen, static_cast<Eigen::Index>(m.dim()), sd);
    const std::size_t k = static_cast<std::size_t>(p) % m.n_data();
    const Vector g = m.grad_log_lik(w, k);
    const Vector fd = oracle::central_difference([&](const Vector& z) { return m.log_lik(z, k); }, w);
    ASSERT_LT(oracle::relative_error(g, fd, 1e-4), kGradTol) << "probe " << p;
    const Vector gp = m.grad_log_prior(w);
    const Vector fdp = oracle::central_difference([&](const Vector& z) { return m.log_prior(z); }, w);
    ASSERT_LT(oracle::relative_error(gp, fdp, 1e-4), kGradTol) << "probe " << p;
  }
}

// --- mixture -----------------------------------------------------------------

TEST(MixtureGenerate, DegenerateCaseMean) {
  const auto d = mixture_generate(10000, 0.0, 0.0, 3);
  const double mean = std::accumulate(d.begin(), d.end(), 0.0) / static_cast<double>(d.size());
  EXPECT_LT(std::abs(mean), 3.0 * 2.0 / std::sqrt(10000.0));
}

TEST(MixtureGenerate, MixtureMean) {
  const auto d = mixture_generate(100000, 0.0, 1.0, 4);
  const double mean = std::accumulate(d.begin(), d.end(), 0.0) / static_cast<double>(d.size());
  // Var = sigma_x^2 + theta2^2 / 4.
  EXPECT_LT(std::abs(mean - 0.5), 3.0 * std::sqrt(4.25 / 100000.0));
}

TEST(MixtureGenerate, Deterministic) {
  EXPECT_EQ(mixture_generate(100, 0.0, 1.0, 9), mixture_generate(100, 0.0, 1.0, 9));
  EXPECT_NE(mixture_generate(100, 0.0, 1.0, 9), mixture_generate(100, 0.0, 1.0, 10));
  EXPECT_THROW(mixture_generate(0, 0.0, 1.0, 1), ConfigError);
}

TEST(MixtureGrad, CentredDatumIsZero) {
  const auto g = mixture_grad_log_lik(0.0, 0.0, 0.0);
  EXPECT_EQ(g[0], 0.0);
  EXPECT_EQ(g[1], 0.0);
}

TEST(MixtureGrad, MatchesFiniteDifferences) {
  std::mt19937_64 gen(1);
  std::normal_distribution<double> nd(0.0, 2.0);
  for (int i = 0; i < 100; ++i) {
    const double t1 = nd(gen), t2 = nd(gen), x = 2.0 * nd(gen);
    const auto g = mixture_grad_log_lik(t1, t2, x);
    const Vector fd = oracle::central_difference(
        [&](const Vector& th) { return mixture_log_lik(th(0), th(1), x); }, (Vector(2) << t1, t2).finished());
    EXPECT_LT(oracle::relative_error((Vector(2) << g[0], g[1]).finished(), fd, 1e-6), 1e-6);
  }
}

TEST(MixtureGrad, SecondComponentResidualForm) {
  const double t1 = 0.3, t2 = -1.2, s2 = 4.0;
  for (double x : {-3.0, 0.0, 0.7, 5.0}) {
    const double l1 = -0.5 * (x - t1) * (x - t1) / s2;
    const double l2 = -0.5 * (x - t1 - t2) * (x - t1 - t2) / s2;
    const double r2 = 1.0 / (1.0 + std::exp(l1 - l2));
    EXPECT_NEAR(mixture_grad_log_lik(t1, t2, x)[1], r2 * (x - t1 - t2) / s2, 1e-14);
  }
  EXPECT_EQ(mixture_grad_log_lik(t1, t2, t1 + t2)[1], 0.0);
}

TEST(MixtureLogLik, FiniteForExtremeParameters) {
  for (double t : {-1e4, -50.0, 50.0, 1e4}) {
    EXPECT_TRUE(std::isfinite(mixture_log_lik(t, -t, 3.0)));
    const auto g = mixture_grad_log_lik(t, -t, 3.0);
    EXPECT_TRUE(std::isfinite(g[0]) && std::isfinite(g[1]));
  }
}

TEST(MixtureModel, GradientsAndBatchSums) {
  const MixtureModel m(mixture_generate(200, 0.0, 1.0, 5));
  std::mt19937_64 gen(2);
  expect_prior_and_lik_grads(m, gen, 100, 2.0);
  const Vector w = (Vector(2) << 0.2, 0.9).finished();
  Vector sum = Vector::Zero(2);
  double ll = 0.0;
  for (std::size_t k = 0; k < m.n_data(); ++k) {
    sum += m.grad_log_lik(w, k);
    ll += m.log_lik(w, k);
  }
  EXPECT_LT((m.full_grad_log_lik(w) - sum).norm(), 1e-10);
  EXPECT_NEAR(m.full_log_lik(w), ll, 1e-9);
  Vector acc = Vector::Zero(2);
  m.accumulate_grad_log_lik(w, std::vector<std::size_t>{3, 8, 8}, acc);
  EXPECT_LT((acc - (m.grad_log_lik(w, 3) + 2.0 * m.grad_log_lik(w, 8))).norm(), 1e-14);
}

class MixtureGridTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    model_ = new MixtureModel(mixture_generate(2000, 0.0, 1.0, 1));
    grid_ = new MixtureGrid(mixture_posterior_grid(*model_, 200, GridWindow{}, 500, RngStream(1)));
  }
  static void TearDownTestSuite() {
    delete grid_;
    delete model_;
  }
  static MixtureModel* model_;
  static MixtureGrid* grid_;
};
MixtureModel* MixtureGridTest::model_ = nullptr;
MixtureGrid* MixtureGridTest::grid_ = nullptr;

TEST_F(MixtureGridTest, MassNormalizedAndReferenceInWindow) {
  EXPECT_NEAR(grid_->cell_mass.sum(), 1.0, 1e-12);
  EXPECT_GE(grid_->cell_mass.minCoeff(), 0.0);
  ASSERT_EQ(grid_->reference.rows(), 500);
  for (Eigen::Index i = 0; i < 500; ++i) {
    EXPECT_GE(grid_->reference(i, 0), -3.0);
    EXPECT_LE(grid_->reference(i, 0), 3.0);
    EXPECT_GE(grid_->reference(i, 1), -3.0);
    EXPECT_LE(grid_->reference(i, 1), 3.0);
  }
  EXPECT_FALSE(grid_->window_warning);
}

TEST_F(MixtureGridTest, ArgmaxNearAMode) {
  Eigen::Index r = 0, c = 0;
  grid_->log_density.maxCoeff(&r, &c);
  const double t1 = grid_->theta1_at(static_cast<std::size_t>(c));
  const double t2 = grid_->theta2_at(static_cast<std::size_t>(r));
  // Brute-force refinement around the argmax on a 5x finer local lattice.
  const double step = 6.0 / 200.0;
  double best = -INFINITY, b1 = t1, b2 = t2;
  for (int i = -10; i <= 10; ++i) {
    for (int j = -10; j <= 10; ++j) {
      const Vector w = (Vector(2) << t1 + i * step / 5, t2 + j * step / 5).finished();
      const double v = model_->full_log_lik(w) + model_->log_prior(w);
      if (v > best) {
        best = v;
        b1 = w(0);
        b2 = w(1);
      }
    }
  }
  EXPECT_LE(std::abs(b1 - t1), step);
  EXPECT_LE(std::abs(b2 - t2), step);
  // One of the two symmetric modes: (theta1, theta2) or (theta1 + theta2, -theta2).
  const bool near_truth = std::abs(t1) < 1.0 && std::abs(t2 - 1.0) < 1.0;
  const bool near_mirror = std::abs(t1 - 1.0) < 1.0 && std::abs(t2 + 1.0) < 1.0;
  EXPECT_TRUE(near_truth || near_mirror) << t1 << ", " << t2;
}

TEST_F(MixtureGridTest, ResolutionSelfConvergence) {
  const MixtureGrid fine = mixture_posterior_grid(*model_, 400, GridWindow{}, 10, RngStream(1));
  EXPECT_LT((fine.mean() - grid_->mean()).cwiseAbs().maxCoeff(), 1e-2);
}

TEST(MixtureGridWindow, WindowMissingThePriorWarns) {
  const MixtureModel m(mixture_generate(50, 0.0, 1.0, 1));
  const auto g = mixture_posterior_grid(m, 10, GridWindow{20, 30, 8, 12}, 10, RngStream(1));
  EXPECT_TRUE(g.window_warning);
  EXPECT_FALSE(mixture_posterior_grid(m, 10, GridWindow{-1, 1, -1, 1}, 10, RngStream(1)).window_warning);
  EXPECT_LT(prior_mass_in_window(MixtureParams{}, GridWindow{-1, 1, -1, 1}), 0.999);
  EXPECT_GT(prior_mass_in_window(MixtureParams{}, GridWindow{-20, 20, -20, 20}), 0.999);
  EXPECT_THROW(mixture_posterior_grid(m, 1, GridWindow{}, 10, RngStream(1)), ConfigError);
}

// --- linear regression -------------------------------------------------------

TEST(LinReg, OracleHandExample) {
  Matrix x(1, 1);
  x << 1.0;
  Vector y(1);
  y << 2.0;
  const LinRegModel m(x, y, 1.0, 1.0);
  EXPECT_NEAR(linreg_map_oracle(m, 1.0)(0), 1.0, 1e-15);
}

TEST(LinReg, OracleShrinksToZeroAsPriorWeightGrows) {
  const LinRegModel m = linreg_generate(100, 3, 1);
  EXPECT_LT(linreg_map_oracle(m, 1e12).norm(), 1e-6);
  EXPECT_GT(linreg_map_oracle(m, 1e-3).norm(), 0.1);
}

TEST(LinReg, OracleSatisfiesVanishingGradient) {
  const LinRegModel m = linreg_generate(10000, 5, 2);
  for (double eta : {1.0, 0.6079, 1e-4}) {
    const Vector w = linreg_map_oracle(m, eta);
    const Vector g = -(m.full_grad_log_lik(w) + eta * m.grad_log_prior(w));
    EXPECT_LT(g.norm(), 1e-8) << "eta " << eta;
  }
}

TEST(LinReg, GradientsAndClosedForms) {
  const LinRegModel m = linreg_generate(300, 4, 3, 0.5, 2.0);
  std::mt19937_64 gen(4);
  expect_prior_and_lik_grads(m, gen, 100, 1.0);
  const Vector w = random_vector(gen, 4);
  Vector g = Vector::Zero(4);
  double ll = 0.0;
  for (std::size_t k = 0; k < m.n_data(); ++k) {
    g += m.grad_log_lik(w, k);
    ll += m.log_lik(w, k);
  }
  EXPECT_LT(oracle::relative_error(m.full_grad_log_lik(w), g), 1e-10);
  EXPECT_NEAR(m.full_log_lik(w), ll, 1e-8 * std::abs(ll));
  EXPECT_NEAR(m.cost(w, 0.3), -ll - 0.3 * m.log_prior(w), 1e-8 * std::abs(ll));
}

TEST(LinReg, HeterogeneousColumns) {
  const LinRegModel m = linreg_generate(5000, 5, 5);
  const Vector sd = (m.design().array().square().colwise().mean()).sqrt().transpose();
  EXPECT_GT(sd.maxCoeff() / sd.minCoeff(), 8.0);
}

// --- datasets ----------------------------------------------------------------

TEST(CsvDataset, HeaderDetectionAndParsing) {
  const Dataset a = parse_csv_dataset("x1,x2,y\n1,2,3\n4,5,6\n", BnnTask::regression);
  ASSERT_EQ(a.size(), 2u);
  EXPECT_EQ(a.n_features(), 2u);
  EXPECT_EQ(a.targets(1), 6.0);
  const Dataset b = parse_csv_dataset("1,2,3\n4,5,6\n", BnnTask::regression);
  EXPECT_EQ(b.size(), 2u);
  EXPECT_EQ(b.features(1, 0), 4.0);
}

TEST(CsvDataset, Rejections) {
  EXPECT_THROW(parse_csv_dataset("1,2,3\n4,abc,6\n", BnnTask::regression), ConfigError);
  EXPECT_THROW(parse_csv_dataset("1,2,3\n4,5\n", BnnTask::regression), ConfigError);
  EXPECT_THROW(parse_csv_dataset("a,b\n", BnnTask::regression), ConfigError);
  EXPECT_THROW(parse_csv_dataset("1,2,0.5\n", BnnTask::classification), ConfigError);
  EXPECT_THROW(parse_csv_dataset("1,2,-1\n", BnnTask::classification), ConfigError);
  EXPECT_EQ(parse_csv_dataset("1,2,3\n", BnnTask::classification).targets(0), 3.0);
  EXPECT_THROW(load_csv_dataset("/nonexistent/file.csv", BnnTask::regression), ConfigError);
}

TEST(Datasets, SplitAndStandardize) {
  const Dataset ds = synthetic_regression(1000, 7);
  EXPECT_EQ(ds.n_features(), 8u);
  const auto split = split_dataset(ds, 0.1, RngStream(1));
  EXPECT_EQ(split.test.size(), 100u);
  EXPECT_EQ(split.train.size(), 900u);
  const auto again = split_dataset(ds, 0.1, RngStream(1));
  EXPECT_EQ(split.test.features, again.test.features);
  const Standardizer st = Standardizer::fit(split.train, BnnTask::regression);
  const Dataset z = st.apply(split.train, BnnTask::regression);
  EXPECT_LT(z.features.colwise().mean().cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_NEAR(z.targets.mean(), 0.0, 1e-12);
  EXPECT_NEAR(std::sqrt(z.targets.squaredNorm() / 900.0), 1.0, 1e-9);
  const Dataset c = synthetic_classification(500, 6, 4, 2);
  EXPECT_EQ(c.n_features(), 6u);
  EXPECT_GE(c.targets.minCoeff(), 0.0);
  EXPECT_LE(c.targets.maxCoeff(), 3.0);
}

// --- BNN ---------------------------------------------------------------------

Dataset tiny_dataset(std::size_t rows, std::size_t inputs, BnnTask task, std::size_t classes, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> nd(0.0, 1.0);
  Dataset d;
  d.features.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(inputs));
  d.targets.resize(static_cast<Eigen::Index>(rows));
  for (Eigen::Index i = 0; i < d.features.size(); ++i) d.features.data()[i] = nd(gen);
  for (Eigen::Index r = 0; r < d.targets.size(); ++r) {
    d.targets(r) = task == BnnTask::regression ? nd(gen) : static_cast<double>(static_cast<std::size_t>(r) % classes);
  }
  return d;
}

TEST(Bnn, ParamCountLayout) {
  BnnArchitecture a{8, 50, 1, Activation::tanh, BnnTask::regression};
  EXPECT_EQ(a.param_count(), 8u * 50u + 50u + 50u + 1u + 1u);
  BnnArchitecture c{5, 3, 2, Activation::sigmoid, BnnTask::classification};
  EXPECT_EQ(c.param_count(), 15u + 3u + 6u + 2u);
  EXPECT_THROW((BnnArchitecture{5, 3, 2, Activation::tanh, BnnTask::regression}.validate()), ConfigError);
  EXPECT_THROW((BnnArchitecture{5, 0, 1, Activation::tanh, BnnTask::regression}.validate()), ConfigError);
}

TEST(Bnn, ZeroWeightsForward) {
  const BnnModel reg({4, 3, 1, Activation::tanh, BnnTask::regression}, tiny_dataset(5, 4, BnnTask::regression, 1, 1));
  const Eigen::RowVectorXd in = Eigen::RowVectorXd::Constant(4, 0.7);
  EXPECT_EQ(bnn_forward(reg, Vector::Zero(static_cast<Eigen::Index>(reg.dim())), in)(0), 0.0);
  const BnnModel cls({4, 3, 10, Activation::sigmoid, BnnTask::classification},
                     tiny_dataset(20, 4, BnnTask::classification, 10, 2));
  const Vector p = bnn_forward(cls, Vector::Zero(static_cast<Eigen::Index>(cls.dim())), in);
  for (Eigen::Index i = 0; i < 10; ++i) EXPECT_NEAR(p(i), 0.1, 1e-15);
}

TEST(Bnn, IdentityUnitIsAffine) {
  const BnnModel m({2, 1, 1, Activation::identity, BnnTask::regression}, tiny_dataset(3, 2, BnnTask::regression, 1, 3));
  // W1 = (2, -1), b1 = 0.5, W2 = 3, b2 = -1, log precision 0.
  Vector w(6);
  w << 2, -1, 0.5, 3, -1, 0;
  ASSERT_EQ(m.dim(), 6u);
  Eigen::RowVectorXd in(2);
  in << 1.5, 4.0;
  EXPECT_NEAR(bnn_forward(m, w, in)(0), 3.0 * (2 * 1.5 - 4.0 + 0.5) - 1.0, 1e-14);
}

TEST(Bnn, DimensionMismatchIsConfigError) {
  const BnnModel m({3, 2, 1, Activation::tanh, BnnTask::regression}, tiny_dataset(3, 3, BnnTask::regression, 1, 4));
  EXPECT_THROW(bnn_forward(m, Vector::Zero(3), Eigen::RowVectorXd::Zero(3)), ConfigError);
  EXPECT_THROW(bnn_forward(m, Vector::Zero(static_cast<Eigen::Index>(m.dim())), Eigen::RowVectorXd::Zero(4)), ConfigError);
  EXPECT_THROW(BnnModel({4, 2, 1, Activation::tanh, BnnTask::regression}, tiny_dataset(3, 3, BnnTask::regression, 1, 4)),
               ConfigError);
}

TEST(Bnn, RegressionGradientsAllActivations) {
  for (Activation act : {Activation::tanh, Activation::sigmoid, Activation::identity}) {
    const BnnModel m({5, 3, 1, act, BnnTask::regression}, tiny_dataset(10, 5, BnnTask::regression, 1, 5));
    std::mt19937_64 gen(6);
    expect_prior_and_lik_grads(m, gen, 100, 0.8);
  }
}

TEST(Bnn, ClassificationGradients) {
  for (Activation act : {Activation::tanh, Activation::sigmoid}) {
    const BnnModel m({5, 3, 2, act, BnnTask::classification}, tiny_dataset(10, 5, BnnTask::classification, 2, 7));
    std::mt19937_64 gen(8);
    expect_prior_and_lik_grads(m, gen, 100, 0.8);
  }
}

TEST(Bnn, ZeroResidualHasNoWeightGradient) {
  Dataset d = tiny_dataset(1, 3, BnnTask::regression, 1, 9);
  const BnnModel probe({3, 2, 1, Activation::tanh, BnnTask::regression}, d);
  std::mt19937_64 gen(10);
  const Vector w = random_vector(gen, static_cast<Eigen::Index>(probe.dim()));
  d.targets(0) = bnn_forward(probe, w, d.features.row(0))(0);
  const BnnModel m({3, 2, 1, Activation::tanh, BnnTask::regression}, d);
  const Vector g = m.grad_log_lik(w, 0);
  EXPECT_LT(g.head(g.size() - 1).norm(), 1e-12);
  // Only the noise-precision term remains: d/ds of s/2 at zero residual.
  EXPECT_NEAR(g(g.size() - 1), 0.5, 1e-12);
}

TEST(Bnn, SaturatedSoftmaxGradientVanishes) {
  Dataset d = tiny_dataset(1, 2, BnnTask::classification, 3, 11);
  d.targets(0) = 1.0;
  const BnnModel m({2, 2, 3, Activation::tanh, BnnTask::classification}, d);
  Vector w = Vector::Zero(static_cast<Eigen::Index>(m.dim()));
  // Output bias b2 sits at the end of the vector: push class 1 far up.
  const Eigen::Index b2 = static_cast<Eigen::Index>(m.dim()) - 3;
  w(b2 + 1) = 60.0;
  EXPECT_LT(m.grad_log_lik(w, 0).norm(), 1e-20);
  EXPECT_NEAR(m.log_lik(w, 0), 0.0, 1e-20);
}

TEST(Bnn, LogPredictiveInOriginalUnits) {
  Dataset d = tiny_dataset(5, 2, BnnTask::regression, 1, 12);
  const BnnModel m({2, 2, 1, Activation::tanh, BnnTask::regression}, d, BnnPrior{}, 10.0, 2.0);
  Vector w = Vector::Zero(static_cast<Eigen::Index>(m.dim()));
  const Eigen::RowVectorXd in = Eigen::RowVectorXd::Zero(2);
  // Zero network predicts the target mean 10 with standardized noise precision 1.
  EXPECT_EQ(m.predict_mean(w, in), 10.0);
  const double y = 13.0;
  const double z = (y - 10.0) / 2.0;
  EXPECT_NEAR(m.log_predictive(w, in, y), -0.5 * std::log(2 * M_PI) - 0.5 * z * z - std::log(2.0), 1e-14);
}

}  // namespace
}  // namespace opvi
