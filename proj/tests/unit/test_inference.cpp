#include <gtest/gtest.h>

#include <cmath>

#include "stadr/inference.hpp"
#include "test_support.hpp"

using namespace stadr;
using stadr::testing::random_params;
using stadr::testing::simulated_dataset;
using stadr::testing::small_grid;

namespace {

Eigen::VectorXd finite_difference_gradient(Objective& obj, const ModelParameters& p, double h = 1e-4) {
  Eigen::VectorXd x = p.packed();
  Eigen::VectorXd g(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    ModelParameters plus = p, minus = p;
    Eigen::VectorXd xp = x, xm = x;
    xp[i] += h;
    xm[i] -= h;
    plus.unpack(xp);
    minus.unpack(xm);
    g[i] = (obj.log_posterior(plus) - obj.log_posterior(minus)) / (2.0 * h);
  }
  return g;
}

void expect_gradients_close(const Eigen::VectorXd& a, const Eigen::VectorXd& b, double rel) {
  ASSERT_EQ(a.size(), b.size());
  const double scale = std::max(1.0, b.cwiseAbs().maxCoeff());
  for (Eigen::Index i = 0; i < a.size(); ++i)
    EXPECT_NEAR(a[i], b[i], rel * std::max(std::abs(b[i]), 1e-2 * scale)) << "coordinate " << i;
}

}  // namespace

class ExactGradient : public ::testing::TestWithParam<ModelKind> {};

TEST_P(ExactGradient, MatchesFiniteDifferences) {
  const ModelKind kind = GetParam();
  const GridSpec grid = small_grid();
  ModelParameters truth = random_params(kind, 2, 11);
  truth.log_sigma_n2() = std::log(0.05);
  Dataset data = simulated_dataset(grid, truth, 2, 5);
  Objective obj(grid, kind, 2, data);
  ModelParameters at = random_params(kind, 2, 23);
  at.log_sigma_n2() = std::log(0.08);
  const ObjectiveValue exact = obj.evaluate_exact(at);
  const Eigen::VectorXd fd = finite_difference_gradient(obj, at);
  expect_gradients_close(exact.gradient, fd, 1e-4);
}

INSTANTIATE_TEST_SUITE_P(Kinds, ExactGradient,
                         ::testing::Values(ModelKind::NStatAD, ModelKind::StatAD, ModelKind::NStatSep),
                         [](const auto& info) {
                           switch (info.param) {
                             case ModelKind::NStatAD: return std::string("NStatAD");
                             case ModelKind::StatAD: return std::string("StatAD");
                             default: return std::string("NStatSep");
                           }
                         });

// The probe estimate is unbiased: its mean over many seeds approaches the
// exact gradient within a few standard errors.
TEST(Hutchinson, AveragesToExactGradient) {
  const GridSpec grid = small_grid();
  const ModelParameters truth = random_params(ModelKind::StatAD, 1, 3);
  Dataset data = simulated_dataset(grid, truth, 2, 9);
  Objective obj(grid, ModelKind::StatAD, 1, data);
  const ModelParameters at = random_params(ModelKind::StatAD, 1, 4);
  const Eigen::VectorXd exact = obj.evaluate_exact(at).gradient;
  const int seeds = 400;
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(exact.size()), sum_sq = sum;
  for (int s = 0; s < seeds; ++s) {
    const ObjectiveValue v = obj.evaluate(at, {2, static_cast<std::uint64_t>(100 + s), 1});
    EXPECT_NEAR(v.value, obj.log_posterior(at), 1e-8 * std::abs(v.value));
    sum += v.gradient;
    sum_sq += v.gradient.cwiseAbs2();
  }
  const Eigen::VectorXd mean = sum / seeds;
  for (Eigen::Index i = 0; i < exact.size(); ++i) {
    const double var = std::max(sum_sq[i] / seeds - mean[i] * mean[i], 0.0);
    const double se = std::sqrt(var / seeds);
    EXPECT_LE(std::abs(mean[i] - exact[i]), 4.0 * se + 1e-8 * std::abs(exact[i])) << "coordinate " << i;
  }
}

TEST(Optimizer, AdamFirstStepsMatchHandComputation) {
  OptimizerConfig c;
  c.step_size = 0.1;
  auto adam = Optimizer::create(c, 2);
  const Eigen::Vector2d g1(3.0, -0.5), g2(1.0, 2.0);
  // Bias correction makes the first step step_size * sign(g).
  const Eigen::VectorXd s1 = adam->step(g1);
  EXPECT_NEAR(s1[0], 0.1, 1e-8);
  EXPECT_NEAR(s1[1], -0.1, 1e-8);
  const Eigen::VectorXd s2 = adam->step(g2);
  for (int i = 0; i < 2; ++i) {
    const double m = (0.9 * 0.1 * g1[i] + 0.1 * g2[i]) / (1 - 0.81);
    const double v = (0.999 * 0.001 * g1[i] * g1[i] + 0.001 * g2[i] * g2[i]) / (1 - 0.999 * 0.999);
    EXPECT_NEAR(s2[i], 0.1 * m / (std::sqrt(v) + 1e-8), 1e-12);
  }
}

TEST(Optimizer, RejectsInvalidConfig) {
  auto bad = [](auto edit) {
    OptimizerConfig c;
    edit(c);
    return c;
  };
  EXPECT_THROW(bad([](auto& c) { c.step_size = 0; }).validate(), std::invalid_argument);
  EXPECT_THROW(bad([](auto& c) { c.beta1 = 1.0; }).validate(), std::invalid_argument);
  EXPECT_THROW(bad([](auto& c) { c.num_probes = 0; }).validate(), std::invalid_argument);
  EXPECT_THROW(bad([](auto& c) { c.final_step_fraction = 0; }).validate(), std::invalid_argument);
  EXPECT_THROW(bad([](auto& c) { c.final_step_fraction = 1.5; }).validate(), std::invalid_argument);
  EXPECT_THROW(bad([](auto& c) { c.advection_step_scale = -1; }).validate(), std::invalid_argument);
  EXPECT_NO_THROW(OptimizerConfig{}.validate());
}

TEST(Fit, StepFollowsCosineScheduleAndImproves) {
  const GridSpec grid = small_grid();
  const ModelParameters truth = random_params(ModelKind::StatAD, 1, 5);
  Dataset data = simulated_dataset(grid, truth, 3, 6);
  Objective obj(grid, ModelKind::StatAD, 1, data);
  OptimizerConfig c;
  c.max_iterations = 41;
  c.final_step_fraction = 0.2;
  c.exact_gradient = true;
  const ModelParameters init = ModelParameters::initial(ModelKind::StatAD, 1);
  const FitResult r = fit(obj, c, init);
  ASSERT_EQ(r.trace.size(), 41u);
  EXPECT_NEAR(r.trace.front().step_size, 0.05, 1e-15);
  EXPECT_NEAR(r.trace[20].step_size, 0.05 * 0.6, 1e-15);
  EXPECT_NEAR(r.trace.back().step_size, 0.05 * 0.2, 1e-15);
  EXPECT_LT(r.trace.back().objective, r.trace.front().objective);
}

TEST(Fit, ResultIsIndependentOfWorkerCount) {
  const GridSpec grid = small_grid();
  Dataset data = simulated_dataset(grid, random_params(ModelKind::NStatSep, 2, 8), 2, 7);
  Objective a(grid, ModelKind::NStatSep, 2, data), b(grid, ModelKind::NStatSep, 2, data);
  OptimizerConfig c;
  c.max_iterations = 6;
  const ModelParameters init = ModelParameters::initial(ModelKind::NStatSep, 2);
  const FitResult ra = fit(a, c, init);
  c.workers = 3;
  const FitResult rb = fit(b, c, init);
  EXPECT_EQ(ra.params.packed(), rb.params.packed());
}

TEST(Fit, ZeroIterationsReturnsStart) {
  const GridSpec grid = small_grid();
  Dataset data = simulated_dataset(grid, random_params(ModelKind::StatAD, 1, 1), 1, 2);
  Objective obj(grid, ModelKind::StatAD, 1, data);
  OptimizerConfig c;
  c.max_iterations = 0;
  const ModelParameters init = ModelParameters::initial(ModelKind::StatAD, 1);
  const FitResult r = fit(obj, c, init);
  EXPECT_TRUE(r.trace.empty());
  EXPECT_EQ(r.params.packed(), init.packed());
}
