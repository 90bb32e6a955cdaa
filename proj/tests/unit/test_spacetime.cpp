#include <gtest/gtest.h>

#include <cmath>

#include "oracles.hpp"
#include "stadr/harness.hpp"
#include "stadr/spacetime.hpp"
#include "test_support.hpp"

using namespace stadr;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

double relative_frobenius(const MatrixXd& a, const MatrixXd& b) { return (a - b).norm() / b.norm(); }

MatrixXd dense_ad_oracle(const GridSpec& g, const CoefficientFieldValues& f) {
  const double v = g.cell_volume();
  const MatrixXd a(evolution_matrix(g, f.evolution.kappa2, f.evolution.h, f.omega));
  const MatrixXd q0 = oracle::matern_precision_dense(g, f.initial.kappa2, MatrixXd(diffusion_matrix(g, f.initial.h)));
  const MatrixXd qf = oracle::matern_precision_dense(
      g, f.evolution.kappa2, oracle::diagonal_diffusion_dense(g, AnisotropyField::isotropic(g, 1.0)));
  return oracle::precision_from_forward_map(a, q0, qf, v, f.tau, g.dt(), g.num_times());
}

CoefficientFieldValues fields_for(const GridSpec& g, ModelKind kind, std::uint64_t seed) {
  ModelParameters p = stadr::testing::random_params(kind, kind == ModelKind::StatAD ? 1 : 2, seed, 0.4);
  if (kind != ModelKind::NStatSep) {
    p.block(AdBlock::OmegaE1).array() += 1.5;
    p.block(AdBlock::OmegaE2).array() -= 1.0;
  }
  return FieldAssembler(g, kind, p.n_per_axis()).assemble(p);
}

}  // namespace

TEST(Spacetime, EvolutionMatrixMatchesDefinition) {
  const GridSpec g = stadr::testing::small_grid(3, 3, 1, 2);
  const auto f = fields_for(g, ModelKind::NStatAD, 2);
  const double v = g.cell_volume();
  const MatrixXd expected =
      v * MatrixXd::Identity(g.num_cells(), g.num_cells()) +
      g.dt() * (v * MatrixXd(f.evolution.kappa2.asDiagonal()) - MatrixXd(diffusion_matrix(g, f.evolution.h)) +
                MatrixXd(advection_matrix(g, f.omega)));
  const MatrixXd lib(evolution_matrix(g, f.evolution.kappa2, f.evolution.h, f.omega));
  EXPECT_LT(relative_frobenius(lib, expected), 1e-14);
}

class AdPrecisionOracle : public ::testing::TestWithParam<ModelKind> {};

TEST_P(AdPrecisionOracle, SparseBlocksMatchForwardMap) {
  for (int t : {2, 3, 4}) {
    const GridSpec g = build_grid({0, 2, 0, 2}, 2, 2, 1, t, 0.4);
    const auto f = fields_for(g, GetParam(), 30 + static_cast<std::uint64_t>(t));
    const MatrixXd lib(assemble_precision(g, f).q);
    EXPECT_LT(relative_frobenius(lib, dense_ad_oracle(g, f)), 1e-8) << "T = " << t;
  }
}

INSTANTIATE_TEST_SUITE_P(Kinds, AdPrecisionOracle, ::testing::Values(ModelKind::NStatAD, ModelKind::StatAD),
                         [](const auto& info) { return std::string(to_string(info.param)) == "nstat-ad" ? "NStatAD" : "StatAD"; });

TEST(Spacetime, TrueModelPrecisionMatchesForwardMap) {
  GridSpec g = build_grid({0, 15, 0, 15}, 3, 3, 1, 3, 2.0 / 7.0);
  const auto f = true_model_fields(g);
  EXPECT_LT(relative_frobenius(MatrixXd(assemble_precision(g, f).q), dense_ad_oracle(g, f)), 1e-8);
}

TEST(Spacetime, SeparablePrecisionMatchesInverseCovariance) {
  const GridSpec g = build_grid({0, 3, 0, 3}, 3, 3, 1, 4, 0.5);
  const auto f = fields_for(g, ModelKind::NStatSep, 7);
  const MatrixXd qs = oracle::matern_precision_dense(g, f.evolution.kappa2, MatrixXd(diffusion_matrix(g, f.evolution.h)));
  const MatrixXd lib(assemble_precision(g, f).q);
  EXPECT_LT(relative_frobenius(lib, oracle::separable_precision_dense(qs, f.ar_coefficient, g.num_times())), 1e-8);
}

TEST(Spacetime, Ar1Matrices) {
  const double a = 0.7;
  const MatrixXd p = ar1_precision(5, a), c = ar1_covariance(5, a);
  EXPECT_TRUE((p * c).isApprox(MatrixXd::Identity(5, 5), 1e-12));
  EXPECT_NEAR(c(0, 3), a * a * a, 1e-15);
}

class StructuredOps : public ::testing::TestWithParam<ModelKind> {};

TEST_P(StructuredOps, AgreeWithAssembledPrecision) {
  const GridSpec g = build_grid({0, 3, 0, 3}, 3, 3, 1, 3, 0.5);
  const auto f = fields_for(g, GetParam(), 17);
  auto model = SpaceTimeModel::create(g, f);
  const MatrixXd q(model->precision().q);
  const Eigen::Index n = q.rows();
  RandomStream rng(3);
  const VectorXd x = rng.normal_vector(n), y = rng.normal_vector(n);

  EXPECT_NEAR(model->quadratic(x, y), x.dot(q * y), 1e-9 * std::abs(x.dot(q * y)) + 1e-9);
  EXPECT_LT((model->multiply(x) - q * x).norm(), 1e-10 * (q * x).norm());

  const Eigen::LLT<MatrixXd> llt(q);
  const double log_det = 2.0 * MatrixXd(llt.matrixL()).diagonal().array().log().sum();
  EXPECT_NEAR(model->log_det(), log_det, 1e-8 * std::abs(log_det));
  EXPECT_LT((model->solve(x) - llt.solve(x)).norm(), 1e-8 * llt.solve(x).norm());

  // M = apply_inverse_sqrt(I) must satisfy M M^T = Q^{-1}.
  MatrixXd m(n, n);
  for (Eigen::Index i = 0; i < n; ++i) m.col(i) = model->apply_inverse_sqrt(VectorXd::Unit(n, i));
  const MatrixXd cov = llt.solve(MatrixXd::Identity(n, n));
  EXPECT_LT(relative_frobenius(m * m.transpose(), cov), 1e-8);
  EXPECT_THROW(model->apply_inverse_sqrt(VectorXd::Zero(n + 1)), std::exception);
}

INSTANTIATE_TEST_SUITE_P(Kinds, StructuredOps,
                         ::testing::Values(ModelKind::NStatAD, ModelKind::StatAD, ModelKind::NStatSep),
                         [](const auto& info) {
                           switch (info.param) {
                             case ModelKind::NStatAD: return std::string("NStatAD");
                             case ModelKind::StatAD: return std::string("StatAD");
                             default: return std::string("NStatSep");
                           }
                         });

TEST(Spacetime, SimulationIsDeterministicPerSeed) {
  const GridSpec g = stadr::testing::small_grid();
  auto model = SpaceTimeModel::create(g, fields_for(g, ModelKind::NStatAD, 1));
  RandomStream a(42), b(42), c(43);
  const VectorXd xa = model->simulate(a);
  EXPECT_EQ(xa, model->simulate(b));
  EXPECT_NE(xa, model->simulate(c));
}
