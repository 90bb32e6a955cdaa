#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "oracles.hpp"
#include "stadr/operators.hpp"
#include "test_support.hpp"

using namespace stadr;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

double relative_frobenius(const MatrixXd& a, const MatrixXd& b) { return (a - b).norm() / std::max(b.norm(), 1e-300); }

CoefficientFieldValues random_fields(const GridSpec& grid, std::uint64_t seed, bool zero_v = false) {
  ModelParameters p = stadr::testing::random_params(ModelKind::NStatAD, 2, seed, 0.5);
  if (zero_v) {
    p.block(AdBlock::VE1).setZero();
    p.block(AdBlock::VE2).setZero();
  }
  // Flow large enough that both upwind branches occur.
  p.block(AdBlock::OmegaE1) *= 4.0;
  p.block(AdBlock::OmegaE2) *= 4.0;
  return FieldAssembler(grid, ModelKind::NStatAD, 2).assemble(p);
}

}  // namespace

TEST(Operators, VolumeAndDampeningAreDiagonal) {
  const GridSpec g = build_grid({0, 3, 0, 2}, 3, 4, 1, 2, 1.0);
  const MatrixXd dv(volume_matrix(g));
  EXPECT_TRUE(dv.isApprox(g.cell_volume() * MatrixXd::Identity(g.num_cells(), g.num_cells())));
  const VectorXd k2 = VectorXd::LinSpaced(g.num_cells(), 0.5, 2.0);
  const MatrixXd dk(dampening_matrix(g, k2));
  EXPECT_TRUE(dk.isApprox(MatrixXd(k2.asDiagonal())));
}

TEST(Operators, AdvectionMatchesFaceFluxOracle) {
  const GridSpec g = build_grid({0, 5, 0, 4}, 5, 4, 1, 2, 1.0);
  for (std::uint64_t s = 1; s <= 5; ++s) {
    const auto f = random_fields(g, s);
    const MatrixXd lib(advection_matrix(g, f.omega));
    EXPECT_LT(relative_frobenius(lib, oracle::advection_dense(g, f.omega)), 1e-13) << "seed " << s;
  }
}

TEST(Operators, DiagonalDiffusionMatchesTwoPointFluxOracle) {
  const GridSpec g = build_grid({0, 4, 0, 6}, 4, 5, 1, 2, 1.0);
  const auto f = random_fields(g, 3, true);
  const MatrixXd lib(diffusion_matrix(g, f.evolution.h));
  EXPECT_LT(relative_frobenius(lib, oracle::diagonal_diffusion_dense(g, f.evolution.h)), 1e-13);
}

TEST(Operators, ConservationUnderZeroFlowBoundaries) {
  const GridSpec g = build_grid({0, 6, 0, 5}, 6, 5, 2, 2, 1.0);
  for (std::uint64_t s = 1; s <= 20; ++s) {
    const auto f = random_fields(g, 100 + s);
    const MatrixXd a_w(advection_matrix(g, f.omega));
    const MatrixXd a_h(diffusion_matrix(g, f.evolution.h));
    EXPECT_LT(a_w.colwise().sum().cwiseAbs().maxCoeff(), 1e-12 * a_w.cwiseAbs().maxCoeff());
    EXPECT_LT(a_h.colwise().sum().cwiseAbs().maxCoeff(), 1e-12 * a_h.cwiseAbs().maxCoeff());
    EXPECT_LT((a_h - a_h.transpose()).norm(), 1e-12 * a_h.norm());
  }
}

TEST(Operators, DiffusionIsNegativeSemidefinite) {
  const GridSpec g = build_grid({0, 4, 0, 4}, 4, 4, 1, 2, 1.0);
  const auto f = random_fields(g, 9);
  const MatrixXd a_h(diffusion_matrix(g, f.evolution.h));
  Eigen::SelfAdjointEigenSolver<MatrixXd> eig(a_h);
  EXPECT_LT(eig.eigenvalues().maxCoeff(), 1e-10 * a_h.norm());
}

TEST(Operators, DiffusionStencilIsNinePointRegardlessOfValues) {
  const GridSpec g = build_grid({0, 4, 0, 4}, 4, 4, 1, 2, 1.0);
  const SparseMatrix iso = diffusion_matrix(g, AnisotropyField::isotropic(g, 1.0));
  const SparseMatrix aniso = diffusion_matrix(g, random_fields(g, 4).evolution.h);
  EXPECT_EQ(iso.nonZeros(), aniso.nonZeros());
}

TEST(Operators, WhittleMaternPrecisionMatchesDenseProduct) {
  const GridSpec g = build_grid({0, 4, 0, 4}, 4, 4, 1, 2, 1.0);
  const auto f = random_fields(g, 12);
  const MatrixXd a_h(diffusion_matrix(g, f.evolution.h));
  const MatrixXd lib(whittle_matern_precision(g, f.evolution.kappa2, f.evolution.h));
  EXPECT_LT(relative_frobenius(lib, oracle::matern_precision_dense(g, f.evolution.kappa2, a_h)), 1e-12);
}

TEST(Operators, MaternClosedForms) {
  EXPECT_NEAR(matern_marginal_variance(1.0, 1.0), 1.0 / (4.0 * std::numbers::pi), 1e-15);
  EXPECT_NEAR(matern_marginal_variance(2.0, 4.0), 1.0 / (4.0 * std::numbers::pi * 4.0 * 2.0), 1e-15);
  const Eigen::Matrix2d h = Eigen::Matrix2d::Identity();
  EXPECT_NEAR(matern_correlation(1.0, h, Eigen::Vector2d::Zero()), 1.0, 1e-12);
  // K_1(1) = 0.6019072301972346
  EXPECT_NEAR(matern_correlation(1.0, h, Eigen::Vector2d(1.0, 0.0)), 0.6019072301972346, 1e-10);
  // Stretching H along x by 4 halves the effective distance along x.
  Eigen::Matrix2d h4 = h;
  h4(0, 0) = 4.0;
  EXPECT_NEAR(matern_correlation(1.0, h4, Eigen::Vector2d(2.0, 0.0)), 0.6019072301972346, 1e-10);
}

TEST(Operators, AdvectionSensitivityMatchesFiniteDifference) {
  const GridSpec g = build_grid({0, 4, 0, 4}, 4, 4, 1, 2, 1.0);
  auto f = random_fields(g, 21);
  RandomStream rng(5);
  const VectorXd p = rng.normal_vector(g.num_cells()), q = rng.normal_vector(g.num_cells());
  AdvectionSensitivity s;
  s.resize_zero(g);
  accumulate_advection_sensitivity(g, f.omega, p, q, 1.0, s);
  const double h = 1e-6;
  for (Eigen::Index e = 0; e < f.omega.wx_v.size(); ++e) {
    if (std::abs(f.omega.wx_v[e]) < 10 * h) continue;
    AdvectionField plus = f.omega, minus = f.omega;
    plus.wx_v[e] += h;
    minus.wx_v[e] -= h;
    const double fd =
        (p.dot(advection_matrix(g, plus) * q) - p.dot(advection_matrix(g, minus) * q)) / (2 * h);
    EXPECT_NEAR(s.wx_v[e], fd, 1e-6 * std::max(1.0, std::abs(fd))) << "face " << e;
  }
}

TEST(Operators, DiffusionSensitivityMatchesFiniteDifference) {
  const GridSpec g = build_grid({0, 4, 0, 4}, 4, 4, 1, 2, 1.0);
  auto f = random_fields(g, 22);
  RandomStream rng(6);
  const VectorXd p = rng.normal_vector(g.num_cells()), q = rng.normal_vector(g.num_cells());
  DiffusionSensitivity s;
  s.resize_zero(g);
  accumulate_diffusion_sensitivity(g, p, q, 1.0, s);
  // gamma enters H_xx on vertical faces one for one.
  const double h = 1e-6;
  for (Eigen::Index e = 0; e < f.evolution.h.gamma_v.size(); ++e) {
    AnisotropyField plus = f.evolution.h, minus = f.evolution.h;
    plus.gamma_v[e] += h;
    minus.gamma_v[e] -= h;
    const double fd =
        (-p.dot(diffusion_matrix(g, plus) * q) + p.dot(diffusion_matrix(g, minus) * q)) / (2 * h);
    EXPECT_NEAR(s.xx_v[e], fd, 1e-6 * std::max(1.0, std::abs(fd))) << "face " << e;
  }
}
