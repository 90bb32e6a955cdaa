#pragma once

#include <iosfwd>
#include <string>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "stadr/basis.hpp"
#include "stadr/grid.hpp"

namespace stadr {

using SparseMatrix = Eigen::SparseMatrix<double, Eigen::ColMajor, int>;
using Triplet = Eigen::Triplet<double, int>;

/// D_V: cell areas on the diagonal.
SparseMatrix volume_matrix(const GridSpec& grid);

/// D_kappa2: kappa^2 at cell centers on the diagonal.
SparseMatrix dampening_matrix(const GridSpec& grid, const Eigen::VectorXd& kappa2);

/// A_H: finite volume discretization of div(H grad u) integrated over cells,
/// with zero flux through the outer boundary of the buffered domain.
///
/// Each interior face carries a two-point normal difference and a tangential
/// difference averaged over the four cells around the face (one-sided in the
/// first and last row/column). The matrix is assembled from the face energies
///   V [H_nn a^2 + H_xy a b]
/// (a normal, b tangential difference), so it is symmetric and annihilates
/// constants. The sparsity pattern is the 9-point stencil regardless of the
/// values in H.
SparseMatrix diffusion_matrix(const GridSpec& grid, const AnisotropyField& h);

/// A_omega: first-order upwind advection. Row jM+i holds the outflow through
/// the four faces of cell (i, j); outer boundary faces carry no flow.
SparseMatrix advection_matrix(const GridSpec& grid, const AdvectionField& omega);

/// K = D_V D_kappa2 - A_H, the discretized operator (kappa^2 - div H grad).
SparseMatrix whittle_matern_operator(const GridSpec& grid, const Eigen::VectorXd& kappa2, const AnisotropyField& h);

/// Q = K^T D_V^{-1} K: precision of the discretized Whittle-Matern field.
SparseMatrix whittle_matern_precision(const GridSpec& grid, const Eigen::VectorXd& kappa2, const AnisotropyField& h);

/// Marginal variance 1 / (4 pi kappa^2 sqrt(det H)) of the stationary field.
double matern_marginal_variance(double kappa, double det_h);

/// Stationary correlation (k r) K_1(k r) with r = |H^{-1/2} d|.
double matern_correlation(double kappa, const Eigen::Matrix2d& h, const Eigen::Vector2d& d);

/// Writes "row col value" lines (0-based, column-major order).
void write_triplets(std::ostream& os, const SparseMatrix& m);

// ---------------------------------------------------------------------------
// Sensitivities of bilinear forms with respect to field values. These feed
// the chain rule for parameter gradients.

/// d(p^T (-A_H) q) / dH at each face: xx and xy components on vertical faces,
/// yy and xy components on horizontal faces.
struct DiffusionSensitivity {
  Eigen::VectorXd xx_v, xy_v;
  Eigen::VectorXd yy_h, xy_h;

  void resize_zero(const GridSpec& grid);
  DiffusionSensitivity& operator+=(const DiffusionSensitivity& other);
  DiffusionSensitivity& operator*=(double s);
};

/// d(p^T A_omega q) / d(omega) at each face (x on vertical, y on horizontal faces).
struct AdvectionSensitivity {
  Eigen::VectorXd wx_v;
  Eigen::VectorXd wy_h;

  void resize_zero(const GridSpec& grid);
};

/// Accumulates weight * d(p^T (-A_H) q)/dH into `out`.
void accumulate_diffusion_sensitivity(const GridSpec& grid, const Eigen::VectorXd& p, const Eigen::VectorXd& q,
                                      double weight, DiffusionSensitivity& out);

/// Accumulates weight * d(p^T A_omega q)/d(omega) into `out`. The derivative of
/// |omega| at zero is taken as 0.
void accumulate_advection_sensitivity(const GridSpec& grid, const AdvectionField& omega, const Eigen::VectorXd& p,
                                      const Eigen::VectorXd& q, double weight, AdvectionSensitivity& out);

}  // namespace stadr
