#pragma once

#include <memory>

#include <Eigen/Core>
#include <Eigen/SparseLU>

#include "stadr/basis.hpp"
#include "stadr/grid.hpp"
#include "stadr/operators.hpp"
#include "stadr/random.hpp"

namespace stadr {

/// Implicit Euler evolution matrix
///   A = D_V + dt (D_V D_kappa2 - A_H + A_omega)
/// so that A u^{n+1} = D_V u^n + noise.
SparseMatrix evolution_matrix(const GridSpec& grid, const Eigen::VectorXd& kappa2, const AnisotropyField& h,
                              const AdvectionField& omega);

/// Space-time precision in block form together with its assembled KT x KT
/// matrix (time-major: entry k * K + c is cell c at time k).
///
/// For the advection-diffusion kinds, with P = Q_F / (tau^2 dt V^2):
///   diagonal blocks   Q_0 + D_V P D_V,  A^T P A + D_V P D_V,  ...,  A^T P A
///   upper off-diagonal blocks  -D_V P A (lower ones are the transpose).
/// For the separable kind Q = P_T (x) Q_s with the AR(1) precision P_T.
struct SpaceTimePrecision {
  ModelKind kind = ModelKind::NStatAD;
  int num_cells = 0;
  int num_times = 0;
  SparseMatrix initial;     // Q_0 (Q_s for the separable kind)
  SparseMatrix f_inv;       // A^T P A
  SparseMatrix gt_f_inv;    // D_V P A
  SparseMatrix gt_f_inv_g;  // D_V P D_V
  SparseMatrix q;
};

SpaceTimePrecision assemble_precision_ad(const GridSpec& grid, const CoefficientFieldValues& fields);
SpaceTimePrecision assemble_precision_sep(const GridSpec& grid, const CoefficientFieldValues& fields);
/// Dispatches on fields.kind.
SpaceTimePrecision assemble_precision(const GridSpec& grid, const CoefficientFieldValues& fields);
SpaceTimePrecision assemble_precision(const ModelParameters& params, const GridSpec& grid);

/// AR(1) precision of a unit-variance process with lag-one correlation a.
Eigen::MatrixXd ar1_precision(int num_times, double a);
/// AR(1) correlation matrix a^{|s - t|}.
Eigen::MatrixXd ar1_covariance(int num_times, double a);

/// Space-time Gaussian model with structured log-determinant, solves and
/// sampling that avoid factorizing the full precision.
class SpaceTimeModel {
 public:
  virtual ~SpaceTimeModel() = default;

  const GridSpec& grid() const { return grid_; }
  const CoefficientFieldValues& fields() const { return fields_; }
  int num_cells() const { return grid_.num_cells(); }
  int num_times() const { return grid_.num_times(); }
  Eigen::Index size() const { return static_cast<Eigen::Index>(grid_.latent_size()); }

  /// Assembled precision (built on first use).
  const SpaceTimePrecision& precision() const;
  /// x^T Q y without assembling Q.
  virtual double quadratic(const Eigen::VectorXd& x, const Eigen::VectorXd& y) const = 0;
  /// Q x without assembling Q.
  virtual Eigen::VectorXd multiply(const Eigen::VectorXd& x) const = 0;
  virtual double log_det() const = 0;
  /// Q^{-1} b.
  virtual Eigen::VectorXd solve(const Eigen::VectorXd& b) const = 0;
  /// Maps e with identity covariance to x with covariance Q^{-1} by stepping
  /// the discretized dynamics forward (e is consumed block by block in time).
  virtual Eigen::VectorXd apply_inverse_sqrt(const Eigen::VectorXd& e) const = 0;
  /// One draw from N(0, Q^{-1}).
  Eigen::VectorXd simulate(RandomStream& rng) const { return apply_inverse_sqrt(rng.normal_vector(size())); }

  static std::unique_ptr<SpaceTimeModel> create(const GridSpec& grid, const CoefficientFieldValues& fields);

 protected:
  SpaceTimeModel(GridSpec grid, CoefficientFieldValues fields);

  GridSpec grid_;
  CoefficientFieldValues fields_;

 private:
  mutable std::unique_ptr<SpaceTimePrecision> assembled_;
};

using SparseLU = Eigen::SparseLU<SparseMatrix, Eigen::COLAMDOrdering<int>>;

/// Advection-diffusion model (NStat-AD, Stat-AD and the true model).
class AdvectionDiffusionModel : public SpaceTimeModel {
 public:
  AdvectionDiffusionModel(GridSpec grid, CoefficientFieldValues fields);

  const SparseMatrix& evolution() const { return a_; }
  const SparseMatrix& forcing_operator() const { return k_f_; }
  const SparseMatrix& initial_operator() const { return k_i_; }
  /// 1 / (tau^2 dt V^3): P = scale * K_F^T K_F.
  double dynamics_scale() const { return scale_; }

  /// r^n = A x^{n+1} - D_V x^n for n = 0..T-2, as a K x (T-1) matrix.
  Eigen::MatrixXd residuals(const Eigen::VectorXd& x) const;

  double quadratic(const Eigen::VectorXd& x, const Eigen::VectorXd& y) const override;
  Eigen::VectorXd multiply(const Eigen::VectorXd& x) const override;
  double log_det() const override;
  Eigen::VectorXd solve(const Eigen::VectorXd& b) const override;
  Eigen::VectorXd apply_inverse_sqrt(const Eigen::VectorXd& e) const override;

 private:
  SparseMatrix a_, k_f_, k_i_;
  SparseLU lu_a_, lu_f_, lu_i_;
  double scale_ = 1.0;
};

/// Space-time separable model: Whittle-Matern in space, AR(1) in time.
class SeparableModel : public SpaceTimeModel {
 public:
  SeparableModel(GridSpec grid, CoefficientFieldValues fields);

  const SparseMatrix& spatial_operator() const { return k_; }
  double ar_coefficient() const { return fields_.ar_coefficient; }
  const Eigen::MatrixXd& temporal_precision() const { return p_t_; }

  double quadratic(const Eigen::VectorXd& x, const Eigen::VectorXd& y) const override;
  Eigen::VectorXd multiply(const Eigen::VectorXd& x) const override;
  double log_det() const override;
  Eigen::VectorXd solve(const Eigen::VectorXd& b) const override;
  Eigen::VectorXd apply_inverse_sqrt(const Eigen::VectorXd& e) const override;

 private:
  SparseMatrix k_;
  SparseLU lu_k_;
  Eigen::MatrixXd p_t_;
};

/// log |det M| from a sparse LU factorization.
double log_abs_det(const SparseLU& lu);
/// M^{-T} b from a sparse LU factorization of M.
Eigen::VectorXd solve_transposed(const SparseLU& lu, const Eigen::VectorXd& b);

}  // namespace stadr
