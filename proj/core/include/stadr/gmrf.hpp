#pragma once

#include <cstdint>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <vector>

#include <Eigen/Core>

#include "stadr/operators.hpp"
#include "stadr/random.hpp"

namespace stadr {

/// Raised when a Cholesky factorization meets a non-positive pivot.
class NotPositiveDefinite : public std::runtime_error {
 public:
  NotPositiveDefinite(const std::string& what, int pivot) : std::runtime_error(what), pivot_(pivot) {}
  int pivot() const { return pivot_; }

 private:
  int pivot_;
};

/// Sparse Cholesky factor P Q P^T = L L^T with a fill-reducing permutation
/// (nested dissection or AMD, whichever predicts less fill). The symbolic analysis is kept and reused as long as later
/// matrices share the sparsity pattern.
///
/// Solves on one factor may run concurrently; they are serialized internally.
class SparseCholesky {
 public:
  SparseCholesky();
  explicit SparseCholesky(const SparseMatrix& q);
  ~SparseCholesky();
  SparseCholesky(const SparseCholesky&) = delete;
  SparseCholesky& operator=(const SparseCholesky&) = delete;
  SparseCholesky(SparseCholesky&&) noexcept;
  SparseCholesky& operator=(SparseCholesky&&) noexcept;

  /// Numeric factorization. Only the lower triangle of `q` is read. Throws
  /// NotPositiveDefinite with the failing column.
  void factorize(const SparseMatrix& q);

  bool factorized() const;
  int size() const { return n_; }
  /// True when the last factorize() reused an earlier symbolic analysis.
  bool reused_analysis() const { return reused_; }

  /// log det Q = 2 sum log L_ii.
  double log_det() const;
  Eigen::VectorXd solve(const Eigen::VectorXd& b) const;
  Eigen::MatrixXd solve(const Eigen::MatrixXd& b) const;
  /// P^T L^{-T} e. With e ~ N(0, I) the result is N(0, Q^{-1}).
  Eigen::MatrixXd apply_inverse_factor_transpose(const Eigen::MatrixXd& e) const;
  Eigen::VectorXd sample(RandomStream& rng) const;
  /// Fill-reducing permutation (row k of P Q P^T is row perm[k] of Q).
  std::vector<int> permutation() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  int n_ = 0;
  bool reused_ = false;
};

/// Draws one sample from N(0, Q^{-1}) through a joint Cholesky factor.
Eigen::VectorXd sample_from_precision(const SparseMatrix& q, RandomStream& rng);

/// Design S = [E, X]: E selects one latent entry per observation, X holds
/// covariates (n x p, p may be zero).
struct ObservationDesign {
  Eigen::Index latent_size = 0;
  std::vector<int> latent_index;
  Eigen::MatrixXd covariates;

  ObservationDesign() = default;
  ObservationDesign(Eigen::Index latent, std::vector<int> index);
  ObservationDesign(Eigen::Index latent, std::vector<int> index, Eigen::MatrixXd x);

  Eigen::Index num_obs() const { return static_cast<Eigen::Index>(latent_index.size()); }
  Eigen::Index num_covariates() const { return covariates.cols(); }
  /// Length of z = [w, beta].
  Eigen::Index augmented_size() const { return latent_size + num_covariates(); }

  /// S z.
  Eigen::VectorXd apply(const Eigen::VectorXd& z) const;
  /// S^T r.
  Eigen::VectorXd apply_transpose(const Eigen::VectorXd& r) const;
  /// S^T S as a sparse matrix of augmented size.
  SparseMatrix gram() const;
  void validate() const;
};

/// Q_z = blockdiag(Q, I / v_beta) with p trailing covariate coordinates.
SparseMatrix augmented_prior_precision(const SparseMatrix& q, Eigen::Index p, double v_beta);

/// Q_C = Q_z + S^T S / sigma_n2.
SparseMatrix conditional_precision(const SparseMatrix& q_z, const ObservationDesign& design, double sigma_n2);

/// z | y ~ N(mu_C, Q_C^{-1}).
class GaussianPosterior {
 public:
  GaussianPosterior(std::shared_ptr<const SparseCholesky> factor, ObservationDesign design, Eigen::VectorXd mean,
                    double sigma_n2);

  const Eigen::VectorXd& mean() const { return mean_; }
  const SparseCholesky& factor() const { return *factor_; }
  std::shared_ptr<const SparseCholesky> shared_factor() const { return factor_; }
  const ObservationDesign& design() const { return design_; }
  double sigma_n2() const { return sigma_n2_; }

  /// Posterior for new data under the same design and precision (one solve).
  GaussianPosterior with_observations(const Eigen::VectorXd& y) const;

  Eigen::VectorXd sample(RandomStream& rng) const;

 private:
  std::shared_ptr<const SparseCholesky> factor_;
  ObservationDesign design_;
  Eigen::VectorXd mean_;
  double sigma_n2_;
};

/// Conditions the prior N(0, Q^{-1}) (augmented with covariates from the
/// design) on y = S z + eps, eps ~ N(0, sigma_n2 I).
GaussianPosterior condition(const SparseMatrix& q, const ObservationDesign& design, const Eigen::VectorXd& y,
                            double sigma_n2, double v_beta = 1e6);

struct PredictionOptions {
  /// Conditional simulations used for standard deviations; 0 skips them.
  int num_samples = 100;
  std::uint64_t seed = 1;
  /// Add the nugget so the sd refers to a new observation y*.
  bool include_nugget = true;
};

struct Prediction {
  Eigen::VectorXd mean;
  Eigen::VectorXd sd;  // empty when num_samples == 0
};

/// Point prediction S_P mu_C and (optionally) simulation-based sd.
/// `targets` lists the latent entries to predict; covariate rows are optional.
Prediction predict(const GaussianPosterior& posterior, const std::vector<int>& targets,
                   const PredictionOptions& options = {}, const Eigen::MatrixXd& target_covariates = {});

/// Element-wise standard deviation of S_P z over conditional samples; the
/// samples depend on Q_C only, so one call serves every data set sharing it.
Eigen::VectorXd conditional_sd(const SparseCholesky& factor, const std::vector<int>& targets, int num_samples,
                               std::uint64_t seed);

}  // namespace stadr
