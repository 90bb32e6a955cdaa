#include "stadr/gmrf.hpp"

#include <cholmod.h>

#include <cmath>
#include <sstream>

namespace stadr {

struct SparseCholesky::Impl {
  cholmod_common common{};
  cholmod_factor* factor = nullptr;
  std::vector<int> outer;
  std::vector<int> inner;
  bool numeric = false;
  mutable std::mutex mutex;

  Impl() {
    cholmod_start(&common);
    common.print = 0;
    common.nmethods = 2;
    common.method[0].ordering = CHOLMOD_NESDIS;
    common.method[1].ordering = CHOLMOD_AMD;
    common.postorder = 1;
    common.final_ll = 1;
    common.supernodal = CHOLMOD_AUTO;
  }
  ~Impl() {
    if (factor != nullptr) cholmod_free_factor(&factor, &common);
    cholmod_finish(&common);
  }

  static cholmod_sparse view(const SparseMatrix& q) {
    cholmod_sparse a{};
    a.nrow = static_cast<size_t>(q.rows());
    a.ncol = static_cast<size_t>(q.cols());
    a.nzmax = static_cast<size_t>(q.nonZeros());
    a.p = const_cast<int*>(q.outerIndexPtr());
    a.i = const_cast<int*>(q.innerIndexPtr());
    a.x = const_cast<double*>(q.valuePtr());
    a.nz = nullptr;
    a.z = nullptr;
    a.stype = -1;
    a.itype = CHOLMOD_INT;
    a.xtype = CHOLMOD_REAL;
    a.dtype = CHOLMOD_DOUBLE;
    a.sorted = 1;
    a.packed = 1;
    return a;
  }

  static cholmod_dense view(const Eigen::MatrixXd& b) {
    cholmod_dense d{};
    d.nrow = static_cast<size_t>(b.rows());
    d.ncol = static_cast<size_t>(b.cols());
    d.nzmax = d.nrow * d.ncol;
    d.d = d.nrow;
    d.x = const_cast<double*>(b.data());
    d.z = nullptr;
    d.xtype = CHOLMOD_REAL;
    d.dtype = CHOLMOD_DOUBLE;
    return d;
  }

  bool same_pattern(const SparseMatrix& q) const {
    if (factor == nullptr) return false;
    if (static_cast<Eigen::Index>(outer.size()) != q.outerSize() + 1) return false;
    if (static_cast<Eigen::Index>(inner.size()) != q.nonZeros()) return false;
    return std::equal(outer.begin(), outer.end(), q.outerIndexPtr()) &&
           std::equal(inner.begin(), inner.end(), q.innerIndexPtr());
  }

  Eigen::MatrixXd run(int system, const Eigen::MatrixXd& b) const {
    cholmod_dense in = view(b);
    std::lock_guard<std::mutex> lock(mutex);
    auto* c = const_cast<cholmod_common*>(&common);
    cholmod_dense* out = cholmod_solve(system, factor, &in, c);
    if (out == nullptr) throw std::runtime_error("sparse Cholesky solve failed");
    Eigen::MatrixXd result = Eigen::Map<Eigen::MatrixXd>(static_cast<double*>(out->x), b.rows(), b.cols());
    cholmod_free_dense(&out, c);
    return result;
  }
};

SparseCholesky::SparseCholesky() : impl_(std::make_unique<Impl>()) {}

SparseCholesky::SparseCholesky(const SparseMatrix& q) : SparseCholesky() { factorize(q); }

SparseCholesky::~SparseCholesky() = default;
SparseCholesky::SparseCholesky(SparseCholesky&&) noexcept = default;
SparseCholesky& SparseCholesky::operator=(SparseCholesky&&) noexcept = default;

void SparseCholesky::factorize(const SparseMatrix& q_in) {
  if (q_in.rows() != q_in.cols()) throw std::invalid_argument("Cholesky factorization needs a square matrix");
  SparseMatrix q = q_in;
  q.makeCompressed();
  Impl& s = *impl_;
  s.numeric = false;
  cholmod_sparse a = Impl::view(q);
  reused_ = s.same_pattern(q);
  if (!reused_) {
    if (s.factor != nullptr) cholmod_free_factor(&s.factor, &s.common);
    s.factor = cholmod_analyze(&a, &s.common);
    if (s.factor == nullptr) throw std::runtime_error("sparse Cholesky analysis failed");
    s.outer.assign(q.outerIndexPtr(), q.outerIndexPtr() + q.outerSize() + 1);
    s.inner.assign(q.innerIndexPtr(), q.innerIndexPtr() + q.nonZeros());
  }
  n_ = static_cast<int>(q.rows());
  cholmod_factorize(&a, s.factor, &s.common);
  if (s.common.status == CHOLMOD_NOT_POSDEF || s.factor->minor < s.factor->n) {
    const int pivot = static_cast<int>(s.factor->minor);
    // A failed numeric phase leaves the factor in a partial state; start over next time.
    cholmod_free_factor(&s.factor, &s.common);
    s.outer.clear();
    s.inner.clear();
    std::ostringstream msg;
    msg << "matrix is not positive definite (pivot " << pivot << ")";
    throw NotPositiveDefinite(msg.str(), pivot);
  }
  if (s.common.status < CHOLMOD_OK) throw std::runtime_error("sparse Cholesky factorization failed");
  s.numeric = true;
}

bool SparseCholesky::factorized() const { return impl_ && impl_->numeric; }

double SparseCholesky::log_det() const {
  if (!factorized()) throw std::logic_error("factor not computed");
  const cholmod_factor* l = impl_->factor;
  double sum = 0.0;
  const auto* x = static_cast<const double*>(l->x);
  if (l->is_super) {
    const auto* super = static_cast<const int*>(l->super);
    const auto* pi = static_cast<const int*>(l->pi);
    const auto* px = static_cast<const int*>(l->px);
    for (size_t s = 0; s < l->nsuper; ++s) {
      const int ncols = super[s + 1] - super[s];
      const int nrows = pi[s + 1] - pi[s];
      for (int jj = 0; jj < ncols; ++jj) sum += std::log(x[px[s] + jj + jj * nrows]);
    }
  } else {
    const auto* p = static_cast<const int*>(l->p);
    for (size_t j = 0; j < l->n; ++j) sum += std::log(x[p[j]]);
  }
  return 2.0 * sum;
}

Eigen::VectorXd SparseCholesky::solve(const Eigen::VectorXd& b) const {
  Eigen::MatrixXd m = b;
  return solve(m).col(0);
}

Eigen::MatrixXd SparseCholesky::solve(const Eigen::MatrixXd& b) const {
  if (!factorized()) throw std::logic_error("factor not computed");
  if (b.rows() != n_) throw std::invalid_argument("right-hand side has the wrong length");
  return impl_->run(CHOLMOD_A, b);
}

Eigen::MatrixXd SparseCholesky::apply_inverse_factor_transpose(const Eigen::MatrixXd& e) const {
  if (!factorized()) throw std::logic_error("factor not computed");
  if (e.rows() != n_) throw std::invalid_argument("right-hand side has the wrong length");
  Eigen::MatrixXd u = impl_->run(CHOLMOD_Lt, e);
  return impl_->run(CHOLMOD_Pt, u);
}

Eigen::VectorXd SparseCholesky::sample(RandomStream& rng) const {
  Eigen::MatrixXd e = rng.normal_vector(n_);
  return apply_inverse_factor_transpose(e).col(0);
}

std::vector<int> SparseCholesky::permutation() const {
  if (!factorized()) throw std::logic_error("factor not computed");
  const auto* perm = static_cast<const int*>(impl_->factor->Perm);
  return {perm, perm + n_};
}

Eigen::VectorXd sample_from_precision(const SparseMatrix& q, RandomStream& rng) {
  SparseCholesky chol(q);
  return chol.sample(rng);
}

ObservationDesign::ObservationDesign(Eigen::Index latent, std::vector<int> index)
    : ObservationDesign(latent, std::move(index), Eigen::MatrixXd()) {}

ObservationDesign::ObservationDesign(Eigen::Index latent, std::vector<int> index, Eigen::MatrixXd x)
    : latent_size(latent), latent_index(std::move(index)), covariates(std::move(x)) {
  if (covariates.size() == 0) covariates.resize(num_obs(), 0);
  validate();
}

void ObservationDesign::validate() const {
  for (int idx : latent_index)
    if (idx < 0 || idx >= latent_size) throw std::out_of_range("observation index outside the latent field");
  if (covariates.rows() != num_obs()) throw std::invalid_argument("covariate rows must match the number of observations");
}

Eigen::VectorXd ObservationDesign::apply(const Eigen::VectorXd& z) const {
  if (z.size() != augmented_size()) throw std::invalid_argument("latent vector has the wrong length");
  Eigen::VectorXd out(num_obs());
  for (Eigen::Index r = 0; r < num_obs(); ++r) out[r] = z[latent_index[r]];
  if (num_covariates() > 0) out += covariates * z.tail(num_covariates());
  return out;
}

Eigen::VectorXd ObservationDesign::apply_transpose(const Eigen::VectorXd& r) const {
  if (r.size() != num_obs()) throw std::invalid_argument("residual vector has the wrong length");
  Eigen::VectorXd out = Eigen::VectorXd::Zero(augmented_size());
  for (Eigen::Index i = 0; i < num_obs(); ++i) out[latent_index[i]] += r[i];
  if (num_covariates() > 0) out.tail(num_covariates()) = covariates.transpose() * r;
  return out;
}

SparseMatrix ObservationDesign::gram() const {
  const Eigen::Index n = augmented_size();
  const Eigen::Index p = num_covariates();
  std::vector<Triplet> trips;
  trips.reserve(static_cast<size_t>(num_obs() * (1 + 2 * p) + p * p));
  for (Eigen::Index r = 0; r < num_obs(); ++r) {
    const int w = latent_index[r];
    trips.emplace_back(w, w, 1.0);
    for (Eigen::Index c = 0; c < p; ++c) {
      const int b = static_cast<int>(latent_size + c);
      trips.emplace_back(w, b, covariates(r, c));
      trips.emplace_back(b, w, covariates(r, c));
    }
  }
  if (p > 0) {
    Eigen::MatrixXd xtx = covariates.transpose() * covariates;
    for (Eigen::Index a = 0; a < p; ++a)
      for (Eigen::Index b = 0; b < p; ++b)
        trips.emplace_back(static_cast<int>(latent_size + a), static_cast<int>(latent_size + b), xtx(a, b));
  }
  SparseMatrix g(n, n);
  g.setFromTriplets(trips.begin(), trips.end());
  return g;
}

SparseMatrix augmented_prior_precision(const SparseMatrix& q, Eigen::Index p, double v_beta) {
  if (p == 0) return q;
  if (v_beta <= 0.0) throw std::invalid_argument("covariate prior variance must be positive");
  const Eigen::Index n = q.rows();
  std::vector<Triplet> trips;
  trips.reserve(static_cast<size_t>(q.nonZeros() + p));
  for (int k = 0; k < q.outerSize(); ++k)
    for (SparseMatrix::InnerIterator it(q, k); it; ++it) trips.emplace_back(it.row(), it.col(), it.value());
  for (Eigen::Index c = 0; c < p; ++c) trips.emplace_back(static_cast<int>(n + c), static_cast<int>(n + c), 1.0 / v_beta);
  SparseMatrix out(n + p, n + p);
  out.setFromTriplets(trips.begin(), trips.end());
  return out;
}

SparseMatrix conditional_precision(const SparseMatrix& q_z, const ObservationDesign& design, double sigma_n2) {
  if (sigma_n2 <= 0.0) throw std::invalid_argument("nugget variance must be positive");
  if (q_z.rows() != design.augmented_size()) throw std::invalid_argument("design does not match the precision");
  SparseMatrix out = q_z + design.gram() * (1.0 / sigma_n2);
  out.makeCompressed();
  return out;
}

GaussianPosterior::GaussianPosterior(std::shared_ptr<const SparseCholesky> factor, ObservationDesign design,
                                     Eigen::VectorXd mean, double sigma_n2)
    : factor_(std::move(factor)), design_(std::move(design)), mean_(std::move(mean)), sigma_n2_(sigma_n2) {}

GaussianPosterior GaussianPosterior::with_observations(const Eigen::VectorXd& y) const {
  Eigen::VectorXd mu = factor_->solve(design_.apply_transpose(y)) / sigma_n2_;
  return {factor_, design_, std::move(mu), sigma_n2_};
}

Eigen::VectorXd GaussianPosterior::sample(RandomStream& rng) const { return mean_ + factor_->sample(rng); }

GaussianPosterior condition(const SparseMatrix& q, const ObservationDesign& design, const Eigen::VectorXd& y,
                            double sigma_n2, double v_beta) {
  if (q.rows() != design.latent_size) throw std::invalid_argument("design does not match the precision");
  if (y.size() != design.num_obs()) throw std::invalid_argument("observation vector has the wrong length");
  SparseMatrix q_c = conditional_precision(augmented_prior_precision(q, design.num_covariates(), v_beta), design, sigma_n2);
  auto factor = std::make_shared<SparseCholesky>(q_c);
  Eigen::VectorXd mu = factor->solve(design.apply_transpose(y)) / sigma_n2;
  return {std::move(factor), design, std::move(mu), sigma_n2};
}

Eigen::VectorXd conditional_sd(const SparseCholesky& factor, const std::vector<int>& targets, int num_samples,
                               std::uint64_t seed) {
  if (num_samples < 2) throw std::invalid_argument("need at least two samples for a standard deviation");
  RandomStream rng(seed, 0x5d);
  Eigen::MatrixXd e = rng.normal_matrix(factor.size(), num_samples);
  Eigen::MatrixXd x = factor.apply_inverse_factor_transpose(e);
  Eigen::VectorXd sd(static_cast<Eigen::Index>(targets.size()));
  for (size_t t = 0; t < targets.size(); ++t) {
    Eigen::RowVectorXd row = x.row(targets[t]);
    const double mean = row.mean();
    sd[static_cast<Eigen::Index>(t)] = std::sqrt((row.array() - mean).square().sum() / (num_samples - 1));
  }
  return sd;
}

Prediction predict(const GaussianPosterior& posterior, const std::vector<int>& targets,
                   const PredictionOptions& options, const Eigen::MatrixXd& target_covariates) {
  const auto& design = posterior.design();
  const Eigen::Index p = design.num_covariates();
  for (int t : targets)
    if (t < 0 || t >= design.latent_size) throw std::out_of_range("prediction target outside the latent field");
  if (p > 0 && target_covariates.size() > 0 &&
      (target_covariates.rows() != static_cast<Eigen::Index>(targets.size()) || target_covariates.cols() != p))
    throw std::invalid_argument("prediction covariates have the wrong shape");

  Prediction out;
  const auto& mu = posterior.mean();
  out.mean.resize(static_cast<Eigen::Index>(targets.size()));
  for (size_t t = 0; t < targets.size(); ++t) out.mean[static_cast<Eigen::Index>(t)] = mu[targets[t]];
  const bool with_x = p > 0 && target_covariates.size() > 0;
  if (with_x) out.mean += target_covariates * mu.tail(p);
  if (options.num_samples == 0) return out;

  if (!with_x) {
    out.sd = conditional_sd(posterior.factor(), targets, options.num_samples, options.seed);
  } else {
    RandomStream rng(options.seed, 0x5d);
    Eigen::MatrixXd e = rng.normal_matrix(posterior.factor().size(), options.num_samples);
    Eigen::MatrixXd x = posterior.factor().apply_inverse_factor_transpose(e);
    Eigen::MatrixXd s(static_cast<Eigen::Index>(targets.size()), options.num_samples);
    for (size_t t = 0; t < targets.size(); ++t) s.row(static_cast<Eigen::Index>(t)) = x.row(targets[t]);
    s += target_covariates * x.bottomRows(p);
    Eigen::VectorXd centre = s.rowwise().mean();
    out.sd = ((s.colwise() - centre).array().square().rowwise().sum() / (options.num_samples - 1)).sqrt();
  }
  if (options.include_nugget) out.sd = (out.sd.array().square() + posterior.sigma_n2()).sqrt();
  return out;
}

}  // namespace stadr
