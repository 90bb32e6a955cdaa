#include "stadr/inference.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <numbers>
#include <limits>
#include <ostream>

#include "stadr/parallel.hpp"

namespace stadr {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

MatrixXd blocks(const VectorXd& x, int k, int t) { return Eigen::Map<const MatrixXd>(x.data(), k, t); }

/// d P_T / d a for the unit-variance AR(1) precision.
MatrixXd ar1_precision_derivative(int t, double a) {
  MatrixXd d = MatrixXd::Zero(t, t);
  if (t == 1) return d;
  const double c = 1.0 / (1.0 - a * a);
  const double dc = 2.0 * a * c * c;
  for (int i = 0; i < t; ++i) {
    d(i, i) = (i == 0 || i == t - 1) ? dc : dc * (1.0 + a * a) + 2.0 * a * c;
    if (i + 1 < t) d(i, i + 1) = d(i + 1, i) = -c - a * dc;
  }
  return d;
}

/// Chain rule from field sensitivities to the four spatial coefficient blocks
/// (log kappa, log gamma, v1, v2).
void spatial_chain(const BasisEvaluations& bv, const SpatialCoefficients& f, const VectorXd& s_kappa2,
                   const DiffusionSensitivity& s, Eigen::Ref<VectorXd> out) {
  const Eigen::Index b = bv.cells.cols();
  const auto& h = f.h;
  out.segment(0, b) = bv.cells.transpose() * (2.0 * f.kappa2.cwiseProduct(s_kappa2));
  out.segment(b, b) = bv.vfaces.transpose() * h.gamma_v.cwiseProduct(s.xx_v) +
                      bv.hfaces.transpose() * h.gamma_h.cwiseProduct(s.yy_h);
  out.segment(2 * b, b) =
      bv.vfaces.transpose() * (2.0 * h.v1_v.cwiseProduct(s.xx_v) + h.v2_v.cwiseProduct(s.xy_v)) +
      bv.hfaces.transpose() * h.v2_h.cwiseProduct(s.xy_h);
  out.segment(3 * b, b) =
      bv.vfaces.transpose() * h.v1_v.cwiseProduct(s.xy_v) +
      bv.hfaces.transpose() * (2.0 * h.v2_h.cwiseProduct(s.yy_h) + h.v1_h.cwiseProduct(s.xy_h));
}

Eigen::Index num_theta(ModelKind kind, Eigen::Index block) {
  return kind == ModelKind::NStatSep ? kSepBlockCount * block + 1 : kAdBlockCount * block + 1;
}

}  // namespace

void Dataset::validate() const {
  design.validate();
  if (replicates.empty()) throw std::invalid_argument("dataset has no replicates");
  for (const auto& y : replicates) {
    if (y.size() != design.num_obs()) throw std::invalid_argument("replicate length does not match the design");
    if (!y.allFinite()) throw std::invalid_argument("observations must be finite");
  }
  if (!(v_beta > 0.0)) throw std::invalid_argument("covariate prior variance must be positive");
}

// ---------------------------------------------------------------------------

PrecisionGradient::PrecisionGradient(const SpaceTimeModel& model, const BasisEvaluations& basis)
    : model_(model), basis_(basis) {
  const GridSpec& g = model.grid();
  kappa_e_ = VectorXd::Zero(g.num_cells());
  diff_e_.resize_zero(g);
  if (model.fields().kind == ModelKind::NStatSep) {
    temporal_ = MatrixXd::Zero(g.num_times(), g.num_times());
  } else {
    kappa_i_ = VectorXd::Zero(g.num_cells());
    diff_i_.resize_zero(g);
    adv_.resize_zero(g);
  }
}

void PrecisionGradient::add(const VectorXd& x, const VectorXd& y, double weight) {
  if (x.size() != model_.size() || y.size() != model_.size())
    throw std::invalid_argument("gradient vectors do not match the latent size");
  if (model_.fields().kind == ModelKind::NStatSep) add_sep(x, y, weight);
  else add_ad(x, y, weight);
}

void PrecisionGradient::add_ad(const VectorXd& x, const VectorXd& y, double w) {
  const auto& m = static_cast<const AdvectionDiffusionModel&>(model_);
  const GridSpec& g = m.grid();
  const int k = g.num_cells();
  const int t = g.num_times();
  const double vol = g.cell_volume();

  const VectorXd x0 = x.head(k);
  const VectorXd y0 = y.head(k);
  const VectorXd gx0 = m.initial_operator() * x0;
  const VectorXd gy0 = m.initial_operator() * y0;
  kappa_i_ += w * (gy0.cwiseProduct(x0) + gx0.cwiseProduct(y0));
  accumulate_diffusion_sensitivity(g, gy0, x0, w / vol, diff_i_);
  accumulate_diffusion_sensitivity(g, gx0, y0, w / vol, diff_i_);
  if (t < 2) return;

  const double s = m.dynamics_scale();
  const double dt = g.dt();
  const MatrixXd xs = blocks(x, k, t);
  const MatrixXd ys = blocks(y, k, t);
  const MatrixXd rx = m.residuals(x);
  const MatrixXd ry = m.residuals(y);
  const MatrixXd gx = m.forcing_operator() * rx;
  const MatrixXd gy = m.forcing_operator() * ry;
  const MatrixXd hx = m.forcing_operator().transpose() * gx;
  const MatrixXd hy = m.forcing_operator().transpose() * gy;

  tau_ += -2.0 * w * s * (gx.array() * gy.array()).sum();
  kappa_e_ += (w * s * vol) * (gy.cwiseProduct(rx) + gx.cwiseProduct(ry)).rowwise().sum();
  kappa_e_ += (w * s * dt * vol) *
              (hy.cwiseProduct(xs.rightCols(t - 1)) + hx.cwiseProduct(ys.rightCols(t - 1))).rowwise().sum();
  const double wa = w * s * dt;
  for (int n = 0; n + 1 < t; ++n) {
    const VectorXd hyn = hy.col(n), hxn = hx.col(n);
    const VectorXd xn = xs.col(n + 1), yn = ys.col(n + 1);
    accumulate_diffusion_sensitivity(g, hyn, xn, wa, diff_e_);
    accumulate_diffusion_sensitivity(g, hxn, yn, wa, diff_e_);
    accumulate_advection_sensitivity(g, m.fields().omega, hyn, xn, wa, adv_);
    accumulate_advection_sensitivity(g, m.fields().omega, hxn, yn, wa, adv_);
  }
}

void PrecisionGradient::add_sep(const VectorXd& x, const VectorXd& y, double w) {
  const auto& m = static_cast<const SeparableModel&>(model_);
  const GridSpec& g = m.grid();
  const int k = g.num_cells();
  const int t = g.num_times();
  const double vol = g.cell_volume();
  const MatrixXd xs = blocks(x, k, t);
  const MatrixXd ys = blocks(y, k, t);
  const MatrixXd zs = ys * m.temporal_precision();
  const MatrixXd gx = m.spatial_operator() * xs;
  const MatrixXd gy = m.spatial_operator() * ys;
  const MatrixXd gz = m.spatial_operator() * zs;
  kappa_e_ += w * (gz.cwiseProduct(xs) + gx.cwiseProduct(zs)).rowwise().sum();
  for (int n = 0; n < t; ++n) {
    accumulate_diffusion_sensitivity(g, gz.col(n), xs.col(n), w / vol, diff_e_);
    accumulate_diffusion_sensitivity(g, gx.col(n), zs.col(n), w / vol, diff_e_);
  }
  temporal_ += (w / vol) * (gx.transpose() * gy);
}

void PrecisionGradient::merge(const PrecisionGradient& o) {
  kappa_e_ += o.kappa_e_;
  diff_e_ += o.diff_e_;
  if (model_.fields().kind == ModelKind::NStatSep) {
    temporal_ += o.temporal_;
    return;
  }
  kappa_i_ += o.kappa_i_;
  diff_i_ += o.diff_i_;
  adv_.wx_v += o.adv_.wx_v;
  adv_.wy_h += o.adv_.wy_h;
  tau_ += o.tau_;
}

VectorXd PrecisionGradient::gradient() const {
  const auto& f = model_.fields();
  const Eigen::Index b = basis_.cells.cols();
  VectorXd out = VectorXd::Zero(num_theta(f.kind, b));
  if (f.kind == ModelKind::NStatSep) {
    spatial_chain(basis_, f.evolution, kappa_e_, diff_e_, out.segment(0, 4 * b));
    const double a = f.ar_coefficient;
    const MatrixXd dp = ar1_precision_derivative(model_.num_times(), a);
    out[4 * b] = (dp.array() * temporal_.array()).sum() * (1.0 - a * a);
    return out;
  }
  spatial_chain(basis_, f.evolution, kappa_e_, diff_e_, out.segment(0, 4 * b));
  out.segment(4 * b, b) = basis_.vfaces.transpose() * basis_.taper_v.cwiseProduct(adv_.wx_v);
  out.segment(5 * b, b) = basis_.hfaces.transpose() * basis_.taper_h.cwiseProduct(adv_.wy_h);
  spatial_chain(basis_, f.initial, kappa_i_, diff_i_, out.segment(6 * b, 4 * b));
  out[10 * b] = tau_;
  return out;
}

// ---------------------------------------------------------------------------

struct Objective::State {
  std::unique_ptr<SpaceTimeModel> model;
  double sigma2 = 1.0;
  double value = 0.0;
  std::vector<VectorXd> means;  // augmented posterior means per replicate
  double residual_ss = 0.0;
};

Objective::Objective(GridSpec grid, ModelKind kind, int n_per_axis, Dataset data)
    : grid_(std::move(grid)), kind_(kind), n_per_axis_(n_per_axis), assembler_(grid_, kind, n_per_axis),
      data_(std::move(data)) {
  data_.validate();
  if (data_.design.latent_size != static_cast<Eigen::Index>(grid_.latent_size()))
    throw std::invalid_argument("design does not match the grid");
}

Objective::State Objective::prepare(const ModelParameters& params) {
  if (params.kind() != kind_) throw std::invalid_argument("parameter kind does not match the objective");
  State st;
  st.model = SpaceTimeModel::create(grid_, assembler_.assemble(params));
  st.sigma2 = params.sigma_n2();
  const auto& design = data_.design;
  const Eigen::Index p = design.num_covariates();
  const Eigen::Index kt = st.model->size();
  const double n = static_cast<double>(design.num_obs());
  const double r = static_cast<double>(data_.num_replicates());

  SparseMatrix q_c = conditional_precision(
      augmented_prior_precision(st.model->precision().q, p, data_.v_beta), design, st.sigma2);
  factor_.factorize(q_c);

  const double log_qz = st.model->log_det() - static_cast<double>(p) * std::log(data_.v_beta);
  double value = r * (0.5 * log_qz - 0.5 * factor_.log_det() - 0.5 * n * std::log(st.sigma2));
  st.means.reserve(data_.replicates.size());
  for (const auto& y : data_.replicates) {
    VectorXd mu = factor_.solve(VectorXd(design.apply_transpose(y) / st.sigma2));
    const VectorXd mw = mu.head(kt);
    double quad = st.model->quadratic(mw, mw);
    if (p > 0) quad += mu.tail(p).squaredNorm() / data_.v_beta;
    const double rss = (y - design.apply(mu)).squaredNorm();
    value -= 0.5 * quad + rss / (2.0 * st.sigma2);
    st.residual_ss += rss;
    st.means.push_back(std::move(mu));
  }
  st.value = value;
  return st;
}

double Objective::log_posterior(const ModelParameters& params) { return prepare(params).value; }

ObjectiveValue Objective::evaluate(const ModelParameters& params, const GradientOptions& options) {
  if (options.num_probes < 1) throw std::invalid_argument("need at least one probe");
  State st = prepare(params);
  const auto& design = data_.design;
  const SpaceTimeModel& model = *st.model;
  const Eigen::Index kt = model.size();
  const double r = static_cast<double>(data_.num_replicates());
  const double n = static_cast<double>(design.num_obs());

  // Data terms: -1/2 mu^T dQ mu.
  PrecisionGradient data_part(model, assembler_.basis_values());
  for (const auto& mu : st.means) {
    const VectorXd mw = mu.head(kt);
    data_part.add(mw, mw, -0.5);
  }

  // Trace terms. Each probe is a prior draw x = Q_z^{-1/2} xi and its
  // posterior partner y = x - Q_C^{-1} S^T (S x + eps) / s2 (Cov y = Q_C^{-1}),
  // so x^T dQ x - y^T dQ y estimates Tr((Q_z^{-1} - Q_C^{-1}) dQ) and
  // |S y|^2 estimates Tr(S Q_C^{-1} S^T).
  const auto probes = static_cast<std::size_t>(options.num_probes);
  const Eigen::Index p = design.num_covariates();
  std::vector<VectorXd> probe_grad(probes);
  std::vector<double> probe_sigma(probes);
  const double noise_sd = std::sqrt(st.sigma2);
  parallel_for(probes, options.workers, [&](std::size_t i) {
    RandomStream rng(options.seed, i);
    VectorXd x(design.augmented_size());
    x.head(kt) = model.apply_inverse_sqrt(rng.rademacher_vector(kt));
    if (p > 0) x.tail(p) = std::sqrt(data_.v_beta) * rng.rademacher_vector(p);
    const VectorXd eps = noise_sd * rng.rademacher_vector(design.num_obs());
    const VectorXd y = x - factor_.solve(VectorXd(design.apply_transpose(design.apply(x) + eps) / st.sigma2));
    const double w = 0.5 * r / static_cast<double>(probes);
    PrecisionGradient pg(model, assembler_.basis_values());
    const VectorXd xw = x.head(kt);
    const VectorXd yw = y.head(kt);
    pg.add(xw, xw, w);
    pg.add(yw, yw, -w);
    probe_grad[i] = pg.gradient();
    probe_sigma[i] = design.apply(y).squaredNorm();
  });

  ObjectiveValue out;
  out.value = st.value;
  out.gradient.resize(params.num_covariance_params() + 1);
  VectorXd g = data_part.gradient();
  double trace_sigma = 0.0;
  for (std::size_t i = 0; i < probes; ++i) {
    g += probe_grad[i];
    trace_sigma += probe_sigma[i];
  }
  trace_sigma /= static_cast<double>(probes);
  out.gradient.head(g.size()) = g;
  out.gradient[g.size()] = -0.5 * n * r + st.residual_ss / (2.0 * st.sigma2) + r * trace_sigma / (2.0 * st.sigma2);
  return out;
}

ObjectiveValue Objective::evaluate_exact(const ModelParameters& params, Eigen::Index max_dense) {
  const Eigen::Index kt = static_cast<Eigen::Index>(grid_.latent_size());
  if (kt > max_dense) throw ProblemTooLarge("latent dimension too large for dense traces");
  State st = prepare(params);
  const auto& design = data_.design;
  const SpaceTimeModel& model = *st.model;
  const Eigen::Index na = design.augmented_size();
  const double r = static_cast<double>(data_.num_replicates());
  const double n = static_cast<double>(design.num_obs());

  const MatrixXd q = MatrixXd(model.precision().q);
  const MatrixXd q_inv = q.llt().solve(MatrixXd::Identity(kt, kt));
  const MatrixXd qc_inv = factor_.solve(MatrixXd(MatrixXd::Identity(na, na)));
  const MatrixXd m = q_inv - qc_inv.topLeftCorner(kt, kt);

  PrecisionGradient pg(model, assembler_.basis_values());
  for (const auto& mu : st.means) {
    const VectorXd mw = mu.head(kt);
    pg.add(mw, mw, -0.5);
  }
  for (Eigen::Index j = 0; j < kt; ++j) pg.add(m.col(j), VectorXd::Unit(kt, j), 0.5 * r);

  // Tr(S Q_C^{-1} S^T)
  double trace_sigma = 0.0;
  for (Eigen::Index i = 0; i < design.num_obs(); ++i) {
    VectorXd row = VectorXd::Zero(na);
    row[design.latent_index[i]] = 1.0;
    if (design.num_covariates() > 0) row.tail(design.num_covariates()) = design.covariates.row(i).transpose();
    trace_sigma += row.dot(qc_inv * row);
  }

  ObjectiveValue out;
  out.value = st.value;
  const VectorXd g = pg.gradient();
  out.gradient.resize(g.size() + 1);
  out.gradient.head(g.size()) = g;
  out.gradient[g.size()] = -0.5 * n * r + st.residual_ss / (2.0 * st.sigma2) + r * trace_sigma / (2.0 * st.sigma2);
  return out;
}

double log_posterior(const ModelParameters& params, const GridSpec& grid, const Dataset& data) {
  Objective obj(grid, params.kind(), params.n_per_axis(), data);
  return obj.log_posterior(params);
}

// ---------------------------------------------------------------------------

std::string_view to_string(Algorithm a) {
  switch (a) {
    case Algorithm::Adam: return "adam";
    case Algorithm::Sgd: return "sgd";
    case Algorithm::Adagrad: return "adagrad";
    case Algorithm::Adadelta: return "adadelta";
    case Algorithm::Rmsprop: return "rmsprop";
  }
  return "adam";
}

Algorithm parse_algorithm(std::string_view name) {
  for (Algorithm a : {Algorithm::Adam, Algorithm::Sgd, Algorithm::Adagrad, Algorithm::Adadelta, Algorithm::Rmsprop})
    if (name == to_string(a)) return a;
  throw std::invalid_argument("unknown optimizer: " + std::string(name));
}

void OptimizerConfig::validate() const {
  if (!(step_size > 0.0)) throw std::invalid_argument("step size must be positive");
  for (double d : {beta1, beta2, decay})
    if (!(d > 0.0 && d < 1.0)) throw std::invalid_argument("decay rates must lie in (0, 1)");
  if (!(epsilon > 0.0)) throw std::invalid_argument("epsilon must be positive");
  if (max_iterations < 0) throw std::invalid_argument("iteration budget must be non-negative");
  if (num_probes < 1) throw std::invalid_argument("need at least one probe");
  if (window < 1) throw std::invalid_argument("convergence window must be positive");
  if (tolerance < 0.0 || gradient_tolerance < 0.0) throw std::invalid_argument("tolerances must be non-negative");
  if (start_iteration < 0) throw std::invalid_argument("start iteration must be non-negative");
  if (advection_step_scale < 0.0) throw std::invalid_argument("advection step scale must be non-negative");
  if (!(final_step_fraction > 0.0 && final_step_fraction <= 1.0))
    throw std::invalid_argument("final step fraction must lie in (0, 1]");
}

namespace {

class Sgd : public Optimizer {
 public:
  explicit Sgd(double step) : step_(step) {}
  VectorXd step(const VectorXd& g) override { return step_ * g; }

 private:
  double step_;
};

class Adam : public Optimizer {
 public:
  Adam(const OptimizerConfig& c, Eigen::Index dim) : c_(c), m_(VectorXd::Zero(dim)), v_(VectorXd::Zero(dim)) {}
  VectorXd step(const VectorXd& g) override {
    ++t_;
    m_ = c_.beta1 * m_ + (1.0 - c_.beta1) * g;
    v_ = c_.beta2 * v_ + (1.0 - c_.beta2) * g.cwiseAbs2();
    const double bc1 = 1.0 - std::pow(c_.beta1, t_);
    const double bc2 = 1.0 - std::pow(c_.beta2, t_);
    return c_.step_size * ((m_ / bc1).array() / ((v_ / bc2).array().sqrt() + c_.epsilon)).matrix();
  }

 private:
  OptimizerConfig c_;
  VectorXd m_, v_;
  int t_ = 0;
};

class Adagrad : public Optimizer {
 public:
  Adagrad(const OptimizerConfig& c, Eigen::Index dim) : c_(c), sum_(VectorXd::Zero(dim)) {}
  VectorXd step(const VectorXd& g) override {
    sum_ += g.cwiseAbs2();
    return c_.step_size * (g.array() / (sum_.array().sqrt() + c_.epsilon)).matrix();
  }

 private:
  OptimizerConfig c_;
  VectorXd sum_;
};

class Rmsprop : public Optimizer {
 public:
  Rmsprop(const OptimizerConfig& c, Eigen::Index dim) : c_(c), avg_(VectorXd::Zero(dim)) {}
  VectorXd step(const VectorXd& g) override {
    avg_ = c_.decay * avg_ + (1.0 - c_.decay) * g.cwiseAbs2();
    return c_.step_size * (g.array() / (avg_.array().sqrt() + c_.epsilon)).matrix();
  }

 private:
  OptimizerConfig c_;
  VectorXd avg_;
};

class Adadelta : public Optimizer {
 public:
  Adadelta(const OptimizerConfig& c, Eigen::Index dim)
      : c_(c), avg_g_(VectorXd::Zero(dim)), avg_dx_(VectorXd::Zero(dim)) {}
  VectorXd step(const VectorXd& g) override {
    avg_g_ = c_.decay * avg_g_ + (1.0 - c_.decay) * g.cwiseAbs2();
    VectorXd dx = ((avg_dx_.array() + c_.epsilon).sqrt() / (avg_g_.array() + c_.epsilon).sqrt() * g.array()).matrix();
    avg_dx_ = c_.decay * avg_dx_ + (1.0 - c_.decay) * dx.cwiseAbs2();
    return c_.step_size * dx;
  }

 private:
  OptimizerConfig c_;
  VectorXd avg_g_, avg_dx_;
};

}  // namespace

std::unique_ptr<Optimizer> Optimizer::create(const OptimizerConfig& c, Eigen::Index dim) {
  c.validate();
  switch (c.algorithm) {
    case Algorithm::Adam: return std::make_unique<Adam>(c, dim);
    case Algorithm::Sgd: return std::make_unique<Sgd>(c.step_size);
    case Algorithm::Adagrad: return std::make_unique<Adagrad>(c, dim);
    case Algorithm::Adadelta: return std::make_unique<Adadelta>(c, dim);
    case Algorithm::Rmsprop: return std::make_unique<Rmsprop>(c, dim);
  }
  throw std::invalid_argument("unknown optimizer");
}

double characteristic_speed(const GridSpec& grid) {
  const Bounds& d = grid.interior();
  const double span = grid.dt() * std::max(grid.num_times() - 1, 1);
  return std::max(d.x_max - d.x_min, d.y_max - d.y_min) / span;
}

FitResult fit(Objective& objective, const OptimizerConfig& config, const ModelParameters& init,
              const FitProgress& progress) {
  config.validate();
  FitResult result;
  result.params = init;
  VectorXd x = init.packed();
  auto opt = Optimizer::create(config, x.size());
  VectorXd scale = VectorXd::Ones(x.size());
  if (init.kind() != ModelKind::NStatSep) {
    const double s =
        config.advection_step_scale > 0.0 ? config.advection_step_scale : characteristic_speed(objective.grid());
    for (auto b : {AdBlock::OmegaE1, AdBlock::OmegaE2})
      scale.segment(init.block_offset(static_cast<int>(b)), init.block_size()).setConstant(s);
  }
  double prev_window = std::numeric_limits<double>::quiet_NaN();
  double window_sum = 0.0;
  auto schedule = [&](int it) {
    if (config.max_iterations < 2) return 1.0;
    const double u = static_cast<double>(it) / (config.max_iterations - 1);
    return config.final_step_fraction + (1.0 - config.final_step_fraction) * 0.5 * (1.0 + std::cos(std::numbers::pi * u));
  };
  for (int it = 0; it < config.max_iterations; ++it) {
    ModelParameters current = result.params;
    current.unpack(x);
    ObjectiveValue ev;
    try {
      const auto iteration = static_cast<std::uint64_t>(config.start_iteration + it);
      ev = config.exact_gradient
               ? objective.evaluate_exact(current)
               : objective.evaluate(current, {config.num_probes, derive_seed(config.seed, iteration), config.workers});
    } catch (const std::runtime_error& e) {
      throw FitDiverged(std::string("objective evaluation failed: ") + e.what(), result.params);
    }
    if (!std::isfinite(ev.value) || !ev.gradient.allFinite())
      throw FitDiverged("objective is not finite", result.params);
    result.params = current;
    result.trace.push_back({config.start_iteration + it, -ev.value, ev.gradient.norm(), config.step_size * schedule(it)});
    if (progress) progress(result.trace.back());
    if (config.gradient_tolerance > 0.0 && result.trace.back().gradient_norm < config.gradient_tolerance) {
      result.stopped_early = true;
      break;
    }

    if (config.tolerance > 0.0) {
      window_sum += -ev.value;
      if ((it + 1) % config.window == 0) {
        const double mean = window_sum / config.window;
        window_sum = 0.0;
        if (std::isfinite(prev_window) && prev_window - mean < config.tolerance * (1.0 + std::abs(mean))) {
          result.stopped_early = true;
          break;
        }
        prev_window = mean;
      }
    }
    if (it + 1 < config.max_iterations) x += schedule(it) * scale.cwiseProduct(opt->step(ev.gradient));
  }
  return result;
}

void write_trace_csv(std::ostream& os, const std::vector<TraceRow>& trace) {
  os << "iteration,objective,gradient_norm,step_size\n";
  os.precision(12);
  for (const auto& row : trace)
    os << row.iteration << ',' << row.objective << ',' << row.gradient_norm << ',' << row.step_size << '\n';
}

}  // namespace stadr
