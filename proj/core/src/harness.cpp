#include "stadr/harness.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <memory>
#include <numbers>
#include <ostream>
#include <set>
#include <stdexcept>
#include <string>

#include "stadr/gmrf.hpp"
#include "stadr/parallel.hpp"
#include "stadr/random.hpp"
#include "stadr/spacetime.hpp"

namespace stadr {

using Eigen::VectorXd;

namespace {

constexpr double kPi = std::numbers::pi;

SpatialCoefficients spatial_pointwise(const GridSpec& grid, const PointwiseModel& model) {
  const int mb = grid.mb();
  const int nb = grid.nb();
  SpatialCoefficients out;
  out.kappa2.resize(grid.num_cells());
  for (int c = 0; c < grid.num_cells(); ++c) out.kappa2[c] = std::exp(2.0 * model.log_kappa(grid.cell_center(c)));

  auto fill = [&](Point p, int f, VectorXd& gamma, VectorXd& v1, VectorXd& v2) {
    gamma[f] = std::exp(model.log_gamma(p));
    const Point v = model.anisotropy(p);
    v1[f] = v.x;
    v2[f] = v.y;
  };
  auto& h = out.h;
  const int nv = (mb + 1) * nb;
  const int nh = mb * (nb + 1);
  h.gamma_v.resize(nv), h.v1_v.resize(nv), h.v2_v.resize(nv);
  h.gamma_h.resize(nh), h.v1_h.resize(nh), h.v2_h.resize(nh);
  for (int j = 0; j < nb; ++j)
    for (int i = 0; i <= mb; ++i) fill(grid.vertical_face_center(i, j), j * (mb + 1) + i, h.gamma_v, h.v1_v, h.v2_v);
  for (int j = 0; j <= nb; ++j)
    for (int i = 0; i < mb; ++i) fill(grid.horizontal_face_center(i, j), j * mb + i, h.gamma_h, h.v1_h, h.v2_h);
  return out;
}

void check_interior(const GridSpec& grid, const Bounds& r, const char* what) {
  const Bounds& d = grid.interior();
  if (r.x_min > r.x_max || r.y_min > r.y_max || r.x_min < d.x_min || r.x_max > d.x_max || r.y_min < d.y_min ||
      r.y_max > d.y_max)
    throw std::invalid_argument(std::string(what) + " must lie within the interior domain");
}

std::shared_ptr<SparseCholesky> factor_conditional(const SparseMatrix& q, const ObservationDesign& design,
                                                   double sigma_n2) {
  auto factor = std::make_shared<SparseCholesky>();
  factor->factorize(conditional_precision(q, design, sigma_n2));
  return factor;
}

}  // namespace

CoefficientFieldValues evaluate_pointwise(const GridSpec& grid, const PointwiseModel& model) {
  CoefficientFieldValues out;
  out.kind = ModelKind::NStatAD;
  out.evolution = spatial_pointwise(grid, model);
  out.initial = out.evolution;
  const int mb = grid.mb();
  const int nb = grid.nb();
  out.omega.wx_v.resize((mb + 1) * nb);
  out.omega.wy_h.resize(mb * (nb + 1));
  for (int j = 0; j < nb; ++j)
    for (int i = 0; i <= mb; ++i) {
      const Point p = grid.vertical_face_center(i, j);
      out.omega.wx_v[j * (mb + 1) + i] = model.advection(p).x * taper_factor(grid, p);
    }
  for (int j = 0; j <= nb; ++j)
    for (int i = 0; i < mb; ++i) {
      const Point p = grid.horizontal_face_center(i, j);
      out.omega.wy_h[j * mb + i] = model.advection(p).y * taper_factor(grid, p);
    }
  out.tau = std::exp(model.log_tau);
  return out;
}

Point true_advection(Point s) {
  const double u = (s.x / 15.0 + 0.5) * kPi / 3.0;
  const double w = (s.y / 15.0 + 0.5) * kPi / 3.0;
  return {30.0 * std::sin(u) * std::cos(w), -30.0 * std::cos(u) * std::sin(w)};
}

Point true_anisotropy(Point s) {
  const double u = (s.x / 15.0 + 0.5) * kPi / 3.0;
  const double w = (s.y / 15.0 + 0.5) * kPi / 3.0;
  return {-0.7 * std::cos(u) * std::sin(w), -0.7 * std::sin(w) * std::cos(u)};
}

PointwiseModel true_model() {
  PointwiseModel m;
  m.log_kappa = [](Point) { return -2.0; };
  m.log_gamma = [](Point) { return -1.0; };
  m.anisotropy = true_anisotropy;
  m.advection = true_advection;
  m.log_tau = -4.0;
  return m;
}

CoefficientFieldValues true_model_fields(const GridSpec& grid) { return evaluate_pointwise(grid, true_model()); }

std::vector<int> cells_in_rectangle(const GridSpec& grid, const Bounds& rect) {
  std::vector<int> out;
  for (int j = 0; j < grid.nb(); ++j)
    for (int i = 0; i < grid.mb(); ++i) {
      if (!grid.is_interior_cell(i, j)) continue;
      const Point p = grid.cell_center(i, j);
      if (p.x >= rect.x_min && p.x <= rect.x_max && p.y >= rect.y_min && p.y <= rect.y_max)
        out.push_back(grid.flat(i, j));
    }
  return out;
}

std::vector<int> interior_cells(const GridSpec& grid) {
  std::vector<int> out;
  out.reserve(static_cast<size_t>(grid.m()) * grid.n());
  for (int j = 0; j < grid.nb(); ++j)
    for (int i = 0; i < grid.mb(); ++i)
      if (grid.is_interior_cell(i, j)) out.push_back(grid.flat(i, j));
  return out;
}

std::string_view to_string(CandidateModel m) {
  switch (m) {
    case CandidateModel::NStatTrue: return "nstat-true";
    case CandidateModel::NStatAD: return "nstat-ad";
    case CandidateModel::StatAD: return "stat-ad";
    case CandidateModel::NStatSep: return "nstat-sep";
  }
  return "unknown";
}

CandidateModel parse_candidate_model(std::string_view name) {
  if (name == "nstat-true") return CandidateModel::NStatTrue;
  switch (parse_model_kind(name)) {
    case ModelKind::NStatAD: return CandidateModel::NStatAD;
    case ModelKind::StatAD: return CandidateModel::StatAD;
    case ModelKind::NStatSep: return CandidateModel::NStatSep;
  }
  return CandidateModel::NStatAD;
}

std::optional<ModelKind> fitted_kind(CandidateModel m) {
  switch (m) {
    case CandidateModel::NStatTrue: return std::nullopt;
    case CandidateModel::NStatAD: return ModelKind::NStatAD;
    case CandidateModel::StatAD: return ModelKind::StatAD;
    case CandidateModel::NStatSep: return ModelKind::NStatSep;
  }
  return std::nullopt;
}

StudyScale parse_scale(std::string_view name) {
  if (name == "desk") return StudyScale::Desk;
  if (name == "paper") return StudyScale::Paper;
  throw std::invalid_argument("unknown scale '" + std::string(name) + "' (expected desk or paper)");
}

std::string_view to_string(StudyScale s) { return s == StudyScale::Desk ? "desk" : "paper"; }

// ---------------------------------------------------------------------------

StudyConfig StudyConfig::for_scale(StudyScale scale) {
  StudyConfig c;
  if (scale == StudyScale::Paper) {
    c.m = c.n = 50;
    c.buffer = 5;
    c.num_times = 12;
    c.n_train = c.n_test = 20;
  }
  return c;
}

GridSpec StudyConfig::grid() const {
  return build_grid(interior, m, n, buffer, num_times, time_step_for_interval(duration, num_times));
}

void StudyConfig::validate() const {
  const GridSpec g = grid();
  check_interior(g, mask, "mask rectangle");
  if (models.empty()) throw std::invalid_argument("study needs at least one model");
  if (n_train < 1 || n_test < 1) throw std::invalid_argument("replicate counts must be positive");
  if (sigma_n2 <= 0.0) throw std::invalid_argument("noise variance must be positive");
  if (sd_samples < 2) throw std::invalid_argument("sd_samples must be at least 2");
  if (workers < 1) throw std::invalid_argument("workers must be positive");
  optimizer.validate();
}

const ModelStudyResult& StudyResult::at(CandidateModel m) const {
  for (const auto& r : models)
    if (r.model == m) return r;
  throw std::out_of_range("model not part of the study: " + std::string(to_string(m)));
}

std::vector<VectorXd> simulate_replicates(const GridSpec& grid, const CoefficientFieldValues& fields, int count,
                                          double sigma_n2, std::uint64_t seed, std::uint64_t stream, int workers) {
  const auto model = SpaceTimeModel::create(grid, fields);
  std::vector<VectorXd> out(static_cast<size_t>(count));
  const double sd = std::sqrt(sigma_n2);
  parallel_for(out.size(), workers, [&](size_t r) {
    RandomStream rng(derive_seed(seed, stream, r));
    VectorXd z = model->simulate(rng);
    out[r] = z + sd * rng.normal_vector(z.size());
  });
  return out;
}

std::vector<ScoreRecord> score_masked_predictions(const GridSpec& grid, const CoefficientFieldValues& fields,
                                                  double sigma_n2, const std::vector<VectorXd>& test,
                                                  const std::vector<int>& masked, int sd_samples, std::uint64_t seed,
                                                  int workers) {
  const int num_cells = grid.num_cells();
  const int num_times = grid.num_times();
  const auto model = SpaceTimeModel::create(grid, fields);
  const SparseMatrix& q = model->precision().q;

  const std::vector<int> interior = interior_cells(grid);
  const std::set<int> masked_set(masked.begin(), masked.end());
  std::vector<int> observed;
  for (int c : interior)
    if (!masked_set.count(c)) observed.push_back(c);

  std::vector<std::vector<ScoreRecord>> per_time(static_cast<size_t>(num_times));
  parallel_for(per_time.size(), workers, [&](size_t ko) {
    const int k_o = static_cast<int>(ko);
    std::vector<int> obs;
    obs.reserve(observed.size());
    for (int c : observed) obs.push_back(k_o * num_cells + c);
    ObservationDesign design(q.rows(), obs);
    auto factor = factor_conditional(q, design, sigma_n2);

    // Target blocks: masked cells at k_o, then every interior cell at k_p > k_o.
    std::vector<int> targets;
    std::vector<size_t> block_start{0};
    for (int c : masked) targets.push_back(k_o * num_cells + c);
    block_start.push_back(targets.size());
    for (int kp = k_o + 1; kp < num_times; ++kp) {
      for (int c : interior) targets.push_back(kp * num_cells + c);
      block_start.push_back(targets.size());
    }
    VectorXd sd = conditional_sd(*factor, targets, sd_samples, derive_seed(seed, ko));
    sd = (sd.array().square() + sigma_n2).sqrt();

    GaussianPosterior prior(factor, design, VectorXd::Zero(q.rows()), sigma_n2);
    auto& records = per_time[ko];
    for (size_t r = 0; r < test.size(); ++r) {
      VectorXd y(static_cast<Eigen::Index>(obs.size()));
      for (size_t i = 0; i < obs.size(); ++i) y[static_cast<Eigen::Index>(i)] = test[r][obs[i]];
      const VectorXd mu = prior.with_observations(y).mean();
      for (size_t b = 0; b + 1 < block_start.size(); ++b) {
        const auto lo = static_cast<Eigen::Index>(block_start[b]);
        const auto len = static_cast<Eigen::Index>(block_start[b + 1]) - lo;
        if (len == 0) continue;
        VectorXd pred(len), truth(len);
        for (Eigen::Index t = 0; t < len; ++t) {
          pred[t] = mu[targets[static_cast<size_t>(lo + t)]];
          truth[t] = test[r][targets[static_cast<size_t>(lo + t)]];
        }
        const VectorXd s = sd.segment(lo, len);
        records.push_back({k_o, k_o + static_cast<int>(b), static_cast<int>(r), rmse(pred, truth),
                           crps_gaussian(pred, s, truth)});
      }
    }
  });
  std::vector<ScoreRecord> out;
  for (auto& v : per_time) out.insert(out.end(), v.begin(), v.end());
  return out;
}

StudyResult run_simulation_study(const StudyConfig& config) {
  config.validate();
  const GridSpec grid = config.grid();
  const int num_cells = grid.num_cells();
  const CoefficientFieldValues truth = true_model_fields(grid);

  const auto train = simulate_replicates(grid, truth, config.n_train, config.sigma_n2, config.seed, 1, config.workers);
  const auto test = simulate_replicates(grid, truth, config.n_test, config.sigma_n2, config.seed, 2, config.workers);

  const std::vector<int> masked = cells_in_rectangle(grid, config.mask);
  const std::set<int> masked_set(masked.begin(), masked.end());
  std::vector<int> obs;
  for (int k = 0; k < grid.num_times(); ++k)
    for (int c : interior_cells(grid))
      if (!masked_set.count(c)) obs.push_back(k * num_cells + c);

  Dataset data;
  data.design = ObservationDesign(static_cast<Eigen::Index>(grid.latent_size()), obs);
  for (const auto& z : train) {
    VectorXd y(static_cast<Eigen::Index>(obs.size()));
    for (size_t i = 0; i < obs.size(); ++i) y[static_cast<Eigen::Index>(i)] = z[obs[i]];
    data.replicates.push_back(std::move(y));
  }

  StudyResult result;
  result.models.resize(config.models.size());
  parallel_for(config.models.size(), config.workers, [&](size_t i) {
    auto& out = result.models[i];
    out.model = config.models[i];
    const auto kind = fitted_kind(out.model);
    if (!kind) return;
    Objective objective(grid, *kind, config.n_per_axis, data);
    try {
      FitProgress hook;
      if (config.progress) hook = [&](const TraceRow& row) { config.progress(out.model, row); };
      FitResult f = fit(objective, config.optimizer, ModelParameters::initial(*kind, config.n_per_axis), hook);
      out.params = std::move(f.params);
      out.trace = std::move(f.trace);
    } catch (const FitDiverged& e) {
      throw std::runtime_error("fitting " + std::string(to_string(out.model)) + " failed: " + e.what());
    }
  });

  for (size_t i = 0; i < result.models.size(); ++i) {
    auto& out = result.models[i];
    CoefficientFieldValues fields = truth;
    double s2 = config.sigma_n2;
    if (out.params) {
      fields = assemble_fields(*out.params, out.params->basis(grid), grid);
      s2 = out.params->sigma_n2();
    }
    out.records = score_masked_predictions(grid, fields, s2, test, masked, config.sd_samples,
                                           derive_seed(config.seed, 3, i), config.workers);
    out.table = aggregate_by_lag(out.records, grid.num_times());
  }
  return result;
}

void write_study_csv(std::ostream& os, const StudyResult& result) {
  os << "model,lag,metric,mean,sd,n\n";
  os.precision(12);
  for (const auto& m : result.models)
    for (const auto& row : m.table.rows) {
      if (row.count == 0) continue;
      os << to_string(m.model) << ',' << row.lag << ",rmse," << row.rmse_mean << ',' << row.rmse_sd << ','
         << row.count << '\n';
      os << to_string(m.model) << ',' << row.lag << ",crps," << row.crps_mean << ',' << row.crps_sd << ','
         << row.count << '\n';
    }
}

// ---------------------------------------------------------------------------
// Paths.

int PathConfig::mission_steps() const {
  return static_cast<int>(std::ceil(mission_minutes * 60.0 / step_seconds - 1e-9));
}

Trajectory generate_path(const GridSpec& grid, std::uint64_t seed, const PathConfig& config) {
  if (config.speed_mps <= 0.0 || config.cell_size_m <= 0.0 || config.step_seconds <= 0.0 ||
      config.mission_minutes <= 0.0)
    throw std::invalid_argument("path speed, cell size, step and mission length must be positive");
  const int steps = config.mission_steps();
  if (steps > grid.num_times())
    throw std::invalid_argument("mission of " + std::to_string(steps) + " steps does not fit in " +
                                std::to_string(grid.num_times()) + " time points");

  static constexpr std::array<std::array<int, 2>, 8> kHeadings{
      {{1, 0}, {1, 1}, {0, 1}, {-1, 1}, {-1, 0}, {-1, -1}, {0, -1}, {1, -1}}};
  auto direction = [&](int h) {
    const double norm = (kHeadings[h][0] != 0 && kHeadings[h][1] != 0) ? std::numbers::sqrt2 : 1.0;
    return Point{kHeadings[h][0] * grid.hx() / norm, kHeadings[h][1] * grid.hy() / norm};
  };

  const Bounds& d = grid.interior();
  const double eps = 1e-9;
  auto inside = [&](Point p, double margin) {
    return p.x >= d.x_min + margin * grid.hx() + eps && p.x <= d.x_max - margin * grid.hx() - eps &&
           p.y >= d.y_min + margin * grid.hy() + eps && p.y <= d.y_max - margin * grid.hy() - eps;
  };

  RandomStream rng(seed, 0x9a7);
  const double margin = std::min({config.margin, 0.25 * grid.m(), 0.25 * grid.n()});
  Point p{d.x_min + margin * grid.hx() + rng.uniform() * (d.x_max - d.x_min - 2 * margin * grid.hx()),
          d.y_min + margin * grid.hy() + rng.uniform() * (d.y_max - d.y_min - 2 * margin * grid.hy())};
  int heading = static_cast<int>(rng.uniform() * 8.0) % 8;

  std::vector<int> visits(static_cast<size_t>(grid.num_cells()), 0);
  Trajectory traj;
  traj.speed_mps = config.speed_mps;
  traj.duration_minutes = config.mission_minutes;
  const double per_step = config.cells_per_step();
  const double total = per_step * config.mission_minutes * 60.0 / config.step_seconds;
  traj.length_cells = total;

  CellIndex cell = grid.locate(p);
  int time_index = 0;
  traj.events.push_back({0, cell.flat});
  visits[static_cast<size_t>(cell.flat)]++;

  auto score = [&](int h) {
    const Point dir = direction(h);
    const int turn = std::min((h - heading + 8) % 8, (heading - h + 8) % 8);
    double s = config.straightness * std::cos(turn * kPi / 4.0);
    for (int l = 1; l <= config.lookahead; ++l) {
      const Point q{p.x + l * dir.x, p.y + l * dir.y};
      if (!inside(q, 0.0)) {
        s -= 10.0 * config.boundary;
        continue;
      }
      if (!inside(q, margin)) s -= config.boundary;
      s -= config.revisit * visits[static_cast<size_t>(grid.locate(q).flat)];
    }
    return s;
  };

  auto choose_heading = [&] {
    std::vector<int> candidates;
    std::vector<double> scores;
    for (int dh = -2; dh <= 2; ++dh) {
      const int h = (heading + dh + 8) % 8;
      const Point dir = direction(h);
      if (!inside({p.x + dir.x, p.y + dir.y}, 0.0)) continue;
      candidates.push_back(h);
      scores.push_back(score(h));
    }
    if (candidates.empty()) {
      // Boxed in: reflect towards the best of all headings.
      int best = heading;
      double best_score = -std::numeric_limits<double>::infinity();
      for (int h = 0; h < 8; ++h) {
        const Point dir = direction(h);
        const double s = score(h) + (inside({p.x + 0.25 * dir.x, p.y + 0.25 * dir.y}, 0.0) ? 0.0 : -1e6);
        if (s > best_score) best_score = s, best = h;
      }
      heading = best;
      return;
    }
    const double top = *std::max_element(scores.begin(), scores.end());
    double sum = 0.0;
    for (double& s : scores) sum += (s = std::exp((s - top) / config.temperature));
    double u = rng.uniform() * sum;
    size_t pick = 0;
    while (pick + 1 < scores.size() && u > scores[pick]) u -= scores[pick++];
    heading = candidates[pick];
  };

  const double ds = 0.25;
  const double decide_every = 2.0;
  double dist = 0.0;
  double next_decision = 0.0;
  while (dist < total - 1e-12) {
    if (dist >= next_decision - 1e-12) {
      choose_heading();
      next_decision += decide_every;
    }
    const double step = std::min(ds, total - dist);
    Point dir = direction(heading);
    Point q{p.x + step * dir.x, p.y + step * dir.y};
    if (!inside(q, 0.0)) {
      int best = -1;
      double best_score = -std::numeric_limits<double>::infinity();
      for (int h = 0; h < 8; ++h) {
        const Point dh = direction(h);
        if (!inside({p.x + step * dh.x, p.y + step * dh.y}, 0.0)) continue;
        const double s = score(h);
        if (s > best_score) best_score = s, best = h;
      }
      heading = best;
      dir = direction(heading);
      q = {p.x + step * dir.x, p.y + step * dir.y};
    }
    p = q;
    dist += step;

    const int k = std::min(static_cast<int>(std::floor(dist / per_step + 1e-9)), steps - 1);
    const CellIndex next = grid.locate(p);
    if (next.flat != cell.flat) {
      if (next.i != cell.i && next.j != cell.j) {
        const int via = grid.flat(next.i, cell.j);
        traj.events.push_back({k, via});
        visits[static_cast<size_t>(via)]++;
      }
      traj.events.push_back({k, next.flat});
      visits[static_cast<size_t>(next.flat)]++;
      cell = next;
      time_index = k;
    } else if (k != time_index) {
      traj.events.push_back({k, cell.flat});
      time_index = k;
    }
  }
  return traj;
}

// ---------------------------------------------------------------------------
// Segments and synthetic fields.

Eigen::VectorXd SegmentedData::spatial_mean() const {
  VectorXd mu = VectorXd::Zero(num_cells);
  if (means.empty()) return mu;
  for (const auto& m : means) mu += m;
  return mu / static_cast<double>(means.size());
}

Eigen::VectorXd SegmentedData::reconstruct(int segment) const {
  const auto& r = residuals.at(static_cast<size_t>(segment));
  const auto& m = means.at(static_cast<size_t>(segment));
  VectorXd out(r.size());
  for (int k = 0; k < num_times; ++k) out.segment(k * num_cells, num_cells) = r.segment(k * num_cells, num_cells) + m;
  return out;
}

SegmentedData detrend_segments(int num_cells, int num_times, std::vector<VectorXd> fields) {
  if (num_cells < 1 || num_times < 1) throw std::invalid_argument("segments need cells and times");
  SegmentedData out;
  out.num_cells = num_cells;
  out.num_times = num_times;
  for (const auto& f : fields) {
    if (f.size() != static_cast<Eigen::Index>(num_cells) * num_times)
      throw std::invalid_argument("segment field has the wrong size");
    if (!f.allFinite()) throw std::invalid_argument("segment field has missing values");
    VectorXd mean = VectorXd::Zero(num_cells);
    for (int k = 0; k < num_times; ++k) mean += f.segment(k * num_cells, num_cells);
    mean /= static_cast<double>(num_times);
    VectorXd r(f.size());
    for (int k = 0; k < num_times; ++k) r.segment(k * num_cells, num_cells) = f.segment(k * num_cells, num_cells) - mean;
    out.means.push_back(std::move(mean));
    out.residuals.push_back(std::move(r));
  }
  out.fields = std::move(fields);
  return out;
}

GridSpec OceanConfig::grid() const {
  return build_grid({0.0, static_cast<double>(m), 0.0, static_cast<double>(n)}, m, n, buffer, num_times, dt);
}

Point ocean_outlet(const GridSpec& grid) {
  const Bounds& d = grid.interior();
  return {d.x_min + 0.3 * (d.x_max - d.x_min), d.y_min + 0.2 * (d.y_max - d.y_min)};
}

PointwiseModel hidden_ocean_model(const GridSpec& grid) {
  const Bounds d = grid.interior();
  const Point outlet = ocean_outlet(grid);
  const double lx = d.x_max - d.x_min;
  const double radius = 0.15 * std::min(lx, d.y_max - d.y_min);
  PointwiseModel m;
  m.log_kappa = [=](Point s) {
    const double r2 = (s.x - outlet.x) * (s.x - outlet.x) + (s.y - outlet.y) * (s.y - outlet.y);
    return std::log(0.35) + std::log(1.0 - 0.6 * std::exp(-r2 / (2.0 * radius * radius)));
  };
  m.log_gamma = [](Point) { return std::log(0.5); };
  m.anisotropy = [](Point) { return Point{0.7, 0.0}; };
  m.advection = [=](Point s) {
    const double x = std::clamp((s.x - d.x_min) / lx, 0.0, 1.0);
    return Point{0.0, 1.5 * (0.6 + 0.4 * std::sin(kPi * x))};
  };
  m.log_tau = -0.25;
  return m;
}

std::vector<VectorXd> synth_ocean_fields(const GridSpec& grid, std::uint64_t seed, int n_segments,
                                         const OceanConfig& config) {
  const auto model = SpaceTimeModel::create(grid, evaluate_pointwise(grid, hidden_ocean_model(grid)));
  const Bounds& d = grid.interior();
  const int num_cells = grid.num_cells();
  VectorXd trend(num_cells);
  for (int c = 0; c < num_cells; ++c) {
    const Point s = grid.cell_center(c);
    const double u = (s.x - d.x_min) / (d.x_max - d.x_min);
    const double v = (s.y - d.y_min) / (d.y_max - d.y_min);
    trend[c] = config.trend * (0.8 * (u - 0.5) + 0.5 * std::cos(kPi * v));
  }
  std::vector<VectorXd> out;
  for (int s = 0; s < n_segments; ++s) {
    RandomStream rng(derive_seed(seed, 0x0ce, static_cast<std::uint64_t>(s)));
    VectorXd z = model->simulate(rng);
    const double offset = config.offset_sd * rng.normal();
    for (int k = 0; k < grid.num_times(); ++k) z.segment(k * num_cells, num_cells).array() += trend.array() + offset;
    out.push_back(std::move(z));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Emulation study.

void EmulationConfig::validate() const {
  if (models.empty()) throw std::invalid_argument("emulation needs at least one model");
  for (auto m : models)
    if (!fitted_kind(m)) throw std::invalid_argument("emulation models must be fitted kinds");
  if (n_train < 1 || n_test < 1 || n_paths < 1) throw std::invalid_argument("segment and path counts must be positive");
  if (sigma_n2 <= 0.0) throw std::invalid_argument("noise variance must be positive");
  if (sd_samples < 2) throw std::invalid_argument("sd_samples must be at least 2");
  if (workers < 1) throw std::invalid_argument("workers must be positive");
  optimizer.validate();
}

const EmulationRow& EmulationResult::at(int segment, CandidateModel model) const {
  for (const auto& r : rows)
    if (r.segment == segment && r.model == model) return r;
  throw std::out_of_range("no emulation row for segment " + std::to_string(segment));
}

ModelParameters emulation_initial(CandidateModel model, int n_per_axis) {
  const auto kind = fitted_kind(model);
  if (!kind) throw std::invalid_argument("the reference model has no parameters");
  ModelParameters p = ModelParameters::initial(*kind, n_per_axis);
  if (*kind != ModelKind::NStatSep) p.block(AdBlock::OmegaE2).setConstant(1.0);
  return p;
}

EmulationResult run_emulation_study(const std::vector<VectorXd>& train_fields, const std::vector<VectorXd>& test_fields,
                                    const EmulationConfig& config) {
  config.validate();
  const GridSpec grid = config.ocean.grid();
  const int num_cells = grid.num_cells();
  const int num_times = grid.num_times();
  const Eigen::Index latent = static_cast<Eigen::Index>(grid.latent_size());
  for (const auto& f : test_fields)
    if (f.size() != latent) throw std::invalid_argument("test field has the wrong size");

  const SegmentedData train = detrend_segments(num_cells, num_times, train_fields);
  const VectorXd mu_s = train.spatial_mean();
  const std::vector<int> interior = interior_cells(grid);

  std::vector<int> dense;
  for (int k = 0; k < num_times; ++k)
    for (int c : interior) dense.push_back(k * num_cells + c);
  Dataset data;
  data.design = ObservationDesign(latent, dense);
  for (const auto& r : train.residuals) {
    VectorXd y(static_cast<Eigen::Index>(dense.size()));
    for (size_t i = 0; i < dense.size(); ++i) y[static_cast<Eigen::Index>(i)] = r[dense[i]];
    data.replicates.push_back(std::move(y));
  }

  const size_t n_models = config.models.size();
  EmulationResult result;
  result.params.resize(n_models);
  result.traces.resize(n_models);
  parallel_for(n_models, config.workers, [&](size_t i) {
    const CandidateModel m = config.models[i];
    Objective objective(grid, *fitted_kind(m), config.n_per_axis, data);
    try {
      FitProgress hook;
      if (config.progress) hook = [&](const TraceRow& row) { config.progress(m, row); };
      FitResult f = fit(objective, config.optimizer, emulation_initial(m, config.n_per_axis), hook);
      result.params[i] = std::move(f.params);
      result.traces[i] = std::move(f.trace);
    } catch (const FitDiverged& e) {
      throw std::runtime_error("fitting " + std::string(to_string(m)) + " failed: " + e.what());
    }
  });

  std::vector<Trajectory> paths;
  for (int p = 0; p < config.n_paths; ++p)
    paths.push_back(generate_path(grid, derive_seed(config.seed, 0xa07, static_cast<std::uint64_t>(p)), config.path));

  std::vector<SparseMatrix> precisions;
  for (const auto& params : result.params)
    precisions.push_back(assemble_precision(params, grid).q);

  // scores[(model * paths + path) * segments + segment] = {rmse, crps}; NaN marks a failure.
  const size_t n_paths = paths.size();
  const size_t n_seg = test_fields.size();
  std::vector<std::array<double, 2>> scores(n_models * n_paths * n_seg,
                                            {std::numeric_limits<double>::quiet_NaN(), 0.0});
  const double noise_sd = std::sqrt(config.sigma_n2);
  parallel_for(n_models * n_paths, config.workers, [&](size_t task) {
    const size_t mi = task / n_paths;
    const size_t pi = task % n_paths;
    const auto& events = paths[pi].events;
    std::vector<int> obs;
    obs.reserve(events.size());
    for (const auto& e : events) obs.push_back(e.time_index * num_cells + e.cell);
    std::vector<char> seen(static_cast<size_t>(latent), 0);
    for (int o : obs) seen[static_cast<size_t>(o)] = 1;
    std::vector<int> targets;
    for (int k = 0; k < num_times; ++k)
      for (int c : interior)
        if (!seen[static_cast<size_t>(k * num_cells + c)]) targets.push_back(k * num_cells + c);

    ObservationDesign design(latent, obs);
    std::shared_ptr<SparseCholesky> factor;
    VectorXd sd;
    try {
      factor = factor_conditional(precisions[mi], design, config.sigma_n2);
      sd = conditional_sd(*factor, targets, config.sd_samples, derive_seed(config.seed, 0x5d0, task));
    } catch (const std::runtime_error&) {
      return;
    }
    GaussianPosterior prior(factor, design, VectorXd::Zero(latent), config.sigma_n2);
    for (size_t s = 0; s < n_seg; ++s) {
      const VectorXd& truth_field = test_fields[s];
      RandomStream rng(derive_seed(config.seed, 0x0b5, s * n_paths + pi));
      VectorXd y(static_cast<Eigen::Index>(obs.size()));
      for (size_t i = 0; i < obs.size(); ++i) {
        const int cell = events[i].cell;
        y[static_cast<Eigen::Index>(i)] = truth_field[obs[i]] + noise_sd * rng.normal() - mu_s[cell];
      }
      try {
        const VectorXd mu = prior.with_observations(y).mean();
        VectorXd pred(static_cast<Eigen::Index>(targets.size())), truth(pred.size());
        for (size_t t = 0; t < targets.size(); ++t) {
          pred[static_cast<Eigen::Index>(t)] = mu_s[targets[t] % num_cells] + mu[targets[t]];
          truth[static_cast<Eigen::Index>(t)] = truth_field[targets[t]];
        }
        if (!pred.allFinite()) continue;
        scores[task * n_seg + s] = {rmse(pred, truth), crps_gaussian(pred, sd, truth)};
      } catch (const std::runtime_error&) {
      }
    }
  });

  for (size_t s = 0; s < n_seg; ++s)
    for (size_t mi = 0; mi < n_models; ++mi) {
      std::vector<double> r, c;
      int failures = 0;
      for (size_t pi = 0; pi < n_paths; ++pi) {
        const auto& v = scores[(mi * n_paths + pi) * n_seg + s];
        if (std::isnan(v[0])) {
          ++failures;
          continue;
        }
        r.push_back(v[0]);
        c.push_back(v[1]);
      }
      const Summary rs = summarize(r);
      const Summary cs = summarize(c);
      result.rows.push_back({static_cast<int>(s), config.models[mi], rs.mean, rs.sd, cs.mean, cs.sd, rs.count, failures});
    }
  return result;
}

void write_emulation_csv(std::ostream& os, const EmulationResult& result) {
  os << "segment,model,rmse_mean,rmse_sd,crps_mean,crps_sd,paths,failures\n";
  os.precision(12);
  for (const auto& r : result.rows)
    os << r.segment << ',' << to_string(r.model) << ',' << r.rmse_mean << ',' << r.rmse_sd << ',' << r.crps_mean << ','
       << r.crps_sd << ',' << r.paths << ',' << r.failures << '\n';
}

}  // namespace stadr
