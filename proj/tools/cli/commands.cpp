#include "commands.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <mutex>
#include <numeric>
#include <ostream>
#include <sstream>

#include "stadr/fieldio.hpp"
#include "stadr/gmrf.hpp"
#include "stadr/harness.hpp"
#include "stadr/inference.hpp"
#include "stadr/parallel.hpp"
#include "stadr/scoring.hpp"
#include "stadr/spacetime.hpp"

namespace stadr::cli {

namespace fs = std::filesystem;
using Eigen::VectorXd;

namespace {

fs::path output_dir(RunConfig& c) {
  fs::path out = c.get_string("out", "stadr_out");
  fs::create_directories(out);
  return out;
}

std::uint64_t seed_of(RunConfig& c) { return static_cast<std::uint64_t>(c.get_int("seed", 1)); }

int workers_of(RunConfig& c) {
  const auto w = c.get_int("workers", default_workers());
  if (w < 1) throw ConfigError("workers must be positive");
  return static_cast<int>(w);
}

StudyScale scale_of(RunConfig& c) { return parse_scale(c.get_string("scale", "desk")); }

GridSpec grid_of(RunConfig& c) {
  const StudyConfig d = StudyConfig::for_scale(scale_of(c));
  Bounds b;
  b.x_min = c.get_double("x_min", d.interior.x_min);
  b.x_max = c.get_double("x_max", d.interior.x_max);
  b.y_min = c.get_double("y_min", d.interior.y_min);
  b.y_max = c.get_double("y_max", d.interior.y_max);
  const int m = static_cast<int>(c.get_int("m", d.m));
  const int n = static_cast<int>(c.get_int("n", d.n));
  const int buffer = static_cast<int>(c.get_int("buffer", d.buffer));
  const int t = static_cast<int>(c.get_int("num_times", d.num_times));
  const double dt = c.get_double("dt", time_step_for_interval(d.duration, t));
  return build_grid(b, m, n, buffer, t, dt);
}

OptimizerConfig optimizer_of(RunConfig& c, int workers) {
  OptimizerConfig o;
  o.algorithm = parse_algorithm(c.get_string("algorithm", std::string(to_string(o.algorithm))));
  o.step_size = c.get_double("step_size", o.step_size);
  o.beta1 = c.get_double("beta1", o.beta1);
  o.beta2 = c.get_double("beta2", o.beta2);
  o.decay = c.get_double("decay", o.decay);
  o.epsilon = c.get_double("epsilon", o.epsilon);
  o.max_iterations = static_cast<int>(c.get_int("max_iterations", o.max_iterations));
  o.num_probes = static_cast<int>(c.get_int("num_probes", o.num_probes));
  o.window = static_cast<int>(c.get_int("window", o.window));
  o.tolerance = c.get_double("tolerance", o.tolerance);
  o.gradient_tolerance = c.get_double("gradient_tolerance", o.gradient_tolerance);
  o.exact_gradient = c.get_bool("exact_gradient", o.exact_gradient);
  o.start_iteration = static_cast<int>(c.get_int("start_iteration", o.start_iteration));
  o.advection_step_scale = c.get_double("advection_step_scale", o.advection_step_scale);
  o.final_step_fraction = c.get_double("final_step_fraction", o.final_step_fraction);
  o.seed = seed_of(c);
  o.workers = workers;
  o.validate();
  return o;
}

std::string field_extension(RunConfig& c) {
  const std::string f = c.get_string("format", "stfd");
  if (f == "stfd") return ".stfd";
  if (f == "csv") return ".csv";
  throw ConfigError("format must be stfd or csv, got '" + f + "'");
}

std::string numbered(const std::string& stem, int i, const std::string& ext) {
  std::ostringstream ss;
  ss << stem << '_' << std::setw(3) << std::setfill('0') << i << ext;
  return ss.str();
}

/// Model fields for `model`, taking parameters from the `params` key for
/// fitted kinds. Returns the nugget variance to use with them.
std::pair<CoefficientFieldValues, double> model_fields(RunConfig& c, const GridSpec& grid, CandidateModel model,
                                                       double default_sigma) {
  if (model == CandidateModel::NStatTrue) return {true_model_fields(grid), c.get_double("sigma_n2", default_sigma)};
  const ModelParameters p = read_parameters(fs::path(c.require("params")));
  if (p.kind() != *fitted_kind(model))
    throw ConfigError("parameter file holds a " + std::string(to_string(p.kind())) + " model, not " +
                      std::string(to_string(model)));
  return {assemble_fields(p, p.basis(grid), grid), c.get_double("sigma_n2", p.sigma_n2())};
}

std::vector<int> observed_entries(const VectorXd& v) {
  std::vector<int> idx;
  for (Eigen::Index i = 0; i < v.size(); ++i)
    if (std::isfinite(v[i])) idx.push_back(static_cast<int>(i));
  return idx;
}

VectorXd gather(const VectorXd& v, const std::vector<int>& idx) {
  VectorXd out(static_cast<Eigen::Index>(idx.size()));
  for (size_t i = 0; i < idx.size(); ++i) out[static_cast<Eigen::Index>(i)] = v[idx[i]];
  return out;
}

FitProgress progress_printer(std::ostream& log, const std::string& label) {
  return [&log, label](const TraceRow& r) {
    if (r.iteration % 10 == 0) log << label << " iteration " << r.iteration << " objective " << r.objective << '\n';
  };
}

std::vector<CandidateModel> models_of(RunConfig& c, const std::string& fallback) {
  std::vector<CandidateModel> out;
  c.get_string("models", fallback);
  for (const auto& name : c.get_list("models")) out.push_back(parse_candidate_model(name));
  if (out.empty())
    for (std::stringstream ss(fallback); ss.good();) {
      std::string name;
      std::getline(ss, name, ',');
      out.push_back(parse_candidate_model(name));
    }
  return out;
}

void write_fit_outputs(const fs::path& out, const std::string& tag, const ModelParameters& p,
                       const std::vector<TraceRow>& trace) {
  write_parameters(out / ("params" + tag + ".txt"), p);
  std::ofstream os(out / ("trace" + tag + ".csv"));
  write_trace_csv(os, trace);
}

}  // namespace

const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names{"simulate", "fit", "predict", "score", "study-sim", "study-auv"};
  return names;
}

int cmd_simulate(RunConfig& c, std::ostream& log) {
  const GridSpec grid = grid_of(c);
  const CandidateModel model = parse_candidate_model(c.get_string("model", "nstat-true"));
  const auto [fields, s2] = model_fields(c, grid, model, 0.0);
  if (s2 < 0.0) throw ConfigError("sigma_n2 must be non-negative");
  const int count = static_cast<int>(c.get_int("count", 1));
  if (count < 1) throw ConfigError("count must be positive");
  const std::string ext = field_extension(c);
  const int workers = workers_of(c);
  const std::uint64_t seed = seed_of(c);
  const fs::path out = output_dir(c);
  const auto draws = simulate_replicates(grid, fields, count, s2, seed, 1, workers);
  for (int r = 0; r < count; ++r)
    write_field(out / numbered("realization", r, ext), FieldData::on_grid(grid, draws[static_cast<size_t>(r)]));
  log << "wrote " << count << " realization(s) of " << to_string(model) << " to " << out.string() << '\n';
  return 0;
}

int cmd_fit(RunConfig& c, std::ostream& log) {
  const GridSpec grid = grid_of(c);
  const std::string model_name = c.get_string("model", "nstat-ad");
  const auto kind = fitted_kind(parse_candidate_model(model_name));
  if (!kind) throw ConfigError("the reference model has no parameters to fit");
  const int per_axis = static_cast<int>(c.get_int("basis_per_axis", 3));
  const int workers = workers_of(c);
  const OptimizerConfig opt = optimizer_of(c, workers);
  const auto files = c.get_list("data");
  if (files.empty()) throw ConfigError("missing required key 'data' (comma-separated field files)");

  Dataset data;
  std::vector<int> idx;
  for (const auto& f : files) {
    const FieldData field = read_field(fs::path(f), grid);
    const auto here = observed_entries(field.values);
    if (idx.empty()) idx = here;
    else if (here != idx) throw ConfigError("data files must share one observation pattern: " + f);
    data.replicates.push_back(gather(field.values, idx));
  }
  if (idx.empty()) throw ConfigError("data files contain no observations");
  data.design = ObservationDesign(static_cast<Eigen::Index>(grid.latent_size()), idx);

  ModelParameters init = ModelParameters::initial(*kind, per_axis);
  if (auto path = c.get_optional("init")) {
    init = read_parameters(fs::path(*path));
    if (init.kind() != *kind || init.n_per_axis() != per_axis)
      throw ConfigError("initial parameter file does not match model and basis_per_axis");
  }
  const fs::path out = output_dir(c);
  Objective objective(grid, *kind, per_axis, std::move(data));
  FitResult result;
  try {
    result = fit(objective, opt, init, progress_printer(log, model_name));
  } catch (const FitDiverged& e) {
    write_parameters(out / "params_last_valid.txt", e.last_valid());
    throw;
  }
  write_fit_outputs(out, "", result.params, result.trace);
  log << "fitted " << model_name << " (" << result.params.num_covariance_params() << " covariance parameters + nugget) in "
      << result.trace.size() << " iterations\n";
  return 0;
}

int cmd_predict(RunConfig& c, std::ostream& log) {
  const GridSpec grid = grid_of(c);
  std::string model_name = c.get_string("model", "");
  if (model_name.empty()) {
    if (!c.has("params")) throw ConfigError("predict needs 'params' or model = nstat-true");
    model_name = std::string(to_string(read_parameters(fs::path(c.require("params"))).kind()));
    c.set("model", model_name);
    c.get_string("model", model_name);
  }
  const CandidateModel model = parse_candidate_model(model_name);
  const auto [fields, s2] = model_fields(c, grid, model, 1e-3);
  if (!(s2 > 0.0)) throw ConfigError("sigma_n2 must be positive for conditioning");
  const FieldData obs = read_field(fs::path(c.require("observations")), grid);
  const int samples = static_cast<int>(c.get_int("sd_samples", 100));
  const bool nugget = c.get_bool("include_nugget", true);
  const std::uint64_t seed = seed_of(c);
  const std::string ext = field_extension(c);
  const fs::path out = output_dir(c);

  const auto idx = observed_entries(obs.values);
  ObservationDesign design(static_cast<Eigen::Index>(grid.latent_size()), idx);
  const auto st = SpaceTimeModel::create(grid, fields);
  const GaussianPosterior post = condition(st->precision().q, design, gather(obs.values, idx), s2);
  std::vector<int> targets(grid.latent_size());
  std::iota(targets.begin(), targets.end(), 0);
  const Prediction pred = predict(post, targets, {samples, seed, nugget});
  write_field(out / ("mean" + ext), FieldData::on_grid(grid, pred.mean));
  if (samples > 0) write_field(out / ("sd" + ext), FieldData::on_grid(grid, pred.sd));
  log << "conditioned " << model_name << " on " << idx.size() << " observations\n";
  return 0;
}

int cmd_score(RunConfig& c, std::ostream& log) {
  const GridSpec grid = grid_of(c);
  const FieldData mean = read_field(fs::path(c.require("mean")), grid);
  const FieldData sd = read_field(fs::path(c.require("sd")), grid);
  const FieldData truth = read_field(fs::path(c.require("truth")), grid);
  std::vector<char> skip(grid.latent_size(), 0);
  if (auto o = c.get_optional("observations")) {
    const FieldData obs = read_field(fs::path(*o), grid);
    for (int i : observed_entries(obs.values)) skip[static_cast<size_t>(i)] = 1;
  }
  const fs::path out = output_dir(c);
  const int k_cells = grid.num_cells();
  std::ofstream os(out / "scores.csv");
  os << "time,rmse,crps,n\n";
  os.precision(12);
  std::vector<int> all;
  auto emit = [&](const std::string& label, const std::vector<int>& idx) {
    if (idx.empty()) return;
    const VectorXd m = gather(mean.values, idx), s = gather(sd.values, idx), y = gather(truth.values, idx);
    os << label << ',' << rmse(m, y) << ',' << crps_gaussian(m, s, y) << ',' << idx.size() << '\n';
  };
  for (int k = 0; k < grid.num_times(); ++k) {
    std::vector<int> idx;
    for (int cell = 0; cell < k_cells; ++cell) {
      const int e = k * k_cells + cell;
      if (!skip[static_cast<size_t>(e)] && std::isfinite(truth.values[e])) idx.push_back(e);
    }
    emit(std::to_string(k), idx);
    all.insert(all.end(), idx.begin(), idx.end());
  }
  emit("all", all);
  log << "scored " << all.size() << " entries\n";
  return 0;
}

int cmd_study_sim(RunConfig& c, std::ostream& log) {
  StudyConfig s = StudyConfig::for_scale(scale_of(c));
  const GridSpec grid = grid_of(c);
  s.interior = grid.interior();
  s.m = grid.m();
  s.n = grid.n();
  s.buffer = grid.buffer();
  s.num_times = grid.num_times();
  s.duration = grid.dt() * (grid.num_times() - 1);
  s.models = models_of(c, "nstat-true,nstat-ad,stat-ad,nstat-sep");
  s.n_train = static_cast<int>(c.get_int("n_train", s.n_train));
  s.n_test = static_cast<int>(c.get_int("n_test", s.n_test));
  s.sigma_n2 = c.get_double("sigma_n2", s.sigma_n2);
  s.seed = seed_of(c);
  s.n_per_axis = static_cast<int>(c.get_int("basis_per_axis", s.n_per_axis));
  s.sd_samples = static_cast<int>(c.get_int("sd_samples", s.sd_samples));
  s.workers = workers_of(c);
  s.optimizer = optimizer_of(c, 1);
  {
    std::ostringstream def;
    def << RunConfig::format_double(s.mask.x_min) << ',' << RunConfig::format_double(s.mask.x_max) << ','
        << RunConfig::format_double(s.mask.y_min) << ',' << RunConfig::format_double(s.mask.y_max);
    c.get_string("mask", def.str());
    const auto parts = c.get_list("mask");
    if (!parts.empty()) {
      if (parts.size() != 4) throw ConfigError("mask expects x_min,x_max,y_min,y_max");
      s.mask = {std::stod(parts[0]), std::stod(parts[1]), std::stod(parts[2]), std::stod(parts[3])};
    }
  }
  const fs::path out = output_dir(c);
  std::mutex mu;
  s.progress = [&](CandidateModel m, const TraceRow& r) {
    if (r.iteration % 10) return;
    std::lock_guard lock(mu);
    log << to_string(m) << " iteration " << r.iteration << " objective " << r.objective << '\n';
  };

  const StudyResult result = run_simulation_study(s);
  {
    std::ofstream os(out / "study_scores.csv");
    write_study_csv(os, result);
  }
  std::ofstream rec(out / "records.csv");
  rec << "model,k_o,k_p,replicate,rmse,crps\n";
  rec.precision(12);
  for (const auto& m : result.models) {
    for (const auto& r : m.records)
      rec << to_string(m.model) << ',' << r.k_o << ',' << r.k_p << ',' << r.replicate << ',' << r.rmse << ','
          << r.crps << '\n';
    if (m.params) write_fit_outputs(out, "_" + std::string(to_string(m.model)), *m.params, m.trace);
  }
  log << "simulation study finished; scores in " << (out / "study_scores.csv").string() << '\n';
  return 0;
}

int cmd_study_auv(RunConfig& c, std::ostream& log) {
  EmulationConfig e;
  e.ocean.m = static_cast<int>(c.get_int("m", e.ocean.m));
  e.ocean.n = static_cast<int>(c.get_int("n", e.ocean.n));
  e.ocean.buffer = static_cast<int>(c.get_int("buffer", e.ocean.buffer));
  e.ocean.num_times = static_cast<int>(c.get_int("num_times", e.ocean.num_times));
  e.ocean.dt = c.get_double("dt", e.ocean.dt);
  e.models = models_of(c, "nstat-ad,nstat-sep");
  e.n_train = static_cast<int>(c.get_int("n_train", e.n_train));
  e.n_test = static_cast<int>(c.get_int("n_test", e.n_test));
  e.n_paths = static_cast<int>(c.get_int("n_paths", e.n_paths));
  e.sigma_n2 = c.get_double("sigma_n2", e.sigma_n2);
  e.seed = seed_of(c);
  e.n_per_axis = static_cast<int>(c.get_int("basis_per_axis", e.n_per_axis));
  e.sd_samples = static_cast<int>(c.get_int("sd_samples", e.sd_samples));
  e.workers = workers_of(c);
  e.optimizer = optimizer_of(c, 1);
  e.path.straightness = c.get_double("path_straightness", e.path.straightness);
  e.path.revisit = c.get_double("path_revisit", e.path.revisit);
  e.path.boundary = c.get_double("path_boundary", e.path.boundary);
  e.path.temperature = c.get_double("path_temperature", e.path.temperature);
  e.path.speed_mps = c.get_double("speed_mps", e.path.speed_mps);
  e.path.cell_size_m = c.get_double("cell_size_m", e.path.cell_size_m);
  e.path.mission_minutes = c.get_double("mission_minutes", e.path.mission_minutes);
  e.path.step_seconds = c.get_double("step_seconds", e.path.step_seconds);
  const GridSpec grid = e.ocean.grid();

  auto load = [&](const std::string& key, std::uint64_t stream, int count) {
    std::vector<VectorXd> fields;
    const auto files = c.get_list(key);
    if (files.empty()) return synth_ocean_fields(grid, derive_seed(e.seed, stream), count, e.ocean);
    for (const auto& f : files) fields.push_back(read_field(fs::path(f), grid).values);
    return fields;
  };
  const auto train = load("train_fields", 0x7a1, e.n_train);
  const auto test = load("test_fields", 0x7e5, e.n_test);
  e.n_train = static_cast<int>(train.size());
  e.n_test = static_cast<int>(test.size());

  const fs::path out = output_dir(c);
  std::mutex mu;
  e.progress = [&](CandidateModel m, const TraceRow& r) {
    if (r.iteration % 10) return;
    std::lock_guard lock(mu);
    log << to_string(m) << " iteration " << r.iteration << " objective " << r.objective << '\n';
  };
  const EmulationResult result = run_emulation_study(train, test, e);
  {
    std::ofstream os(out / "emulation_scores.csv");
    write_emulation_csv(os, result);
  }
  for (size_t i = 0; i < e.models.size(); ++i)
    write_fit_outputs(out, "_" + std::string(to_string(e.models[i])), result.params[i], result.traces[i]);
  std::ofstream paths(out / "paths.csv");
  paths << "path,event,time,i,j\n";
  for (int p = 0; p < e.n_paths; ++p) {
    const Trajectory t = generate_path(grid, derive_seed(e.seed, 0xa07, static_cast<std::uint64_t>(p)), e.path);
    for (size_t k = 0; k < t.events.size(); ++k) {
      const CellIndex ci = grid.cell(t.events[k].cell);
      paths << p << ',' << k << ',' << t.events[k].time_index << ',' << ci.i << ',' << ci.j << '\n';
    }
  }
  log << "emulation study finished; scores in " << (out / "emulation_scores.csv").string() << '\n';
  return 0;
}

int run_command(const std::string& command, const Overrides& ov, std::ostream& log) {
  RunConfig c;
  if (ov.config) c = RunConfig::load(*ov.config);
  if (ov.seed) c.set("seed", std::to_string(*ov.seed));
  if (ov.out) c.set("out", *ov.out);
  if (ov.workers) c.set("workers", std::to_string(*ov.workers));
  if (ov.model) c.set("model", *ov.model);
  if (ov.scale) c.set("scale", *ov.scale);
  if (ov.count) c.set("count", std::to_string(*ov.count));

  static const std::map<std::string, int (*)(RunConfig&, std::ostream&)> table{
      {"simulate", cmd_simulate}, {"fit", cmd_fit},             {"predict", cmd_predict},
      {"score", cmd_score},       {"study-sim", cmd_study_sim}, {"study-auv", cmd_study_auv}};
  const auto it = table.find(command);
  if (it == table.end()) throw ConfigError("unknown command '" + command + "'");
  const int code = it->second(c, log);
  std::ofstream echo(output_dir(c) / "config.resolved");
  echo << "# stadr " << command << '\n';
  c.write_resolved(echo);
  return code;
}

}  // namespace stadr::cli
