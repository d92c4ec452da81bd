#include "isac/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <initializer_list>
#include <mutex>
#include <numeric>
#include <ostream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace isac {

using nlohmann::json;

void ExperimentConfig::validate() const {
  const PhysicalConfig& p = physical;
  if (!(p.carrier_hz > 0.0)) throw std::invalid_argument("physical.carrier_hz must be positive");
  if (p.subcarriers < 1) throw std::invalid_argument("physical.subcarriers must be >= 1");
  if (!(p.subcarrier_spacing_hz > 0.0)) throw std::invalid_argument("physical.subcarrier_spacing_hz must be positive");
  if (!(p.element_spacing > 0.0)) throw std::invalid_argument("physical.element_spacing must be positive");
  if (!(p.perimeter_m > 0.0)) throw std::invalid_argument("physical.perimeter_m must be positive");
  if (p.apus_per_side < 1) throw std::invalid_argument("physical.apus_per_side must be >= 1");
  if (p.grid_points < 1) throw std::invalid_argument("physical.grid_points must be >= 1");
  if (p.grid_spacing_m && !(*p.grid_spacing_m > 0.0)) throw std::invalid_argument("physical.grid_spacing_m must be positive");
  if (p.targets < 1 || p.targets > p.grid_points) throw std::invalid_argument("physical.targets must be in 1..grid_points");
  if (!(p.power_budget_w > 0.0)) throw std::invalid_argument("physical.power_budget_w must be positive");
  if (!(p.noise_variance >= 0.0)) throw std::invalid_argument("physical.noise_variance must be >= 0");

  // Builds the grid once so placement problems surface before any trial runs.
  const ServiceArea area = ServiceArea::from_perimeter(p.perimeter_m);
  Grid(area, p.grid_points, p.grid_spacing_m.value_or(Grid::default_spacing(area, p.grid_points)));

  if (sweep.devices.empty() || sweep.antennas.empty() || sweep.roles.empty()) {
    throw std::invalid_argument("sweep axes must be nonempty");
  }
  for (std::size_t d : sweep.devices) {
    if (d < 1 || d > p.subcarriers) {
      throw std::invalid_argument("sweep.devices entries must be in 1..subcarriers");
    }
  }
  for (std::size_t m : sweep.antennas) {
    if (m < 1) throw std::invalid_argument("sweep.antennas entries must be >= 1");
  }
  for (const RoleSplit& r : sweep.roles) {
    if (r.sensing < 1 || r.comm < 1 || r.sensing + r.comm != apu_count()) {
      throw std::invalid_argument("sweep.roles entries need S >= 1, C >= 1 and S + C = " +
                                  std::to_string(apu_count()));
    }
  }
  solver.validate();
  if (!(fusion.softmax_temperature > 0.0)) throw std::invalid_argument("fusion.softmax_temperature must be positive");
  if (run.trials < 1) throw std::invalid_argument("run.trials must be >= 1");
  if (run.workers < 1) throw std::invalid_argument("run.workers must be >= 1");
}

ExperimentConfig desk_preset() {
  ExperimentConfig c;
  c.physical.apus_per_side = 1;
  c.physical.grid_points = 100;
  c.physical.subcarriers = 16;
  c.physical.targets = 4;
  c.sweep.devices = {2, 4, 8};
  c.sweep.antennas = {4};
  c.sweep.roles = {{2, 2}};
  c.run.trials = 100;
  return c;
}

ExperimentConfig paper_preset() {
  ExperimentConfig c;
  c.physical.apus_per_side = 2;
  c.physical.grid_points = 400;
  c.physical.subcarriers = 64;
  c.physical.targets = 10;
  c.sweep.devices = {4, 8, 12, 16, 20, 24};
  c.sweep.antennas = {4};
  c.sweep.roles = {{2, 6}, {4, 4}, {6, 2}};
  c.run.trials = 1000;
  return c;
}

ExperimentConfig preset_by_name(const std::string& name) {
  if (name == "desk") return desk_preset();
  if (name == "paper") return paper_preset();
  throw std::invalid_argument("unknown preset '" + name + "' (expected desk or paper)");
}

json to_json(const ExperimentConfig& c) {
  const PhysicalConfig& p = c.physical;
  json roles = json::array();
  for (const RoleSplit& r : c.sweep.roles) roles.push_back({{"S", r.sensing}, {"C", r.comm}});
  return json{
      {"schema_version", kConfigSchemaVersion},
      {"physical",
       {{"carrier_hz", p.carrier_hz},
        {"subcarriers", p.subcarriers},
        {"subcarrier_spacing_hz", p.subcarrier_spacing_hz},
        {"element_spacing", p.element_spacing},
        {"perimeter_m", p.perimeter_m},
        {"apus_per_side", p.apus_per_side},
        {"grid_points", p.grid_points},
        {"grid_spacing_m", p.grid_spacing_m ? json(*p.grid_spacing_m) : json("auto")},
        {"targets", p.targets},
        {"power_budget_w", p.power_budget_w},
        {"noise_variance", p.noise_variance},
        {"snr_convention", std::string(to_string(p.snr_convention))},
        {"symbols", std::string(to_string(p.symbols))},
        {"allocation", std::string(to_string(p.allocation))},
        {"stack_all_subcarriers", p.stack_all_subcarriers}}},
      {"sweep",
       {{"devices", c.sweep.devices}, {"antennas", c.sweep.antennas}, {"roles", roles}}},
      {"solver",
       {{"alpha", c.solver.alpha},
        {"beta", c.solver.beta},
        {"iterations", c.solver.iterations},
        {"primal_tol", c.solver.primal_tol},
        {"dual_tol", c.solver.dual_tol},
        {"dual_averaging", std::string(to_string(c.solver.dual_averaging))}}},
      {"fusion",
       {{"strategy", std::string(to_string(c.fusion.strategy))},
        {"softmax_temperature", c.fusion.softmax_temperature}}},
      {"run",
       {{"trials", c.run.trials},
        {"seed", c.run.seed},
        {"workers", c.run.workers},
        {"output_dir", c.run.output_dir},
        {"fixed_scene", c.run.fixed_scene},
        {"record_wall_time", c.run.record_wall_time},
        {"dump_scenes", c.run.dump_scenes},
        {"dump_problems", c.run.dump_problems},
        {"trace_residuals", c.run.trace_residuals}}},
  };
}

namespace {

void require_object(const json& j, const std::string& where,
                    std::initializer_list<const char*> allowed) {
  if (!j.is_object()) throw std::invalid_argument(where + " must be an object");
  std::set<std::string> keys(allowed.begin(), allowed.end());
  for (const auto& [key, value] : j.items()) {
    if (!keys.count(key)) {
      throw std::invalid_argument("unknown config key '" + where + "." + key + "'");
    }
  }
}

template <typename T>
void read(const json& section, const char* key, T& out, const std::string& where) {
  if (!section.contains(key)) return;
  try {
    out = section.at(key).get<T>();
  } catch (const json::exception& e) {
    throw std::invalid_argument("bad value for " + where + "." + key + ": " + e.what());
  }
}

template <typename Enum, typename Parse>
void read_enum(const json& section, const char* key, Enum& out, Parse parse,
               const std::string& where) {
  std::string name;
  bool present = section.contains(key);
  read(section, key, name, where);
  if (present) out = parse(name);
}

}  // namespace

ExperimentConfig config_from_json(const json& j, ExperimentConfig c) {
  require_object(j, "config", {"schema_version", "physical", "sweep", "solver", "fusion", "run"});
  if (!j.contains("schema_version")) throw std::invalid_argument("config lacks schema_version");
  if (j.at("schema_version") != kConfigSchemaVersion) {
    throw std::invalid_argument("unsupported schema_version " + j.at("schema_version").dump());
  }

  if (j.contains("physical")) {
    const json& s = j.at("physical");
    const std::string w = "physical";
    require_object(s, w, {"carrier_hz", "subcarriers", "subcarrier_spacing_hz", "element_spacing",
                          "perimeter_m", "apus_per_side", "grid_points", "grid_spacing_m",
                          "targets", "power_budget_w", "noise_variance", "snr_convention",
                          "symbols", "allocation", "stack_all_subcarriers"});
    PhysicalConfig& p = c.physical;
    read(s, "carrier_hz", p.carrier_hz, w);
    read(s, "subcarriers", p.subcarriers, w);
    read(s, "subcarrier_spacing_hz", p.subcarrier_spacing_hz, w);
    read(s, "element_spacing", p.element_spacing, w);
    read(s, "perimeter_m", p.perimeter_m, w);
    read(s, "apus_per_side", p.apus_per_side, w);
    read(s, "grid_points", p.grid_points, w);
    if (s.contains("grid_spacing_m")) {
      const json& v = s.at("grid_spacing_m");
      if (v.is_string() && v.get<std::string>() == "auto") {
        p.grid_spacing_m.reset();
      } else if (v.is_number()) {
        p.grid_spacing_m = v.get<double>();
      } else {
        throw std::invalid_argument("physical.grid_spacing_m must be a number or \"auto\"");
      }
    }
    read(s, "targets", p.targets, w);
    read(s, "power_budget_w", p.power_budget_w, w);
    read(s, "noise_variance", p.noise_variance, w);
    read_enum(s, "snr_convention", p.snr_convention, parse_snr_convention, w);
    read_enum(s, "symbols", p.symbols, parse_symbol_mode, w);
    read_enum(s, "allocation", p.allocation, parse_allocation_mode, w);
    read(s, "stack_all_subcarriers", p.stack_all_subcarriers, w);
  }

  if (j.contains("sweep")) {
    const json& s = j.at("sweep");
    require_object(s, "sweep", {"devices", "antennas", "roles"});
    read(s, "devices", c.sweep.devices, "sweep");
    read(s, "antennas", c.sweep.antennas, "sweep");
    if (s.contains("roles")) {
      const json& roles = s.at("roles");
      if (!roles.is_array()) throw std::invalid_argument("sweep.roles must be an array");
      c.sweep.roles.clear();
      for (const json& r : roles) {
        require_object(r, "sweep.roles[]", {"S", "C"});
        if (!r.contains("S") || !r.contains("C")) {
          throw std::invalid_argument("sweep.roles entries need S and C");
        }
        RoleSplit split;
        read(r, "S", split.sensing, "sweep.roles[]");
        read(r, "C", split.comm, "sweep.roles[]");
        c.sweep.roles.push_back(split);
      }
    }
  }

  if (j.contains("solver")) {
    const json& s = j.at("solver");
    require_object(s, "solver", {"alpha", "beta", "iterations", "primal_tol", "dual_tol", "dual_averaging"});
    read(s, "alpha", c.solver.alpha, "solver");
    read(s, "beta", c.solver.beta, "solver");
    read(s, "iterations", c.solver.iterations, "solver");
    read(s, "primal_tol", c.solver.primal_tol, "solver");
    read(s, "dual_tol", c.solver.dual_tol, "solver");
    read_enum(s, "dual_averaging", c.solver.dual_averaging, parse_dual_averaging, "solver");
  }

  if (j.contains("fusion")) {
    const json& s = j.at("fusion");
    require_object(s, "fusion", {"strategy", "softmax_temperature"});
    read_enum(s, "strategy", c.fusion.strategy, parse_fusion_strategy, "fusion");
    read(s, "softmax_temperature", c.fusion.softmax_temperature, "fusion");
  }

  if (j.contains("run")) {
    const json& s = j.at("run");
    require_object(s, "run", {"trials", "seed", "workers", "output_dir", "fixed_scene",
                              "record_wall_time", "dump_scenes", "dump_problems",
                              "trace_residuals"});
    read(s, "trials", c.run.trials, "run");
    read(s, "seed", c.run.seed, "run");
    read(s, "workers", c.run.workers, "run");
    read(s, "output_dir", c.run.output_dir, "run");
    read(s, "fixed_scene", c.run.fixed_scene, "run");
    read(s, "record_wall_time", c.run.record_wall_time, "run");
    read(s, "dump_scenes", c.run.dump_scenes, "run");
    read(s, "dump_problems", c.run.dump_problems, "run");
    read(s, "trace_residuals", c.run.trace_residuals, "run");
  }
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path, ExperimentConfig base) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file " + path.string());
  json j;
  try {
    j = json::parse(in, nullptr, true, /*ignore_comments=*/true);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument("config " + path.string() + " is not valid JSON: " + e.what());
  }
  return config_from_json(j, std::move(base));
}

std::vector<SweepPoint> sweep_plan(const ExperimentConfig& config) {
  std::vector<SweepPoint> plan;
  for (const RoleSplit& r : config.sweep.roles) {
    for (std::size_t m : config.sweep.antennas) {
      for (std::size_t d : config.sweep.devices) {
        plan.push_back(SweepPoint{plan.size(), r, m, d});
      }
    }
  }
  return plan;
}

Scene deploy_scene(std::size_t grid_size, std::size_t targets, Engine& engine) {
  if (targets > grid_size) {
    throw std::invalid_argument("cannot place " + std::to_string(targets) +
                                " targets on " + std::to_string(grid_size) + " grid points");
  }
  std::vector<std::size_t> pool(grid_size);
  std::iota(pool.begin(), pool.end(), std::size_t{0});
  for (std::size_t l = 0; l < targets; ++l) {
    std::uniform_int_distribution<std::size_t> pick(l, grid_size - 1);
    std::swap(pool[l], pool[pick(engine)]);
  }
  Scene scene;
  scene.target_indices.assign(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(targets));
  std::sort(scene.target_indices.begin(), scene.target_indices.end());
  scene.reflectivities.assign(targets, cdouble(1.0, 0.0));
  return scene;
}

std::vector<Point2> deploy_devices(const ServiceArea& area, std::size_t count,
                                   Engine& engine) {
  // uniform_real_distribution yields [0, side); redraw the measure-zero edge.
  std::uniform_real_distribution<double> coord(0.0, area.side_length);
  std::vector<Point2> devices;
  devices.reserve(count);
  while (devices.size() < count) {
    Point2 p = area.origin + Point2(coord(engine), coord(engine));
    if (area.strictly_contains(p)) devices.push_back(p);
  }
  return devices;
}

double TrialRecord::mean_config_precision() const {
  if (config_precision.empty()) return 0.0;
  return std::accumulate(config_precision.begin(), config_precision.end(), 0.0) /
         static_cast<double>(config_precision.size());
}

namespace {

// Geometry and scene shared by all role configurations of one trial.
struct TrialContext {
  ServiceArea area;
  StripeLayout layout;
  OfdmaGridSpec ofdma;
  Grid grid;
  Scene scene;
  RecoverySetup setup;

  TrialContext(const ExperimentConfig& config, const SweepPoint& point, std::size_t trial)
      : area(ServiceArea::from_perimeter(config.physical.perimeter_m)),
        layout(build_perimeter_layout(area, config.physical.apus_per_side, point.antennas,
                                      config.physical.element_spacing,
                                      config.physical.carrier_hz)),
        ofdma{config.physical.subcarriers, config.physical.subcarrier_spacing_hz,
              config.physical.carrier_hz},
        grid(area, config.physical.grid_points,
             config.physical.grid_spacing_m.value_or(
                 Grid::default_spacing(area, config.physical.grid_points))) {
    const std::uint64_t seed = config.run.seed;
    const std::uint64_t trial_root = derive_stream(seed, {trial});
    Engine scene_engine = make_engine(config.run.fixed_scene
                                          ? derive_stream(seed, {stream_tag::kScene})
                                          : derive_stream(trial_root, {stream_tag::kScene}));
    scene = deploy_scene(grid.size(), config.physical.targets, scene_engine);

    // Device drops depend on (trial, D) only, so M and role sweeps share them.
    Engine device_engine =
        make_engine(derive_stream(trial_root, {stream_tag::kDevices, point.devices}));

    setup.layout = &layout;
    setup.ofdma = &ofdma;
    setup.grid = &grid;
    setup.scene = &scene;
    setup.devices = deploy_devices(area, point.devices, device_engine);
    setup.power_budget = config.physical.power_budget_w;
    setup.noise_variance = config.physical.noise_variance;
    setup.allocation = config.physical.allocation;
    setup.snr_convention = config.physical.snr_convention;
    setup.symbols = config.physical.symbols;
    setup.stack_all_subcarriers = config.physical.stack_all_subcarriers;
    setup.admm = config.solver;
    setup.fusion = config.fusion;
    setup.stream = derive_stream(trial_root, {point.id});
  }

  TrialContext(const TrialContext&) = delete;
  TrialContext& operator=(const TrialContext&) = delete;
};

double mean(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double standard_error(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(v.size() - 1) / static_cast<double>(v.size()));
}

std::string point_label(const SweepPoint& p) {
  std::ostringstream os;
  os << "sweep " << p.id << ": S=" << p.roles.sensing << " C=" << p.roles.comm
     << " M=" << p.antennas << " D=" << p.devices;
  return os.str();
}

}  // namespace

TrialRecord run_trial(const ExperimentConfig& config, const SweepPoint& point,
                      std::size_t trial, TrialArtifacts* artifacts) {
  const auto start = std::chrono::steady_clock::now();
  TrialContext ctx(config, point, trial);

  const auto assignments = enumerate_configurations(ctx.layout.apu_count(), point.roles.sensing);
  std::vector<ConfigurationEstimate> estimates;
  estimates.reserve(assignments.size());
  for (std::size_t n = 0; n < assignments.size(); ++n) {
    estimates.push_back(recover_configuration(ctx.setup, assignments[n], n));
  }

  TrialRecord record;
  record.sweep_id = point.id;
  record.trial = trial;
  record.point = point;
  for (const auto& e : estimates) {
    record.config_precision.push_back(precision(ctx.scene, e.global));
  }
  record.sum_rate_bps = estimates.front().sum_rate;

  CVector fused_image = CVector::Zero(static_cast<Eigen::Index>(ctx.grid.size()));
  try {
    fused_image = fuse(estimates, config.fusion).image;
    record.fused_precision = precision(ctx.scene, fused_image);
  } catch (const std::runtime_error&) {
    record.recovered = false;
    record.fused_precision = 0.0;
  }

  if (config.run.record_wall_time) {
    record.wall_ms = std::chrono::duration<double, std::milli>(
                         std::chrono::steady_clock::now() - start)
                         .count();
  }
  if (artifacts != nullptr) {
    artifacts->scene = ctx.scene;
    artifacts->fused_image = std::move(fused_image);
    artifacts->residual_traces.clear();
    for (auto& e : estimates) artifacts->residual_traces.push_back(std::move(e.primal_trace));
  }
  return record;
}

SweepAggregate aggregate(const SweepPoint& point, const std::vector<TrialRecord>& records) {
  std::vector<double> fused, config_precision, rate, wall;
  for (const TrialRecord& r : records) {
    if (r.sweep_id != point.id) continue;
    fused.push_back(r.fused_precision);
    config_precision.push_back(r.mean_config_precision());
    rate.push_back(r.sum_rate_bps);
    wall.push_back(r.wall_ms);
  }
  SweepAggregate a;
  a.point = point;
  a.trials = fused.size();
  if (fused.empty()) return a;
  a.fused_precision_mean = mean(fused);
  a.fused_precision_se = standard_error(fused);
  a.config_precision_mean = mean(config_precision);
  a.sum_rate_mean = mean(rate);
  a.sum_rate_se = standard_error(rate);
  a.wall_ms_mean = mean(wall);
  return a;
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_results_csv(std::ostream& out, const std::vector<TrialRecord>& records,
                       const std::vector<SweepAggregate>& aggregates) {
  out << kResultsHeader << '\n';
  auto row = [&out](std::size_t sweep, const std::string& trial, const SweepPoint& p,
                    double fused, double cfg, double rate, double wall) {
    out << sweep << ',' << trial << ',' << p.roles.sensing << ',' << p.roles.comm << ','
        << p.antennas << ',' << p.devices << ',' << format_double(fused) << ','
        << format_double(cfg) << ',' << format_double(rate) << ',' << format_double(wall)
        << '\n';
  };
  for (const SweepAggregate& a : aggregates) {
    for (const TrialRecord& r : records) {
      if (r.sweep_id != a.point.id) continue;
      row(r.sweep_id, std::to_string(r.trial), r.point, r.fused_precision,
          r.mean_config_precision(), r.sum_rate_bps, r.wall_ms);
    }
    row(a.point.id, "-1", a.point, a.fused_precision_mean, a.config_precision_mean,
        a.sum_rate_mean, a.wall_ms_mean);
  }
}

void print_plan(std::ostream& out, const ExperimentConfig& config) {
  const auto plan = sweep_plan(config);
  std::size_t units = 0;
  out << "sweep plan (" << plan.size() << " points, " << config.run.trials
      << " trials each, seed " << config.run.seed << ", " << config.run.workers
      << " workers)\n";
  for (const SweepPoint& p : plan) {
    const std::size_t n = binomial(config.apu_count(), p.roles.sensing);
    out << "  " << point_label(p) << "  configurations=" << n << '\n';
    units += n * config.run.trials;
  }
  out << "total consensus solves: " << units << '\n';
}

namespace {

std::filesystem::path write_scene_dump(const std::filesystem::path& dir,
                                       const ExperimentConfig& config,
                                       const SweepPoint& point, std::size_t trial,
                                       const TrialArtifacts& art, double spacing) {
  json magnitudes = json::array();
  const double peak = art.fused_image.size() ? art.fused_image.cwiseAbs().maxCoeff() : 0.0;
  for (Eigen::Index i = 0; i < art.fused_image.size(); ++i) {
    magnitudes.push_back(peak > 0.0 ? std::abs(art.fused_image(i)) / peak : 0.0);
  }
  json doc{{"I", config.physical.grid_points},
           {"delta", spacing},
           {"coords_policy", "centred lattice, index i -> (floor(i/n) - 1, i mod n + 1) * delta + offset"},
           {"sweep_id", point.id},
           {"trial", trial},
           {"magnitudes", magnitudes},
           {"truth_indices", art.scene.target_indices}};
  const auto path = dir / ("scene_" + std::to_string(point.id) + "_" + std::to_string(trial) + ".json");
  std::ofstream out(path);
  out << doc.dump(1) << '\n';
  if (!out) throw std::runtime_error("failed writing " + path.string());
  return path;
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& config) {
  config.validate();
  const std::filesystem::path dir(config.run.output_dir);
  std::filesystem::create_directories(dir);

  const auto plan = sweep_plan(config);
  const std::size_t trials = config.run.trials;
  const std::size_t units = plan.size() * trials;
  const bool keep_artifacts = config.run.dump_scenes || config.run.trace_residuals;

  ExperimentResult result;
  result.records.resize(units);
  std::vector<TrialArtifacts> artifacts(keep_artifacts ? units : 0);

  const auto start = std::chrono::steady_clock::now();
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (;;) {
      const std::size_t u = next.fetch_add(1);
      if (u >= units) return;
      try {
        result.records[u] = run_trial(config, plan[u / trials], u % trials,
                                      keep_artifacts ? &artifacts[u] : nullptr);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next.store(units);
        return;
      }
    }
  };
  const std::size_t n_workers = std::min(config.run.workers, std::max<std::size_t>(units, 1));
  std::vector<std::thread> pool;
  for (std::size_t w = 1; w < n_workers; ++w) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
  const double elapsed_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  for (const SweepPoint& p : plan) result.aggregates.push_back(aggregate(p, result.records));

  auto open = [&](const std::string& name) {
    result.files.push_back(dir / name);
    std::ofstream out(result.files.back(), std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + result.files.back().string());
    return out;
  };

  {
    auto out = open("results.csv");
    write_results_csv(out, result.records, result.aggregates);
  }
  {
    auto out = open("summary.csv");
    out << "sweep_id,S,C,M,D,trials,fused_precision_mean,fused_precision_se,"
           "mean_config_precision,sum_rate_bps_mean,sum_rate_bps_se\n";
    for (const SweepAggregate& a : result.aggregates) {
      out << a.point.id << ',' << a.point.roles.sensing << ',' << a.point.roles.comm << ','
          << a.point.antennas << ',' << a.point.devices << ',' << a.trials << ','
          << format_double(a.fused_precision_mean) << ',' << format_double(a.fused_precision_se)
          << ',' << format_double(a.config_precision_mean) << ','
          << format_double(a.sum_rate_mean) << ',' << format_double(a.sum_rate_se) << '\n';
    }
  }
  {
    auto out = open("config.resolved.json");
    out << to_json(config).dump(2) << '\n';
  }

  const ServiceArea area = ServiceArea::from_perimeter(config.physical.perimeter_m);
  const double spacing = config.physical.grid_spacing_m.value_or(
      Grid::default_spacing(area, config.physical.grid_points));

  {
    auto log = open("diagnostics.log");
    log << "units " << units << " workers " << n_workers << " elapsed_s "
        << format_double(elapsed_s) << '\n';
    log << "grid spacing " << format_double(spacing) << " m\n";
    for (const SweepAggregate& a : result.aggregates) {
      std::size_t lost = 0;
      for (const TrialRecord& r : result.records) {
        if (r.sweep_id == a.point.id && !r.recovered) ++lost;
      }
      log << point_label(a.point) << " fused_precision " << format_double(a.fused_precision_mean)
          << " +/- " << format_double(a.fused_precision_se) << " sum_rate "
          << format_double(a.sum_rate_mean) << " +/- " << format_double(a.sum_rate_se)
          << " unrecovered " << lost << '\n';
    }
    if (config.run.trace_residuals) {
      for (std::size_t u = 0; u < units; ++u) {
        for (std::size_t n = 0; n < artifacts[u].residual_traces.size(); ++n) {
          log << "trace sweep=" << u / trials << " trial=" << u % trials << " config=" << n << ':';
          for (double r : artifacts[u].residual_traces[n]) log << ' ' << format_double(r);
          log << '\n';
        }
      }
    }
  }

  if (config.run.dump_scenes) {
    for (std::size_t u = 0; u < units; ++u) {
      result.files.push_back(
          write_scene_dump(dir, config, plan[u / trials], u % trials, artifacts[u], spacing));
    }
  }

  if (config.run.dump_problems) {
    // First trial, first configuration of every sweep point.
    for (const SweepPoint& p : plan) {
      TrialContext ctx(config, p, 0);
      const auto assignments = enumerate_configurations(ctx.layout.apu_count(), p.roles.sensing);
      const auto problems = build_configuration_problems(ctx.setup, assignments.front(), 0);
      for (const SensingProblem& prob : problems) {
        const auto path = dir / ("problem_" + std::to_string(p.id) + "_0_0_" +
                                 std::to_string(prob.apu_index) + ".bin");
        std::ofstream out(path, std::ios::binary);
        write_problem_dump(prob, out);
        result.files.push_back(path);
      }
    }
  }
  return result;
}

}  // namespace isac
