#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "isac/fusion.hpp"

namespace isac {

inline constexpr int kConfigSchemaVersion = 1;

struct PhysicalConfig {
  double carrier_hz = 5.955e9;
  std::size_t subcarriers = 64;
  double subcarrier_spacing_hz = 312.5e3;
  double element_spacing = 0.5;
  double perimeter_m = 240.0;
  std::size_t apus_per_side = 2;
  std::size_t grid_points = 400;
  std::optional<double> grid_spacing_m;  // empty: side / (sqrt(I) + 1)
  std::size_t targets = 10;
  double power_budget_w = 1.0;
  double noise_variance = 1e-6;
  SnrConvention snr_convention = SnrConvention::kAsPrinted;
  SymbolMode symbols = SymbolMode::kUnit;
  AllocationMode allocation = AllocationMode::kEvenSpread;
  bool stack_all_subcarriers = false;
};

struct RoleSplit {
  std::size_t sensing = 0;
  std::size_t comm = 0;
};

struct SweepConfig {
  std::vector<std::size_t> devices{12};
  std::vector<std::size_t> antennas{4};
  std::vector<RoleSplit> roles{{4, 4}};
};

struct RunConfig {
  std::size_t trials = 1000;
  std::uint64_t seed = 1;
  std::size_t workers = 1;
  std::string output_dir = "out";
  bool fixed_scene = false;
  bool record_wall_time = false;
  bool dump_scenes = false;
  bool dump_problems = false;
  bool trace_residuals = false;
};

struct ExperimentConfig {
  PhysicalConfig physical;
  SweepConfig sweep;
  AdmmParams solver;
  FusionOptions fusion;
  RunConfig run;

  void validate() const;
  [[nodiscard]] std::size_t apu_count() const { return 4 * physical.apus_per_side; }
};

/// 4 APUs, I=100, K=16, D in {2,4,8}, L=4, S=C=2, 100 trials.
ExperimentConfig desk_preset();
/// 8 APUs, I=400, K=64, L=10, 1000 trials; hours of CPU time.
ExperimentConfig paper_preset();
ExperimentConfig preset_by_name(const std::string& name);

nlohmann::json to_json(const ExperimentConfig& config);
/// Applies the keys present in `j` on top of `base`. Unknown keys, a
/// missing or unsupported `schema_version`, and ill-typed values throw.
ExperimentConfig config_from_json(const nlohmann::json& j,
                                  ExperimentConfig base = ExperimentConfig{});
ExperimentConfig load_config(const std::filesystem::path& path,
                             ExperimentConfig base = ExperimentConfig{});

struct SweepPoint {
  std::size_t id = 0;
  RoleSplit roles;
  std::size_t antennas = 0;
  std::size_t devices = 0;
};

/// Cartesian product roles x antennas x devices, devices varying fastest.
std::vector<SweepPoint> sweep_plan(const ExperimentConfig& config);

/// L distinct grid indices drawn uniformly without replacement, z_l = 1.
Scene deploy_scene(std::size_t grid_size, std::size_t targets, Engine& engine);

/// D i.i.d. uniform positions strictly inside the area.
std::vector<Point2> deploy_devices(const ServiceArea& area, std::size_t count,
                                   Engine& engine);

struct TrialRecord {
  std::size_t sweep_id = 0;
  std::size_t trial = 0;
  SweepPoint point;
  std::vector<double> config_precision;
  double fused_precision = 0.0;
  double sum_rate_bps = 0.0;
  double wall_ms = 0.0;
  bool recovered = true;  // false when every configuration returned zero

  [[nodiscard]] double mean_config_precision() const;
};

struct TrialArtifacts {
  Scene scene;
  CVector fused_image;
  std::vector<std::vector<double>> residual_traces;  // per configuration
};

/// Executes one (sweep point, trial) unit. Depends only on its inputs.
TrialRecord run_trial(const ExperimentConfig& config, const SweepPoint& point,
                      std::size_t trial, TrialArtifacts* artifacts = nullptr);

struct SweepAggregate {
  SweepPoint point;
  std::size_t trials = 0;
  double fused_precision_mean = 0.0;
  double fused_precision_se = 0.0;
  double config_precision_mean = 0.0;
  double sum_rate_mean = 0.0;
  double sum_rate_se = 0.0;
  double wall_ms_mean = 0.0;
};

SweepAggregate aggregate(const SweepPoint& point,
                         const std::vector<TrialRecord>& records);

/// Formats a double with 17 significant digits.
std::string format_double(double v);

inline constexpr const char* kResultsHeader =
    "sweep_id,trial,S,C,M,D,fused_precision,mean_config_precision,sum_rate_bps,wall_ms";

void write_results_csv(std::ostream& out, const std::vector<TrialRecord>& records,
                       const std::vector<SweepAggregate>& aggregates);

struct ExperimentResult {
  std::vector<TrialRecord> records;  // sweep-major, trial-minor
  std::vector<SweepAggregate> aggregates;
  std::vector<std::filesystem::path> files;
};

/// Runs every sweep point for `run.trials` trials on `run.workers` threads
/// and writes results.csv, summary.csv, config.resolved.json and
/// diagnostics.log (plus optional dumps) into `run.output_dir`.
ExperimentResult run_experiment(const ExperimentConfig& config);

/// Human-readable sweep plan used by --dry-run.
void print_plan(std::ostream& out, const ExperimentConfig& config);

}  // namespace isac
