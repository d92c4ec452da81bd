#pragma once

#include <cstddef>
#include <cstdint>
#include <string_view>
#include <vector>

#include "isac/solver.hpp"

namespace isac {

/// Per-configuration weight before normalisation, with rho_n the primal
/// residual relative to the estimate norm, res_n / ||z_G^(n)||:
///   kInverseResidual     1 / (rho_n + eps)
///   kInverseRawResidual  1 / (res_n + eps)
///   kSoftmax             exp(-(res_n - min res) / temperature)
///   kUniform             1
enum class FusionStrategy { kInverseResidual, kInverseRawResidual, kSoftmax, kUniform };

FusionStrategy parse_fusion_strategy(std::string_view name);
std::string_view to_string(FusionStrategy strategy);

struct FusionOptions {
  FusionStrategy strategy = FusionStrategy::kInverseResidual;
  double softmax_temperature = 1.0;
  double epsilon = 1e-12;
};

struct ConfigurationEstimate {
  RoleAssignment assignment;
  CVector global;
  double primal_residual = 0.0;
  double sum_rate = 0.0;  // bit/s of the downlink in this configuration
  std::vector<double> primal_trace;
};

struct FusedScene {
  CVector image;
  std::vector<double> weights;  // one per estimate; zero for skipped ones
};

/// Weighted sum of the unit-norm estimates. Estimates with zero norm get
/// zero weight and the rest are renormalised to sum to one.
FusedScene fuse(const std::vector<ConfigurationEstimate>& estimates,
                const FusionOptions& options = {});

/// Fraction of true targets whose max-normalised magnitude in `estimate`
/// exceeds `threshold`. An all-zero estimate scores 0.
double precision(const Scene& truth, const CVector& estimate,
                 double threshold = 0.85);

enum class SymbolMode { kUnit, kQpsk };
SymbolMode parse_symbol_mode(std::string_view name);
std::string_view to_string(SymbolMode mode);

/// Inputs shared by every role configuration of one trial.
struct RecoverySetup {
  const StripeLayout* layout = nullptr;
  const OfdmaGridSpec* ofdma = nullptr;
  const Grid* grid = nullptr;
  const Scene* scene = nullptr;
  std::vector<Point2> devices;
  double power_budget = 1.0;
  double noise_variance = 1e-6;
  AllocationMode allocation = AllocationMode::kEvenSpread;
  SnrConvention snr_convention = SnrConvention::kAsPrinted;
  SymbolMode symbols = SymbolMode::kUnit;
  bool stack_all_subcarriers = false;
  AdmmParams admm;
  FusionOptions fusion;
  /// Root of the trial's random substreams (noise, symbols, allocation).
  std::uint64_t stream = 0;
};

struct ConfigurationRun {
  std::vector<ConfigurationEstimate> estimates;
  FusedScene fused;
};

/// Solves one consensus problem for a single role assignment.
ConfigurationEstimate recover_configuration(const RecoverySetup& setup,
                                            const RoleAssignment& roles,
                                            std::size_t configuration_index);

/// Runs every assignment with `sensing` sensing APUs and fuses the results.
ConfigurationRun run_all_configurations(const RecoverySetup& setup,
                                        std::size_t sensing);

/// Sensing problems of one assignment, exposed for diagnostics dumps.
std::vector<SensingProblem> build_configuration_problems(
    const RecoverySetup& setup, const RoleAssignment& roles,
    std::size_t configuration_index);

}  // namespace isac
