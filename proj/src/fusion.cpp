#include "isac/fusion.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace isac {

FusionStrategy parse_fusion_strategy(std::string_view name) {
  if (name == "inverse-residual") return FusionStrategy::kInverseResidual;
  if (name == "inverse-raw-residual") return FusionStrategy::kInverseRawResidual;
  if (name == "softmax") return FusionStrategy::kSoftmax;
  if (name == "uniform") return FusionStrategy::kUniform;
  throw std::invalid_argument("unknown fusion strategy '" + std::string(name) + "'");
}

std::string_view to_string(FusionStrategy strategy) {
  switch (strategy) {
    case FusionStrategy::kInverseResidual: return "inverse-residual";
    case FusionStrategy::kInverseRawResidual: return "inverse-raw-residual";
    case FusionStrategy::kSoftmax: return "softmax";
    case FusionStrategy::kUniform: return "uniform";
  }
  return "?";
}

SymbolMode parse_symbol_mode(std::string_view name) {
  if (name == "unit") return SymbolMode::kUnit;
  if (name == "qpsk") return SymbolMode::kQpsk;
  throw std::invalid_argument("unknown symbol mode '" + std::string(name) + "'");
}

std::string_view to_string(SymbolMode mode) {
  return mode == SymbolMode::kUnit ? "unit" : "qpsk";
}

FusedScene fuse(const std::vector<ConfigurationEstimate>& estimates,
                const FusionOptions& options) {
  if (estimates.empty()) throw std::invalid_argument("nothing to fuse");

  std::vector<double> weights(estimates.size(), 0.0);
  double min_residual = INFINITY;
  for (const auto& e : estimates) {
    if (!std::isfinite(e.primal_residual) || e.primal_residual < 0.0) {
      throw std::invalid_argument("primal residual must be finite and >= 0");
    }
    if (e.global.norm() > 0.0) min_residual = std::min(min_residual, e.primal_residual);
  }
  if (!std::isfinite(min_residual)) {
    throw std::runtime_error("no information recovered: every estimate is zero");
  }

  double total = 0.0;
  for (std::size_t n = 0; n < estimates.size(); ++n) {
    if (!(estimates[n].global.norm() > 0.0)) continue;
    const double res = estimates[n].primal_residual;
    switch (options.strategy) {
      case FusionStrategy::kInverseResidual:
        weights[n] = 1.0 / (res / estimates[n].global.norm() + options.epsilon);
        break;
      case FusionStrategy::kInverseRawResidual:
        weights[n] = 1.0 / (res + options.epsilon);
        break;
      case FusionStrategy::kSoftmax:
        weights[n] = std::exp(-(res - min_residual) / options.softmax_temperature);
        break;
      case FusionStrategy::kUniform:
        weights[n] = 1.0;
        break;
    }
    total += weights[n];
  }

  FusedScene fused;
  fused.image = CVector::Zero(estimates.front().global.size());
  for (std::size_t n = 0; n < estimates.size(); ++n) {
    weights[n] /= total;
    if (weights[n] > 0.0) {
      fused.image += (weights[n] / estimates[n].global.norm()) * estimates[n].global;
    }
  }
  fused.weights = std::move(weights);
  return fused;
}

double precision(const Scene& truth, const CVector& estimate, double threshold) {
  if (truth.empty()) throw std::invalid_argument("precision needs at least one true target");
  const double peak = estimate.size() == 0 ? 0.0 : estimate.cwiseAbs().maxCoeff();
  if (!(peak > 0.0)) return 0.0;
  std::size_t hits = 0;
  for (std::size_t idx : truth.target_indices) {
    if (idx >= static_cast<std::size_t>(estimate.size())) {
      throw std::out_of_range("target index outside the estimate");
    }
    if (std::abs(estimate(static_cast<Eigen::Index>(idx))) / peak > threshold) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(truth.size());
}

namespace {

void check(const RecoverySetup& setup) {
  if (!setup.layout || !setup.ofdma || !setup.grid || !setup.scene) {
    throw std::invalid_argument("incomplete recovery setup");
  }
}

std::vector<cdouble> draw_symbols(const RecoverySetup& setup,
                                  std::size_t configuration_index,
                                  std::size_t count) {
  std::vector<cdouble> symbols(count, cdouble(1.0, 0.0));
  if (setup.symbols == SymbolMode::kUnit) return symbols;
  Engine engine = make_engine(
      derive_stream(setup.stream, {stream_tag::kSymbols, configuration_index}));
  std::uniform_int_distribution<int> quadrant(0, 3);
  for (auto& d : symbols) {
    d = std::polar(1.0, std::numbers::pi / 4.0 + std::numbers::pi / 2.0 * quadrant(engine));
  }
  return symbols;
}

Allocation make_allocation(const RecoverySetup& setup, std::size_t comm_count) {
  Engine engine = make_engine(derive_stream(setup.stream, {stream_tag::kAllocation}));
  return allocate(setup.devices, setup.ofdma->subcarrier_count, setup.power_budget,
                  comm_count, setup.allocation, &engine);
}

struct PreparedTransmission {
  Allocation alloc;
  PrecoderSet precoders;
  Transmission tx;
};

// Transmission holds pointers into the returned object; keep it in place.
void prepare(const RecoverySetup& setup, const RoleAssignment& roles,
             std::size_t configuration_index, PreparedTransmission& out) {
  out.alloc = make_allocation(setup, roles.comm_count());
  out.precoders = mrt_precoders(*setup.layout, *setup.ofdma, roles, out.alloc);
  out.tx.layout = setup.layout;
  out.tx.ofdma = setup.ofdma;
  out.tx.roles = &roles;
  out.tx.alloc = &out.alloc;
  out.tx.precoders = &out.precoders;
  out.tx.symbols = draw_symbols(setup, configuration_index, out.alloc.device_count());
  out.tx.stack_all_subcarriers = setup.stack_all_subcarriers;
}

}  // namespace

std::vector<SensingProblem> build_configuration_problems(
    const RecoverySetup& setup, const RoleAssignment& roles,
    std::size_t configuration_index) {
  check(setup);
  PreparedTransmission prepared;
  prepare(setup, roles, configuration_index, prepared);

  std::vector<SensingProblem> problems;
  problems.reserve(roles.sense_count());
  for (std::size_t s : roles.sense_set) {
    NoiseSpec noise;
    noise.variance = setup.noise_variance;
    noise.stream = derive_stream(setup.stream, {stream_tag::kNoise, configuration_index, s});
    problems.push_back(build_problem(prepared.tx, s, *setup.grid, *setup.scene, noise));
  }
  return problems;
}

ConfigurationEstimate recover_configuration(const RecoverySetup& setup,
                                            const RoleAssignment& roles,
                                            std::size_t configuration_index) {
  check(setup);
  const std::vector<SensingProblem> problems =
      build_configuration_problems(setup, roles, configuration_index);
  SolveReport report = solve(problems, setup.admm);

  ConfigurationEstimate estimate;
  estimate.assignment = roles;
  estimate.global = std::move(report.global);
  estimate.primal_residual = report.primal_residual;
  estimate.primal_trace = std::move(report.primal_trace);
  if (setup.noise_variance > 0.0) {
    const Allocation alloc = make_allocation(setup, roles.comm_count());
    estimate.sum_rate = sum_rate(
        snr_per_device(*setup.layout, *setup.ofdma, roles, alloc,
                       setup.noise_variance, setup.snr_convention),
        setup.ofdma->subcarrier_spacing);
  } else {
    estimate.sum_rate = INFINITY;
  }
  return estimate;
}

ConfigurationRun run_all_configurations(const RecoverySetup& setup,
                                        std::size_t sensing) {
  check(setup);
  const auto assignments = enumerate_configurations(setup.layout->apu_count(), sensing);
  ConfigurationRun run;
  run.estimates.reserve(assignments.size());
  for (std::size_t n = 0; n < assignments.size(); ++n) {
    run.estimates.push_back(recover_configuration(setup, assignments[n], n));
  }
  run.fused = fuse(run.estimates, setup.fusion);
  return run;
}

}  // namespace isac
