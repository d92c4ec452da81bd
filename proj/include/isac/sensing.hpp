#pragma once

#include <cstddef>
#include <iosfwd>
#include <vector>

#include "isac/channel.hpp"
#include "isac/comms.hpp"

namespace isac {

/// Everything one role assignment transmits on: the resource map, the MRT
/// precoders and the data symbol on each device's subcarrier.
struct Transmission {
  const StripeLayout* layout = nullptr;
  const OfdmaGridSpec* ofdma = nullptr;
  const RoleAssignment* roles = nullptr;
  const Allocation* alloc = nullptr;
  const PrecoderSet* precoders = nullptr;
  std::vector<cdouble> symbols;  // one per device, same order as alloc
  /// Stack every subcarrier of the comb instead of only the active ones.
  bool stack_all_subcarriers = false;
};

/// Stacked observation at one sensing APU: y = Phi z + w.
struct SensingProblem {
  std::size_t apu_index = 0;
  CMatrix phi;  // (rows = stacked subcarriers * M) x I
  CVector y;
  std::vector<std::size_t> subcarriers;  // row-block order, ascending

  [[nodiscard]] std::size_t grid_size() const {
    return static_cast<std::size_t>(phi.cols());
  }
};

/// Column `grid_index` (0-based) of the sensing matrix restricted to the
/// rows of device `device` (length M).
CVector sensing_matrix_column(const Transmission& tx, const ApuDescriptor& sense,
                              const Grid& grid, std::size_t device,
                              std::size_t grid_index);

/// Full sensing matrix for APU `sense`, rows in `subcarriers` block order.
CMatrix build_sensing_matrix(const Transmission& tx, const ApuDescriptor& sense,
                             const Grid& grid,
                             const std::vector<std::size_t>& subcarriers);

/// Rows of the stacked observation, ascending subcarrier order.
std::vector<std::size_t> stacked_subcarriers(const Transmission& tx);

/// Received signal at APU `sense` synthesised from the reflection channel of
/// the scene, plus noise drawn from `noise`.
CVector synthesize_observation(const Transmission& tx, const ApuDescriptor& sense,
                               const Grid& grid, const Scene& scene,
                               const std::vector<std::size_t>& subcarriers,
                               const NoiseSpec& noise);

SensingProblem build_problem(const Transmission& tx, std::size_t sense_apu,
                             const Grid& grid, const Scene& scene,
                             const NoiseSpec& noise);

// Binary dump layout (little-endian):
//   8 bytes  magic "ISACPHI1"
//   u64      apu index
//   u64      rows
//   u64      cols
//   rows*cols complex   Phi, row-major, each as (f64 re, f64 im)
//   rows      complex   y
void write_problem_dump(const SensingProblem& problem, std::ostream& out);
SensingProblem read_problem_dump(std::istream& in);

}  // namespace isac
