#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "isac/geometry.hpp"

namespace isac {

using cdouble = std::complex<double>;
using CVector = Eigen::VectorXcd;
using CMatrix = Eigen::MatrixXcd;

/// Subcarrier comb centred on the carrier.
struct OfdmaGridSpec {
  std::size_t subcarrier_count = 64;
  double subcarrier_spacing = 312.5e3;
  double carrier_freq = 5.955e9;

  /// Frequency of the 0-based subcarrier k: f_c + (k - (K-1)/2) * spacing.
  [[nodiscard]] double frequency(std::size_t k) const;
  void validate() const;
};

/// Ground-truth scatterers, each sitting on a grid point (0-based index).
struct Scene {
  std::vector<std::size_t> target_indices;
  std::vector<cdouble> reflectivities;

  [[nodiscard]] std::size_t size() const { return target_indices.size(); }
  [[nodiscard]] bool empty() const { return target_indices.empty(); }
  /// Throws unless indices are distinct and below `grid_size` and every
  /// reflectivity is nonzero.
  void validate(std::size_t grid_size) const;
  /// Reflectivity image over the grid: z_l at target indices, zero elsewhere.
  [[nodiscard]] CVector truth_image(std::size_t grid_size) const;
};

struct NoiseSpec {
  double variance = 1e-6;
  std::uint64_t stream = 0;
  std::uint64_t counter = 0;
};

/// ULA response exp(j 2 pi (f_k/f_c) spacing m sin_phi), m = 0..M-1.
CVector steering_vector(double freq, double carrier_freq, double element_spacing,
                        std::size_t antennas, double sin_phi);

/// Steering vector of one APU of `layout` towards direction `sin_phi` at `freq`.
CVector apu_steering(const StripeLayout& layout, double freq, double sin_phi);

/// Direct-link channel to a device: stacked steering vectors of the
/// communication APUs in ascending index order (length C*M).
CVector device_channel(const StripeLayout& layout, const RoleAssignment& roles,
                       const Point2& device, double freq);

/// Reflection channel from communication APU `comm` to sensing APU `sense`
/// produced by the scene targets at frequency `freq` (M x M).
CMatrix sensing_channel_block(const StripeLayout& layout, const Grid& grid,
                              const Scene& scene, const ApuDescriptor& sense,
                              const ApuDescriptor& comm, double freq);

/// Same block for scatterers at arbitrary positions.
CMatrix sensing_channel_block(const StripeLayout& layout,
                              const std::vector<Point2>& positions,
                              const std::vector<cdouble>& reflectivities,
                              const ApuDescriptor& sense,
                              const ApuDescriptor& comm, double freq);

/// Circularly-symmetric complex Gaussian samples with per-entry variance
/// `spec.variance`. Deterministic in (stream, counter).
CVector draw_noise(const NoiseSpec& spec, std::size_t length);

}  // namespace isac
