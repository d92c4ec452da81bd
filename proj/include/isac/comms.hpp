#pragma once

#include <cstddef>
#include <string_view>
#include <vector>

#include "isac/channel.hpp"
#include "isac/random.hpp"

namespace isac {

enum class AllocationMode { kEvenSpread, kRandom };
enum class SnrConvention { kAsPrinted, kMatchedFilter };

AllocationMode parse_allocation_mode(std::string_view name);
SnrConvention parse_snr_convention(std::string_view name);
std::string_view to_string(AllocationMode mode);
std::string_view to_string(SnrConvention convention);

/// OFDMA resource map: device j is served on subcarrier `subcarriers[j]`
/// (0-based) by every communication APU with power `power(c, j)`.
struct Allocation {
  std::vector<Point2> device_positions;
  std::vector<std::size_t> subcarriers;
  Eigen::MatrixXd power;  // comm APU (position in comm_set) x device

  [[nodiscard]] std::size_t device_count() const { return subcarriers.size(); }
  [[nodiscard]] double total_power() const { return power.sum(); }
};

/// Assigns each device a distinct subcarrier and splits `budget` evenly
/// over every active (comm APU, subcarrier) pair. `engine` is only used in
/// random mode.
Allocation allocate(std::vector<Point2> devices, std::size_t subcarrier_count,
                    double budget, std::size_t comm_count, AllocationMode mode,
                    Engine* engine = nullptr);

/// MRT precoders: for every device j and comm APU c (position in comm_set),
/// u_{c,j} = sqrt(p_{c,j}) a(phi_{c,j}) / ||a(phi_{c,j})||.
class PrecoderSet {
 public:
  PrecoderSet() = default;
  PrecoderSet(std::size_t comm_count, std::size_t device_count,
              std::size_t antennas);

  [[nodiscard]] const CVector& at(std::size_t comm, std::size_t device) const;
  CVector& at(std::size_t comm, std::size_t device);

  [[nodiscard]] std::size_t comm_count() const { return comm_count_; }
  [[nodiscard]] std::size_t device_count() const { return device_count_; }

 private:
  std::size_t comm_count_ = 0;
  std::size_t device_count_ = 0;
  std::vector<CVector> vectors_;
};

PrecoderSet mrt_precoders(const StripeLayout& layout, const OfdmaGridSpec& ofdma,
                          const RoleAssignment& roles, const Allocation& alloc);

/// Per-device SNR, ordered like `alloc.subcarriers`.
///
/// kAsPrinted evaluates sum_c p_{c,k} ||a_k(phi_{c,u})||^2 / (M sigma^2),
/// which collapses to sum_c p_{c,k} / sigma^2. kMatchedFilter evaluates
/// sum_c |a_k(phi_{c,u})^H u_{c,k}|^2 / sigma^2 with the MRT precoders,
/// which is M times larger.
std::vector<double> snr_per_device(const StripeLayout& layout,
                                   const OfdmaGridSpec& ofdma,
                                   const RoleAssignment& roles,
                                   const Allocation& alloc, double noise_variance,
                                   SnrConvention convention);

/// Shannon sum rate spacing * sum_k log2(1 + snr_k) [bit/s].
double sum_rate(const std::vector<double>& snr, double subcarrier_spacing);

}  // namespace isac
