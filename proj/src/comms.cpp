#include "isac/comms.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace isac {

AllocationMode parse_allocation_mode(std::string_view name) {
  if (name == "even-spread") return AllocationMode::kEvenSpread;
  if (name == "random") return AllocationMode::kRandom;
  throw std::invalid_argument("unknown subcarrier allocation mode '" +
                              std::string(name) + "'");
}

SnrConvention parse_snr_convention(std::string_view name) {
  if (name == "as-printed") return SnrConvention::kAsPrinted;
  if (name == "matched-filter") return SnrConvention::kMatchedFilter;
  throw std::invalid_argument("unknown snr convention '" + std::string(name) + "'");
}

std::string_view to_string(AllocationMode mode) {
  return mode == AllocationMode::kEvenSpread ? "even-spread" : "random";
}

std::string_view to_string(SnrConvention convention) {
  return convention == SnrConvention::kAsPrinted ? "as-printed" : "matched-filter";
}

Allocation allocate(std::vector<Point2> devices, std::size_t subcarrier_count,
                    double budget, std::size_t comm_count, AllocationMode mode,
                    Engine* engine) {
  const std::size_t d = devices.size();
  if (d > subcarrier_count) {
    throw std::invalid_argument("more devices (" + std::to_string(d) +
                                ") than subcarriers (" +
                                std::to_string(subcarrier_count) + ")");
  }
  if (comm_count < 1) throw std::invalid_argument("need at least one communication APU");
  if (!(budget >= 0.0)) throw std::invalid_argument("power budget must be >= 0");

  Allocation alloc;
  alloc.device_positions = std::move(devices);
  alloc.subcarriers.resize(d);

  if (mode == AllocationMode::kEvenSpread) {
    // ceil(j K / D) for j = 0..D-1; strictly increasing because K >= D.
    for (std::size_t j = 0; j < d; ++j) {
      alloc.subcarriers[j] = (j * subcarrier_count + d - 1) / d;
    }
  } else {
    if (engine == nullptr) throw std::invalid_argument("random allocation needs an engine");
    std::vector<std::size_t> all(subcarrier_count);
    std::iota(all.begin(), all.end(), std::size_t{0});
    // Partial Fisher-Yates keeps the draw count independent of K.
    for (std::size_t j = 0; j < d; ++j) {
      std::uniform_int_distribution<std::size_t> pick(j, subcarrier_count - 1);
      std::swap(all[j], all[pick(*engine)]);
    }
    std::copy_n(all.begin(), d, alloc.subcarriers.begin());
  }

  const double share = d == 0 ? 0.0 : budget / static_cast<double>(comm_count * d);
  alloc.power = Eigen::MatrixXd::Constant(static_cast<Eigen::Index>(comm_count),
                                          static_cast<Eigen::Index>(d), share);
  return alloc;
}

PrecoderSet::PrecoderSet(std::size_t comm_count, std::size_t device_count,
                         std::size_t antennas)
    : comm_count_(comm_count),
      device_count_(device_count),
      vectors_(comm_count * device_count,
               CVector::Zero(static_cast<Eigen::Index>(antennas))) {}

const CVector& PrecoderSet::at(std::size_t comm, std::size_t device) const {
  if (comm >= comm_count_ || device >= device_count_) {
    throw std::out_of_range("precoder index out of range");
  }
  return vectors_[comm * device_count_ + device];
}

CVector& PrecoderSet::at(std::size_t comm, std::size_t device) {
  return const_cast<CVector&>(std::as_const(*this).at(comm, device));
}

PrecoderSet mrt_precoders(const StripeLayout& layout, const OfdmaGridSpec& ofdma,
                          const RoleAssignment& roles, const Allocation& alloc) {
  const std::size_t d = alloc.device_count();
  if (static_cast<std::size_t>(alloc.power.rows()) != roles.comm_count() ||
      static_cast<std::size_t>(alloc.power.cols()) != d) {
    throw std::invalid_argument("allocation does not match the role assignment");
  }
  PrecoderSet set(roles.comm_count(), d, layout.antennas_per_apu);
  for (std::size_t j = 0; j < d; ++j) {
    const double freq = ofdma.frequency(alloc.subcarriers[j]);
    for (std::size_t c = 0; c < roles.comm_count(); ++c) {
      const ApuDescriptor& apu = layout.apus.at(roles.comm_set[c]);
      const CVector a = apu_steering(
          layout, freq, sine_from_broadside(apu, alloc.device_positions[j]));
      const double p = alloc.power(static_cast<Eigen::Index>(c),
                                   static_cast<Eigen::Index>(j));
      set.at(c, j) = (std::sqrt(p) / a.norm()) * a;
    }
  }
  return set;
}

std::vector<double> snr_per_device(const StripeLayout& layout,
                                   const OfdmaGridSpec& ofdma,
                                   const RoleAssignment& roles,
                                   const Allocation& alloc, double noise_variance,
                                   SnrConvention convention) {
  if (!(noise_variance > 0.0)) throw std::invalid_argument("noise variance must be positive");
  const double m = static_cast<double>(layout.antennas_per_apu);
  const PrecoderSet precoders = convention == SnrConvention::kMatchedFilter
                                    ? mrt_precoders(layout, ofdma, roles, alloc)
                                    : PrecoderSet{};

  std::vector<double> snr(alloc.device_count(), 0.0);
  for (std::size_t j = 0; j < alloc.device_count(); ++j) {
    const double freq = ofdma.frequency(alloc.subcarriers[j]);
    double acc = 0.0;
    for (std::size_t c = 0; c < roles.comm_count(); ++c) {
      const ApuDescriptor& apu = layout.apus.at(roles.comm_set[c]);
      const CVector a = apu_steering(
          layout, freq, sine_from_broadside(apu, alloc.device_positions[j]));
      if (convention == SnrConvention::kAsPrinted) {
        acc += alloc.power(static_cast<Eigen::Index>(c),
                           static_cast<Eigen::Index>(j)) *
               a.squaredNorm() / m;
      } else {
        acc += std::norm(a.dot(precoders.at(c, j)));
      }
    }
    snr[j] = acc / noise_variance;
  }
  return snr;
}

double sum_rate(const std::vector<double>& snr, double subcarrier_spacing) {
  double bits = 0.0;
  for (double g : snr) bits += std::log2(1.0 + g);
  return subcarrier_spacing * bits;
}

}  // namespace isac
