#include "isac/sensing.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <istream>
#include <numbers>
#include <ostream>
#include <stdexcept>

namespace isac {

namespace {

static_assert(std::endian::native == std::endian::little,
              "problem dumps assume a little-endian host");

constexpr char kDumpMagic[8] = {'I', 'S', 'A', 'C', 'P', 'H', 'I', '1'};

void check(const Transmission& tx) {
  if (!tx.layout || !tx.ofdma || !tx.roles || !tx.alloc || !tx.precoders) {
    throw std::invalid_argument("incomplete transmission description");
  }
  if (tx.symbols.size() != tx.alloc->device_count()) {
    throw std::invalid_argument("one data symbol per device required");
  }
}

// Device served on subcarrier k, or npos when the subcarrier is idle.
std::size_t device_on(const Allocation& alloc, std::size_t k) {
  const auto it = std::find(alloc.subcarriers.begin(), alloc.subcarriers.end(), k);
  return it == alloc.subcarriers.end()
             ? static_cast<std::size_t>(-1)
             : static_cast<std::size_t>(it - alloc.subcarriers.begin());
}

struct LinkGeometry {
  double sine = 0.0;
  double distance = 0.0;
};

LinkGeometry link(const ApuDescriptor& apu, const Point2& p) {
  return {sine_from_broadside(apu, p), (p - apu.reference_point).norm()};
}

template <typename T>
void put(std::ostream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw std::runtime_error("truncated problem dump");
  return v;
}

}  // namespace

std::vector<std::size_t> stacked_subcarriers(const Transmission& tx) {
  check(tx);
  std::vector<std::size_t> ks;
  if (tx.stack_all_subcarriers) {
    ks.resize(tx.ofdma->subcarrier_count);
    for (std::size_t k = 0; k < ks.size(); ++k) ks[k] = k;
  } else {
    ks = tx.alloc->subcarriers;
    std::sort(ks.begin(), ks.end());
  }
  return ks;
}

CVector sensing_matrix_column(const Transmission& tx, const ApuDescriptor& sense,
                              const Grid& grid, std::size_t device,
                              std::size_t grid_index) {
  check(tx);
  const StripeLayout& layout = *tx.layout;
  const Point2& p = grid.at(grid_index);
  const double freq = tx.ofdma->frequency(tx.alloc->subcarriers.at(device));

  cdouble gain = 0.0;
  for (std::size_t c = 0; c < tx.roles->comm_count(); ++c) {
    const ApuDescriptor& comm = layout.apus.at(tx.roles->comm_set[c]);
    const BistaticGeometry g = bistatic_geometry(comm, sense, p);
    const CVector a_tx = apu_steering(layout, freq, g.sin_tx);
    gain += std::polar(1.0, -2.0 * std::numbers::pi * freq * g.delay) *
            a_tx.dot(tx.precoders->at(c, device));
  }
  const double sin_rx = sine_from_broadside(sense, p);
  return (gain * tx.symbols[device]) * apu_steering(layout, freq, sin_rx);
}

CMatrix build_sensing_matrix(const Transmission& tx, const ApuDescriptor& sense,
                             const Grid& grid,
                             const std::vector<std::size_t>& subcarriers) {
  check(tx);
  const StripeLayout& layout = *tx.layout;
  const RoleAssignment& roles = *tx.roles;
  const auto m = static_cast<Eigen::Index>(layout.antennas_per_apu);
  const std::size_t n_points = grid.size();
  const std::size_t n_comm = roles.comm_count();

  // Frequency-independent geometry, computed once per (APU, grid point).
  std::vector<LinkGeometry> rx_links(n_points);
  std::vector<LinkGeometry> tx_links(n_comm * n_points);
  for (std::size_t i = 0; i < n_points; ++i) {
    rx_links[i] = link(sense, grid.at(i));
    for (std::size_t c = 0; c < n_comm; ++c) {
      tx_links[c * n_points + i] = link(layout.apus.at(roles.comm_set[c]), grid.at(i));
    }
  }

  CMatrix phi = CMatrix::Zero(m * static_cast<Eigen::Index>(subcarriers.size()),
                              static_cast<Eigen::Index>(n_points));
  for (std::size_t b = 0; b < subcarriers.size(); ++b) {
    const std::size_t device = device_on(*tx.alloc, subcarriers[b]);
    if (device == static_cast<std::size_t>(-1)) continue;  // idle: zero rows
    const double freq = tx.ofdma->frequency(subcarriers[b]);
    const cdouble symbol = tx.symbols[device];
    const Eigen::Index row = static_cast<Eigen::Index>(b) * m;

    for (std::size_t i = 0; i < n_points; ++i) {
      cdouble gain = 0.0;
      for (std::size_t c = 0; c < n_comm; ++c) {
        const LinkGeometry& lt = tx_links[c * n_points + i];
        const double delay = (lt.distance + rx_links[i].distance) / kSpeedOfLight;
        const CVector a_tx = apu_steering(layout, freq, lt.sine);
        gain += std::polar(1.0, -2.0 * std::numbers::pi * freq * delay) *
                a_tx.dot(tx.precoders->at(c, device));
      }
      phi.block(row, static_cast<Eigen::Index>(i), m, 1) =
          (gain * symbol) * apu_steering(layout, freq, rx_links[i].sine);
    }
  }
  return phi;
}

CVector synthesize_observation(const Transmission& tx, const ApuDescriptor& sense,
                               const Grid& grid, const Scene& scene,
                               const std::vector<std::size_t>& subcarriers,
                               const NoiseSpec& noise) {
  check(tx);
  const StripeLayout& layout = *tx.layout;
  const auto m = static_cast<Eigen::Index>(layout.antennas_per_apu);

  std::vector<Point2> positions;
  positions.reserve(scene.size());
  for (std::size_t idx : scene.target_indices) positions.push_back(grid.at(idx));

  CVector y = draw_noise(noise, static_cast<std::size_t>(m) * subcarriers.size());
  for (std::size_t b = 0; b < subcarriers.size(); ++b) {
    const std::size_t device = device_on(*tx.alloc, subcarriers[b]);
    if (device == static_cast<std::size_t>(-1) || scene.empty()) continue;
    const double freq = tx.ofdma->frequency(subcarriers[b]);
    CVector echo = CVector::Zero(m);
    for (std::size_t c = 0; c < tx.roles->comm_count(); ++c) {
      const ApuDescriptor& comm = layout.apus.at(tx.roles->comm_set[c]);
      echo += sensing_channel_block(layout, positions, scene.reflectivities,
                                    sense, comm, freq) *
              tx.precoders->at(c, device);
    }
    y.segment(static_cast<Eigen::Index>(b) * m, m) += tx.symbols[device] * echo;
  }
  return y;
}

SensingProblem build_problem(const Transmission& tx, std::size_t sense_apu,
                             const Grid& grid, const Scene& scene,
                             const NoiseSpec& noise) {
  check(tx);
  if (!tx.roles->is_sensing(sense_apu)) {
    throw std::invalid_argument("APU " + std::to_string(sense_apu) +
                                " is not in the sensing set");
  }
  const ApuDescriptor& sense = tx.layout->apus.at(sense_apu);
  SensingProblem problem;
  problem.apu_index = sense_apu;
  problem.subcarriers = stacked_subcarriers(tx);
  problem.phi = build_sensing_matrix(tx, sense, grid, problem.subcarriers);
  problem.y = synthesize_observation(tx, sense, grid, scene, problem.subcarriers, noise);
  return problem;
}

void write_problem_dump(const SensingProblem& problem, std::ostream& out) {
  out.write(kDumpMagic, sizeof(kDumpMagic));
  put<std::uint64_t>(out, problem.apu_index);
  put<std::uint64_t>(out, static_cast<std::uint64_t>(problem.phi.rows()));
  put<std::uint64_t>(out, static_cast<std::uint64_t>(problem.phi.cols()));
  for (Eigen::Index r = 0; r < problem.phi.rows(); ++r) {
    for (Eigen::Index c = 0; c < problem.phi.cols(); ++c) {
      put(out, problem.phi(r, c).real());
      put(out, problem.phi(r, c).imag());
    }
  }
  for (Eigen::Index r = 0; r < problem.y.size(); ++r) {
    put(out, problem.y(r).real());
    put(out, problem.y(r).imag());
  }
  if (!out) throw std::runtime_error("failed writing problem dump");
}

SensingProblem read_problem_dump(std::istream& in) {
  char magic[sizeof(kDumpMagic)];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kDumpMagic, sizeof(magic)) != 0) {
    throw std::runtime_error("not a sensing problem dump");
  }
  SensingProblem problem;
  problem.apu_index = get<std::uint64_t>(in);
  const auto rows = static_cast<Eigen::Index>(get<std::uint64_t>(in));
  const auto cols = static_cast<Eigen::Index>(get<std::uint64_t>(in));
  problem.phi.resize(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) {
      const double re = get<double>(in);
      problem.phi(r, c) = cdouble(re, get<double>(in));
    }
  }
  problem.y.resize(rows);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const double re = get<double>(in);
    problem.y(r) = cdouble(re, get<double>(in));
  }
  return problem;
}

}  // namespace isac
