#include "isac/channel.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <unordered_set>

#include "isac/random.hpp"

namespace isac {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

cdouble delay_phase(double freq, double delay) {
  return std::polar(1.0, -kTwoPi * freq * delay);
}

}  // namespace

double OfdmaGridSpec::frequency(std::size_t k) const {
  const double centre = (static_cast<double>(subcarrier_count) - 1.0) / 2.0;
  return carrier_freq + (static_cast<double>(k) - centre) * subcarrier_spacing;
}

void OfdmaGridSpec::validate() const {
  if (subcarrier_count < 1) throw std::invalid_argument("need at least one subcarrier");
  if (!(subcarrier_spacing > 0.0)) throw std::invalid_argument("subcarrier spacing must be positive");
  if (!(carrier_freq > 0.0)) throw std::invalid_argument("carrier frequency must be positive");
}

void Scene::validate(std::size_t grid_size) const {
  if (target_indices.size() != reflectivities.size()) {
    throw std::invalid_argument("scene needs one reflectivity per target");
  }
  std::unordered_set<std::size_t> seen;
  for (std::size_t i = 0; i < target_indices.size(); ++i) {
    if (target_indices[i] >= grid_size) throw std::out_of_range("target index outside grid");
    if (!seen.insert(target_indices[i]).second) throw std::invalid_argument("duplicate target index");
    if (!(std::abs(reflectivities[i]) > 0.0)) throw std::invalid_argument("target reflectivity must be nonzero");
  }
}

CVector Scene::truth_image(std::size_t grid_size) const {
  CVector z = CVector::Zero(static_cast<Eigen::Index>(grid_size));
  for (std::size_t l = 0; l < target_indices.size(); ++l) {
    z(static_cast<Eigen::Index>(target_indices[l])) = reflectivities[l];
  }
  return z;
}

CVector steering_vector(double freq, double carrier_freq, double element_spacing,
                        std::size_t antennas, double sin_phi) {
  if (std::abs(sin_phi) > 1.0 + 1e-12) {
    throw std::domain_error("|sin phi| exceeds 1");
  }
  const double step = kTwoPi * (freq / carrier_freq) * element_spacing * sin_phi;
  CVector a(static_cast<Eigen::Index>(antennas));
  for (std::size_t m = 0; m < antennas; ++m) {
    a(static_cast<Eigen::Index>(m)) = std::polar(1.0, step * static_cast<double>(m));
  }
  return a;
}

CVector apu_steering(const StripeLayout& layout, double freq, double sin_phi) {
  return steering_vector(freq, layout.carrier_freq, layout.element_spacing,
                         layout.antennas_per_apu, sin_phi);
}

CVector device_channel(const StripeLayout& layout, const RoleAssignment& roles,
                       const Point2& device, double freq) {
  const auto m = static_cast<Eigen::Index>(layout.antennas_per_apu);
  CVector h(m * static_cast<Eigen::Index>(roles.comm_count()));
  Eigen::Index row = 0;
  for (std::size_t c : roles.comm_set) {
    const double s = sine_from_broadside(layout.apus.at(c), device);
    h.segment(row, m) = apu_steering(layout, freq, s);
    row += m;
  }
  return h;
}

CMatrix sensing_channel_block(const StripeLayout& layout,
                              const std::vector<Point2>& positions,
                              const std::vector<cdouble>& reflectivities,
                              const ApuDescriptor& sense,
                              const ApuDescriptor& comm, double freq) {
  if (positions.size() != reflectivities.size()) {
    throw std::invalid_argument("one reflectivity per scatterer required");
  }
  const auto m = static_cast<Eigen::Index>(layout.antennas_per_apu);
  CMatrix block = CMatrix::Zero(m, m);
  for (std::size_t l = 0; l < positions.size(); ++l) {
    const BistaticGeometry g = bistatic_geometry(comm, sense, positions[l]);
    const CVector a_rx = apu_steering(layout, freq, g.sin_rx);
    const CVector a_tx = apu_steering(layout, freq, g.sin_tx);
    block.noalias() +=
        (reflectivities[l] * delay_phase(freq, g.delay)) * a_rx * a_tx.adjoint();
  }
  return block;
}

CMatrix sensing_channel_block(const StripeLayout& layout, const Grid& grid,
                              const Scene& scene, const ApuDescriptor& sense,
                              const ApuDescriptor& comm, double freq) {
  std::vector<Point2> positions;
  positions.reserve(scene.size());
  for (std::size_t idx : scene.target_indices) positions.push_back(grid.at(idx));
  return sensing_channel_block(layout, positions, scene.reflectivities, sense,
                               comm, freq);
}

CVector draw_noise(const NoiseSpec& spec, std::size_t length) {
  if (spec.variance < 0.0) throw std::invalid_argument("noise variance must be >= 0");
  CVector w = CVector::Zero(static_cast<Eigen::Index>(length));
  if (spec.variance == 0.0) return w;
  Engine engine = make_engine(derive_stream(spec.stream, {spec.counter}));
  std::normal_distribution<double> normal(0.0, std::sqrt(spec.variance / 2.0));
  for (Eigen::Index i = 0; i < w.size(); ++i) {
    const double re = normal(engine);
    const double im = normal(engine);
    w(i) = cdouble(re, im);
  }
  return w;
}

}  // namespace isac
