#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Core>

namespace isac {

using Point2 = Eigen::Vector2d;

/// Speed of light in vacuum [m/s].
inline constexpr double kSpeedOfLight = 299'792'458.0;

/// Square region served by the stripe. `origin` is the lower-left corner.
struct ServiceArea {
  double side_length = 60.0;
  Point2 origin = Point2::Zero();

  static ServiceArea from_perimeter(double perimeter);

  [[nodiscard]] Point2 center() const;
  /// True when `p` lies in the open square (not on the boundary).
  [[nodiscard]] bool strictly_contains(const Point2& p) const;
};

/// One antenna processing unit mounted on the perimeter.
struct ApuDescriptor {
  std::size_t index = 0;
  Point2 reference_point = Point2::Zero();  // array centre
  Point2 axis_direction = Point2::UnitX();  // along the antenna line
  Point2 inward_normal = Point2::UnitY();   // broadside, into the area
};

struct StripeLayout {
  ServiceArea area;
  std::vector<ApuDescriptor> apus;
  std::size_t antennas_per_apu = 4;
  double element_spacing = 0.5;  // in carrier wavelengths
  double carrier_freq = 5.955e9;

  [[nodiscard]] std::size_t apu_count() const { return apus.size(); }
};

/// Places `apus_per_side` arrays at the centres of equal segments on each
/// side. Indices run counter-clockwise starting on the bottom side; the
/// array axis follows the direction of travel so the inward normal is the
/// axis rotated by +90 degrees.
StripeLayout build_perimeter_layout(const ServiceArea& area,
                                    std::size_t apus_per_side,
                                    std::size_t antennas_per_apu,
                                    double element_spacing,
                                    double carrier_freq);

/// Raw lattice coordinate of the 1-based grid index `i` (no placement
/// offset applied).
Point2 raw_grid_point(std::size_t i, std::size_t point_count, double spacing);

/// Square lattice of candidate scatterer positions.
class Grid {
 public:
  /// Builds the lattice and translates it so its bounding box is centred
  /// in `area`. Throws if any point would not be strictly interior.
  Grid(const ServiceArea& area, std::size_t point_count, double spacing);

  /// Spacing side/(sqrt(I)+1): lattice plus one spacing of margin per side.
  static double default_spacing(const ServiceArea& area,
                                std::size_t point_count);

  [[nodiscard]] std::size_t size() const { return coords_.size(); }
  [[nodiscard]] std::size_t side_count() const { return side_count_; }
  [[nodiscard]] double spacing() const { return spacing_; }
  [[nodiscard]] const Point2& offset() const { return offset_; }
  [[nodiscard]] const std::vector<Point2>& coords() const { return coords_; }

  /// Coordinate of the 0-based point `i` after placement.
  [[nodiscard]] const Point2& at(std::size_t i) const;
  /// Coordinate of the 1-based point `i` after placement.
  [[nodiscard]] Point2 point(std::size_t one_based) const;

 private:
  std::size_t side_count_ = 0;
  double spacing_ = 0.0;
  Point2 offset_ = Point2::Zero();
  std::vector<Point2> coords_;
};

struct BistaticGeometry {
  double sin_tx = 0.0;  // sine of the angle off the transmitter broadside
  double sin_rx = 0.0;
  double delay = 0.0;  // tx -> point -> rx [s]
};

/// Sine of the angle between the line of sight to `p` and the broadside of
/// `apu`. Throws std::domain_error unless `p` is strictly in front of it.
double sine_from_broadside(const ApuDescriptor& apu, const Point2& p);

BistaticGeometry bistatic_geometry(const ApuDescriptor& tx,
                                   const ApuDescriptor& rx, const Point2& p);

/// Partition of the APUs into communication and sensing roles.
/// enumerate_configurations emits both sets sorted ascending.
struct RoleAssignment {
  std::vector<std::size_t> comm_set;
  std::vector<std::size_t> sense_set;

  [[nodiscard]] std::size_t comm_count() const { return comm_set.size(); }
  [[nodiscard]] std::size_t sense_count() const { return sense_set.size(); }
  [[nodiscard]] bool is_sensing(std::size_t apu) const;

  friend bool operator==(const RoleAssignment&,
                         const RoleAssignment&) = default;
};

/// All C(total, sensing) choices of the sensing set, lexicographic in the
/// sorted sensing indices.
std::vector<RoleAssignment> enumerate_configurations(std::size_t total_apus,
                                                     std::size_t sensing);

std::size_t binomial(std::size_t n, std::size_t k);

}  // namespace isac
