#include "isac/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace isac {

namespace {

std::size_t exact_sqrt(std::size_t n) {
  auto r = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(n))));
  if (r * r != n) {
    throw std::invalid_argument("grid point count " + std::to_string(n) +
                                " is not a perfect square");
  }
  return r;
}

Point2 rotate_ccw(const Point2& v) { return {-v.y(), v.x()}; }

}  // namespace

ServiceArea ServiceArea::from_perimeter(double perimeter) {
  if (!(perimeter > 0.0)) {
    throw std::invalid_argument("perimeter must be positive");
  }
  return ServiceArea{perimeter / 4.0, Point2::Zero()};
}

Point2 ServiceArea::center() const {
  return origin + Point2::Constant(side_length / 2.0);
}

bool ServiceArea::strictly_contains(const Point2& p) const {
  const Point2 q = p - origin;
  return q.x() > 0.0 && q.y() > 0.0 && q.x() < side_length &&
         q.y() < side_length;
}

StripeLayout build_perimeter_layout(const ServiceArea& area,
                                    std::size_t apus_per_side,
                                    std::size_t antennas_per_apu,
                                    double element_spacing,
                                    double carrier_freq) {
  if (!(area.side_length > 0.0)) {
    throw std::invalid_argument("service area side must be positive");
  }
  if (apus_per_side < 1) {
    throw std::invalid_argument("need at least one APU per side");
  }
  if (antennas_per_apu < 1) {
    throw std::invalid_argument("need at least one antenna per APU");
  }
  if (!(element_spacing > 0.0) || !(carrier_freq > 0.0)) {
    throw std::invalid_argument(
        "element spacing and carrier frequency must be positive");
  }

  StripeLayout layout;
  layout.area = area;
  layout.antennas_per_apu = antennas_per_apu;
  layout.element_spacing = element_spacing;
  layout.carrier_freq = carrier_freq;

  const double side = area.side_length;
  // Corner where each side starts when walking counter-clockwise, and the
  // walking direction along that side.
  const Point2 starts[4] = {area.origin, area.origin + Point2(side, 0.0),
                            area.origin + Point2(side, side),
                            area.origin + Point2(0.0, side)};
  const Point2 dirs[4] = {Point2(1, 0), Point2(0, 1), Point2(-1, 0),
                          Point2(0, -1)};

  const double segment = side / static_cast<double>(apus_per_side);
  std::size_t index = 0;
  for (int s = 0; s < 4; ++s) {
    for (std::size_t j = 0; j < apus_per_side; ++j) {
      ApuDescriptor apu;
      apu.index = index++;
      apu.reference_point =
          starts[s] + dirs[s] * (segment * (static_cast<double>(j) + 0.5));
      apu.axis_direction = dirs[s];
      apu.inward_normal = rotate_ccw(dirs[s]);
      layout.apus.push_back(apu);
    }
  }
  return layout;
}

Point2 raw_grid_point(std::size_t i, std::size_t point_count, double spacing) {
  const std::size_t n = exact_sqrt(point_count);
  if (i < 1 || i > point_count) {
    throw std::out_of_range("grid index " + std::to_string(i) +
                            " outside 1.." + std::to_string(point_count));
  }
  const auto col = static_cast<double>((i - 1) / n) - 1.0;
  const auto row = static_cast<double>((i - 1) % n) + 1.0;
  return Point2(col, row) * spacing;
}

Grid::Grid(const ServiceArea& area, std::size_t point_count, double spacing)
    : side_count_(exact_sqrt(point_count)), spacing_(spacing) {
  if (point_count == 0) throw std::invalid_argument("empty grid");
  if (!(spacing > 0.0)) throw std::invalid_argument("grid spacing must be positive");

  // Raw bounding box: x in [-d, (n-2)d], y in [d, n d].
  const double n = static_cast<double>(side_count_);
  const Point2 raw_center(((n - 2.0) * spacing - spacing) / 2.0,
                          (n * spacing + spacing) / 2.0);
  offset_ = area.center() - raw_center;

  coords_.reserve(point_count);
  for (std::size_t i = 1; i <= point_count; ++i) {
    Point2 p = raw_grid_point(i, point_count, spacing) + offset_;
    if (!area.strictly_contains(p)) {
      throw std::invalid_argument(
          "grid spacing too large: lattice does not fit inside the area");
    }
    coords_.push_back(p);
  }
}

double Grid::default_spacing(const ServiceArea& area, std::size_t point_count) {
  const double n = static_cast<double>(exact_sqrt(point_count));
  return area.side_length / (n + 1.0);
}

const Point2& Grid::at(std::size_t i) const {
  if (i >= coords_.size()) throw std::out_of_range("grid index out of range");
  return coords_[i];
}

Point2 Grid::point(std::size_t one_based) const {
  if (one_based < 1) throw std::out_of_range("grid index out of range");
  return at(one_based - 1);
}

double sine_from_broadside(const ApuDescriptor& apu, const Point2& p) {
  const Point2 los = p - apu.reference_point;
  const double dist = los.norm();
  if (!(dist > 0.0) || !(los.dot(apu.inward_normal) > 0.0)) {
    throw std::domain_error("point is not strictly in front of APU " +
                            std::to_string(apu.index));
  }
  return std::clamp(los.dot(apu.axis_direction) / dist, -1.0, 1.0);
}

BistaticGeometry bistatic_geometry(const ApuDescriptor& tx,
                                   const ApuDescriptor& rx, const Point2& p) {
  BistaticGeometry g;
  g.sin_tx = sine_from_broadside(tx, p);
  g.sin_rx = sine_from_broadside(rx, p);
  g.delay = ((p - tx.reference_point).norm() + (p - rx.reference_point).norm()) /
            kSpeedOfLight;
  return g;
}

bool RoleAssignment::is_sensing(std::size_t apu) const {
  return std::find(sense_set.begin(), sense_set.end(), apu) != sense_set.end();
}

std::size_t binomial(std::size_t n, std::size_t k) {
  if (k > n) return 0;
  k = std::min(k, n - k);
  std::size_t r = 1;
  for (std::size_t j = 1; j <= k; ++j) r = r * (n - k + j) / j;
  return r;
}

std::vector<RoleAssignment> enumerate_configurations(std::size_t total_apus,
                                                     std::size_t sensing) {
  if (sensing < 1 || sensing >= total_apus) {
    throw std::invalid_argument(
        "sensing APU count must satisfy 1 <= S < total APUs (S=" +
        std::to_string(sensing) + ", total=" + std::to_string(total_apus) + ")");
  }

  std::vector<RoleAssignment> out;
  out.reserve(binomial(total_apus, sensing));
  std::vector<std::size_t> pick(sensing);
  for (std::size_t j = 0; j < sensing; ++j) pick[j] = j;

  while (true) {
    RoleAssignment a;
    a.sense_set = pick;
    for (std::size_t apu = 0; apu < total_apus; ++apu) {
      if (!std::binary_search(pick.begin(), pick.end(), apu)) {
        a.comm_set.push_back(apu);
      }
    }
    out.push_back(std::move(a));

    // Advance to the next combination in lexicographic order.
    std::size_t j = sensing;
    while (j > 0 && pick[j - 1] == total_apus - sensing + (j - 1)) --j;
    if (j == 0) break;
    ++pick[j - 1];
    for (std::size_t m = j; m < sensing; ++m) pick[m] = pick[m - 1] + 1;
  }
  return out;
}

}  // namespace isac
