#include <cmath>
#include <set>

#include "doctest.h"
#include "isac/comms.hpp"
#include "test_support.hpp"

using namespace isac;
using isac::testing::World;

namespace {

std::vector<Point2> devices_at(std::size_t n, const Point2& p) {
  return std::vector<Point2>(n, p);
}

}  // namespace

TEST_CASE("even-spread allocation") {
  SUBCASE("D = K activates every subcarrier") {
    const Allocation a = allocate(devices_at(16, {30, 30}), 16, 1.0, 2, AllocationMode::kEvenSpread);
    std::set<std::size_t> used(a.subcarriers.begin(), a.subcarriers.end());
    CHECK(used.size() == 16);
  }
  SUBCASE("two devices on 64 subcarriers with four comm APUs") {
    const Allocation a = allocate(devices_at(2, {30, 30}), 64, 1.0, 4, AllocationMode::kEvenSpread);
    CHECK(a.subcarriers == std::vector<std::size_t>{0, 32});  // 1-based {1, 33}
    CHECK(a.power.rows() == 4);
    CHECK(a.power.cols() == 2);
    CHECK((a.power.array() == 0.125).all());
  }
  SUBCASE("distinct subcarriers and conserved power for every D") {
    for (std::size_t d = 1; d <= 64; ++d) {
      const Allocation a = allocate(devices_at(d, {30, 30}), 64, 1.0, 3, AllocationMode::kEvenSpread);
      CHECK(std::set<std::size_t>(a.subcarriers.begin(), a.subcarriers.end()).size() == d);
      CHECK(a.total_power() == doctest::Approx(1.0).epsilon(1e-12));
      // ceil((j-1) K / D) + 1 in 1-based numbering.
      for (std::size_t j = 1; j <= d; ++j) {
        const auto expect = static_cast<std::size_t>(std::ceil((j - 1) * 64.0 / d));
        CHECK(a.subcarriers[j - 1] == expect);
      }
    }
  }
  CHECK_THROWS_AS(allocate(devices_at(5, {30, 30}), 4, 1.0, 2, AllocationMode::kEvenSpread),
                  std::invalid_argument);
  CHECK(allocate({}, 4, 1.0, 2, AllocationMode::kEvenSpread).device_count() == 0);
}

TEST_CASE("random allocation is injective and reproducible") {
  Engine e1(9), e2(9);
  const Allocation a = allocate(devices_at(10, {30, 30}), 16, 1.0, 2, AllocationMode::kRandom, &e1);
  const Allocation b = allocate(devices_at(10, {30, 30}), 16, 1.0, 2, AllocationMode::kRandom, &e2);
  CHECK(a.subcarriers == b.subcarriers);
  CHECK(std::set<std::size_t>(a.subcarriers.begin(), a.subcarriers.end()).size() == 10);
  for (std::size_t k : a.subcarriers) CHECK(k < 16);
  CHECK_THROWS(allocate(devices_at(2, {30, 30}), 16, 1.0, 2, AllocationMode::kRandom, nullptr));
}

TEST_CASE("MRT precoders") {
  World world(1, 4, 100);
  const RoleAssignment roles{{0, 1, 2, 3}, {}};

  SUBCASE("broadside device gets a flat precoder") {
    const Allocation a = allocate({world.area.center()}, 16, 1.0, 4, AllocationMode::kEvenSpread);
    const PrecoderSet u = mrt_precoders(world.layout, world.ofdma, roles, a);
    const double p = 0.25;
    for (std::size_t c = 0; c < 4; ++c) {
      CHECK((u.at(c, 0) - std::sqrt(p / 4.0) * CVector::Ones(4)).norm() < 1e-12);
    }
  }

  SUBCASE("power normalisation and matched-filter gain") {
    Engine engine(3);
    std::uniform_real_distribution<double> pos(1.0, 59.0);
    std::vector<Point2> devices;
    for (int j = 0; j < 8; ++j) devices.emplace_back(pos(engine), pos(engine));
    const Allocation a = allocate(devices, 16, 1.0, 4, AllocationMode::kEvenSpread);
    const PrecoderSet u = mrt_precoders(world.layout, world.ofdma, roles, a);
    for (std::size_t j = 0; j < a.device_count(); ++j) {
      const double f = world.ofdma.frequency(a.subcarriers[j]);
      for (std::size_t c = 0; c < 4; ++c) {
        const double p = a.power(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(j));
        CHECK(std::abs(u.at(c, j).squaredNorm() - p) <= 1e-12 * p);
        const CVector h = apu_steering(world.layout, f,
                                       sine_from_broadside(world.layout.apus[c], devices[j]));
        CHECK(std::norm(h.dot(u.at(c, j))) == doctest::Approx(p * 4.0).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("SNR closed form") {
  World world(1, 4, 100);
  const RoleAssignment two{{0, 1}, {2, 3}};
  // One device with budget 0.2 W over two comm APUs gives p = 0.1 W per APU.
  const Allocation a = allocate({Point2(20, 35)}, 16, 0.2, 2, AllocationMode::kEvenSpread);
  const auto snr = snr_per_device(world.layout, world.ofdma, two, a, 1e-6, SnrConvention::kAsPrinted);
  REQUIRE(snr.size() == 1);
  CHECK(snr[0] == doctest::Approx(2e5).epsilon(1e-12));

  const auto mf = snr_per_device(world.layout, world.ofdma, two, a, 1e-6, SnrConvention::kMatchedFilter);
  CHECK(mf[0] == doctest::Approx(4.0 * 2e5).epsilon(1e-12));

  const Allocation silent = allocate({Point2(20, 35)}, 16, 0.0, 2, AllocationMode::kEvenSpread);
  CHECK(snr_per_device(world.layout, world.ofdma, two, silent, 1e-6, SnrConvention::kAsPrinted)[0] == 0.0);
  CHECK_THROWS(snr_per_device(world.layout, world.ofdma, two, a, 0.0, SnrConvention::kAsPrinted));

  // Position independence.
  for (const Point2& p : {Point2(5, 5), Point2(55, 12), Point2(31, 58)}) {
    const Allocation b = allocate({p}, 16, 0.2, 2, AllocationMode::kEvenSpread);
    CHECK(snr_per_device(world.layout, world.ofdma, two, b, 1e-6, SnrConvention::kAsPrinted)[0] ==
          doctest::Approx(2e5).epsilon(1e-12));
  }
}

TEST_CASE("sum rate") {
  CHECK(sum_rate({}, 312.5e3) == 0.0);
  const double expect = 312500.0 * std::log2(1.0 + 2e5);
  CHECK(sum_rate({2e5}, 312.5e3) == doctest::Approx(expect).epsilon(1e-15));
  CHECK(expect == doctest::Approx(5.50e6).epsilon(1e-3));

  // Equal split keeps sum_c p_{c,k} = budget / D, so the SNR is budget/(D sigma^2)
  // whatever C is, and the rate depends on D only.
  World world(2, 4, 100);
  for (std::size_t d : {1u, 4u, 8u}) {
    std::vector<Point2> devices;
    for (std::size_t j = 0; j < d; ++j) devices.emplace_back(10.0 + 5.0 * j, 20.0 + 3.0 * j);
    double first = -1.0;
    for (std::size_t s = 1; s < 8; ++s) {
      const auto roles = enumerate_configurations(8, s).front();
      const Allocation a = allocate(devices, 16, 1.0, roles.comm_count(), AllocationMode::kEvenSpread);
      const auto snr = snr_per_device(world.layout, world.ofdma, roles, a, 1e-6, SnrConvention::kAsPrinted);
      for (double g : snr) CHECK(g == doctest::Approx(1.0 / (d * 1e-6)).epsilon(1e-12));
      const double r = sum_rate(snr, 312.5e3);
      if (first < 0) first = r;
      CHECK(r == doctest::Approx(first).epsilon(1e-12));
    }
    CHECK(first == doctest::Approx(d * 312500.0 * std::log2(1.0 + 1.0 / (d * 1e-6))).epsilon(1e-12));
  }
}
