#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "doctest.h"
#include "isac/sensing.hpp"
#include "test_support.hpp"

using namespace isac;
using isac::testing::World;

namespace {

// Owns everything a Transmission points at.
struct Link {
  RoleAssignment roles;
  Allocation alloc;
  PrecoderSet precoders;
  Transmission tx;

  Link(const World& world, RoleAssignment r, std::vector<Point2> devices, double budget = 1.0)
      : roles(std::move(r)) {
    alloc = allocate(std::move(devices), world.ofdma.subcarrier_count, budget, roles.comm_count(),
                     AllocationMode::kEvenSpread);
    precoders = mrt_precoders(world.layout, world.ofdma, roles, alloc);
    tx.layout = &world.layout;
    tx.ofdma = &world.ofdma;
    tx.roles = &roles;
    tx.alloc = &alloc;
    tx.precoders = &precoders;
    tx.symbols.assign(alloc.device_count(), cdouble(1.0, 0.0));
  }
  Link(const Link&) = delete;
};

std::vector<Point2> some_devices(std::size_t n, std::uint64_t seed) {
  Engine engine(seed);
  std::uniform_real_distribution<double> pos(2.0, 58.0);
  std::vector<Point2> out;
  for (std::size_t j = 0; j < n; ++j) out.emplace_back(pos(engine), pos(engine));
  return out;
}

}  // namespace

TEST_CASE("sensing matrix shape and row order") {
  World world(1, 4, 100);
  Link link(world, {{2, 3}, {0, 1}}, some_devices(4, 1));
  const auto rows = stacked_subcarriers(link.tx);
  CHECK(rows == std::vector<std::size_t>{0, 4, 8, 12});
  const CMatrix phi = build_sensing_matrix(link.tx, world.layout.apus[0], world.grid, rows);
  CHECK(phi.rows() == 16);
  CHECK(phi.cols() == 100);

  link.tx.stack_all_subcarriers = true;
  const auto all = stacked_subcarriers(link.tx);
  CHECK(all.size() == 16);
  const CMatrix full = build_sensing_matrix(link.tx, world.layout.apus[0], world.grid, all);
  CHECK(full.rows() == 64);
  // Idle subcarriers carry no energy, active rows agree with the compact matrix.
  CHECK(full.middleRows(4, 4).norm() == 0.0);
  CHECK((full.middleRows(16, 4) - phi.middleRows(4, 4)).norm() == 0.0);
}

TEST_CASE("single-antenna single-transmitter column is the delay phase") {
  World world(1, 1, 100);
  Link link(world, {{1}, {0}}, {Point2(20, 30)}, 0.5);
  const ApuDescriptor& sense = world.layout.apus[0];
  const double f = world.ofdma.frequency(link.alloc.subcarriers[0]);
  for (std::size_t i : {0u, 17u, 55u, 99u}) {
    const Point2 p = world.grid.at(i);
    const double tau = ((p - world.layout.apus[1].reference_point).norm() +
                        (p - sense.reference_point).norm()) /
                       kSpeedOfLight;
    const CVector col = sensing_matrix_column(link.tx, sense, world.grid, 0, i);
    REQUIRE(col.size() == 1);
    CHECK(std::abs(col(0) - std::sqrt(0.5) * std::polar(1.0, -2.0 * std::numbers::pi * f * tau)) <
          1e-12);
  }
}

TEST_CASE("column entries against a hand-built sum") {
  World world(1, 4, 100);
  Link link(world, {{1, 2, 3}, {0}}, some_devices(3, 7));
  const ApuDescriptor& sense = world.layout.apus[0];
  for (std::size_t j = 0; j < 3; ++j) {
    const double f = world.ofdma.frequency(link.alloc.subcarriers[j]);
    for (std::size_t i : {5u, 44u, 91u}) {
      const Point2 p = world.grid.at(i);
      CVector expect = CVector::Zero(4);
      for (std::size_t c = 0; c < 3; ++c) {
        const ApuDescriptor& tx = world.layout.apus[link.roles.comm_set[c]];
        const double tau = ((p - tx.reference_point).norm() + (p - sense.reference_point).norm()) /
                           kSpeedOfLight;
        const CVector a_s = steering_vector(f, 5.955e9, 0.5, 4, sine_from_broadside(sense, p));
        const CVector a_c = steering_vector(f, 5.955e9, 0.5, 4, sine_from_broadside(tx, p));
        expect += std::polar(1.0, -2.0 * std::numbers::pi * f * tau) * a_s *
                  a_c.dot(link.precoders.at(c, j));
      }
      const CVector col = sensing_matrix_column(link.tx, sense, world.grid, j, i);
      CHECK((col - expect).norm() <= 1e-12 * expect.norm());

      // |a^H u| <= ||a|| ||u|| = sqrt(M p) per transmitter.
      double bound = 0.0;
      for (std::size_t c = 0; c < 3; ++c)
        bound += 4.0 * std::sqrt(link.alloc.power(static_cast<Eigen::Index>(c),
                                                  static_cast<Eigen::Index>(j)));
      CHECK(col.norm() <= bound * (1 + 1e-12));
    }
  }
  link.precoders = PrecoderSet(3, 3, 4);
  CHECK(sensing_matrix_column(link.tx, sense, world.grid, 0, 10).norm() == 0.0);
}

TEST_CASE("observation agrees with the linear model") {
  World world(1, 4, 100);
  Engine engine(21);
  std::uniform_int_distribution<std::size_t> pick(0, 99);
  for (int t = 0; t < 20; ++t) {
    Link link(world, {{0, 2}, {1, 3}}, some_devices(4, 100 + t));
    if (t % 2 == 1) {
      link.tx.symbols = {cdouble(1, 1) / std::sqrt(2.0), cdouble(-1, 1) / std::sqrt(2.0),
                         cdouble(1, -1) / std::sqrt(2.0), cdouble(-1, -1) / std::sqrt(2.0)};
    }
    Scene scene;
    while (scene.target_indices.size() < 4) {
      const std::size_t i = pick(engine);
      if (std::find(scene.target_indices.begin(), scene.target_indices.end(), i) !=
          scene.target_indices.end())
        continue;
      scene.target_indices.push_back(i);
      scene.reflectivities.push_back(isac::testing::random_complex_scalar(engine));
    }
    const SensingProblem prob = build_problem(link.tx, 3, world.grid, scene, {0.0, 0, 0});
    const CVector model = prob.phi * scene.truth_image(100);
    CHECK((prob.y - model).norm() <= 1e-10 * model.norm());
  }
}

TEST_CASE("observation edge cases") {
  World world(1, 4, 100);
  Link link(world, {{0, 1}, {2, 3}}, some_devices(4, 3));
  CHECK(build_problem(link.tx, 2, world.grid, Scene{}, {0.0, 0, 0}).y.norm() == 0.0);

  const SensingProblem one = build_problem(link.tx, 2, world.grid, Scene{{42}, {1.0}}, {0.0, 0, 0});
  CHECK((one.y - one.phi.col(42)).norm() <= 1e-12 * one.y.norm());

  CHECK_THROWS(build_problem(link.tx, 0, world.grid, Scene{}, {0.0, 0, 0}));

  // Listing sensing APUs in a different order leaves Phi alone.
  Link swapped(world, {{0, 1}, {3, 2}}, some_devices(4, 3));
  const SensingProblem a = build_problem(link.tx, 3, world.grid, Scene{{5}, {1.0}}, {0.0, 0, 0});
  const SensingProblem b = build_problem(swapped.tx, 3, world.grid, Scene{{5}, {1.0}}, {0.0, 0, 0});
  CHECK((a.phi - b.phi).norm() == 0.0);

  const SensingProblem noisy = build_problem(link.tx, 2, world.grid, Scene{}, {1e-2, 9, 0});
  CHECK(noisy.y.norm() > 0.0);
}

TEST_CASE("problem dump round trip") {
  World world(1, 4, 100);
  Link link(world, {{0, 1}, {2, 3}}, some_devices(4, 5));
  const SensingProblem prob = build_problem(link.tx, 2, world.grid, Scene{{7, 60}, {1.0, 2.0}},
                                            {1e-4, 1, 0});
  std::stringstream buf;
  write_problem_dump(prob, buf);
  CHECK(buf.str().size() ==
        8 + 3 * 8 + static_cast<std::size_t>(prob.phi.size() + prob.y.size()) * 16);
  const SensingProblem back = read_problem_dump(buf);
  CHECK(back.apu_index == 2);
  CHECK(back.phi == prob.phi);
  CHECK(back.y == prob.y);

  std::stringstream bad("NOTMAGIC");
  CHECK_THROWS(read_problem_dump(bad));
}
