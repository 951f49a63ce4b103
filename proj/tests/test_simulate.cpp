#include <doctest.h>

#include <random>

#include "bmc/model.hpp"
#include "bmc/simulate.hpp"
#include "oracles.hpp"

using bmc::Generator;
using bmc::Index;
using bmc::Matrix;

TEST_SUITE("simulate") {

TEST_CASE("a one-state chain cannot be simulated") {
  const Generator g = Generator::from_rates(1, 1, Matrix::Zero(1, 1));
  CHECK_THROWS_AS(bmc::simulate_joint(g, 0, 0, 1.0, 1), bmc::ValidationError);
}

TEST_CASE("horizon must be positive") {
  const Generator g = oracle::reference_true();
  CHECK_THROWS_AS(bmc::simulate_joint(g, 0, 0, 0.0, 1), bmc::DomainError);
  CHECK_THROWS_AS(bmc::simulate_until_jumps(g, bmc::InitialDistribution::uniform(0, 2), 0, 1),
                  bmc::DomainError);
}

TEST_CASE("simulation is reproducible for a fixed seed") {
  const Generator g = oracle::reference_true();
  const auto a = bmc::simulate_joint(g, 0, 1, 5.0, 77);
  const auto b = bmc::simulate_joint(g, 0, 1, 5.0, 77);
  const auto c = bmc::simulate_joint(g, 0, 1, 5.0, 78);
  REQUIRE(a.events.size() == b.events.size());
  for (std::size_t k = 0; k < a.events.size(); ++k) {
    CHECK(a.events[k].time == b.events[k].time);
    CHECK(a.events[k].l == b.events[k].l);
    CHECK(a.events[k].i == b.events[k].i);
  }
  CHECK(a.events.size() != c.events.size());
}

TEST_CASE("joint path invariants") {
  const Generator g = oracle::reference_true();
  const auto jp = bmc::simulate_joint(g, 1, 0, 20.0, 3);
  double t = 0;
  Index l = jp.x0, i = jp.s0;
  for (const auto &e : jp.events) {
    CHECK(e.time > t);
    CHECK(e.time <= jp.horizon);
    CHECK((e.l != l || e.i != i));
    t = e.time;
    l = e.l;
    i = e.i;
  }
  CHECK(jp.tie_warnings == 0);
}

TEST_CASE("mean dwell of a two-state exponential chain") {
  const double lambda = 4.0, mu = 1.5;
  const Generator g = Generator::from_blocks(
      {{Matrix::Constant(1, 1, -lambda), Matrix::Constant(1, 1, lambda)},
       {Matrix::Constant(1, 1, mu), Matrix::Constant(1, 1, -mu)}});
  const auto path = bmc::observe(
      bmc::simulate_until_jumps(g, bmc::InitialDistribution::uniform(0, 1), 20000, 5));
  double sum = 0;
  std::size_t count = 0;
  for (std::size_t k = 1; k <= path.size(); ++k) {
    if (path.state(k - 1) == 0) {
      sum += path.dwell(k);
      ++count;
    }
  }
  REQUIRE(count >= 10000);
  const double mean = sum / double(count);
  const double se = (1 / lambda) / std::sqrt(double(count));
  CHECK(std::abs(mean - 1 / lambda) < 3 * se);
}

TEST_CASE("joint occupancy matches the stationary distribution") {
  const Generator g = oracle::reference_true();
  const auto pi = bmc::stationary(g).pi;
  // Batch means over independent stretches give the standard errors.
  const int batches = 40;
  std::vector<Eigen::VectorXd> fractions;
  for (int b = 0; b < batches; ++b) {
    const auto jp = bmc::simulate_joint(g, 0, 0, 10.0, 1000 + b);
    Eigen::VectorXd occ = Eigen::VectorXd::Zero(4);
    double t = 0;
    Index a = jp.x0 * 2 + jp.s0;
    for (const auto &e : jp.events) {
      if (t > 1.0) { // discard burn-in
        occ(a) += e.time - t;
      } else if (e.time > 1.0) {
        occ(a) += e.time - 1.0;
      }
      t = e.time;
      a = e.l * 2 + e.i;
    }
    occ(a) += jp.horizon - std::max(t, 1.0);
    fractions.push_back(occ / 9.0);
  }
  for (Index a = 0; a < 4; ++a) {
    double m = 0, m2 = 0;
    for (const auto &f : fractions) {
      m += f(a);
      m2 += f(a) * f(a);
    }
    m /= batches;
    const double se = std::sqrt((m2 / batches - m * m) / (batches - 1));
    CHECK(std::abs(m - pi(a)) < 3.5 * se);
  }
}

TEST_CASE("observe keeps only observable changes") {
  bmc::JointPath jp;
  jp.x0 = 0;
  jp.s0 = 0;
  jp.horizon = 10;
  // Sample path with joint states (1,1),(2,2),(1,2),(2,2),(1,2),(2,1), plus
  // two underlying-only moves that must vanish.
  jp.events = {{1.0, 1, 1}, {1.5, 1, 0}, {2.0, 1, 1}, {3.0, 0, 1},
               {4.0, 1, 1}, {5.0, 0, 1}, {6.0, 1, 0}};
  const auto obs = bmc::observe(jp);
  REQUIRE(obs.size() == 5);
  const std::vector<Index> expected{1, 0, 1, 0, 1};
  for (std::size_t k = 0; k < 5; ++k) {
    CHECK(obs.jumps[k].x == expected[k]);
  }
  CHECK(obs.jumps[0].t == 1.0);
  CHECK(obs.jumps[1].t == 3.0);
  CHECK(bmc::count_simultaneous_jumps(jp) == 2);

  bmc::JointPath hidden;
  hidden.horizon = 1;
  hidden.events = {{0.2, 0, 1}, {0.4, 0, 0}};
  CHECK(bmc::observe(hidden).size() == 0);
}

TEST_CASE("an MMMP never jumps both coordinates at once") {
  const Matrix q = (Matrix(2, 2) << -3, 3, 1, -1).finished();
  const Matrix g1 = (Matrix(2, 2) << -5, 5, 2, -2).finished();
  const Matrix g2 = (Matrix(2, 2) << -1, 1, 7, -7).finished();
  const Generator g = bmc::make_mmmp(q, {g1, g2});
  const auto jp = bmc::simulate_joint(g, 0, 0, 1000.0, 4);
  CHECK(jp.events.size() > 1000);
  CHECK(bmc::count_simultaneous_jumps(jp) == 0);
}

TEST_CASE("target-jump mode stops at the requested count") {
  const Generator g = oracle::reference_true();
  const auto jp =
      bmc::simulate_until_jumps(g, bmc::InitialDistribution::uniform(0, 2), 1234, 6);
  const auto obs = bmc::observe(jp);
  CHECK(obs.size() == 1234);
  CHECK(obs.horizon == obs.jumps.back().t);
}

TEST_CASE("dwell times are reproduced from jump times") {
  const Generator g = oracle::reference_true();
  const auto obs = bmc::observe(bmc::simulate_joint(g, 0, 0, 3.0, 8));
  double total = 0;
  for (std::size_t k = 1; k <= obs.size(); ++k) {
    CHECK(obs.dwell(k) > 0);
    total += obs.dwell(k);
  }
  CHECK(total == doctest::Approx(obs.time(obs.size())).epsilon(1e-14));
  CHECK_NOTHROW(obs.check(2));
}

TEST_CASE("embedded sequence of post-jump states follows A") {
  const Generator g = oracle::reference_true();
  const Matrix a = bmc::embedded_chain(g);
  const auto jp =
      bmc::simulate_until_jumps(g, bmc::InitialDistribution::uniform(0, 2), 40000, 11);
  Matrix counts = Matrix::Zero(4, 4);
  Index last_post = -1;
  Index level = jp.x0;
  for (const auto &e : jp.events) {
    if (e.l != level) {
      const Index post = e.l * 2 + e.i;
      if (last_post >= 0) {
        counts(last_post, post) += 1;
      }
      last_post = post;
      level = e.l;
    }
  }
  for (Index row = 0; row < 4; ++row) {
    const double n = counts.row(row).sum();
    REQUIRE(n > 1000);
    for (Index col = 0; col < 4; ++col) {
      const double p = a(row, col);
      const double se = std::sqrt(std::max(p * (1 - p), 1e-12) / n);
      CHECK(std::abs(counts(row, col) / n - p) < 4 * se + 1e-12);
    }
  }
}

} // TEST_SUITE
