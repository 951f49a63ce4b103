#include <doctest.h>

#include <random>

#include "bmc/em.hpp"
#include "oracles.hpp"

using bmc::Generator;
using bmc::Index;
using bmc::InitialDistribution;
using bmc::Matrix;
using bmc::ObservedPath;
using bmc::RowVector;
using bmc::Vector;

namespace {

ObservedPath simulated(const Generator &g, std::size_t jumps, std::uint64_t seed) {
  return bmc::observe(bmc::simulate_until_jumps(
      g, InitialDistribution::uniform(0, g.r()), jumps, seed));
}

// Observed l -> n counts and the time spent in each observable state.
struct Counts {
  Matrix transitions;
  Vector occupation;
};

Counts observed_counts(const ObservedPath &path, Index d) {
  Counts c{Matrix::Zero(d, d), Vector::Zero(d)};
  for (std::size_t k = 1; k <= path.size(); ++k) {
    c.transitions(path.state(k - 1), path.state(k)) += 1;
    c.occupation(path.state(k - 1)) += path.dwell(k);
  }
  return c;
}

} // namespace

TEST_SUITE("em") {

TEST_CASE("scalar chains: statistics are the observed counts") {
  std::mt19937_64 rng(8);
  const Generator g = oracle::random_generator(1, 3, rng);
  const ObservedPath path = simulated(g, 300, 9);
  const auto stats = bmc::e_step(g, InitialDistribution::uniform(path.x0, 1), path);
  const Counts c = observed_counts(path, 3);
  for (Index a = 0; a < 3; ++a) {
    CHECK(stats.dwell(a) == doctest::Approx(c.occupation(a)).epsilon(1e-12));
    for (Index b = 0; b < 3; ++b) {
      CHECK(stats.jumps(a, b) == doctest::Approx(c.transitions(a, b)).epsilon(1e-12));
    }
  }
}

TEST_CASE("scalar chains converge to the closed-form estimate at once") {
  std::mt19937_64 rng(12);
  const Generator g = oracle::random_generator(1, 4, rng);
  const ObservedPath path = simulated(g, 1000, 13);
  const Generator start = oracle::random_generator(1, 4, rng);
  const auto fit = bmc::fit(start, InitialDistribution::uniform(path.x0, 1), path);
  CHECK(fit.termination == bmc::Termination::converged);
  CHECK(fit.iterations <= 2);
  const Counts c = observed_counts(path, 4);
  for (Index a = 0; a < 4; ++a) {
    for (Index b = 0; b < 4; ++b) {
      if (a != b) {
        const double mle = c.transitions(a, b) / c.occupation(a);
        CHECK(std::abs(fit.estimate.matrix()(a, b) - mle) <= 1e-12 * std::max(1.0, mle));
      }
    }
  }
  // The closed-form estimate is a fixed point.
  const auto again =
      bmc::m_step(bmc::e_step(fit.estimate, InitialDistribution::uniform(path.x0, 1), path));
  CHECK((again.estimate.matrix() - fit.estimate.matrix()).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("expected statistics conserve the observed counts") {
  std::mt19937_64 rng(19);
  for (int rep = 0; rep < 8; ++rep) {
    const Index r = 2 + rep % 2, d = 2 + (rep / 2) % 2;
    const Generator g = oracle::random_generator(r, d, rng);
    const ObservedPath path = simulated(g, 300, 50 + rep);
    const Generator h = oracle::random_generator(r, d, rng);
    const auto init = InitialDistribution::uniform(path.x0, r);
    const auto stats = bmc::e_step(h, init, path);
    const Counts c = observed_counts(path, d);
    CHECK(stats.jumps.minCoeff() >= 0);
    CHECK(stats.dwell.minCoeff() >= 0);
    CHECK(stats.dwell.sum() == doctest::Approx(path.horizon).epsilon(1e-10));
    for (Index l = 0; l < d; ++l) {
      CHECK(stats.dwell.segment(l * r, r).sum() ==
            doctest::Approx(c.occupation(l)).epsilon(1e-9));
      for (Index n = 0; n < d; ++n) {
        if (l != n) {
          CHECK(stats.jumps.block(l * r, n * r, r, r).sum() ==
                doctest::Approx(c.transitions(l, n)).epsilon(1e-9));
        }
      }
    }
    // Flow balance: inflow minus outflow is the end minus start posterior.
    const auto cache = bmc::forward_backward(h, init, path);
    Vector balance = stats.jumps.colwise().sum().transpose() - stats.jumps.rowwise().sum();
    Vector start = Vector::Zero(h.states()), end = Vector::Zero(h.states());
    start.segment(path.x0 * r, r) =
        init.mu.transpose().cwiseProduct(cache.backward(1));
    end.segment(path.state(path.size()) * r, r) = cache.forward(path.size()).transpose();
    CHECK((balance - (end - start)).cwiseAbs().maxCoeff() < 1e-8);
  }
}

TEST_CASE("the observed-jump term uses the dwell that ends at the jump") {
  // Sum over the across block of H_ln .* J_k' / c_{k+1} is one per jump when
  // J_k uses dt_{k+1}; with dt_k it is not.
  const Generator g = oracle::reference_true();
  const ObservedPath path = simulated(g, 200, 23);
  const auto init = InitialDistribution::uniform(path.x0, 2);
  const auto cache = bmc::forward_backward(g, init, path);
  double worst_right = 0, worst_wrong = 0;
  for (std::size_t k = 1; k < path.size(); ++k) {
    const Index l = path.state(k), n = path.state(k + 1);
    const auto mass = [&](double dt) {
      const Matrix j = cache.backward(k + 2) *
                       (cache.forward(k) * bmc::survival(g, l, dt));
      return Matrix(g.block(l, n)).cwiseProduct(j.transpose()).sum() / cache.c(k + 1);
    };
    worst_right = std::max(worst_right, std::abs(mass(path.dwell(k + 1)) - 1));
    worst_wrong = std::max(worst_wrong, std::abs(mass(path.dwell(k)) - 1));
  }
  CHECK(worst_right < 1e-10);
  CHECK(worst_wrong > 0.1);
}

TEST_CASE("E-step matches the discretized posterior on short paths") {
  std::mt19937_64 rng(29);
  for (int rep = 0; rep < 4; ++rep) {
    const Index r = 2, d = 2 + rep % 2;
    const Generator g = oracle::random_generator(r, d, rng, 0.5, 5.0);
    const ObservedPath path = simulated(g, 1 + rep % 3, 70 + rep);
    const auto init = InitialDistribution::uniform(path.x0, r);
    const auto stats = bmc::e_step(g, init, path);
    const auto ref = oracle::discretized_posterior(g, init.mu, path, 1e-4);
    const double scale_j = std::max(1.0, ref.jumps.cwiseAbs().maxCoeff());
    const double scale_d = std::max(1e-3, ref.dwell.cwiseAbs().maxCoeff());
    CHECK((stats.jumps - ref.jumps).cwiseAbs().maxCoeff() <= 1e-3 * scale_j);
    CHECK((stats.dwell - ref.dwell).cwiseAbs().maxCoeff() <= 1e-3 * scale_d);
  }
}

TEST_CASE("fit is monotone and keeps structural zeros") {
  const Generator truth = oracle::reference_true();
  const ObservedPath path = simulated(truth, 2000, 31);
  const Generator start = oracle::reference_initial();
  bmc::EmConfig cfg;
  cfg.max_iters = 60;
  cfg.structural_mask = start.zero_pattern().unaryExpr([](bool z) { return !z; });
  const auto fit = bmc::fit(start, InitialDistribution::uniform(path.x0, 2), path, cfg);
  REQUIRE(fit.loglik_trace.size() >= 2);
  for (std::size_t k = 1; k < fit.loglik_trace.size(); ++k) {
    CHECK(fit.loglik_trace[k] >=
          fit.loglik_trace[k - 1] - 1e-9 * std::abs(fit.loglik_trace[k - 1]));
  }
  const auto zeros = start.zero_pattern();
  for (Index a = 0; a < 4; ++a) {
    for (Index b = 0; b < 4; ++b) {
      if (zeros(a, b)) {
        CHECK(fit.estimate.matrix()(a, b) == 0.0);
      }
    }
  }
  CHECK(fit.iterations == int(fit.loglik_trace.size()) - 1);
}

TEST_CASE("a mask pins allowed rates at zero") {
  const Generator truth = oracle::reference_true();
  const ObservedPath path = simulated(truth, 500, 37);
  bmc::Mask mask = bmc::Mask::Constant(4, 4, true);
  mask(0, 1) = false; // H11(1,2)
  bmc::EmConfig cfg;
  cfg.max_iters = 10;
  cfg.structural_mask = mask;
  const auto fit = bmc::fit(oracle::reference_initial(),
                            InitialDistribution::uniform(path.x0, 2), path, cfg);
  CHECK(fit.estimate.matrix()(0, 1) == 0.0);
  CHECK(fit.estimate.matrix()(0, 2) > 0);
}

TEST_CASE("m_step is a ratio of counts to dwell times") {
  bmc::SufficientStats s;
  s.r = 1;
  s.d = 2;
  s.jumps = (Matrix(2, 2) << 0, 6, 4, 0).finished();
  s.dwell = (Vector(2) << 2, 8).finished();
  const auto a = bmc::m_step(s);
  CHECK(a.estimate.matrix()(0, 1) == 3.0);
  CHECK(a.estimate.matrix()(1, 0) == 0.5);
  CHECK(a.estimate.matrix()(0, 0) == -3.0);
  s.jumps *= 7;
  s.dwell *= 7;
  const auto b = bmc::m_step(s);
  CHECK((a.estimate.matrix() - b.estimate.matrix()).cwiseAbs().maxCoeff() < 1e-15);
  CHECK(a.frozen_states.empty());
}

TEST_CASE("m_step degenerate and frozen states") {
  bmc::SufficientStats s;
  s.r = 2;
  s.d = 1;
  s.jumps = (Matrix(2, 2) << 0, 1, 0, 0).finished();
  s.dwell = (Vector(2) << 0, 1).finished();
  try {
    (void)bmc::m_step(s);
    FAIL("expected DegenerateState");
  } catch (const bmc::DegenerateState &e) {
    CHECK(e.observable() == 0);
    CHECK(e.underlying() == 0);
  }
  s.jumps = (Matrix(2, 2) << 0, 0, 2, 0).finished();
  const Generator prev =
      Generator::from_rates(2, 1, (Matrix(2, 2) << -5, 5, 1, -1).finished());
  const auto m = bmc::m_step(s, std::nullopt, &prev);
  REQUIRE(m.frozen_states.size() == 1);
  CHECK(m.frozen_states[0] == 0);
  CHECK(m.estimate.matrix()(0, 1) == 5.0);
  CHECK(m.estimate.matrix()(1, 0) == 2.0);
}

TEST_CASE("fit preconditions") {
  const Generator g = oracle::reference_true();
  ObservedPath empty;
  empty.horizon = 1;
  CHECK_THROWS_AS(bmc::fit(g, InitialDistribution::uniform(0, 2), empty),
                  bmc::DomainError);
  const ObservedPath path = simulated(g, 10, 1);
  bmc::EmConfig bad;
  bad.rel_tol = 0;
  CHECK_THROWS_AS(bmc::fit(g, InitialDistribution::uniform(path.x0, 2), path, bad),
                  bmc::DomainError);
}

TEST_CASE("max_iters bounds the number of M-steps") {
  const Generator g = oracle::reference_true();
  const ObservedPath path = simulated(g, 200, 2);
  bmc::EmConfig cfg;
  cfg.max_iters = 3;
  cfg.rel_tol = 1e-15;
  const auto fit = bmc::fit(oracle::reference_initial(),
                            InitialDistribution::uniform(path.x0, 2), path, cfg);
  CHECK(fit.termination == bmc::Termination::max_iters);
  CHECK(fit.iterations == 3);
  CHECK(fit.loglik_trace.size() == 4);
}

} // TEST_SUITE
