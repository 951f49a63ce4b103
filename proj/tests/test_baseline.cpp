#include <doctest.h>

#include <random>

#include "bmc/baseline.hpp"
#include "oracles.hpp"

using bmc::Generator;
using bmc::Index;
using bmc::Matrix;
using bmc::ObservedPath;

namespace {

// Observable sequence of a discrete-time joint chain with transition
// matrix p, started uniformly over the underlying states of level 0.
bmc::SampledPath discrete_chain(const Matrix &p, Index r, std::size_t steps,
                                std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Index state = Index(u(rng) * double(r));
  bmc::SampledPath out;
  out.delta = 1;
  out.samples.push_back(state / r);
  for (std::size_t k = 0; k < steps; ++k) {
    double v = u(rng);
    Index next = 0;
    while (next + 1 < p.cols() && v >= p(state, next)) {
      v -= p(state, next);
      ++next;
    }
    state = next;
    out.samples.push_back(state / r);
  }
  return out;
}

bool satisfies_axioms(const Matrix &h) {
  for (Index a = 0; a < h.rows(); ++a) {
    for (Index b = 0; b < h.cols(); ++b) {
      if (a != b && !(h(a, b) >= 0)) {
        return false;
      }
    }
    if (std::abs(h.row(a).sum()) > 1e-9 * std::max(1.0, h.row(a).cwiseAbs().sum())) {
      return false;
    }
  }
  return true;
}

Matrix random_stochastic(Index n, std::mt19937_64 &rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Matrix p = Matrix::NullaryExpr(n, n, [&] { return u(rng); });
  for (Index a = 0; a < n; ++a) {
    p.row(a) /= p.row(a).sum();
  }
  return p;
}

} // namespace

TEST_SUITE("baseline") {

TEST_CASE("time sampling on a hand-built path") {
  ObservedPath path;
  path.x0 = 0;
  path.jumps = {{0.35, 1}};
  path.horizon = 1.0;
  const auto s = bmc::time_sample(path, 0.1);
  REQUIRE(s.samples.size() == 11);
  for (std::size_t k = 0; k < s.samples.size(); ++k) {
    CHECK(s.samples[k] == (k >= 4 ? 1 : 0));
  }
  CHECK(bmc::time_sample(path, 2.0).samples.size() == 1);
  CHECK_THROWS_AS(bmc::time_sample(path, 0.0), bmc::DomainError);
}

TEST_CASE("coarse sampling loses short excursions") {
  ObservedPath path;
  path.x0 = 0;
  path.jumps = {{0.31, 1}, {0.33, 0}};
  path.horizon = 1.0;
  const auto s = bmc::time_sample(path, 0.1);
  for (Index x : s.samples) {
    CHECK(x == 0);
  }
}

TEST_CASE("scalar discrete fit returns the bigram frequencies") {
  const Matrix p = (Matrix(3, 3) << 0.5, 0.3, 0.2, 0.1, 0.6, 0.3, 0.4, 0.4, 0.2).finished();
  const auto s = discrete_chain(p, 1, 5000, 3);
  Matrix counts = Matrix::Zero(3, 3);
  for (std::size_t k = 1; k < s.samples.size(); ++k) {
    counts(s.samples[k - 1], s.samples[k]) += 1;
  }
  const auto fit = bmc::fit_discrete(s, 1, {Matrix::Constant(3, 3, 1.0 / 3)});
  CHECK(fit.converged);
  for (Index a = 0; a < 3; ++a) {
    for (Index b = 0; b < 3; ++b) {
      CHECK(fit.estimate.r_hat(a, b) ==
            doctest::Approx(counts(a, b) / counts.row(a).sum()).epsilon(1e-12));
    }
  }
}

TEST_CASE("scalar discrete fit recovers a known transition matrix") {
  const Matrix p = (Matrix(3, 3) << 0.5, 0.3, 0.2, 0.1, 0.6, 0.3, 0.4, 0.4, 0.2).finished();
  const auto s = discrete_chain(p, 1, 100000, 4);
  const auto fit = bmc::fit_discrete(s, 1, {Matrix::Constant(3, 3, 1.0 / 3)});
  CHECK((fit.estimate.r_hat - p).cwiseAbs().maxCoeff() < 0.05);
}

TEST_CASE("latent discrete fit is monotone and beats the generating matrix") {
  std::mt19937_64 rng(6);
  const Index r = 2, d = 2;
  const Matrix p = random_stochastic(r * d, rng);
  const auto s = discrete_chain(p, r, 20000, 7);
  const Matrix start = random_stochastic(r * d, rng);
  bmc::DiscreteFitConfig cfg;
  cfg.max_iters = 400;
  const auto fit = bmc::fit_discrete(s, r, {start}, cfg);
  for (std::size_t k = 1; k < fit.loglik_trace.size(); ++k) {
    CHECK(fit.loglik_trace[k] >=
          fit.loglik_trace[k - 1] - 1e-9 * std::abs(fit.loglik_trace[k - 1]));
  }
  CHECK(fit.loglik_trace.back() ==
        doctest::Approx(bmc::discrete_log_likelihood(s, r, fit.estimate.r_hat))
            .epsilon(1e-12));
  CHECK(fit.loglik_trace.back() >= bmc::discrete_log_likelihood(s, r, p) - 1.0);
  CHECK((fit.estimate.r_hat.rowwise().sum().array() - 1).abs().maxCoeff() < 1e-12);
}

TEST_CASE("sampled sequences with impossible transitions have zero likelihood") {
  bmc::SampledPath s;
  s.samples = {0, 1};
  CHECK_THROWS_AS(bmc::discrete_log_likelihood(s, 1, Matrix::Identity(2, 2)),
                  bmc::ZeroLikelihood);
}

TEST_CASE("recovery from the identity is the zero generator") {
  const auto rec = bmc::recover_generator(Matrix::Identity(4, 4), 0.01, 2, 2);
  CHECK(rec.report.method == bmc::RecoveryMethod::matrix_log);
  CHECK(rec.generator.matrix().cwiseAbs().maxCoeff() < 1e-12);
  CHECK_FALSE(rec.report.irreducible);
}

TEST_CASE("matrix-log recovery inverts the exponential at small delta") {
  const Generator g = oracle::reference_true();
  const double delta = 0.0025;
  const auto rec = bmc::recover_generator(bmc::expm(g.matrix() * delta), delta, 2, 2);
  CHECK(rec.report.method == bmc::RecoveryMethod::matrix_log);
  CHECK((rec.generator.matrix() - g.matrix()).cwiseAbs().maxCoeff() <=
        0.02 * g.matrix().cwiseAbs().maxCoeff());
  CHECK(rec.report.irreducible);
}

TEST_CASE("small diagonals take the first-order branch") {
  Matrix p = Matrix::Constant(2, 2, 0.5);
  p(0, 0) = 0.4;
  p(0, 1) = 0.6;
  const auto rec = bmc::recover_generator(p, 0.1, 1, 2);
  CHECK(rec.report.method == bmc::RecoveryMethod::first_order);
  CHECK(rec.generator.matrix()(0, 1) == doctest::Approx(6.0));
  CHECK(rec.generator.matrix()(1, 0) == doctest::Approx(5.0));
}

TEST_CASE("recovery error shrinks with the sampling step") {
  const Generator g = oracle::reference_true();
  double previous = std::numeric_limits<double>::infinity();
  for (double delta : {0.1, 0.01, 0.001}) {
    const auto rec = bmc::recover_generator(bmc::expm(g.matrix() * delta), delta, 2, 2);
    const double err = (rec.generator.matrix() - g.matrix()).cwiseAbs().maxCoeff();
    CHECK(err < previous);
    previous = err;
  }
}

TEST_CASE("recovered generators satisfy the rate axioms") {
  std::mt19937_64 rng(10);
  for (int rep = 0; rep < 40; ++rep) {
    Matrix p = random_stochastic(4, rng);
    if (rep % 2 == 0) {
      // Push towards the identity so the matrix-log branch is exercised.
      p = 0.2 * p + 0.8 * Matrix::Identity(4, 4);
    }
    const auto rec = bmc::recover_generator(p, 0.01, 2, 2);
    CHECK(satisfies_axioms(rec.generator.matrix()));
    CHECK(rec.report.clamped_mass >= 0);
  }
}

TEST_CASE("recover_generator input checks") {
  CHECK_THROWS_AS(bmc::recover_generator(Matrix::Identity(3, 3), 0.1, 2, 2),
                  bmc::DimensionError);
  CHECK_THROWS_AS(bmc::recover_generator(Matrix::Identity(4, 4), 0.0, 2, 2),
                  bmc::DomainError);
  CHECK_THROWS_AS(bmc::recover_generator(Matrix::Constant(4, 4, 0.5), 0.1, 2, 2),
                  bmc::DomainError);
}

TEST_CASE("end-to-end baseline on a simulated path") {
  const Generator g = oracle::reference_true();
  const auto path = bmc::observe(
      bmc::simulate_until_jumps(g, bmc::InitialDistribution::uniform(0, 2), 500, 15));
  bmc::DiscreteFitConfig cfg;
  cfg.max_iters = 50;
  const auto res = bmc::fit_baum(oracle::reference_initial(), path, 0.01, cfg);
  CHECK(res.sampled.samples.size() ==
        std::size_t(std::floor(path.horizon / 0.01)) + 1);
  CHECK(satisfies_axioms(res.recovered.generator.matrix()));
  CHECK(res.discrete.iterations <= 50);
}

} // TEST_SUITE
