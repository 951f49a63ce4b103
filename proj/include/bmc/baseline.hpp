#ifndef BMC_BASELINE_HPP_
#define BMC_BASELINE_HPP_

// Time-sampling estimator used as a comparison: sample X on a grid of
// spacing delta, fit the transition matrix of the sampled joint chain by
// Baum-Welch over the latent coordinate, then map it back to a generator.

#include <string>
#include <vector>

#include "bmc/model.hpp"
#include "bmc/simulate.hpp"

namespace bmc {

struct SampledPath {
  double delta = 0;
  /// x~_k = X(k delta), k = 0..floor(T / delta).
  std::vector<Index> samples;
};

SampledPath time_sample(const ObservedPath &path, double delta);

/// Row-stochastic (rd) x (rd) transition matrix in lexicographic order.
struct TransitionMatrixEstimate {
  Matrix r_hat;
};

/// exp(H0 delta), the starting point of the discrete fit.
TransitionMatrixEstimate initial_transition_matrix(const Generator &h0,
                                                   double delta);

struct DiscreteFitConfig {
  double rel_tol = 1e-7;
  int max_iters = 1000;
};

struct DiscreteFitResult {
  TransitionMatrixEstimate estimate;
  std::vector<double> loglik_trace;
  int iterations = 0;
  bool converged = false;
};

/// Log-likelihood of the sampled sequence under R, with S~_0 uniform over
/// the underlying states. Emissions are hard: sample k only admits joint
/// states whose observable coordinate equals x~_k.
double discrete_log_likelihood(const SampledPath &sampled, Index r,
                               const Matrix &r_hat);

/// Baum-Welch on the sampled chain. Each update divides expected
/// transition counts by expected visit counts; rows of joint states that
/// carry no posterior mass keep their previous values.
DiscreteFitResult fit_discrete(const SampledPath &sampled, Index r,
                               const TransitionMatrixEstimate &r0,
                               const DiscreteFitConfig &cfg = {});

enum class RecoveryMethod { matrix_log, first_order, first_order_after_logm_failure };

std::string to_string(RecoveryMethod m);

struct RecoveryReport {
  RecoveryMethod method = RecoveryMethod::first_order;
  /// Sum of the negative off-diagonal rates that were set to zero.
  double clamped_mass = 0;
  bool irreducible = false;
  std::string warning;
};

struct RecoveredGenerator {
  Generator generator;
  RecoveryReport report;
};

/// log(R)/delta when every diagonal entry of R exceeds 0.5 (negative
/// off-diagonals clamped, diagonals reset), otherwise (R - I)/delta.
RecoveredGenerator recover_generator(const Matrix &r_hat, double delta,
                                     Index r, Index d);

struct BaumResult {
  SampledPath sampled;
  DiscreteFitResult discrete;
  RecoveredGenerator recovered;
};

BaumResult fit_baum(const Generator &h0, const ObservedPath &path, double delta,
                    const DiscreteFitConfig &cfg = {});

} // namespace bmc

#endif // BMC_BASELINE_HPP_
