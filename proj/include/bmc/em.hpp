#ifndef BMC_EM_HPP_
#define BMC_EM_HPP_

#include <optional>
#include <string>
#include <vector>

#include "bmc/inference.hpp"

namespace bmc {

/// Pattern over the (rd) x (rd) off-diagonal entries; true marks a rate the
/// estimator may move, false pins it at zero.
using Mask = Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>;

/// Conditional means of the complete-data statistics given the observed
/// path: `jumps(a, b)` is the expected number of jumps from joint state a to
/// joint state b (zero diagonal), `dwell(a)` the expected time spent in a.
struct SufficientStats {
  Index r = 0;
  Index d = 0;
  Matrix jumps;
  Vector dwell;
  /// Log-likelihood of the parameter the statistics were computed under,
  /// on the path truncated at t_N.
  double loglik = 0;
  /// t_N, which the expected dwell times sum to.
  double horizon = 0;
};

/// Below this, a negative expected count or dwell is a numerical breakdown
/// rather than rounding noise.
inline constexpr double kNegativeClamp = 1e-12;

/// E-step on the path truncated at its last jump. For every segment k the
/// Van Loan integral I_k = int_0^dt exp(H_ll (dt - y)) H_ln R~(k+2) L~(k)
/// exp(H_ll y) dy yields the underlying jumps (H_ll .* I_k' / c_{k+1}) and
/// dwell times (diag of I_k' / c_{k+1}); the observed jump yields
/// H_ln .* (R~(k+2) L~(k) exp(H_ll dt))' / c_{k+1}, with dt the dwell that
/// ends at that jump.
SufficientStats e_step(const Generator &g, const InitialDistribution &init,
                       const ObservedPath &path);

struct MStepResult {
  Generator estimate;
  /// Joint states with no expected dwell and no expected jumps; their rows
  /// keep the previous iterate's rates (or zero without one).
  std::vector<Index> frozen_states;
};

/// h(a, b) = jumps(a, b) / dwell(a) for allowed entries, diagonals reset
/// to zero row sums. Throws DegenerateState for a state with jump mass but
/// no dwell time.
MStepResult m_step(const SufficientStats &stats,
                   const std::optional<Mask> &mask = std::nullopt,
                   const Generator *previous = nullptr);

struct EmConfig {
  double rel_tol = 1e-7;
  int max_iters = 1000;
  std::optional<Mask> structural_mask;
  /// Replace mu by alpha_{x0} of the current iterate before each E-step.
  /// Off by default: the likelihood is then no longer guaranteed monotone.
  bool initial_from_alpha = false;
};

enum class Termination { converged, max_iters, degenerate_state, numerical_breakdown };

std::string to_string(Termination t);

struct FitResult {
  Generator estimate;
  /// Log-likelihood of g0 followed by that of every EM iterate.
  std::vector<double> loglik_trace;
  int iterations = 0;
  Termination termination = Termination::max_iters;
  std::vector<Index> frozen_states;
  std::string message;
};

/// Iterates e_step / m_step from g0 until the relative change of the
/// log-likelihood drops below cfg.rel_tol or cfg.max_iters M-steps ran.
/// Zero off-diagonals of g0 stay zero in every iterate.
FitResult fit(const Generator &g0, const InitialDistribution &init,
              const ObservedPath &path, const EmConfig &cfg = {});

} // namespace bmc

#endif // BMC_EM_HPP_
