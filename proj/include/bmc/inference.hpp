#ifndef BMC_INFERENCE_HPP_
#define BMC_INFERENCE_HPP_

#include <cstddef>
#include <vector>

#include "bmc/model.hpp"
#include "bmc/simulate.hpp"

namespace bmc {

/// Per-segment matrices for segment k = 0..N-1 (the dwell in x_k ending at
/// the jump to x_{k+1}): survival exp(H_ll dt) and density exp(H_ll dt) H_ln.
struct SegmentMatrices {
  std::vector<Matrix> survival;
  std::vector<Matrix> density;
};

SegmentMatrices segment_matrices(const Generator &g, const ObservedPath &path);

/// Scaled forward and backward variables of an observed path.
///
/// Row k of `ltilde` is L~(k), k = 0..N; column k - 1 of `rtilde` is
/// R~(k), k = 1..N+1; `scale[k - 1]` is c_k. With T = t_N the backward
/// variables satisfy L~(k) R~(k+1) = 1 for every k; otherwise that product
/// is the constant `tail`, the probability of no jump in (t_N, T].
struct ForwardBackwardCache {
  Matrix ltilde;
  Matrix rtilde;
  std::vector<double> scale;
  double tail = 1;
  double loglik = 0;

  std::size_t jumps() const { return scale.size(); }
  auto forward(std::size_t k) const { return ltilde.row(Index(k)); }
  auto backward(std::size_t k) const { return rtilde.col(Index(k) - 1); }
  double c(std::size_t k) const { return scale[k - 1]; }
  /// Number of stored scalars, (N + 1) 2r + N.
  std::size_t stored_values() const {
    return std::size_t(ltilde.size() + rtilde.size()) + scale.size();
  }
};

/// Scaling constants below this are treated as a zero-density path.
inline constexpr double kMinScale = 1e-300;

ForwardBackwardCache forward_backward(const Generator &g,
                                      const InitialDistribution &init,
                                      const ObservedPath &path);
/// Same, reusing segment matrices computed by segment_matrices().
ForwardBackwardCache forward_backward(const Generator &g,
                                      const InitialDistribution &init,
                                      const ObservedPath &path,
                                      const SegmentMatrices &segments);

/// Sum of log c_k plus the log of the censored tail when T > t_N.
double log_likelihood(const Generator &g, const InitialDistribution &init,
                      const ObservedPath &path);

/// Distribution of S(t) given the observable path on [0, t]:
/// L~(k) exp(H_ll (t - t_k)) normalized, for t in [t_k, t_{k+1}).
RowVector filtered_state(const ForwardBackwardCache &cache, const Generator &g,
                         const ObservedPath &path, double t);

} // namespace bmc

#endif // BMC_INFERENCE_HPP_
