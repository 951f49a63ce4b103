#ifndef BMC_SIMULATE_HPP_
#define BMC_SIMULATE_HPP_

#include <cstddef>
#include <cstdint>
#include <vector>

#include "bmc/model.hpp"

namespace bmc {

struct JointEvent {
  double time;
  Index l; // observable state entered
  Index i; // underlying state entered
};

/// Sample path of Z = (X, S) on [0, horizon].
struct JointPath {
  Index x0 = 0;
  Index s0 = 0;
  std::vector<JointEvent> events;
  double horizon = 0;
  std::uint64_t seed = 0;
  /// Event times that had to be nudged by one ulp to stay increasing.
  std::size_t tie_warnings = 0;
};

struct ObservedJump {
  double t;
  Index x;
};

/// The observable path: initial state x_0 followed by jumps (t_k, x_k),
/// k = 1..N, on [0, horizon].
struct ObservedPath {
  Index x0 = 0;
  std::vector<ObservedJump> jumps;
  double horizon = 0;

  std::size_t size() const { return jumps.size(); }
  /// t_k with t_0 = 0.
  double time(std::size_t k) const { return k == 0 ? 0.0 : jumps[k - 1].t; }
  /// x_k for k = 0..N.
  Index state(std::size_t k) const { return k == 0 ? x0 : jumps[k - 1].x; }
  /// Delta t_k = t_k - t_{k-1} for k = 1..N.
  double dwell(std::size_t k) const { return time(k) - time(k - 1); }
  /// Copy with the horizon moved to t_N.
  ObservedPath truncated() const;
  /// Throws ValidationError naming the first offending record.
  void check(Index d) const;
};

/// Exact jump simulation of the joint chain up to time `horizon`. The
/// initial joint state is drawn from `init`.
JointPath simulate_joint(const Generator &g, const InitialDistribution &init,
                         double horizon, std::uint64_t seed);
JointPath simulate_joint(const Generator &g, Index x0, Index s0,
                         double horizon, std::uint64_t seed);

/// Simulates until the n-th jump of the observable process and sets the
/// horizon to that jump time.
JointPath simulate_until_jumps(const Generator &g,
                               const InitialDistribution &init,
                               std::size_t observable_jumps,
                               std::uint64_t seed);

/// Keeps only the events that change the observable coordinate.
ObservedPath observe(const JointPath &path);

/// Number of events in which both coordinates change at once.
std::size_t count_simultaneous_jumps(const JointPath &path);

} // namespace bmc

#endif // BMC_SIMULATE_HPP_
