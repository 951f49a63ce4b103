#include "bmc/simulate.hpp"

#include <cmath>
#include <limits>
#include <random>
#include <sstream>

namespace bmc {

namespace {

// Uniform on [0, 1) from the top 53 bits; independent of the standard
// library's distribution implementations so paths are portable.
double uniform01(std::mt19937_64 &rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

Index draw(const RowVector &weights, double total, std::mt19937_64 &rng) {
  const double target = uniform01(rng) * total;
  double acc = 0;
  Index last = -1;
  for (Index k = 0; k < weights.size(); ++k) {
    if (weights(k) <= 0) {
      continue;
    }
    acc += weights(k);
    last = k;
    if (target < acc) {
      return k;
    }
  }
  return last;
}

class JumpSampler {
public:
  JumpSampler(const Generator &g, std::uint64_t seed) : g_(g), rng_(seed) {}

  Index initial(const InitialDistribution &init) {
    init.check(g_.r(), g_.d());
    return init.x0 * g_.r() + draw(init.mu, init.mu.sum(), rng_);
  }

  // Advances from joint state `a` at time `t`; returns the new state and
  // updates `t`. Returns -1 for an absorbing state.
  Index step(Index a, double &t, std::size_t &ties) {
    const double rate = -g_.matrix()(a, a);
    if (!(rate > 0)) {
      t = std::numeric_limits<double>::infinity();
      return -1;
    }
    const double hold = -std::log1p(-uniform01(rng_)) / rate;
    double next = t + hold;
    if (!(next > t)) {
      next = std::nextafter(t, std::numeric_limits<double>::infinity());
      ++ties;
    }
    t = next;
    RowVector weights = g_.matrix().row(a);
    weights(a) = 0;
    return draw(weights, rate, rng_);
  }

private:
  const Generator &g_;
  std::mt19937_64 rng_;
};

void require_valid(const Generator &g) {
  auto report = validate(g);
  if (!report.ok()) {
    throw ValidationError(std::move(report.violations));
  }
}

JointPath run(const Generator &g, Index start, double horizon,
              std::uint64_t seed, JumpSampler &sampler) {
  JointPath path;
  path.x0 = start / g.r();
  path.s0 = start % g.r();
  path.horizon = horizon;
  path.seed = seed;
  double t = 0;
  Index a = start;
  while (true) {
    const Index next = sampler.step(a, t, path.tie_warnings);
    if (next < 0 || t > horizon) {
      break;
    }
    a = next;
    path.events.push_back({t, a / g.r(), a % g.r()});
  }
  return path;
}

} // namespace

JointPath simulate_joint(const Generator &g, const InitialDistribution &init,
                         double horizon, std::uint64_t seed) {
  require_valid(g);
  if (!(horizon > 0) || !std::isfinite(horizon)) {
    throw DomainError("simulate_joint: horizon must be finite and > 0");
  }
  JumpSampler sampler(g, seed);
  const Index start = sampler.initial(init);
  return run(g, start, horizon, seed, sampler);
}

JointPath simulate_joint(const Generator &g, Index x0, Index s0,
                         double horizon, std::uint64_t seed) {
  require_valid(g);
  if (!(horizon > 0) || !std::isfinite(horizon)) {
    throw DomainError("simulate_joint: horizon must be finite and > 0");
  }
  if (x0 < 0 || x0 >= g.d() || s0 < 0 || s0 >= g.r()) {
    throw DomainError("simulate_joint: initial joint state out of range");
  }
  JumpSampler sampler(g, seed);
  return run(g, g.joint(x0, s0), horizon, seed, sampler);
}

JointPath simulate_until_jumps(const Generator &g,
                               const InitialDistribution &init,
                               std::size_t observable_jumps,
                               std::uint64_t seed) {
  require_valid(g);
  if (observable_jumps == 0) {
    throw DomainError("simulate_until_jumps: need at least one jump");
  }
  JumpSampler sampler(g, seed);
  const Index start = sampler.initial(init);
  JointPath path;
  path.x0 = start / g.r();
  path.s0 = start % g.r();
  path.seed = seed;
  double t = 0;
  Index a = start;
  std::size_t seen = 0;
  while (seen < observable_jumps) {
    const Index next = sampler.step(a, t, path.tie_warnings);
    if (next < 0) {
      throw NumericalBreakdown("simulate_until_jumps: absorbing state");
    }
    if (next / g.r() != a / g.r()) {
      ++seen;
    }
    a = next;
    path.events.push_back({t, a / g.r(), a % g.r()});
  }
  path.horizon = t;
  return path;
}

ObservedPath observe(const JointPath &path) {
  ObservedPath obs;
  obs.x0 = path.x0;
  obs.horizon = path.horizon;
  Index current = path.x0;
  for (const auto &e : path.events) {
    if (e.l != current) {
      obs.jumps.push_back({e.time, e.l});
      current = e.l;
    }
  }
  return obs;
}

std::size_t count_simultaneous_jumps(const JointPath &path) {
  std::size_t count = 0;
  Index l = path.x0;
  Index i = path.s0;
  for (const auto &e : path.events) {
    if (e.l != l && e.i != i) {
      ++count;
    }
    l = e.l;
    i = e.i;
  }
  return count;
}

ObservedPath ObservedPath::truncated() const {
  ObservedPath out = *this;
  out.horizon = jumps.empty() ? 0.0 : jumps.back().t;
  return out;
}

void ObservedPath::check(Index d) const {
  auto fail = [](std::size_t k, const std::string &what) {
    std::ostringstream os;
    os << "path record " << k << ": " << what;
    throw ValidationError({os.str()});
  };
  if (x0 < 0 || x0 >= d) {
    fail(0, "initial state out of range");
  }
  if (!std::isfinite(horizon) || horizon < 0) {
    fail(0, "horizon must be finite and >= 0");
  }
  double prev_t = 0;
  Index prev_x = x0;
  for (std::size_t k = 0; k < jumps.size(); ++k) {
    const auto &j = jumps[k];
    if (!std::isfinite(j.t) || !(j.t > prev_t)) {
      fail(k + 1, "jump times must be finite and strictly increasing");
    }
    if (j.x < 0 || j.x >= d) {
      fail(k + 1, "state out of range");
    }
    if (j.x == prev_x) {
      fail(k + 1, "state equals the previous state");
    }
    prev_t = j.t;
    prev_x = j.x;
  }
  if (!jumps.empty() && jumps.back().t > horizon) {
    fail(jumps.size(), "jump after the horizon");
  }
}

} // namespace bmc
