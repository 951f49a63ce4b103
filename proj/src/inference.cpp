#include "bmc/inference.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace bmc {

namespace {

void require_inputs(const Generator &g, const InitialDistribution &init,
                    const ObservedPath &path) {
  init.check(g.r(), g.d());
  path.check(g.d());
  if (path.x0 != init.x0) {
    throw DomainError("forward_backward: path and initial distribution start "
                      "in different observable states");
  }
  if (path.size() == 0) {
    throw DomainError("forward_backward: path has no observable jumps");
  }
}

} // namespace

SegmentMatrices segment_matrices(const Generator &g, const ObservedPath &path) {
  SegmentMatrices seg;
  const std::size_t n = path.size();
  seg.survival.reserve(n);
  seg.density.reserve(n);
  for (std::size_t k = 0; k < n; ++k) {
    const Index l = path.state(k);
    const Index next = path.state(k + 1);
    seg.survival.push_back(expm(g.block(l, l) * path.dwell(k + 1)));
    seg.density.push_back(seg.survival.back() * g.block(l, next));
  }
  return seg;
}

ForwardBackwardCache forward_backward(const Generator &g,
                                      const InitialDistribution &init,
                                      const ObservedPath &path) {
  require_inputs(g, init, path);
  return forward_backward(g, init, path, segment_matrices(g, path));
}

ForwardBackwardCache forward_backward(const Generator &g,
                                      const InitialDistribution &init,
                                      const ObservedPath &path,
                                      const SegmentMatrices &seg) {
  require_inputs(g, init, path);
  const std::size_t n = path.size();
  const Index r = g.r();
  if (seg.density.size() != n) {
    throw DimensionError("forward_backward: segment matrices do not match "
                         "the path");
  }

  ForwardBackwardCache cache;
  cache.ltilde.resize(Index(n) + 1, r);
  cache.rtilde.resize(r, Index(n) + 1);
  cache.scale.resize(n);

  cache.ltilde.row(0) = init.mu;
  for (std::size_t k = 1; k <= n; ++k) {
    const RowVector next = cache.ltilde.row(Index(k) - 1) * seg.density[k - 1];
    const double c = next.sum();
    if (!std::isfinite(c) || c < kMinScale) {
      std::ostringstream os;
      os << "zero likelihood at observable jump " << k << " (c_k = " << c
         << ")";
      throw ZeroLikelihood(k, os.str());
    }
    cache.scale[k - 1] = c;
    cache.ltilde.row(Index(k)) = next / c;
  }

  const Index last = path.state(n);
  const double censored = path.horizon - path.time(n);
  if (censored > 0) {
    cache.rtilde.col(Index(n)) =
        expm(g.block(last, last) * censored).rowwise().sum();
  } else {
    cache.rtilde.col(Index(n)).setOnes();
  }
  for (std::size_t k = n; k >= 1; --k) {
    cache.rtilde.col(Index(k) - 1) =
        seg.density[k - 1] * cache.rtilde.col(Index(k)) / cache.scale[k - 1];
  }

  cache.tail = (cache.ltilde.row(Index(n)) * cache.rtilde.col(Index(n))).value();
  if (!std::isfinite(cache.tail) || cache.tail < kMinScale) {
    throw ZeroLikelihood(n, "zero likelihood of the censored tail");
  }
  double loglik = 0;
  for (double c : cache.scale) {
    loglik += std::log(c);
  }
  cache.loglik = loglik + std::log(cache.tail);
  return cache;
}

double log_likelihood(const Generator &g, const InitialDistribution &init,
                      const ObservedPath &path) {
  return forward_backward(g, init, path).loglik;
}

RowVector filtered_state(const ForwardBackwardCache &cache, const Generator &g,
                         const ObservedPath &path, double t) {
  if (!(t >= 0) || t > path.horizon) {
    throw DomainError("filtered_state: time outside [0, T]");
  }
  const auto it = std::upper_bound(
      path.jumps.begin(), path.jumps.end(), t,
      [](double value, const ObservedJump &j) { return value < j.t; });
  const auto k = static_cast<std::size_t>(it - path.jumps.begin());
  const RowVector start = cache.forward(k);
  const double elapsed = t - path.time(k);
  if (elapsed == 0) {
    return start;
  }
  const Index l = path.state(k);
  const RowVector ahead = start * expm(g.block(l, l) * elapsed);
  return ahead / ahead.sum();
}

} // namespace bmc
