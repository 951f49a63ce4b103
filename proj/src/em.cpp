#include "bmc/em.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace bmc {

namespace {

double clamp_negative(double v, const char *what, Index a) {
  if (!std::isfinite(v)) {
    std::ostringstream os;
    os << "e_step: non-finite " << what << " at joint index " << a;
    throw NumericalBreakdown(os.str());
  }
  if (v < 0) {
    if (v < -kNegativeClamp) {
      std::ostringstream os;
      os << "e_step: negative " << what << " " << v << " at joint index " << a;
      throw NumericalBreakdown(os.str());
    }
    return 0;
  }
  return v;
}

} // namespace

SufficientStats e_step(const Generator &g, const InitialDistribution &init,
                       const ObservedPath &path_in) {
  const ObservedPath path = path_in.truncated();
  const SegmentMatrices seg = segment_matrices(g, path);
  const ForwardBackwardCache cache = forward_backward(g, init, path, seg);
  const Index r = g.r();
  const Index d = g.d();
  const std::size_t n = path.size();

  // within[l] accumulates I_k' / c_{k+1}; across[l * d + n] accumulates
  // J_k' / c_{k+1}.
  std::vector<Matrix> within(d, Matrix::Zero(r, r));
  std::vector<Matrix> across(d * d, Matrix::Zero(r, r));
  for (std::size_t k = 0; k < n; ++k) {
    const Index l = path.state(k);
    const Index next = path.state(k + 1);
    const double c = cache.c(k + 1);
    const Vector back = cache.backward(k + 2);
    const RowVector fwd = cache.forward(k);
    const Matrix coupling = (g.block(l, next) * back) * fwd;
    const Matrix integral =
        van_loan_integral(g.block(l, l), coupling, g.block(l, l), path.dwell(k + 1));
    if (!integral.allFinite()) {
      std::ostringstream os;
      os << "e_step: non-finite integral in segment " << k;
      throw NumericalBreakdown(os.str());
    }
    within[l] += integral.transpose() / c;
    across[l * d + next] += (back * (fwd * seg.survival[k])).transpose() / c;
  }

  SufficientStats stats;
  stats.r = r;
  stats.d = d;
  stats.loglik = cache.loglik;
  stats.horizon = path.horizon;
  stats.jumps = Matrix::Zero(g.states(), g.states());
  stats.dwell = Vector::Zero(g.states());
  for (Index l = 0; l < d; ++l) {
    for (Index m = 0; m < d; ++m) {
      const Matrix &acc = (l == m) ? within[l] : across[l * d + m];
      stats.jumps.block(l * r, m * r, r, r) = g.block(l, m).cwiseProduct(acc);
    }
    for (Index i = 0; i < r; ++i) {
      stats.dwell(l * r + i) = within[l](i, i);
    }
  }
  stats.jumps.diagonal().setZero();
  for (Index a = 0; a < g.states(); ++a) {
    stats.dwell(a) = clamp_negative(stats.dwell(a), "dwell time", a);
    for (Index b = 0; b < g.states(); ++b) {
      stats.jumps(a, b) = clamp_negative(stats.jumps(a, b), "jump count", a);
    }
  }
  return stats;
}

MStepResult m_step(const SufficientStats &stats, const std::optional<Mask> &mask,
                   const Generator *previous) {
  const Index states = stats.r * stats.d;
  if (stats.jumps.rows() != states || stats.jumps.cols() != states ||
      stats.dwell.size() != states) {
    throw DimensionError("m_step: statistics do not match r and d");
  }
  if (mask && (mask->rows() != states || mask->cols() != states)) {
    throw DimensionError("m_step: mask does not match r and d");
  }
  if (previous && previous->states() != states) {
    throw DimensionError("m_step: previous iterate does not match r and d");
  }
  Matrix h = Matrix::Zero(states, states);
  std::vector<Index> frozen;
  for (Index a = 0; a < states; ++a) {
    const double dwell = stats.dwell(a);
    if (!(dwell > 0)) {
      if (stats.jumps.row(a).sum() > kNegativeClamp) {
        throw DegenerateState(int(a / stats.r), int(a % stats.r));
      }
      frozen.push_back(a);
      if (previous) {
        h.row(a) = previous->matrix().row(a);
      }
      continue;
    }
    for (Index b = 0; b < states; ++b) {
      if (b != a && (!mask || (*mask)(a, b))) {
        h(a, b) = stats.jumps(a, b) / dwell;
      }
    }
  }
  return {Generator::from_rates(stats.r, stats.d, h), std::move(frozen)};
}

std::string to_string(Termination t) {
  switch (t) {
  case Termination::converged:
    return "converged";
  case Termination::max_iters:
    return "max_iters";
  case Termination::degenerate_state:
    return "degenerate_state";
  case Termination::numerical_breakdown:
    return "numerical_breakdown";
  }
  return "unknown";
}

FitResult fit(const Generator &g0, const InitialDistribution &init_in,
              const ObservedPath &path, const EmConfig &cfg) {
  if (!(cfg.rel_tol > 0)) {
    throw DomainError("fit: rel_tol must be > 0");
  }
  if (cfg.max_iters < 0) {
    throw DomainError("fit: max_iters must be >= 0");
  }
  if (path.size() == 0) {
    throw DomainError("fit: the path has no observable jumps");
  }
  auto report = validate(g0);
  if (!report.ok()) {
    throw ValidationError(std::move(report.violations));
  }
  Generator current = g0;
  if (cfg.structural_mask) {
    const Mask &mask = *cfg.structural_mask;
    if (mask.rows() != g0.states() || mask.cols() != g0.states()) {
      throw DimensionError("fit: mask does not match the generator");
    }
    Matrix masked = g0.matrix();
    for (Index a = 0; a < masked.rows(); ++a) {
      for (Index b = 0; b < masked.cols(); ++b) {
        if (a != b && !mask(a, b)) {
          masked(a, b) = 0;
        }
      }
    }
    current = Generator::from_matrix(g0.r(), g0.d(), masked);
  }

  InitialDistribution init = init_in;
  FitResult result{current, {}, 0, Termination::max_iters, {}, {}};
  while (true) {
    if (cfg.initial_from_alpha) {
      init.mu = dwell_distribution(current, init.x0).alpha;
    }
    std::optional<SufficientStats> stats;
    try {
      stats = e_step(current, init, path);
    } catch (const ZeroLikelihood &e) {
      if (result.loglik_trace.empty()) {
        throw;
      }
      result.termination = Termination::numerical_breakdown;
      result.message = e.what();
      break;
    } catch (const NumericalBreakdown &e) {
      if (result.loglik_trace.empty()) {
        throw;
      }
      result.termination = Termination::numerical_breakdown;
      result.message = e.what();
      break;
    }
    result.estimate = current;
    result.loglik_trace.push_back(stats->loglik);
    const std::size_t len = result.loglik_trace.size();
    if (len >= 2) {
      const double prev = result.loglik_trace[len - 2];
      const double change = std::abs(stats->loglik - prev) /
                            std::max(std::abs(prev), 1e-300);
      if (change < cfg.rel_tol) {
        result.termination = Termination::converged;
        break;
      }
    }
    if (result.iterations >= cfg.max_iters) {
      result.termination = Termination::max_iters;
      break;
    }
    try {
      MStepResult next = m_step(*stats, cfg.structural_mask, &current);
      for (Index a : next.frozen_states) {
        if (std::find(result.frozen_states.begin(), result.frozen_states.end(),
                      a) == result.frozen_states.end()) {
          result.frozen_states.push_back(a);
        }
      }
      current = std::move(next.estimate);
    } catch (const DegenerateState &e) {
      result.termination = Termination::degenerate_state;
      result.message = e.what();
      break;
    }
    ++result.iterations;
  }
  return result;
}

} // namespace bmc
