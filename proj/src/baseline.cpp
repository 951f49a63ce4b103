#include "bmc/baseline.hpp"

#include <cmath>
#include <sstream>

#include "bmc/inference.hpp"

namespace bmc {

SampledPath time_sample(const ObservedPath &path, double delta) {
  if (!(delta > 0) || !std::isfinite(delta)) {
    throw DomainError("time_sample: delta must be finite and > 0");
  }
  SampledPath out;
  out.delta = delta;
  const auto count = static_cast<std::size_t>(std::floor(path.horizon / delta));
  out.samples.reserve(count + 1);
  std::size_t next = 0;
  Index state = path.x0;
  for (std::size_t k = 0; k <= count; ++k) {
    const double t = static_cast<double>(k) * delta;
    while (next < path.jumps.size() && path.jumps[next].t <= t) {
      state = path.jumps[next].x;
      ++next;
    }
    out.samples.push_back(state);
  }
  return out;
}

TransitionMatrixEstimate initial_transition_matrix(const Generator &h0,
                                                   double delta) {
  if (!(delta > 0)) {
    throw DomainError("initial_transition_matrix: delta must be > 0");
  }
  Matrix rm = expm(h0.matrix() * delta);
  // exp of a generator is stochastic up to rounding; remove the rounding.
  rm = rm.cwiseMax(0.0);
  for (Index a = 0; a < rm.rows(); ++a) {
    rm.row(a) /= rm.row(a).sum();
  }
  return {rm};
}

namespace {

struct DiscretePass {
  Matrix alpha; // (K + 1) x r, scaled forward
  std::vector<double> scale;
  double loglik = 0;
};

void require_sampled(const SampledPath &sampled, Index r, const Matrix &rm) {
  if (r < 1 || rm.rows() != rm.cols() || rm.rows() % r != 0) {
    throw DimensionError("discrete fit: transition matrix is not (rd) x (rd)");
  }
  const Index d = rm.rows() / r;
  if (sampled.samples.empty()) {
    throw DomainError("discrete fit: no samples");
  }
  for (Index x : sampled.samples) {
    if (x < 0 || x >= d) {
      throw DomainError("discrete fit: sample state out of range");
    }
  }
}

DiscretePass forward_pass(const SampledPath &sampled, Index r,
                          const Matrix &rm) {
  const auto &x = sampled.samples;
  const std::size_t steps = x.size() - 1;
  DiscretePass pass;
  pass.alpha.resize(Index(steps) + 1, r);
  pass.scale.resize(steps);
  pass.alpha.row(0).setConstant(1.0 / double(r));
  for (std::size_t k = 1; k <= steps; ++k) {
    const Index from = x[k - 1] * r;
    const Index to = x[k] * r;
    double c = 0;
    for (Index j = 0; j < r; ++j) {
      double v = 0;
      for (Index i = 0; i < r; ++i) {
        v += pass.alpha(Index(k) - 1, i) * rm(from + i, to + j);
      }
      pass.alpha(Index(k), j) = v;
      c += v;
    }
    if (!std::isfinite(c) || c < 1e-300) {
      std::ostringstream os;
      os << "discrete fit: zero likelihood at sample " << k;
      throw ZeroLikelihood(k, os.str());
    }
    pass.alpha.row(Index(k)) /= c;
    pass.scale[k - 1] = c;
    pass.loglik += std::log(c);
  }
  return pass;
}

} // namespace

double discrete_log_likelihood(const SampledPath &sampled, Index r,
                               const Matrix &r_hat) {
  require_sampled(sampled, r, r_hat);
  return forward_pass(sampled, r, r_hat).loglik;
}

DiscreteFitResult fit_discrete(const SampledPath &sampled, Index r,
                               const TransitionMatrixEstimate &r0,
                               const DiscreteFitConfig &cfg) {
  require_sampled(sampled, r, r0.r_hat);
  const Index states = r0.r_hat.rows();
  for (Index a = 0; a < states; ++a) {
    if ((r0.r_hat.row(a).array() < 0).any() ||
        std::abs(r0.r_hat.row(a).sum() - 1.0) > 1e-8) {
      throw DomainError("discrete fit: R0 is not row-stochastic");
    }
  }
  const auto &x = sampled.samples;
  const std::size_t steps = x.size() - 1;

  DiscreteFitResult result;
  Matrix current = r0.r_hat;
  Matrix counts(states, states);
  Vector visits(states);
  Vector beta(r), beta_prev(r);
  while (true) {
    const DiscretePass pass = forward_pass(sampled, r, current);
    result.loglik_trace.push_back(pass.loglik);
    const std::size_t len = result.loglik_trace.size();
    if (len >= 2) {
      const double prev = result.loglik_trace[len - 2];
      if (std::abs(pass.loglik - prev) / std::max(std::abs(prev), 1e-300) <
          cfg.rel_tol) {
        result.converged = true;
        break;
      }
    }
    if (result.iterations >= cfg.max_iters || steps == 0) {
      break;
    }

    counts.setZero();
    visits.setZero();
    beta.setOnes();
    for (std::size_t k = steps; k >= 1; --k) {
      const Index from = x[k - 1] * r;
      const Index to = x[k] * r;
      const double c = pass.scale[k - 1];
      beta_prev.setZero();
      for (Index i = 0; i < r; ++i) {
        const double a = pass.alpha(Index(k) - 1, i);
        for (Index j = 0; j < r; ++j) {
          const double w = current(from + i, to + j) * beta(j) / c;
          beta_prev(i) += w;
          const double xi = a * w;
          counts(from + i, to + j) += xi;
          visits(from + i) += xi;
        }
      }
      beta.swap(beta_prev);
    }
    for (Index a = 0; a < states; ++a) {
      if (visits(a) > 0) {
        current.row(a) = counts.row(a) / visits(a);
      }
    }
    ++result.iterations;
  }
  result.estimate.r_hat = current;
  return result;
}

std::string to_string(RecoveryMethod m) {
  switch (m) {
  case RecoveryMethod::matrix_log:
    return "matrix_log";
  case RecoveryMethod::first_order:
    return "first_order";
  case RecoveryMethod::first_order_after_logm_failure:
    return "first_order_after_logm_failure";
  }
  return "unknown";
}

RecoveredGenerator recover_generator(const Matrix &r_hat, double delta,
                                     Index r, Index d) {
  if (!(delta > 0) || !std::isfinite(delta)) {
    throw DomainError("recover_generator: delta must be finite and > 0");
  }
  if (r_hat.rows() != r * d || r_hat.cols() != r * d) {
    throw DimensionError("recover_generator: R is not (rd) x (rd)");
  }
  for (Index a = 0; a < r_hat.rows(); ++a) {
    if ((r_hat.row(a).array() < -1e-12).any() ||
        std::abs(r_hat.row(a).sum() - 1.0) > 1e-8) {
      throw DomainError("recover_generator: R is not row-stochastic");
    }
  }
  const Index n = r_hat.rows();
  RecoveryReport report;
  Matrix h;
  if ((r_hat.diagonal().array() > 0.5).all()) {
    try {
      h = principal_logm(r_hat) / delta;
      report.method = RecoveryMethod::matrix_log;
      for (Index a = 0; a < n; ++a) {
        for (Index b = 0; b < n; ++b) {
          if (a != b && h(a, b) < 0) {
            report.clamped_mass += -h(a, b);
            h(a, b) = 0;
          }
        }
      }
    } catch (const LogmFailure &e) {
      report.method = RecoveryMethod::first_order_after_logm_failure;
      report.warning = e.what();
    }
  } else {
    report.method = RecoveryMethod::first_order;
  }
  if (report.method != RecoveryMethod::matrix_log) {
    h = (r_hat - Matrix::Identity(n, n)) / delta;
    for (Index a = 0; a < n; ++a) {
      for (Index b = 0; b < n; ++b) {
        if (a != b && h(a, b) < 0) {
          h(a, b) = 0;
        }
      }
    }
  }
  Generator g = Generator::from_rates(r, d, h);
  report.irreducible = validate(g).ok();
  return {std::move(g), std::move(report)};
}

BaumResult fit_baum(const Generator &h0, const ObservedPath &path, double delta,
                    const DiscreteFitConfig &cfg) {
  SampledPath sampled = time_sample(path, delta);
  DiscreteFitResult discrete = fit_discrete(
      sampled, h0.r(), initial_transition_matrix(h0, delta), cfg);
  RecoveredGenerator recovered =
      recover_generator(discrete.estimate.r_hat, delta, h0.r(), h0.d());
  return {std::move(sampled), std::move(discrete), std::move(recovered)};
}

} // namespace bmc
