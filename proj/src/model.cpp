#include "bmc/model.hpp"

#include <cmath>
#include <sstream>

namespace bmc {

std::string joint_label(Index l, Index i) {
  std::ostringstream os;
  os << "(" << l + 1 << "," << i + 1 << ")";
  return os.str();
}

namespace {

void require_shape(Index r, Index d, const Matrix &h) {
  if (r < 1 || d < 1) {
    throw DimensionError("generator: r and d must be at least 1");
  }
  if (h.rows() != r * d || h.cols() != r * d) {
    std::ostringstream os;
    os << "generator: expected a " << r * d << "x" << r * d
       << " matrix, got " << h.rows() << "x" << h.cols();
    throw DimensionError(os.str());
  }
}

void reset_diagonal(Matrix &h) {
  for (Index a = 0; a < h.rows(); ++a) {
    h(a, a) = 0;
    h(a, a) = -h.row(a).sum();
  }
}

std::string entry_label(Index r, Index a, Index b) {
  return joint_label(a / r, a % r) + "->" + joint_label(b / r, b % r);
}

// Marks every vertex reachable from 0 along edges a -> b with h(a, b) > 0,
// or along reversed edges when `reverse` is set.
std::vector<bool> reachable(const Matrix &h, bool reverse) {
  const Index n = h.rows();
  std::vector<bool> seen(n, false);
  std::vector<Index> stack{0};
  seen[0] = true;
  while (!stack.empty()) {
    const Index a = stack.back();
    stack.pop_back();
    for (Index b = 0; b < n; ++b) {
      const double rate = reverse ? h(b, a) : h(a, b);
      if (b != a && rate > 0 && !seen[b]) {
        seen[b] = true;
        stack.push_back(b);
      }
    }
  }
  return seen;
}

bool near(const Matrix &a, const Matrix &b, double tol) {
  const double scale = std::max({1.0, a.cwiseAbs().maxCoeff(),
                                 b.cwiseAbs().maxCoeff()});
  return (a - b).cwiseAbs().maxCoeff() <= tol * scale;
}

bool is_diagonal(const Matrix &a, double tol) {
  Matrix off = a;
  off.diagonal().setZero();
  const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
  return off.cwiseAbs().maxCoeff() <= tol * scale;
}

} // namespace

ValidationReport validate(const Matrix &h, Index r, Index d) {
  ValidationReport report;
  if (r < 1 || d < 1 || h.rows() != r * d || h.cols() != r * d) {
    report.violations.push_back("dimension mismatch");
    return report;
  }
  if (!h.allFinite()) {
    report.violations.push_back("non-finite entry");
    return report;
  }
  const Index n = r * d;
  for (Index a = 0; a < n; ++a) {
    for (Index b = 0; b < n; ++b) {
      if (a != b && h(a, b) < 0) {
        std::ostringstream os;
        os << "negative off-diagonal at " << entry_label(r, a, b) << " ("
           << h(a, b) << ")";
        report.violations.push_back(os.str());
      }
    }
  }
  for (Index a = 0; a < n; ++a) {
    const double sum = h.row(a).sum();
    const double scale = std::max(1.0, std::abs(h(a, a)));
    if (std::abs(sum) > kStructuralTol * scale) {
      std::ostringstream os;
      os << "nonzero row sum at " << joint_label(a / r, a % r) << " (" << sum
         << ")";
      report.violations.push_back(os.str());
    }
  }
  if (!report.ok()) {
    return report;
  }
  for (Index a = 0; a < n; ++a) {
    const Index l = a / r;
    double exit = 0;
    for (Index b = 0; b < n; ++b) {
      if (b / r != l) {
        exit += h(a, b);
      }
    }
    if (!(exit > 0)) {
      report.violations.push_back(
          "block H_" + std::to_string(l + 1) + std::to_string(l + 1) +
          " not strictly diagonally dominant at row " +
          joint_label(l, a % r) + " (no observable exit)");
    }
  }
  const auto forward = reachable(h, false);
  const auto backward = reachable(h, true);
  for (Index a = 0; a < n; ++a) {
    if (!forward[a] || !backward[a]) {
      report.reducible = true;
      report.violations.push_back("reducible: joint state " +
                                  joint_label(a / r, a % r) +
                                  " not strongly connected to (1,1)");
      break;
    }
  }
  return report;
}

ValidationReport validate(const Generator &g) {
  return validate(g.matrix(), g.r(), g.d());
}

Generator Generator::from_rates(Index r, Index d, const Matrix &h) {
  require_shape(r, d, h);
  Matrix copy = h;
  std::vector<std::string> violations;
  for (Index a = 0; a < copy.rows(); ++a) {
    for (Index b = 0; b < copy.cols(); ++b) {
      if (a == b) {
        continue;
      }
      if (!std::isfinite(copy(a, b))) {
        violations.push_back("non-finite off-diagonal at " +
                             entry_label(r, a, b));
      } else if (copy(a, b) < 0) {
        std::ostringstream os;
        os << "negative off-diagonal at " << entry_label(r, a, b) << " ("
           << copy(a, b) << ")";
        violations.push_back(os.str());
      }
    }
  }
  if (!violations.empty()) {
    throw ValidationError(std::move(violations));
  }
  reset_diagonal(copy);
  return Generator(r, d, std::move(copy));
}

Generator Generator::from_matrix(Index r, Index d, const Matrix &h) {
  Generator g = from_rates(r, d, h);
  auto report = validate(g);
  if (!report.ok()) {
    throw ValidationError(std::move(report.violations));
  }
  return g;
}

Generator
Generator::from_blocks(const std::vector<std::vector<Matrix>> &blocks) {
  const Index d = static_cast<Index>(blocks.size());
  if (d == 0 || blocks[0].empty()) {
    throw DimensionError("generator: no blocks");
  }
  const Index r = blocks[0][0].rows();
  Matrix h(r * d, r * d);
  for (Index l = 0; l < d; ++l) {
    if (static_cast<Index>(blocks[l].size()) != d) {
      throw DimensionError("generator: block row " + std::to_string(l + 1) +
                           " does not have d blocks");
    }
    for (Index n = 0; n < d; ++n) {
      const Matrix &b = blocks[l][n];
      if (b.rows() != r || b.cols() != r) {
        throw DimensionError("generator: block H_" + std::to_string(l + 1) +
                             std::to_string(n + 1) + " is not r x r");
      }
      h.block(l * r, n * r, r, r) = b;
    }
  }
  return from_matrix(r, d, h);
}

Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>
Generator::zero_pattern() const {
  Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> zeros =
      (h_.array() == 0.0).matrix();
  zeros.diagonal().setConstant(false);
  return zeros;
}

InitialDistribution InitialDistribution::uniform(Index x0, Index r) {
  return {x0, RowVector::Constant(r, 1.0 / static_cast<double>(r))};
}

void InitialDistribution::check(Index r, Index d) const {
  if (x0 < 0 || x0 >= d) {
    throw DomainError("initial distribution: observable state out of range");
  }
  if (mu.size() != r) {
    throw DimensionError("initial distribution: mu must have length r");
  }
  if (!mu.allFinite() || (mu.array() < 0).any() ||
      std::abs(mu.sum() - 1.0) > 1e-12) {
    throw DomainError("initial distribution: mu is not a probability vector");
  }
}

namespace {

void require_state(const Generator &g, Index l, const char *op) {
  if (l < 0 || l >= g.d()) {
    throw DimensionError(std::string(op) + ": observable state out of range");
  }
}

void require_duration(double tau, const char *op) {
  if (!(tau >= 0) || !std::isfinite(tau)) {
    throw DomainError(std::string(op) + ": duration must be finite and >= 0");
  }
}

} // namespace

Matrix transition_density(const Generator &g, Index l, Index n, double tau) {
  require_state(g, l, "transition_density");
  require_state(g, n, "transition_density");
  require_duration(tau, "transition_density");
  if (l == n) {
    throw DomainError("transition_density: invalid pair l == n");
  }
  return expm(g.block(l, l) * tau) * g.block(l, n);
}

Matrix survival(const Generator &g, Index l, double tau) {
  require_state(g, l, "survival");
  require_duration(tau, "survival");
  return expm(g.block(l, l) * tau);
}

Matrix embedded_chain(const Generator &g) {
  const Index r = g.r();
  const Index d = g.d();
  Matrix a = Matrix::Zero(g.states(), g.states());
  for (Index l = 0; l < d; ++l) {
    Eigen::FullPivLU<Matrix> lu(g.block(l, l));
    if (!lu.isInvertible()) {
      throw NumericalBreakdown("embedded_chain: singular block H_" +
                               std::to_string(l + 1) + std::to_string(l + 1));
    }
    for (Index n = 0; n < d; ++n) {
      if (n != l) {
        a.block(l * r, n * r, r, r) = -lu.solve(Matrix(g.block(l, n)));
      }
    }
  }
  return a;
}

StationaryAnalysis stationary(const Generator &g) {
  StationaryAnalysis s;
  s.pi = stationary_row_vector(g.matrix(), ChainKind::generator);
  s.embedded = embedded_chain(g);
  s.nu = stationary_row_vector(s.embedded, ChainKind::stochastic);
  s.d_h = Matrix::Zero(g.states(), g.states());
  for (Index l = 0; l < g.d(); ++l) {
    s.d_h.block(l * g.r(), l * g.r(), g.r(), g.r()) = g.block(l, l);
  }
  return s;
}

double PhaseTypeDwell::density(double tau) const {
  require_duration(tau, "PhaseTypeDwell::density");
  return (alpha * expm(sub_generator * tau) * exit_vector).value();
}

double PhaseTypeDwell::cdf(double tau) const {
  require_duration(tau, "PhaseTypeDwell::cdf");
  return 1.0 - (alpha * expm(sub_generator * tau)).sum();
}

double PhaseTypeDwell::total_mass() const {
  return (alpha * (-sub_generator).partialPivLu().solve(exit_vector)).value();
}

double PhaseTypeDwell::moment(int k) const {
  if (k < 0) {
    throw DomainError("PhaseTypeDwell::moment: order must be >= 0");
  }
  const auto lu = (-sub_generator).partialPivLu();
  Vector v = Vector::Ones(sub_generator.rows());
  double factorial = 1;
  for (int j = 1; j <= k; ++j) {
    v = lu.solve(v);
    factorial *= j;
  }
  return factorial * (alpha * v).value();
}

Matrix PhaseTypeDwell::absorbing_generator() const {
  const Index r = sub_generator.rows();
  Matrix gen = Matrix::Zero(r + 1, r + 1);
  gen.topLeftCorner(r, r) = sub_generator;
  gen.topRightCorner(r, 1) = exit_vector;
  return gen;
}

PhaseTypeDwell dwell_distribution(const Generator &g,
                                  const StationaryAnalysis &stat, Index l) {
  require_state(g, l, "dwell_distribution");
  const Index r = g.r();
  const RowVector nu_l = stat.nu.segment(l * r, r);
  const double mass = nu_l.sum();
  if (!(mass > 0)) {
    throw DomainError("dwell_distribution: observable state " +
                      std::to_string(l + 1) + " is unreachable");
  }
  PhaseTypeDwell dwell;
  dwell.alpha = nu_l / mass;
  dwell.sub_generator = g.block(l, l);
  dwell.exit_vector = Vector::Zero(r);
  for (Index n = 0; n < g.d(); ++n) {
    if (n != l) {
      dwell.exit_vector += g.block(l, n).rowwise().sum();
    }
  }
  return dwell;
}

PhaseTypeDwell dwell_distribution(const Generator &g, Index l) {
  return dwell_distribution(g, stationary(g), l);
}

std::optional<Matrix> underlying_is_markov(const Generator &g, double tol) {
  auto block_row_sum = [&](Index l) {
    Matrix q = Matrix::Zero(g.r(), g.r());
    for (Index n = 0; n < g.d(); ++n) {
      q += g.block(l, n);
    }
    return q;
  };
  const Matrix q = block_row_sum(0);
  for (Index l = 1; l < g.d(); ++l) {
    if (!near(block_row_sum(l), q, tol)) {
      return std::nullopt;
    }
  }
  return q;
}

namespace {

void require_rates(const Matrix &m, const std::string &what,
                   std::vector<std::string> &violations) {
  if (!m.allFinite()) {
    violations.push_back(what + ": non-finite entry");
    return;
  }
  for (Index a = 0; a < m.rows(); ++a) {
    for (Index b = 0; b < m.cols(); ++b) {
      if (a != b && m(a, b) < 0) {
        violations.push_back(what + ": negative off-diagonal at (" +
                             std::to_string(a + 1) + "," +
                             std::to_string(b + 1) + ")");
      }
    }
  }
}

} // namespace

Generator make_mmmp(const Matrix &q, const std::vector<Matrix> &regimes) {
  const Index r = q.rows();
  if (r < 1 || q.cols() != r || static_cast<Index>(regimes.size()) != r) {
    throw DimensionError("make_mmmp: need an r x r q and r regime generators");
  }
  const Index d = regimes.front().rows();
  std::vector<std::string> violations;
  require_rates(q, "make_mmmp: Q", violations);
  for (Index i = 0; i < r; ++i) {
    if (regimes[i].rows() != d || regimes[i].cols() != d) {
      throw DimensionError("make_mmmp: regime generators must all be d x d");
    }
    require_rates(regimes[i], "make_mmmp: G_" + std::to_string(i + 1),
                  violations);
  }
  if (!violations.empty()) {
    throw ValidationError(std::move(violations));
  }
  Matrix h = Matrix::Zero(r * d, r * d);
  for (Index l = 0; l < d; ++l) {
    for (Index i = 0; i < r; ++i) {
      for (Index j = 0; j < r; ++j) {
        if (i != j) {
          h(l * r + i, l * r + j) = q(i, j);
        }
      }
      for (Index n = 0; n < d; ++n) {
        if (n != l) {
          h(l * r + i, n * r + i) = regimes[i](l, n);
        }
      }
    }
  }
  return Generator::from_rates(r, d, h);
}

Generator make_bmap(const std::vector<Matrix> &batches) {
  const Index d = static_cast<Index>(batches.size());
  if (d < 2) {
    throw DomainError("make_bmap: need d >= 2 blocks D_0..D_{d-1}");
  }
  const Index r = batches[0].rows();
  std::vector<std::string> violations;
  Matrix total = Matrix::Zero(r, r);
  for (Index m = 0; m < d; ++m) {
    const Matrix &dm = batches[m];
    if (dm.rows() != r || dm.cols() != r) {
      throw DimensionError("make_bmap: every D_m must be r x r");
    }
    if (!dm.allFinite()) {
      violations.push_back("make_bmap: D_" + std::to_string(m) +
                           " has a non-finite entry");
      continue;
    }
    for (Index i = 0; i < r; ++i) {
      for (Index j = 0; j < r; ++j) {
        if ((m > 0 || i != j) && dm(i, j) < 0) {
          violations.push_back("make_bmap: D_" + std::to_string(m) +
                               " has a negative entry at (" +
                               std::to_string(i + 1) + "," +
                               std::to_string(j + 1) + ")");
        }
      }
    }
    total += dm;
  }
  for (Index i = 0; i < r; ++i) {
    const double scale = std::max(1.0, std::abs(batches[0](i, i)));
    if (std::abs(total.row(i).sum()) > kStructuralTol * scale) {
      violations.push_back("make_bmap: row " + std::to_string(i + 1) +
                           " of sum_m D_m does not sum to zero");
    }
  }
  if (!violations.empty()) {
    throw ValidationError(std::move(violations));
  }
  Matrix h(r * d, r * d);
  for (Index l = 0; l < d; ++l) {
    for (Index n = 0; n < d; ++n) {
      h.block(l * r, n * r, r, r) = batches[((n - l) % d + d) % d];
    }
  }
  return Generator::from_matrix(r, d, h);
}

StructureFlags detect_structure(const Generator &g, double tol) {
  const Index d = g.d();
  StructureFlags flags;
  bool diagonal_offblocks = true;
  for (Index l = 0; l < d && diagonal_offblocks; ++l) {
    for (Index n = 0; n < d; ++n) {
      if (n != l && !is_diagonal(g.block(l, n), tol)) {
        diagonal_offblocks = false;
        break;
      }
    }
  }
  flags.mmmp = diagonal_offblocks && underlying_is_markov(g, tol).has_value();

  if (d >= 2) {
    bool circulant = true;
    for (Index l = 0; l < d && circulant; ++l) {
      for (Index n = 0; n < d; ++n) {
        if (!near(g.block(l, n), g.block((l + 1) % d, (n + 1) % d), tol)) {
          circulant = false;
          break;
        }
      }
    }
    flags.bmap = circulant;
  }
  if (flags.bmap) {
    // D_m = H_{1,1+m}; a MAP has no batches of size >= 2.
    bool single_arrivals = true;
    for (Index m = 2; m < d; ++m) {
      if (g.block(0, m).cwiseAbs().maxCoeff() > tol) {
        single_arrivals = false;
      }
    }
    flags.map = single_arrivals;
    flags.mmpp = flags.map && is_diagonal(g.block(0, 1), tol);
  }
  flags.general = !flags.mmmp && !flags.bmap;
  return flags;
}

std::string StructureFlags::to_string() const {
  std::string out;
  auto add = [&](bool on, const char *name) {
    if (on) {
      out += out.empty() ? "" : ",";
      out += name;
    }
  };
  add(general, "general");
  add(mmmp, "mmmp");
  add(bmap, "bmap");
  add(map, "map");
  add(mmpp, "mmpp");
  return out;
}

} // namespace bmc
