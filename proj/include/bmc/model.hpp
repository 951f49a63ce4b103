#ifndef BMC_MODEL_HPP_
#define BMC_MODEL_HPP_

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "bmc/linalg.hpp"

namespace bmc {

using Index = Eigen::Index;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;

/// Generator of a bivariate chain Z = (X, S) with d observable and r
/// underlying states. Joint states are ordered lexicographically, the
/// observable index outer: joint index of (l, i) is l * r + i. All indices
/// in the API are zero-based; messages and files use one-based labels.
///
/// A Generator always satisfies the rate axioms (finite non-negative
/// off-diagonals, diagonals equal to minus the off-diagonal row sum).
/// Irreducibility and diagonal dominance of H_ll are guaranteed only for
/// objects built through from_matrix/from_blocks; see validate().
class Generator {
public:
  /// Recomputes the diagonal from the off-diagonals and runs validate();
  /// throws ValidationError listing every violation.
  static Generator from_matrix(Index r, Index d, const Matrix &h);
  /// blocks[l][n] is the r x r block H_ln.
  static Generator from_blocks(const std::vector<std::vector<Matrix>> &blocks);
  /// Only the rate axioms are enforced. Used for EM iterates and
  /// recovered generators that may have lost irreducibility.
  static Generator from_rates(Index r, Index d, const Matrix &h);

  Index r() const { return r_; }
  Index d() const { return d_; }
  Index states() const { return r_ * d_; }
  Index joint(Index l, Index i) const { return l * r_ + i; }

  const Matrix &matrix() const { return h_; }
  Eigen::Block<const Matrix> block(Index l, Index n) const {
    return h_.block(l * r_, n * r_, r_, r_);
  }
  /// Off-diagonal entries that are exactly zero.
  Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> zero_pattern() const;

private:
  Generator(Index r, Index d, Matrix h) : r_(r), d_(d), h_(std::move(h)) {}

  Index r_;
  Index d_;
  Matrix h_;
};

struct ValidationReport {
  std::vector<std::string> violations;
  bool reducible = false;

  bool ok() const { return violations.empty(); }
};

/// Checks a raw (rd) x (rd) matrix against the generator axioms, strict
/// diagonal dominance of every H_ll, and irreducibility. The diagonal is
/// taken as given, so inconsistent row sums are reported.
ValidationReport validate(const Matrix &h, Index r, Index d);
ValidationReport validate(const Generator &g);

struct InitialDistribution {
  Index x0 = 0;
  RowVector mu;

  static InitialDistribution uniform(Index x0, Index r);
  /// Throws DomainError unless mu is a probability vector of length r.
  void check(Index r, Index d) const;
};

/// f^{ln}(tau) = exp(H_ll tau) H_ln for l != n.
Matrix transition_density(const Generator &g, Index l, Index n, double tau);
/// exp(H_ll tau), the probability of staying in observable state l.
Matrix survival(const Generator &g, Index l, double tau);

/// Transition matrix of the chain sampled at observable jumps:
/// A_ln = -H_ll^{-1} H_ln for l != n, A_ll = 0.
Matrix embedded_chain(const Generator &g);

struct StationaryAnalysis {
  RowVector pi;     // pi H = 0
  RowVector nu;     // nu A = nu
  Matrix embedded;  // A
  Matrix d_h;       // diag(H_11, ..., H_dd)
};

StationaryAnalysis stationary(const Generator &g);

/// Stationary dwell time of X in one observable state: absorption time of
/// the chain with sub-generator H_ll started from alpha.
struct PhaseTypeDwell {
  RowVector alpha;
  Matrix sub_generator;
  Vector exit_vector;

  double density(double tau) const;
  double cdf(double tau) const;
  /// alpha (-H_ll)^{-1} beta; equals one for a proper distribution.
  double total_mass() const;
  /// k! alpha (-H_ll)^{-k} 1.
  double moment(int k) const;
  double mean() const { return moment(1); }
  /// [[H_ll, beta], [0, 0]] on r + 1 states, the last one absorbing.
  Matrix absorbing_generator() const;
};

PhaseTypeDwell dwell_distribution(const Generator &g, Index l);
PhaseTypeDwell dwell_distribution(const Generator &g,
                                  const StationaryAnalysis &stat, Index l);

/// The common Q = sum_n H_ln when it does not depend on l, i.e. when the
/// underlying process is itself Markov; nullopt otherwise.
std::optional<Matrix> underlying_is_markov(const Generator &g,
                                           double tol = kStructuralTol);

/// Markov-modulated Markov process: underlying generator q (r x r) and one
/// observable generator per regime (d x d each). Off-diagonal blocks are
/// diagonal with [H_ln]_ii = [G_i]_ln. Only the rate axioms of the inputs
/// are enforced; run validate() for irreducibility.
Generator make_mmmp(const Matrix &q, const std::vector<Matrix> &regimes);

/// Batch Markovian arrival process folded modulo d = batches.size() >= 2:
/// H_ln = D_{(n - l) mod d}, so a batch of size m moves l to l + m.
Generator make_bmap(const std::vector<Matrix> &batches);

struct StructureFlags {
  bool general = false;
  bool mmmp = false;
  bool bmap = false;
  bool map = false;
  bool mmpp = false;

  std::string to_string() const;
};

StructureFlags detect_structure(const Generator &g,
                                double tol = kStructuralTol);

/// Label "(l,i)" with one-based indices.
std::string joint_label(Index l, Index i);

} // namespace bmc

#endif // BMC_MODEL_HPP_
