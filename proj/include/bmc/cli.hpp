#ifndef BMC_CLI_HPP_
#define BMC_CLI_HPP_

// Command-line front end. Subcommands:
//   simulate    draw a path from a generator file
//   fit-em      continuous-time EM from an initial generator
//   fit-baum    time-sampled Baum-Welch baseline over one or more deltas
//   analyze     stationary quantities, dwell laws and structure of a model
//   loglik      log-likelihood of a path under a model
//   experiment  simulate, then run both estimators and compare to the truth
// Tables go to `out`; structured reports go to the --out file.

#include <iosfwd>
#include <string>

#include "bmc/io.hpp"

namespace bmc {

inline constexpr const char *kToolVersion = "0.1.0";

enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 1,
  kExitParse = 2,
  kExitValidation = 3,
  kExitNumerical = 4,
  kExitDegenerate = 5,
  kExitIo = 6,
};

int run_cli(int argc, const char *const *argv, std::ostream &out,
            std::ostream &err);

/// "H12(1,2)" for joint entry (a, b); indices shown one-based.
std::string entry_label(Index r, Index d, Index a, Index b);

/// Largest absolute entrywise difference.
double max_abs_distance(const Matrix &x, const Matrix &y);

/// Per-entry comparison of an estimate against a reference generator.
Json entry_errors(const Generator &estimate, const Generator &reference);

} // namespace bmc

#endif // BMC_CLI_HPP_
