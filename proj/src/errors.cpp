#include "bmc/errors.hpp"

#include <sstream>

namespace bmc {

namespace {

std::string join_violations(const std::vector<std::string> &violations) {
  std::ostringstream os;
  os << "validation failed";
  for (const auto &v : violations) {
    os << "; " << v;
  }
  return os.str();
}

} // namespace

ValidationError::ValidationError(std::vector<std::string> violations)
    : Error(join_violations(violations)), violations_(std::move(violations)) {}

ZeroLikelihood::ZeroLikelihood(std::size_t segment, const std::string &what)
    : Error(what), segment_(segment) {}

DegenerateState::DegenerateState(int observable, int underlying)
    : Error("degenerate state (" + std::to_string(observable + 1) + "," +
            std::to_string(underlying + 1) +
            "): expected jumps but zero expected dwell time"),
      observable_(observable), underlying_(underlying) {}

} // namespace bmc
