#ifndef BMC_IO_HPP_
#define BMC_IO_HPP_

// Text formats. Generators, configurations and reports are JSON; observed
// paths use a line-oriented record format so long paths stream in O(N).
// Both grammars are specified in docs/file_formats.md. Observable and
// underlying states are one-based in every file.

#include <map>
#include <optional>
#include <string>
#include <string_view>

#include <json.hpp>

#include "bmc/baseline.hpp"
#include "bmc/em.hpp"

namespace bmc {

using Json = nlohmann::ordered_json;

struct GeneratorMetadata {
  std::string name;
  std::string provenance;
  std::optional<std::uint64_t> seed;
};

struct GeneratorFile {
  Generator generator;
  std::optional<Mask> mask;
  GeneratorMetadata metadata;
};

/// Parses and validates a generator document; diagonals in the file are
/// ignored and recomputed. Throws ParseError (with line and column, or the
/// offending field) or ValidationError.
GeneratorFile load_generator_file(std::string_view text);
Generator load_generator(std::string_view text);
std::string save_generator(const Generator &g,
                           const GeneratorMetadata &meta = {},
                           const std::optional<Mask> &mask = std::nullopt);

Json generator_to_json(const Generator &g);
/// `field` names the JSON location in error messages.
Generator generator_from_json(const Json &j, const std::string &field = "$");

struct PathFile {
  ObservedPath path;
  std::map<std::string, std::string> metadata;
};

/// Throws ParseError for malformed text and ValidationError (with the
/// record index) for paths that violate ordering invariants.
PathFile load_path(std::string_view text);
std::string save_path(const PathFile &file);
std::string save_path(const ObservedPath &path);

/// Shortest decimal string that reads back to the same double.
std::string format_double(double v);

/// Row-major nested arrays.
Json matrix_to_json(const Matrix &m);

Json initial_to_json(const InitialDistribution &init);
InitialDistribution initial_from_json(const Json &j);

Json em_config_to_json(const EmConfig &cfg);
EmConfig em_config_from_json(const Json &j, Index states);

Json fit_result_to_json(const FitResult &fit);
Json baum_result_to_json(const BaumResult &baum);

std::string read_text_file(const std::string &path);
void write_text_file(const std::string &path, std::string_view text);

} // namespace bmc

#endif // BMC_IO_HPP_
