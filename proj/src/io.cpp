#include "bmc/io.hpp"

#include <charconv>
#include <fstream>
#include <limits>
#include <sstream>

namespace bmc {

namespace {

constexpr const char *kGeneratorFormat = "bmc-generator";
constexpr const char *kPathMagic = "bmc-path";
constexpr int kVersion = 1;

[[noreturn]] void field_error(const std::string &field, const std::string &what) {
  throw ParseError("field '" + field + "': " + what);
}

const Json &require(const Json &j, const char *key, const std::string &field) {
  if (!j.is_object()) {
    field_error(field, "expected an object");
  }
  const auto it = j.find(key);
  if (it == j.end()) {
    field_error(field, std::string("missing key '") + key + "'");
  }
  return *it;
}

Index require_count(const Json &j, const char *key, const std::string &field) {
  const Json &v = require(j, key, field);
  if (!v.is_number_integer() || v.get<long long>() < 1) {
    field_error(field + "." + key, "expected a positive integer");
  }
  return static_cast<Index>(v.get<long long>());
}

Matrix matrix_from_json(const Json &j, Index rows, Index cols,
                        const std::string &field) {
  if (!j.is_array() || Index(j.size()) != rows) {
    field_error(field, "expected " + std::to_string(rows) + " rows");
  }
  Matrix m(rows, cols);
  for (Index i = 0; i < rows; ++i) {
    const Json &row = j[std::size_t(i)];
    const std::string rf = field + "[" + std::to_string(i) + "]";
    if (!row.is_array() || Index(row.size()) != cols) {
      field_error(rf, "expected " + std::to_string(cols) + " entries");
    }
    for (Index k = 0; k < cols; ++k) {
      const Json &v = row[std::size_t(k)];
      if (v.is_boolean()) {
        m(i, k) = v.get<bool>() ? 1.0 : 0.0;
      } else if (v.is_number()) {
        m(i, k) = v.get<double>();
      } else {
        field_error(rf + "[" + std::to_string(k) + "]", "expected a number");
      }
    }
  }
  return m;
}

// blocks[l][n] of an (rd) x (rd) matrix.
Json blocks_to_json(const Matrix &full, Index r, Index d) {
  Json out = Json::array();
  for (Index l = 0; l < d; ++l) {
    Json row = Json::array();
    for (Index n = 0; n < d; ++n) {
      row.push_back(matrix_to_json(full.block(l * r, n * r, r, r)));
    }
    out.push_back(std::move(row));
  }
  return out;
}

Matrix blocks_from_json(const Json &j, Index r, Index d,
                        const std::string &field) {
  if (!j.is_array() || Index(j.size()) != d) {
    field_error(field, "expected " + std::to_string(d) + " block rows");
  }
  Matrix full(r * d, r * d);
  for (Index l = 0; l < d; ++l) {
    const Json &row = j[std::size_t(l)];
    const std::string rf = field + "[" + std::to_string(l) + "]";
    if (!row.is_array() || Index(row.size()) != d) {
      field_error(rf, "expected " + std::to_string(d) + " blocks");
    }
    for (Index n = 0; n < d; ++n) {
      full.block(l * r, n * r, r, r) = matrix_from_json(
          row[std::size_t(n)], r, r, rf + "[" + std::to_string(n) + "]");
    }
  }
  return full;
}

Json parse_json(std::string_view text) {
  try {
    return Json::parse(text.begin(), text.end());
  } catch (const nlohmann::json::parse_error &e) {
    // Translate the byte offset into a line and column.
    std::size_t line = 1;
    std::size_t col = 1;
    const std::size_t end = std::min<std::size_t>(e.byte, text.size());
    for (std::size_t k = 0; k + 1 < end; ++k) {
      if (text[k] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    std::ostringstream os;
    os << "line " << line << ", column " << col << ": " << e.what();
    throw ParseError(os.str());
  }
}

} // namespace

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

Json matrix_to_json(const Matrix &m) {
  Json rows = Json::array();
  for (Index i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (Index j = 0; j < m.cols(); ++j) {
      row.push_back(m(i, j));
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

Json generator_to_json(const Generator &g) {
  Json j;
  j["r"] = g.r();
  j["d"] = g.d();
  j["blocks"] = blocks_to_json(g.matrix(), g.r(), g.d());
  return j;
}

Generator generator_from_json(const Json &j, const std::string &field) {
  const Index r = require_count(j, "r", field);
  const Index d = require_count(j, "d", field);
  const Matrix h = blocks_from_json(require(j, "blocks", field), r, d,
                                    field + ".blocks");
  return Generator::from_matrix(r, d, h);
}

GeneratorFile load_generator_file(std::string_view text) {
  const Json j = parse_json(text);
  if (!j.is_object()) {
    field_error("$", "expected an object");
  }
  if (j.contains("format") && j["format"] != kGeneratorFormat) {
    field_error("$.format", std::string("expected \"") + kGeneratorFormat + "\"");
  }
  if (j.contains("version") && j["version"] != kVersion) {
    field_error("$.version", "unsupported version");
  }
  GeneratorFile file{generator_from_json(j, "$"), std::nullopt, {}};
  const Index r = file.generator.r();
  const Index d = file.generator.d();
  if (j.contains("mask")) {
    const Matrix m = blocks_from_json(j["mask"], r, d, "$.mask");
    Mask mask = (m.array() != 0.0).matrix();
    mask.diagonal().setConstant(false);
    file.mask = std::move(mask);
  }
  if (j.contains("metadata")) {
    const Json &meta = j["metadata"];
    if (!meta.is_object()) {
      field_error("$.metadata", "expected an object");
    }
    if (meta.contains("name") && meta["name"].is_string()) {
      file.metadata.name = meta["name"].get<std::string>();
    }
    if (meta.contains("provenance") && meta["provenance"].is_string()) {
      file.metadata.provenance = meta["provenance"].get<std::string>();
    }
    if (meta.contains("seed")) {
      if (!meta["seed"].is_number_unsigned()) {
        field_error("$.metadata.seed", "expected a non-negative integer");
      }
      file.metadata.seed = meta["seed"].get<std::uint64_t>();
    }
  }
  return file;
}

Generator load_generator(std::string_view text) {
  return load_generator_file(text).generator;
}

std::string save_generator(const Generator &g, const GeneratorMetadata &meta,
                           const std::optional<Mask> &mask) {
  Json j;
  j["format"] = kGeneratorFormat;
  j["version"] = kVersion;
  const Json body = generator_to_json(g);
  for (const auto &[key, value] : body.items()) {
    j[key] = value;
  }
  if (mask) {
    Matrix m = mask->cast<double>();
    m.diagonal().setZero();
    j["mask"] = blocks_to_json(m, g.r(), g.d());
  }
  Json md = Json::object();
  if (!meta.name.empty()) {
    md["name"] = meta.name;
  }
  if (!meta.provenance.empty()) {
    md["provenance"] = meta.provenance;
  }
  if (meta.seed) {
    md["seed"] = *meta.seed;
  }
  if (!md.empty()) {
    j["metadata"] = std::move(md);
  }
  return j.dump(2) + "\n";
}

namespace {

// Splits `text` into lines without copying.
class LineReader {
public:
  explicit LineReader(std::string_view text) : text_(text) {}

  bool next(std::string_view &line) {
    if (pos_ >= text_.size()) {
      return false;
    }
    const std::size_t end = text_.find('\n', pos_);
    const std::size_t stop = end == std::string_view::npos ? text_.size() : end;
    line = text_.substr(pos_, stop - pos_);
    if (!line.empty() && line.back() == '\r') {
      line.remove_suffix(1);
    }
    pos_ = stop + 1;
    ++number_;
    return true;
  }
  std::size_t number() const { return number_; }

private:
  std::string_view text_;
  std::size_t pos_ = 0;
  std::size_t number_ = 0;
};

[[noreturn]] void line_error(std::size_t line, const std::string &what) {
  throw ParseError("line " + std::to_string(line) + ": " + what);
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) {
    s.remove_prefix(1);
  }
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) {
    s.remove_suffix(1);
  }
  return s;
}

std::pair<std::string_view, std::string_view> split_first(std::string_view s) {
  s = trim(s);
  const std::size_t sp = s.find_first_of(" \t");
  if (sp == std::string_view::npos) {
    return {s, {}};
  }
  return {s.substr(0, sp), trim(s.substr(sp + 1))};
}

double parse_double(std::string_view s, std::size_t line) {
  double v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    line_error(line, "malformed number '" + std::string(s) + "'");
  }
  return v;
}

long long parse_int(std::string_view s, std::size_t line) {
  long long v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    line_error(line, "malformed integer '" + std::string(s) + "'");
  }
  return v;
}

} // namespace

PathFile load_path(std::string_view text) {
  LineReader reader(text);
  std::string_view line;
  auto next_content = [&]() {
    while (reader.next(line)) {
      const auto t = trim(line);
      if (!t.empty() && t.front() != '#') {
        line = t;
        return true;
      }
    }
    return false;
  };

  if (!next_content()) {
    throw ParseError("line 1: empty path file");
  }
  {
    const auto [magic, version] = split_first(line);
    if (magic != kPathMagic) {
      line_error(reader.number(), "expected 'bmc-path <version>'");
    }
    if (parse_int(version, reader.number()) != kVersion) {
      line_error(reader.number(), "unsupported version");
    }
  }

  PathFile file;
  bool have_x0 = false;
  bool have_t = false;
  long long count = -1;
  while (count < 0) {
    if (!next_content()) {
      throw ParseError("line " + std::to_string(reader.number()) +
                       ": missing 'N <count>' header");
    }
    const auto [key, value] = split_first(line);
    if (key == "x0") {
      const long long x = parse_int(value, reader.number());
      if (x < 1) {
        line_error(reader.number(), "x0 must be >= 1");
      }
      file.path.x0 = Index(x - 1);
      have_x0 = true;
    } else if (key == "T") {
      file.path.horizon = parse_double(value, reader.number());
      have_t = true;
    } else if (key == "meta") {
      const auto [mkey, mvalue] = split_first(value);
      if (mkey.empty()) {
        line_error(reader.number(), "meta needs a key");
      }
      file.metadata[std::string(mkey)] = std::string(mvalue);
    } else if (key == "N") {
      count = parse_int(value, reader.number());
      if (count < 0) {
        line_error(reader.number(), "N must be >= 0");
      }
    } else {
      line_error(reader.number(), "unknown header key '" + std::string(key) + "'");
    }
  }
  if (!have_x0 || !have_t) {
    throw ParseError("path header needs both x0 and T before N");
  }

  file.path.jumps.reserve(std::size_t(count));
  for (long long k = 0; k < count; ++k) {
    if (!next_content()) {
      throw ParseError("line " + std::to_string(reader.number()) + ": expected " +
                       std::to_string(count) + " records, found " +
                       std::to_string(k));
    }
    const auto [tstr, xstr] = split_first(line);
    if (xstr.empty()) {
      line_error(reader.number(), "expected '<time> <state>'");
    }
    const double t = parse_double(tstr, reader.number());
    const long long x = parse_int(xstr, reader.number());
    if (x < 1) {
      line_error(reader.number(), "state must be >= 1");
    }
    file.path.jumps.push_back({t, Index(x - 1)});
  }
  if (next_content()) {
    line_error(reader.number(), "unexpected content after the last record");
  }
  file.path.check(std::numeric_limits<Index>::max());
  return file;
}

std::string save_path(const PathFile &file) {
  std::string out;
  out.reserve(32 * file.path.size() + 128);
  out += kPathMagic;
  out += " " + std::to_string(kVersion) + "\n";
  out += "x0 " + std::to_string(file.path.x0 + 1) + "\n";
  out += "T " + format_double(file.path.horizon) + "\n";
  for (const auto &[key, value] : file.metadata) {
    out += "meta " + key + " " + value + "\n";
  }
  out += "N " + std::to_string(file.path.size()) + "\n";
  for (const auto &j : file.path.jumps) {
    out += format_double(j.t);
    out += ' ';
    out += std::to_string(j.x + 1);
    out += '\n';
  }
  return out;
}

std::string save_path(const ObservedPath &path) {
  return save_path(PathFile{path, {}});
}

Json initial_to_json(const InitialDistribution &init) {
  Json j;
  j["x0"] = init.x0 + 1;
  Json mu = Json::array();
  for (Index i = 0; i < init.mu.size(); ++i) {
    mu.push_back(init.mu(i));
  }
  j["mu"] = std::move(mu);
  return j;
}

InitialDistribution initial_from_json(const Json &j) {
  const Index x0 = require_count(j, "x0", "$");
  const Json &mu = require(j, "mu", "$");
  if (!mu.is_array() || mu.empty()) {
    field_error("$.mu", "expected a non-empty array");
  }
  InitialDistribution init{x0 - 1, RowVector(Index(mu.size()))};
  for (std::size_t i = 0; i < mu.size(); ++i) {
    if (!mu[i].is_number()) {
      field_error("$.mu[" + std::to_string(i) + "]", "expected a number");
    }
    init.mu(Index(i)) = mu[i].get<double>();
  }
  return init;
}

Json em_config_to_json(const EmConfig &cfg) {
  Json j;
  j["rel_tol"] = cfg.rel_tol;
  j["max_iters"] = cfg.max_iters;
  j["initial_from_alpha"] = cfg.initial_from_alpha;
  if (cfg.structural_mask) {
    j["mask"] = matrix_to_json(cfg.structural_mask->cast<double>());
  }
  return j;
}

EmConfig em_config_from_json(const Json &j, Index states) {
  EmConfig cfg;
  if (!j.is_object()) {
    field_error("$", "expected an object");
  }
  if (j.contains("rel_tol")) {
    if (!j["rel_tol"].is_number() || !(j["rel_tol"].get<double>() > 0)) {
      field_error("$.rel_tol", "expected a positive number");
    }
    cfg.rel_tol = j["rel_tol"].get<double>();
  }
  if (j.contains("max_iters")) {
    if (!j["max_iters"].is_number_integer() || j["max_iters"].get<int>() < 0) {
      field_error("$.max_iters", "expected a non-negative integer");
    }
    cfg.max_iters = j["max_iters"].get<int>();
  }
  if (j.contains("initial_from_alpha")) {
    cfg.initial_from_alpha = j["initial_from_alpha"].get<bool>();
  }
  if (j.contains("mask")) {
    const Matrix m = matrix_from_json(j["mask"], states, states, "$.mask");
    Mask mask = (m.array() != 0.0).matrix();
    mask.diagonal().setConstant(false);
    cfg.structural_mask = std::move(mask);
  }
  return cfg;
}

Json fit_result_to_json(const FitResult &fit) {
  Json j;
  j["estimate"] = generator_to_json(fit.estimate);
  j["iterations"] = fit.iterations;
  j["termination"] = to_string(fit.termination);
  j["loglik_trace"] = fit.loglik_trace;
  Json frozen = Json::array();
  for (Index a : fit.frozen_states) {
    frozen.push_back(joint_label(a / fit.estimate.r(), a % fit.estimate.r()));
  }
  j["frozen_states"] = std::move(frozen);
  if (!fit.message.empty()) {
    j["message"] = fit.message;
  }
  return j;
}

Json baum_result_to_json(const BaumResult &baum) {
  Json j;
  j["delta"] = baum.sampled.delta;
  j["samples"] = baum.sampled.samples.size();
  j["iterations"] = baum.discrete.iterations;
  j["converged"] = baum.discrete.converged;
  j["discrete_loglik_trace"] = baum.discrete.loglik_trace;
  j["transition_matrix"] = matrix_to_json(baum.discrete.estimate.r_hat);
  j["estimate"] = generator_to_json(baum.recovered.generator);
  Json report;
  report["method"] = to_string(baum.recovered.report.method);
  report["clamped_mass"] = baum.recovered.report.clamped_mass;
  report["irreducible"] = baum.recovered.report.irreducible;
  if (!baum.recovered.report.warning.empty()) {
    report["warning"] = baum.recovered.report.warning;
  }
  j["recovery"] = std::move(report);
  return j;
}

std::string read_text_file(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw IoError("cannot open '" + path + "' for reading");
  }
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_text_file(const std::string &path, std::string_view text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw IoError("cannot open '" + path + "' for writing");
  }
  out.write(text.data(), std::streamsize(text.size()));
  if (!out) {
    throw IoError("write to '" + path + "' failed");
  }
}

} // namespace bmc
