#include "pdtkit/json_io.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "pdtkit/errors.hpp"
#include "pdtkit/version.hpp"

namespace pdtkit {

namespace {

using nlohmann::json;

constexpr const char* kDomainSchema = "pdtkit/domain/1";
constexpr const char* kTableSchema = "pdtkit/pdt-table/1";
constexpr const char* kSelectionSchema = "pdtkit/selection/1";
constexpr const char* kLabelsSchema = "pdtkit/labels/1";

json parse_json(const std::string& text, const std::string& what) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(0, what + ": " + e.what());
  }
}

json load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_json(buf.str(), path);
}

void save_json(const json& j, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << j.dump(2) << '\n';
  if (!out) throw IoError("failed writing " + path);
}

// `required` distinguishes our own artifacts (tag mandatory) from
// hand-written inputs like domains, where a missing tag is accepted.
void check_schema(const json& j, const char* expected, bool required) {
  if (!j.contains("schema")) {
    if (required) throw ParseError(0, std::string("missing schema tag, expected ") + expected);
    return;
  }
  const std::string got = j.at("schema").get<std::string>();
  if (got != expected)
    throw ParseError(0, "schema mismatch: expected " + std::string(expected) + ", got " + got);
}

Vec read_vec(const json& j, const char* what) {
  if (!j.is_array()) throw ParseError(0, std::string(what) + " must be an array");
  Vec v;
  v.reserve(j.size());
  for (const auto& e : j) {
    if (!e.is_number()) throw ParseError(0, std::string(what) + " must hold numbers");
    v.push_back(e.get<double>());
  }
  return v;
}

Matrix read_matrix(const json& j, const char* what) {
  if (!j.is_array() || j.empty())
    throw ParseError(0, std::string(what) + " must be a non-empty array of rows");
  const std::size_t rows = j.size();
  const std::size_t cols = j.at(0).size();
  Matrix m(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    const Vec row = read_vec(j.at(r), what);
    if (row.size() != cols) throw ParseError(0, std::string(what) + " rows differ in length");
    for (std::size_t c = 0; c < cols; ++c) m(r, c) = row[c];
  }
  return m;
}

json matrix_json(const Matrix& m) {
  json rows = json::array();
  for (std::size_t r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (std::size_t c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

// Echoed configs are stored as real JSON when they parse, so artifacts
// stay greppable; otherwise the raw string is kept.
json config_json(const std::string& config) {
  if (config.empty()) return json::object();
  try {
    return json::parse(config);
  } catch (const json::parse_error&) {
    return json(config);
  }
}

std::string config_string(const json& j) {
  if (!j.contains("config")) return "";
  const json& c = j.at("config");
  if (c.is_string()) return c.get<std::string>();
  return c.dump();
}

std::vector<std::size_t> read_indices(const json& j, const char* what) {
  if (!j.is_array()) throw ParseError(0, std::string(what) + " must be an array");
  std::vector<std::size_t> v;
  for (const auto& e : j) v.push_back(e.get<std::size_t>());
  return v;
}

bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

PdtTableDoc load_table_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  std::vector<Vec> rows;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    Vec row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      try {
        row.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw ParseError(line_no, "not a number: '" + cell + "'");
      }
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ParseError(line_no, "empty table");
  const std::size_t k = rows.size();
  Matrix m(k, k);
  for (std::size_t r = 0; r < k; ++r) {
    if (rows[r].size() != k) throw ParseError(0, "table must be square");
    for (std::size_t c = 0; c < k; ++c) m(r, c) = rows[r][c];
  }
  PdtTableDoc doc;
  doc.table = PdtTable::from_entries(m);
  doc.lowers = m;
  for (std::size_t i = 0; i < k; ++i) doc.model_names.push_back("model" + std::to_string(i));
  return doc;
}

}  // namespace

const char* pdt_status_name(PdtStatus s) {
  switch (s) {
    case PdtStatus::Certified: return "certified";
    case PdtStatus::ClampedAtM: return "clamped-at-m";
    case PdtStatus::InfeasibleConstraint: return "infeasible-constraint";
    case PdtStatus::UnknownBudget: return "unknown-budget";
  }
  return "certified";
}

PdtStatus pdt_status_from_name(const std::string& name) {
  if (name == "certified") return PdtStatus::Certified;
  if (name == "clamped-at-m") return PdtStatus::ClampedAtM;
  if (name == "infeasible-constraint") return PdtStatus::InfeasibleConstraint;
  if (name == "unknown-budget") return PdtStatus::UnknownBudget;
  throw ParseError(0, "unknown pdt status: " + name);
}

const char* termination_cause_name(TerminationCause c) {
  switch (c) {
    case TerminationCause::ConvergedSimilar: return "converged-similar";
    case TerminationCause::IterationsExhausted: return "iterations-exhausted";
    case TerminationCause::MinSurvivors: return "min-survivors";
  }
  return "converged-similar";
}

TerminationCause termination_cause_from_name(const std::string& name) {
  if (name == "converged-similar") return TerminationCause::ConvergedSimilar;
  if (name == "iterations-exhausted") return TerminationCause::IterationsExhausted;
  if (name == "min-survivors") return TerminationCause::MinSurvivors;
  throw ParseError(0, "unknown termination cause: " + name);
}

InputDomain parse_domain(const std::string& text) {
  const json j = parse_json(text, "domain");
  check_schema(j, kDomainSchema, /*required=*/false);
  if (!j.contains("boxes")) throw ParseError(0, "domain needs a 'boxes' array");
  InputDomain domain;
  for (const auto& bj : j.at("boxes")) {
    Box b;
    if (!bj.contains("lower") || !bj.contains("upper"))
      throw ParseError(0, "each box needs 'lower' and 'upper'");
    b.lower = read_vec(bj.at("lower"), "box lower");
    b.upper = read_vec(bj.at("upper"), "box upper");
    domain.boxes.push_back(std::move(b));
  }
  try {
    domain.validate();
  } catch (const ShapeError& e) {
    throw ParseError(0, e.what());
  }
  return domain;
}

InputDomain load_domain(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_domain(buf.str());
}

void save_domain(const InputDomain& domain, const std::string& path) {
  domain.validate();
  json j;
  j["schema"] = kDomainSchema;
  json boxes = json::array();
  for (const Box& b : domain.boxes) boxes.push_back(json{{"lower", b.lower}, {"upper", b.upper}});
  j["boxes"] = std::move(boxes);
  save_json(j, path);
}

void save_pdt_table(const PdtTableDoc& doc, const std::string& path) {
  doc.table.validate();
  const std::size_t k = doc.table.k;
  if (doc.model_names.size() != k) throw ShapeError("table doc: one name per model required");
  if (doc.lowers.rows() != k || doc.lowers.cols() != k)
    throw ShapeError("table doc: lower bound matrix must be k x k");
  json j;
  j["schema"] = kTableSchema;
  j["tool_version"] = doc.tool_version.empty() ? kToolVersion : doc.tool_version;
  j["config"] = config_json(doc.config);
  j["models"] = doc.model_names;
  j["upper"] = matrix_json(doc.table.entries);
  j["lower"] = matrix_json(doc.lowers);
  json status = json::array();
  for (std::size_t r = 0; r < k; ++r) {
    json row = json::array();
    for (std::size_t c = 0; c < k; ++c)
      row.push_back(pdt_status_name(doc.table.status[r * k + c]));
    status.push_back(std::move(row));
  }
  j["status"] = std::move(status);
  save_json(j, path);
}

PdtTableDoc load_pdt_table(const std::string& path) {
  if (ends_with(path, ".csv")) return load_table_csv(path);
  const json j = load_json(path);
  check_schema(j, kTableSchema, /*required=*/true);
  PdtTableDoc doc;
  const Matrix upper = read_matrix(j.at("upper"), "upper");
  doc.table = PdtTable::from_entries(upper);
  const std::size_t k = doc.table.k;
  doc.lowers = j.contains("lower") ? read_matrix(j.at("lower"), "lower") : upper;
  if (doc.lowers.rows() != k || doc.lowers.cols() != k)
    throw ParseError(0, "lower bound matrix must match the table size");
  if (j.contains("models")) {
    doc.model_names = j.at("models").get<std::vector<std::string>>();
    if (doc.model_names.size() != k) throw ParseError(0, "one model name per row required");
  } else {
    for (std::size_t i = 0; i < k; ++i) doc.model_names.push_back("model" + std::to_string(i));
  }
  if (j.contains("status")) {
    const json& st = j.at("status");
    if (st.size() != k) throw ParseError(0, "status matrix must match the table size");
    for (std::size_t r = 0; r < k; ++r) {
      if (st.at(r).size() != k) throw ParseError(0, "status matrix must be square");
      for (std::size_t c = 0; c < k; ++c)
        doc.table.status[r * k + c] = pdt_status_from_name(st.at(r).at(c).get<std::string>());
    }
  }
  if (j.contains("tool_version")) doc.tool_version = j.at("tool_version").get<std::string>();
  doc.config = config_string(j);
  doc.table.validate();
  return doc;
}

void save_selection(const SelectionDoc& doc, const std::string& path) {
  json j;
  j["schema"] = kSelectionSchema;
  j["tool_version"] = doc.tool_version.empty() ? kToolVersion : doc.tool_version;
  j["config"] = config_json(doc.config);
  j["models"] = doc.model_names;
  j["cause"] = termination_cause_name(doc.report.cause);
  j["final_survivors"] = doc.report.final_survivors;
  json iters = json::array();
  for (const IterationRecord& rec : doc.report.iterations) {
    iters.push_back(json{{"survivors", rec.survivors},
                         {"ds", rec.ds},
                         {"removed", rec.removed},
                         {"threshold", rec.threshold}});
  }
  j["iterations"] = std::move(iters);
  save_json(j, path);
}

SelectionDoc load_selection(const std::string& path) {
  const json j = load_json(path);
  check_schema(j, kSelectionSchema, /*required=*/true);
  SelectionDoc doc;
  if (j.contains("models")) doc.model_names = j.at("models").get<std::vector<std::string>>();
  if (j.contains("tool_version")) doc.tool_version = j.at("tool_version").get<std::string>();
  doc.config = config_string(j);
  doc.report.cause = termination_cause_from_name(j.at("cause").get<std::string>());
  doc.report.final_survivors = read_indices(j.at("final_survivors"), "final_survivors");
  for (const auto& it : j.at("iterations")) {
    IterationRecord rec;
    rec.survivors = read_indices(it.at("survivors"), "survivors");
    rec.ds = read_vec(it.at("ds"), "ds");
    rec.removed = read_indices(it.at("removed"), "removed");
    rec.threshold = it.value("threshold", 0.0);
    doc.report.iterations.push_back(std::move(rec));
  }
  return doc;
}

std::vector<int> load_labels(const std::string& path, std::size_t expected) {
  const json j = load_json(path);
  check_schema(j, kLabelsSchema, /*required=*/false);
  if (!j.contains("labels")) throw ParseError(0, "labels file needs a 'labels' array");
  std::vector<int> labels;
  for (const auto& e : j.at("labels")) labels.push_back(e.get<int>() != 0 ? 1 : 0);
  if (expected != 0 && labels.size() != expected)
    throw ParseError(0, "expected " + std::to_string(expected) + " labels, got " +
                            std::to_string(labels.size()));
  return labels;
}

void save_labels(const std::vector<int>& labels, const std::string& path) {
  json j;
  j["schema"] = kLabelsSchema;
  j["labels"] = labels;
  save_json(j, path);
}

}  // namespace pdtkit
