#pragma once

#include <string>
#include <vector>

#include "pdtkit/box.hpp"
#include "pdtkit/select.hpp"

namespace pdtkit {

// All artifacts are JSON with a "schema" tag; readers reject other
// schemas with a ParseError naming both sides. Writers stamp the tool
// version and echo the producing configuration so results stay
// reproducible from the artifact alone.

InputDomain parse_domain(const std::string& text);
InputDomain load_domain(const std::string& path);
void save_domain(const InputDomain& domain, const std::string& path);

struct PdtTableDoc {
  std::vector<std::string> model_names;
  PdtTable table;  // entries are the certified upper bounds
  Matrix lowers;   // certified lower bounds, zero diagonal
  std::string tool_version;
  std::string config;  // JSON-encoded run configuration echo
};

void save_pdt_table(const PdtTableDoc& doc, const std::string& path);
// Accepts the JSON artifact or a plain CSV square matrix (statuses then
// default to certified and lowers copy the entries).
PdtTableDoc load_pdt_table(const std::string& path);

struct SelectionDoc {
  SelectionReport report;
  std::vector<std::string> model_names;
  std::string tool_version;
  std::string config;
};

void save_selection(const SelectionDoc& doc, const std::string& path);
SelectionDoc load_selection(const std::string& path);

// One 0/1 flag per model, aligned with the table's model order.
std::vector<int> load_labels(const std::string& path, std::size_t expected);
void save_labels(const std::vector<int>& labels, const std::string& path);

const char* pdt_status_name(PdtStatus s);
PdtStatus pdt_status_from_name(const std::string& name);
const char* termination_cause_name(TerminationCause c);
TerminationCause termination_cause_from_name(const std::string& name);

}  // namespace pdtkit
