#pragma once

// The dsr-case text format: named sections with one key/value record per
// line, versioned, canonically ordered on emit so generated files diff
// cleanly. See docs/formats.md for the grammar.

#include "dsr/formulation.hpp"
#include "dsr/netmodel.hpp"

#include <string>
#include <vector>

namespace dsr {

struct ParseIssue {
    int line = 0; // 1-based; 0 for document-level issues
    int col = 0;
    std::string message;
};

struct CaseParseResult {
    bool ok = false;
    std::vector<ParseIssue> errors;
    CoupledNetwork net;
    Scenario scenario;
    FormulationConfig cfg;
};

// Parses a case document. Structural and invariant violations from the
// netmodel validator are appended to `errors` (without location).
CaseParseResult parse_case(const std::string& text);

// Canonical emission: fixed section order, id-sorted records, fixed key
// order, shortest round-trip numbers. parse(emit(x)) == x on canonical form.
std::string emit_case(const CoupledNetwork& net, const Scenario& sc,
                      const FormulationConfig& cfg);

// Shortest decimal that re-parses to exactly the same double.
std::string format_number(double v);

} // namespace dsr
